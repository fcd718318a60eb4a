"""Five-fold cross-validation training, metrics, and artifact export.

Training is deterministic for a given (seed, config, data): fold assignment,
parameter init, and per-epoch shuffles all derive from one seed. Folds are
independent, so they can run on parallel workers; the BAOMI_THREADS
environment variable caps the worker count (default 1, serial).
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from baomi import tensor as T
from baomi.data import FeatureRecord, make_folds
from baomi.fusion import (
    BanditState,
    BaselineCrossAttentionModel,
    FusionConfig,
    FusionModel,
    bandit_step,
    head_weights,
)
from baomi.models import CnnModel, FcnModel
from baomi.tensor import Adam, Tensor

MODEL_KINDS = ("fcn", "cnn", "cross_attention", "baomi")
FUSION_KINDS = ("cross_attention", "baomi")


@dataclass
class TrainConfig:
    model: str = "cnn"
    batch_size: int = 32
    epochs: int = 50
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    n_folds: int = 5
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model!r}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if isinstance(self.fusion, dict):
            self.fusion = FusionConfig(**self.fusion)

    @property
    def is_fusion(self) -> bool:
        return self.model in FUSION_KINDS

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class FoldResult:
    fold: int
    state_dict: dict[str, np.ndarray]
    bandit_state: BanditState | None
    epoch_losses: list[float]
    weight_rows: list[tuple[int, str, int, float]]  # epoch, direction, head, weight
    fragment: dict


def align_records(records_a: list[FeatureRecord],
                  records_b: list[FeatureRecord]
                  ) -> tuple[list[FeatureRecord], list[FeatureRecord]]:
    """Sort both feature sets by recording id and demand a 1:1 match."""
    a = sorted(records_a, key=lambda r: r.recording_id)
    b = sorted(records_b, key=lambda r: r.recording_id)
    ids_a = [r.recording_id for r in a]
    ids_b = [r.recording_id for r in b]
    if ids_a != ids_b:
        offender = next(
            x for x, y in zip(ids_a + ids_b, ids_b + ids_a) if x != y
        )
        raise ValueError(
            f"feature files do not cover the same recordings "
            f"(first mismatch near id {offender!r})"
        )
    for ra, rb in zip(a, b):
        if ra.label != rb.label:
            raise ValueError(f"label mismatch for recording {ra.recording_id!r}")
    return a, b


def _matrix(records: list[FeatureRecord]) -> np.ndarray:
    return np.stack([r.values for r in records])


def build_model(config: TrainConfig, dim_a: int, dim_b: int | None,
                rng: np.random.Generator):
    if config.model == "fcn":
        return FcnModel(dim_a, rng)
    if config.model == "cnn":
        return CnnModel(dim_a, rng)
    if dim_b is None:
        raise ValueError(f"model {config.model!r} needs two feature sources")
    cls = FusionModel if config.model == "baomi" else BaselineCrossAttentionModel
    return cls(dim_a, dim_b, config.fusion, rng)


def _forward(model, config: TrainConfig, xa: Tensor, xb: Tensor | None,
             state: BanditState | None) -> Tensor:
    if config.is_fusion:
        return model.forward(xa, xb, state if config.model == "baomi" else None)
    return model.forward(xa)


# -- metrics -------------------------------------------------------------------

def metrics_from_confusion(confusion) -> dict[str, float]:
    """Accuracy, macro F1, and support-weighted F1 in percent.

    confusion[i][j] counts true class i predicted as class j. Precision and
    recall with an empty denominator count as 0.
    """
    cm = np.asarray(confusion, dtype=np.float64)
    total = cm.sum()
    if total == 0:
        raise ValueError("metrics: empty confusion matrix")
    support = cm.sum(axis=1)
    f1 = np.zeros(cm.shape[0])
    for c in range(cm.shape[0]):
        tp = cm[c, c]
        col = cm[:, c].sum()
        prec = tp / col if col > 0 else 0.0
        rec = tp / support[c] if support[c] > 0 else 0.0
        f1[c] = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    return {
        "acc": 100.0 * np.trace(cm) / total,
        "ma_f1": 100.0 * f1.mean(),
        "wa_f1": 100.0 * float(f1 @ support) / total,
    }


def predict(model, config: TrainConfig, xa: np.ndarray,
            xb: np.ndarray | None, state: BanditState | None,
            batch_size: int = 256) -> np.ndarray:
    """Argmax class per example; ties resolve to class 0 (absent)."""
    preds = []
    with T.no_grad():
        for lo in range(0, xa.shape[0], batch_size):
            hi = lo + batch_size
            logits = _forward(
                model, config, Tensor(xa[lo:hi]),
                Tensor(xb[lo:hi]) if xb is not None else None, state,
            )
            preds.append(np.argmax(logits.data, axis=1))
    return np.concatenate(preds)


def evaluate(model, config: TrainConfig, xa: np.ndarray, xb: np.ndarray | None,
             labels: np.ndarray, state: BanditState | None = None) -> dict:
    """Confusion matrix plus Accuracy / MA-F1 / WA-F1 on a test set."""
    if xa.shape[0] == 0:
        raise ValueError("evaluate: empty test set")
    preds = predict(model, config, xa, xb, state)
    confusion = np.zeros((2, 2), dtype=int)
    for t, p in zip(labels, preds):
        confusion[t, p] += 1
    fragment = metrics_from_confusion(confusion)
    fragment["confusion"] = confusion.tolist()
    return fragment


# -- training -------------------------------------------------------------------

def train_fold(config: TrainConfig, fold: int,
               xa_train: np.ndarray, y_train: np.ndarray,
               xb_train: np.ndarray | None = None) -> FoldResult:
    """Train one fold's model from a fold-derived seed.

    Returns the trained parameters, the bandit state (baomi only), per-epoch
    mean training losses, and per-epoch head-weight trajectory rows.
    """
    n = xa_train.shape[0]
    if n == 0:
        raise ValueError(f"fold {fold}: empty training set")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, fold]))
    dim_b = xb_train.shape[1] if xb_train is not None else None
    model = build_model(config, xa_train.shape[1], dim_b, rng)
    opt = Adam(model.params(), lr=config.lr, beta1=config.beta1,
               beta2=config.beta2, eps=config.eps_opt)
    state = BanditState.fresh(config.fusion.n_heads) if config.model == "baomi" else None
    every = config.fusion.bandit_update_every
    epoch_losses: list[float] = []
    weight_rows: list[tuple[int, str, int, float]] = []
    batches_seen = 0
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        losses = []
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            xa = Tensor(xa_train[idx])
            xb = Tensor(xb_train[idx]) if xb_train is not None else None
            loss = T.cross_entropy(
                _forward(model, config, xa, xb, state), y_train[idx]
            )
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
            batches_seen += 1
            if state is not None and every > 0 and batches_seen % every == 0:
                bandit_step(model, state, xa, xb, y_train[idx])
        epoch_losses.append(float(np.mean(losses)))
        if state is not None:
            for d_idx, direction in enumerate(("a_to_b", "b_to_a")):
                for h, w in enumerate(head_weights(state, d_idx)):
                    weight_rows.append((epoch, direction, h, float(w)))
    return FoldResult(
        fold=fold, state_dict=model.state_dict(), bandit_state=state,
        epoch_losses=epoch_losses, weight_rows=weight_rows, fragment={},
    )


def _run_one_fold(args) -> FoldResult:
    (config, fold, xa, y, xb, test_xa, test_y, test_xb) = args
    result = train_fold(config, fold, xa, y, xb)
    rng = np.random.default_rng(0)  # unused by load path
    model = build_model(config, xa.shape[1], xb.shape[1] if xb is not None else None, rng)
    model.load_state_dict(result.state_dict)
    result.fragment = evaluate(
        model, config, test_xa, test_xb, test_y, result.bandit_state
    )
    result.fragment["fold"] = fold
    return result


def worker_count(n_folds: int) -> int:
    """Workers for fold parallelism; BAOMI_THREADS caps it, default 1."""
    raw = os.environ.get("BAOMI_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"BAOMI_THREADS must be an integer, got {raw!r}") from exc
    return max(1, min(n, n_folds))


def run_cv(config: TrainConfig, records_a: list[FeatureRecord],
           records_b: list[FeatureRecord] | None = None
           ) -> tuple[dict, list[FoldResult]]:
    """Train and test across stratified folds; report per-fold and mean metrics.

    Test ids are disjoint from train ids within every fold by construction.
    """
    if records_b is not None:
        records_a, records_b = align_records(records_a, records_b)
    else:
        records_a = sorted(records_a, key=lambda r: r.recording_id)
    assignment = make_folds(records_a, config.seed, config.n_folds)
    xa_all = _matrix(records_a)
    xb_all = _matrix(records_b) if records_b is not None else None
    y_all = np.array([r.label for r in records_a])
    fold_of = np.array([assignment.fold_of[r.recording_id] for r in records_a])

    jobs = []
    for fold in range(config.n_folds):
        train_idx = np.flatnonzero(fold_of != fold)
        test_idx = np.flatnonzero(fold_of == fold)
        jobs.append((
            config, fold,
            xa_all[train_idx], y_all[train_idx],
            xb_all[train_idx] if xb_all is not None else None,
            xa_all[test_idx], y_all[test_idx],
            xb_all[test_idx] if xb_all is not None else None,
        ))

    workers = worker_count(config.n_folds)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_fold, jobs))
    else:
        results = [_run_one_fold(job) for job in jobs]
    results.sort(key=lambda r: r.fold)

    folds = [r.fragment for r in results]
    mean = {
        key: float(np.mean([f[key] for f in folds]))
        for key in ("acc", "ma_f1", "wa_f1")
    }
    report = {
        "config": config.to_json(),
        "seed": config.seed,
        "folds": folds,
        "mean": mean,
    }
    return report, results


# -- artifacts --------------------------------------------------------------------

def save_checkpoint(path, model_kind: str, dims: dict,
                    state_dict: dict[str, np.ndarray],
                    bandit_state: BanditState | None = None,
                    train_config: TrainConfig | None = None) -> None:
    """Flat float32 parameter dump plus a JSON sidecar of shapes and offsets."""
    names = sorted(state_dict)
    sidecar: dict = {"model": model_kind, "dims": dims, "params": {}}
    offset = 0
    chunks = []
    for name in names:
        arr = np.asarray(state_dict[name], dtype="<f4")
        sidecar["params"][name] = {"shape": list(arr.shape), "offset": offset}
        offset += arr.size
        chunks.append(arr.reshape(-1))
    if bandit_state is not None:
        sidecar["bandit_state"] = bandit_state.to_json()
        if train_config is not None:
            sidecar["bandit_state"]["gamma"] = train_config.fusion.gamma
            sidecar["bandit_state"]["eps"] = train_config.fusion.eps
    if train_config is not None:
        sidecar["train_config"] = train_config.to_json()
    with open(path, "wb") as f:
        f.write(np.concatenate(chunks).astype("<f4").tobytes())
    with open(str(path) + ".json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of save_checkpoint: (sidecar metadata, state dict)."""
    with open(str(path) + ".json", encoding="utf-8") as f:
        sidecar = json.load(f)
    flat = np.frombuffer(open(path, "rb").read(), dtype="<f4")
    state = {}
    for name, meta in sidecar["params"].items():
        shape = tuple(meta["shape"])
        size = int(np.prod(shape)) if shape else 1
        state[name] = (
            flat[meta["offset"] : meta["offset"] + size]
            .astype(np.float64)
            .reshape(shape)
        )
    return sidecar, state


def write_head_weight_csv(path, weight_rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "direction", "head", "weight"])
        writer.writerows(weight_rows)


def export_embeddings(model, config: TrainConfig,
                      records_a: list[FeatureRecord],
                      records_b: list[FeatureRecord] | None,
                      path, state: BanditState | None = None) -> None:
    """CSV of penultimate-layer activations: recording_id,label,e0..e{n-1}."""
    xa = _matrix(records_a)
    xb = _matrix(records_b) if records_b is not None else None
    with T.no_grad():
        if config.is_fusion:
            emb = model.embed(Tensor(xa), Tensor(xb),
                              state if config.model == "baomi" else None)
        else:
            emb = model.embed(Tensor(xa))
    emb = emb.data
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["recording_id", "label"] + [f"e{i}" for i in range(emb.shape[1])]
        )
        for r, row in zip(records_a, emb):
            writer.writerow([r.recording_id, r.label] + [f"{v:.8g}" for v in row])
