"""Two-branch fusion with bandit-weighted multi-head cross-attention.

Each branch runs the shared conv stack and keeps its output as a sequence
of 128-wide time tokens. Per head, one branch's tokens are projected to
queries and attend over the other branch's keys/values, in both directions.

Head importance is not learned by gradient descent. A small bandit agent
per direction tracks a Q-value per head: after a training batch, the loss
is re-evaluated with each head's weight forced to zero (remaining weights
renormalized), the measured loss increase becomes that head's reward, and
Q follows the recurrence Q <- gamma * Q + (1 - gamma) * R. Combination
weights are the softmax of the Q-values, so heads that keep proving useful
crowd out noisy ones. None of this state carries gradients.

The plain cross-attention baseline is the same network with heads averaged
uniformly instead of bandit-weighted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from baomi import tensor as T
from baomi.models import ConvStack, ParamModule, glorot, zeros_param
from baomi.tensor import Tensor

DIRECTIONS = ("a_to_b", "b_to_a")


@dataclass
class FusionConfig:
    n_heads: int = 4
    head_dim: int = 32
    token_channels: int = 128  # fixed by the conv stack's last layer
    gamma: float = 0.9
    eps: float = 1e-8
    bandit_update_every: int = 1
    shared_head_weights: bool = False

    def __post_init__(self):
        if self.n_heads < 1 or self.head_dim < 1:
            raise ValueError("n_heads and head_dim must be >= 1")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class BanditState:
    """Per-direction Q-values and bookkeeping for the head-weighting agent."""

    q_values: np.ndarray  # shape [2, n_heads], directions a_to_b / b_to_a
    update_count: int = 0
    last_loss: float | None = None

    @classmethod
    def fresh(cls, n_heads: int) -> "BanditState":
        return cls(q_values=np.zeros((2, n_heads)))

    def to_json(self) -> dict:
        return {
            "q_values": self.q_values.tolist(),
            "update_count": self.update_count,
            "last_loss": self.last_loss,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BanditState":
        return cls(
            q_values=np.asarray(obj["q_values"], dtype=np.float64),
            update_count=int(obj["update_count"]),
            last_loss=obj.get("last_loss"),
        )


def head_weights(state: BanditState, direction: int) -> np.ndarray:
    """Softmax of one direction's Q-values; sums to 1, shift-invariant."""
    q = state.q_values[direction]
    if not np.isfinite(q).all():
        raise ValueError("head_weights: non-finite Q-values")
    e = np.exp(q - q.max())
    return e / e.sum()


def compute_rewards(losses_without_head: np.ndarray, loss_full: float,
                    eps: float) -> np.ndarray:
    """Per-head reward: its share of the total loss increase under masking.

    delta_h = max(0, loss_without_h - loss_full); rewards are delta_h
    normalized by (sum of deltas + eps), so each lies in [0, 1) and they
    sum to at most 1. A head whose removal lowers the loss gets 0.
    """
    losses_without_head = np.asarray(losses_without_head, dtype=np.float64)
    if not (np.isfinite(losses_without_head).all() and np.isfinite(loss_full)):
        raise ValueError("compute_rewards: non-finite loss")
    if (losses_without_head < 0).any() or loss_full < 0:
        raise ValueError("compute_rewards: losses must be >= 0")
    delta = np.maximum(losses_without_head - loss_full, 0.0)
    return delta / (delta.sum() + eps)


def update_q(state: BanditState, rewards: np.ndarray, gamma: float,
             shared: bool = False) -> BanditState:
    """Recurrence Q <- gamma * Q + (1 - gamma) * R, per direction and head.

    With shared=True the two directions are averaged into one shared row.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.shape != state.q_values.shape:
        raise ValueError(
            f"update_q: rewards shape {rewards.shape} != {state.q_values.shape}"
        )
    if shared:
        rewards = np.broadcast_to(rewards.mean(axis=0), rewards.shape)
    state.q_values = gamma * state.q_values + (1.0 - gamma) * rewards
    state.update_count += 1
    return state


def cross_attention_head(q_tokens: Tensor, k_tokens: Tensor,
                         v_tokens: Tensor) -> Tensor:
    """softmax(Q K^T / sqrt(d_h)) V over token sequences.

    q_tokens: [batch, L_q, d_h]; k_tokens, v_tokens: [batch, L_k, d_h].
    Every attention row is a distribution over the L_k keys.
    """
    d_h = q_tokens.shape[-1]
    if k_tokens.shape[-1] != d_h or v_tokens.shape != k_tokens.shape:
        raise T.ShapeError(
            f"cross_attention_head: q {q_tokens.shape}, k {k_tokens.shape}, "
            f"v {v_tokens.shape} are inconsistent"
        )
    scores = T.scale(T.matmul(q_tokens, T.transpose_last2(k_tokens)), 1.0 / np.sqrt(d_h))
    return T.matmul(T.softmax(scores), v_tokens)


@dataclass
class FusedRepresentation:
    """Concatenated direction-pooled attention output plus the 128-d hidden."""

    z_fused: Tensor  # [batch, 2 * head_dim]
    penultimate: Tensor  # [batch, 128]


class FusionModel(ParamModule):
    """Conv branches, bidirectional multi-head cross-attention, classifier.

    Projections are separate per direction and head: direction 0 projects
    branch-A tokens to queries and branch-B tokens to keys/values, direction
    1 the reverse.
    """

    HIDDEN = 128

    def __init__(self, dim_a: int, dim_b: int, config: FusionConfig,
                 rng: np.random.Generator):
        self.config = config
        self.kind = "baomi"
        self.branch_a = ConvStack(dim_a, rng, prefix="branch_a.")
        self.branch_b = ConvStack(dim_b, rng, prefix="branch_b.")
        c = config.token_channels
        if self.branch_a.out_channels != c:
            raise ValueError("token_channels must match the conv stack output")
        self.proj: dict[str, list[dict[str, Tensor]]] = {}
        for direction in DIRECTIONS:
            heads = []
            for _ in range(config.n_heads):
                heads.append(
                    {
                        name: glorot(rng, c, config.head_dim, (c, config.head_dim))
                        for name in ("q", "k", "v")
                    }
                )
            self.proj[direction] = heads
        fused_dim = 2 * config.head_dim
        self.dense_w = glorot(rng, fused_dim, self.HIDDEN, (fused_dim, self.HIDDEN))
        self.dense_b = zeros_param(self.HIDDEN)
        self.out_w = glorot(rng, self.HIDDEN, 2, (self.HIDDEN, 2))
        self.out_b = zeros_param(2)

    def named_params(self):
        items = self.branch_a.named_params() + self.branch_b.named_params()
        for direction in DIRECTIONS:
            for h, mats in enumerate(self.proj[direction]):
                for name in ("q", "k", "v"):
                    items.append((f"attn.{direction}.h{h}.{name}", mats[name]))
        items += [
            ("dense.w", self.dense_w),
            ("dense.b", self.dense_b),
            ("out.w", self.out_w),
            ("out.b", self.out_b),
        ]
        return items

    # -- forward pieces ----------------------------------------------------

    def branch_tokens(self, x: Tensor, branch: str) -> Tensor:
        """[batch, d] -> [batch, L, 128] time tokens from one conv branch."""
        stack = self.branch_a if branch == "a" else self.branch_b
        return T.transpose_last2(stack.forward(x))

    def head_outputs(self, tokens_a: Tensor, tokens_b: Tensor
                     ) -> dict[str, list[Tensor]]:
        """All per-head cross-attention outputs, keyed by direction."""
        out: dict[str, list[Tensor]] = {}
        for direction, (qt, kvt) in (
            ("a_to_b", (tokens_a, tokens_b)),
            ("b_to_a", (tokens_b, tokens_a)),
        ):
            heads = []
            for mats in self.proj[direction]:
                q = T.matmul(qt, mats["q"])
                k = T.matmul(kvt, mats["k"])
                v = T.matmul(kvt, mats["v"])
                heads.append(cross_attention_head(q, k, v))
            out[direction] = heads
        return out

    def _classify(self, pooled_a: Tensor, pooled_b: Tensor
                  ) -> tuple[Tensor, FusedRepresentation]:
        z = T.concat_last([pooled_a, pooled_b])
        hidden = T.relu(T.matmul(z, self.dense_w) + self.dense_b)
        logits = T.matmul(hidden, self.out_w) + self.out_b
        return logits, FusedRepresentation(z_fused=z, penultimate=hidden)

    def combine(self, heads: dict[str, list[Tensor]],
                weights: dict[str, np.ndarray]
                ) -> tuple[Tensor, FusedRepresentation]:
        """Weighted head sum per direction, token mean-pool, concat, classify."""
        pooled = {}
        for direction in DIRECTIONS:
            ws = weights[direction]
            acc = None
            for w, h in zip(ws, heads[direction]):
                term = T.scale(h, float(w))
                acc = term if acc is None else acc + term
            pooled[direction] = T.mean_axis(acc, axis=1)
        return self._classify(pooled["a_to_b"], pooled["b_to_a"])

    def _combine_uniform(self, heads: dict[str, list[Tensor]]
                         ) -> tuple[Tensor, FusedRepresentation]:
        """Baseline path: plain average over heads, no bandit weights."""
        pooled = {}
        for direction in DIRECTIONS:
            acc = heads[direction][0]
            for h in heads[direction][1:]:
                acc = acc + h
            pooled[direction] = T.mean_axis(
                T.scale(acc, 1.0 / len(heads[direction])), axis=1
            )
        return self._classify(pooled["a_to_b"], pooled["b_to_a"])

    # -- public forwards -----------------------------------------------------

    def forward_fused(self, xa: Tensor, xb: Tensor,
                      state: BanditState | None
                      ) -> tuple[Tensor, FusedRepresentation]:
        """Full fusion forward. state=None means the uniform baseline."""
        heads = self.head_outputs(
            self.branch_tokens(xa, "a"), self.branch_tokens(xb, "b")
        )
        if state is None:
            return self._combine_uniform(heads)
        weights = {
            d: head_weights(state, i) for i, d in enumerate(DIRECTIONS)
        }
        return self.combine(heads, weights)

    def forward(self, xa: Tensor, xb: Tensor,
                state: BanditState | None = None) -> Tensor:
        return self.forward_fused(xa, xb, state)[0]

    def embed(self, xa: Tensor, xb: Tensor,
              state: BanditState | None = None) -> Tensor:
        return self.forward_fused(xa, xb, state)[1].penultimate


class BaselineCrossAttentionModel(FusionModel):
    """Table-style baseline: identical network, heads averaged with 1/H."""

    def __init__(self, dim_a, dim_b, config, rng):
        super().__init__(dim_a, dim_b, config, rng)
        self.kind = "cross_attention"

    def forward_fused(self, xa, xb, state=None):
        return super().forward_fused(xa, xb, None)


def masked_weights(base: np.ndarray, masked_head: int) -> np.ndarray:
    """Zero one head's weight and renormalize the rest.

    If nothing remains (single head), all weights become zero and that
    direction contributes a zero vector.
    """
    w = base.copy()
    w[masked_head] = 0.0
    total = w.sum()
    return w / total if total > 0 else w


def bandit_step(model: FusionModel, state: BanditState, xa: Tensor, xb: Tensor,
                labels: np.ndarray) -> np.ndarray:
    """One counterfactual-masking bandit update on a batch.

    Computes the full-weights loss, then for every direction and head the
    loss with that head masked out, converts the clamped loss increases to
    rewards, and applies the Q recurrence. Runs entirely without gradients;
    returns the [2, n_heads] reward matrix.
    """
    cfg = model.config
    with T.no_grad():
        heads = model.head_outputs(
            model.branch_tokens(xa, "a"), model.branch_tokens(xb, "b")
        )
        weights = {
            d: head_weights(state, i) for i, d in enumerate(DIRECTIONS)
        }
        logits, _ = model.combine(heads, weights)
        loss_full = T.cross_entropy(logits, labels).item()
        rewards = np.zeros((2, cfg.n_heads))
        for d_idx, direction in enumerate(DIRECTIONS):
            losses_without = np.zeros(cfg.n_heads)
            for h in range(cfg.n_heads):
                trial = dict(weights)
                trial[direction] = masked_weights(weights[direction], h)
                trial_logits, _ = model.combine(heads, trial)
                losses_without[h] = T.cross_entropy(trial_logits, labels).item()
            rewards[d_idx] = compute_rewards(losses_without, loss_full, cfg.eps)
    update_q(state, rewards, cfg.gamma, shared=cfg.shared_head_weights)
    state.last_loss = loss_full
    return rewards
