"""Shared test utilities: finite-difference gradient checking and loop oracles.

The oracles here are deliberately written as plain triple loops over numpy
scalars so they stay independent of the vectorized implementations they
check.
"""

from __future__ import annotations

import numpy as np

from baomi.tensor import Tensor


def numeric_grad(f, tensors, index, step=1e-5, coords=None):
    """Central finite differences of scalar f(*tensors) w.r.t. tensors[index].

    coords: optional list of flat coordinates to probe; defaults to all.
    Returns an array shaped like the parameter with NaN at unprobed coords.
    """
    target = tensors[index]
    flat = target.data.reshape(-1)
    if coords is None:
        coords = range(flat.size)
    g = np.full(flat.size, np.nan)
    for c in coords:
        orig = flat[c]
        flat[c] = orig + step
        up = f(*tensors).item()
        flat[c] = orig - step
        down = f(*tensors).item()
        flat[c] = orig
        g[c] = (up - down) / (2 * step)
    return g.reshape(target.shape)


def gradcheck(f, tensors, step=1e-5, rtol=1e-4, max_coords=None, rng=None):
    """Compare analytic grads of scalar f(*tensors) against central differences.

    Checks every coordinate by default; when max_coords is given, probes a
    seeded random subset per tensor (full-model checks would otherwise need
    two forward passes per parameter coordinate).
    """
    for t in tensors:
        t.grad = None
    loss = f(*tensors)
    loss.backward()
    analytic = [t.grad.copy() if t.grad is not None else None for t in tensors]

    worst = 0.0
    for i, t in enumerate(tensors):
        if not t.requires_grad:
            continue
        assert analytic[i] is not None, f"tensor {i} missing grad after backward"
        n = t.data.size
        if max_coords is not None and n > max_coords:
            assert rng is not None
            coords = rng.choice(n, size=max_coords, replace=False)
        else:
            coords = range(n)
        num = numeric_grad(f, tensors, i, step=step, coords=coords)
        a = analytic[i].reshape(-1)
        m = num.reshape(-1)
        for c in coords:
            denom = max(abs(a[c]), abs(m[c]), 1e-6)
            err = abs(a[c] - m[c]) / denom
            worst = max(worst, err)
            assert err < rtol, (
                f"tensor {i} coord {c}: analytic {a[c]:.8g} vs numeric "
                f"{m[c]:.8g} (rel err {err:.3g})"
            )
    return worst


# -- brute-force loop oracles -------------------------------------------------

def matmul_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def conv1d_oracle(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct sliding-window cross-correlation, same zero padding, width 3."""
    c_in, length = x.shape
    c_out = w.shape[0]
    out = np.zeros((c_out, length))
    for o in range(c_out):
        for t in range(length):
            acc = b[o]
            for c in range(c_in):
                for k in range(3):
                    src = t + k - 1
                    if 0 <= src < length:
                        acc += x[c, src] * w[o, c, k]
            out[o, t] = acc
    return out


def maxpool_oracle(x: np.ndarray) -> np.ndarray:
    channels, length = x.shape
    n = length // 2
    out = np.zeros((channels, n))
    for c in range(channels):
        for i in range(n):
            out[c, i] = max(x[c, 2 * i], x[c, 2 * i + 1])
    return out


def softmax_oracle(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    rows = x.reshape(-1, x.shape[-1])
    flat = out.reshape(-1, x.shape[-1])
    for i in range(rows.shape[0]):
        e = np.array([np.exp(v - rows[i].max()) for v in rows[i]])
        flat[i] = e / e.sum()
    return out


def cross_entropy_oracle(logits: np.ndarray, labels: np.ndarray) -> float:
    total = 0.0
    for i in range(logits.shape[0]):
        p = softmax_oracle(logits[i : i + 1])[0]
        total += -np.log(p[labels[i]])
    return total / logits.shape[0]


def attention_oracle(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """softmax(Q K^T / sqrt(d)) V for one example, plain loops."""
    d = q.shape[-1]
    scores = matmul_oracle(q, k.T) / np.sqrt(d)
    return matmul_oracle(softmax_oracle(scores), v)
