"""Dense float64 tensors with reverse-mode automatic differentiation.

Small tape-based engine in the micrograd tradition, but ndarray-valued:
each op records its parents and a closure that accumulates gradients into
them. Only the ops needed by the murmur classifiers live here (matmul,
1D convolution, max pooling, ReLU, softmax, cross-entropy, and the glue
ops for reshaping and pooling), plus the Adam optimizer.

All math is float64; 32-bit floats appear only at file boundaries.
Tracked tensors are never mutated in place; a fresh tape is built on
every forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class GradientError(RuntimeError):
    """Backward pass requested on an invalid target or missing gradient."""


_grad_enabled = True


class no_grad:
    """Context manager that disables tape recording inside its block."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor:
    """N-dimensional float64 array, optionally tracked on the autodiff tape.

    Attributes:
        data: the values, a float64 ndarray (scalars are 0-d arrays)
        requires_grad: whether backward() should populate .grad
        grad: ndarray of the same shape, filled by backward(), else None
    """

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar ---------------------------------------------------
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other), -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self) -> None:
        """Reverse-mode pass from a scalar, filling .grad on the tape.

        Every tensor with requires_grad that is reachable from this node
        ends up with a populated gradient. Raises GradientError if this
        tensor is not a scalar (size 1).
        """
        if self.data.size != 1:
            raise GradientError(
                f"backward() needs a scalar loss, got shape {self.shape}"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    """Create an op result, recording it on the tape when grads are live."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _sum_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back down to the original shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, (gs, ss) in enumerate(zip(g.shape, shape)):
        if ss == 1 and gs != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# -- elementwise ops -------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"add: cannot broadcast {a.shape} with {b.shape}") from exc

    def backward(g):
        _accum(a, _sum_to(g, a.shape))
        _accum(b, _sum_to(g, b.shape))

    return _make(data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"mul: cannot broadcast {a.shape} with {b.shape}") from exc

    def backward(g):
        _accum(a, _sum_to(g * b.data, a.shape))
        _accum(b, _sum_to(g * a.data, b.shape))

    return _make(data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)

    def backward(g):
        _accum(a, g * c)

    return _make(a.data * c, (a,), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0

    def backward(g):
        _accum(a, g * mask)

    return _make(np.where(mask, a.data, 0.0), (a,), backward)


# -- matrix and shape ops --------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product for 2D x 2D, 3D x 2D (batched), and 3D x 3D.

    Gradients flow to both operands.
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
    if a.data.ndim == 3 and b.data.ndim == 3 and a.shape[0] != b.shape[0]:
        raise ShapeError(f"matmul: batch sizes differ, {a.shape} x {b.shape}")
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            if b.data.ndim == 2:
                _accum(a, g @ b.data.T)
            else:
                _accum(a, g @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            if a.data.ndim == 2:
                _accum(b, a.data.T @ g)
            elif b.data.ndim == 2:
                _accum(b, np.einsum("bmk,bmn->kn", a.data, g))
            else:
                _accum(b, np.swapaxes(a.data, -1, -2) @ g)

    return _make(data, (a, b), backward)


def transpose_last2(a: Tensor) -> Tensor:
    def backward(g):
        _accum(a, np.swapaxes(g, -1, -2))

    return _make(np.swapaxes(a.data, -1, -2), (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    orig = a.shape

    def backward(g):
        _accum(a, g.reshape(orig))

    return _make(a.data.reshape(shape), (a,), backward)


def concat_last(tensors: list[Tensor]) -> Tensor:
    """Concatenate along the last axis."""
    widths = [t.shape[-1] for t in tensors]
    offsets = np.cumsum(widths)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, offsets, axis=-1)):
            _accum(t, piece)

    return _make(
        np.concatenate([t.data for t in tensors], axis=-1), tuple(tensors), backward
    )


def mean_axis(a: Tensor, axis: int) -> Tensor:
    n = a.shape[axis]

    def backward(g):
        _accum(a, np.repeat(np.expand_dims(g / n, axis), n, axis=axis))

    return _make(a.data.mean(axis=axis), (a,), backward)


def sum_all(a: Tensor) -> Tensor:
    def backward(g):
        _accum(a, np.broadcast_to(g, a.shape).copy())

    return _make(a.data.sum(), (a,), backward)


# -- neural net ops --------------------------------------------------------

def conv1d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """1D cross-correlation with kernel width 3 and `same` zero padding.

    Accepts x of shape [channels_in, length] for a single example or
    [batch, channels_in, length]; kernels are [channels_out, channels_in, 3]
    and bias is [channels_out]. Output length equals input length.
    """
    x, kernels, bias = _as_tensor(x), _as_tensor(kernels), _as_tensor(bias)
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 3 or kernels.data.ndim != 3 or kernels.shape[2] != 3:
        raise ShapeError(
            f"conv1d: expected x [batch, c_in, len] and kernels [c_out, c_in, 3], "
            f"got {x.shape} and {kernels.shape}"
        )
    if xd.shape[1] != kernels.shape[1]:
        raise ShapeError(
            f"conv1d: input has {xd.shape[1]} channels, kernels expect "
            f"{kernels.shape[1]}"
        )
    batch, _, length = xd.shape
    c_out = kernels.shape[0]
    xp = np.pad(xd, ((0, 0), (0, 0), (1, 1)))
    out = np.empty((batch, c_out, length))
    out[:] = bias.data[None, :, None]
    for k in range(3):
        out += np.einsum(
            "bcl,oc->bol", xp[:, :, k : k + length], kernels.data[:, :, k],
            optimize=True,
        )

    def backward(g):
        gd = g[None] if squeeze else g
        if bias.requires_grad:
            _accum(bias, gd.sum(axis=(0, 2)))
        if kernels.requires_grad:
            gk = np.stack(
                [
                    np.einsum("bol,bcl->oc", gd, xp[:, :, k : k + length], optimize=True)
                    for k in range(3)
                ],
                axis=-1,
            )
            _accum(kernels, gk)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for k in range(3):
                gxp[:, :, k : k + length] += np.einsum(
                    "bol,oc->bcl", gd, kernels.data[:, :, k], optimize=True
                )
            gx = gxp[:, :, 1 : length + 1]
            _accum(x, gx[0] if squeeze else gx)

    out_t = _make(out[0] if squeeze else out, (x, kernels, bias), backward)
    return out_t


def maxpool1d(x: Tensor) -> Tensor:
    """Max pooling with window 2 along the last axis; odd tail is dropped.

    On ties the gradient routes to the first (left) element of the window.
    """
    length = x.shape[-1]
    if length < 2:
        raise ShapeError(f"maxpool1d: length must be >= 2, got {length}")
    n = length // 2
    left = x.data[..., : 2 * n : 2]
    right = x.data[..., 1 : 2 * n : 2]
    take_left = left >= right

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[..., : 2 * n : 2] = np.where(take_left, g, 0.0)
        gx[..., 1 : 2 * n : 2] = np.where(take_left, 0.0, g)
        _accum(x, gx)

    return _make(np.where(take_left, left, right), (x,), backward)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max subtraction."""
    if np.isnan(a.data).any():
        raise ValueError("softmax: input contains NaN")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * s).sum(axis=-1, keepdims=True)
        _accum(a, s * (g - inner))

    return _make(s, (a,), backward)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log softmax probability of the true class.

    logits: [batch, classes]; labels: integer class indices in [0, classes).
    """
    labels = np.asarray(labels)
    if logits.data.ndim != 2:
        raise ShapeError(f"cross_entropy: logits must be 2D, got {logits.shape}")
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise ShapeError(
            f"cross_entropy: labels shape {labels.shape} does not match batch {batch}"
        )
    if labels.min() < 0 or labels.max() >= classes:
        raise ValueError(
            f"cross_entropy: labels must lie in [0, {classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsumexp
    loss = -logp[np.arange(batch), labels].mean()

    def backward(g):
        p = np.exp(logp)
        p[np.arange(batch), labels] -= 1.0
        _accum(logits, p * (g / batch))

    return _make(np.asarray(loss), (logits,), backward)


# -- optimizer ---------------------------------------------------------------

@dataclass
class AdamState:
    """Per-parameter Adam moments plus the shared step counter."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


class Adam:
    """Standard Adam with bias correction over a fixed parameter list."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.state = AdamState(
            learning_rate=lr, beta1=beta1, beta2=beta2, eps_opt=eps,
            first_moment=[np.zeros_like(p.data) for p in self.params],
            second_moment=[np.zeros_like(p.data) for p in self.params],
        )

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        """Apply one Adam update; deterministic given params and grads."""
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise GradientError(f"adam: parameter {i} has no gradient")
        st = self.state
        st.step_count += 1
        b1c = 1.0 - st.beta1 ** st.step_count
        b2c = 1.0 - st.beta2 ** st.step_count
        for i, p in enumerate(self.params):
            g = p.grad
            st.first_moment[i] = st.beta1 * st.first_moment[i] + (1 - st.beta1) * g
            st.second_moment[i] = st.beta2 * st.second_moment[i] + (1 - st.beta2) * g * g
            m_hat = st.first_moment[i] / b1c
            v_hat = st.second_moment[i] / b2c
            p.data = p.data - st.learning_rate * m_hat / (np.sqrt(v_hat) + st.eps_opt)
