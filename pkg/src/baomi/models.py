"""Single-feature downstream classifiers: FCN and 1D CNN.

Both map one representation vector to two-class logits. Softmax is applied
only inside the loss and metrics, never here. The CNN's conv stack (two
layers, 64 and 128 filters, kernel 3, ReLU, max pool after each) is shared
with the fusion model's branch encoders.
"""

from __future__ import annotations

import numpy as np

from baomi import tensor as T
from baomi.tensor import Tensor


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> Tensor:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def zeros_param(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


class ParamModule:
    """Base for models: named parameters, checkpoint dicts."""

    def named_params(self) -> list[tuple[str, Tensor]]:
        raise NotImplementedError

    def params(self) -> list[Tensor]:
        return [p for _, p in self.named_params()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_params()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, p in self.named_params():
            if name not in state:
                raise KeyError(f"checkpoint missing parameter {name!r}")
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"parameter {name!r}: checkpoint shape {arr.shape} != "
                    f"model shape {p.data.shape}"
                )
            p.data = arr.copy()


class ConvStack(ParamModule):
    """conv(1->64, k3) -> ReLU -> pool2 -> conv(64->128, k3) -> ReLU -> pool2."""

    CHANNELS = (64, 128)

    def __init__(self, input_dim: int, rng: np.random.Generator, prefix: str = ""):
        if input_dim < 4:
            raise ValueError(
                f"conv stack needs input dimension >= 4 (two pools), got {input_dim}"
            )
        c1, c2 = self.CHANNELS
        self.prefix = prefix
        self.input_dim = input_dim
        self.out_len = (input_dim // 2) // 2
        self.out_channels = c2
        self.conv1_w = glorot(rng, 1 * 3, c1 * 3, (c1, 1, 3))
        self.conv1_b = zeros_param(c1)
        self.conv2_w = glorot(rng, c1 * 3, c2 * 3, (c2, c1, 3))
        self.conv2_b = zeros_param(c2)

    def named_params(self):
        p = self.prefix
        return [
            (f"{p}conv1.w", self.conv1_w),
            (f"{p}conv1.b", self.conv1_b),
            (f"{p}conv2.w", self.conv2_w),
            (f"{p}conv2.b", self.conv2_b),
        ]

    def forward(self, x: Tensor) -> Tensor:
        """[batch, d] -> feature map [batch, 128, d//4]."""
        batch, d = x.shape
        if d != self.input_dim:
            raise T.ShapeError(
                f"conv stack built for dimension {self.input_dim}, got {d}"
            )
        h = T.reshape(x, (batch, 1, d))
        h = T.maxpool1d(T.relu(T.conv1d(h, self.conv1_w, self.conv1_b)))
        h = T.maxpool1d(T.relu(T.conv1d(h, self.conv2_w, self.conv2_b)))
        return h


class FcnModel(ParamModule):
    """Dense 256 with ReLU, then a linear output layer for two classes."""

    kind = "fcn"
    HIDDEN = 256

    def __init__(self, input_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.dense1_w = glorot(rng, input_dim, self.HIDDEN, (input_dim, self.HIDDEN))
        self.dense1_b = zeros_param(self.HIDDEN)
        self.out_w = glorot(rng, self.HIDDEN, 2, (self.HIDDEN, 2))
        self.out_b = zeros_param(2)

    def named_params(self):
        return [
            ("dense1.w", self.dense1_w),
            ("dense1.b", self.dense1_b),
            ("out.w", self.out_w),
            ("out.b", self.out_b),
        ]

    def _forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        if x.shape[1] != self.input_dim:
            raise T.ShapeError(
                f"fcn built for dimension {self.input_dim}, got {x.shape[1]}"
            )
        hidden = T.relu(T.matmul(x, self.dense1_w) + self.dense1_b)
        return T.matmul(hidden, self.out_w) + self.out_b, hidden

    def forward(self, x: Tensor) -> Tensor:
        return self._forward(x)[0]

    def embed(self, x: Tensor) -> Tensor:
        """Penultimate activations (the 256-unit hidden layer)."""
        return self._forward(x)[1]


class CnnModel(ParamModule):
    """Conv stack, flatten, dense 128 with ReLU, linear output."""

    kind = "cnn"
    HIDDEN = 128

    def __init__(self, input_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.stack = ConvStack(input_dim, rng)
        self.flat_dim = self.stack.out_channels * self.stack.out_len
        self.dense_w = glorot(rng, self.flat_dim, self.HIDDEN, (self.flat_dim, self.HIDDEN))
        self.dense_b = zeros_param(self.HIDDEN)
        self.out_w = glorot(rng, self.HIDDEN, 2, (self.HIDDEN, 2))
        self.out_b = zeros_param(2)

    def named_params(self):
        return self.stack.named_params() + [
            ("dense.w", self.dense_w),
            ("dense.b", self.dense_b),
            ("out.w", self.out_w),
            ("out.b", self.out_b),
        ]

    def _forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        fmap = self.stack.forward(x)
        flat = T.reshape(fmap, (x.shape[0], self.flat_dim))
        hidden = T.relu(T.matmul(flat, self.dense_w) + self.dense_b)
        return T.matmul(hidden, self.out_w) + self.out_b, hidden

    def forward(self, x: Tensor) -> Tensor:
        return self._forward(x)[0]

    def embed(self, x: Tensor) -> Tensor:
        """Penultimate activations (the 128-unit hidden layer)."""
        return self._forward(x)[1]
