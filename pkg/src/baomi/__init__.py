"""Heart murmur classification toolkit.

Spectral feature extraction, a small autodiff tensor core, FCN/CNN
baselines, bandit-weighted cross-attention fusion, and a five-fold
cross-validation harness, all behind one CLI.
"""

from baomi.tensor import Tensor, Adam, no_grad

__all__ = ["Tensor", "Adam", "no_grad"]
__version__ = "0.1.0"
