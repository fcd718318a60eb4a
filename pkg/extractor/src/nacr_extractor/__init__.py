"""Neural-audio-codec feature extraction bridge.

Runs frozen codec encoders (or a deterministic surrogate) over padded
recordings and emits `.fvec` files for the classifier pipeline.
"""

__version__ = "0.1.0"
