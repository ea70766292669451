"""Reduced-order autodifferentiable ensemble Kalman filtering.

Jointly learns low-dimensional latent surrogate dynamics and a spectral
decoder from noisy, partially observed high-dimensional time series, then
reconstructs and forecasts states with quantified uncertainty. A full-order
variant (learned state-space dynamics, identity decoder) is included as a
baseline.
"""

from .autodiff import RngStream, Tape, Tensor

__version__ = "0.1.0"

__all__ = ["Tensor", "Tape", "RngStream", "__version__"]
