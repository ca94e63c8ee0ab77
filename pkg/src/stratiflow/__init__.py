"""Spectral Galerkin simulator for damped 2D Boussinesq flow on a periodic strip."""
from .basis import OMEGA, VARPI, Family, SpectralScalar
from .dynamics import BlowupError, StateVector, rhs, step_rk4
from .spectral_ops import Profile, VelocityField

__version__ = "0.1.0"

__all__ = ["OMEGA", "VARPI", "Family", "SpectralScalar", "BlowupError", "StateVector", "rhs", "step_rk4",
           "Profile", "VelocityField", "__version__"]
