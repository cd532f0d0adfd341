"""Energy-momentum tensors, laminates and weak residuals for frame-indifferent energies."""
from . import emtensor, inclusions, lagrangians, matcalc, weakform
from ._kernels import BACKEND
from .errors import EmlabError

__version__ = "0.1.0"

__all__ = ["matcalc", "lagrangians", "emtensor", "inclusions", "weakform", "BACKEND", "EmlabError"]
