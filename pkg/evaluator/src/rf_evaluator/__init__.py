"""Reference external evaluator for the bee-colony tuning engine."""

__version__ = "0.1.0"

from .model import MODES, PARAM_CASTS, DigitsScorer, UnknownParameter
from .server import PROTOCOL_VERSION, serve, serve_stdio

__all__ = [
    "MODES",
    "PARAM_CASTS",
    "DigitsScorer",
    "UnknownParameter",
    "PROTOCOL_VERSION",
    "serve",
    "serve_stdio",
]
