"""Competitive Hastings-Levitov growth: exact simulation, clusters and diffusion limits."""

__version__ = "0.1.0"

from .errors import DomainError, PreconditionError, QuadratureError, SpecificationError  # noqa: E402
from .profiles import SizeProfile, builtin_profile, from_expressions  # noqa: E402

__all__ = [
    "__version__",
    "DomainError",
    "PreconditionError",
    "QuadratureError",
    "SpecificationError",
    "SizeProfile",
    "builtin_profile",
    "from_expressions",
]
