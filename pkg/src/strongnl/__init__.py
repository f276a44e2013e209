"""Construction and verification of strongly nonlocal orbit-based state sets."""

__version__ = "0.1.0"

from .entanglement import classify, rank_profile, verify_oes, verify_oges
from .nonlocality import deduce_fixpoint, triviality_check, verify_strongest
from .orbits import orbit_of, partition
from .states import build, build_A18, build_B, build_Bbar4

__all__ = [
    "build", "build_A18", "build_B", "build_Bbar4", "classify", "deduce_fixpoint",
    "orbit_of", "partition", "rank_profile", "triviality_check", "verify_oes",
    "verify_oges", "verify_strongest",
]
