"""Exact front tracking for scalar conservation laws with convex polygonal flux."""
from ._config import TOL
from .errors import PolyfluxError, ValidationError
from .flux import LegendreTransform, PolygonalFlux, build_flux, legendre, rh_speed
from .fronttrack import CollisionEvent, Front, FrontSolution, solve
from .hierarchy import (
    compare_interaction_sets,
    classify_event,
    interaction_sets,
    ledger_verify,
    seeded_bumps,
    verify_transport,
)
from .hopflax import HopfLax
from .profile import Profile, RandomProfileModel, l1_distance, make_profile, sample, total_variation
from .stats import EnsembleSpec, check_compatibility, estimate_F, estimate_shock_density, run_ensemble

__version__ = "0.1.0"

__all__ = [
    "TOL",
    "PolyfluxError",
    "ValidationError",
    "PolygonalFlux",
    "LegendreTransform",
    "build_flux",
    "legendre",
    "rh_speed",
    "Profile",
    "RandomProfileModel",
    "make_profile",
    "sample",
    "total_variation",
    "l1_distance",
    "Front",
    "CollisionEvent",
    "FrontSolution",
    "solve",
    "HopfLax",
    "interaction_sets",
    "compare_interaction_sets",
    "classify_event",
    "ledger_verify",
    "seeded_bumps",
    "verify_transport",
    "EnsembleSpec",
    "run_ensemble",
    "estimate_F",
    "estimate_shock_density",
    "check_compatibility",
]
