from .functionals import FunctionalReport, barycenter, evaluate, lifting_invariance_check
from .spherical_datum import SphericalDatum, load_datum, read_datum, validate
from .stability import Verdict, VerdictStatus, criterion, destabilizer, ratio_scan, soliton_solve
from .test_config import TestConfig, normalize, validate_tc
from .weights import WeightFunction, load_weight, read_weight

__all__ = [
    "FunctionalReport",
    "SphericalDatum",
    "TestConfig",
    "Verdict",
    "VerdictStatus",
    "WeightFunction",
    "barycenter",
    "criterion",
    "destabilizer",
    "evaluate",
    "lifting_invariance_check",
    "load_datum",
    "load_weight",
    "normalize",
    "ratio_scan",
    "read_datum",
    "read_weight",
    "soliton_solve",
    "validate",
    "validate_tc",
]
