"""Curated data, weights and test configurations.

The documents here are the same JSON shapes the command line reads from ``data/``.
"""

from typing import Any

from weighted_kstab.spherical_datum import SphericalDatum, load_datum
from weighted_kstab.test_config import TestConfig, load_test_config, validate_tc
from weighted_kstab.weights import WeightFunction, load_weight

P1: dict[str, Any] = {
    "name": "P1",
    "dimension": 1,
    "rank": 1,
    "polytope": {"facets": [{"normal": [1], "n_D": 1}, {"normal": [-1], "n_D": 1}]},
    "kappa_p": [0],
    "torus": {"xi": [[1]], "chi": "canonical"},
}

# pi = lambda on [0, 2]; the colour at lambda = 2 carries the boundary mass
SL2: dict[str, Any] = {
    "name": "SL2",
    "dimension": 2,
    "rank": 1,
    "polytope": {
        "facets": [
            {"normal": [1], "n_D": 1},
            {"normal": [-1], "n_D": 1, "kind": "colour"},
        ]
    },
    "roots": [{"linear": [1], "constant": 0, "rho_pairing": 1}],
    "kappa_p": [1],
    "spherical_roots": [[2]],
}

BLP2: dict[str, Any] = {
    "name": "BlpP2",
    "dimension": 2,
    "rank": 2,
    "polytope": {
        "facets": [
            {"normal": [1, 0], "n_D": 1},
            {"normal": [0, 1], "n_D": 1},
            {"normal": [-1, -1], "n_D": 1},
            {"normal": [1, 1], "n_D": 1},
        ]
    },
    "kappa_p": [0, 0],
    "torus": {"xi": [[1, 0], [0, 1]], "chi": "canonical"},
}

BAD_RANK: dict[str, Any] = {**P1, "name": "bad-rank", "dimension": 2}

DATA = {"p1": P1, "sl2": SL2, "blp2": BLP2, "bad_rank": BAD_RANK}

WEIGHTS: dict[str, dict[str, Any]] = {
    "one": {"type": "polynomial", "terms": [{"coef": 1}]},
    "theta_squared": {"type": "polynomial", "terms": [{"coef": 1, "powers": [2]}]},
    "one_plus_theta_squared": {
        "type": "polynomial",
        "terms": [{"coef": 1}, {"coef": 1, "powers": [2]}],
    },
}

CONFIGURATIONS: dict[str, dict[str, Any]] = {
    "f1": {"pieces": [{"c": 1, "lambda": [0]}, {"c": "3/2", "lambda": [-1]}]},
    "f2": {"pieces": [{"c": 1, "lambda": [0]}, {"c": 1, "lambda": ["-1/2"]}]},
    "f3": {"pieces": [{"c": 1, "lambda": ["1/2"]}]},
    "sl2_tc": {"pieces": [{"c": 1, "lambda": [0]}, {"c": 4, "lambda": [-2]}]},
    "kink": {"pieces": [{"c": 1, "lambda": [0]}, {"c": 1, "lambda": [-1]}]},
}


def datum(name: str) -> SphericalDatum:
    return load_datum(DATA[name])


def weight(name: str) -> WeightFunction:
    return load_weight(WEIGHTS[name])


def configuration(data: SphericalDatum, name: str) -> TestConfig:
    return validate_tc(data, load_test_config(CONFIGURATIONS[name]))

