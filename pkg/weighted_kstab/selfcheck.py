"""Randomized identity suites.

Each case draws a datum (toric, or one root whose half-space bounds Delta_+), a pruned concave
configuration with gradients in the valuation cone and a polynomial weight, then checks the
exact identities between the functionals. Everything is driven by one ``random.Random`` so a
run is reproducible from its seed.
"""

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from weighted_kstab.functionals import FunctionalReport, evaluate, lifting_invariance_check
from weighted_kstab.integration import affine_polynomial, integrate_polynomial
from weighted_kstab.rational_geometry import HPolytope
from weighted_kstab.spherical_datum import SphericalDatum, load_datum, pi_polynomial, toric_datum
from weighted_kstab.test_config import Piece, TestConfig, prune, regions
from weighted_kstab.weights import WeightFunction, pullback

logger = logging.getLogger(__name__)

_SLOPES = tuple(Fraction(k, 2) for k in range(-4, 5))
_OFFSETS = tuple(Fraction(k, 2) for k in range(0, 5))


@dataclass(frozen=True)
class Instance:
    datum: SphericalDatum
    tc: TestConfig
    weight: WeightFunction
    positive: bool
    chi_shift: tuple[Fraction, ...]
    shift: Fraction
    rho_factor: Fraction


def _unit(i: int, dim: int, value: int = 1) -> list[int]:
    return [value if j == i else 0 for j in range(dim)]


def _toric(rng: random.Random, dim: int) -> SphericalDatum:
    rows = []
    for i in range(dim):
        rows.append((_unit(i, dim), rng.randint(1, 3)))
        rows.append((_unit(i, dim, -1), rng.randint(1, 3)))
    for _ in range(rng.randint(0, 2)):
        normal = [rng.choice((-1, 0, 1)) for _ in range(dim)]
        if any(normal):
            rows.append((normal, rng.randint(1, 3)))
    return toric_datum(HPolytope.from_inequalities(rows, dim), name=f"toric-{dim}")


def _one_root(rng: random.Random, dim: int) -> SphericalDatum:
    """pi = x_1 + constant with x_1 >= -constant on Delta_+ and sigma a multiple of e_1."""
    root_constant = rng.choice((0, 1))
    kappa = [1 - root_constant] + [0] * (dim - 1)
    facets = [
        {"normal": _unit(0, dim), "n_D": 1},
        {"normal": _unit(0, dim, -1), "n_D": rng.randint(1, 2)},
    ]
    for i in range(1, dim):
        facets.append({"normal": _unit(i, dim), "n_D": rng.randint(1, 2)})
        facets.append({"normal": _unit(i, dim, -1), "n_D": rng.randint(1, 2)})
    document = {
        "name": f"one-root-{dim}",
        "dimension": dim + 1,
        "rank": dim,
        "polytope": {"facets": facets},
        "roots": [{"linear": _unit(0, dim), "constant": root_constant, "rho_pairing": rng.randint(1, 2)}],
        "kappa_p": kappa,
        "spherical_roots": [_unit(0, dim, rng.randint(1, 2))],
        "torus": {"xi": [_unit(i, dim) for i in range(1, dim)], "chi": "canonical"},
    }
    return load_datum(document)


def _configuration(rng: random.Random, datum: SphericalDatum) -> TestConfig:
    pieces = []
    for _ in range(rng.randint(1, 5)):
        gradient = [rng.choice(_SLOPES) for _ in range(datum.r0)]
        for sigma in datum.spherical_roots:
            # spherical roots here are multiples of e_1
            axis = next(i for i, a in enumerate(sigma) if a)
            gradient[axis] = -abs(gradient[axis])
        pieces.append(Piece(rng.choice(_OFFSETS), tuple(gradient)))
    return TestConfig(prune(datum, pieces))


def _random_powers(rng: random.Random, rank: int) -> tuple[int, ...]:
    powers = [0] * rank
    for _ in range(rng.randint(1, 3)):
        powers[rng.randrange(rank)] += 1
    return tuple(powers)


def _weight(rng: random.Random, rank: int) -> tuple[WeightFunction, bool]:
    kind = "constant" if rank == 0 else rng.choice(("constant", "monomial", "polynomial", "squares"))
    if kind == "constant":
        return WeightFunction.polynomial([(Fraction(rng.randint(1, 4), rng.randint(1, 3)), ())]), True
    if kind == "monomial":
        return WeightFunction.polynomial([(1, _random_powers(rng, rank))]), False
    if kind == "polynomial":
        rows = [(Fraction(rng.randint(-3, 3), rng.randint(1, 2)), _random_powers(rng, rank)) for _ in range(3)]
        rows.append((rng.randint(1, 3), ()))
        return WeightFunction.polynomial(rows), False
    rows = [(Fraction(rng.randint(1, 3)), ())]
    for axis in range(rank):
        rows.append((Fraction(rng.randint(1, 3), 2), tuple(2 if i == axis else 0 for i in range(rank))))
    return WeightFunction.polynomial(rows), True


def _weighted_volume(datum: SphericalDatum, weight: WeightFunction) -> Fraction:
    return integrate_polynomial(datum.polytope, pullback(weight, datum).polynomial * pi_polynomial(datum))


def random_instance(rng: random.Random) -> Instance:
    """Draw one case; weights whose weighted volume vanishes are redrawn."""
    dim = rng.randint(1, 3)
    datum = _toric(rng, dim) if rng.random() < 0.5 else _one_root(rng, dim)
    tc = _configuration(rng, datum)
    weight, positive = _weight(rng, datum.torus_rank)
    while _weighted_volume(datum, weight) == 0:
        weight, positive = _weight(rng, datum.torus_rank)
    chi_shift = tuple(Fraction(rng.randint(-2, 2)) for _ in range(datum.torus_rank))
    return Instance(
        datum,
        tc,
        weight,
        positive,
        chi_shift,
        shift=rng.choice(_SLOPES),
        rho_factor=Fraction(rng.randint(1, 3), rng.randint(1, 3)),
    )


_INVARIANT = ("J", "D", "M", "M_boundary", "Fut")
_RESCALED = ("E", "J", "D", "L", "M", "M_boundary", "Fut", "barycenter")


def _same(first: FunctionalReport, second: FunctionalReport, names) -> bool:
    return all(getattr(first, name) == getattr(second, name) for name in names)


def check_instance(instance: Instance) -> dict[str, bool]:
    """Outcome of every identity on one case; True means the identity holds."""
    datum, tc, weight = instance.datum, instance.tc, instance.weight
    report = evaluate(datum, tc, weight)
    n_factorial = math.factorial(datum.n)
    weighted = pullback(weight, datum).polynomial * pi_polynomial(datum)
    decomposition = regions(datum, tc).regions
    correction = sum(
        ((1 - Fraction(1, r.multiplicity)) * integrate_polynomial(r.polytope, weighted) for r in decomposition),
        Fraction(0),
    )
    int_f = sum(
        (
            integrate_polynomial(r.polytope, affine_polynomial(r.gradient, r.c, datum.r0) * weighted)
            for r in decomposition
        ),
        Fraction(0),
    )

    outcome = {"m_forms": report.M == report.M_boundary}
    if tc.is_affine:
        outcome["ding_mabuchi"] = report.M == report.D
    else:
        outcome["ding_mabuchi"] = report.M >= report.D if instance.positive else True
    outcome["futaki"] = report.Fut * report.V / report.Vg - report.M == n_factorial * correction / report.Vg
    outcome["futaki_closed"] = report.Fut_closed == report.Vg / (2 * n_factorial) * report.Fut
    outcome["futaki_reduced"] = (
        report.Fut == report.Vg / report.V * report.M if report.reduced_central_fibre else True
    )
    outcome["energy"] = (
        report.E == n_factorial * int_f / report.Vg
        and report.J == tc.maximum(datum) - report.E
        and report.D == report.L - report.E
        and (report.D <= report.J and report.J >= 0 if instance.positive else True)
    )

    shifted = evaluate(datum, tc.shifted(instance.shift), weight)
    outcome["shift"] = (
        _same(report, shifted, _INVARIANT)
        and shifted.E == report.E + instance.shift
        and shifted.L == report.L + instance.shift
    )
    rescaled = evaluate(datum.with_rho_scale(instance.rho_factor), tc, weight)
    outcome["rho_scale"] = _same(report, rescaled, _RESCALED)
    outcome["lifting"] = lifting_invariance_check(datum, tc, weight, instance.chi_shift) == 0
    return outcome


@dataclass
class SelfCheckReport:
    seed: int
    cases: int
    failures: dict[str, int] = field(default_factory=dict)
    first_failure: Optional[dict[str, Any]] = None

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())


def run_selfcheck(seed: int, cases: int) -> SelfCheckReport:
    """Run ``cases`` random cases from ``seed`` and count failures per identity."""
    rng = random.Random(seed)
    report = SelfCheckReport(seed, cases)
    for case in range(cases):
        instance = random_instance(rng)
        outcome = check_instance(instance)
        for name, passed in outcome.items():
            report.failures.setdefault(name, 0)
            if not passed:
                report.failures[name] += 1
                if report.first_failure is None:
                    report.first_failure = {"case": case, "identity": name, "datum": instance.datum.name}
                logger.warning(f"case {case} ({instance.datum.name}): {name} fails")
    logger.info(f"selfcheck seed={seed}: {cases} cases, failures {report.failures}")
    return report
