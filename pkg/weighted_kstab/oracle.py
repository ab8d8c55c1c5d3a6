"""Lattice-sum ground truth for the closed-form integrals.

Level-k sections are modelled by the weights kDelta_+ ∩ (k kappa_P + Z^r0), each carrying the
Weyl dimension prod (linear . lambda + k constant + rho) / rho. Sums over these weights are exact
rationals; their large-k behaviour checks the Euler-Maclaurin expansions used by the
functionals and decides the normalization of the Futaki invariant.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from weighted_kstab.errors import NonIntegralLevel, NonPolynomial, NotConverged, QuadrantViolation
from weighted_kstab.functionals import FunctionalReport
from weighted_kstab.integration import (
    affine_polynomial,
    evaluate_terms,
    facet_integral_lattice,
    from_terms,
    integrate_polynomial,
    terms,
)
from weighted_kstab.kstab_env import EngineConfig, get_config
from weighted_kstab.rational_geometry import HPolytope, Vector, dot, lattice_points
from weighted_kstab.spherical_datum import SphericalDatum, pi_first_order, pi_polynomial
from weighted_kstab.test_config import TestConfig, regions
from weighted_kstab.weights import WeightFunction, pullback

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelWeights:
    k: int
    entries: tuple[tuple[Vector, Fraction], ...]

    @property
    def total(self) -> Fraction:
        return sum((dim for _, dim in self.entries), Fraction(0))


def _integral_point(point: Sequence[Fraction]) -> bool:
    return all(Fraction(x).denominator == 1 for x in point)


def _translated(polytope: HPolytope, shift: Sequence[Fraction]) -> HPolytope:
    """P - shift."""
    return HPolytope.from_inequalities(
        ((ineq.normal, ineq.offset + dot(ineq.normal, shift)) for ineq in polytope.inequalities),
        polytope.dim,
    )


def weyl_dimension(datum: SphericalDatum, point: Sequence[Fraction], k: int) -> Fraction:
    result = Fraction(1)
    for root in datum.roots:
        result *= (dot(root.linear, point) + k * root.constant + root.rho_pairing) / root.rho_pairing
    return result


def level_weights(datum: SphericalDatum, k: int, workers: Optional[int] = None) -> LevelWeights:
    """Weights of level k with their dimensions.

    Raises:
        NonIntegralLevel: k * kappa_P is not integral.
    """
    if k < 0:
        raise ValueError(f"level must be non-negative, got {k}")
    base = tuple(k * x for x in datum.kappa_p)
    if not _integral_point(base):
        raise NonIntegralLevel(f"k * kappa_P = {base} is not integral for k = {k}")
    if k == 0 or datum.r0 == 0:
        return LevelWeights(k, ((base, weyl_dimension(datum, base, k)),))
    workers = get_config().workers if workers is None else workers
    shifted = _translated(datum.polytope.dilate(k), base)
    entries = []
    for m in lattice_points(shifted, workers):
        point = tuple(b + x for b, x in zip(base, m))
        entries.append((point, weyl_dimension(datum, point, k)))
    return LevelWeights(k, tuple(entries))


def hilbert(datum: SphericalDatum, k: int) -> Fraction:
    """h^0(k): the sum of Weyl dimensions over the level-k weights."""
    return level_weights(datum, k).total


def _boundary(polytope: HPolytope, p, facets: Optional[int] = None) -> Fraction:
    """Integral of p over the first ``facets`` inequalities (all by default) against the
    lattice-normalized facet measure."""
    count = len(polytope.inequalities) if facets is None else facets
    return sum(
        (facet_integral_lattice(polytope, i, p, strict=False) for i in range(count)),
        Fraction(0),
    )


def hilbert_coefficients(datum: SphericalDatum) -> tuple[Fraction, Fraction]:
    """Leading coefficients of h^0(k) = a k^n + b k^(n-1) + ...: a = integral of pi and
    b = half the boundary integral of pi plus the integral of the first-order Weyl term."""
    polytope = datum.polytope
    pi = pi_polynomial(datum)
    leading = integrate_polynomial(polytope, pi)
    second = _boundary(polytope, pi) / 2 + integrate_polynomial(polytope, pi_first_order(datum))
    return leading, second


def _require_polynomial(weight: WeightFunction) -> None:
    if not weight.exact:
        raise NonPolynomial("lattice sums need a polynomial weight")


def s_sums(datum: SphericalDatum, tc: TestConfig, weight: WeightFunction, k: int) -> tuple[Fraction, Fraction]:
    """(S1, S2) at level k, with the eigenvalue model floor(k f(lambda / k))."""
    _require_polynomial(weight)
    pullback(weight, datum)
    if k < 1:
        raise ValueError(f"level must be positive, got {k}")
    rank = datum.torus_rank
    partials = [weight.partial(axis, rank) for axis in range(rank)]
    s1 = Fraction(0)
    s2 = Fraction(0)
    for point, dim in level_weights(datum, k).entries:
        x = tuple(a / k for a in point)
        theta = datum.theta(x)
        eigenvalue = math.floor(k * tc(x))
        s1 += weight.value(theta) * eigenvalue * dim
        euler = sum((evaluate_terms(d, theta) * t for d, t in zip(partials, theta)), Fraction(0))
        s2 += euler * Fraction(eigenvalue, k) * dim / 2
    return s1, s2


def s1_expansion(datum: SphericalDatum, tc: TestConfig, weight: WeightFunction) -> tuple[Fraction, Fraction]:
    """Coefficients (a, b) with S1(k) = a k^(n+1) + b k^n + O(k^(n-1)).

    a is the integral of f g pi; b collects half the integral of f g pi over the facets of
    Delta_+ (cuts between regions cancel), the first-order Weyl term and the rounding loss
    (1/m_a - 1)/2 of each non-reduced region.
    """
    _require_polynomial(weight)
    g = pullback(weight, datum).polynomial
    weighted = g * pi_polynomial(datum)
    first_order = g * pi_first_order(datum)
    outer = len(datum.polytope.inequalities)
    leading = Fraction(0)
    second = Fraction(0)
    for region in regions(datum, tc).regions:
        f = affine_polynomial(region.gradient, region.c, datum.r0)
        leading += integrate_polynomial(region.polytope, f * weighted)
        second += _boundary(region.polytope, f * weighted, outer) / 2
        second += integrate_polynomial(region.polytope, f * first_order)
        second += (Fraction(1, region.multiplicity) - 1) * integrate_polynomial(region.polytope, weighted) / 2
    return leading, second


# Futaki invariant from the lattice sums


@dataclass(frozen=True)
class EstimateRow:
    k: int
    ratio: Fraction
    scaled: Fraction
    first: Optional[Fraction] = None
    second: Optional[Fraction] = None


@dataclass(frozen=True)
class FutakiEstimate:
    F0: Fraction
    F1: float
    doubled: float
    cauchy: float
    table: tuple[EstimateRow, ...]


def futaki_estimate(
    datum: SphericalDatum,
    tc: TestConfig,
    weight: WeightFunction,
    k_list: Sequence[int],
    config: Optional[EngineConfig] = None,
) -> FutakiEstimate:
    """F1 in (S2 - S1) / (k h^0) = F0 + F1 / k + O(1/k^2).

    F0 = -n! (integral of f g pi) / V. The scaled values k (ratio - F0) are extrapolated twice
    by Richardson's rule; consecutive k must share one ratio q.

    Raises:
        NotConverged: the last two extrapolants differ by more than ``richardson_tolerance``
            relative to max(1, |F1|).
    """
    _require_polynomial(weight)
    config = config or get_config()
    ks = [int(k) for k in k_list]
    if len(ks) < 4:
        raise ValueError("Richardson extrapolation needs at least 4 levels")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("levels must be increasing")
    q = Fraction(ks[1], ks[0])
    if any(Fraction(b, a) != q for a, b in zip(ks, ks[1:])):
        raise ValueError("levels must form a geometric sequence")

    n_factorial = math.factorial(datum.n)
    weighted = pullback(weight, datum).polynomial * pi_polynomial(datum)
    volume = n_factorial * integrate_polynomial(datum.polytope, pi_polynomial(datum))
    int_f = Fraction(0)
    for region in regions(datum, tc).regions:
        f = affine_polynomial(region.gradient, region.c, datum.r0)
        int_f += integrate_polynomial(region.polytope, f * weighted)
    f0 = -n_factorial * int_f / volume

    ratios = []
    for k in ks:
        s1, s2 = s_sums(datum, tc, weight, k)
        ratios.append((s2 - s1) / (k * hilbert(datum, k)))
    scaled = [k * (r - f0) for k, r in zip(ks, ratios)]
    first = [(q * b - a) / (q - 1) for a, b in zip(scaled, scaled[1:])]
    second = [(q * q * b - a) / (q * q - 1) for a, b in zip(first, first[1:])]

    table = tuple(
        EstimateRow(
            k,
            ratios[i],
            scaled[i],
            first[i] if i < len(first) else None,
            second[i] if i < len(second) else None,
        )
        for i, k in enumerate(ks)
    )
    for row in table:
        logger.debug(f"k={row.k}: ratio={float(row.ratio)}, k(ratio-F0)={float(row.scaled)}")

    f1 = second[-1]
    cauchy = float(abs(second[-1] - second[-2]))
    if cauchy > config.richardson_tolerance * max(1.0, abs(float(f1))):
        raise NotConverged(f"Richardson extrapolants differ by {cauchy:.3e} at k={ks[-1]}")
    logger.info(f"futaki estimate on {datum.name}: F1={float(f1)}")
    return FutakiEstimate(f0, float(f1), float(2 * f1), cauchy, table)


@dataclass(frozen=True)
class Adjudication:
    """Which closed form the lattice value 2 F1 agrees with, within ``tolerance``.

    ``f1`` is the undoubled extrapolant; ``lattice`` is 2 F1.
    """

    match: str
    f1: float
    lattice: float
    fut: float
    fut_closed: float
    fut_gap: float
    closed_gap: float


def adjudicate(estimate: FutakiEstimate, report: FunctionalReport, tolerance: float = 1e-2) -> Adjudication:
    lattice = estimate.doubled
    fut, closed = float(report.Fut), float(report.Fut_closed)

    def gap(value: float) -> float:
        return abs(lattice - value) / max(abs(value), 1e-12)

    fut_gap, closed_gap = gap(fut), gap(closed)
    agrees = (fut_gap <= tolerance, closed_gap <= tolerance)
    match = {(True, True): "both", (True, False): "fna", (False, True): "closed", (False, False): "none"}[agrees]
    logger.info(f"lattice F1={estimate.F1}, 2F1={lattice} matches {match} (Fut={fut}, Fut_closed={closed})")
    return Adjudication(match, estimate.F1, lattice, fut, closed, fut_gap, closed_gap)


# lifted polytopes of the fibre products


def _theta_datum(datum: SphericalDatum, chi: Optional[Sequence[Fraction]]) -> SphericalDatum:
    return datum if chi is None else datum.with_chi(chi)


def lift_polytope(
    datum: SphericalDatum, k_vector: Sequence[int], chi: Optional[Sequence[Fraction]] = None
) -> HPolytope:
    """{(lambda, mu) : lambda in Delta_+, mu_{A,i} >= 0, sum_i mu_{A,i} = theta_A(lambda)} with the
    last mu of each block eliminated; coordinates are lambda then mu_{A,0..k_A-1} block by block.

    Raises:
        QuadrantViolation: some theta_A is negative at a vertex of Delta_+.
    """
    datum = _theta_datum(datum, chi)
    ks = [int(k) for k in k_vector]
    if len(ks) != datum.torus_rank:
        raise ValueError(f"k has length {len(ks)} but the torus rank is {datum.torus_rank}")
    for v in datum.vertices:
        for axis, value in enumerate(datum.theta(v)):
            if value < 0:
                raise QuadrantViolation(v, axis, value)

    r0 = datum.r0
    dim = r0 + sum(ks)
    zeros = (Fraction(0),) * (dim - r0)
    rows = [(tuple(ineq.normal) + zeros, ineq.offset) for ineq in datum.polytope.inequalities]
    start = r0
    for xi, c, k in zip(datum.torus, datum.chi, ks):
        block = range(start, start + k)
        for j in block:
            rows.append((tuple(Fraction(int(i == j)) for i in range(dim)), Fraction(0)))
        normal = tuple(xi) + tuple(Fraction(-1) if i in block else Fraction(0) for i in range(r0, dim))
        rows.append((normal, c))
        start += k
    return HPolytope.from_inequalities(rows, dim)


class Comparison(NamedTuple):
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def fibre_sides(
    datum: SphericalDatum, k_vector: Sequence[int], chi: Optional[Sequence[Fraction]] = None
) -> Comparison:
    """(prod k_A!) * integral of pi over the lift, and the integral of prod theta_A^k_A pi over
    Delta_+."""
    lifted = lift_polytope(datum, k_vector, chi)
    datum = _theta_datum(datum, chi)
    pi = pi_polynomial(datum)
    extra = lifted.dim - datum.r0
    padded = from_terms([(c, e + (0,) * extra) for c, e in terms(pi)], lifted.dim)
    lhs = math.prod(math.factorial(int(k)) for k in k_vector) * integrate_polynomial(lifted, padded)

    integrand = pi
    for xi, c, k in zip(datum.torus, datum.chi, k_vector):
        integrand = integrand * affine_polynomial(xi, c, datum.r0) ** int(k)
    rhs = integrate_polynomial(datum.polytope, integrand)
    return Comparison(lhs, rhs)


def fibre_identity_check(
    datum: SphericalDatum, k_vector: Sequence[int], chi: Optional[Sequence[Fraction]] = None
) -> bool:
    sides = fibre_sides(datum, k_vector, chi)
    if not sides.holds:
        logger.warning(f"fibre identity fails for k={tuple(k_vector)}: {sides.lhs} != {sides.rhs}")
    return sides.holds


def section_counts(
    datum: SphericalDatum, k_vector: Sequence[int], chi: Optional[Sequence[Fraction]] = None
) -> Comparison:
    """Level-one section counts two ways: Weyl dimensions times prod_A C(k_A + theta_A, k_A),
    and Weyl dimensions summed over the lattice points of the lift.

    Raises:
        NonIntegralLevel: kappa_P or some theta_A at a level-one weight is not integral.
    """
    lifted = lift_polytope(datum, k_vector, chi)
    datum = _theta_datum(datum, chi)
    lhs = Fraction(0)
    for point, dim in level_weights(datum, 1).entries:
        theta = datum.theta(point)
        if not _integral_point(theta):
            raise NonIntegralLevel(f"theta{tuple(theta)} is not integral at {point}")
        lhs += dim * math.prod(math.comb(int(k) + int(t), int(k)) for k, t in zip(k_vector, theta))

    base = tuple(datum.kappa_p) + (Fraction(0),) * (lifted.dim - datum.r0)
    rhs = Fraction(0)
    for m in lattice_points(_translated(lifted, base), get_config().workers):
        point = tuple(b + x for b, x in zip(datum.kappa_p, m[: datum.r0]))
        rhs += weyl_dimension(datum, point, 1)
    return Comparison(lhs, rhs)


def section_count_check(
    datum: SphericalDatum, k_vector: Sequence[int], chi: Optional[Sequence[Fraction]] = None
) -> bool:
    return section_counts(datum, k_vector, chi).holds


__all__ = [
    "Adjudication",
    "Comparison",
    "FutakiEstimate",
    "LevelWeights",
    "adjudicate",
    "fibre_identity_check",
    "fibre_sides",
    "futaki_estimate",
    "hilbert",
    "hilbert_coefficients",
    "level_weights",
    "lift_polytope",
    "s1_expansion",
    "s_sums",
    "section_count_check",
    "section_counts",
    "weyl_dimension",
]
