"""Stability verdicts from the weighted barycenter.

The variety is uniformly weighted K-stable exactly when b_g - kappa_P lies in the relative
interior of the cone spanned by the spherical roots. ``criterion`` decides this, ``destabilizer``
produces an affine witness when it fails, ``ratio_scan`` samples D/J over a normalized family
and ``soliton_solve`` finds the exp-affine weight that balances the barycenter.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import partial
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.optimize import bisect

from weighted_kstab.errors import EmptyFamily, NoSignChange
from weighted_kstab.functionals import barycenter_with_error, evaluate
from weighted_kstab.kstab_env import EngineConfig, get_config
from weighted_kstab.rational_geometry import (
    HPolytope,
    Vector,
    dot,
    scale,
    simplicial_cone_coefficients,
    sub,
    vertices,
)
from weighted_kstab.spherical_datum import (
    SphericalDatum,
    central_basis,
    is_central,
    valuation_cone_rays,
)
from weighted_kstab.test_config import Piece, TestConfig, affine, normalize, prune
from weighted_kstab.utils import parallel_map
from weighted_kstab.weights import WeightFunction

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]


class VerdictStatus(str, Enum):
    CRITERION_HOLDS = "CriterionHolds"
    BOUNDARY = "Boundary"
    FAILS = "Fails"


class Destabilizer(NamedTuple):
    """Affine direction v whose test configuration has D = -v . (b_g - kappa_P) <= 0."""

    direction: Vector
    D: Fraction


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    coefficients: Optional[tuple[Number, ...]] = None
    witness: Optional[Vector] = None
    barycenter: tuple[Number, ...] = ()
    residual: Number = 0
    warning: Optional[str] = None

    @property
    def holds(self) -> bool:
        return self.status == VerdictStatus.CRITERION_HOLDS


def _classify(coefficients: Sequence[Number], zero: Number = 0) -> VerdictStatus:
    if all(c > zero for c in coefficients):
        return VerdictStatus.CRITERION_HOLDS
    if all(c >= -zero for c in coefficients):
        return VerdictStatus.BOUNDARY
    return VerdictStatus.FAILS


def _exact_criterion(datum: SphericalDatum, weight: WeightFunction) -> Verdict:
    b, _ = barycenter_with_error(datum, weight)
    delta = sub(b, datum.kappa_p)
    coefficients = simplicial_cone_coefficients(delta, datum.spherical_roots)
    if coefficients is None:
        return Verdict(VerdictStatus.FAILS, barycenter=b)
    return Verdict(_classify(coefficients), coefficients=coefficients, barycenter=b)


def _numeric_criterion(datum: SphericalDatum, weight: WeightFunction, config: EngineConfig) -> Verdict:
    b, error = barycenter_with_error(datum, weight, config)
    delta = np.array(b, dtype=float) - np.array([float(k) for k in datum.kappa_p], dtype=float)
    guard = config.guard_factor * max(error, config.quadrature_floor)
    sigmas = np.array([[float(a) for a in s] for s in datum.spherical_roots], dtype=float)
    if len(sigmas):
        coefficients, *_ = np.linalg.lstsq(sigmas.T, delta, rcond=None)
        residual = float(np.linalg.norm(delta - sigmas.T @ coefficients))
    else:
        coefficients = np.zeros(0)
        residual = float(np.linalg.norm(delta))
    coefficients = tuple(float(c) for c in coefficients)

    if residual > guard:
        return Verdict(VerdictStatus.FAILS, coefficients, barycenter=b, residual=residual)
    if len(coefficients) and min(abs(c) for c in coefficients) > guard:
        return Verdict(_classify(coefficients), coefficients, barycenter=b, residual=residual)
    warning = f"residual {residual:.3e} is within {guard:.3e} of the quadrature error; no verdict"
    logger.warning(warning)
    return Verdict(VerdictStatus.BOUNDARY, coefficients, barycenter=b, residual=residual, warning=warning)


def criterion(datum: SphericalDatum, weight: WeightFunction, config: Optional[EngineConfig] = None) -> Verdict:
    """Solve b_g - kappa_P = sum c_j sigma_j and classify the coefficients.

    Polynomial weights are decided exactly. Exp-affine weights are decided only when the
    least-squares residual and the coefficients clear ``guard_factor`` times the quadrature
    error; otherwise the status is Boundary with a warning.
    """
    if weight.exact:
        verdict = _exact_criterion(datum, weight)
    else:
        verdict = _numeric_criterion(datum, weight, config or get_config())
    logger.info(f"criterion on {datum.name}: {verdict.status.value}")
    return verdict


def _search_box(datum: SphericalDatum) -> HPolytope:
    rows = [(scale(Fraction(-1), sigma), Fraction(0)) for sigma in datum.spherical_roots]
    for i in range(datum.r0):
        unit = tuple(Fraction(int(i == j)) for j in range(datum.r0))
        rows.append((unit, Fraction(1)))
        rows.append((scale(Fraction(-1), unit), Fraction(1)))
    return HPolytope.from_inequalities(rows, datum.r0)


def destabilizer(datum: SphericalDatum, weight: WeightFunction) -> Optional[Destabilizer]:
    """Maximize v . (b_g - kappa_P) over the valuation cone cut by the unit box.

    The optimum is attained at a vertex of the box. A positive optimum is returned; so is a
    zero optimum attained off V_z. Vertices are scanned in lexicographic order and the first
    maximizer wins.
    """
    b, _ = barycenter_with_error(datum, weight)
    delta = tuple(Fraction(x) for x in sub(b, datum.kappa_p))
    candidates = vertices(_search_box(datum))
    best = max(dot(v, delta) for v in candidates)
    for v in candidates:
        if dot(v, delta) != best:
            continue
        if best > 0 or not is_central(datum, v):
            found = Destabilizer(v, -best)
            logger.info(f"destabilizer on {datum.name}: v={v}, D={-best}")
            return found
    return None


# uniform ratio scan


@dataclass(frozen=True)
class ScanFamily:
    """Grid of normalized configurations.

    Directions default to the extreme rays of the valuation cone together with +/- a basis
    of V_z. Every direction d gives the affine member and, when ``two_piece`` is set, the
    members min(0, t d . (x - s)) with s = kappa_P + tau (v - kappa_P) for each vertex v.
    """

    t_values: tuple[Fraction, ...] = (Fraction(1, 2), Fraction(1), Fraction(2))
    tau_values: tuple[Fraction, ...] = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    directions: Optional[tuple[Vector, ...]] = None
    two_piece: bool = True


@dataclass(frozen=True)
class ScanResult:
    min_ratio: Optional[Number]
    argmin: Optional[TestConfig]
    count: int
    status: VerdictStatus
    destabilizer: Optional[Destabilizer] = None
    ratios: tuple[Number, ...] = field(default=(), repr=False)


def scan_directions(datum: SphericalDatum) -> list[Vector]:
    central = central_basis(datum)
    return valuation_cone_rays(datum) + central + [scale(Fraction(-1), c) for c in central]


def scan_members(datum: SphericalDatum, family: ScanFamily) -> list[TestConfig]:
    """Normalized, pruned family members, deduplicated in generation order."""
    directions = family.directions if family.directions is not None else tuple(scan_directions(datum))
    kappa = datum.kappa_p
    raw: list[Sequence[Piece]] = []
    for d in directions:
        raw.append(affine(datum, d).pieces)
        if not family.two_piece:
            continue
        for t in family.t_values:
            slope = scale(t, d)
            for v in datum.vertices:
                for tau in family.tau_values:
                    s = tuple(k + tau * (x - k) for k, x in zip(kappa, v))
                    raw.append((Piece(Fraction(0), tuple(Fraction(0) for _ in d)), Piece(-dot(slope, s), slope)))

    members: list[TestConfig] = []
    for pieces in raw:
        kept = prune(datum, pieces)
        if not kept:
            continue
        member = normalize(datum, TestConfig(kept))
        if member not in members:
            members.append(member)
    return members


def _ratio(member: TestConfig, datum: SphericalDatum, weight: WeightFunction, config: EngineConfig):
    report = evaluate(datum, member, weight, config)
    return report.D, report.J


def ratio_scan(
    datum: SphericalDatum,
    weight: WeightFunction,
    family: Optional[ScanFamily] = None,
    config: Optional[EngineConfig] = None,
) -> ScanResult:
    """Smallest D/J over the family; an upper bound on the uniform stability constant.

    When the criterion fails the scan is skipped and the destabilizer is reported instead.

    Raises:
        EmptyFamily: every member has J = 0.
    """
    config = config or get_config()
    family = family or ScanFamily()
    verdict = criterion(datum, weight, config)
    if verdict.status == VerdictStatus.FAILS:
        witness = destabilizer(datum, weight) if weight.exact else None
        return ScanResult(None, None, 0, verdict.status, destabilizer=witness)

    members = scan_members(datum, family)
    values = parallel_map(partial(_ratio, datum=datum, weight=weight, config=config), members, config.workers)
    scored = [(d / j, m) for (d, j), m in zip(values, members) if j > 0]
    if not scored:
        raise EmptyFamily(f"all {len(members)} members of the scan have J = 0")
    best_ratio, best = min(scored, key=lambda pair: pair[0])
    logger.info(f"ratio scan on {datum.name}: {len(scored)} members, min D/J = {best_ratio}")
    return ScanResult(best_ratio, best, len(scored), verdict.status, ratios=tuple(r for r, _ in scored))


# soliton weights


@dataclass(frozen=True)
class SolitonResult:
    c: float
    residual: float
    bracket: tuple[float, float]
    converged: bool


def soliton_weight(direction: Sequence[float], c: float) -> WeightFunction:
    return WeightFunction.exp_affine([c * float(a) for a in direction])


def soliton_residual(
    datum: SphericalDatum, direction: Sequence[float], c: float, config: Optional[EngineConfig] = None
) -> float:
    """sum_A dir_A xi_A . (b_{g_c} - kappa_P) for g_c = exp(c sum_A dir_A theta_A)."""
    b, _ = barycenter_with_error(datum, soliton_weight(direction, c), config)
    delta = np.array(b, dtype=float) - np.array([float(k) for k in datum.kappa_p], dtype=float)
    axis = np.zeros(datum.r0)
    for a, xi in zip(direction, datum.torus):
        axis = axis + float(a) * np.array([float(x) for x in xi])
    return float(delta @ axis)


def soliton_solve(
    datum: SphericalDatum,
    direction: Sequence[float],
    bracket: Optional[tuple[float, float]] = None,
    config: Optional[EngineConfig] = None,
) -> SolitonResult:
    """Bisect c until the projected barycenter residual falls below ``soliton_tolerance``.

    Raises:
        NoSignChange: the residual has the same sign at both ends of the bracket.
    """
    config = config or get_config()
    if len(direction) != datum.torus_rank:
        raise ValueError(f"direction has length {len(direction)} but the torus rank is {datum.torus_rank}")
    low, high = bracket or config.soliton_bracket

    def residual(c: float) -> float:
        return soliton_residual(datum, direction, c, config)

    at_low, at_high = residual(low), residual(high)
    logger.debug(f"soliton bracket ({low}, {high}): residuals {at_low:.3e}, {at_high:.3e}")
    if abs(at_low) < config.soliton_tolerance:
        return SolitonResult(low, at_low, (low, high), True)
    if abs(at_high) < config.soliton_tolerance:
        return SolitonResult(high, at_high, (low, high), True)
    if np.sign(at_low) == np.sign(at_high):
        raise NoSignChange(f"residual has the same sign at c={low} ({at_low:.3e}) and c={high} ({at_high:.3e})")

    c = bisect(residual, low, high, xtol=config.soliton_tolerance * 1e-2, maxiter=200)
    value = residual(c)
    converged = abs(value) < config.soliton_tolerance
    if not converged:
        logger.warning(f"soliton residual {value:.3e} above tolerance {config.soliton_tolerance:.1e}")
    logger.info(f"soliton on {datum.name} along {tuple(direction)}: c*={c}")
    return SolitonResult(float(c), value, (low, high), converged)
