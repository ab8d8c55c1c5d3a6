"""Weighted non-Archimedean functionals and the modified Futaki invariant of a test
configuration, as integrals over the region decomposition of Delta_+.

Polynomial weights run through the exact backend and every report field is a Fraction;
exp-affine weights run the same formulas through the numeric backend and report floats.
"""

import logging
import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

import numpy as np

from weighted_kstab.errors import DegeneratePolytope, Infeasible
from weighted_kstab.integration import (
    affine_polynomial,
    evaluator,
    facet_integral_lattice,
    facet_integral_numeric,
    integrate_numeric,
    integrate_polynomial,
)
from weighted_kstab.kstab_env import EngineConfig, get_config
from weighted_kstab.rational_geometry import HPolytope, Inequality, dot, primitive
from weighted_kstab.spherical_datum import (
    SphericalDatum,
    degree,
    homogeneity_defect,
    pi_polynomial,
)
from weighted_kstab.test_config import TestConfig, regions
from weighted_kstab.weights import WeightFunction, euler_evaluator, euler_pairing, pullback

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]


class _ExactBackend:
    """Integrands are sympy polynomials over QQ; integrals are Fractions."""

    exact = True

    def __init__(self, datum: SphericalDatum, weight: WeightFunction) -> None:
        self.dim = datum.r0
        g = pullback(weight, datum).polynomial
        pi = pi_polynomial(datum)
        self.weighted = g * pi
        self.euler = euler_pairing(weight, datum).polynomial * pi
        self.defect = g * homogeneity_defect(datum)
        self.error = 0.0

    def affine(self, c: Fraction, gradient: Sequence[Fraction]):
        return affine_polynomial(gradient, c, self.dim)

    def coordinate(self, i: int):
        return affine_polynomial(tuple(Fraction(int(i == j)) for j in range(self.dim)), Fraction(0), self.dim)

    def times(self, a, b):
        return a * b

    def integral(self, polytope: HPolytope, integrand) -> Fraction:
        return integrate_polynomial(polytope, integrand)

    def facet_integral(self, polytope: HPolytope, index: int, integrand) -> Fraction:
        return facet_integral_lattice(polytope, index, integrand, strict=False)


class _NumericBackend:
    """Integrands are vectorized evaluators; integrals are floats with accumulated error."""

    exact = False

    def __init__(self, datum: SphericalDatum, weight: WeightFunction, config: EngineConfig) -> None:
        self.dim = datum.r0
        self.config = config
        g = pullback(weight, datum).evaluator()
        pi = evaluator(pi_polynomial(datum))
        defect = evaluator(homogeneity_defect(datum))
        euler = euler_evaluator(weight, datum)
        self.weighted = lambda x: g(x) * pi(x)
        self.euler = lambda x: euler(x) * pi(x)
        self.defect = lambda x: g(x) * defect(x)
        self.error = 0.0

    def affine(self, c: Fraction, gradient: Sequence[Fraction]):
        slope = np.array([float(a) for a in gradient], dtype=float)
        offset = float(c)
        return lambda x: offset + np.asarray(x, dtype=float) @ slope

    def coordinate(self, i: int):
        return lambda x: np.asarray(x, dtype=float)[:, i]

    def times(self, a, b):
        return lambda x: a(x) * b(x)

    def integral(self, polytope: HPolytope, integrand) -> float:
        value, error = integrate_numeric(polytope, integrand, self.config)
        self.error += error
        return value

    def facet_integral(self, polytope: HPolytope, index: int, integrand) -> float:
        value, error = facet_integral_numeric(polytope, index, integrand, strict=False, config=self.config)
        self.error += error
        return value


def _backend(datum: SphericalDatum, weight: WeightFunction, config: Optional[EngineConfig]):
    if weight.exact:
        return _ExactBackend(datum, weight)
    return _NumericBackend(datum, weight, config or get_config())


@dataclass(frozen=True)
class FunctionalReport:
    V: Number
    Vg: Number
    E: Number
    J: Number
    D: Number
    L: Number
    M: Number
    M_boundary: Number
    Fut: Number
    Fut_closed: Number
    barycenter: tuple[Number, ...]
    reduced_central_fibre: bool
    multiplicities: tuple[int, ...] = ()
    quadrature_error: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def facet_weights(datum: SphericalDatum) -> list[Fraction]:
    """(n_D - kappa_P . w_D) / s_D with w_D = s_D * u_D primitive: the density of dsigma against
    dsigma_0 / |u_D| on each facet."""
    out = []
    for facet in datum.facets:
        _, s = primitive(facet.normal)
        out.append((facet.n_D - dot(datum.kappa_p, facet.normal)) / s)
    return out


def evaluate(
    datum: SphericalDatum,
    tc: TestConfig,
    weight: WeightFunction,
    config: Optional[EngineConfig] = None,
) -> FunctionalReport:
    """All functionals of ``tc`` in one pass over its regions."""
    backend = _backend(datum, weight, config)
    decomposition = regions(datum, tc)
    n_factorial = math.factorial(datum.n)
    kappa = datum.kappa_p
    tau = facet_weights(datum)

    int_gpi = backend.integral(datum.polytope, backend.weighted)
    int_f = 0
    int_gradient = 0
    boundary = 0
    kappa_gradient = 0
    int_f_euler = 0
    defect = 0
    correction = 0
    for region in decomposition.regions:
        omega = region.polytope
        f = backend.affine(region.c, region.gradient)
        int_f += backend.integral(omega, backend.times(f, backend.weighted))
        slope = backend.affine(-dot(region.gradient, kappa), region.gradient)
        int_gradient += backend.integral(omega, backend.times(slope, backend.weighted))
        region_gpi = backend.integral(omega, backend.weighted)
        kappa_gradient += dot(kappa, region.gradient) * region_gpi
        int_f_euler += backend.integral(omega, backend.times(f, backend.euler))
        defect += backend.integral(omega, backend.times(f, backend.defect))
        correction += (1 - Fraction(1, region.multiplicity)) * region_gpi
        f_weighted = backend.times(f, backend.weighted)
        for index, weight_d in enumerate(tau):
            boundary += weight_d * backend.facet_integral(omega, index, f_weighted)

    V = degree(datum)
    Vg = n_factorial * int_gpi
    E = n_factorial * int_f / Vg
    top = tc.maximum(datum)
    L = tc(kappa)
    M = -n_factorial * int_gradient / Vg
    bracket = boundary - kappa_gradient - datum.n * int_f - int_f_euler - defect
    M_boundary = -n_factorial * bracket / Vg
    Fut = (Vg / V) * (M + n_factorial * correction / Vg)
    int_pi = V / n_factorial
    Fut_closed = (int_gpi / (2 * int_pi)) * (
        -boundary + datum.n * int_f + kappa_gradient + int_f_euler + defect + correction
    )
    b = tuple(
        backend.integral(datum.polytope, backend.times(backend.coordinate(i), backend.weighted)) / int_gpi
        for i in range(datum.r0)
    )
    report = FunctionalReport(
        V=V,
        Vg=Vg,
        E=E,
        J=top - E,
        D=L - E,
        L=L,
        M=M,
        M_boundary=M_boundary,
        Fut=Fut,
        Fut_closed=Fut_closed,
        barycenter=tuple(b),
        reduced_central_fibre=decomposition.reduced_central_fibre,
        multiplicities=decomposition.multiplicities,
        quadrature_error=backend.error,
    )
    logger.info(f"functionals of {len(tc.pieces)}-piece configuration on {datum.name}: E={E}, D={L - E}, M={M}")
    return report


def barycenter_with_error(
    datum: SphericalDatum, weight: WeightFunction, config: Optional[EngineConfig] = None
) -> tuple[tuple[Number, ...], float]:
    """b_g = (n!/Vg) * integral of x g pi, with the quadrature error (0 on the exact path)."""
    backend = _backend(datum, weight, config)
    total = backend.integral(datum.polytope, backend.weighted)
    moments = tuple(
        backend.integral(datum.polytope, backend.times(backend.coordinate(i), backend.weighted))
        for i in range(datum.r0)
    )
    point = tuple(m / total for m in moments)
    error = backend.error / abs(total) if not backend.exact else 0.0
    return point, error


def barycenter(
    datum: SphericalDatum, weight: WeightFunction, config: Optional[EngineConfig] = None
) -> tuple[Number, ...]:
    return barycenter_with_error(datum, weight, config)[0]


_COMPARED = ("V", "Vg", "E", "J", "D", "L", "M", "M_boundary", "Fut", "Fut_closed")


def deviation(first: FunctionalReport, second: FunctionalReport) -> Number:
    """Largest absolute difference between two reports, barycenter included."""
    gaps = [abs(getattr(first, name) - getattr(second, name)) for name in _COMPARED]
    gaps += [abs(a - b) for a, b in zip(first.barycenter, second.barycenter)]
    return max(gaps)


def lifting_invariance_check(
    datum: SphericalDatum,
    tc: TestConfig,
    weight: WeightFunction,
    chi_shift: Sequence[Fraction],
) -> Fraction:
    """Deviation between the report for (chi, g) and for (chi + chi', g(. - chi'))."""
    shift = tuple(Fraction(c) for c in chi_shift)
    base = evaluate(datum, tc, weight)
    lifted = datum.with_chi(tuple(c + s for c, s in zip(datum.chi, shift)))
    moved = evaluate(lifted, tc, weight.shifted(shift))
    return deviation(base, moved)


@dataclass(frozen=True)
class MarginalBin:
    low: Number
    high: Number
    mass: Number

    @property
    def density(self) -> Number:
        return self.mass / (self.high - self.low)


def dh_marginal(
    datum: SphericalDatum,
    weight: WeightFunction,
    axis: int,
    bins: int,
    config: Optional[EngineConfig] = None,
) -> list[MarginalBin]:
    """Push-forward of n! g pi dx along theta_axis, binned on equal-width intervals."""
    if not 0 <= axis < datum.torus_rank:
        raise ValueError(f"axis {axis} outside torus rank {datum.torus_rank}")
    if bins < 1:
        raise ValueError("bins must be positive")
    backend = _backend(datum, weight, config)
    xi, chi = datum.torus[axis], datum.chi[axis]
    values = [dot(xi, v) + chi for v in datum.vertices]
    low, high = min(values), max(values)
    width = (high - low) / bins
    out = []
    for k in range(bins):
        a, b = low + k * width, low + (k + 1) * width
        slab = datum.polytope.with_inequalities(
            [Inequality(xi, chi - a), Inequality(tuple(-x for x in xi), b - chi)]
        )
        try:
            mass = math.factorial(datum.n) * backend.integral(slab, backend.weighted)
        except (Infeasible, DegeneratePolytope):
            mass = Fraction(0) if backend.exact else 0.0
        out.append(MarginalBin(a, b, mass))
    return out


def total_mass(rows: Sequence[MarginalBin]) -> Number:
    return sum((r.mass for r in rows), Fraction(0))


__all__ = [
    "FunctionalReport",
    "MarginalBin",
    "barycenter",
    "barycenter_with_error",
    "deviation",
    "dh_marginal",
    "evaluate",
    "facet_weights",
    "lifting_invariance_check",
]
