"""Weight functions g on the torus polytope and their pullback to Delta_+.

Polynomial weights are kept as term lists in theta_1..theta_r and pulled back exactly through
theta_A = xi_A . x + chi_A. Exp-affine weights exp(sum c_A theta_A + constant) are only ever
evaluated numerically.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np
from sympy import Poly

from weighted_kstab.documents import ExpAffineWeightDocument, parse_weight, read_document
from weighted_kstab.errors import NonPolynomial, RankMismatch
from weighted_kstab.integration import (
    Evaluator,
    Term,
    affine_polynomial,
    compose,
    constant,
    evaluate_terms,
    evaluator,
    terms,
)
from weighted_kstab.rational_geometry import Vector, vector
from weighted_kstab.spherical_datum import SphericalDatum

logger = logging.getLogger(__name__)


class WeightKind(str, Enum):
    POLYNOMIAL = "polynomial"
    EXP_AFFINE = "exp_affine"


@dataclass(frozen=True)
class WeightFunction:
    """g(theta) as exact terms (polynomial kind) or as exp(coeffs . theta + constant)."""

    kind: WeightKind
    terms: tuple[Term, ...] = ()
    coeffs: tuple[float, ...] = ()
    constant: float = 0.0

    @classmethod
    def polynomial(cls, rows: Sequence[tuple[Any, Sequence[int]]]) -> "WeightFunction":
        merged: dict[tuple[int, ...], Fraction] = {}
        for coef, powers in rows:
            powers = tuple(int(e) for e in powers)
            if not any(powers):
                powers = ()
            merged[powers] = merged.get(powers, Fraction(0)) + Fraction(coef)
        return cls(WeightKind.POLYNOMIAL, tuple((c, e) for e, c in sorted(merged.items()) if c != 0))

    @classmethod
    def one(cls) -> "WeightFunction":
        return cls.polynomial([(1, ())])

    @classmethod
    def exp_affine(cls, coeffs: Sequence[float], constant: float = 0.0) -> "WeightFunction":
        return cls(WeightKind.EXP_AFFINE, coeffs=tuple(float(c) for c in coeffs), constant=float(constant))

    @property
    def exact(self) -> bool:
        return self.kind == WeightKind.POLYNOMIAL

    @property
    def rank(self) -> Optional[int]:
        """Torus rank the weight needs; None for a constant polynomial."""
        if self.kind == WeightKind.EXP_AFFINE:
            return len(self.coeffs)
        lengths = {len(e) for _, e in self.terms if e}
        return lengths.pop() if len(lengths) == 1 else (None if not lengths else -1)

    def padded_terms(self, rank: int) -> list[Term]:
        return [(c, e if e else (0,) * rank) for c, e in self.terms]

    def partial(self, axis: int, rank: int) -> list[Term]:
        """Terms of dg/dtheta_axis."""
        rows = []
        for c, e in self.padded_terms(rank):
            if e[axis]:
                lowered = tuple(x - 1 if i == axis else x for i, x in enumerate(e))
                rows.append((c * e[axis], lowered))
        return rows

    def shifted(self, chi_shift: Sequence[Fraction]) -> "WeightFunction":
        """theta -> g(theta - chi_shift), exactly."""
        if not self.exact:
            raise NonPolynomial("only polynomial weights can be shifted exactly")
        shift = vector(chi_shift)
        rank = len(shift)
        if rank == 0:
            return self
        maps = [
            (tuple(Fraction(int(i == j)) for j in range(rank)), -shift[i]) for i in range(rank)
        ]
        return WeightFunction.polynomial(terms(compose(self.padded_terms(rank), maps, rank)))

    def value(self, theta: Sequence[Fraction]) -> Fraction:
        if not self.exact:
            raise NonPolynomial("exp-affine weights have no exact values")
        return evaluate_terms(self.padded_terms(len(theta)), theta)


def _check_rank(g: WeightFunction, datum: SphericalDatum) -> None:
    rank = g.rank
    if rank is not None and rank != datum.torus_rank:
        raise RankMismatch(f"weight has rank {rank} but the datum's torus rank is {datum.torus_rank}")


def load_weight(document: Mapping[str, Any]) -> WeightFunction:
    doc = parse_weight(document)
    if isinstance(doc, ExpAffineWeightDocument):
        return WeightFunction.exp_affine(doc.coeffs, doc.constant)
    return WeightFunction.polynomial([(t.coef, t.powers) for t in doc.terms])


def read_weight(path: str | Path) -> WeightFunction:
    return load_weight(read_document(path))


@dataclass(frozen=True)
class PulledBackWeight:
    """g(theta(x)) on Delta_+: a polynomial for exact weights, an evaluator otherwise."""

    chi: tuple[Fraction, ...]
    polynomial: Optional[Poly] = None
    numeric: Optional[Evaluator] = None

    @property
    def exact(self) -> bool:
        return self.polynomial is not None

    def evaluator(self) -> Evaluator:
        return self.numeric if self.polynomial is None else evaluator(self.polynomial)


def _theta_maps(datum: SphericalDatum) -> list[tuple[Vector, Fraction]]:
    return [(xi, c) for xi, c in zip(datum.torus, datum.chi)]


def _exp_evaluator(g: WeightFunction, datum: SphericalDatum) -> Evaluator:
    xi = np.array([[float(a) for a in row] for row in datum.torus], dtype=float).reshape(
        datum.torus_rank, datum.r0
    )
    coeffs = np.array(g.coeffs, dtype=float)
    slope = coeffs @ xi if len(coeffs) else np.zeros(datum.r0)
    intercept = g.constant + float(coeffs @ np.array([float(c) for c in datum.chi])) if len(coeffs) else g.constant

    def h(points: np.ndarray) -> np.ndarray:
        return np.exp(np.asarray(points, dtype=float) @ slope + intercept)

    return h


def pullback(g: WeightFunction, datum: SphericalDatum) -> PulledBackWeight:
    """Substitute theta_A = xi_A . x + chi_A.

    Raises:
        RankMismatch: the weight's rank differs from the torus rank.
    """
    _check_rank(g, datum)
    if not g.exact:
        return PulledBackWeight(datum.chi, numeric=_exp_evaluator(g, datum))
    rows = g.padded_terms(datum.torus_rank)
    if datum.torus_rank == 0:
        return PulledBackWeight(datum.chi, polynomial=constant(sum((c for c, _ in rows), Fraction(0)), datum.r0))
    return PulledBackWeight(datum.chi, polynomial=compose(rows, _theta_maps(datum), datum.r0))


def euler_pairing(g: WeightFunction, datum: SphericalDatum) -> PulledBackWeight:
    """<x, grad(g o theta)> = sum_A (xi_A . x) (dg/dtheta_A)(theta(x)), exactly.

    Raises:
        RankMismatch: the weight's rank differs from the torus rank.
        NonPolynomial: g is exp-affine.
    """
    _check_rank(g, datum)
    if not g.exact:
        raise NonPolynomial("the Euler pairing is exact only for polynomial weights")
    result = constant(Fraction(0), datum.r0)
    maps = _theta_maps(datum)
    for axis, xi in enumerate(datum.torus):
        derivative = g.partial(axis, datum.torus_rank)
        if derivative:
            result = result + affine_polynomial(xi, Fraction(0), datum.r0) * compose(derivative, maps, datum.r0)
    return PulledBackWeight(datum.chi, polynomial=result)


def euler_evaluator(g: WeightFunction, datum: SphericalDatum) -> Evaluator:
    """Numeric <x, grad(g o theta)>; for exp-affine g this is g(theta(x)) * (sum c_A xi_A) . x."""
    _check_rank(g, datum)
    if g.exact:
        return evaluator(euler_pairing(g, datum).polynomial)
    base = _exp_evaluator(g, datum)
    direction = np.zeros(datum.r0)
    for c, xi in zip(g.coeffs, datum.torus):
        direction = direction + c * np.array([float(a) for a in xi])

    def h(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return base(points) * (points @ direction)

    return h


@dataclass(frozen=True)
class PositivityAudit:
    passed: bool
    samples: int
    witness: Optional[Vector] = None
    value: Optional[Any] = None


def positivity_audit(g: WeightFunction, datum: SphericalDatum, grid: int = 4) -> PositivityAudit:
    """Sample g o theta at the vertices of Delta_+ and at the interior points of a rational grid
    over its bounding box. A pass is evidence, not a certificate."""
    verts = list(datum.vertices)
    lows = [min(v[i] for v in verts) for i in range(datum.r0)]
    highs = [max(v[i] for v in verts) for i in range(datum.r0)]
    samples = list(verts)
    for steps in product(range(1, grid), repeat=datum.r0):
        point = tuple(lo + Fraction(s, grid) * (hi - lo) for lo, hi, s in zip(lows, highs, steps))
        if datum.polytope.interior_contains(point):
            samples.append(point)

    if g.exact:
        pulled = pullback(g, datum).polynomial
        values = [evaluate_terms(terms(pulled), p) for p in samples]
    else:
        h = pullback(g, datum).numeric
        values = list(h(np.array([[float(x) for x in p] for p in samples], dtype=float)))
    for point, value in zip(samples, values):
        if value <= 0:
            logger.warning(f"weight is {value} <= 0 at {point}")
            return PositivityAudit(False, len(samples), point, value)
    return PositivityAudit(True, len(samples))
