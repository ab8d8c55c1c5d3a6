"""Integration over rational polytopes.

The exact path integrates sympy polynomials over QQ by triangulating, pulling each simplex
back to the standard simplex and applying ``int x^a = prod(a_i!) / (|a| + d)!``. Interior
measures are lattice-normalized; facet measures are only exposed as ``dsigma_0 / |u|`` for
the primitive normal u, which stays rational.

The numeric path is a Grundmann-Moeller rule (modepy) on a uniformly bisected triangulation.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, partial
from typing import Callable, Optional, Sequence

import modepy
import numpy as np
import sympy
from sympy import QQ, Poly

from weighted_kstab.errors import Infeasible, NoConvergence, NotAFacet, Unbounded
from weighted_kstab.kstab_env import EngineConfig, get_config
from weighted_kstab.rational_geometry import (
    HPolytope,
    Simplex,
    Vector,
    affine_rank,
    determinant,
    primitive,
    triangulate,
    vertices,
)
from weighted_kstab.utils import parallel_map

logger = logging.getLogger(__name__)

Term = tuple[Fraction, tuple[int, ...]]
AffineMap = tuple[Sequence[Fraction], Fraction]
Evaluator = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def generators(dim: int) -> tuple[sympy.Symbol, ...]:
    return tuple(sympy.symbols(f"x0:{dim}")) if dim else ()


def to_sympy(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


def from_sympy(value) -> Fraction:
    return Fraction(int(value.p), int(value.q))


def constant(value: Fraction, dim: int) -> Poly:
    return Poly(to_sympy(Fraction(value)), *generators(dim), domain=QQ)


def from_terms(terms: Sequence[Term], dim: int) -> Poly:
    coefficients: dict[tuple[int, ...], Fraction] = {}
    for coef, exps in terms:
        coefficients[tuple(exps)] = coefficients.get(tuple(exps), Fraction(0)) + Fraction(coef)
    rep = {exps: to_sympy(c) for exps, c in coefficients.items() if c != 0}
    if not rep:
        return constant(Fraction(0), dim)
    return Poly.from_dict(rep, *generators(dim), domain=QQ)


def polynomial(expr, dim: int) -> Poly:
    """Build a polynomial from a sympy expression in the symbols ``generators(dim)``."""
    return Poly(sympy.sympify(expr), *generators(dim), domain=QQ)


def terms(p: Poly) -> list[Term]:
    """Non-zero (coefficient, exponents) pairs of p."""
    return [(from_sympy(c), tuple(m)) for m, c in p.terms() if c != 0]


def affine_polynomial(linear: Sequence[Fraction], offset: Fraction, dim: int) -> Poly:
    rows = [(Fraction(offset), (0,) * dim)]
    for i, c in enumerate(linear):
        rows.append((Fraction(c), tuple(int(i == j) for j in range(dim))))
    return from_terms(rows, dim)


def evaluate_terms(rows: Sequence[Term], point: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for coef, exps in rows:
        value = coef
        for x, e in zip(point, exps):
            if e:
                value *= Fraction(x) ** e
        total += value
    return total


def evaluate(p: Poly, point: Sequence[Fraction]) -> Fraction:
    return evaluate_terms(terms(p), point)


def evaluator(p: Poly) -> Evaluator:
    """Vectorized float evaluation of p on an (N, d) array of points."""
    rows = terms(p)
    if not rows:
        return lambda points: np.zeros(len(points))
    coefs = np.array([float(c) for c, _ in rows])
    exps = np.array([e for _, e in rows], dtype=int)

    def h(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if exps.shape[1] == 0:
            return np.full(len(points), coefs.sum())
        return np.prod(points[:, None, :] ** exps[None, :, :], axis=2) @ coefs

    return h


def compose(rows: Sequence[Term], maps: Sequence[AffineMap], dim: int) -> Poly:
    """Substitute ``x_i = maps[i].linear . y + maps[i].offset`` into a term list; the result is
    a polynomial in ``generators(dim)``."""
    images = [affine_polynomial(linear, offset, dim) for linear, offset in maps]
    powers: dict[tuple[int, int], Poly] = {}

    def power(i: int, e: int) -> Poly:
        if (i, e) not in powers:
            powers[(i, e)] = images[i] ** e
        return powers[(i, e)]

    result = constant(Fraction(0), dim)
    for coef, exps in rows:
        term = constant(coef, dim)
        for i, e in enumerate(exps):
            if e:
                term = term * power(i, e)
        result = result + term
    return result


def _monomial_over_standard_simplex(exps: tuple[int, ...], d: int) -> Fraction:
    numerator = math.prod(math.factorial(a) for a in exps)
    return Fraction(numerator, math.factorial(sum(exps) + d))


def simplex_integral(simplex: Simplex, p: Poly) -> Fraction:
    base = simplex.vertices[0]
    edges = simplex.edges
    d = len(base)
    jacobian = abs(determinant(edges))
    if jacobian == 0:
        return Fraction(0)
    maps = [(tuple(edge[i] for edge in edges), base[i]) for i in range(d)]
    pulled = compose(terms(p), maps, d)
    total = sum(
        (c * _monomial_over_standard_simplex(exps, d) for c, exps in terms(pulled)), Fraction(0)
    )
    return jacobian * total


def integrate_polynomial(polytope: HPolytope, p: Poly, workers: Optional[int] = None) -> Fraction:
    """Exact lattice-normalized integral of p over a full-dimensional polytope.

    Raises:
        DegeneratePolytope: the polytope is not full-dimensional.
    """
    if polytope.dim == 0:
        return evaluate(p, ())
    simplices = triangulate(polytope)
    workers = get_config().workers if workers is None else workers
    parts = parallel_map(partial(simplex_integral, p=p), simplices, workers)
    return sum(parts, Fraction(0))


@dataclass(frozen=True)
class FacetChart:
    """A facet of P as a (d-1)-polytope in the coordinates other than ``dropped``.

    ``embedding[j]`` expresses x_j of P as an affine map of the chart coordinates, and
    ``lattice_factor`` is 1/|u_dropped| for the primitive facet normal u.
    """

    polytope: HPolytope
    dropped: int
    embedding: tuple[AffineMap, ...]
    lattice_factor: Fraction

    def lift(self, point: Sequence[Fraction]) -> Vector:
        return tuple(
            sum((a * y for a, y in zip(linear, point)), Fraction(0)) + offset
            for linear, offset in self.embedding
        )


def facet_chart(polytope: HPolytope, index: int) -> FacetChart:
    """Project facet ``index`` of P onto the coordinate hyperplane x_i = 0 with i the last
    coordinate of the primitive normal that is non-zero.

    Raises:
        NotAFacet: the projected face is empty or lower-dimensional.
    """
    d = polytope.dim
    normal, offset = polytope.inequalities[index]
    u, _ = primitive(normal)
    i = max(j for j in range(d) if u[j] != 0)
    others = [j for j in range(d) if j != i]
    pivot = normal[i]

    embedding: list[AffineMap] = []
    for j in range(d):
        if j == i:
            linear = tuple(-normal[k] / pivot for k in others)
            embedding.append((linear, -offset / pivot))
        else:
            embedding.append((tuple(Fraction(int(k == j)) for k in others), Fraction(0)))

    rows = []
    for k, (row_normal, row_offset) in enumerate(polytope.inequalities):
        if k == index:
            continue
        projected = tuple(row_normal[j] - row_normal[i] * normal[j] / pivot for j in others)
        rows.append((projected, row_offset - row_normal[i] * offset / pivot))
    chart = HPolytope.from_inequalities(rows, d - 1)

    try:
        verts = vertices(chart)
    except (Infeasible, Unbounded) as e:
        raise NotAFacet(index, f"inequality {index} meets the polytope in the empty set") from e
    if affine_rank(verts) != d - 1:
        raise NotAFacet(index)
    return FacetChart(chart, i, tuple(embedding), Fraction(1) / abs(u[i]))


def facet_integral_lattice(polytope: HPolytope, index: int, p: Poly, strict: bool = True) -> Fraction:
    """Exact integral of p over facet ``index`` against dsigma_0 / |u|.

    With ``strict=False`` a lower-dimensional intersection contributes 0 instead of raising
    NotAFacet; region decompositions rely on this for facets of Delta_+ that a region only
    touches.
    """
    try:
        chart = facet_chart(polytope, index)
    except NotAFacet:
        if strict:
            raise
        return Fraction(0)
    d = polytope.dim
    if d == 1:
        return chart.lattice_factor * evaluate(p, chart.lift(()))
    restricted = compose(terms(p), chart.embedding, d - 1)
    return chart.lattice_factor * integrate_polynomial(chart.polytope, restricted)


# numeric quadrature


@lru_cache(maxsize=32)
def _rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    quadrature = modepy.GrundmannMoellerSimplexQuadrature(order, dim)
    # biunit simplex -> unit simplex
    return (np.asarray(quadrature.nodes).T + 1.0) / 2.0, np.asarray(quadrature.weights) / 2.0**dim


def _quadrature(cells: np.ndarray, h: Evaluator, order: int) -> float:
    """Sum of the rule over cells of shape (S, d+1, d)."""
    count, _, d = cells.shape
    nodes, weights = _rule(order, d)
    edges = cells[:, 1:, :] - cells[:, :1, :]
    points = cells[:, :1, :] + np.einsum("nj,sjd->snd", nodes, edges)
    values = np.asarray(h(points.reshape(-1, d)), dtype=float).reshape(count, len(weights))
    jacobians = np.abs(np.linalg.det(edges)) if d > 0 else np.ones(count)
    return float(jacobians @ (values @ weights))


def _bisect(cells: np.ndarray) -> np.ndarray:
    """Split every simplex at the midpoint of its longest edge."""
    children = []
    for cell in cells:
        k = len(cell)
        i, j = max(
            ((a, b) for a in range(k) for b in range(a + 1, k)),
            key=lambda ab: float(np.sum((cell[ab[0]] - cell[ab[1]]) ** 2)),
        )
        midpoint = (cell[i] + cell[j]) / 2.0
        left = cell.copy()
        left[i] = midpoint
        right = cell.copy()
        right[j] = midpoint
        children.extend((left, right))
    return np.array(children)


def integrate_numeric(
    polytope: HPolytope, h: Evaluator, config: Optional[EngineConfig] = None
) -> tuple[float, float]:
    """Integral of a vectorized evaluator h over P with an error estimate.

    The estimate is the difference of two consecutive refinement levels.

    Raises:
        NoConvergence: the tolerance was not met after ``config.max_refinements`` levels.
    """
    config = config or get_config()
    if polytope.dim == 0:
        return float(h(np.zeros((1, 0)))[0]), 0.0
    cells = np.array(
        [[[float(x) for x in v] for v in s.vertices] for s in triangulate(polytope)], dtype=float
    )
    previous = _quadrature(cells, h, config.quadrature_order)
    for level in range(1, config.max_refinements + 1):
        cells = _bisect(cells)
        current = _quadrature(cells, h, config.quadrature_order)
        error = abs(current - previous)
        logger.debug(f"quadrature level {level}: {len(cells)} cells, value {current}, error {error}")
        if error <= max(config.quadrature_floor, config.quadrature_tolerance * abs(current)):
            return current, error
        previous = current
    raise NoConvergence(
        f"quadrature error {error:.3e} above tolerance after {config.max_refinements} refinements"
    )


def facet_integral_numeric(
    polytope: HPolytope,
    index: int,
    h: Evaluator,
    strict: bool = True,
    config: Optional[EngineConfig] = None,
) -> tuple[float, float]:
    """Numeric counterpart of :func:`facet_integral_lattice`."""
    try:
        chart = facet_chart(polytope, index)
    except NotAFacet:
        if strict:
            raise
        return 0.0, 0.0
    factor = float(chart.lattice_factor)
    linear = np.array([[float(a) for a in lin] for lin, _ in chart.embedding], dtype=float)
    offsets = np.array([float(off) for _, off in chart.embedding], dtype=float)
    d = polytope.dim

    def restricted(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, d - 1)
        return h(points @ linear.T + offsets)

    if d == 1:
        return factor * float(restricted(np.zeros((1, 0)))[0]), 0.0
    value, error = integrate_numeric(chart.polytope, restricted, config)
    return factor * value, factor * error
