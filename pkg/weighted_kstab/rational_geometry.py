"""Exact rational convex geometry.

Polytopes are kept in H-representation, every inequality reading ``normal . x + offset >= 0``.
Vertex and facet conversion runs through cddlib in fraction mode and the linear algebra through
sympy matrices over the rationals, so results are exact and reproducible. Triangulation and the
lattice walk are local.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, NamedTuple, Optional, Sequence

import cdd
import sympy

from weighted_kstab.errors import (
    DegeneratePolytope,
    DependentGenerators,
    Infeasible,
    Unbounded,
)
from weighted_kstab.utils import parallel_map

logger = logging.getLogger(__name__)

Vector = tuple[Fraction, ...]


def as_rational(value) -> Fraction:
    """Parse an integer, a Fraction or a "p/q" string into a Fraction."""
    if isinstance(value, bool):
        raise ValueError("expected a rational, got a boolean")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"invalid rational {value!r}") from e
    raise ValueError(f"expected a rational as integer or 'p/q' string, got {type(value).__name__}")


def vector(values: Iterable) -> Vector:
    return tuple(as_rational(v) for v in values)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v, strict=True)), Fraction(0))


def add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def scale(t: Fraction, v: Sequence[Fraction]) -> Vector:
    return tuple(t * a for a in v)


def is_zero(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def primitive(v: Sequence[Fraction]) -> tuple[Vector, Fraction]:
    """Split a non-zero rational vector as ``v = s * u`` with u primitive integral and s > 0."""
    if is_zero(v):
        raise ValueError("the zero vector has no primitive form")
    denominator = math.lcm(*(Fraction(a).denominator for a in v))
    integral = [int(a * denominator) for a in v]
    g = math.gcd(*integral)
    u = tuple(Fraction(a // g) for a in integral)
    return u, Fraction(g, denominator)


# exact linear algebra


def _matrix(rows: Sequence[Sequence[Fraction]], ncols: Optional[int] = None) -> sympy.Matrix:
    ncols = len(rows[0]) if rows else (ncols or 0)
    entries = [sympy.Rational(Fraction(x).numerator, Fraction(x).denominator) for row in rows for x in row]
    return sympy.Matrix(len(rows), ncols, entries)


def _fraction(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return _matrix(rows).rank()


def determinant(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    return _fraction(_matrix(rows).det())


def solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[Vector]:
    """Unique solution of ``matrix @ x = rhs``; None when the system is inconsistent or
    underdetermined."""
    if not matrix:
        return None
    if len(matrix) != len(rhs):
        raise ValueError(f"{len(matrix)} rows but {len(rhs)} right-hand sides")
    try:
        solution, params = _matrix(matrix).gauss_jordan_solve(_matrix([[b] for b in rhs]))
    except ValueError:
        return None
    if params.rows:
        return None
    return tuple(_fraction(x) for x in solution)


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[Vector]:
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    return [tuple(_fraction(x) for x in v) for v in _matrix(rows, ncols).nullspace()]


def affine_rank(points: Sequence[Sequence[Fraction]]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    return rank([sub(p, base) for p in points[1:]])


# polytopes


class Inequality(NamedTuple):
    """``normal . x + offset >= 0``."""

    normal: Vector
    offset: Fraction

    def slack(self, point: Sequence[Fraction]) -> Fraction:
        return dot(self.normal, point) + self.offset


def _canonical_key(inequality: Inequality) -> tuple[Vector, Fraction]:
    u, s = primitive(inequality.normal)
    return u, inequality.offset / s


@dataclass(frozen=True)
class HPolytope:
    """Intersection of half-spaces in dimension ``dim``.

    Use :meth:`from_inequalities` to build one: it drops duplicates (up to positive scaling,
    first occurrence wins, order otherwise preserved) and trivially satisfied zero-normal
    rows. A violated zero-normal row is kept so that the polytope reports itself empty.
    """

    inequalities: tuple[Inequality, ...]
    dim: int

    @classmethod
    def from_inequalities(cls, rows: Iterable, dim: int) -> "HPolytope":
        kept: list[Inequality] = []
        seen: set = set()
        for row in rows:
            normal, offset = row
            inequality = Inequality(vector(normal), as_rational(offset))
            if len(inequality.normal) != dim:
                raise ValueError(f"normal {inequality.normal} does not have length {dim}")
            if is_zero(inequality.normal):
                if inequality.offset < 0 and inequality not in kept:
                    kept.append(inequality)
                continue
            key = _canonical_key(inequality)
            if key not in seen:
                seen.add(key)
                kept.append(inequality)
        return cls(tuple(kept), dim)

    def contains(self, point: Sequence[Fraction]) -> bool:
        return all(ineq.slack(point) >= 0 for ineq in self.inequalities)

    def interior_contains(self, point: Sequence[Fraction]) -> bool:
        return all(ineq.slack(point) > 0 for ineq in self.inequalities)

    def tight(self, point: Sequence[Fraction]) -> frozenset[int]:
        return frozenset(i for i, ineq in enumerate(self.inequalities) if ineq.slack(point) == 0)

    def with_inequalities(self, extra: Iterable) -> "HPolytope":
        return HPolytope.from_inequalities(list(self.inequalities) + list(extra), self.dim)

    def dilate(self, k: int | Fraction) -> "HPolytope":
        """k * P."""
        return HPolytope.from_inequalities(
            ((ineq.normal, k * ineq.offset) for ineq in self.inequalities), self.dim
        )


def _h_matrix(polytope: HPolytope) -> cdd.Matrix:
    """cdd rows ``[b, a_1, ..., a_d]`` read ``b + a . x >= 0``, the same convention as ours."""
    rows = [[ineq.offset, *ineq.normal] for ineq in polytope.inequalities]
    matrix = cdd.Matrix(rows, number_type="fraction")
    matrix.rep_type = cdd.RepType.INEQUALITY
    return matrix


@lru_cache(maxsize=4096)
def vertices(polytope: HPolytope) -> tuple[Vector, ...]:
    """Exact vertex set in lexicographic order, by double description in fraction mode."""
    d = polytope.dim
    rows = polytope.inequalities
    if d == 0:
        if all(ineq.offset >= 0 for ineq in rows):
            return ((),)
        raise Infeasible("empty 0-dimensional polytope")
    if rank([ineq.normal for ineq in rows]) < d:
        raise Unbounded("the inequalities do not determine a pointed polyhedron")

    generators = cdd.Polyhedron(_h_matrix(polytope)).get_generators()
    found: set[Vector] = set()
    for i in range(generators.row_size):
        row = generators[i]
        point = tuple(Fraction(x) for x in row[1:])
        if Fraction(row[0]) == 0 or i in generators.lin_set:
            raise Unbounded(f"recession direction {point}")
        found.add(point)
    if not found:
        raise Infeasible("no feasible vertex")
    return tuple(sorted(found))


def is_full_dimensional(polytope: HPolytope) -> bool:
    try:
        verts = vertices(polytope)
    except Infeasible:
        return False
    return affine_rank(verts) == polytope.dim


def irredundant(polytope: HPolytope) -> HPolytope:
    """Keep only the inequalities that support facets, in their original order."""
    vertices(polytope)
    linearity, redundant = _h_matrix(polytope).canonicalize()
    dropped = set(linearity) | set(redundant)
    kept = [ineq for i, ineq in enumerate(polytope.inequalities) if i not in dropped]
    return HPolytope.from_inequalities(kept, polytope.dim)


def hull(points: Sequence[Sequence]) -> HPolytope:
    """Facet description of the convex hull of full-dimensional points."""
    pts = sorted(set(vector(p) for p in points))
    d = len(pts[0])
    if affine_rank(pts) < d:
        raise DegeneratePolytope("points do not span the ambient space")
    matrix = cdd.Matrix([[1, *p] for p in pts], number_type="fraction")
    matrix.rep_type = cdd.RepType.GENERATOR
    facets = cdd.Polyhedron(matrix).get_inequalities()
    rows = []
    for i in range(facets.row_size):
        row = [Fraction(x) for x in facets[i]]
        rows.append((row[1:], row[0]))
    return HPolytope.from_inequalities(rows, d)


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[Vector, ...]

    @property
    def edges(self) -> list[Vector]:
        base = self.vertices[0]
        return [sub(v, base) for v in self.vertices[1:]]

    @property
    def volume(self) -> Fraction:
        d = len(self.vertices) - 1
        return abs(determinant(self.edges)) / math.factorial(d)


@lru_cache(maxsize=1024)
def triangulate(polytope: HPolytope, apex: Optional[int] = None) -> tuple[Simplex, ...]:
    """Fan triangulation, recursing over facets.

    The top-level cone point is the lexicographically first vertex unless ``apex`` names
    another vertex index; lower levels always use their first vertex.
    """
    verts = vertices(polytope)
    d = polytope.dim
    if affine_rank(verts) < d:
        raise DegeneratePolytope(f"polytope spans dimension {affine_rank(verts)} < {d}")
    incidence = [polytope.tight(v) for v in verts]
    count = len(polytope.inequalities)

    def fan(face: tuple[int, ...], dim: int, cone_point: int) -> list[tuple[int, ...]]:
        if dim == 0:
            return [(face[0],)]
        cells = []
        seen = set()
        for i in range(count):
            sub_face = tuple(v for v in face if i in incidence[v])
            if not sub_face or cone_point in sub_face or sub_face in seen:
                continue
            if affine_rank([verts[v] for v in sub_face]) != dim - 1:
                continue
            seen.add(sub_face)
            cells.extend((cone_point,) + cell for cell in fan(sub_face, dim - 1, sub_face[0]))
        return cells

    top = tuple(range(len(verts)))
    cells = fan(top, d, 0 if apex is None else apex)
    logger.debug(f"triangulated {len(verts)} vertices into {len(cells)} simplices")
    return tuple(Simplex(tuple(verts[i] for i in cell)) for cell in cells)


def volume(polytope: HPolytope) -> Fraction:
    return sum((s.volume for s in triangulate(polytope)), Fraction(0))


def simplicial_cone_coefficients(
    v: Sequence[Fraction], generators: Sequence[Sequence[Fraction]]
) -> Optional[Vector]:
    """Coefficients c with v = sum c_i g_i, or None when v is outside the span.

    Raises:
        DependentGenerators: the generators are linearly dependent.
    """
    v = vector(v)
    if not generators:
        return () if is_zero(v) else None
    gens = [vector(g) for g in generators]
    if rank(gens) < len(gens):
        raise DependentGenerators(f"{len(gens)} generators span rank {rank(gens)}")
    columns = [[g[i] for g in gens] for i in range(len(v))]
    return solve(columns, v)


def _slab(polytope: HPolytope, first: int, bounds: tuple[tuple[int, int], ...]) -> list[tuple[int, ...]]:
    ranges = [range(lo, hi + 1) for lo, hi in bounds]
    points = []
    for rest in product(*ranges):
        point = (first,) + rest
        if polytope.contains(point):
            points.append(point)
    return points


def _slab_task(args) -> list[tuple[int, ...]]:
    return _slab(*args)


def lattice_points(polytope: HPolytope, workers: int = 1) -> list[tuple[int, ...]]:
    """Integer points of a bounded polytope in lexicographic order, one slab per value of the
    first coordinate."""
    verts = vertices(polytope)
    bounds = tuple(
        (math.ceil(min(v[i] for v in verts)), math.floor(max(v[i] for v in verts)))
        for i in range(polytope.dim)
    )
    first_lo, first_hi = bounds[0]
    tasks = [(polytope, x, bounds[1:]) for x in range(first_lo, first_hi + 1)]
    slabs = parallel_map(_slab_task, tasks, workers)
    return [point for slab in slabs for point in slab]
