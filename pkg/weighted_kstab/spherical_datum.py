"""Combinatorial model of a Q-Fano spherical variety with its anticanonical polarization.

A datum fixes the moment polytope Delta_+ through facet data ``w_D . x >= kappa_P . w_D - n_D``,
the positive roots not orthogonal to Delta_+ as affine functionals, the distinguished point
kappa_P, the spherical roots cutting out the valuation cone ``{v : sigma_j . v <= 0}`` and the
torus generators xi_A with their lifting character chi.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from sympy import Poly

from weighted_kstab import integration
from weighted_kstab.documents import DatumDocument, parse, read_document
from weighted_kstab.errors import DimensionMismatch, GeometryError, NotReflexive
from weighted_kstab.integration import constant, integrate_polynomial
from weighted_kstab.rational_geometry import (
    HPolytope,
    Vector,
    affine_rank,
    dot,
    irredundant,
    nullspace,
    primitive,
    rank,
    scale,
    solve,
    sub,
    vector,
    vertices,
)

logger = logging.getLogger(__name__)


class FacetKind(str, Enum):
    G_DIVISOR = "g-divisor"
    COLOUR = "colour"


@dataclass(frozen=True)
class FacetData:
    normal: Vector
    n_D: Fraction
    kind: FacetKind = FacetKind.G_DIVISOR


@dataclass(frozen=True)
class RootFunctional:
    """Affine functional ``linear . x + constant`` of a positive root, with <alpha, rho>."""

    linear: Vector
    constant: Fraction
    rho_pairing: Fraction

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return dot(self.linear, point) + self.constant


@dataclass(frozen=True)
class SphericalDatum:
    name: str
    n: int
    r0: int
    facets: tuple[FacetData, ...]
    kappa_p: Vector
    roots: tuple[RootFunctional, ...] = ()
    spherical_roots: tuple[Vector, ...] = ()
    torus: tuple[Vector, ...] = ()
    chi: tuple[Fraction, ...] = ()
    chi_canonical: bool = True

    @cached_property
    def polytope(self) -> HPolytope:
        """Delta_+ with the facets in input order."""
        return HPolytope.from_inequalities(
            ((f.normal, f.n_D - dot(self.kappa_p, f.normal)) for f in self.facets), self.r0
        )

    @property
    def torus_rank(self) -> int:
        return len(self.torus)

    @property
    def vertices(self) -> tuple[Vector, ...]:
        return vertices(self.polytope)

    def theta(self, point: Sequence[Fraction]) -> Vector:
        """Torus coordinates theta_A = xi_A . x + chi_A."""
        return tuple(dot(xi, point) + c for xi, c in zip(self.torus, self.chi))

    def with_chi(self, chi: Sequence[Fraction]) -> "SphericalDatum":
        chi = vector(chi)
        if len(chi) != self.torus_rank:
            raise DimensionMismatch(f"chi has length {len(chi)} but the torus rank is {self.torus_rank}")
        return replace(self, chi=chi, chi_canonical=False)

    def with_rho_scale(self, factor: Fraction) -> "SphericalDatum":
        roots = tuple(replace(r, rho_pairing=r.rho_pairing * factor) for r in self.roots)
        return replace(self, roots=roots)


def canonical_chi(torus: Sequence[Vector], kappa_p: Vector) -> tuple[Fraction, ...]:
    return tuple(-dot(xi, kappa_p) for xi in torus)


def _check_length(values: Sequence, expected: int, where: str) -> None:
    if len(values) != expected:
        raise DimensionMismatch(f"{where} has length {len(values)} but rank is {expected}")


def load_datum(document: Mapping[str, Any]) -> SphericalDatum:
    """Build a datum from a decoded JSON document.

    Raises:
        ParseError: the document does not match the schema.
        DimensionMismatch: vector lengths disagree with the rank, or n != rank + #roots.
    """
    doc: DatumDocument = parse(DatumDocument, document)
    r0 = doc.rank
    for i, facet in enumerate(doc.polytope.facets):
        _check_length(facet.normal, r0, f"polytope.facets.{i}.normal")
    for i, root in enumerate(doc.roots):
        _check_length(root.linear, r0, f"roots.{i}.linear")
    _check_length(doc.kappa_p, r0, "kappa_p")
    for j, sigma in enumerate(doc.spherical_roots):
        _check_length(sigma, r0, f"spherical_roots.{j}")
    for a, xi in enumerate(doc.torus.xi):
        _check_length(xi, r0, f"torus.xi.{a}")
    if doc.dimension != r0 + len(doc.roots):
        raise DimensionMismatch(
            f"n != rank + #roots ({doc.dimension} != {r0} + {len(doc.roots)})"
        )

    kappa = tuple(doc.kappa_p)
    torus = tuple(tuple(xi) for xi in doc.torus.xi)
    if doc.torus.chi == "canonical":
        chi, canonical = canonical_chi(torus, kappa), True
    else:
        if len(doc.torus.chi) != len(torus):
            raise DimensionMismatch(
                f"torus.chi has length {len(doc.torus.chi)} but there are {len(torus)} generators"
            )
        chi, canonical = tuple(doc.torus.chi), False

    datum = SphericalDatum(
        name=doc.name,
        n=doc.dimension,
        r0=r0,
        facets=tuple(FacetData(tuple(f.normal), f.n_D, FacetKind(f.kind)) for f in doc.polytope.facets),
        kappa_p=kappa,
        roots=tuple(RootFunctional(tuple(r.linear), r.constant, r.rho_pairing) for r in doc.roots),
        spherical_roots=tuple(tuple(s) for s in doc.spherical_roots),
        torus=torus,
        chi=chi,
        chi_canonical=canonical,
    )
    logger.info(f"loaded datum {datum.name}: n={datum.n}, rank={datum.r0}, {len(datum.facets)} facets")
    return datum


def read_datum(path: str | Path) -> SphericalDatum:
    return load_datum(read_document(path))


# validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    witness: Optional[Any] = None
    severity: str = "error"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)


def _interior_point(verts: Sequence[Vector]) -> Vector:
    count = len(verts)
    return tuple(sum((v[i] for v in verts), Fraction(0)) / count for i in range(len(verts[0])))


def _lattice_normal(facet: FacetData) -> bool:
    """G-divisor normals are primitive in Z^r0; colour normals only need to be integral."""
    try:
        _, factor = primitive(facet.normal)
    except ValueError:
        return False
    return factor == 1 if facet.kind == FacetKind.G_DIVISOR else factor.denominator == 1


def validate(datum: SphericalDatum) -> ValidationReport:
    """Run every structural check; failures become report entries, never exceptions."""
    checks: list[Check] = []

    expected = datum.r0 + len(datum.roots)
    checks.append(
        Check(
            "dimension",
            datum.n == expected,
            "" if datum.n == expected else f"n != rank + #roots ({datum.n} != {datum.r0} + {len(datum.roots)})",
        )
    )

    try:
        verts = vertices(datum.polytope)
        full = affine_rank(verts) == datum.r0
        checks.append(Check("polytope", full, "" if full else "Delta_+ is not full-dimensional"))
    except GeometryError as e:
        checks.append(Check("polytope", False, str(e)))
        return ValidationReport(tuple(checks))
    if not full:
        return ValidationReport(tuple(checks))

    non_facets = []
    for i, ineq in enumerate(datum.polytope.inequalities):
        face = [v for v in verts if ineq.slack(v) == 0]
        if affine_rank(face) != datum.r0 - 1 or len(face) < datum.r0:
            non_facets.append(i)
    duplicated = len(datum.polytope.inequalities) != len(datum.facets)
    checks.append(
        Check(
            "facets",
            not non_facets and not duplicated,
            "duplicate or zero facet data" if duplicated else (f"inequalities {non_facets} support no facet" if non_facets else ""),
            witness=non_facets or None,
        )
    )

    slacks = [ineq.slack(datum.kappa_p) for ineq in datum.polytope.inequalities]
    checks.append(
        Check(
            "kappa_interior",
            all(s > 0 for s in slacks),
            "" if all(s > 0 for s in slacks) else "kappa_P is not interior (some n_D <= 0)",
            witness=datum.kappa_p,
        )
    )

    bad_facet = None
    for i, facet in enumerate(datum.facets):
        level = dot(datum.kappa_p, facet.normal) - facet.n_D
        on_face = [v for v in verts if dot(facet.normal, v) == level]
        if len(on_face) < datum.r0 or affine_rank(on_face) != datum.r0 - 1:
            bad_facet = i
            break
    checks.append(
        Check(
            "facet_levels",
            bad_facet is None,
            "" if bad_facet is None else f"facet {bad_facet}: w . x = kappa . w - n_D cuts no facet of Delta_+",
            witness=bad_facet,
        )
    )

    off_lattice = next((i for i, facet in enumerate(datum.facets) if not _lattice_normal(facet)), None)
    checks.append(
        Check(
            "lattice_normals",
            off_lattice is None,
            ""
            if off_lattice is None
            else f"facet {off_lattice}: normal {datum.facets[off_lattice].normal} is not a "
            + ("primitive lattice vector" if datum.facets[off_lattice].kind == FacetKind.G_DIVISOR else "lattice vector"),
            witness=off_lattice,
            severity="warning",
        )
    )

    interior = _interior_point(verts)
    root_failure = None
    for j, root in enumerate(datum.roots):
        if root.rho_pairing <= 0:
            root_failure = (j, None, f"root {j}: rho pairing {root.rho_pairing} <= 0")
            break
        negative = next((v for v in verts if root.value(v) < 0), None)
        if negative is not None:
            root_failure = (j, negative, f"root {j} is {root.value(negative)} < 0 at vertex {negative}")
            break
        if root.value(interior) <= 0:
            root_failure = (j, interior, f"root {j} vanishes at the interior point {interior}")
            break
    checks.append(
        Check(
            "root_positivity",
            root_failure is None,
            "" if root_failure is None else root_failure[2],
            witness=None if root_failure is None else root_failure[1],
        )
    )

    independent = rank(list(datum.spherical_roots)) == len(datum.spherical_roots)
    checks.append(
        Check(
            "spherical_roots_independent",
            independent,
            "" if independent else "spherical roots are linearly dependent",
        )
    )

    clash = next(
        (
            (a, j)
            for a, xi in enumerate(datum.torus)
            for j, sigma in enumerate(datum.spherical_roots)
            if dot(sigma, xi) != 0
        ),
        None,
    )
    checks.append(
        Check(
            "torus_orthogonal",
            clash is None,
            "" if clash is None else f"sigma_{clash[1]} . xi_{clash[0]} != 0",
            witness=clash,
        )
    )

    homogeneous = all(r.constant == 0 for r in datum.roots)
    checks.append(
        Check(
            "pi_homogeneous",
            homogeneous,
            "" if homogeneous else "root constants are non-zero; the boundary bracket carries a defect term",
            severity="warning",
        )
    )
    return ValidationReport(tuple(checks))


# densities


def pi_polynomial(datum: SphericalDatum) -> Poly:
    """pi_DH(x) = prod over roots of (linear . x + constant) / rho_pairing."""
    result = constant(Fraction(1), datum.r0)
    for root in datum.roots:
        result = result * integration.affine_polynomial(
            scale(1 / root.rho_pairing, root.linear), root.constant / root.rho_pairing, datum.r0
        )
    return result


def pi_first_order(datum: SphericalDatum) -> Poly:
    """Next term of the Weyl dimension expansion: sum over roots of the product of the others."""
    result = constant(Fraction(0), datum.r0)
    for j in range(len(datum.roots)):
        term = constant(Fraction(1), datum.r0)
        for i, root in enumerate(datum.roots):
            if i != j:
                term = term * integration.affine_polynomial(
                    scale(1 / root.rho_pairing, root.linear), root.constant / root.rho_pairing, datum.r0
                )
        result = result + term
    return result


def homogeneity_defect(datum: SphericalDatum) -> Poly:
    """<x, grad pi> - (n - r0) pi, which vanishes when every root constant is 0."""
    pi = pi_polynomial(datum)
    gens = integration.generators(datum.r0)
    euler = constant(Fraction(0), datum.r0)
    for i, x in enumerate(gens):
        euler = euler + integration.affine_polynomial(
            tuple(Fraction(int(i == j)) for j in range(datum.r0)), Fraction(0), datum.r0
        ) * pi.diff(x)
    return euler - pi.mul_ground(datum.n - datum.r0)


def degree(datum: SphericalDatum) -> Fraction:
    """V = n! * integral of pi over Delta_+."""
    return math.factorial(datum.n) * integrate_polynomial(datum.polytope, pi_polynomial(datum))


# cones


def in_valuation_cone(datum: SphericalDatum, v: Sequence[Fraction]) -> bool:
    return all(dot(sigma, v) <= 0 for sigma in datum.spherical_roots)


def is_central(datum: SphericalDatum, v: Sequence[Fraction]) -> bool:
    return all(dot(sigma, v) == 0 for sigma in datum.spherical_roots)


def central_projection(datum: SphericalDatum, v: Sequence[Fraction]) -> Vector:
    """Orthogonal projection (coordinate dot product) onto V_z = {v : sigma_j . v = 0}."""
    v = vector(v)
    sigmas = datum.spherical_roots
    if not sigmas:
        return v
    gram = [[dot(s, t) for t in sigmas] for s in sigmas]
    coefficients = solve(gram, [dot(s, v) for s in sigmas])
    for c, s in zip(coefficients, sigmas):
        v = sub(v, scale(c, s))
    return v


def central_basis(datum: SphericalDatum) -> list[Vector]:
    """A basis of V_z."""
    return nullspace(list(datum.spherical_roots), datum.r0)


def valuation_cone_rays(datum: SphericalDatum) -> list[Vector]:
    """Rays w_i in span(sigma) with sigma_j . w_i = -delta_ij; with V_z they generate V."""
    sigmas = datum.spherical_roots
    if not sigmas:
        return []
    gram = [[dot(s, t) for t in sigmas] for s in sigmas]
    rays = []
    for i in range(len(sigmas)):
        target = [Fraction(-1) if j == i else Fraction(0) for j in range(len(sigmas))]
        coefficients = solve(gram, target)
        ray = tuple(Fraction(0) for _ in range(datum.r0))
        for c, s in zip(coefficients, sigmas):
            ray = tuple(a + c * b for a, b in zip(ray, s))
        rays.append(ray)
    return rays


# toric data


def toric_datum(polytope: HPolytope, name: str = "toric") -> SphericalDatum:
    """Toric datum of a Q-reflexive polytope with the origin in its interior.

    Each facet ``a . x + b >= 0`` becomes ``w . x >= -1`` with ``w = a / b`` (n_D = 1).

    Raises:
        NotReflexive: some facet has b <= 0, so the origin is not interior.
    """
    polytope = irredundant(polytope)
    facets = []
    for i, ineq in enumerate(polytope.inequalities):
        if ineq.offset <= 0:
            raise NotReflexive(f"facet {i} ({ineq.normal}, {ineq.offset}) does not have the origin in its interior side")
        facets.append(FacetData(scale(1 / ineq.offset, ineq.normal), Fraction(1), FacetKind.G_DIVISOR))
    dim = polytope.dim
    torus = tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim))
    origin = tuple(Fraction(0) for _ in range(dim))
    return SphericalDatum(
        name=name,
        n=dim,
        r0=dim,
        facets=tuple(facets),
        kappa_p=origin,
        torus=torus,
        chi=canonical_chi(torus, origin),
    )