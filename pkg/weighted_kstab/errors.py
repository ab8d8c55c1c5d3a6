"""Exception hierarchy for the engine.

Every error raised on purpose derives from :class:`KStabError`, itself a ``ValueError`` so
callers that only care about bad input can catch the builtin. The command line maps the
four branches below to exit codes.
"""

from typing import Any, Sequence


class KStabError(ValueError):
    """Base class of all engine errors."""


# geometry


class GeometryError(KStabError):
    """A polytope or linear-algebra precondition does not hold."""


class Infeasible(GeometryError):
    """The polytope is empty."""


class Unbounded(GeometryError):
    """The polyhedron is unbounded or contains a line."""


class DegeneratePolytope(GeometryError):
    """The polytope is not full-dimensional."""


class DependentGenerators(GeometryError):
    """Cone generators are linearly dependent."""


class NotAFacet(GeometryError):
    """The inequality does not support a (d-1)-dimensional face."""

    def __init__(self, index: int, message: str | None = None) -> None:
        self.index = index
        super().__init__(message or f"inequality {index} does not support a facet")


# input


class InputError(KStabError):
    """A document could not be read."""


class ParseError(InputError):
    """A document does not match its schema."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# validation


class ValidationFailure(KStabError):
    """Parsed data violates a structural invariant."""


class DimensionMismatch(ValidationFailure):
    """Vector lengths or the dimension count are inconsistent."""


class NotReflexive(ValidationFailure):
    """A facet fails the Q-reflexivity constancy cross-check."""


class RankMismatch(ValidationFailure):
    """A weight does not match the torus rank of the datum."""


class NegativeSomewhere(ValidationFailure):
    """A test configuration is negative at a vertex."""

    def __init__(self, vertex: Sequence[Any], value: Any) -> None:
        self.vertex = tuple(vertex)
        self.value = value
        super().__init__(f"f({_show(vertex)}) = {value} < 0")


class GradientOutsideValuationCone(ValidationFailure):
    """A piece gradient pairs positively with a spherical root."""

    def __init__(self, piece: int, root: int, pairing: Any) -> None:
        self.piece = piece
        self.root = root
        self.pairing = pairing
        super().__init__(f"piece {piece}: sigma_{root} . Lambda = {pairing} > 0")


class RedundantPiece(ValidationFailure):
    """A piece is nowhere minimal on a full-dimensional region."""

    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"piece {index} is not minimal on a full-dimensional region")


class NotCentral(ValidationFailure):
    """A twist direction is not orthogonal to every spherical root."""


class QuadrantViolation(ValidationFailure):
    """A torus coordinate is negative at a vertex of the moment polytope."""

    def __init__(self, vertex: Sequence[Any], axis: int, value: Any) -> None:
        self.vertex = tuple(vertex)
        self.axis = axis
        self.value = value
        super().__init__(f"theta_{axis}({_show(vertex)}) = {value} < 0")


class NonIntegralLevel(ValidationFailure):
    """k * kappa_P is not an integral point."""


# numerics


class NonPolynomial(KStabError):
    """An exact operation was asked of a non-polynomial weight."""


class NoConvergence(KStabError):
    """Quadrature did not reach its tolerance within the refinement budget."""


class NoSignChange(KStabError):
    """The soliton residual has the same sign at both bracket ends."""


class EmptyFamily(KStabError):
    """No scanned configuration has J > 0."""


class NotConverged(KStabError):
    """Richardson extrapolation did not settle within tolerance."""


def _show(vertex: Sequence[Any]) -> str:
    return "(" + ", ".join(str(x) for x in vertex) + ")"
