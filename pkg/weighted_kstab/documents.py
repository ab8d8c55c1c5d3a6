"""JSON document schemas for data, test configurations and weights."""

import json
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, Literal, Mapping, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeInt,
    TypeAdapter,
    ValidationError,
)

from weighted_kstab.errors import InputError, ParseError
from weighted_kstab.rational_geometry import as_rational

Rational = Annotated[Fraction, BeforeValidator(as_rational)]


class _Document(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid", populate_by_name=True)


class FacetDocument(_Document):
    normal: list[Rational]
    n_D: Rational
    kind: Literal["g-divisor", "colour"] = "g-divisor"


class PolytopeDocument(_Document):
    facets: list[FacetDocument] = Field(min_length=1)


class RootDocument(_Document):
    linear: list[Rational]
    constant: Rational = Fraction(0)
    rho_pairing: Rational


class TorusDocument(_Document):
    xi: list[list[Rational]] = Field(default_factory=list)
    chi: Union[Literal["canonical"], list[Rational]] = "canonical"


class DatumDocument(_Document):
    name: str = "datum"
    dimension: NonNegativeInt
    rank: NonNegativeInt
    polytope: PolytopeDocument
    roots: list[RootDocument] = Field(default_factory=list)
    kappa_p: list[Rational]
    spherical_roots: list[list[Rational]] = Field(default_factory=list)
    torus: TorusDocument = Field(default_factory=TorusDocument)


class PieceDocument(_Document):
    c: Rational
    lambda_: list[Rational] = Field(alias="lambda")


class ConfigurationDocument(_Document):
    """Pieces of f = min_a(c_a + lambda_a . x)."""

    pieces: list[PieceDocument] = Field(min_length=1)


class TermDocument(_Document):
    coef: Rational
    powers: list[NonNegativeInt] = Field(default_factory=list)


class PolynomialWeightDocument(_Document):
    type: Literal["polynomial"]
    terms: list[TermDocument]


class ExpAffineWeightDocument(_Document):
    type: Literal["exp_affine"]
    coeffs: list[float]
    constant: float = 0.0


WeightDocument = Annotated[
    Union[PolynomialWeightDocument, ExpAffineWeightDocument], Field(discriminator="type")
]

_WEIGHT_ADAPTER = TypeAdapter(WeightDocument)


def _first_error(error: ValidationError) -> ParseError:
    detail = error.errors()[0]
    path = ".".join(str(part) for part in detail.get("loc", ()))
    return ParseError(path, detail.get("msg", "invalid value"))


def parse(model: type[BaseModel], document: Mapping[str, Any]) -> Any:
    """Validate a decoded document against ``model``.

    Raises:
        ParseError: with the dotted path of the first offending field.
    """
    try:
        return model.model_validate(document)
    except ValidationError as e:
        raise _first_error(e) from e


def parse_weight(document: Mapping[str, Any]) -> Union[PolynomialWeightDocument, ExpAffineWeightDocument]:
    try:
        return _WEIGHT_ADAPTER.validate_python(document)
    except ValidationError as e:
        raise _first_error(e) from e


def read_document(path: str | Path) -> Any:
    """Decode a UTF-8 JSON file.

    Raises:
        InputError: the file is missing, unreadable or not JSON.
    """
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e.msg} (line {e.lineno})") from e
