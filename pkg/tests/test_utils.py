import json
from enum import Enum
from fractions import Fraction
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from weighted_kstab.utils import ExtendedEncoder, parallel_map, render, with_decimals, with_serializer


class Colour(Enum):
    RED = "red"


class TestExtendedEncoder:
    """Test suite for ExtendedEncoder class."""

    def test_fraction_serialization(self):
        """Test that fractions are serialized as p/q strings."""
        result = json.dumps({"E": Fraction(15, 16)}, cls=ExtendedEncoder)
        assert result == '{"E": "15/16"}'

    def test_integral_fraction_serialization(self):
        """Test that integral fractions drop the denominator."""
        result = json.dumps({"V": Fraction(4)}, cls=ExtendedEncoder)
        assert result == '{"V": "4"}'

    def test_negative_fraction_serialization(self):
        """Test that the sign stays on the numerator."""
        result = json.dumps({"D": Fraction(-1, 6)}, cls=ExtendedEncoder)
        assert result == '{"D": "-1/6"}'

    def test_enum_serialization(self):
        """Test that enums are serialized by value."""
        assert json.dumps({"c": Colour.RED}, cls=ExtendedEncoder) == '{"c": "red"}'

    def test_numpy_serialization(self):
        """Test that numpy scalars and arrays become plain JSON values."""
        data = {"i": np.int64(3), "f": np.float64(0.5), "a": np.array([1.0, 2.0])}
        parsed = json.loads(json.dumps(data, cls=ExtendedEncoder))
        assert parsed == {"i": 3, "f": 0.5, "a": [1.0, 2.0]}

    def test_path_serialization(self):
        """Test that paths are serialized as strings."""
        assert json.dumps({"p": Path("data/p1.json")}, cls=ExtendedEncoder) == '{"p": "data/p1.json"}'

    def test_standard_types_unchanged(self):
        """Test that standard JSON types are serialized normally."""
        data = {
            "string": "test",
            "number": 42,
            "float": 3.14,
            "boolean": True,
            "null": None,
            "list": [1, 2, 3],
            "dict": {"key": "value"},
        }
        parsed = json.loads(json.dumps(data, cls=ExtendedEncoder))
        assert parsed == data


class TestWithDecimals:
    """Test suite for the decimal companions."""

    def test_scalar_companion(self):
        """Test that a rational value gains a decimal companion."""
        assert with_decimals({"M": Fraction(3, 16)}) == {"M": Fraction(3, 16), "M_decimal": 0.1875}

    def test_vector_companion(self):
        """Test that a vector of rationals gains a vector companion."""
        result = with_decimals({"b": [Fraction(1, 12), Fraction(1, 12)]})
        assert result["b_decimal"] == [1 / 12, 1 / 12]

    def test_nested_documents(self):
        """Test that companions are added inside nested dicts and lists."""
        result = with_decimals({"rows": [{"k": 2, "ratio": Fraction(1, 2)}]})
        assert result == {"rows": [{"k": 2, "ratio": Fraction(1, 2), "ratio_decimal": 0.5}]}

    def test_non_rational_values_untouched(self):
        """Test that ints, strings and empty lists gain no companion."""
        document = {"n": 2, "status": "Fails", "empty": []}
        assert with_decimals(document) == document


class TestRender:
    """Test suite for the output formats."""

    def test_json_format(self):
        """Test that json output carries exact and decimal values."""
        parsed = json.loads(render({"D": Fraction(-1, 6)}, "json"))
        assert parsed["D"] == "-1/6"
        assert parsed["D_decimal"] == pytest.approx(-1 / 6)

    def test_text_format(self):
        """Test that text output lists key: value lines."""
        text = render({"status": Colour.RED, "b": (Fraction(4, 3),), "w": None}, "text")
        assert text == "status: red\nb: (4/3)\nw: -"

    def test_text_format_prepared(self):
        """Test that a prepared text entry is printed verbatim."""
        assert render({"text": "CriterionHolds", "x": 1}, "text") == "CriterionHolds"

    def test_csv_single_row(self):
        """Test that csv output without rows is a single decimal row."""
        lines = render({"E": Fraction(1, 2), "n": 1}, "csv").splitlines()
        assert lines == ["E,n", "0.5,1"]

    def test_csv_rows(self):
        """Test that csv output writes one line per row."""
        result = {"rows": [{"k": 1, "h0": 3}, {"k": 2, "h0": 5}], "note": {"ignored": True}}
        assert render(result, "csv").splitlines() == ["k,h0", "1,3", "2,5"]


class TestWithSerializerDecorator:
    """Test suite for with_serializer decorator."""

    def test_renders_in_requested_format(self):
        """Test that the handler result is rendered with args.format."""

        @with_serializer
        def handler(args):
            return {"M": Fraction(3, 16)}

        assert handler(SimpleNamespace(format="text")) == "M: 3/16"

    def test_defaults_to_json(self):
        """Test that a namespace without a format renders json."""

        @with_serializer
        def handler(args):
            return {"ok": True}

        assert json.loads(handler(SimpleNamespace())) == {"ok": True}

    def test_wraps_non_dict_results(self):
        """Test that non-dict results are wrapped under result."""

        @with_serializer
        def handler(args):
            return [1, 2, 3]

        assert json.loads(handler(SimpleNamespace(format="json"))) == {"result": [1, 2, 3]}

    def test_passes_extra_arguments(self):
        """Test that extra positional and keyword arguments reach the handler."""

        @with_serializer
        def handler(args, a, b=0):
            return {"sum": a + b}

        assert handler(SimpleNamespace(format="text"), 2, b=3) == "sum: 5"


class TestParallelMap:
    """Test suite for parallel_map."""

    def test_serial_preserves_order(self):
        """Test that the serial path maps in input order."""
        assert parallel_map(lambda x: x * x, [3, 1, 2]) == [9, 1, 4]

    def test_pool_preserves_order(self):
        """Test that the process pool keeps input order."""
        assert parallel_map(abs, [-3, 1, -2, 5], workers=2) == [3, 1, 2, 5]

    def test_empty_input(self):
        """Test that an empty input maps to an empty list."""
        assert parallel_map(abs, [], workers=4) == []
