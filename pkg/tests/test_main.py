import json

import pytest

from weighted_kstab.main import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VALIDATION, build_parser, run


@pytest.fixture
def paths(data_dir):
    """String paths of the curated documents, keyed by name."""
    return {p.stem: str(p) for p in data_dir.glob("*.json")}


class TestParser:
    """Argument parsing."""

    def test_global_flags_before_subcommand(self, paths):
        """Test that formatting and numerical flags precede the subcommand."""
        args = build_parser().parse_args(["--format", "json", "--workers", "2", "validate", paths["p1"]])
        assert (args.format, args.workers, args.command) == ("json", 2, "validate")

    def test_usage_error(self, capsys):
        """Test that an unknown subcommand exits with the input code."""
        assert run(["frobnicate"]) == EXIT_INPUT
        assert "invalid choice" in capsys.readouterr().err

    def test_bad_setting(self, paths, capsys):
        """Test that an unusable numerical setting is reported."""
        assert run(["--workers", "0", "validate", paths["p1"]]) == EXIT_INPUT
        assert "workers" in capsys.readouterr().err


class TestValidate:
    """The validate command."""

    def test_valid(self, paths, capsys):
        """Test a valid datum."""
        assert run(["validate", paths["p1"]]) == EXIT_OK
        assert capsys.readouterr().out.strip().splitlines()[-1] == "valid"

    def test_dimension_mismatch(self, paths, capsys):
        """Test that an inconsistent dimension count is a validation failure."""
        assert run(["validate", paths["bad_rank"]]) == EXIT_VALIDATION
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """Test that a missing file is an input error."""
        assert run(["validate", str(tmp_path / "absent.json")]) == EXIT_INPUT

    def test_malformed_json(self, tmp_path):
        """Test that a file that is not JSON is an input error."""
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert run(["validate", str(path)]) == EXIT_INPUT

    def test_unknown_field(self, data_dir, tmp_path):
        """Test that an unknown key fails schema parsing."""
        document = json.loads((data_dir / "p1.json").read_text())
        document["colour_count"] = 3
        path = tmp_path / "extra.json"
        path.write_text(json.dumps(document), encoding="utf-8")
        assert run(["validate", str(path)]) == EXIT_INPUT


class TestCheck:
    """Verdicts exit 0 whatever they say."""

    def test_fails_with_destabilizer(self, paths, capsys):
        """Test the failing criterion on the blow-up of the plane."""
        assert run(["check", "--datum", paths["blp2"], "--weight", paths["one"]]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "Fails; destabilizer v=(1,1), D=-1/6"

    def test_holds(self, paths, capsys):
        """Test the criterion with its cone coefficients."""
        assert run(["check", "--datum", paths["sl2"], "--weight", paths["one"]]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "CriterionHolds; c=(1/6)"

    def test_positivity_warning(self, paths, capsys):
        """Test that a weight vanishing inside the polytope is flagged next to the verdict."""
        assert run(["check", "--datum", paths["p1"], "--weight", paths["theta_squared"]]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "CriterionHolds; weight not positive at (0)"

    def test_json(self, paths, capsys):
        """Test the JSON rendering of a verdict."""
        assert run(["--format", "json", "check", "--datum", paths["blp2"], "--weight", paths["one"]]) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["status"] == "Fails"
        assert [str(v) for v in result["destabilizer"]] == ["1", "1"]
        assert result["D"] == "-1/6"


class TestFunctionals:
    """The functionals command."""

    def test_json(self, paths, capsys):
        """Test exact values with their decimal companions."""
        argv = ["--format", "json", "functionals", "--datum", paths["p1"], "--tc", paths["f1"], "--weight", paths["one"]]
        assert run(argv) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["E"] == "15/16"
        assert result["E_decimal"] == 0.9375
        assert result["M"] == result["M_boundary"] == "3/16"

    def test_negative_configuration(self, paths, tmp_path):
        """Test that a configuration negative at a vertex is a validation failure."""
        path = tmp_path / "negative.json"
        path.write_text(json.dumps({"pieces": [{"c": -1, "lambda": [0]}]}), encoding="utf-8")
        argv = ["functionals", "--datum", paths["p1"], "--tc", str(path), "--weight", paths["one"]]
        assert run(argv) == EXIT_VALIDATION


class TestOracle:
    """The oracle subcommands."""

    def test_hilbert_csv(self, paths, capsys):
        """Test one CSV row per level."""
        assert run(["--format", "csv", "oracle", "hilbert", "--datum", paths["p1"], "--k", "1", "2", "3"]) == EXIT_OK
        assert capsys.readouterr().out.strip().splitlines() == ["k,h0", "1,3.0", "2,5.0", "3,7.0"]

    def test_futaki_not_converged(self, paths, capsys):
        """Test that extrapolation from small levels does not settle under a tight tolerance."""
        argv = [
            "--richardson-tolerance",
            "1e-9",
            "oracle",
            "futaki",
            "--datum",
            paths["p1"],
            "--tc",
            paths["kink"],
            "--weight",
            paths["one"],
            "--k",
            "1",
            "2",
            "4",
            "8",
        ]
        assert run(argv) == EXIT_NOT_CONVERGED
        assert "error" in capsys.readouterr().err


class TestDh:
    """The binned marginal."""

    def test_out_file(self, paths, tmp_path, capsys):
        """Test the CSV file written by --out."""
        out = tmp_path / "dh.csv"
        argv = ["dh", "--datum", paths["p1"], "--weight", paths["one"], "--axis", "0", "--bins", "2", "--out", str(out)]
        assert run(argv) == EXIT_OK
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        assert lines[0] == "low,high,mass,density"
        assert len(lines) == 3
        assert lines[1].startswith("-1.0,0.0,")
        assert "out:" in capsys.readouterr().out

    def test_bad_axis(self, paths):
        """Test that an axis outside the torus rank is an input error."""
        argv = ["dh", "--datum", paths["p1"], "--weight", paths["one"], "--axis", "3", "--bins", "2"]
        assert run(argv) == EXIT_INPUT


class TestSelfcheck:
    def test_short_run(self, capsys):
        """Test a short seeded run of the identity suites."""
        assert run(["--format", "json", "--seed", "3", "selfcheck", "--cases", "2"]) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["ok"] is True
        assert result["cases"] == 2
