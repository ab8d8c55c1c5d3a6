import argparse
import logging
import logging.config as lconfig
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import InputError, KStabError, NoConvergence, NotConverged
from .functionals import barycenter_with_error, dh_marginal, evaluate
from .kstab_env import EngineConfig, LogFormat, OutputFormat, RunConfig, get_config, set_config
from .log import setup_logging
from .oracle import (
    adjudicate,
    fibre_sides,
    futaki_estimate,
    hilbert,
    hilbert_coefficients,
    s1_expansion,
    s_sums,
    section_counts,
)
from .rational_geometry import as_rational, sub
from .selfcheck import run_selfcheck
from .spherical_datum import SphericalDatum, read_datum, validate
from .stability import (
    ScanFamily,
    Verdict,
    VerdictStatus,
    criterion,
    destabilizer,
    ratio_scan,
    soliton_solve,
)
from .test_config import read_test_config, validate_tc
from .utils import render, with_serializer
from .weights import positivity_audit, read_weight

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3

CSV_HELP = """\
CSV columns:
  functionals  V, Vg, E, J, D, L, M, M_boundary, Fut, Fut_closed, barycenter,
               reduced_central_fibre, multiplicities, quadrature_error
  oracle       one row per level: k and the command's values at k
  dh --out     low, high, mass, density (one row per bin)
Exact values are written as decimals in CSV and as "p/q" plus <key>_decimal in JSON.
"""


def _point(values: Sequence) -> str:
    return "(" + ",".join(str(v) for v in values) + ")"


def _load(args: argparse.Namespace) -> SphericalDatum:
    return read_datum(args.datum)


def _verdict_dict(verdict: Verdict) -> dict:
    return {
        "status": verdict.status,
        "coefficients": verdict.coefficients,
        "barycenter": verdict.barycenter,
        "residual": verdict.residual,
        "warning": verdict.warning,
    }


@with_serializer
def cmd_validate(args: argparse.Namespace) -> dict:
    report = validate(_load(args))
    if not report.ok:
        args.exit_code = EXIT_VALIDATION
    result = {
        "ok": report.ok,
        "checks": [
            {"name": c.name, "passed": c.passed, "severity": c.severity, "detail": c.detail}
            for c in report.checks
        ],
    }
    if args.format == OutputFormat.CSV.value:
        result["rows"] = result["checks"]
    if args.format == OutputFormat.TEXT.value:
        lines = [
            f"{c.name}: {'ok' if c.passed else ('warning' if c.severity == 'warning' else 'FAIL')}"
            + (f" ({c.detail})" if c.detail else "")
            for c in report.checks
        ]
        result["text"] = "\n".join(lines + ["valid" if report.ok else "invalid"])
    return result


@with_serializer
def cmd_functionals(args: argparse.Namespace) -> dict:
    datum = _load(args)
    tc = validate_tc(datum, read_test_config(args.tc))
    return evaluate(datum, tc, read_weight(args.weight)).as_dict()


@with_serializer
def cmd_barycenter(args: argparse.Namespace) -> dict:
    datum = _load(args)
    point, error = barycenter_with_error(datum, read_weight(args.weight))
    return {"barycenter": point, "offset": sub(point, datum.kappa_p), "quadrature_error": error}


@with_serializer
def cmd_check(args: argparse.Namespace) -> dict:
    datum = _load(args)
    weight = read_weight(args.weight)
    verdict = criterion(datum, weight)
    result = _verdict_dict(verdict)
    text = verdict.status.value
    audit = positivity_audit(weight, datum, get_config().audit_grid)
    if not audit.passed:
        result["positivity_witness"] = audit.witness
        text += f"; weight not positive at {_point(audit.witness)}"
    if verdict.status == VerdictStatus.FAILS and weight.exact:
        found = destabilizer(datum, weight)
        if found is not None:
            result["destabilizer"] = found.direction
            result["D"] = found.D
            text += f"; destabilizer v={_point(found.direction)}, D={found.D}"
    elif verdict.coefficients:
        text += f"; c={_point(verdict.coefficients)}"
    if verdict.warning:
        text += f"; {verdict.warning}"
    if args.format == OutputFormat.TEXT.value:
        result["text"] = text
    return result


@with_serializer
def cmd_destabilize(args: argparse.Namespace) -> dict:
    found = destabilizer(_load(args), read_weight(args.weight))
    result = {"destabilizer": None if found is None else found.direction, "D": None if found is None else found.D}
    if args.format == OutputFormat.TEXT.value:
        result["text"] = "none" if found is None else f"v={_point(found.direction)}, D={found.D}"
    return result


@with_serializer
def cmd_scan(args: argparse.Namespace) -> dict:
    family = ScanFamily(
        t_values=tuple(args.t) if args.t else ScanFamily.t_values,
        tau_values=tuple(args.tau) if args.tau else ScanFamily.tau_values,
        two_piece=not args.affine_only,
    )
    found = ratio_scan(_load(args), read_weight(args.weight), family)
    result = {"status": found.status, "min_ratio": found.min_ratio, "members": found.count}
    if found.argmin is not None:
        result["argmin"] = [{"c": p.c, "lambda": p.gradient} for p in found.argmin.pieces]
    if found.destabilizer is not None:
        result["destabilizer"] = found.destabilizer.direction
        result["D"] = found.destabilizer.D
    return result


@with_serializer
def cmd_soliton(args: argparse.Namespace) -> dict:
    bracket = tuple(args.bracket) if args.bracket else None
    found = soliton_solve(_load(args), args.direction, bracket)
    return {"c": found.c, "residual": found.residual, "bracket": found.bracket, "converged": found.converged}


@with_serializer
def cmd_hilbert(args: argparse.Namespace) -> dict:
    datum = _load(args)
    rows = [{"k": k, "h0": hilbert(datum, k)} for k in args.k]
    leading, second = hilbert_coefficients(datum)
    return {"rows": rows, "leading": leading, "second": second}


@with_serializer
def cmd_ssums(args: argparse.Namespace) -> dict:
    datum = _load(args)
    tc = validate_tc(datum, read_test_config(args.tc))
    weight = read_weight(args.weight)
    rows = []
    for k in args.k:
        s1, s2 = s_sums(datum, tc, weight, k)
        rows.append({"k": k, "S1": s1, "S2": s2})
    leading, second = s1_expansion(datum, tc, weight)
    return {"rows": rows, "s1_leading": leading, "s1_second": second}


@with_serializer
def cmd_futaki(args: argparse.Namespace) -> dict:
    datum = _load(args)
    tc = validate_tc(datum, read_test_config(args.tc))
    weight = read_weight(args.weight)
    estimate = futaki_estimate(datum, tc, weight, args.k)
    verdict = adjudicate(estimate, evaluate(datum, tc, weight))
    rows = [
        {"k": row.k, "ratio": row.ratio, "scaled": row.scaled, "first": row.first, "second": row.second}
        for row in estimate.table
    ]
    return {
        "F0": estimate.F0,
        "F1": estimate.F1,
        "doubled": estimate.doubled,
        "cauchy": estimate.cauchy,
        "match": verdict.match,
        "adjudicated": {"F1": verdict.f1, "2F1": verdict.lattice},
        "Fut": verdict.fut,
        "Fut_closed": verdict.fut_closed,
        "rows": rows,
    }


@with_serializer
def cmd_fibre(args: argparse.Namespace) -> dict:
    datum = _load(args)
    chi = tuple(args.chi) if args.chi else None
    sides = fibre_sides(datum, args.k_vector, chi)
    result = {"lhs": sides.lhs, "rhs": sides.rhs, "holds": sides.holds}
    if args.sections:
        counts = section_counts(datum, args.k_vector, chi)
        result.update({"sections_lhs": counts.lhs, "sections_rhs": counts.rhs, "sections_hold": counts.holds})
    if not result["holds"] or not result.get("sections_hold", True):
        args.exit_code = EXIT_VALIDATION
    return result


@with_serializer
def cmd_dh(args: argparse.Namespace) -> dict:
    bins = dh_marginal(_load(args), read_weight(args.weight), args.axis, args.bins)
    rows = [{"low": b.low, "high": b.high, "mass": b.mass, "density": b.density} for b in bins]
    result = {"axis": args.axis, "bins": args.bins, "total_mass": sum(b.mass for b in bins)}
    if args.out:
        args.out.write_text(render({"rows": rows}, OutputFormat.CSV.value) + "\n", encoding="utf-8")
        result["out"] = args.out
    else:
        result["rows"] = rows
    return result


@with_serializer
def cmd_selfcheck(args: argparse.Namespace) -> dict:
    report = run_selfcheck(args.seed, args.cases)
    if not report.ok:
        args.exit_code = EXIT_VALIDATION
    return {
        "seed": report.seed,
        "cases": report.cases,
        "ok": report.ok,
        "failures": report.failures,
        "first_failure": report.first_failure,
    }


def _add_inputs(parser: argparse.ArgumentParser, *names: str) -> None:
    for name in names:
        parser.add_argument(f"--{name}", type=Path, required=True, help=f"{name} JSON document")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weighted-kstab",
        description="Exact weighted K-stability of Q-Fano spherical varieties.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--format", choices=OutputFormat.values(), default=OutputFormat.TEXT.value)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--quadrature-tolerance", type=float, default=1e-12)
    parser.add_argument("--max-refinements", type=int, default=12)
    parser.add_argument("--richardson-tolerance", type=float, default=1e-3)
    parser.add_argument("--log-level", default="WARNING")
    parser.add_argument("--log-format", choices=LogFormat.values(), default=LogFormat.DEFAULT.value)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("validate", help="structural checks of a datum")
    p.add_argument("datum", type=Path)
    p.set_defaults(handler=cmd_validate)

    p = commands.add_parser("functionals", help="all functionals of a test configuration")
    _add_inputs(p, "datum", "tc", "weight")
    p.set_defaults(handler=cmd_functionals)

    for name, handler, text in (
        ("barycenter", cmd_barycenter, "weighted barycenter and its offset from kappa_P"),
        ("check", cmd_check, "barycenter criterion, with a destabilizer when it fails"),
        ("destabilize", cmd_destabilize, "exact LP witness"),
    ):
        p = commands.add_parser(name, help=text)
        _add_inputs(p, "datum", "weight")
        p.set_defaults(handler=handler)

    p = commands.add_parser("scan", help="minimum D/J over a normalized family")
    _add_inputs(p, "datum", "weight")
    p.add_argument("--t", type=as_rational, nargs="+")
    p.add_argument("--tau", type=as_rational, nargs="+")
    p.add_argument("--affine-only", action="store_true")
    p.set_defaults(handler=cmd_scan)

    p = commands.add_parser("soliton", help="exp-affine weight balancing the barycenter")
    p.add_argument("--datum", type=Path, required=True)
    p.add_argument("--direction", type=float, nargs="+", required=True)
    p.add_argument("--bracket", type=float, nargs=2)
    p.set_defaults(handler=cmd_soliton)

    oracle = commands.add_parser("oracle", help="lattice-sum oracle").add_subparsers(dest="oracle", required=True)
    p = oracle.add_parser("hilbert")
    p.add_argument("--datum", type=Path, required=True)
    p.add_argument("--k", type=int, nargs="+", required=True)
    p.set_defaults(handler=cmd_hilbert)
    for name, handler in (("ssums", cmd_ssums), ("futaki", cmd_futaki)):
        p = oracle.add_parser(name)
        _add_inputs(p, "datum", "tc", "weight")
        p.add_argument("--k", type=int, nargs="+", required=True)
        p.set_defaults(handler=handler)
    p = oracle.add_parser("fibre")
    p.add_argument("--datum", type=Path, required=True)
    p.add_argument("--k-vector", type=int, nargs="+", required=True)
    p.add_argument("--chi", type=as_rational, nargs="+")
    p.add_argument("--sections", action="store_true", help="also compare level-one section counts")
    p.set_defaults(handler=cmd_fibre)

    p = commands.add_parser("dh", help="binned Duistermaat-Heckman marginal along a torus axis")
    _add_inputs(p, "datum", "weight")
    p.add_argument("--axis", type=int, required=True)
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_dh)

    p = commands.add_parser("selfcheck", help="randomized identity suites")
    p.add_argument("--cases", type=int, default=100)
    p.set_defaults(handler=cmd_selfcheck)
    return parser


def _configure(args: argparse.Namespace) -> RunConfig:
    engine = EngineConfig(
        seed=args.seed,
        workers=args.workers,
        quadrature_tolerance=args.quadrature_tolerance,
        max_refinements=args.max_refinements,
        richardson_tolerance=args.richardson_tolerance,
        log_level=args.log_level,
        log_format=args.log_format,
    )
    set_config(engine)
    log_dict_config = setup_logging(None, engine.log_level, engine.log_format)
    if log_dict_config:
        lconfig.dictConfig(log_dict_config)
    inputs = {k: v for k, v in vars(args).items() if isinstance(v, Path)}
    return RunConfig(args.command, inputs, OutputFormat(args.format), args.seed, engine)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run one command and return its exit code.

    Verdicts exit 0 whatever they say; 1 is a validation failure, 2 an unreadable or
    malformed input and 3 a numeric procedure that did not converge.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        config = _configure(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    logger.info(f"running {config.subcommand} with {config.inputs}")

    args.exit_code = EXIT_OK
    try:
        output = args.handler(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (NotConverged, NoConvergence) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except KStabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        set_config(None)
    print(output)
    return args.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
