"""``computelca`` command line.

Exit codes: 0 success, 2 usage, 3 configuration, 4 log data, 5 file I/O.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .analytics import IntensityBuckets
from .assessment import assess
from .config import ClusterConfig, load_config, parse_override, resolve_config_path
from .domain import ComputeQuantity
from .errors import AdpBasisMismatchError, ConfigError, DomainError, LogError, SweepError
from .logs import RunLog, read_logs, run_compute, validate_log
from .report import FORMATS, analytics_tables, base_metadata, build_report, lca_tables, render_report, \
    scenario_tables
from .scenarios import ScenarioSet, location_scenarios, parse_values, sweep

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_IO = 0, 2, 3, 4, 5


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # raise instead of exiting so cli_main controls the code
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _buckets(text: str) -> IntensityBuckets:
    try:
        return IntensityBuckets.from_thresholds(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError("compute must be a finite number >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="computelca", description="Compute analytics and life-cycle assessment of GPU training.")
    p.add_argument("--version", action="version", version=f"computelca {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def logs(sp: argparse.ArgumentParser, required: bool) -> None:
        sp.add_argument("--log", action="append", type=Path, required=required, metavar="PATH",
                        help="run log (JSON lines); repeat to merge several")

    def output(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--out", type=Path, required=True, metavar="DIR")
        sp.add_argument("--format", choices=FORMATS, default="csv")

    def analytics_opts(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--include-llm", type=_bool, default=False, metavar="{true,false}",
                        help="include LLM-backbone runs where they are excluded by default")
        sp.add_argument("--buckets", type=_buckets, default=None, metavar="CSV_LIST",
                        help="intensity thresholds in GPU-hours, e.g. 1,24,168,730")

    def lca_opts(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", metavar="PATH", help="cluster config; defaults to the packaged reference")
        sp.add_argument("--compute", type=_nonneg, metavar="GPU_HOURS", help="compute budget, overrides the log")
        sp.add_argument("--set", action="append", default=[], metavar="PATH=VALUE", dest="overrides",
                        help="override one config field, e.g. datacenter.pue=1.4")

    sp = sub.add_parser("validate", help="check run logs and list problems")
    logs(sp, True)

    sp = sub.add_parser("analyze", help="compute-distribution analytics")
    logs(sp, True)
    output(sp)
    analytics_opts(sp)

    sp = sub.add_parser("lca", help="life-cycle assessment of a compute budget")
    logs(sp, False)
    lca_opts(sp)
    output(sp)

    sp = sub.add_parser("scenario", help="location scenarios and parameter sweeps")
    logs(sp, False)
    lca_opts(sp)
    output(sp)
    sp.add_argument("--sweep", action="append", default=[], metavar="PATH", help="config path to sweep")
    sp.add_argument("--values", action="append", default=[], metavar="CSV_LIST",
                    help="values for the matching --sweep")

    sp = sub.add_parser("report", help="analytics, assessment and scenarios in one report")
    logs(sp, True)
    lca_opts(sp)
    output(sp)
    analytics_opts(sp)
    return p


def _read(paths: Sequence[Path] | None) -> RunLog | None:
    return read_logs(paths) if paths else None


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _compute(args: argparse.Namespace, log: RunLog | None, cluster: ClusterConfig) -> tuple[ComputeQuantity, str]:
    if args.compute is not None:
        return ComputeQuantity(args.compute), "command line"
    if log is not None:
        return ComputeQuantity.total(run_compute(r) for r in log.runs), "log"
    return cluster.compute, "config"


def _metadata(args: argparse.Namespace, log: RunLog | None, cluster: ClusterConfig | None = None,
              compute: tuple[ComputeQuantity, str] | None = None) -> dict[str, str]:
    extra: dict[str, str] = {"command": args.command}
    for i, p in enumerate(args.log or []):
        extra[f"log_{i}"] = p.name
        extra[f"log_{i}_sha256"] = _sha256(p)
    if log is not None and log.runs:
        extra["runs"] = str(len(log.runs))
        extra["first_start"] = min(r.start for r in log.runs).strftime("%Y-%m-%dT%H:%M:%SZ")
        extra["last_end"] = max(r.end for r in log.runs).strftime("%Y-%m-%dT%H:%M:%SZ")
    if getattr(args, "include_llm", None) is not None:
        extra["include_llm"] = str(args.include_llm).lower()
    if cluster is not None:
        extra["config"] = cluster.name
        extra["config_sha256"] = cluster.config_hash
        extra["grid"] = cluster.grid.name
    if compute is not None:
        extra["compute_gpu_hours"] = repr(compute[0].gpu_hours)
        extra["compute_source"] = compute[1]
    return base_metadata(**extra)


def _cluster(args: argparse.Namespace) -> ClusterConfig:
    if args.config is not None:
        resolve_config_path(args.config)
    return load_config(args.config, [parse_override(s) for s in args.overrides])


def _cmd_validate(args: argparse.Namespace) -> int:
    log = read_logs(args.log)
    diags = validate_log(log)
    for d in diags:
        print(d, file=sys.stderr)
    total = math.fsum(run_compute(r).gpu_hours for r in log.runs if r.duration_seconds >= 0)
    print(f"{len(log.runs)} runs, {total:.6g} GPU-h, {len(diags)} problems")
    return EXIT_DATA if diags else EXIT_OK


def _checked_log(args: argparse.Namespace) -> RunLog | None:
    log = _read(args.log)
    if log is not None:
        diags = validate_log(log)
        if diags:
            for d in diags:
                print(d, file=sys.stderr)
            raise LogError(f"{len(diags)} invalid record(s) in log")
    return log


def _emit(report, args: argparse.Namespace) -> int:
    for path in render_report(report, args.out, args.format):
        print(path)
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    log = _checked_log(args)
    tables = analytics_tables(log, args.buckets, args.include_llm)
    return _emit(build_report(_metadata(args, log), analytics=tables), args)


def _cmd_lca(args: argparse.Namespace) -> int:
    cluster = _cluster(args)
    log = _checked_log(args)
    compute = _compute(args, log, cluster)
    a = assess(cluster, compute[0])
    return _emit(build_report(_metadata(args, log, cluster, compute), lca=lca_tables(a)), args)


def _cmd_scenario(args: argparse.Namespace) -> int:
    if len(args.sweep) != len(args.values):
        raise _UsageError("each --sweep needs exactly one matching --values")
    cluster = _cluster(args)
    log = _checked_log(args)
    compute = _compute(args, log, cluster)
    s = ScenarioSet.from_config(cluster, compute[0])
    sweeps = {path: sweep(path, parse_values(vals), s) for path, vals in zip(args.sweep, args.values)}
    tables = scenario_tables(location_scenarios(s), sweeps)
    return _emit(build_report(_metadata(args, log, cluster, compute), scenarios=tables), args)


def _cmd_report(args: argparse.Namespace) -> int:
    cluster = _cluster(args)
    log = _checked_log(args)
    compute = _compute(args, log, cluster)
    a = assess(cluster, compute[0])
    s = ScenarioSet.from_config(cluster, compute[0])
    report = build_report(
        _metadata(args, log, cluster, compute),
        analytics=analytics_tables(log, args.buckets, args.include_llm),
        lca=lca_tables(a),
        scenarios=scenario_tables(location_scenarios(s)),
    )
    return _emit(report, args)


COMMANDS = {"validate": _cmd_validate, "analyze": _cmd_analyze, "lca": _cmd_lca, "scenario": _cmd_scenario,
            "report": _cmd_report}


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SweepError, DomainError, AdpBasisMismatchError) as exc:
        print(f"computelca: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LogError as exc:
        print(f"computelca: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"computelca: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    raise SystemExit(cli_main())
