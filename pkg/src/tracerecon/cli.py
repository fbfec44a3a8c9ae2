"""Command-line surface: scan, calibrate and simulate subcommands.

Exit codes: 0 success, 2 unreadable input or usage error, 3 parse failure
(signature, scenario or sample data); ``simulate --check`` exits 1 when an
oracle property fails.  All timestamps are UTC; output ordering never
depends on input order or locale.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .bodyfile import IngestError, load_metadata, write_bodyfile
from .calibration import DEFAULT_SIGMA_MULTIPLIER, CalibrationError, estimate_threshold
from .engine import reconstruct
from .model import ActionInstanceApproximation, Timestamp
from .signatures import SignatureError, SignaturePack, merge_packs, parse_signature_pack
from .simulator import (
    ScenarioError,
    SimulationError,
    always_updated_targets,
    derive_signatures,
    oracle_check,
    parse_scenario,
    simulate,
)

SIG_DIR_ENV = "TRACE_RECON_SIG_DIR"

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARSE = 3


@dataclass(frozen=True)
class ReportRow:
    """One timeline line of the scan report."""

    computer_label: str
    action: str
    rank: str
    interval_start: Timestamp
    interval_end: Timestamp
    evidence_count: int
    note: str

    def __post_init__(self) -> None:
        if self.interval_start > self.interval_end:
            raise ValueError("report row interval start exceeds its end")


_COLUMNS = (
    "computer",
    "action",
    "rank",
    "interval_start",
    "interval_end",
    "evidence_count",
    "note",
)


def _format_time(value: Timestamp, utc_display: bool) -> str:
    if not utc_display:
        return str(value)
    return datetime.fromtimestamp(value, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _rows_from(
    approximations: list[ActionInstanceApproximation], label: str
) -> list[ReportRow]:
    return [
        ReportRow(
            computer_label=label,
            action=a.action_name,
            rank=a.rank.value,
            interval_start=a.interval.start if a.interval.start is not None else 0,
            interval_end=a.interval.end if a.interval.end is not None else 0,
            evidence_count=len(a.evidence),
            note=a.note.value,
        )
        for a in approximations
    ]


def _row_cells(row: ReportRow, utc_display: bool) -> list[str]:
    return [
        row.computer_label,
        row.action,
        row.rank,
        _format_time(row.interval_start, utc_display),
        _format_time(row.interval_end, utc_display),
        str(row.evidence_count),
        row.note,
    ]


def _emit_table(rows: list[ReportRow], utc_display: bool, out) -> None:
    grid = [list(_COLUMNS)] + [_row_cells(r, utc_display) for r in rows]
    widths = [max(len(line[i]) for line in grid) for i in range(len(_COLUMNS))]
    for line in grid:
        out.write("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() + "\n")


def _emit_csv(rows: list[ReportRow], utc_display: bool, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for row in rows:
        writer.writerow(_row_cells(row, utc_display))


def _emit_records(rows: list[ReportRow], utc_display: bool, out) -> None:
    for row in rows:
        for column, cell in zip(_COLUMNS, _row_cells(row, utc_display)):
            out.write(f"{column}: {cell}\n")
        out.write("\n")


_EMITTERS = {"table": _emit_table, "csv": _emit_csv, "records": _emit_records}


def default_signature_dir() -> Path:
    override = os.environ.get(SIG_DIR_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("tracerecon") / "data" / "signatures"))


def _load_packs(pack_paths: list[str]) -> SignaturePack:
    paths: list[Path]
    if pack_paths:
        paths = [Path(p) for p in pack_paths]
    else:
        sig_dir = default_signature_dir()
        paths = sorted(sig_dir.glob("*.sig"))
        if not paths:
            raise IngestError(f"no *.sig files found in {sig_dir}")
    packs = []
    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read signature pack {path}: {exc}") from exc
        try:
            packs.append(parse_signature_pack(text))
        except SignatureError as exc:
            raise SignatureError(exc.line_no, f"{path}: {exc}") from exc
    try:
        return merge_packs(packs)
    except ValueError as exc:
        raise SignatureError(None, str(exc)) from exc


def cmd_scan(args: argparse.Namespace) -> int:
    try:
        records = load_metadata(args.metadata)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        pack = _load_packs(args.signatures)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SignatureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    approximations = reconstruct(records, pack)
    label = args.label or (
        "-" if args.metadata == "-" else Path(args.metadata).stem
    )
    rows = _rows_from(approximations, label)
    _EMITTERS[args.format](rows, args.utc_display, sys.stdout)
    print(f"{len(rows)} detections", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    source = args.samples
    try:
        if source == "-":
            text = sys.stdin.read()
        else:
            text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read samples from {source}: {exc}", file=sys.stderr)
        return EXIT_IO

    samples: list[float] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            samples.append(float(line))
        except ValueError:
            print(f"error: line {line_no}: not a duration: {line!r}", file=sys.stderr)
            return EXIT_PARSE
    try:
        estimate = estimate_threshold(samples, k=args.k)
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(f"n: {estimate.n}")
    print(f"mean: {estimate.mean:.6g}")
    print(f"sigma: {estimate.sigma:.6g}")
    print(f"k: {estimate.k:.6g}")
    print(f"theta: {estimate.theta}")
    return EXIT_OK


def _truth_payload(seed: int, truth) -> dict:
    return {
        "seed": seed,
        "instances": [
            {
                "index": i.index,
                "action": i.action,
                "tau": i.tau,
                "variant": i.variant,
            }
            for i in truth.instances
        ],
        "writes": [
            {
                "instance": w.instance_index,
                "path": w.path,
                "kind": w.kind.value,
                "value": w.value,
                "default": w.is_default,
            }
            for w in truth.writes
        ],
    }


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read scenario {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        scenario = parse_scenario(text)
        records, truth = simulate({}, scenario.specs, scenario.schedule, args.seed)
    except (ScenarioError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "metadata.body", "w", encoding="utf-8", newline="") as fh:
            write_bodyfile(records, fh)
        with open(out_dir / "truth.json", "w", encoding="utf-8", newline="") as fh:
            json.dump(_truth_payload(args.seed, truth), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.check:
        pack = derive_signatures(scenario.specs)
        results = reconstruct(records, pack)
        core_targets = {
            name: always_updated_targets(spec)
            for name, spec in scenario.specs.items()
        }
        report = oracle_check(truth, results, core_targets)
        for line in report.summary_lines():
            print(line)
        if not report.ok:
            return 1
    return EXIT_OK


def _positive_float(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}")
    if parsed <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return parsed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trace-recon",
        description=(
            "Reconstruct past user-action instances from file-system "
            "timestamp metadata using trace signatures."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser(
        "scan", help="reconstruct a timeline from a bodyfile and signature packs"
    )
    scan.add_argument("metadata", help="bodyfile path, or - for stdin")
    scan.add_argument(
        "signatures",
        nargs="*",
        help=f"signature pack files (default: all *.sig in ${SIG_DIR_ENV} "
        "or the packaged signature directory)",
    )
    scan.add_argument(
        "--format", choices=sorted(_EMITTERS), default="table", help="output format"
    )
    scan.add_argument(
        "--utc-display",
        action="store_true",
        help="render timestamps as ISO-8601 UTC instead of epoch seconds",
    )
    scan.add_argument("--label", help="computer label for the report (default: file stem)")
    scan.set_defaults(func=cmd_scan)

    calibrate = sub.add_parser(
        "calibrate", help="estimate an update threshold from duration samples"
    )
    calibrate.add_argument(
        "samples",
        nargs="?",
        default="-",
        help="file with one duration (seconds) per line, or - for stdin",
    )
    calibrate.add_argument(
        "--k",
        type=_positive_float,
        default=DEFAULT_SIGMA_MULTIPLIER,
        help="sigma multiplier for the cutoff (default 2)",
    )
    calibrate.set_defaults(func=cmd_calibrate)

    sim = sub.add_parser(
        "simulate", help="run a scenario file and export metadata plus ground truth"
    )
    sim.add_argument("scenario", help="scenario file path")
    sim.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument(
        "--check",
        action="store_true",
        help="reconstruct from the exported metadata and verify it against the ground truth",
    )
    sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
