"""Command-line entry point: ``quadobs analyze|check-pe|simulate <scenario>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .augmentation import c_closed_form
from .errors import (
    AssumptionViolated,
    ConfigurationError,
    DimensionError,
    GridRangeError,
    NumericalBlowup,
    RiccatiDegenerate,
    ScenarioFormatError,
    SignalOrderError,
)
from .harness import (
    BUNDLED,
    emit_pe_csv,
    emit_trace_csv,
    pe_to_csv,
    run_pe_suite,
    scenario_from_dict,
    simulate,
    trace_to_csv,
)
from .observability import zero_input_rank

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _load_doc(ref: str) -> dict:
    path = Path(ref)
    if ref in BUNDLED and not path.exists():
        path = Path(__file__).with_name("scenarios") / BUNDLED[ref]
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"{path}: {exc}") from None


def _apply_overrides(doc: dict, args) -> dict:
    grid = doc.setdefault("grid", {})
    if args.step is not None:
        grid["step"] = args.step
    if args.horizon is not None:
        grid["t_end"] = float(grid.get("t_start", 0.0)) + args.horizon
    if args.theta is not None:
        doc.setdefault("observer", {})["theta"] = args.theta
    pe = doc.setdefault("pe", {})
    if args.window is not None:
        pe["delta"] = args.window
    if args.mu is not None:
        pe["mu"] = args.mu
    if args.kappa is not None:
        pe["kappa"] = args.kappa
    if "starts" in pe and "t_end" in grid:
        delta = float(pe.get("delta", 2.0))
        kept = [s for s in pe["starts"] if float(s) + delta <= float(grid["t_end"]) + 1e-12]
        if len(kept) < len(pe["starts"]):
            print(f"note: dropped {len(pe['starts']) - len(kept)} window start(s) beyond the horizon",
                  file=sys.stderr)
        pe["starts"] = kept
    return doc


def _analyze(sc) -> str:
    aug = sc.aug
    lines = [
        f"scenario: {sc.name}",
        f"n = {aug.n}  p = {aug.p}  m = {aug.m}  extended dimension = {aug.extended_dim}",
        "Assumption C_m = 0: satisfied",
    ]
    for i, Ci in enumerate(aug.cseq.matrices):
        lines.append(f"  ||C_{i}||_F = {np.linalg.norm(Ci):.6g}")
    lines.append(f"  ||C_{aug.m}||_F = {np.linalg.norm(c_closed_form(sc.system, aug.m)):.3g}")
    rank = zero_input_rank(aug)
    lines.append(f"zero-input Kalman rank = {rank} of {aug.extended_dim}"
                 + (" (not observable without excitation)" if rank < aug.extended_dim else ""))
    lines.append(f"kernel backend: {kernels.BACKEND}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadobs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("analyze", "print the immersion summary"),
                        ("check-pe", "evaluate observability / excitation certificates (CSV)"),
                        ("simulate", "run the plant and observer (trace CSV)")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario JSON path or bundled name (vehicle)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--step", type=float, help="integration / quadrature step [s]")
        p.add_argument("--horizon", type=float, help="simulation horizon [s]")
        p.add_argument("--theta", type=float, help="observer forgetting factor")
        p.add_argument("--window", type=float, help="PE window length delta [s]")
        p.add_argument("--mu", type=float, help="PE threshold")
        p.add_argument("--kappa", type=int, help="highest r_i index for the determinant test")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _apply_overrides(_load_doc(args.scenario), args)
        sc = scenario_from_dict(doc)
        if args.command == "analyze":
            text = _analyze(sc)
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
        elif args.command == "check-pe":
            reports = run_pe_suite(sc)
            if args.out:
                emit_pe_csv(reports, args.out)
            else:
                sys.stdout.write(pe_to_csv(reports))
        else:
            trace = simulate(sc)
            if args.out:
                emit_trace_csv(trace, args.out)
            else:
                sys.stdout.write(trace_to_csv(trace))
    except (ConfigurationError, DimensionError, GridRangeError, AssumptionViolated,
            SignalOrderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalBlowup, RiccatiDegenerate) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
