"""Command-line front end: ``run``, ``verify`` and ``tables``.

Exit codes: 0 success, 1 verification mismatch, 2 configuration error,
3 I/O error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .banks import AccessTrace, dump_trace
from .errors import (
    ConfigurationError,
    ConflictError,
    DomainError,
    NumericError,
    SearchFailure,
)
from .oracle import probe_input, recover_output_order
from .processor import MEMORY, PIPELINE, PlanConfig, plan, reference_transform, run, unscramble

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# -- sample files ------------------------------------------------------------

def read_samples(path: str) -> np.ndarray:
    p = Path(path)
    try:
        if p.suffix.lower() == ".csv":
            data = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
            if data.shape[1] != 2:
                raise ValueError("expected two columns re,im")
            return data[:, 0] + 1j * data[:, 1]
        raw = np.fromfile(p, dtype="<f8")
        if raw.size % 2:
            raise ValueError("odd number of float64 values")
        return raw[0::2] + 1j * raw[1::2]
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_IO, f"cannot read samples from {path}: {exc}") from None


def write_samples(path: str, values) -> None:
    v = np.asarray(values, dtype=np.complex128).ravel()
    p = Path(path)
    try:
        if p.suffix.lower() == ".csv":
            np.savetxt(p, np.column_stack([v.real, v.imag]), delimiter=",",
                       header="re,im", comments="", fmt="%.17g")
        else:
            np.column_stack([v.real, v.imag]).astype("<f8").tofile(p)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


# -- commands ----------------------------------------------------------------

def _config(args) -> PlanConfig:
    try:
        return PlanConfig(args.n, args.k, args.parallelism, args.mode, args.allow_short)
    except (ConfigurationError, DomainError) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None


def _inputs(args, N: int) -> np.ndarray:
    if args.input:
        x = read_samples(args.input)
    elif args.random:
        if args.seed is None:
            raise CliError(EXIT_CONFIG, "--random needs --seed")
        rng = np.random.default_rng(args.seed)
        shape = (args.batches, N)
        x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    else:
        raise CliError(EXIT_CONFIG, "give --input FILE or --random --seed S")
    if x.size == 0 or x.size % N:
        raise CliError(EXIT_CONFIG, f"{x.size} samples is not a whole number of {N}-point batches")
    return x.reshape(-1, N)


def _simulate(args):
    cfg = _config(args)
    try:
        plan(cfg)
    except (ConfigurationError, DomainError) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    x = _inputs(args, cfg.N)
    trace = AccessTrace()
    try:
        raw, report = run(cfg, x, verify=True, trace=trace)
    except (ConflictError, NumericError, SearchFailure) as exc:
        raise CliError(EXIT_INVARIANT, str(exc)) from None
    return cfg, x, raw, report, trace


def _emit(args, cfg, raw, report, trace) -> str:
    doc = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if args.output:
        out = raw if args.raw_order else unscramble(raw, plan(cfg))
        write_samples(args.output, out)
    if args.report:
        _write_text(args.report, doc)
    if args.trace:
        try:
            with open(args.trace, "w") as fh:
                dump_trace(trace, fh)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {args.trace}: {exc}") from None
    return doc


def cmd_run(args) -> int:
    cfg, _, raw, report, trace = _simulate(args)
    doc = _emit(args, cfg, raw, report, trace)
    if args.json:
        sys.stdout.write(doc)
    else:
        print(f"N={cfg.N} mode={cfg.mode} P={cfg.P} radices={report.radices} "
              f"iterations={report.iterations} cycles={report.cycles_observed} "
              f"(model {report.cycles_model}) conflicts={report.conflicts} "
              f"max_abs_error={report.max_abs_error:.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg, _, raw, report, trace = _simulate(args)
    # the order derived by the planner must agree with one recovered from a probe
    probe = probe_input(cfg.N, seed=0)
    try:
        sim, _ = run(cfg, probe, verify=False)
        found = recover_output_order(sim, reference_transform(probe))
    except (ConflictError, NumericError, DomainError) as exc:
        raise CliError(EXIT_INVARIANT, f"order recovery failed: {exc}") from None
    if found != plan(cfg).output_perm:
        raise CliError(EXIT_INVARIANT, "recovered output order disagrees with the plan")
    doc = _emit(args, cfg, raw, report, trace)
    ok = report.max_abs_error <= args.tolerance and report.conflicts == 0
    if args.json:
        sys.stdout.write(doc)
    else:
        print(f"{'PASS' if ok else 'FAIL'} N={cfg.N} mode={cfg.mode} P={cfg.P} "
              f"max_abs_error={report.max_abs_error:.3e} tolerance={args.tolerance:g} "
              f"conflicts={report.conflicts} w={report.w_per_stage}")
    return EXIT_OK if ok else EXIT_MISMATCH


def table_rows(k: int, P: int, stage: int, mode: str | None = None) -> list[dict]:
    """Swap sequences of ``stage`` for one length per residue of n mod k."""
    mode = mode or (PIPELINE if P == 1 else MEMORY)
    rows = []
    for n in range(2 * k + 1, 3 * k + 1):
        cfg = PlanConfig(1 << n, k, P, mode)
        pl = plan(cfg)
        if not 1 <= stage <= pl.S:
            raise ConfigurationError(f"stage {stage} outside 1..{pl.S} for n={n}")
        st = pl.stages[stage - 1]
        rows.append({"residue": n % k, "n": n,
                     "steps": [list(s.as_tuple()) for s in st.steps],
                     "flagged": not st.searched})
    return sorted(rows, key=lambda r: r["residue"])


def cmd_tables(args) -> int:
    try:
        rows = table_rows(args.k, args.parallelism, args.stage, args.mode)
    except (ConfigurationError, DomainError) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    if args.json:
        doc = {"k": args.k, "parallelism": args.parallelism, "stage": args.stage,
               "rows": rows}
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    print(f"stage {args.stage}, k={args.k}, P={args.parallelism}")
    print("n mod k | n  | (h, l) sequence")
    for r in rows:
        seq = ", ".join(f"({h},{l})" for h, l in r["steps"]) or "-"
        mark = "  [exceeds bound]" if r["flagged"] else ""
        print(f"{r['residue']:>7} | {r['n']:>2} | {seq}{mark}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="transform length N")
    p.add_argument("--k", type=int, default=5, help="radix exponent (default 5)")
    p.add_argument("--mode", choices=[PIPELINE, MEMORY], default=PIPELINE)
    p.add_argument("--parallelism", type=int, choices=[1, 2, 4], default=1)
    p.add_argument("--allow-short", action="store_true",
                   help="permit memory mode for N in (2^k, 2^2k]")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="samples (.csv with re,im header, else binary float64 pairs)")
    src.add_argument("--random", action="store_true", help="random complex Gaussian input")
    p.add_argument("--seed", type=int)
    p.add_argument("--batches", type=int, default=1, help="number of random batches")
    p.add_argument("--output", help="write the spectrum here")
    p.add_argument("--raw-order", action="store_true",
                   help="write output in hardware order instead of natural order")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--trace", help="write the bank access trace (NDJSON) here")
    p.add_argument("--json", action="store_true", help="print the report as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-fft",
                                     description="Adaptive hybrid radix-2^k FFT simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="simulate and report")
    _sim_flags(p_run)
    p_run.set_defaults(func=cmd_run)
    p_ver = sub.add_parser("verify", help="simulate and compare with the reference")
    _sim_flags(p_ver)
    p_ver.add_argument("--tolerance", type=float, default=1e-9)
    p_ver.set_defaults(func=cmd_verify)
    p_tab = sub.add_parser("tables", help="print derived swap sequences")
    p_tab.add_argument("--k", type=int, default=5)
    p_tab.add_argument("--parallelism", type=int, choices=[1, 2, 4], default=1)
    p_tab.add_argument("--stage", type=int, default=1)
    p_tab.add_argument("--mode", choices=[PIPELINE, MEMORY])
    p_tab.add_argument("--json", action="store_true")
    p_tab.set_defaults(func=cmd_tables)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "batches", 1) < 1:
        print("error: --batches must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
