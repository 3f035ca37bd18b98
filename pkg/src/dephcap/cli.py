"""Command-line interface: ``dephcap <command> [options]``.

Exit codes: 0 success, 1 I/O or argument error, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor

from .bounds import (
    OptimizerConfig,
    beamsplitter_bound_via_pipeline,
    dimension_saturation,
    gap_sweep,
    optimize_capacity,
    qubit_squash_bound,
    worker_count,
)
from .verify import DEFAULT_GAMMAS, run_suites

log = logging.getLogger("dephcap")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2

COMMANDS = ("bounds", "capacity", "qubit-squash", "saturation", "verify")
BOUNDS_HEADER = ["gamma", "dim", "energy_cap", "lower_bits", "upper_bits", "gap_bits", "converged"]
CAPACITY_HEADER = ["gamma", "dim", "energy_cap", "capacity_bits", "kkt_residual", "mean_photons",
                   "energy_multiplier", "iterations", "converged"]
QUBIT_HEADER = ["gamma", "qubit_bound_bits", "beamsplitter_bound_bits", "lower_bits",
                "best_family", "best_theta", "best_phi"]
SATURATION_HEADER = ["gamma", "dim", "energy_cap", "lower_bits", "upper_bits", "lower_change",
                     "upper_change", "converged"]

# defaults per option; flags override the config file, which overrides these
DEFAULTS = {
    "gamma": "0:12:0.1",
    "dim": "10",
    "energy": "inf",
    "out": None,
    "seed": "0",
    "max_iters": "10000",
    "tol": "1e-9",
    "multistarts": "8",
}
COMMAND_DEFAULTS = {
    "qubit-squash": {"gamma": "0:12:0.25"},
    "saturation": {"gamma": "3", "dim": "2:10"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dephcap", description="Capacity bounds for the bosonic dephasing channel.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--gamma", help="MIN:MAX:STEP (inclusive) or a single value")
    parser.add_argument("--dim", help="Fock truncation d; MIN:MAX or a comma list for saturation")
    parser.add_argument("--energy", help="mean photon cap N, or 'inf'")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--seed", help="multistart seed")
    parser.add_argument("--config", help="file of key=value lines; flags take precedence")
    parser.add_argument("--max-iters", dest="max_iters", help="optimizer iteration cap per start")
    parser.add_argument("--tol", help="duality-gap tolerance in bits")
    parser.add_argument("--multistarts", help="number of optimizer starts")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys read as underscores."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS)
    merged.update(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        merged.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    return merged


def parse_gamma(spec: str) -> list[float]:
    """``"X"`` or ``"MIN:MAX:STEP"``; grid points are ``MIN + k STEP`` up to ``MAX`` inclusive."""
    parts = spec.split(":")
    try:
        nums = [float(x) for x in parts]
    except ValueError:
        raise UsageError(f"bad gamma spec {spec!r}") from None
    if any(not math.isfinite(x) for x in nums):
        raise UsageError(f"gamma spec {spec!r} must be finite")
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise UsageError(f"gamma spec {spec!r} must be X or MIN:MAX:STEP")
    lo, hi, step = nums
    if step <= 0 or lo > hi:
        raise UsageError(f"gamma spec {spec!r} needs STEP > 0 and MIN <= MAX")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # round away representation noise so grid points print as typed
    return [round(lo + k * step, 12) for k in range(count)]


def parse_dims(spec: str) -> list[int]:
    try:
        if ":" in spec:
            lo, hi = (int(x) for x in spec.split(":"))
            dims = list(range(lo, hi + 1))
        else:
            dims = [int(x) for x in spec.split(",")]
    except ValueError:
        raise UsageError(f"bad dimension spec {spec!r}") from None
    if not dims or min(dims) < 2:
        raise UsageError(f"dimensions must be >= 2, got {spec!r}")
    return dims


def parse_energy(spec: str) -> float | None:
    if spec.strip().lower() in ("inf", "infinity", "none"):
        return None
    try:
        cap = float(spec)
    except ValueError:
        raise UsageError(f"bad energy cap {spec!r}") from None
    if math.isnan(cap) or cap < 0:
        raise UsageError(f"energy cap must be >= 0 or inf, got {spec!r}")
    return None if math.isinf(cap) else cap


def optimizer_config(opts: dict) -> OptimizerConfig:
    try:
        return OptimizerConfig(
            max_iters=int(opts["max_iters"]),
            objective_tol=float(opts["tol"]),
            multistarts=int(opts["multistarts"]),
            energy_cap=parse_energy(opts["energy"]),
            seed=int(opts["seed"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, float) or hasattr(x, "dtype"):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return format(x, ".15g")
    return str(x)


def _cap(cfg: OptimizerConfig) -> float:
    return math.inf if cfg.energy_cap is None else cfg.energy_cap


def run_bounds(opts: dict) -> tuple[list, list, bool]:
    cfg = optimizer_config(opts)
    d = parse_dims(opts["dim"])
    if len(d) != 1:
        raise UsageError("bounds takes a single --dim")
    rows = gap_sweep(parse_gamma(opts["gamma"]), d[0], cfg)
    rows.sort(key=lambda r: (r.gamma, r.dim))
    table = [[r.gamma, r.dim, r.energy_cap, r.lower_bits, r.upper_bits, r.gap_bits, r.converged] for r in rows]
    return BOUNDS_HEADER, table, all(r.converged for r in rows)


def run_capacity(opts: dict) -> tuple[list, list, bool]:
    cfg = optimizer_config(opts)
    gammas = parse_gamma(opts["gamma"])
    dims = parse_dims(opts["dim"])
    jobs = sorted((g, d) for g in gammas for d in dims)
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        results = list(pool.map(lambda job: optimize_capacity(job[0], job[1], cfg), jobs))
    table = [
        [g, d, _cap(cfg), r.bits, r.kkt_residual, r.energy, r.energy_multiplier, r.iterations, r.converged]
        for (g, d), r in zip(jobs, results)
    ]
    return CAPACITY_HEADER, table, all(r.converged for r in results)


def _qubit_row(gamma: float, cfg: OptimizerConfig) -> tuple[list, bool]:
    q = qubit_squash_bound(gamma, cfg)
    bs = beamsplitter_bound_via_pipeline(gamma, 2, cfg)
    lo = optimize_capacity(gamma, 2, cfg)
    row = [gamma, q.bits, bs.bits, lo.bits, q.params.family, q.params.theta, q.params.phi]
    return row, bs.converged and lo.converged


def run_qubit_squash(opts: dict) -> tuple[list, list, bool]:
    cfg = optimizer_config(opts)
    if opts["dim"] not in ("2", DEFAULTS["dim"]):
        log.warning("qubit-squash always uses d = 2; --dim ignored")
    gammas = sorted(parse_gamma(opts["gamma"]))
    with ThreadPoolExecutor(max_workers=worker_count(len(gammas))) as pool:
        out = list(pool.map(lambda g: _qubit_row(g, cfg), gammas))
    return QUBIT_HEADER, [r for r, _ in out], all(ok for _, ok in out)


def run_saturation(opts: dict) -> tuple[list, list, bool]:
    cfg = optimizer_config(opts)
    dims = parse_dims(opts["dim"])
    table, ok = [], True
    for g in sorted(parse_gamma(opts["gamma"])):
        for r in dimension_saturation(g, dims, cfg):
            table.append([g, r.dim, _cap(cfg), r.lower_bits, r.upper_bits, r.lower_change, r.upper_change, r.converged])
            ok = ok and r.converged
    return SATURATION_HEADER, table, ok


RUNNERS = {
    "bounds": run_bounds,
    "capacity": run_capacity,
    "qubit-squash": run_qubit_squash,
    "saturation": run_saturation,
}


def write_csv(header, table, out_path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in table:
        writer.writerow([fmt(x) for x in row])
    if out_path is None:
        sys.stdout.write(buf.getvalue())
        return
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    try:
        with open(path, "a", encoding="utf-8"):
            pass
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def run_verify(opts: dict, gamma_given: bool) -> int:
    gammas = parse_gamma(opts["gamma"]) if gamma_given else DEFAULT_GAMMAS
    results = run_suites(gammas)
    for r in results:
        print(r.line())
    passed = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} suites passed")
    return EXIT_OK if passed else EXIT_NONCONVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        if args.command == "verify":
            gamma_given = args.gamma is not None or (args.config and "gamma" in read_config(args.config))
            return run_verify(opts, bool(gamma_given))
        _check_writable(opts["out"])
        header, table, converged = RUNNERS[args.command](opts)
        write_csv(header, table, opts["out"])
    except UsageError as exc:
        print(f"dephcap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dephcap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if opts["out"] is not None:
        print(f"wrote {len(table)} rows to {opts['out']}")
    if not converged:
        bad = sum(1 for row in table if row[-1] is False)
        print(f"dephcap: {bad or 'some'} row(s) did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
