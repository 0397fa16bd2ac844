"""Command-line front end.

Every subcommand writes CSV (with the resolved configuration echoed as
``#`` comment lines) or JSON (with a ``config`` field). Floats carry 17
significant digits so outputs round-trip exactly.

Exit codes: 0 success, 2 usage or guard error, 3 numerical error, 4 domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Callable, Sequence

import numpy as np

from . import coefficients, expansion, fbm
from .errors import DomainError, FracExpError, NumericalError
from .lab import montecarlo, solvers, variance

WORD_HELP = (
    "binary word i_1...i_k read innermost-first: the leftmost letter is the "
    "innermost integral; 0 = dt, 1 = dB (e.g. 011 = ∫∫∫ dt_1 dB_2 dB_3)"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _json_safe(x: Any) -> Any:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


class Table:
    """Result of a subcommand: column names plus rows, or a single JSON record."""

    def __init__(self, columns: Sequence[str], rows: Sequence[Sequence[Any]], record: dict | None = None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.record = record

    def render(self, fmt: str, config: dict) -> str:
        if fmt == "json":
            body = self.record if self.record is not None else {
                "columns": self.columns, "rows": self.rows}
            return json.dumps(_json_safe({"config": config, **body}), indent=2, sort_keys=False) + "\n"
        buf = io.StringIO()
        for key, value in config.items():
            buf.write(f"# {key}={_fmt(value) if not isinstance(value, list) else ','.join(map(_fmt, value))}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _cmd_coeff(a) -> Table:
    if a.method == "analytic":
        r = coefficients.c_coefficient_analytic(a.word, a.hurst, tol=a.tol)
    else:
        r = coefficients.c_coefficient_mc(a.word, a.hurst, n_paths=a.samples, n_steps=a.steps, seed=a.seed)
    record = {"word": r.word, "hurst": r.hurst, "method": r.method, "value": r.value, "stderr": r.stderr}
    return Table(list(record), [list(record.values())], record)


def _terms_table(tl: expansion.TermList) -> Table:
    with_se = any(t.stderr is not None for t in tl.terms)
    cols = ["m", "n", "exponent", "coefficient"] + (["stderr"] if with_se else [])
    rows = []
    for t in tl.terms:
        row = [t.pair.m, t.pair.n, t.exponent, t.coefficient]
        if with_se:
            row.append("" if t.stderr is None else t.stderr)
        rows.append(row)
    return Table(cols, rows, tl.to_json_obj())


def _cmd_expand(a) -> Table:
    tl = expansion.expand_p0(a.f, a.b, a.x0, a.hurst, a.p, a.q, coeff_method=a.coeff_method,
                             seed=a.seed)
    return _terms_table(tl)


def _cmd_cond_expand(a) -> Table:
    return _terms_table(expansion.cond_expand_driftless(a.f, a.t, a.beta, a.hurst, a.p, a.q))


def _cmd_mc_check(a) -> Table:
    tl = expansion.expand_p0(a.f, a.b, a.x0, a.hurst, a.p, a.q)
    rows = []
    for h in a.h_grid:
        est = montecarlo.mc_p0(a.f, a.b, a.x0, a.hurst, h, a.samples, a.steps, seed=a.seed,
                               variance_reduction=a.variance_reduction)
        trunc = expansion.evaluate_truncation(tl, h)
        rows.append([h, est.value, est.stderr, est.n, trunc, est.value - trunc])
    return Table(["h", "mc_value", "mc_stderr", "n", "truncation", "difference"], rows)


def _cmd_var_scan(a) -> Table:
    rows = variance.variance_scan(a.t, a.hurst, a.alpha, a.h_grid, tol=a.tol)
    cols = ["h", "var", "raw_var", "normalized", "ratio_to_limit", "lower", "upper"]
    return Table(cols, [[getattr(r, c) for c in cols] for r in rows])


def _cmd_sigma2(a) -> Table:
    return Table(["hurst", "sigma2"], [[a.hurst, variance.sigma_h_sq(a.hurst)]])


def _cmd_r_fn(a) -> Table:
    return Table(["x", "r"], [[x, variance.r_fn(x, a.hurst)] for x in a.x_grid])


def _cmd_fbm_sample(a) -> Table:
    if a.points < 2:
        raise UsageError("--points must be at least 2")
    grid = fbm.TimeGrid.uniform(a.horizon, a.points - 1)
    B = fbm.sample_fbm_array(grid, a.hurst, a.seed, a.paths)
    cols = ["t"] + [f"path_{i}" for i in range(a.paths)]
    rows = [[t, *B[:, k]] for k, t in enumerate(grid.times)]
    return Table(cols, rows)


def _cmd_solve(a) -> Table:
    problem = solvers.SdeProblem(a.b, a.sigma, a.x0, a.hurst, a.horizon)
    grid = fbm.TimeGrid.uniform(a.horizon, a.steps)
    B = fbm.sample_fbm_array(grid, a.hurst, a.seed, 1)[0]
    if a.method == "euler":
        X = solvers.euler_young_solve(problem, (grid.times, B))
    else:
        X = solvers.doss_sussmann_solve(problem, (grid.times, B))
    return Table(["t", "B", "X"], [[t, b, x] for t, b, x in zip(grid.times, B, X)])


def _common(p: argparse.ArgumentParser, fmt: str = "csv") -> None:
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--output", "-o", default=None, help="output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracexp", description=__doc__.split("\n\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog=f"Word order: {WORD_HELP}.\n"
                            "Exit codes: 0 ok, 2 usage/guard error, 3 numerical error, 4 domain error.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("coeff", help="expected iterated integral c_I of a word")
    p.add_argument("--word", required=True, help=WORD_HELP)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--method", choices=("analytic", "mc"), default="analytic")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=512)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p, "json")
    p.set_defaults(run=_cmd_coeff)

    p = sub.add_parser("expand", help="small-h expansion of E[f(X_h)] - f(x)")
    for name in ("--f", "--b"):
        p.add_argument(name, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--coeff-method", choices=("auto", "analytic", "mc"), default="auto")
    p.add_argument("--seed", type=_seed, default=0)
    _common(p)
    p.set_defaults(run=_cmd_expand)

    p = sub.add_parser("cond-expand", help="driftless expansion of E[f(B_{t+h}) - f(B_t) | B_t = beta]")
    p.add_argument("--f", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    _common(p)
    p.set_defaults(run=_cmd_cond_expand)

    p = sub.add_parser("mc-check", help="Monte Carlo E[f(X_h)] - f(x0) against the expansion")
    for name in ("--f", "--b"):
        p.add_argument(name, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--h-grid", type=_float_list, required=True, help="comma-separated list of h")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--variance-reduction", choices=("none", "antithetic", "control"), default="none")
    _common(p)
    p.set_defaults(run=_cmd_mc_check)

    p = sub.add_parser("var-scan", help="h^{-2 alpha} Var E[B_{t+h} - B_t | F_t] over a grid of h")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--h-grid", type=_float_list, required=True, help="comma-separated decreasing list")
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(run=_cmd_var_scan)

    p = sub.add_parser("sigma2", help="limit variance sigma_H^2")
    p.add_argument("--hurst", type=float, required=True)
    _common(p)
    p.set_defaults(run=_cmd_sigma2)

    p = sub.add_parser("r-fn", help="r(x) = x ∫ g(x^2 u) g(u) du")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--x-grid", type=_float_list, required=True)
    _common(p)
    p.set_defaults(run=_cmd_r_fn)

    p = sub.add_parser("fbm-sample", help="exact fBm paths on a uniform grid")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--points", type=int, required=True, help="grid points including t = 0")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", dest="output", default=None, help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(run=_cmd_fbm_sample)

    p = sub.add_parser("solve", help="solve dX = b dt + sigma dB along one sampled fBm path")
    p.add_argument("--f-none", action="store_true",
                   help="no test function is applied; the solution path itself is written (default)")
    p.add_argument("--b", required=True)
    p.add_argument("--sigma", default="1")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--method", choices=("euler", "doss"), default="euler")
    p.add_argument("--seed", type=_seed, default=0)
    _common(p)
    p.set_defaults(run=_cmd_solve)
    return parser


def _config(args: argparse.Namespace) -> dict:
    skip = {"run", "output", "format"}
    return {"command": args.command, **{k: v for k, v in sorted(vars(args).items())
                                        if k not in skip and k != "command"}}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, DomainError):
        return 4
    return 2


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"fracexp: error: {exc}", file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        table = args.run(args)
    except (FracExpError, UsageError, ValueError) as exc:
        print(f"fracexp {args.command}: {type(exc).__name__}: {exc}", file=stderr)
        return _exit_code(exc)
    text = table.render(args.format, _config(args))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())
