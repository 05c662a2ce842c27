"""Command-line harness: ``compal solve|diagnose|rates|oracle-check``.

Exit codes
----------
0  Stationary (or no oracle mismatch)
1  configuration error, including a prox-unbounded penalty parameter
2  MaxOuter, inner solver failure, or a rate run that did not converge
3  UnboundedBelow
4  ShrunkPenaltyFloor
5  oracle-check found mismatches
"""

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from contextlib import contextmanager

import numpy as np

from .alm import OuterConfig, SolveReport, Status, estimate_rates, solve
from .config import ConfigError, RunConfig, load_config
from .core import eval_phi
from .diagnostics import (
    check_growth,
    check_m_stationarity,
    check_sparse_error_bound_condition,
    mpcc_index_sets,
    sparse_index_sets,
)
from .errors import CompalError, InsufficientHistory, MaxInnerIterations, ProxUnboundedError
from .extreal import to_float
from .oracles import oracle_check
from .regularizers import L0, IndicatorComplementarity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_OUTER = 2
EXIT_UNBOUNDED = 3
EXIT_FLOOR = 4
EXIT_ORACLE = 5

STATUS_EXIT = {
    Status.STATIONARY: EXIT_OK,
    Status.MAX_OUTER: EXIT_MAX_OUTER,
    Status.UNBOUNDED_BELOW: EXIT_UNBOUNDED,
    Status.SHRUNK_PENALTY_FLOOR: EXIT_FLOOR,
}
VECTOR_LIMIT = 16


def _clean(obj):
    """Make values JSON-safe: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), allow_nan=False)


def _flatten(rec: dict) -> dict:
    out = {}
    for key, val in rec.items():
        if isinstance(val, list):
            out.update({f"{key}{i}": v for i, v in enumerate(val)})
        else:
            out[key] = val
    return out


class RecordSink:
    """Streams iteration records as JSONL or CSV."""

    def __init__(self, stream, fmt, vectors):
        self.stream, self.fmt, self.vectors = stream, fmt, vectors
        self._writer = None

    def __call__(self, rec):
        row = _clean(rec.to_dict(self.vectors))
        if self.fmt == "jsonl":
            self.stream.write(_dumps(row) + "\n")
        else:
            row = _flatten(row)
            if self._writer is None:
                self._writer = csv.DictWriter(self.stream, fieldnames=list(row))
                self._writer.writeheader()
            self._writer.writerow(row)
        self.stream.flush()


@contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _classify(report: SolveReport):
    try:
        return str(estimate_rates(report))
    except InsufficientHistory:
        return "insufficient-history"


def summarize(report: SolveReport, p) -> dict:
    """Summary line written after the iteration records."""
    last = report.records[-1] if report.records else None
    cx = p.eval_c(report.x)
    return {
        "status": report.status.value,
        "message": report.message,
        "iterations": len(report.records),
        "x": report.x,
        "y": report.y,
        "z": report.z,
        "mu": report.mu,
        "Theta": None if last is None else last.Theta,
        "V": None if last is None else last.V,
        "phi": to_float(eval_phi(p, report.x)),
        "domain_dist": float(p.g.domain_dist(cx)),
        "q_factors": report.q_factors,
        "classification": _classify(report),
    }


def _outer_overrides(cfg: RunConfig, args) -> OuterConfig:
    changes = {}
    if getattr(args, "max_outer", None) is not None:
        changes["max_outer"] = args.max_outer
    if getattr(args, "force_shrink", False):
        changes["penalty_rule"] = "shrink"
    return dataclasses.replace(cfg.outer, **changes) if changes else cfg.outer


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.resolve()
    p = spec.problem
    outer = _outer_overrides(cfg, args)
    path = args.out if args.out is not None else cfg.output_path
    fmt = args.format or cfg.output_format
    vectors = args.vectors or cfg.vectors or p.n + p.m <= VECTOR_LIMIT
    with _open_out(path) as out:
        sink = RecordSink(out, fmt, vectors)
        try:
            report = solve(p, outer, spec.x0, spec.y0, cfg.inner, callback=sink)
        except MaxInnerIterations as exc:
            print(f"inner solver failed: {exc}", file=sys.stderr)
            return EXIT_MAX_OUTER
        summary = _dumps({"summary": summarize(report, p)})
        if fmt == "jsonl":
            out.write(summary + "\n")
        elif path is None:
            print(summary, file=sys.stderr)
        else:
            with open(path + ".summary.json", "w", encoding="utf-8") as fh:
                fh.write(summary + "\n")
    return STATUS_EXIT[report.status]


def _fmt_set(idx):
    return "{" + ", ".join(str(i + 1) for i in idx) + "}"


def _load_point(cfg: RunConfig, point_file):
    x, y = cfg.diagnose.x, cfg.diagnose.y
    if point_file is not None:
        try:
            with open(point_file, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read point file {point_file}: {exc}") from exc
        x, y = data.get("x", x), data.get("y", y)
    if x is None or y is None:
        raise ConfigError("diagnose needs a point: give --point FILE or diagnose.x / diagnose.y")
    return x, y


def cmd_diagnose(args) -> int:
    """Print stationarity, index sets (1-based) and second-order flags at a point."""
    cfg = load_config(args.config)
    p = cfg.resolve().problem
    x, y = _load_point(cfg, args.point)
    x, y = p.vec(x, "x"), p.vec(y, "y", p.m)
    d = cfg.diagnose
    is_stat, theta = check_m_stationarity(p, x, y, d.tol)
    yes = lambda flag: "yes" if flag else "no"
    print(f"M-stationary: {yes(is_stat)}")
    print(f"Theta: {theta:.6g}")
    if isinstance(p.g, L0):
        s = sparse_index_sets(p, x, y)
        print(f"I0: {_fmt_set(s.I0)}  I+-: {_fmt_set(s.Ipm)}  I00: {_fmt_set(s.I00)}  I0+-: {_fmt_set(s.I0pm)}")
        if p.hess is not None and p.c_hess is not None:
            licq, pd = check_sparse_error_bound_condition(p, x, y)
            print(f"LICQ(I0): {yes(licq)}")
            print(f"reduced-Hessian PD: {yes(pd)}")
    elif isinstance(p.g, IndicatorComplementarity):
        try:
            s = mpcc_index_sets(p, x)
            print(f"I+0: {_fmt_set(s.Ip0)}  I0+: {_fmt_set(s.I0p)}  I00: {_fmt_set(s.I00)}")
        except CompalError as exc:
            print(f"index sets: unavailable ({exc})")
    seed = args.seed if args.seed is not None else cfg.seed
    grows = check_growth(p, x, d.radius, d.samples, d.beta, seed=seed)
    print(f"growth(beta={d.beta:g}, radius={d.radius:g}, samples={d.samples}): {yes(grows)}")
    return EXIT_OK


def _rate_run(p, spec, outer, inner):
    try:
        return solve(p, outer, spec.x0, spec.y0, inner), None
    except MaxInnerIterations as exc:
        return None, str(exc)


def cmd_rates(args) -> int:
    """Run mode (a) fixed small mu and mode (b) forced shrinking, then tabulate q-factors."""
    cfg = load_config(args.config)
    spec = cfg.resolve("rates")
    p = spec.problem
    base = _outer_overrides(cfg, args)
    r = cfg.rates
    modes = {
        "a": dataclasses.replace(base, mu0=r.mu, penalty_rule="fixed", theta_tol=r.theta_tol),
        "b": dataclasses.replace(base, mu0=r.mu0, penalty_rule="shrink", theta_tol=r.theta_tol),
    }
    reports, verdicts, ok = {}, {}, True
    for name, outer in modes.items():
        report, err = _rate_run(p, spec, outer, cfg.inner)
        if report is None:
            verdicts[name], ok = f"inner failure: {err}", False
            reports[name] = []
            continue
        reports[name] = report.thetas
        if report.status is not Status.STATIONARY:
            ok = False
        try:
            verdicts[name] = str(estimate_rates(report))
        except InsufficientHistory:
            verdicts[name], ok = "insufficient-history", False
        verdicts[name] += f" [{report.status.value}]"

    qa, qb = (_q(reports[k]) for k in ("a", "b"))
    lines = [f"instance {p.name}: (a) fixed mu={r.mu:g}, (b) mu_k = {base.kappa:g}^k * {r.mu0:g}"]
    lines.append(f"{'k':>3}  {'q (a)':>12}  {'q (b)':>12}")
    for k in range(1, max(len(qa), len(qb)) + 1):
        cell = lambda q: f"{q[k - 1]:12.4e}" if k <= len(q) else " " * 12
        lines.append(f"{k:>3}  {cell(qa)}  {cell(qb)}")
    lines.append(f"(a): {verdicts['a']}")
    lines.append(f"(b): {verdicts['b']}")
    with _open_out(args.out) as out:
        out.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_MAX_OUTER


def _q(thetas):
    return [b / a if a > 0 else math.nan for a, b in zip(thetas, thetas[1:])]


def cmd_oracle_check(args) -> int:
    seed = 0 if args.seed is None else args.seed
    problems = oracle_check(seed=seed, cases=args.cases)
    for line in problems:
        print(f"MISMATCH {line}")
    print(f"oracle-check: {len(problems)} mismatch(es), {args.cases} prox cases, seed {seed}")
    return EXIT_ORACLE if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compal", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log outer iterations to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, metavar="N")

    sp = sub.add_parser("solve", help="run the AL method on one instance")
    common(sp)
    sp.add_argument("--out", metavar="PATH", help="record file (stdout if omitted)")
    sp.add_argument("--format", choices=("jsonl", "csv"), default=None)
    sp.add_argument("--force-shrink", action="store_true", help="shrink mu by kappa every iteration")
    sp.add_argument("--max-outer", type=int, default=None, metavar="N")
    sp.add_argument("--vectors", action="store_true", help="always include x, z, y, y_hat in records")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("diagnose", help="stationarity and second-order checks at a point")
    common(sp)
    sp.add_argument("--point", metavar="PATH", help='JSON file {"x": [...], "y": [...]}')
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("rates", help="q-factor tables for fixed and shrinking mu")
    common(sp)
    sp.add_argument("--out", metavar="PATH")
    sp.add_argument("--max-outer", type=int, default=None, metavar="N")
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("oracle-check", help="compare closed-form oracles with brute force")
    common(sp, config=False)
    sp.add_argument("--cases", type=int, default=200, metavar="N")
    sp.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ProxUnboundedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, CompalError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
