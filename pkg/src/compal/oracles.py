"""Brute-force reference oracles.

These recompute quantities the solver obtains in closed form, by means that
share no code with it: grid scans for prox minima, root finding for tie and
prox-boundedness thresholds, and an exhaustive subproblem search.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import eval_aug_lagrangian
from .errors import UnsupportedError
from .inner import solve_subproblem, solve_subproblem_global_grid
from .regularizers import (
    L0,
    IndicatorBox,
    IndicatorComplementarity,
    IndicatorPoint,
    NegSquare,
    Regularizer,
)

GRID_STEP = 1e-3
GRID_RADIUS = 5.0


def grid_axis(radius=GRID_RADIUS, step=GRID_STEP) -> np.ndarray:
    """Symmetric grid built from integers, so that 0 is an exact node."""
    k = int(round(radius / step))
    return np.arange(-k, k + 1) * step


def _scan_1d(g1: Regularizer, mu, v, axis):
    vals = g1.values(axis[:, None]) + (axis - v) ** 2 / (2.0 * mu)
    return float(np.min(vals))


def grid_prox_value(g: Regularizer, mu, v, radius=GRID_RADIUS, step=GRID_STEP) -> float:
    """Grid minimum of ``g(z) + ||z - v||^2 / (2 mu)``.

    Separable kinds are scanned coordinate by coordinate. For the
    complementarity set only grid nodes on the two axes of each pair are
    scanned, which is exact for that set since every feasible pair lies on one.
    """
    v = np.asarray(v, dtype=float).reshape(g.dim)
    axis = grid_axis(radius, step)
    if isinstance(g, IndicatorComplementarity):
        total = 0.0
        zero = np.zeros_like(axis)
        for i in range(g.p):
            a, b = v[i], v[g.p + i]
            pts = np.concatenate([np.stack([axis, zero], 1), np.stack([zero, axis], 1)])
            pair = IndicatorComplementarity(1)
            vals = pair.values(pts) + ((pts[:, 0] - a) ** 2 + (pts[:, 1] - b) ** 2) / (2.0 * mu)
            total += float(np.min(vals))
        return total
    return sum(_scan_1d(g.component(i), mu, v[i], axis) for i in range(g.dim))


def prox_gap(g: Regularizer, mu, v, **grid) -> float:
    """Largest ``|objective(z) - grid minimum|`` over the returned prox points."""
    ref = grid_prox_value(g, mu, v, **grid)
    ps = g.prox(mu, v)
    return max(abs(float(g.prox_objective(mu, v, z)) - ref) for z in ps.points)


def l0_tie_point(mu, weight=1.0) -> float:
    """Positive ``v`` where keeping and zeroing cost the same, found by root finding."""
    gap = lambda t: weight - t * t / (2.0 * mu)
    hi = 1.0
    while gap(hi) > 0.0:
        hi *= 2.0
    return brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def prox_threshold_bisection(g1: Regularizer, lo=1e-6, hi=1e6) -> float:
    """Threshold of a 1-D quadratic ``g``, the ``mu`` where ``g + t^2/(2 mu)`` stops being convex.

    Uses the second difference of ``g(t) + t^2/(2 mu)`` at 0; returns
    ``math.inf`` when it stays positive on ``[lo, hi]``.
    """
    if g1.dim != 1:
        raise UnsupportedError("threshold bisection expects a 1-D regularizer")
    pts = np.array([[-1.0], [0.0], [1.0]])
    gv = g1.values(pts)

    def curvature(mu):
        q = gv + pts[:, 0] ** 2 / (2.0 * mu)
        return q[0] - 2.0 * q[1] + q[2]

    if curvature(hi) > 0.0:
        return math.inf
    return brentq(curvature, lo, hi, xtol=1e-14)


@dataclass(frozen=True)
class OracleCase:
    kind: str
    mu: float
    v: tuple
    gap: float


def random_prox_cases(rng, count=200):
    """Random ``(regularizer, mu, v)`` triples with ``m <= 2``, cycling over all kinds.

    Ranges keep the grid discretization error below 1e-7: ``mu >= 0.3`` and
    prox points inside the grid box.
    """
    makers = [
        lambda: (L0(2, float(rng.uniform(0.5, 2.0))), rng.uniform(0.3, 2.0), rng.uniform(-3, 3, 2)),
        lambda: (IndicatorBox([-1.0, 0.0], [1.0, 2.5]), rng.uniform(0.3, 2.0), rng.uniform(-4, 4, 2)),
        lambda: (IndicatorComplementarity(1), rng.uniform(0.3, 2.0), rng.uniform(-4, 4, 2)),
        lambda: (IndicatorPoint([0.5, -1.25]), rng.uniform(0.3, 2.0), rng.uniform(-4, 4, 2)),
        lambda: (NegSquare(1, 0.25), rng.uniform(0.3, 0.65), rng.uniform(-3, 3, 1)),
    ]
    for i in range(count):
        g, mu, v = makers[i % len(makers)]()
        yield g, float(mu), np.asarray(v, dtype=float)


def oracle_check(seed=0, cases=200, tol=1e-6) -> list:
    """Run every brute-force comparison; return human-readable mismatch lines."""
    rng = np.random.default_rng(seed)
    problems = []
    for g, mu, v in random_prox_cases(rng, cases):
        gap = prox_gap(g, mu, v)
        if not gap <= tol:
            problems.append(f"prox {g.tag} mu={mu:.6g} v={v.tolist()}: gap {gap:.3e} > {tol:g}")

    for mu in (0.5, 1.0, 2.0):
        t = l0_tie_point(mu)
        if abs(t - math.sqrt(2.0 * mu)) > 1e-12:
            problems.append(f"l0 tie point mu={mu}: bisection {t!r} vs sqrt(2 mu)")
        ps = L0(1).prox(mu, [math.sqrt(2.0 * mu)])
        if len(ps) != 2:
            problems.append(f"l0 tie mu={mu}: expected two prox points, got {len(ps)}")

    for a in (0.25, 1.0, 2.0):
        thr = prox_threshold_bisection(NegSquare(1, a))
        if abs(thr - NegSquare(1, a).prox_threshold) > 1e-9:
            problems.append(f"neg-square a={a}: bisection threshold {thr!r} vs {1 / (2 * a)!r}")
    for g in (L0(1), IndicatorBox([0.0], [1.0])):
        if not math.isinf(prox_threshold_bisection(g)):
            problems.append(f"{g.tag}: bisection found a finite prox threshold")

    problems.extend(_subproblem_check(rng))
    return problems


def _subproblem_check(rng, trials=5):
    """Local inner solutions on box-nlp must match the global grid minimum.

    The box-nlp subproblem is convex in x, so both should agree up to the
    grid resolution.
    """
    from .instances import box_nlp

    p = box_nlp()
    out = []
    for _ in range(trials):
        mu = float(rng.uniform(0.05, 1.0))
        y_hat = rng.uniform(-3, 3, 1)
        cert = solve_subproblem(p, y_hat, mu, 1e-10, rng.uniform(-4, 4, 1))
        x_grid = solve_subproblem_global_grid(p, y_hat, mu, [(-5.0, 5.0)], 1e-3)
        local, _ = eval_aug_lagrangian(p, cert.x, y_hat, mu)
        best, _ = eval_aug_lagrangian(p, x_grid, y_hat, mu)
        if local > best + 1e-6:
            out.append(f"box-nlp subproblem mu={mu:.4g} y={y_hat.tolist()}: local {local:.8g} > grid {best:.8g}")
    return out


__all__ = [
    "GRID_STEP",
    "grid_axis",
    "grid_prox_value",
    "prox_gap",
    "l0_tie_point",
    "prox_threshold_bisection",
    "random_prox_cases",
    "oracle_check",
]
