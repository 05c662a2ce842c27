"""Approximate minimization of the augmented Lagrangian in ``x``.

The subproblem ``min_x L_mu(x, y_hat)`` is nonsmooth whenever the prox of
``g`` is set-valued. Each iteration freezes one prox point ``z`` (chosen by
:func:`~compal.regularizers.select_prox_point`) and steps along the gradient
of the smooth majorant

    f(x) + g(z) + ||c(x) + mu*y_hat - z||^2 / (2 mu) - mu/2 ||y_hat||^2,

whose gradient is ``grad f(x) + c'(x)^T y_tilde`` with
``y_tilde = y_hat + (c(x) - z)/mu``. Steps are accepted by a nonmonotone
Armijo test on the true augmented Lagrangian. The loop stops as soon as the
pair ``(x, z)`` certifies ``||grad f(x) + c'(x)^T y_tilde|| <= eps``.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import Problem, eval_aug_lagrangian, multiplier_from_prox
from .errors import MaxInnerIterations, UnboundedBelow, UnsupportedError
from .regularizers import ProxSet

logger = logging.getLogger(__name__)

MIN_STEP = 1e-16
MAX_STEP = 1e12


@dataclass(frozen=True)
class InnerConfig:
    max_iters: int = 5000
    sigma: float = 1e-4
    beta: float = 0.5
    initial_step: float = 1.0
    window: int = 5
    unbounded_floor: float = -1e12

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sufficient decrease sigma must lie in (0, 1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("step shrink beta must lie in (0, 1)")
        if self.window < 1:
            raise ValueError("nonmonotone window must be >= 1")
        if not self.initial_step > 0.0:
            raise ValueError("initial step must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass(frozen=True, eq=False)
class Certificate:
    """A pair ``(x, z)`` with ``z`` in ``prox_{mu g}(c(x) + mu y_hat)``.

    ``converged`` is False when the line search stalled before reaching the
    requested tolerance; ``grad_norm`` then exceeds it.
    """

    x: np.ndarray
    z: np.ndarray
    y_tilde: np.ndarray
    grad_norm: float
    inner_iters: int
    al_value: float
    prox_set: ProxSet
    y_hat: np.ndarray
    mu: float
    converged: bool = True


class _Point:
    """Cached evaluations at one iterate of the subproblem."""

    __slots__ = ("x", "cx", "J", "value", "prox_set", "z", "y_tilde", "d", "grad_norm")

    def __init__(self, p, y_hat, mu, x):
        self.x = x
        self.cx = p.eval_c(x)
        self.value, self.prox_set = eval_aug_lagrangian(p, x, y_hat, mu)
        self.z = self.prox_set.select()
        self.y_tilde = multiplier_from_prox(self.cx, y_hat, mu, self.z)
        self.d = p.eval_grad(x) + p.eval_jac(x).T @ self.y_tilde
        self.grad_norm = float(np.linalg.norm(self.d))


def _certificate(pt, iters, y_hat, mu, converged=True):
    return Certificate(
        x=pt.x.copy(),
        z=pt.z.copy(),
        y_tilde=pt.y_tilde.copy(),
        grad_norm=pt.grad_norm,
        inner_iters=iters,
        al_value=pt.value,
        prox_set=pt.prox_set,
        y_hat=np.array(y_hat, dtype=float),
        mu=mu,
        converged=converged,
    )


def certificate_at(p: Problem, y_hat, mu, x, iters=0) -> Certificate:
    """Certificate built at ``x`` without any iteration."""
    y_hat = p.vec(y_hat, "y_hat", p.m)
    return _certificate(_Point(p, y_hat, mu, p.vec(x)), iters, y_hat, mu)


def subproblem_descent_step(p: Problem, y_hat, mu, x, step, reference=None, sigma=1e-4):
    """Single trial step ``x - step*d`` with the nonmonotone Armijo test.

    ``reference`` is the largest augmented Lagrangian value in the current
    nonmonotone window (defaults to the value at ``x``, the monotone test).
    Returns ``(x_next, accepted)``; a zero direction is accepted in place.
    """
    y_hat = p.vec(y_hat, "y_hat", p.m)
    pt = _Point(p, y_hat, mu, p.vec(x))
    if pt.grad_norm == 0.0:
        return pt.x.copy(), True
    if reference is None:
        reference = pt.value
    x_next = pt.x - step * pt.d
    value, _ = eval_aug_lagrangian(p, x_next, y_hat, mu)
    return x_next, value <= reference - sigma * step * pt.grad_norm ** 2


def solve_subproblem(p: Problem, y_hat, mu, eps, x0, cfg=None, trace=None) -> Certificate:
    """Find ``(x, z)`` certifying ``eps``-stationarity of ``L_mu(., y_hat)``.

    Parameters
    ----------
    eps : float
        Target for ``||grad f(x) + c'(x)^T y_tilde||``; ``math.inf`` returns
        the certificate at ``x0`` right away.
    trace : list, optional
        If given, receives ``(value, window_max)`` for every accepted step.

    Raises
    ------
    MaxInnerIterations
        After ``cfg.max_iters`` iterations, carrying the best certificate.
    UnboundedBelow
        When the augmented Lagrangian falls below ``cfg.unbounded_floor``.
    """
    cfg = InnerConfig() if cfg is None else cfg
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    p.g.check_mu(mu)
    y_hat = p.vec(y_hat, "y_hat", p.m)
    pt = _Point(p, y_hat, mu, p.vec(x0, "x0"))
    best = pt
    if pt.grad_norm <= eps:
        return _certificate(pt, 0, y_hat, mu)

    history = deque([pt.value], maxlen=cfg.window)
    step = cfg.initial_step
    prev = None
    for it in range(1, cfg.max_iters + 1):
        if prev is not None:
            s = pt.x - prev.x
            r = pt.d - prev.d
            sr = float(s @ r)
            # spectral step when curvature is positive, otherwise expand
            step = float(s @ s) / sr if sr > 0.0 else step / cfg.beta
            step = min(max(step, MIN_STEP), MAX_STEP)
        reference = max(history)
        while True:
            x_next = pt.x - step * pt.d
            trial = _Point(p, y_hat, mu, x_next)
            if trial.value < cfg.unbounded_floor:
                raise UnboundedBelow(
                    f"augmented Lagrangian fell to {trial.value:.3e} below the floor "
                    f"{cfg.unbounded_floor:.1e}; phi is likely unbounded below",
                    x=x_next,
                    value=trial.value,
                )
            if trial.value <= reference - cfg.sigma * step * pt.grad_norm ** 2:
                break
            step *= cfg.beta
            if step < MIN_STEP:
                logger.debug("line search stalled at |d|=%.3e after %d iterations", pt.grad_norm, it)
                return _certificate(pt, it - 1, y_hat, mu, converged=pt.grad_norm <= eps)
        prev, pt = pt, trial
        history.append(pt.value)
        if trace is not None:
            trace.append((pt.value, reference))
        if pt.grad_norm < best.grad_norm:
            best = pt
        if pt.grad_norm <= eps:
            return _certificate(pt, it, y_hat, mu)

    raise MaxInnerIterations(
        f"no {eps:.3e}-stationary point after {cfg.max_iters} iterations "
        f"(best |grad| = {best.grad_norm:.3e})",
        best=_certificate(best, cfg.max_iters, y_hat, mu, converged=False),
    )


def solve_subproblem_global_grid(p: Problem, y_hat, mu, bounds, resolution) -> np.ndarray:
    """Exhaustive minimization of ``L_mu(., y_hat)`` over a regular grid.

    Test oracle for the global-optimization results; limited to ``n <= 2``.
    ``bounds`` is a sequence of ``(lo, hi)`` pairs, one per variable.
    """
    if p.n > 2:
        raise UnsupportedError("grid oracle supports n <= 2 only")
    bounds = [tuple(map(float, b)) for b in bounds]
    if len(bounds) != p.n or not all(math.isfinite(lo) and math.isfinite(hi) and lo <= hi for lo, hi in bounds):
        raise ValueError("need one finite (lo, hi) pair per variable")
    y_hat = p.vec(y_hat, "y_hat", p.m)
    axes = [lo + resolution * np.arange(int(round((hi - lo) / resolution)) + 1) for lo, hi in bounds]
    best_x, best_val = None, math.inf
    for point in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.n):
        val, _ = eval_aug_lagrangian(p, point, y_hat, mu)
        if val < best_val:
            best_x, best_val = point, val
    return best_x.copy()


def grid_inner_solver(bounds, resolution):
    """Adapter making the grid oracle usable as the outer loop's inner solver.

    The returned certificate carries the prox point of the grid minimizer;
    its gradient norm is whatever the grid delivers (no tolerance is enforced).
    """

    def solve(p, y_hat, mu, eps, x0, cfg=None):
        x = solve_subproblem_global_grid(p, y_hat, mu, bounds, resolution)
        cert = certificate_at(p, y_hat, mu, x)
        return Certificate(**{**cert.__dict__, "converged": cert.grad_norm <= eps})

    return solve
