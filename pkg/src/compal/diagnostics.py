"""Verification utilities for candidate solutions.

M-stationarity checks, index-set classification for the sparse and the
complementarity settings, the sparse second-order sufficient condition,
sampled growth checks and finite-difference validation of user oracles.
Index sets are 0-based.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc

from .core import Problem, eval_lagrangian_hess, eval_phi, residual_theta
from .errors import DomainError, UnsupportedError
from .extreal import INF
from .regularizers import L0, IndicatorComplementarity

ACTIVITY_TOL = 1e-8
SVD_CUTOFF = 1e-10


def check_m_stationarity(p: Problem, x, y, tol=1e-9) -> tuple:
    """Test ``0 = grad f(x) + c'(x)^T y`` with ``y`` in the limiting subdifferential of g at c(x).

    Returns ``(is_stat, theta)``. ``theta`` is the residual at ``z = c(x)``;
    if ``c(x)`` lies outside dom g it is the distance to the domain instead
    and ``is_stat`` is False.
    """
    x, y = p.vec(x), p.vec(y, "y", p.m)
    cx = p.eval_c(x)
    if not p.g.in_domain(cx):
        return False, float(p.g.domain_dist(cx))
    theta = residual_theta(p, x, cx, y)
    return theta <= tol, theta


@dataclass(frozen=True)
class SparseIndexSets:
    I0: tuple
    Ipm: tuple
    I00: tuple
    I0pm: tuple


@dataclass(frozen=True)
class MpccIndexSets:
    Ip0: tuple
    I0p: tuple
    I00: tuple


def _indices(mask):
    return tuple(int(i) for i in np.flatnonzero(mask))


def sparse_index_sets(p: Problem, x, y, tol=ACTIVITY_TOL) -> SparseIndexSets:
    """Activity pattern of ``c(x)`` and ``y`` for the l0 regularizer."""
    if not isinstance(p.g, L0):
        raise UnsupportedError(f"sparse index sets need an l0 regularizer, got {p.g.tag}")
    cx = p.eval_c(p.vec(x))
    y = p.vec(y, "y", p.m)
    zero = np.abs(cx) <= tol
    dual_zero = np.abs(y) <= tol
    return SparseIndexSets(
        I0=_indices(zero),
        Ipm=_indices(~zero),
        I00=_indices(zero & dual_zero),
        I0pm=_indices(zero & ~dual_zero),
    )


def mpcc_index_sets(p: Problem, x, tol=ACTIVITY_TOL) -> MpccIndexSets:
    """Classify the complementarity pairs ``(c_i(x), c_{p+i}(x))``.

    Raises
    ------
    DomainError
        If some pair violates complementarity by more than ``tol``.
    """
    if not isinstance(p.g, IndicatorComplementarity):
        raise UnsupportedError(f"MPCC index sets need a complementarity regularizer, got {p.g.tag}")
    cx = p.eval_c(p.vec(x))
    a, b = cx[: p.g.p], cx[p.g.p:]
    a_zero, b_zero = np.abs(a) <= tol, np.abs(b) <= tol
    a_pos, b_pos = a > tol, b > tol
    ok = (a_pos & b_zero) | (a_zero & b_pos) | (a_zero & b_zero)
    if not np.all(ok):
        raise DomainError(f"pairs {_indices(~ok)} violate complementarity at c(x)={cx.tolist()}")
    return MpccIndexSets(
        Ip0=_indices(a_pos & b_zero),
        I0p=_indices(a_zero & b_pos),
        I00=_indices(a_zero & b_zero),
    )


def _null_space(A, cutoff):
    """Orthonormal basis of ker A from a full SVD; singular values <= cutoff count as zero."""
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > cutoff))
    return Vt[rank:].T


def check_sparse_error_bound_condition(p: Problem, x, y, tol=ACTIVITY_TOL, svd_cutoff=SVD_CUTOFF) -> tuple:
    """Sufficient condition for the local error bound in the l0 setting.

    Returns ``(licq, reduced_hessian_pd)``:

    licq
        The rows of ``c'(x)`` indexed by ``I0`` are linearly independent.
    reduced_hessian_pd
        ``Z^T hess_xx L(x, y) Z`` is positive definite, where the columns
        of ``Z`` span the null space of the rows indexed by ``I0pm``.
        Vacuously true when that null space is trivial.
    """
    sets = sparse_index_sets(p, x, y, tol)
    x, y = p.vec(x), p.vec(y, "y", p.m)
    J = p.eval_jac(x)
    active = J[list(sets.I0)]
    if active.shape[0] == 0:
        licq = True
    else:
        s = np.linalg.svd(active, compute_uv=False)
        licq = bool(active.shape[0] <= p.n and np.sum(s > svd_cutoff) == active.shape[0])
    H = eval_lagrangian_hess(p, x, y)
    Z = _null_space(J[list(sets.I0pm)], svd_cutoff)
    if Z.shape[1] == 0:
        return licq, True
    reduced = Z.T @ H @ Z
    lam_min = float(np.linalg.eigvalsh(0.5 * (reduced + reduced.T))[0])
    return licq, lam_min > tol


def ball_samples(n, radius, samples, seed=0) -> np.ndarray:
    """Quasi-random points filling the ball of the given radius around 0.

    Uses a scrambled Halton sequence in dimension ``n + 1``: the first ``n``
    coordinates give a gaussian direction, the last one the radius.
    """
    u = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(samples)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    g = norm.ppf(u[:, :n])
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return radius * u[:, n:] ** (1.0 / n) * g


def check_growth(p: Problem, x_bar, radius, samples, beta, seed=0, slack=1e-12) -> bool:
    """Sampled second-order growth ``phi(x) - phi(x_bar) >= beta/2 ||x - x_bar||^2``.

    Points with ``phi(x) = inf`` pass. ``beta = 0`` tests local minimality.
    Returns False when ``phi(x_bar)`` itself is infinite.
    """
    if not radius > 0 or samples < 1:
        raise ValueError("need radius > 0 and samples >= 1")
    x_bar = p.vec(x_bar, "x_bar")
    phi_bar = eval_phi(p, x_bar)
    if phi_bar is INF:
        return False
    for d in ball_samples(p.n, radius, samples, seed):
        val = eval_phi(p, x_bar + d)
        if val is INF:
            continue
        if val - phi_bar < 0.5 * beta * float(d @ d) - slack:
            return False
    return True


def _central_jacobian(fun, x, h):
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(fun(x + e), dtype=float) - np.asarray(fun(x - e), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def _rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))) if a.size else 0.0


def fd_check(p: Problem, x, h=1e-6) -> tuple:
    """Compare ``grad f`` and ``c'`` with central differences of step ``h``.

    Returns ``(grad_err, jac_err)``, the largest entrywise errors relative
    to ``max(1, |analytic entry|)``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = p.vec(x)
    g_fd = _central_jacobian(lambda t: float(p.f(t)), x, h).reshape(p.n)
    J_fd = _central_jacobian(p.eval_c, x, h).reshape(p.m, p.n)
    return _rel_err(p.eval_grad(x), g_fd), _rel_err(p.eval_jac(x), J_fd)


__all__ = [
    "ACTIVITY_TOL",
    "SVD_CUTOFF",
    "SparseIndexSets",
    "MpccIndexSets",
    "check_m_stationarity",
    "sparse_index_sets",
    "mpcc_index_sets",
    "check_sparse_error_bound_condition",
    "ball_samples",
    "check_growth",
    "fd_check",
]
