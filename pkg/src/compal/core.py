"""Problem container and the evaluation kernels shared by every solver.

A :class:`Problem` describes ``min_x f(x) + g(c(x))`` with smooth ``f``
(R^n -> R), smooth ``c`` (R^n -> R^m) and a nonsmooth, possibly nonconvex
:class:`~compal.regularizers.Regularizer` ``g``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedError
from .extreal import INF, ExtReal
from .regularizers import ProxSet, Regularizer


@dataclass(frozen=True, eq=False)
class Problem:
    """Oracles for ``f``, ``c`` and ``g``.

    Parameters
    ----------
    n, m : int
        Dimensions of ``x`` and of ``c(x)``.
    f, grad : callable
        ``f(x) -> float`` and ``grad(x) -> (n,)``.
    c, jac : callable
        ``c(x) -> (m,)`` and ``jac(x) -> (m, n)`` (dense).
    g : Regularizer
        The nonsmooth term, of dimension ``m``.
    hess : callable, optional
        ``hess(x) -> (n, n)``; only diagnostics use it.
    c_hess : callable, optional
        ``c_hess(x) -> (m, n, n)``, the Hessians of the components of ``c``.
    """

    n: int
    m: int
    f: Callable
    grad: Callable
    c: Callable
    jac: Callable
    g: Regularizer
    hess: Optional[Callable] = None
    c_hess: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.g.dim != self.m:
            raise DimensionError(f"g acts on R^{self.g.dim} but m={self.m}")

    def vec(self, x, name="x", size=None):
        size = self.n if size is None else size
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 and size == 1:
            x = x.reshape(1)
        if x.shape != (size,):
            raise DimensionError(f"{name} has shape {x.shape}, expected ({size},)")
        if not np.all(np.isfinite(x)):
            raise DimensionError(f"{name} has non-finite entries")
        return x

    def eval_c(self, x):
        cx = np.asarray(self.c(x), dtype=float).reshape(-1)
        if cx.shape != (self.m,):
            raise DimensionError(f"c(x) has shape {cx.shape}, expected ({self.m},)")
        return cx

    def eval_grad(self, x):
        gx = np.asarray(self.grad(x), dtype=float).reshape(-1)
        if gx.shape != (self.n,):
            raise DimensionError(f"grad f(x) has shape {gx.shape}, expected ({self.n},)")
        return gx

    def eval_jac(self, x):
        J = np.asarray(self.jac(x), dtype=float).reshape(self.m, -1)
        if J.shape != (self.m, self.n):
            raise DimensionError(f"c'(x) has shape {J.shape}, expected ({self.m}, {self.n})")
        return J


def eval_phi(p: Problem, x) -> ExtReal:
    """Objective ``f(x) + g(c(x))``; :data:`INF` when ``c(x)`` is outside dom g."""
    x = p.vec(x)
    gval = p.g.value(p.eval_c(x))
    if gval is INF:
        return INF
    return float(p.f(x)) + gval


def eval_lagrangian(p: Problem, x, y) -> float:
    x, y = p.vec(x), p.vec(y, "y", p.m)
    return float(p.f(x)) + float(y @ p.eval_c(x))


def eval_lagrangian_grad(p: Problem, x, y) -> np.ndarray:
    """``grad f(x) + c'(x)^T y``."""
    x, y = p.vec(x), p.vec(y, "y", p.m)
    return p.eval_grad(x) + p.eval_jac(x).T @ y


def eval_lagrangian_hess(p: Problem, x, y) -> np.ndarray:
    if p.hess is None or p.c_hess is None:
        raise UnsupportedError("problem has no Hessian oracles")
    x, y = p.vec(x), p.vec(y, "y", p.m)
    H = np.asarray(p.hess(x), dtype=float).reshape(p.n, p.n)
    C = np.asarray(p.c_hess(x), dtype=float).reshape(p.m, p.n, p.n)
    return H + np.einsum("i,ijk->jk", y, C)


def eval_aug_lagrangian(p: Problem, x, y, mu) -> tuple:
    """Augmented Lagrangian ``f(x) + g^mu(c(x) + mu y) - mu/2 ||y||^2``.

    Returns the value together with the prox set attaining the envelope.
    Raises :class:`~compal.errors.ProxUnboundedError` when ``mu`` is not
    below the prox threshold of ``g``.
    """
    x, y = p.vec(x), p.vec(y, "y", p.m)
    shifted = p.eval_c(x) + mu * y
    cert = p.g.prox(mu, shifted)
    value = float(p.f(x)) + cert.attained - 0.5 * mu * float(y @ y)
    return value, cert


def multiplier_from_prox(cx, y_hat, mu, z) -> np.ndarray:
    """First-order multiplier ``y_hat + (c(x) - z)/mu``.

    Computed as ``(v - z)/mu`` with ``v = c(x) + mu*y_hat``, the point the
    prox was evaluated at; coordinates where the prox leaves ``v`` unchanged
    thus get an exactly zero multiplier.
    """
    return (cx + mu * y_hat - z) / mu


def residual_theta(p: Problem, x, z, y) -> float:
    """Stationarity residual ``||grad_x L(x,y)|| + ||c(x) - z|| + dist(y, dg(z))``."""
    x, y = p.vec(x), p.vec(y, "y", p.m)
    z = p.vec(z, "z", p.m)
    if p.g.value(z) is INF:
        raise DomainError(f"z={z.tolist()} is outside dom g")
    grad = eval_lagrangian_grad(p, x, y)
    return (
        float(np.linalg.norm(grad))
        + float(np.linalg.norm(p.eval_c(x) - z))
        + p.g.subdiff_dist(z, y)
    )


__all__ = [
    "Problem",
    "ProxSet",
    "eval_phi",
    "eval_lagrangian",
    "eval_lagrangian_grad",
    "eval_lagrangian_hess",
    "eval_aug_lagrangian",
    "multiplier_from_prox",
    "residual_theta",
]
