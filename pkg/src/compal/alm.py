"""Safeguarded implicit augmented Lagrangian method.

Each outer iteration ``k``

1. picks a safeguarded multiplier estimate ``y_hat`` in the box ``Y`` and an
   inner tolerance ``eps_k``;
2. computes ``(x_k, z_k)`` with ``z_k`` in ``prox_{mu_k g}(c(x_k) + mu_k y_hat)``
   and ``||grad_x L^S_{mu_k}(x_k, z_k, y_hat)|| <= eps_k``;
3. sets ``y_k = y_hat + (c(x_k) - z_k)/mu_k`` and ``V_k = ||c(x_k) - z_k||``;
4. keeps ``mu`` if ``k == 0`` or ``V_k <= theta V_{k-1}``, else ``mu <- kappa mu``.

The loop stops once the residual ``Theta_k`` and ``V_k`` are both below
``theta_tol``.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Problem, residual_theta
from .errors import InsufficientHistory, MaxInnerIterations, UnboundedBelow
from .inner import Certificate, InnerConfig, solve_subproblem

logger = logging.getLogger(__name__)

SAFEGUARD_MODES = ("project", "reset_on_escape")
EPS_RULES = ("geometric", "fixed")
PENALTY_RULES = ("monitor", "fixed", "shrink")


class Status(str, enum.Enum):
    STATIONARY = "Stationary"
    MAX_OUTER = "MaxOuter"
    UNBOUNDED_BELOW = "UnboundedBelow"
    SHRUNK_PENALTY_FLOOR = "ShrunkPenaltyFloor"


@dataclass(frozen=True)
class OuterConfig:
    """Parameters of the outer loop.

    ``mu0=None`` means 1, clipped to 0.9 times the prox threshold of ``g``.
    ``penalty_rule`` selects between the monitored update (``"monitor"``),
    a frozen penalty (``"fixed"``) and unconditional shrinking by ``kappa``
    every iteration (``"shrink"``).
    """

    mu0: Optional[float] = None
    theta: float = 0.5
    kappa: float = 0.1
    y_lo: object = -1e6
    y_hi: object = 1e6
    eps0: float = 0.1
    eps_rule: str = "geometric"
    eps_sequence: Sequence[float] = ()
    nu0: float = 0.1
    nu_shrink: float = 0.5
    theta_tol: float = 1e-8
    max_outer: int = 100
    safeguard_mode: str = "project"
    penalty_rule: str = "monitor"
    mu_floor: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        lo, hi = np.asarray(self.y_lo, dtype=float), np.asarray(self.y_hi, dtype=float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo <= hi)):
            raise ValueError("the safeguarding box Y must be bounded and nonempty")
        if self.mu0 is not None and not self.mu0 > 0.0:
            raise ValueError("mu0 must be positive")
        if self.eps_rule not in EPS_RULES:
            raise ValueError(f"eps_rule must be one of {EPS_RULES}")
        if self.eps_rule == "fixed" and not self.eps_sequence:
            raise ValueError("the fixed eps rule needs a nonempty eps_sequence")
        if self.safeguard_mode not in SAFEGUARD_MODES:
            raise ValueError(f"safeguard_mode must be one of {SAFEGUARD_MODES}")
        if self.penalty_rule not in PENALTY_RULES:
            raise ValueError(f"penalty_rule must be one of {PENALTY_RULES}")
        if self.eps0 < 0 or self.nu0 < 0 or not 0.0 < self.nu_shrink <= 1.0:
            raise ValueError("need eps0 >= 0, nu0 >= 0 and nu_shrink in (0, 1]")
        if self.theta_tol < 0 or self.max_outer < 1:
            raise ValueError("need theta_tol >= 0 and max_outer >= 1")

    def initial_mu(self, threshold: float) -> float:
        if self.mu0 is not None:
            return float(self.mu0)
        return 1.0 if math.isinf(threshold) else min(1.0, 0.9 * threshold)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    k: int
    mu: float
    eps: float
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    V: float
    Theta: float
    f: float
    g: float
    inner_iters: int
    grad_norm: float
    converged: bool = True

    def to_dict(self, vectors=True) -> dict:
        out = {
            "k": self.k,
            "mu": self.mu,
            "eps": self.eps,
            "V": self.V,
            "Theta": self.Theta,
            "f": self.f,
            "g": self.g,
            "inner_iters": self.inner_iters,
            "grad_norm": self.grad_norm,
        }
        if vectors:
            for key in ("x", "z", "y", "y_hat"):
                out[key] = getattr(self, key).tolist()
        return out


@dataclass(frozen=True, eq=False)
class SolveReport:
    status: Status
    records: tuple
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    mu: float
    message: str = ""

    @property
    def thetas(self):
        return [r.Theta for r in self.records]

    @property
    def q_factors(self):
        return q_factors(self.thetas)


def safeguard(y_prev, cfg: OuterConfig) -> np.ndarray:
    """Bring the previous multiplier into the bounded box ``Y``.

    ``project`` clamps componentwise; ``reset_on_escape`` keeps ``y_prev``
    if it already lies in ``Y`` and returns zero otherwise.
    """
    y_prev = np.asarray(y_prev, dtype=float)
    lo = np.broadcast_to(np.asarray(cfg.y_lo, dtype=float), y_prev.shape)
    hi = np.broadcast_to(np.asarray(cfg.y_hi, dtype=float), y_prev.shape)
    if cfg.safeguard_mode == "project":
        return np.clip(y_prev, lo, hi)
    if np.all((y_prev >= lo) & (y_prev <= hi)):
        return y_prev.copy()
    return np.zeros_like(y_prev)


def update_penalty(V_k, V_prev, mu, k, cfg: OuterConfig) -> float:
    if k == 0 or V_k <= cfg.theta * V_prev:
        return mu
    return cfg.kappa * mu


def tolerance_next(Theta_prev, k, cfg: OuterConfig) -> float:
    """Inner tolerance for outer iteration ``k``.

    The geometric rule returns ``min(eps0, nu0 * nu_shrink**k * Theta_prev)``
    (``eps0`` when there is no previous residual yet); the fixed rule returns
    the ``k``-th entry of ``eps_sequence``, repeating the last one.
    """
    if cfg.eps_rule == "fixed":
        seq = cfg.eps_sequence
        return float(seq[min(k, len(seq) - 1)])
    if Theta_prev is None:
        return float(cfg.eps0)
    return min(cfg.eps0, cfg.nu0 * cfg.nu_shrink ** k * Theta_prev)


def solve(
    p: Problem,
    cfg: OuterConfig = None,
    x0=None,
    y0=None,
    inner_cfg: InnerConfig = None,
    inner_solver: Callable = None,
    callback: Callable = None,
) -> SolveReport:
    """Run the safeguarded implicit AL method from ``(x0, y0)``.

    ``inner_solver`` replaces :func:`~compal.inner.solve_subproblem`; it is
    called as ``inner_solver(p, y_hat, mu, eps, x_start, inner_cfg)`` and must
    return a :class:`~compal.inner.Certificate`. ``callback`` receives every
    :class:`IterationRecord` as soon as it is produced.
    """
    cfg = OuterConfig() if cfg is None else cfg
    inner_cfg = InnerConfig() if inner_cfg is None else inner_cfg
    inner_solver = solve_subproblem if inner_solver is None else inner_solver
    x = p.vec(np.zeros(p.n) if x0 is None else x0, "x0")
    y = p.vec(np.zeros(p.m) if y0 is None else y0, "y0", p.m)
    mu = cfg.initial_mu(p.g.prox_threshold)
    p.g.check_mu(mu)

    records = []
    z = p.eval_c(x)
    V_prev = Theta_prev = None
    status, message = Status.MAX_OUTER, ""
    for k in range(cfg.max_outer):
        y_hat = safeguard(y, cfg)
        eps = tolerance_next(Theta_prev, k, cfg)
        try:
            cert: Certificate = inner_solver(p, y_hat, mu, eps, x, inner_cfg)
        except UnboundedBelow as exc:
            status, message = Status.UNBOUNDED_BELOW, str(exc)
            break
        except MaxInnerIterations as exc:
            exc.outer_k = k
            exc.args = (f"outer iteration {k} (mu={mu:.3e}, eps={eps:.3e}): {exc.args[0]}",)
            raise
        x, z, y = cert.x, cert.z, cert.y_tilde
        V = float(np.linalg.norm(p.eval_c(x) - z))
        Theta = residual_theta(p, x, z, y)
        rec = IterationRecord(
            k=k,
            mu=mu,
            eps=eps,
            x=x,
            z=z,
            y=y,
            y_hat=y_hat,
            V=V,
            Theta=Theta,
            f=float(p.f(x)),
            g=float(p.g.value(z)),
            inner_iters=cert.inner_iters,
            grad_norm=cert.grad_norm,
            converged=cert.converged,
        )
        records.append(rec)
        logger.info("k=%d mu=%.2e eps=%.2e V=%.3e Theta=%.3e inner=%d", k, mu, eps, V, Theta, cert.inner_iters)
        if callback is not None:
            callback(rec)
        if Theta <= cfg.theta_tol and V <= cfg.theta_tol:
            status = Status.STATIONARY
            break
        if cfg.penalty_rule == "monitor":
            mu_next = update_penalty(V, V_prev, mu, k, cfg)
        elif cfg.penalty_rule == "shrink":
            mu_next = cfg.kappa * mu
        else:
            mu_next = mu
        if mu_next < cfg.mu_floor:
            status = Status.SHRUNK_PENALTY_FLOOR
            message = f"penalty parameter fell below {cfg.mu_floor:.1e}"
            break
        mu, V_prev, Theta_prev = mu_next, V, Theta

    return SolveReport(status, tuple(records), x.copy(), np.asarray(z).copy(), y.copy(), mu, message)


def q_factors(thetas) -> list:
    thetas = [float(t) for t in thetas]
    return [b / a if a > 0.0 else math.nan for a, b in zip(thetas, thetas[1:])]


@dataclass(frozen=True)
class RateEstimate:
    q_factors: list
    kind: str
    q_hat: Optional[float] = None

    def __str__(self):
        return f"linear({self.q_hat:.3g})" if self.kind == "linear" else self.kind


def estimate_rates(report) -> RateEstimate:
    """Classify the tail of the residual sequence ``Theta_k``.

    Accepts a :class:`SolveReport` or a plain sequence of residuals. With
    ``q_k = Theta_k / Theta_{k-1}`` and the last three factors:
    superlinear if they strictly decrease and the last is below 0.1;
    linear with ``q_hat = max`` if all are at most 0.95; sublinear otherwise.
    """
    thetas = report.thetas if isinstance(report, SolveReport) else list(report)
    if len(thetas) < 4:
        raise InsufficientHistory(f"need at least 4 residuals, got {len(thetas)}")
    if any(t <= 0.0 for t in thetas[:-1]):
        raise InsufficientHistory("residuals must stay positive before the last one")
    factors = q_factors(thetas)
    tail = factors[-3:]
    if tail[0] > tail[1] > tail[2] and tail[2] < 0.1:
        return RateEstimate(factors, "superlinear")
    if all(q <= 0.95 for q in tail):
        return RateEstimate(factors, "linear", max(tail))
    return RateEstimate(factors, "sublinear")
