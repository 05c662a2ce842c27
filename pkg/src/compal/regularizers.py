"""Nonsmooth terms ``g`` and their oracles.

Every regularizer exposes the same surface:

* ``value(z)``          -- g(z), or :data:`~compal.extreal.INF` outside dom g
* ``prox(mu, v)``       -- the complete (finite) set of minimizers of
                           ``g(z) + ||z - v||^2 / (2 mu)`` as a :class:`ProxSet`
* ``moreau(mu, v)``     -- the optimal value of that problem
* ``subdiff_dist(z, y)``-- distance from y to the limiting subdifferential at z
* ``domain_dist(v)``    -- dist(v, dom g)
* ``prox_threshold``    -- supremum of the mu for which the prox is well defined

The prox of a nonconvex ``g`` is set-valued. Sets are built blockwise: each
block contributes a short list of tied optimal options and the full set is
the cartesian product, enumerated in selection order and truncated to
``prox_cap`` points.
"""

import heapq
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, ProxUnboundedError, UnsupportedError
from .extreal import INF, ExtReal

#: absolute tolerance used when deciding whether two candidate costs tie
TIE_TOL = 1e-12

#: tolerance on euclidean norms when applying the selection rule
NORM_TIE_TOL = 1e-12

DEFAULT_PROX_CAP = 8

SELECTION_RULE = "min-norm-then-lex"


@dataclass(frozen=True, eq=False)
class ProxSet:
    """Finite set of proximal points sharing the optimal value ``attained``."""

    points: tuple
    attained: float
    selection_rule: str = SELECTION_RULE

    def __post_init__(self):
        if not self.points:
            raise ValueError("a prox set is never empty")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def select(self) -> np.ndarray:
        return select_prox_point(self)

    def contains(self, z, atol=1e-12) -> bool:
        z = np.asarray(z, dtype=float)
        return any(np.allclose(p, z, rtol=0.0, atol=atol) for p in self.points)


def select_prox_point(s) -> np.ndarray:
    """Pick one point deterministically from a prox set.

    Among the points of minimal euclidean norm (up to ``NORM_TIE_TOL``) the
    lexicographically smallest is returned.

    >>> select_prox_point(ProxSet((np.array([1., 0.]), np.array([0., 1.])), 0.0))
    array([0., 1.])
    """
    points = [np.asarray(p, dtype=float) for p in (s.points if isinstance(s, ProxSet) else s)]
    if not points:
        raise ValueError("cannot select from an empty prox set")
    norms = [float(np.linalg.norm(p)) for p in points]
    nmin = min(norms)
    tied = [p for p, nrm in zip(points, norms) if nrm <= nmin + NORM_TIE_TOL]
    return min(tied, key=lambda p: tuple(p.tolist())).copy()


def _sort_key(point):
    return (float(point @ point), tuple(point.tolist()))


def _dedupe(options):
    out = []
    for opt in options:
        if not any(np.array_equal(opt, o) for o in out):
            out.append(opt)
    return sorted(out, key=_sort_key)


def _enumerate_product(m, blocks, cap):
    """Best-first enumeration of the cartesian product of block options.

    ``blocks`` is a list of ``(indices, options)``. Points come out ordered by
    squared norm, then lexicographically; at most ``cap`` are produced.
    """
    base = np.zeros(m)
    multi = []
    for idx, options in blocks:
        options = _dedupe(options)
        base[idx] = options[0]
        if len(options) > 1:
            multi.append((idx, options))
    if not multi:
        return [base]

    def build(choice):
        point = base.copy()
        for (idx, options), j in zip(multi, choice):
            point[idx] = options[j]
        return point

    start = (0,) * len(multi)
    heap = [(_sort_key(base), start)]
    seen = {start}
    out = []
    while heap and len(out) < cap:
        _, choice = heapq.heappop(heap)
        out.append(build(choice))
        for b, (_, options) in enumerate(multi):
            if choice[b] + 1 < len(options):
                nxt = choice[:b] + (choice[b] + 1,) + choice[b + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (_sort_key(build(nxt)), nxt))
    return out


def _ties(costs):
    """Indices of the costs within TIE_TOL of the smallest one."""
    best = min(costs)
    return [i for i, c in enumerate(costs) if c <= best + TIE_TOL]


class Regularizer(ABC):
    """Oracle contract for a proper, lsc, prox-bounded ``g: R^m -> R u {inf}``."""

    tag: str = ""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @property
    def prox_threshold(self) -> float:
        return math.inf

    @property
    def is_indicator(self) -> bool:
        return False

    @abstractmethod
    def values(self, Z) -> np.ndarray:
        """Batch evaluation over the last axis; ``np.inf`` outside dom g.

        Meant for brute-force scans; use :meth:`value` everywhere else.
        """

    @abstractmethod
    def _prox_blocks(self, mu, v):
        ...

    @abstractmethod
    def subdiff_dist(self, z, y) -> float:
        ...

    @abstractmethod
    def domain_dist(self, v) -> float:
        ...

    @abstractmethod
    def to_config(self) -> dict:
        ...

    def component(self, i):
        """The 1-D regularizer acting on coordinate ``i`` (separable kinds)."""
        raise UnsupportedError(f"{self.tag} is not coordinatewise separable")

    def _vec(self, v, name="z"):
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 and self.dim == 1:
            v = v.reshape(1)
        if v.shape != (self.dim,):
            raise DimensionError(f"{name} has shape {v.shape}, expected ({self.dim},)")
        return v

    def check_mu(self, mu):
        if not (mu > 0.0) or not math.isfinite(mu):
            raise ValueError(f"mu must be positive and finite, got {mu!r}")
        if mu >= self.prox_threshold:
            raise ProxUnboundedError(mu, self.prox_threshold)

    def value(self, z) -> ExtReal:
        z = self._vec(z)
        if not np.all(np.isfinite(z)):
            return INF
        val = float(self.values(z))
        return INF if math.isinf(val) else val

    def in_domain(self, z) -> bool:
        return self.value(z) is not INF

    def prox_objective(self, mu, v, z) -> ExtReal:
        gz = self.value(z)
        if gz is INF:
            return INF
        diff = np.asarray(z, dtype=float) - v
        return gz + float(diff @ diff) / (2.0 * mu)

    def prox(self, mu, v) -> ProxSet:
        v = self._vec(v, "v")
        self.check_mu(mu)
        points = _enumerate_product(self.dim, self._prox_blocks(mu, v), self.prox_cap)
        attained = self.prox_objective(mu, v, points[0])
        return ProxSet(tuple(points), float(attained))

    def moreau(self, mu, v) -> float:
        return self.prox(mu, v).attained

    def _require_domain(self, z):
        if self.value(z) is INF:
            raise DomainError(f"{self.tag}: point {np.asarray(z).tolist()} is outside dom g")


@dataclass(frozen=True, eq=False)
class L0(Regularizer):
    """``weight * ||z||_0``, the weighted count of nonzero entries."""

    m: int
    weight: float = 1.0
    prox_cap: int = DEFAULT_PROX_CAP
    tag = "l0"

    def __post_init__(self):
        if self.m < 1 or not self.weight > 0:
            raise ValueError("L0 needs m >= 1 and a positive weight")

    @property
    def dim(self):
        return self.m

    def values(self, Z):
        Z = np.asarray(Z, dtype=float)
        return self.weight * np.count_nonzero(Z, axis=-1).astype(float)

    def _prox_blocks(self, mu, v):
        blocks = []
        zero = np.zeros(1)
        for i, vi in enumerate(v):
            if vi == 0.0:
                options = [zero]
            else:
                keep, kill = np.array([vi]), zero
                # cost of z_i = v_i is weight, of z_i = 0 is v_i^2/(2 mu)
                costs = [self.weight, vi * vi / (2.0 * mu)]
                options = [(keep, kill)[j] for j in _ties(costs)]
            blocks.append(([i], options))
        return blocks

    def subdiff_dist(self, z, y):
        z, y = self._vec(z), self._vec(y, "y")
        return float(np.linalg.norm(y[z != 0.0]))

    def domain_dist(self, v):
        self._vec(v, "v")
        return 0.0

    def component(self, i):
        return L0(1, self.weight, self.prox_cap)

    def to_config(self):
        return {"kind": self.tag, "m": self.m, "weight": self.weight}


@dataclass(frozen=True, eq=False)
class IndicatorBox(Regularizer):
    """Indicator of ``{z : lo <= z <= hi}``; bounds may be infinite."""

    lo: np.ndarray
    hi: np.ndarray
    prox_cap: int = DEFAULT_PROX_CAP
    tag = "box"

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be 1-D arrays of equal length")
        if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds need lo <= hi componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def is_indicator(self):
        return True

    def values(self, Z):
        Z = np.asarray(Z, dtype=float)
        inside = np.all((Z >= self.lo) & (Z <= self.hi), axis=-1)
        return np.where(inside, 0.0, np.inf)

    def _prox_blocks(self, mu, v):
        return [(list(range(self.dim)), [np.clip(v, self.lo, self.hi)])]

    def subdiff_dist(self, z, y):
        z, y = self._vec(z), self._vec(y, "y")
        self._require_domain(z)
        # normal cone per coordinate: {0}, (-inf, 0], [0, inf) or R
        lower = np.where(z == self.lo, -np.inf, 0.0)
        upper = np.where(z == self.hi, np.inf, 0.0)
        return float(np.linalg.norm(y - np.clip(y, lower, upper)))

    def domain_dist(self, v):
        v = self._vec(v, "v")
        return float(np.linalg.norm(v - np.clip(v, self.lo, self.hi)))

    def component(self, i):
        return IndicatorBox(self.lo[i:i + 1], self.hi[i:i + 1], self.prox_cap)

    def to_config(self):
        return {"kind": self.tag, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class IndicatorComplementarity(Regularizer):
    """Indicator of ``{z in R^{2p} : 0 <= z_i _|_ z_{p+i} >= 0 for all i}``.

    Pair ``i`` couples coordinates ``i`` and ``p + i``.
    """

    p: int
    prox_cap: int = DEFAULT_PROX_CAP
    tag = "complementarity"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("need at least one complementarity pair")

    @property
    def dim(self):
        return 2 * self.p

    @property
    def is_indicator(self):
        return True

    def values(self, Z):
        Z = np.asarray(Z, dtype=float)
        a, b = Z[..., : self.p], Z[..., self.p:]
        ok = np.all((a >= 0.0) & (b >= 0.0) & ((a == 0.0) | (b == 0.0)), axis=-1)
        return np.where(ok, 0.0, np.inf)

    def _arms(self, a, b):
        """Projections onto the two arms and their squared distances."""
        first = np.array([max(a, 0.0), 0.0])
        second = np.array([0.0, max(b, 0.0)])
        d_first = min(a, 0.0) ** 2 + b * b
        d_second = a * a + min(b, 0.0) ** 2
        return (first, second), (d_first, d_second)

    def _prox_blocks(self, mu, v):
        blocks = []
        for i in range(self.p):
            arms, dists = self._arms(v[i], v[self.p + i])
            costs = [d / (2.0 * mu) for d in dists]
            blocks.append(([i, self.p + i], [arms[j] for j in _ties(costs)]))
        return blocks

    def subdiff_dist(self, z, y):
        z, y = self._vec(z), self._vec(y, "y")
        self._require_domain(z)
        total = 0.0
        for i in range(self.p):
            a, b = z[i], z[self.p + i]
            u, w = y[i], y[self.p + i]
            if a > 0.0:
                d2 = u * u
            elif b > 0.0:
                d2 = w * w
            else:
                # union of {u = 0}, {w = 0} and the negative quadrant
                d2 = min(u * u, w * w, max(u, 0.0) ** 2 + max(w, 0.0) ** 2)
            total += d2
        return math.sqrt(total)

    def domain_dist(self, v):
        v = self._vec(v, "v")
        total = 0.0
        for i in range(self.p):
            _, dists = self._arms(v[i], v[self.p + i])
            total += min(dists)
        return math.sqrt(total)

    def to_config(self):
        return {"kind": self.tag, "pairs": self.p}


@dataclass(frozen=True, eq=False)
class IndicatorPoint(Regularizer):
    """Indicator of the singleton ``{z0}`` (equality constraints)."""

    z0: np.ndarray
    prox_cap: int = DEFAULT_PROX_CAP
    tag = "point"

    def __post_init__(self):
        z0 = np.atleast_1d(np.asarray(self.z0, dtype=float)).copy()
        if z0.ndim != 1 or not np.all(np.isfinite(z0)):
            raise ValueError("z0 must be a finite 1-D vector")
        z0.setflags(write=False)
        object.__setattr__(self, "z0", z0)

    @property
    def dim(self):
        return self.z0.shape[0]

    @property
    def is_indicator(self):
        return True

    def values(self, Z):
        Z = np.asarray(Z, dtype=float)
        return np.where(np.all(Z == self.z0, axis=-1), 0.0, np.inf)

    def _prox_blocks(self, mu, v):
        return [(list(range(self.dim)), [self.z0.copy()])]

    def subdiff_dist(self, z, y):
        self._vec(y, "y")
        self._require_domain(z)
        return 0.0

    def domain_dist(self, v):
        v = self._vec(v, "v")
        return float(np.linalg.norm(v - self.z0))

    def component(self, i):
        return IndicatorPoint(self.z0[i:i + 1], self.prox_cap)

    def to_config(self):
        return {"kind": self.tag, "z0": self.z0.tolist()}


@dataclass(frozen=True, eq=False)
class NegSquare(Regularizer):
    """``-a ||z||^2``: smooth, concave, prox-bounded with threshold 1/(2a)."""

    m: int
    a: float = 1.0
    prox_cap: int = DEFAULT_PROX_CAP
    tag = "neg-square"

    def __post_init__(self):
        if self.m < 1 or not self.a > 0:
            raise ValueError("NegSquare needs m >= 1 and a > 0")

    @property
    def dim(self):
        return self.m

    @property
    def prox_threshold(self):
        return 1.0 / (2.0 * self.a)

    def values(self, Z):
        Z = np.asarray(Z, dtype=float)
        return -self.a * np.sum(Z * Z, axis=-1)

    def _prox_blocks(self, mu, v):
        return [(list(range(self.m)), [v / (1.0 - 2.0 * self.a * mu)])]

    def subdiff_dist(self, z, y):
        z, y = self._vec(z), self._vec(y, "y")
        return float(np.linalg.norm(y + 2.0 * self.a * z))

    def domain_dist(self, v):
        self._vec(v, "v")
        return 0.0

    def component(self, i):
        return NegSquare(1, self.a, self.prox_cap)

    def to_config(self):
        return {"kind": self.tag, "m": self.m, "a": self.a}


KINDS = {
    "l0": L0,
    "box": IndicatorBox,
    "complementarity": IndicatorComplementarity,
    "point": IndicatorPoint,
    "neg-square": NegSquare,
}


def regularizer_from_config(cfg: dict, m=None) -> Regularizer:
    """Build a regularizer from its string tag and parameters.

    ``m`` fills in the dimension for kinds whose parameters do not fix it.
    """
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    cap = int(cfg.pop("prox_cap", DEFAULT_PROX_CAP))
    if kind == "l0":
        return L0(int(cfg.get("m", m)), float(cfg.get("weight", 1.0)), cap)
    if kind == "box":
        lo, hi = cfg["lo"], cfg["hi"]
        if np.ndim(lo) == 0 and m is not None:
            lo = [lo] * m
        if np.ndim(hi) == 0 and m is not None:
            hi = [hi] * m
        lo = [(-math.inf if x is None else x) for x in np.atleast_1d(np.asarray(lo, dtype=object))]
        hi = [(math.inf if x is None else x) for x in np.atleast_1d(np.asarray(hi, dtype=object))]
        return IndicatorBox(np.array(lo, dtype=float), np.array(hi, dtype=float), cap)
    if kind == "complementarity":
        p = cfg.get("pairs", None if m is None else m // 2)
        return IndicatorComplementarity(int(p), cap)
    if kind == "point":
        return IndicatorPoint(np.asarray(cfg["z0"], dtype=float), cap)
    if kind == "neg-square":
        return NegSquare(int(cfg.get("m", m)), float(cfg.get("a", 1.0)), cap)
    raise ValueError(f"unknown regularizer kind {kind!r}; known: {sorted(KINDS)}")
