"""Registry of small built-in test problems and an inline problem builder.

Registered instances
--------------------
sparse-quad
    f(x) = 1/2 (x1 - x2)^2 + x1 - x2,  c(x) = (x1 - x2, x1 + x2),  g = ||.||_0.
    The origin is M-stationary with unique multiplier (-1, 0).
box-nlp
    f(x) = x^2,  c(x) = x,  g = indicator of [1, 3].  Solution x = 1, y = -2.
mpcc-toy
    f(x) = (x1 - 1)^2 + (x2 - 1)^2,  c = identity,  g = indicator of the
    complementarity set {0 <= z1 _|_ z2 >= 0}.  Solutions (1, 0) and (0, 1).
infeasible-eq
    f = 0,  c(x) = (x, x - 2),  g = indicator of {(0, 0)}.  Infeasible; the
    constraint violation dist(c(x), {0}) is minimal (sqrt 2) at x = 1.
neg-square
    f(x) = x^2 / 2,  c(x) = x,  g(z) = -z^2.  phi = -x^2/2 is unbounded
    below; the origin is an M-stationary strict local maximizer.
"""

from dataclasses import dataclass

import numpy as np

from .core import Problem
from .regularizers import (
    IndicatorBox,
    IndicatorComplementarity,
    IndicatorPoint,
    L0,
    NegSquare,
    regularizer_from_config,
)


@dataclass(frozen=True, eq=False)
class InstanceSpec:
    problem: Problem
    x0: np.ndarray
    y0: np.ndarray


def sparse_quad(extra_curvature=0.0) -> Problem:
    """The sparsity example; ``extra_curvature`` adds ``extra_curvature*||x||^2`` to f."""
    r = float(extra_curvature)

    def f(x):
        s = x[0] - x[1]
        return 0.5 * s * s + s + r * float(x @ x)

    def grad(x):
        s = x[0] - x[1]
        return np.array([s + 1.0, -(s + 1.0)]) + 2.0 * r * x

    def hess(x):
        return np.array([[1.0, -1.0], [-1.0, 1.0]]) + 2.0 * r * np.eye(2)

    jac = np.array([[1.0, -1.0], [1.0, 1.0]])
    return Problem(
        n=2,
        m=2,
        f=f,
        grad=grad,
        c=lambda x: jac @ x,
        jac=lambda x: jac,
        g=L0(2, 1.0),
        hess=hess,
        c_hess=lambda x: np.zeros((2, 2, 2)),
        name="sparse-quad" if r == 0.0 else f"sparse-quad+{r:g}|x|^2",
    )


def box_nlp() -> Problem:
    return Problem(
        n=1,
        m=1,
        f=lambda x: float(x[0] ** 2),
        grad=lambda x: 2.0 * x,
        c=lambda x: x.copy(),
        jac=lambda x: np.ones((1, 1)),
        g=IndicatorBox([1.0], [3.0]),
        hess=lambda x: np.array([[2.0]]),
        c_hess=lambda x: np.zeros((1, 1, 1)),
        name="box-nlp",
    )


def mpcc_toy() -> Problem:
    return Problem(
        n=2,
        m=2,
        f=lambda x: float((x[0] - 1.0) ** 2 + (x[1] - 1.0) ** 2),
        grad=lambda x: 2.0 * (x - 1.0),
        c=lambda x: x.copy(),
        jac=lambda x: np.eye(2),
        g=IndicatorComplementarity(1),
        hess=lambda x: 2.0 * np.eye(2),
        c_hess=lambda x: np.zeros((2, 2, 2)),
        name="mpcc-toy",
    )


def infeasible_eq() -> Problem:
    return Problem(
        n=1,
        m=2,
        f=lambda x: 0.0,
        grad=lambda x: np.zeros(1),
        c=lambda x: np.array([x[0], x[0] - 2.0]),
        jac=lambda x: np.ones((2, 1)),
        g=IndicatorPoint([0.0, 0.0]),
        hess=lambda x: np.zeros((1, 1)),
        c_hess=lambda x: np.zeros((2, 1, 1)),
        name="infeasible-eq",
    )


def neg_square(a=1.0) -> Problem:
    return Problem(
        n=1,
        m=1,
        f=lambda x: float(0.5 * x[0] ** 2),
        grad=lambda x: x.copy(),
        c=lambda x: x.copy(),
        jac=lambda x: np.ones((1, 1)),
        g=NegSquare(1, a),
        hess=lambda x: np.eye(1),
        c_hess=lambda x: np.zeros((1, 1, 1)),
        name="neg-square",
    )


REGISTRY = {
    "sparse-quad": (sparse_quad, [0.3, -0.2]),
    "box-nlp": (box_nlp, [5.0]),
    "mpcc-toy": (mpcc_toy, [2.0, 0.5]),
    "infeasible-eq": (infeasible_eq, [0.0]),
    "neg-square": (neg_square, [0.5]),
}

# Start points for rate experiments. Rates are local statements: from the
# default sparse-quad start a small mu keeps both l0 components and the run
# settles at a different M-stationary point, so start inside the origin's basin.
RATES_X0 = {
    "sparse-quad": [0.02, 0.01],
}


def get_problem(name: str) -> Problem:
    try:
        factory, _ = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown instance {name!r}; known: {sorted(REGISTRY)}") from None
    return factory()


def inline_problem(spec: dict) -> Problem:
    """Build a problem from an inline description.

    ``spec`` keys:

    * ``f``: ``{"Q": n x n, "q": n}`` for ``f(x) = 1/2 x^T Q x + q^T x``
      (Q is symmetrized);
    * ``c``: either ``{"A": m x n, "b": m}`` for ``c(x) = A x + b`` or
      ``{"poly": [[a_i0, a_i1, ...], ...]}`` for the componentwise polynomial
      ``c_i(x) = sum_k a_ik x_i^k`` (requires m = n);
    * ``g``: regularizer config, see
      :func:`~compal.regularizers.regularizer_from_config`.
    """
    Q = np.atleast_2d(np.asarray(spec["f"]["Q"], dtype=float))
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    q = np.asarray(spec["f"].get("q", np.zeros(n)), dtype=float).reshape(n)

    cspec = spec["c"]
    if "poly" in cspec:
        coeffs = [np.asarray(row, dtype=float) for row in cspec["poly"]]
        if len(coeffs) != n:
            raise ValueError("componentwise polynomial c needs one coefficient row per variable")
        m = n
        pows = [np.arange(len(a)) for a in coeffs]

        def c(x):
            return np.array([np.sum(a * x[i] ** k) for i, (a, k) in enumerate(zip(coeffs, pows))])

        def jac(x):
            d = [np.sum(a[1:] * k[1:] * x[i] ** (k[1:] - 1)) for i, (a, k) in enumerate(zip(coeffs, pows))]
            return np.diag(d)

        def c_hess(x):
            H = np.zeros((m, n, n))
            for i, (a, k) in enumerate(zip(coeffs, pows)):
                H[i, i, i] = np.sum(a[2:] * k[2:] * (k[2:] - 1) * x[i] ** (k[2:] - 2))
            return H
    else:
        A = np.atleast_2d(np.asarray(cspec["A"], dtype=float))
        m = A.shape[0]
        if A.shape[1] != n:
            raise ValueError(f"A has {A.shape[1]} columns, f has n={n}")
        b = np.asarray(cspec.get("b", np.zeros(m)), dtype=float).reshape(m)

        def c(x):
            return A @ x + b

        def jac(x):
            return A

        def c_hess(x):
            return np.zeros((m, n, n))

    return Problem(
        n=n,
        m=m,
        f=lambda x: float(0.5 * x @ Q @ x + q @ x),
        grad=lambda x: Q @ x + q,
        c=c,
        jac=jac,
        g=regularizer_from_config(spec["g"], m),
        hess=lambda x: Q,
        c_hess=c_hess,
        name=spec.get("name", "inline"),
    )


def resolve_instance(instance, x0=None, y0=None, purpose="solve") -> InstanceSpec:
    """Turn a registry name or an inline dict into a problem with start point.

    ``purpose="rates"`` prefers the registered rate-experiment start.
    """
    if isinstance(instance, str):
        problem = get_problem(instance)
        default_x0 = REGISTRY[instance][1]
        if purpose == "rates":
            default_x0 = RATES_X0.get(instance, default_x0)
    elif isinstance(instance, dict):
        problem = inline_problem(instance)
        default_x0 = instance.get("x0", np.zeros(problem.n))
    else:
        raise TypeError("instance must be a registry name or an inline spec dict")
    x0 = problem.vec(default_x0 if x0 is None else x0, "x0")
    y0 = problem.vec(np.zeros(problem.m) if y0 is None else y0, "y0", problem.m)
    return InstanceSpec(problem, x0, y0)
