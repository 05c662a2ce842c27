import math

import numpy as np
import pytest
from scipy.optimize import brentq

from compal.core import Problem, eval_aug_lagrangian, multiplier_from_prox
from compal.errors import MaxInnerIterations, UnboundedBelow, UnsupportedError
from compal.inner import (
    InnerConfig,
    certificate_at,
    solve_subproblem,
    solve_subproblem_global_grid,
    subproblem_descent_step,
)
from compal.instances import box_nlp, infeasible_eq, inline_problem, mpcc_toy, neg_square, sparse_quad
from compal.regularizers import L0, IndicatorBox


def _recheck(p, cert):
    """Re-derive the certificate fields through the public oracles."""
    cx = p.eval_c(cert.x)
    ps = p.g.prox(cert.mu, cx + cert.mu * cert.y_hat)
    assert ps.contains(cert.z)
    y = multiplier_from_prox(cx, cert.y_hat, cert.mu, cert.z)
    np.testing.assert_allclose(cert.y_tilde, y, rtol=0, atol=1e-12)
    grad = p.eval_grad(cert.x) + p.eval_jac(cert.x).T @ cert.y_tilde
    assert abs(float(np.linalg.norm(grad)) - cert.grad_norm) <= 1e-12


def test_box_subproblem_matches_bisection():
    p = box_nlp()
    cert = solve_subproblem(p, [0.0], 0.1, 1e-8, [5.0])
    # stationarity of x^2 + dist^2(x, [1, 3]) / 0.2 on x < 1
    root = brentq(lambda x: 2 * x + (x - 1) / 0.1, 0.0, 1.0, xtol=1e-14)
    assert root == pytest.approx(1 / 1.2, abs=1e-12)
    assert cert.x[0] == pytest.approx(root, abs=1e-8)
    np.testing.assert_array_equal(cert.z, [1.0])
    assert cert.grad_norm <= 1e-8
    _recheck(p, cert)


def test_sparse_subproblem_contract():
    p = sparse_quad()
    cert = solve_subproblem(p, [0.0, 0.0], 0.5, 1e-8, [0.0, 0.0])
    assert cert.grad_norm <= 1e-8 and cert.inner_iters > 0 and cert.converged
    _recheck(p, cert)


def test_infinite_tolerance_returns_start():
    for p, x0 in ((box_nlp(), [5.0]), (mpcc_toy(), [2.0, 0.5])):
        cert = solve_subproblem(p, np.zeros(p.m), 0.3, math.inf, x0)
        np.testing.assert_array_equal(cert.x, x0)
        assert cert.inner_iters == 0


def test_descent_step_examples():
    p = box_nlp()
    # on x in [1, 3] the AL is x^2 with Lipschitz gradient 2
    x_next, ok = subproblem_descent_step(p, [0.0], 0.5, [2.0], 0.5)
    assert ok and x_next[0] == 0.0
    x_next, ok = subproblem_descent_step(p, [-2.0], 0.5, [1.0], 1.0)
    assert ok and x_next[0] == 1.0


def test_flat_region_stalls_with_certificate():
    # the gradient oracle claims a slope but the AL is flat, so no step is accepted
    p = Problem(
        n=1, m=1,
        f=lambda x: 0.0,
        grad=lambda x: np.ones(1),
        c=lambda x: x.copy(),
        jac=lambda x: np.ones((1, 1)),
        g=IndicatorBox([-10.0], [10.0]),
    )
    cert = solve_subproblem(p, [0.0], 0.5, 1e-12, [3.0])
    assert not cert.converged and cert.grad_norm > 1e-12
    np.testing.assert_array_equal(cert.x, [3.0])


def test_nonmonotone_reference_bounds_values():
    p = sparse_quad()
    trace = []
    solve_subproblem(p, [0.3, -0.1], 0.2, 1e-10, [1.0, -2.0], InnerConfig(window=3), trace=trace)
    assert trace and all(val <= ref for val, ref in trace)


def test_max_iterations_carries_best():
    p = box_nlp()
    with pytest.raises(MaxInnerIterations) as info:
        solve_subproblem(p, [0.0], 0.1, 0.0, [5.0], InnerConfig(max_iters=2))
    assert info.value.best is not None and not info.value.best.converged


def test_unbounded_below_detected():
    # f = -x^2/2 plus an envelope bounded by 1; the origin is a local minimizer
    p = inline_problem({"f": {"Q": [[-1.0]]}, "c": {"A": [[1.0]]}, "g": {"kind": "l0"}})
    with pytest.raises(UnboundedBelow):
        solve_subproblem(p, [0.0], 0.5, 1e-8, [2.0])


def test_grid_oracle_examples():
    x = solve_subproblem_global_grid(infeasible_eq(), [0.0, 0.0], 0.01, [(-3.0, 5.0)], 1e-3)
    assert abs(x[0] - 1.0) <= 1e-3
    x = solve_subproblem_global_grid(box_nlp(), [0.0], 0.1, [(-3.0, 5.0)], 1e-3)
    assert abs(x[0] - 1 / 1.2) <= 1e-3


def test_grid_oracle_matches_scan():
    # constant f: every x with c(x) in [0, 1] is optimal, the scan keeps the first one
    p = Problem(1, 1, lambda x: 0.0, lambda x: np.zeros(1), lambda x: x.copy(), lambda x: np.ones((1, 1)),
                IndicatorBox([0.0], [1.0]))
    x = solve_subproblem_global_grid(p, [0.0], 0.5, [(-2.0, 2.0)], 0.5)
    vals = [eval_aug_lagrangian(p, [t], [0.0], 0.5)[0] for t in np.arange(-2.0, 2.01, 0.5)]
    assert eval_aug_lagrangian(p, x, [0.0], 0.5)[0] == min(vals)
    assert x[0] == 0.0


def test_grid_oracle_dimension_limit():
    p = inline_problem({"f": {"Q": np.eye(3).tolist()}, "c": {"A": np.eye(3).tolist()}, "g": {"kind": "l0"}})
    with pytest.raises(UnsupportedError):
        solve_subproblem_global_grid(p, np.zeros(3), 0.5, [(-1, 1)] * 3, 0.1)


def test_certificate_at_is_consistent():
    p = mpcc_toy()
    cert = certificate_at(p, [0.5, -0.5], 0.3, [0.4, 0.9])
    _recheck(p, cert)


def test_prox_guard_in_inner_solver():
    with pytest.raises(ValueError, match="prox-unbounded"):
        solve_subproblem(neg_square(), [0.0], 0.5, 1e-8, [0.5])


def test_inner_config_validation():
    for bad in ({"sigma": 0.0}, {"beta": 1.0}, {"window": 0}, {"initial_step": 0.0}):
        with pytest.raises(ValueError):
            InnerConfig(**bad)
