import math

import numpy as np
import pytest

from compal.alm import (
    OuterConfig,
    RateEstimate,
    Status,
    estimate_rates,
    q_factors,
    safeguard,
    solve,
    tolerance_next,
    update_penalty,
)
from compal.core import residual_theta
from compal.errors import InsufficientHistory, MaxInnerIterations, ProxUnboundedError
from compal.inner import InnerConfig
from compal.instances import resolve_instance


def run(name, **outer):
    spec = resolve_instance(name)
    return spec.problem, solve(spec.problem, OuterConfig(**outer), spec.x0, spec.y0)


def test_safeguard_examples():
    np.testing.assert_array_equal(safeguard([-1.0, 0.0], OuterConfig(y_lo=-10, y_hi=10)), [-1.0, 0.0])
    np.testing.assert_array_equal(safeguard([5.0], OuterConfig(y_lo=-2, y_hi=2)), [2.0])
    np.testing.assert_array_equal(safeguard([5.0], OuterConfig(y_lo=-2, y_hi=2, safeguard_mode="reset_on_escape")), [0.0])


def test_penalty_rule_examples():
    cfg = OuterConfig(theta=0.5)
    assert update_penalty(10.0, 0.1, 1.0, 0, cfg) == 1.0
    assert update_penalty(0.2, 0.5, 1.0, 3, cfg) == 1.0
    assert update_penalty(0.4, 0.5, 1.0, 3, OuterConfig(theta=0.5, kappa=0.5)) == 0.5


def test_tolerance_examples():
    cfg = OuterConfig(nu0=0.1, nu_shrink=0.5)
    assert tolerance_next(1.0, 2, cfg) == pytest.approx(0.025)
    assert tolerance_next(0.0, 4, cfg) == 0.0
    assert tolerance_next(None, 0, cfg) == cfg.eps0
    fixed = OuterConfig(eps_rule="fixed", eps_sequence=(1e-2, 1e-4))
    assert [tolerance_next(1.0, k, fixed) for k in range(3)] == [1e-2, 1e-4, 1e-4]


def test_rate_classification_examples():
    est = estimate_rates([1, 0.5, 0.25, 0.125])
    assert est.kind == "linear" and est.q_hat == 0.5 and est.q_factors == [0.5, 0.5, 0.5]
    assert str(est) == "linear(0.5)"
    assert estimate_rates([1, 0.3, 0.03, 0.0009]).kind == "superlinear"
    assert estimate_rates([1, 0.99, 0.985, 0.98]).kind == "sublinear"
    with pytest.raises(InsufficientHistory):
        estimate_rates([1.0, 0.5, 0.25])


def test_sparse_quad_default_solve():
    p, rep = run("sparse-quad")
    assert rep.status is Status.STATIONARY
    assert np.linalg.norm(rep.x) <= 1e-6
    assert np.linalg.norm(rep.y - [-1.0, 0.0]) <= 1e-5


def test_box_nlp_solve():
    p, rep = run("box-nlp")
    assert rep.status is Status.STATIONARY
    assert abs(rep.x[0] - 1.0) <= 1e-6 and abs(rep.y[0] + 2.0) <= 1e-6


def test_mpcc_toy_solve():
    p, rep = run("mpcc-toy")
    assert rep.status is Status.STATIONARY
    assert min(np.linalg.norm(rep.x - [1, 0]), np.linalg.norm(rep.x - [0, 1])) <= 1e-6
    assert rep.records[-1].Theta <= 1e-6


@pytest.mark.parametrize("name", ["sparse-quad", "box-nlp", "mpcc-toy"])
def test_record_invariants(name):
    p, rep = run(name)
    mus = [r.mu for r in rep.records]
    for r in rep.records:
        cx = p.eval_c(r.x)
        np.testing.assert_allclose(r.mu * (r.y - r.y_hat), cx - r.z, rtol=0, atol=1e-12)
        assert r.V == pytest.approx(float(np.linalg.norm(cx - r.z)), abs=0)
        assert p.g.subdiff_dist(r.z, r.y) <= 1e-9
        assert r.Theta == pytest.approx(residual_theta(p, r.x, r.z, r.y), abs=0)
        grad = p.eval_grad(r.x) + p.eval_jac(r.x).T @ r.y
        assert r.Theta <= float(np.linalg.norm(grad)) + r.V + 1e-15
        assert np.max(np.abs(r.y_hat)) <= 1e6
    for a, b in zip(mus, mus[1:]):
        assert b in (a, 0.1 * a)


def test_infeasible_reaches_penalty_floor():
    p, rep = run("infeasible-eq", safeguard_mode="reset_on_escape")
    assert rep.status is Status.SHRUNK_PENALTY_FLOOR
    assert abs(rep.x[0] - 1.0) <= 1e-3
    assert p.g.domain_dist(p.eval_c(rep.x)) == pytest.approx(math.sqrt(2), abs=1e-3)


def test_neg_square_guard_and_unbounded():
    spec = resolve_instance("neg-square")
    for mu0 in (0.5, 0.75):
        with pytest.raises(ProxUnboundedError):
            solve(spec.problem, OuterConfig(mu0=mu0), spec.x0)
    rep = solve(spec.problem, OuterConfig(mu0=0.25), spec.x0)
    assert rep.status is Status.UNBOUNDED_BELOW


def test_default_mu_is_clipped_by_threshold():
    assert OuterConfig().initial_mu(0.5) == pytest.approx(0.45)
    assert OuterConfig().initial_mu(math.inf) == 1.0


def test_max_outer_status():
    p, rep = run("sparse-quad", max_outer=3)
    assert rep.status is Status.MAX_OUTER and len(rep.records) == 3


def test_inner_failure_carries_outer_context():
    spec = resolve_instance("box-nlp")
    with pytest.raises(MaxInnerIterations, match="outer iteration 0") as info:
        solve(spec.problem, OuterConfig(eps0=0.0), spec.x0, inner_cfg=InnerConfig(max_iters=1))
    assert info.value.outer_k == 0


def test_callback_streams_records():
    seen = []
    spec = resolve_instance("box-nlp")
    rep = solve(spec.problem, OuterConfig(), spec.x0, callback=seen.append)
    assert seen == list(rep.records)


def test_determinism():
    _, a = run("mpcc-toy")
    _, b = run("mpcc-toy")
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]


def test_outer_config_validation():
    for bad in ({"theta": 1.0}, {"kappa": 0.0}, {"y_lo": -np.inf}, {"mu0": -1.0}, {"eps_rule": "nope"},
                {"eps_rule": "fixed"}, {"safeguard_mode": "x"}, {"penalty_rule": "x"}, {"max_outer": 0}):
        with pytest.raises(ValueError):
            OuterConfig(**bad)


def test_q_factors():
    assert q_factors([1.0, 0.5, 0.0]) == [0.5, 0.0]
    assert isinstance(estimate_rates([8, 4, 2, 1]), RateEstimate)
