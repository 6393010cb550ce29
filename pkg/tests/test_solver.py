import numpy as np
import pytest

from snnpde.errors import AssemblyError, ConfigurationError
from snnpde.network import MlpConfig, Params, basis_values, init_xavier
from snnpde.problems import builtin
from snnpde.sampling import collocation_set, quadrature_set
from snnpde.solver import (
    LinearSystem,
    assemble_snnd,
    assemble_snni,
    eval_points,
    eval_quadrature,
    evaluate_errors,
    snn_solve,
    solve_omega,
)
from snnpde.training import TrainConfig
from toy import toy_collocation, toy_params, toy_problem, toy_quadrature


def _biased(p, seed=0):
    # Xavier biases are zero, which makes phi(0) = 0 and the corner row at the origin vanish
    for b in p.biases:
        b[...] = np.random.default_rng(seed).uniform(-0.5, 0.5, b.shape)
    return p



def test_snnd_m1_rows_by_hand():
    prob, p = toy_problem(), toy_params(extra=())
    colloc = toy_collocation(5)
    sys_ = assemble_snnd(p, prob, colloc, normalize=False)
    x = colloc.interior[:, 0]
    t = np.tanh(x)
    np.testing.assert_allclose(sys_.A[:5, 0], -2 * t * (1 - t**2), rtol=1e-14, atol=1e-16)
    np.testing.assert_allclose(sys_.A[5:, 0], np.tanh([-1.0, 1.0]), rtol=1e-15)
    np.testing.assert_allclose(sys_.b, sys_.A[:, 0], rtol=1e-14, atol=1e-16)
    assert sys_.row_tags == [("interior", 0, 5), ("boundary", 5, 7)]


def test_exact_solution_in_span():
    prob, p = toy_problem(), toy_params(extra=((0.5, 0.3), (-1.3, 0.1)))
    for system in (assemble_snnd(p, prob, toy_collocation(30)), assemble_snni(p, prob, toy_quadrature())):
        om = solve_omega(system)
        assert system.residual_norm(om) <= 1e-10
        np.testing.assert_allclose(om, [1.0, 0.0, 0.0], atol=1e-6)
        err = evaluate_errors(p, om, prob)
        assert err.rel_l2_discrete < 1e-8 and err.rel_linf < 1e-8


def test_snni_m1_scalar_normal_equation():
    prob, quad = toy_problem(), toy_quadrature(3, 6)
    p = toy_params(extra=())
    p.weights[0][0, 0] = 0.7
    p.biases[0][0] = 0.2
    quad.groups = [g for g in quad.groups]
    for g in quad.groups:
        g.weights = np.zeros(len(g))  # boundary block vanishes
    sys_ = assemble_snni(p, prob, quad, normalize=False)
    x = quad.interior[:, 0]
    t = np.tanh(0.7 * x + 0.2)
    a_phi = 0.49 * (-2 * t * (1 - t**2))
    f = prob.f(quad.interior)
    expect = np.sum(quad.weights * a_phi * f) / np.sum(quad.weights * a_phi**2)
    np.testing.assert_allclose(sys_.A[0, 0], np.sum(quad.weights * a_phi**2), rtol=1e-13)
    np.testing.assert_array_equal(sys_.A[1], [0.0])
    sol = np.linalg.lstsq(sys_.A[:1], sys_.b[:1], rcond=None)[0]
    np.testing.assert_allclose(sol, [expect], rtol=1e-12)


@pytest.mark.parametrize("name", ["helmholtz1d", "poisson2d", "advection", "parabolic1d", "anisotropic2d"])
def test_shapes_and_normalization(name):
    prob = builtin(name)
    M = 6
    p = _biased(init_xavier(MlpConfig(d=prob.d, hidden_widths=(7,), M=M, seed=11)))
    colloc = collocation_set(prob, 5, inclusive=prob.d == 1)
    a = assemble_snnd(p, prob, colloc)
    assert a.shape == (colloc.N + colloc.N_bar, M)
    np.testing.assert_allclose(np.abs(a.A).max(axis=1), 1.0, rtol=1e-15)
    A_raw, b_raw = a.raw()
    np.testing.assert_allclose(A_raw, assemble_snnd(p, prob, colloc, normalize=False).A, rtol=1e-14)
    quad = quadrature_set(prob, 2, 3)
    g = assemble_snni(p, prob, quad)
    assert g.shape == (2 * M, M)
    np.testing.assert_allclose(np.abs(g.A).max(axis=1), 1.0, rtol=1e-15)
    raw = assemble_snni(p, prob, quad, normalize=False).A
    for blk in (raw[:M], raw[M:]):
        np.testing.assert_allclose(blk, blk.T, atol=1e-13 * np.abs(blk).max())
        assert np.linalg.eigvalsh(blk).min() >= -1e-12 * np.abs(blk).max()
    for s in (a, g):
        om = solve_omega(s)
        assert s.residual_norm(om) <= s.residual_norm(np.ones(M))


def test_degenerate_basis_raises():
    prob = builtin("poisson2d")
    p = Params.zeros([(3, 2), (2, 3)])
    with pytest.raises(AssemblyError):
        assemble_snnd(p, prob, collocation_set(prob, 4))


def test_solve_omega_local_optimality():
    prob = builtin("parabolic1d")
    p = _biased(init_xavier(MlpConfig(d=2, hidden_widths=(6,), M=5, seed=5)))
    s = assemble_snnd(p, prob, collocation_set(prob, 6))
    om = solve_omega(s)
    r0 = s.residual_norm(om)
    rng = np.random.default_rng(0)
    for _ in range(100):
        d = rng.normal(size=om.shape)
        assert r0 <= s.residual_norm(om + 1e-4 * d / np.linalg.norm(d)) * (1 + 1e-12)


def test_consistent_square_system():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 6))
    x = rng.normal(size=6)
    om = solve_omega(LinearSystem(A, A @ x, [("all", 0, 6)]))
    np.testing.assert_allclose(om, x, rtol=1e-12 * np.linalg.cond(A))


def test_eval_sets():
    assert eval_points(builtin("helmholtz1d")).shape == (1001, 1)
    assert eval_points(builtin("poisson2d")).shape == (10201, 2)
    q = eval_quadrature(builtin("advection"))
    assert q.points.shape == (250**2, 2)
    np.testing.assert_allclose(q.weights.sum(), 2.0, rtol=1e-12)


def _tiny(prob, hidden=(6,), M=8):
    return MlpConfig(d=prob.d, hidden_widths=hidden, M=M, seed=1)


def test_snn_solve_paths():
    prob = builtin("helmholtz1d")
    colloc = collocation_set(prob, 30, inclusive=True)
    quad = quadrature_set(prob, 4, 5)
    cfg = TrainConfig(n_max=5, epsilon=1e-3)
    d = snn_solve(prob, _tiny(prob), cfg, colloc, "snn-d")
    assert d.system_shape == (32, 8) and d.error_form == "discrete" and d.rel_l2 == d.rel_l2_discrete
    assert d.residual_norm <= d.residual_norm_ones
    i = snn_solve(prob, _tiny(prob), TrainConfig(form="integral", n_max=5), quad, "snn-i")
    assert i.system_shape == (16, 8) and i.rel_l2 == i.rel_l2_integral
    e = snn_solve(prob, _tiny(prob, hidden=()), cfg, colloc, "elm")
    assert e.epochs_used == 0 and e.stop_reason == "untrained" and np.isnan(e.final_loss_ratio)
    b = snn_solve(prob, _tiny(prob), cfg, colloc, "pinn-baseline", baseline_epochs=4)
    assert b.system_shape is None and b.residual_norm is None and b.epochs_used == 4
    g = snn_solve(prob, _tiny(prob), cfg, quad, "dgm-baseline", baseline_epochs=3)
    assert g.epochs_used == 3 and g.error_form == "integral"
    doc = d.to_dict()
    assert doc["omega_dim"] == 8 and set(doc["timing"]) >= {"train_s", "assemble_s", "solve_s", "total_s"}
    with pytest.raises(ConfigurationError):
        snn_solve(prob, _tiny(prob), cfg, quad, "snn-d")
    with pytest.raises(ConfigurationError):
        snn_solve(prob, _tiny(prob), cfg, colloc, "snn-i")
    with pytest.raises(ConfigurationError):
        snn_solve(prob, _tiny(prob), cfg, colloc, "ritz")


def test_elm_degeneracy_matches_direct_least_squares():
    prob = builtin("helmholtz1d")
    colloc = collocation_set(prob, 40, inclusive=True)
    rep = snn_solve(prob, _tiny(prob, hidden=(), M=12), TrainConfig(), colloc, "elm")
    from snnpde.network import init_elm

    p = init_elm(_tiny(prob, hidden=(), M=12))
    np.testing.assert_array_equal(rep.params.flat, p.flat)
    np.testing.assert_array_equal(rep.omega, solve_omega(assemble_snnd(p, prob, colloc)))
    np.testing.assert_allclose(basis_values(rep.params, colloc.interior) @ rep.omega, basis_values(p, colloc.interior) @ rep.omega)
