import numpy as np
import pytest

from polyrad import (ProblemParams, RadialField, assemble_operator,
                     inverse_power_potential,
                     bubble_guess, continuation, default_branch_grid,
                     make_grid, newton_solve, principal_eigenvalue, sample,
                     verify_entry_residual)
from polyrad.bvp import blowup_diagnostics
from polyrad.pohozaev import solution_identity_check
from oracles import shoot_amplitude, shoot_eigenvalue


def test_principal_eigenvalue_n3():
    p = ProblemParams(3, 1)
    grid = make_grid(300, "clustered", 1.0)
    lam1 = principal_eigenvalue(assemble_operator(p, None, grid))
    assert lam1 == pytest.approx(np.pi ** 2, rel=1e-3)
    assert lam1 == pytest.approx(np.pi ** 2, rel=1e-8)  # far tighter in fact


def test_principal_eigenvalue_n5_vs_shooting():
    p = ProblemParams(5, 1)
    grid = make_grid(300, "clustered", 1.0)
    lam1 = principal_eigenvalue(assemble_operator(p, None, grid))
    oracle = shoot_eigenvalue(5)
    assert lam1 == pytest.approx(oracle, rel=1e-3)


def test_eigenvalue_grid_refinement():
    p = ProblemParams(3, 1)
    vals = {}
    for N in (200, 400):
        grid = make_grid(N, "clustered", 1.0)
        vals[N] = principal_eigenvalue(assemble_operator(p, None, grid))
    assert abs(vals[400] - vals[200]) / vals[200] < 1e-4


def test_eigenvalue_requires_unshifted():
    p = ProblemParams(3, 1, 1.0)
    grid = make_grid(120, "clustered", 1.0)
    with pytest.raises(ValueError):
        principal_eigenvalue(assemble_operator(p, None, grid))


def test_newton_zero_fixed_point():
    p = ProblemParams(3, 1, 2.0)
    grid = default_branch_grid(160)
    zero = sample(lambda r: np.zeros_like(r), grid, "even")
    res = newton_solve(p, None, zero, tol=1e-10)
    assert res.status == "converged"
    assert np.max(np.abs(res.field.values)) < 1e-12


def test_newton_collapse_reported():
    p = ProblemParams(5, 1, 10.0)
    grid = default_branch_grid(200)
    res = newton_solve(p, None, bubble_guess(p, grid, 0.5), tol=1e-9)
    assert res.status == "collapsed_to_trivial"


def test_newton_n5_matches_shooting():
    p5 = ProblemParams(5, 1)
    lam1 = shoot_eigenvalue(5)
    lam = 0.5 * lam1
    grid = default_branch_grid(320)
    res = newton_solve(p5.with_lambda(lam), None,
                       bubble_guess(p5, grid, 19.0), tol=1e-10)
    assert res.ok
    alpha = shoot_amplitude(5, lam)
    assert np.max(np.abs(res.field.values)) == pytest.approx(alpha, rel=1e-5)


def test_newton_n3_brezis_nirenberg(eigpair_n3):
    lam1, phi = eigpair_n3
    p3 = ProblemParams(3, 1)
    lam = 0.9 * np.pi ** 2
    guess = RadialField(phi.grid, 1.5 * phi.values, "even")
    res = newton_solve(p3.with_lambda(lam), None, guess, tol=1e-9)
    assert res.ok
    alpha = shoot_amplitude(3, lam)
    assert np.max(np.abs(res.field.values)) == pytest.approx(alpha, rel=1e-5)


def test_newton_rejects_negative_lambda():
    p = ProblemParams(3, 1, -1.0)
    grid = default_branch_grid(120)
    with pytest.raises(ValueError):
        newton_solve(p, None, bubble_guess(ProblemParams(3, 1), grid, 1.0))


def test_mirror_symmetry(eigpair_n3):
    lam1, phi = eigpair_n3
    p3 = ProblemParams(3, 1)
    lam = 0.8 * np.pi ** 2
    plus = newton_solve(p3.with_lambda(lam), None,
                        RadialField(phi.grid, 2.0 * phi.values, "even"),
                        tol=1e-10)
    minus = newton_solve(p3.with_lambda(lam), None,
                         RadialField(phi.grid, -2.0 * phi.values, "even"),
                         tol=1e-10)
    assert plus.ok and minus.ok
    assert np.allclose(minus.field.values, -plus.field.values, atol=1e-7)


def test_continuation_records_and_failure():
    p5 = ProblemParams(5, 1)
    lam1 = 20.1907286
    grid = default_branch_grid(280)
    path = np.geomspace(0.5 * lam1, 0.3 * lam1, 5)
    br = continuation(p5, path, bubble_guess(p5, grid, 19.0), tol=1e-9)
    assert len(br.entries) == 5
    assert br.direction == "decreasing-lambda"
    for e in br.entries:
        assert e.nu == pytest.approx(e.sup_norm ** (-2.0 / (p5.n - 2 * p5.k)),
                                     rel=1e-14)
        assert verify_entry_residual(e, p5) <= 1e-9
    # non-monotone path rejected
    with pytest.raises(ValueError):
        continuation(p5, [1.0, 2.0, 1.5], bubble_guess(p5, grid, 19.0))


def test_continuation_with_hardy_potential(eigpair_n3):
    _, phi = eigpair_n3
    p3 = ProblemParams(3, 1)
    V = inverse_power_potential(1 / 32, 1)
    lam = 0.7 * np.pi ** 2
    br = continuation(p3, [lam, 0.95 * lam],
                      RadialField(phi.grid, 2.0 * phi.values, "even"),
                      V=V, tol=1e-9)
    assert len(br.entries) == 2
    assert verify_entry_residual(br.entries[-1], p3, V) <= 1e-9


def test_continuation_empty_on_bad_seed():
    p5 = ProblemParams(5, 1)
    grid = default_branch_grid(200)
    br = continuation(p5, [10.0, 9.0], bubble_guess(p5, grid, 0.1), tol=1e-9)
    assert len(br.entries) == 0
    assert br.failure_lambda == 10.0
    assert br.failure_reason is not None


def test_branch_serialization(tmp_path):
    p5 = ProblemParams(5, 1)
    grid = default_branch_grid(220)
    br = continuation(p5, [10.0, 9.5], bubble_guess(p5, grid, 19.0), tol=1e-8)
    br.write(tmp_path / "branch")
    import json
    man = json.loads((tmp_path / "branch" / "manifest.json").read_text())
    assert man["n"] == 5 and len(man["entries"]) == len(br.entries)
    assert (tmp_path / "branch" / "entry_000.csv").exists()


def test_branch_nu_consistency_and_argmax(branch_n3):
    br = branch_n3
    deep = [e for e in br.entries if e.sup_norm >= 10 * br.entries[0].sup_norm]
    assert deep, "branch never reached the blow-up regime"
    for e in deep[-3:]:
        r = e.field.grid.nodes
        argmax_r = r[np.argmax(np.abs(e.field.values))]
        assert argmax_r <= 3.0 * e.nu
        assert verify_entry_residual(e, br.params) <= 1e-9


def test_blowup_diagnostics_refusal(branch_n3):
    with pytest.raises(ValueError, match="blow-up regime"):
        blowup_diagnostics(branch_n3, 0, R=5.0, delta=0.3, gamma=0.5)


def test_blowup_diagnostics_deep_entry(branch_n3):
    rep = blowup_diagnostics(branch_n3, len(branch_n3.entries) - 1, R=5.0,
                             delta=0.3, gamma=0.5)
    assert rep.eps0 == 1
    assert rep.profile_error < 0.05
    assert rep.greenlimit_error < 0.15
    assert np.isfinite(rep.gamma_envelope)
    assert rep.weak_estimate_sup < 3.0


def test_weak_estimate_band(branch_n3):
    br = branch_n3
    sups = []
    e0 = 0.5 * (br.params.n - 2 * br.params.k)
    for e in br.entries:
        if e.sup_norm >= 10 * br.entries[0].sup_norm:
            r = e.field.grid.nodes
            sups.append(np.max(r ** e0 * np.abs(e.field.values)))
    assert max(sups) / min(sups) < 3.0


def test_identity_scaling_along_branch(branch_n3):
    # int u T(u) over B_delta scales like nu^{n-2k} along the branch
    br = branch_n3
    p = br.params
    deep = [e for e in br.entries
            if e.sup_norm >= 10 * br.entries[0].sup_norm]
    pairs = []
    for e in deep:
        grid = e.field.grid
        d = grid.nodes[np.argmin(np.abs(grid.nodes - 0.5))]
        rep = solution_identity_check(e.field, e.lam, d, p, nu=e.nu)
        # every blow-up entry satisfies the boundary identity within budget
        assert rep.relative_residual <= 1e-4
        pairs.append((e.nu, rep.extras["uTu_integral"]))
    # find two entries with nu ratio closest to 1/2
    best = min(((a, b) for a in pairs for b in pairs if a[0] > b[0]),
               key=lambda ab: abs(ab[1][0] / ab[0][0] - 0.5))
    (nu1, i1), (nu2, i2) = best
    ratio = i2 / i1
    expected = (nu2 / nu1) ** (p.n - 2 * p.k)
    assert ratio == pytest.approx(expected, rel=0.3)
