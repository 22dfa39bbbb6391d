import numpy as np
import pytest

from polyrad import (BubbleProfile, ProblemParams, RadialField, bubble_field,
                     make_grid, sample, sphere_area)
from polyrad.pohozaev import (_s_terms, _FieldBackend, boundary_bilinear,
                              deltap_identity_residual, pohozaev_boundary,
                              pohozaev_profile_constant, pohozaev_residual,
                              solution_identity_check)
from polyrad.quadrature import integral_between
from polyrad.fdcalc import iterated_laplacian


def test_deltap_r2_any_n():
    # Delta(r v') with v=r^2: both sides equal -4n
    for n in (3, 5, 7):
        g = make_grid(32, "uniform", 1.0)
        v = sample(lambda r: r ** 2, g, "even")
        assert deltap_identity_residual(v, 1, n, edge=6) < 1e-9


def test_deltap_r4():
    g = make_grid(32, "uniform", 1.0)
    v = sample(lambda r: r ** 4, g, "even")
    assert deltap_identity_residual(v, 1, 3, edge=6) < 1e-8


def test_deltap_random_polynomial_corpus():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        n = int(rng.choice([3, 5, 7]))
        porder = int(rng.choice([1, 2]))
        coeffs = rng.normal(size=4)
        g = make_grid(16, "uniform", 1.0)
        vals = sum(c * g.nodes ** (2 * i) for i, c in enumerate(coeffs))
        v = RadialField(g, vals, "even")
        worst = max(worst, deltap_identity_residual(v, porder, n, edge=4))
    assert worst < 1e-8


def test_deltap_bubble_smooth():
    p = ProblemParams(5, 2)
    g = make_grid(600, "clustered", 12.0)
    u = bubble_field(BubbleProfile(p, mu=1.0), g)
    assert deltap_identity_residual(u, 2, 5, smooth=True) < 1e-6


def test_boundary_bilinear_delta_mass():
    # l=1, U = rho^{2-n}, V = 1, n=3, r=1: the flux integral is (n-2) omega
    p = ProblemParams(3, 1)
    g = make_grid(300, "uniform", 1.0)
    U = sample(lambda r: 1.0 / r, g, "none")
    V = sample(lambda r: np.ones_like(r), g, "even")
    assert boundary_bilinear(U, V, 1, 1.0, p) == pytest.approx(
        4 * np.pi, rel=1e-8)


def test_boundary_bilinear_empty_and_const():
    p = ProblemParams(5, 2)
    g = make_grid(100, "uniform", 1.0)
    U = sample(lambda r: np.full_like(r, 2.0), g, "even")
    V = sample(lambda r: np.full_like(r, -1.0), g, "even")
    assert boundary_bilinear(U, V, 0, 0.5, p) == 0.0
    assert boundary_bilinear(U, V, 1, 0.5, p) == pytest.approx(0.0, abs=1e-10)


def test_boundary_bilinear_ipp_identity():
    # int_annulus [(Delta^l U) V - U (Delta^l V)] dx equals the boundary
    # bilinear on both spheres (quadrature oracle for formula-level check)
    rng = np.random.default_rng(5)
    p = ProblemParams(3, 1)
    g = make_grid(400, "uniform", 1.0)
    for _ in range(4):
        cu, cv = rng.normal(size=3), rng.normal(size=3)
        U = sample(lambda r: cu[0] + cu[1] * r ** 2 + cu[2] * r ** 4, g, "even")
        V = sample(lambda r: cv[0] + cv[1] * r ** 2 + cv[2] * r ** 4, g, "even")
        a, b = g.nodes[g.index_of(0.3)], g.nodes[g.index_of(0.9)]
        lapU = iterated_laplacian(U, p, 1)
        lapV = iterated_laplacian(V, p, 1)
        vol = integral_between(
            RadialField(g, lapU.values * V.values - U.values * lapV.values,
                        "even"), p, a, b)
        bdy = boundary_bilinear(U, V, 1, b, p, orient=1.0) \
            + boundary_bilinear(U, V, 1, a, p, orient=-1.0)
        assert vol == pytest.approx(bdy, abs=1e-8 * max(1, abs(vol)))


def test_pohozaev_boundary_gamma_cancellation_k1():
    # for Gamma = r^{2-n} the kinetic term and S(u) cancel pointwise (k=1)
    p = ProblemParams(3, 1)
    g = make_grid(300, "uniform", 1.0)
    gam = sample(lambda r: 1.0 / r, g, "none")
    for r0 in (0.35, 0.5, 0.75):
        rr = g.nodes[g.index_of(r0, tol=2e-2)]
        assert abs(pohozaev_boundary(gam, 0.0, rr, p)) < 1e-8


def test_pohozaev_boundary_kinetic_term_k2():
    # k=2, u=(1-r^2)^2, c=0, r=1, n=5: kinetic term = omega * (Delta u|_1)^2/2
    # with Delta u = 20 - 28 r^2 at r=1 equal to -8 (positive convention)
    p = ProblemParams(5, 2)
    g = make_grid(300, "uniform", 1.0)
    u = sample(lambda r: (1 - r ** 2) ** 2, g, "even")
    rep = pohozaev_residual(u, 0.0, 1.0, None, p)
    assert rep.terms["outer_kinetic"] == pytest.approx(
        sphere_area(5) * 0.5 * (-8.0) ** 2, rel=1e-8)


def test_pohozaev_residual_ball():
    p = ProblemParams(3, 1)
    g = make_grid(240, "uniform", 1.0)
    u = sample(lambda r: 1 - r ** 2, g, "even")
    rep = pohozaev_residual(u, 0.0, 1.0, None, p)
    assert rep.residual < 1e-6
    assert rep.residual == abs(rep.lhs - rep.rhs)
    assert sum(rep.terms.values()) == pytest.approx(rep.rhs, rel=1e-12)


@pytest.mark.parametrize("n,k", [(3, 1), (5, 2)])
def test_pohozaev_residual_annulus_gamma(n, k):
    # Delta^k Gamma = 0, so the boundary invariant is radius-independent
    p = ProblemParams(n, k)
    g = make_grid(300, "uniform", 1.0)
    gam = sample(lambda r: r ** float(2 * k - n), g, "none")
    a, b = g.nodes[g.index_of(0.3)], g.nodes[g.index_of(0.9)]
    rep = pohozaev_residual(gam, 0.0, b, a, p)
    assert rep.residual < 1e-6


def test_pohozaev_residual_bubble():
    p = ProblemParams(3, 1)
    g = make_grid(400, "uniform", 1.0)
    u = bubble_field(BubbleProfile(p, mu=1.0), g)
    a, b = g.nodes[g.index_of(0.2)], g.nodes[g.index_of(0.8)]
    rep = pohozaev_residual(u, 1.0, b, a, p)
    assert abs(rep.lhs - rep.rhs) < 1e-5


def test_pohozaev_singular_needs_cutoff():
    p = ProblemParams(3, 1)
    g = make_grid(200, "uniform", 1.0)
    gam = sample(lambda r: 1.0 / r, g, "none")
    with pytest.raises(ValueError, match="inner cutoff"):
        pohozaev_residual(gam, 0.0, 1.0, None, p)


def test_annulus_additivity():
    p = ProblemParams(3, 1)
    g = make_grid(360, "uniform", 1.0)
    u = sample(lambda r: np.cos(1.3 * r) * (1 + r ** 2), g, "even")
    a = g.nodes[g.index_of(0.25)]
    b = g.nodes[g.index_of(0.55)]
    c = g.nodes[g.index_of(0.85)]
    whole = pohozaev_residual(u, 1.0, c, a, p)
    left = pohozaev_residual(u, 1.0, b, a, p)
    right = pohozaev_residual(u, 1.0, c, b, p)
    # inner/outer contributions at b cancel pairwise
    assert whole.lhs == pytest.approx(left.lhs + right.lhs, rel=1e-12)
    assert whole.rhs == pytest.approx(left.rhs + right.rhs, abs=1e-8)


def test_s_term_count_convention():
    for k, n in [(1, 3), (2, 5), (3, 7)]:
        p = ProblemParams(n, k)
        g = make_grid(200, "uniform", 1.0)
        u = sample(lambda r: (1 - r ** 2) ** k, g, "even")
        be = _FieldBackend(p)
        terms = _s_terms(be, u, k, g.nodes[g.index_of(0.5)], 1.0)
        assert len(terms) == k // 2 + (k % 2)


@pytest.mark.parametrize("k,n,tol", [(1, 3, 1e-8), (2, 5, 1e-8), (3, 7, 1e-7)])
def test_profile_constant_vanishes(k, n, tol):
    p = ProblemParams(n, k)
    # scaling law first: D_r / r^{2k-n} is radius-independent
    scaled = [pohozaev_profile_constant(p, r) / r ** (2 * k - n)
              for r in (0.25, 0.5, 0.75)]
    assert max(scaled) - min(scaled) < 1e-8
    for r in (0.25, 0.5, 0.75):
        assert abs(pohozaev_profile_constant(p, r)) < tol


def test_solution_identity_trivial():
    p = ProblemParams(3, 1)
    g = make_grid(200, "uniform", 1.0)
    z = sample(lambda r: np.zeros_like(r), g, "even")
    rep = solution_identity_check(z, 3.0, g.nodes[g.index_of(0.5)], p)
    assert rep.lhs == 0.0 and rep.rhs == 0.0


def test_deltap_rejects_bad_order():
    g = make_grid(40, "uniform", 1.0)
    v = sample(lambda r: r ** 2, g, "even")
    with pytest.raises(ValueError):
        deltap_identity_residual(v, 0, 3)
