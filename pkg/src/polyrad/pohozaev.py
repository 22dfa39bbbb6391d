"""Pohozaev-Pucci-Serrin machinery for radial fields.

Testing Delta^k u - c|u|^{2*-2}u against the dilation generator
T(u) = (n-2k)/2 u + r u' turns the volume integral into pure boundary terms:

    int_Omega (Delta^k u - c|u|^{2*-2}u) T(u) dx
        = oint ((x,nu)(|Delta^{k/2}u|^2/2 - c|u|^{2*}/2*) + S(u)) dsigma,

with S(u) a sum of floor(k/2) commutator pairs plus one extra term for odd k.
All surfaces here are spheres, so every surface integral is
omega_{n-1} r^{n-1} times a radial integrand; on the inner sphere of an
annulus the outward normal points toward the origin, so (x,nu) = -r and
d/dnu = -d/dr there.

The same boundary expressions are evaluated through two backends: sampled
fields via the finite-difference stack, and exact rational power sums for the
Delta^k-harmonic profile r^{2k-n}, whose cancellations sit far below the
double-precision noise floor of 5th-derivative stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .fdcalc import differentiate, dilation_generator, laplacian
from .field import RadialField
from .params import ProblemParams
from .powers import PowerSum, fundamental_profile
from .quadrature import ball_integral, integral_between


# ---------------------------------------------------------------------------
# backends: the boundary expressions only need lap, d/dr, T and evaluation
# ---------------------------------------------------------------------------

class _FieldBackend:
    def __init__(self, p: ProblemParams, spacing_floor: float = 0.0):
        self.p = p
        self.floor = spacing_floor

    def lap(self, g: RadialField) -> RadialField:
        return laplacian(g, self.p.n, self.floor)

    def dr(self, g: RadialField) -> RadialField:
        return differentiate(g, 1, self.floor)

    def T(self, g: RadialField) -> RadialField:
        return dilation_generator(g, self.p)

    def at(self, g: RadialField, r: float) -> float:
        return float(g.values[g.grid.index_of(r)])


class _PowerBackend:
    def __init__(self, p: ProblemParams):
        self.p = p

    def lap(self, g: PowerSum) -> PowerSum:
        return g.laplacian(self.p.n)

    def dr(self, g: PowerSum) -> PowerSum:
        return g.deriv()

    def T(self, g: PowerSum) -> PowerSum:
        from fractions import Fraction
        return g.scale(Fraction(self.p.n - 2 * self.p.k, 2)) + g.xdr()

    def at(self, g: PowerSum, r: float) -> float:
        return g(r)


def _lap_pow(be, g, j: int):
    for _ in range(j):
        g = be.lap(g)
    return g


def _s_terms(be, u, k: int, r: float, orient: float) -> list[float]:
    """The floor(k/2) commutator pairs of S(u) plus the odd-k term, each as a
    pointwise value at radius r (surface measure not included)."""
    Tu = be.T(u)
    out = []
    for i in range(k // 2):
        a = _lap_pow(be, u, k - i - 1)
        b = _lap_pow(be, Tu, i)
        val = -orient * be.at(be.dr(a), r) * be.at(b, r) \
            + be.at(a, r) * orient * be.at(be.dr(b), r)
        out.append(val)
    if k % 2 == 1:
        a = _lap_pow(be, u, (k - 1) // 2)
        b = _lap_pow(be, Tu, (k - 1) // 2)
        out.append(-orient * be.at(be.dr(a), r) * be.at(b, r))
    return out


def _half_square(be, u, k: int, r: float) -> float:
    """|Delta^{k/2} u|^2 at radius r (gradient form for odd k)."""
    if k % 2 == 0:
        v = be.at(_lap_pow(be, u, k // 2), r)
    else:
        v = be.at(be.dr(_lap_pow(be, u, (k - 1) // 2)), r)
    return v * v


def _boundary_terms(be, u, c: float, r: float, p: ProblemParams,
                    orient: float, u_at=None) -> dict:
    """All boundary contributions over the sphere of radius r, integrated."""
    area = p.omega * r ** (p.n - 1)
    xnu = orient * r
    terms = {}
    terms["kinetic"] = area * xnu * 0.5 * _half_square(be, u, p.k, r)
    if c != 0.0:
        uval = be.at(u, r) if u_at is None else u_at
        terms["potential"] = -area * xnu * c * abs(uval) ** p.two_star \
            / p.two_star
    else:
        terms["potential"] = 0.0
    for idx, val in enumerate(_s_terms(be, u, p.k, r, orient)):
        terms[f"S{idx}"] = area * val
    return terms


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PohozaevReport:
    """Volume side, boundary side, and the per-term boundary breakdown."""

    lhs: float
    rhs: float
    terms: dict
    radii: dict
    extras: dict = dfield(default_factory=dict)

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def relative_residual(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs), 1e-300)
        return self.residual / scale


def deltap_identity_residual(v: RadialField, p_order: int, n: int,
                             edge: int = 10, smooth: bool = False,
                             scale: float = 1.0) -> float:
    """Scaled max-node defect of the dilation commutator identities

        Delta^p (r v') = 2p Delta^p v + r (Delta^p v)'
        (Delta^p (r v'))' = (2p+1)(Delta^p v)' + r (Delta^p v)''

    over interior nodes (the last ``edge`` nodes are excluded, where stencils
    turn one-sided).  Both identities are exact; the residual measures the
    differentiation stack.  smooth=True evaluates all composites through the
    cancellation-free frames (the gradient form is then checked in its
    r-weighted version, both sides multiplied by r), appropriate for fields
    varying on one characteristic length ``scale``.
    """
    if p_order < 1:
        raise ValueError("p_order must be >= 1")
    if smooth:
        return _deltap_residual_smooth(v, p_order, n, edge, scale)
    xdr = RadialField(v.grid, v.grid.nodes * differentiate(v, 1).values,
                      v.parity)
    lap_v = v
    for _ in range(p_order):
        lap_v = laplacian(lap_v, n)
    lhs = xdr
    for _ in range(p_order):
        lhs = laplacian(lhs, n)
    rhs_vals = 2 * p_order * lap_v.values \
        + v.grid.nodes * differentiate(lap_v, 1).values
    sl = slice(0, -edge)
    scale_a = max(1.0, float(np.max(np.abs(rhs_vals[sl]))))
    res = float(np.max(np.abs(lhs.values[sl] - rhs_vals[sl]))) / scale_a
    # gradient form
    lhs_g = differentiate(lhs, 1).values
    d1 = differentiate(lap_v, 1)
    rhs_g = (2 * p_order + 1) * d1.values \
        + v.grid.nodes * differentiate(lap_v, 2).values
    scale_g = max(1.0, float(np.max(np.abs(rhs_g[sl]))))
    res_g = float(np.max(np.abs(lhs_g[sl] - rhs_g[sl]))) / scale_g
    return max(res, res_g)


def _deltap_residual_smooth(v: RadialField, p_order: int, n: int,
                            edge: int, scale: float) -> float:
    from fractions import Fraction
    from .fdcalc import (_compose_t, _poly_mul, _smooth_apply, _xdr_t_terms,
                         _xdr_sigma_poly, sigma_polynomial,
                         tspace_coefficients)

    def t_sum(*parts):
        out: dict = {}
        for coef, terms in parts:
            for a, b, cm in terms:
                out[(a, b)] = out.get((a, b), Fraction(0)) + coef * cm
        return tuple((a, b, cm) for (a, b), cm in sorted(out.items())
                     if cm != 0)

    def p_sum(*parts):
        ln = max(len(poly) for _, poly in parts)
        out = [Fraction(0)] * ln
        for coef, poly in parts:
            for b, cb in enumerate(poly):
                out[b] += coef * cb
        return tuple(out)

    p = p_order
    xdr_t = ((1, 1, Fraction(2)),)
    x_poly = (Fraction(0), Fraction(1))
    lap_t = tspace_coefficients(n, p)
    lap_s = sigma_polynomial(n, p)
    lap_xdr_t = _compose_t(lap_t, xdr_t)              # Delta^p (r d/dr .)
    lap_xdr_s = _poly_mul(lap_s, x_poly)
    xdr_lap_t = _xdr_t_terms(lap_t)                   # (r d/dr) Delta^p
    xdr_lap_s = _xdr_sigma_poly(lap_s, p)
    ops = {
        "lhsA": (lap_xdr_t, lap_xdr_s),
        "rhsA_x": (xdr_lap_t, xdr_lap_s),
        "lhsB": (_xdr_t_terms(lap_xdr_t), _xdr_sigma_poly(lap_xdr_s, p)),
        "rhsB": (t_sum((Fraction(1), _xdr_t_terms(xdr_lap_t)),
                       (Fraction(2 * p), xdr_lap_t)),
                 p_sum((Fraction(1), _xdr_sigma_poly(xdr_lap_s, p)),
                       (Fraction(2 * p), xdr_lap_s))),
    }
    vals = {key: _smooth_apply(v, p, t_terms, s_poly, scale)
            for key, (t_terms, s_poly) in ops.items()}
    lap_v = _smooth_apply(v, p, lap_t, lap_s, scale)
    sl = slice(0, -edge)
    rhs_a = 2 * p * lap_v + vals["rhsA_x"]
    scale_a = max(1.0, float(np.max(np.abs(rhs_a[sl]))))
    res_a = float(np.max(np.abs(vals["lhsA"][sl] - rhs_a[sl]))) / scale_a
    scale_b = max(1.0, float(np.max(np.abs(vals["rhsB"][sl]))))
    res_b = float(np.max(np.abs(vals["lhsB"][sl] - vals["rhsB"][sl]))) / scale_b
    return max(res_a, res_b)


def boundary_bilinear(U: RadialField, V: RadialField, l: int, r: float,
                      p: ProblemParams, orient: float = 1.0) -> float:
    """Surface integral of B^(l)(U,V) = sum_{i<l} (-d_nu Delta^{l-i-1}U
    Delta^i V + Delta^{l-i-1}U d_nu Delta^i V) over the sphere of radius r."""
    if l == 0:
        return 0.0
    be = _FieldBackend(p)
    total = 0.0
    for i in range(l):
        a = _lap_pow(be, U, l - i - 1)
        b = _lap_pow(be, V, i)
        total += -orient * be.at(be.dr(a), r) * be.at(b, r) \
            + be.at(a, r) * orient * be.at(be.dr(b), r)
    return p.omega * r ** (p.n - 1) * total


def pohozaev_boundary(u: RadialField, c: float, r: float, p: ProblemParams,
                      orient: float = 1.0) -> float:
    """The full boundary integrand over the sphere of radius r, integrated;
    orient=+1 for an outer sphere, -1 for the inner sphere of an annulus."""
    be = _FieldBackend(p)
    return float(sum(_boundary_terms(be, u, c, r, p, orient).values()))


def pohozaev_residual(u: RadialField, c: float, outer: float,
                      inner: float | None, p: ProblemParams) -> PohozaevReport:
    """Volume integral vs boundary integral of the dilation identity on the
    ball of radius ``outer`` (inner=None) or the annulus [inner, outer].

    A field singular at the origin must come with an inner cutoff.
    """
    be = _FieldBackend(p)
    lap_k = u
    for _ in range(p.k):
        lap_k = laplacian(lap_k, p.n)
    Tu = dilation_generator(u, p)
    integ_vals = lap_k.values * Tu.values
    if c != 0.0:
        integ_vals = integ_vals - c * np.abs(u.values) ** (p.two_star - 2.0) \
            * u.values * Tu.values
    integrand = RadialField(u.grid, integ_vals,
                            "even" if u.parity == "even" else "none")
    if inner is None:
        if u.parity != "even":
            raise ValueError(
                "full-ball identity needs a field regular at the origin "
                "(parity 'even'); supply an inner cutoff otherwise")
        lhs = ball_integral(integrand, p, outer)
    else:
        lhs = integral_between(integrand, p, inner, outer)
    terms = {f"outer_{k}": v for k, v in
             _boundary_terms(be, u, c, outer, p, +1.0).items()}
    if inner is not None:
        terms.update({f"inner_{k}": v for k, v in
                      _boundary_terms(be, u, c, inner, p, -1.0).items()})
    rhs = float(sum(terms.values()))
    return PohozaevReport(lhs=float(lhs), rhs=rhs, terms=terms,
                          radii={"outer": outer, "inner": inner})


def pohozaev_profile_constant(p: ProblemParams, r: float) -> float:
    """Boundary invariant of the fundamental profile Gamma = r^{2k-n}:

        D_r = oint_{|x|=r} ((x,nu)|Delta^{k/2}Gamma|^2 / 2 + S(Gamma)) dsigma,

    evaluated in exact rational power arithmetic.  D_r scales like r^{2k-n}
    and its r-independent coefficient vanishes identically, which is what the
    callers verify.
    """
    if not 0.0 < r < 1.0:
        raise ValueError("radius must lie in (0,1)")
    be = _PowerBackend(p)
    gamma = fundamental_profile(p.n, p.k)
    terms = _boundary_terms(be, gamma, 0.0, r, p, +1.0)
    return float(sum(terms.values()))


def solution_identity_check(u: RadialField, lam: float, delta: float,
                            p: ProblemParams,
                            nu: float | None = None) -> PohozaevReport:
    """Dilation identity specialized to a solution of
    Delta^k u - lam u = |u|^{2*-2} u on the ball of radius delta:

        lam * int_{B_delta} u T(u) dx  =  boundary terms at delta (c = 1).

    Also reports the volume integral int u T(u) and, when the blow-up scale
    nu is supplied, its ratio to nu^{n-2k}.
    """
    be = _FieldBackend(p)
    Tu = dilation_generator(u, p)
    utu = RadialField(u.grid, u.values * Tu.values,
                      "even" if u.parity == "even" else "none")
    vol = ball_integral(utu, p, delta)
    lhs = lam * vol
    terms = _boundary_terms(be, u, 1.0, delta, p, +1.0)
    rhs = float(sum(terms.values()))
    extras = {"uTu_integral": float(vol)}
    if nu is not None:
        extras["nu_power_ratio"] = float(vol / nu ** (p.n - 2 * p.k))
    return PohozaevReport(lhs=float(lhs), rhs=rhs, terms=terms,
                          radii={"outer": delta, "inner": None}, extras=extras)
