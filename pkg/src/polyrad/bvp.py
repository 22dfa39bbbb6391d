"""Radial Newton/continuation solver for Delta^k u - lambda u = |u|^{2*-2} u
on the unit ball with Dirichlet conditions, plus blow-up diagnostics.

Continuation warm-starts each solve from the previous solution, rescaled
through the dilation family with a geometrically extrapolated concentration
scale nu = sup|u|^{-2/(n-2k)}.  When nu shrinks below what the grid resolves,
the branch regenerates a core-graded grid (>= 30 nodes inside 5 nu) and
re-converges at the same lambda before moving on.

Diagnostics per blow-up entry: rescaled-profile distance to the bubble,
distance of u / nu^{(n-2k)/2} to the kernel-mass multiple of the Green's
function of Delta^k - lambda (the lambda -> 0 statement uses the
unperturbed kernel; at a positive lambda barrier the perturbed kernel is the
honest finite-lambda analogue, and the unperturbed variant is reported
alongside), the weak-estimate supremum r^{(n-2k)/2}|u|, and the worst
constant of the gamma-envelope bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dfield
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline

from .bubbles import BubbleProfile, bubble_eval, bubble_integrals
from .field import RadialField, sample
from .greens import boggio_center, discrete_green
from .grid import RadialGrid, core_graded_nodes, make_grid
from .operators import DiscreteOperator, assemble_operator
from .params import ProblemParams
from .potentials import HardyPotential
from .quadrature import hk_seminorm, lp_norm


# ---------------------------------------------------------------------------
# principal eigenvalue by inverse iteration on the (A, interior-mask) pencil
# ---------------------------------------------------------------------------

def principal_eigenpair(op: DiscreteOperator, tol: float = 1e-11,
                        max_sweeps: int = 300) -> tuple[float, RadialField]:
    """Smallest eigenvalue and ground state of the Dirichlet operator by
    inverse iteration on the pencil (A, interior-row mask): boundary rows
    stay exact constraints throughout the sweeps."""
    if op.p.lam != 0.0 or op.V.mu != 0.0:
        raise ValueError("assemble the operator with lambda = 0 and V = 0")
    grid = op.grid
    r = grid.nodes
    mask = op.interior.astype(float)
    v = (1.0 - (r / grid.r_max) ** 2) ** op.p.k * mask
    lam_old = np.inf
    from .greens import dx_weights
    W = dx_weights(grid, op.p)
    for _ in range(max_sweeps):
        bv = mask * v
        w = op.solve(bv)
        num = float(v @ (W * bv))
        den = float(w @ (W * bv))
        lam = num / den
        w_norm = w / np.max(np.abs(w))
        if abs(lam - lam_old) <= tol * abs(lam):
            if w_norm[0] < 0:
                w_norm = -w_norm
            return lam, RadialField(grid, w_norm, "even")
        lam_old = lam
        v = w_norm
    raise RuntimeError(f"inverse iteration did not settle in {max_sweeps} sweeps")


def principal_eigenvalue(op: DiscreteOperator, tol: float = 1e-11,
                         max_sweeps: int = 300) -> float:
    """Smallest eigenvalue of the Dirichlet operator (see principal_eigenpair)."""
    return principal_eigenpair(op, tol, max_sweeps)[0]


# ---------------------------------------------------------------------------
# damped Newton for the nonlinear problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonResult:
    field: RadialField | None
    status: str          # converged | collapsed_to_trivial | diverged | singular
    iterations: int
    residual: float      # scaled sup-norm residual

    @property
    def ok(self) -> bool:
        return self.status == "converged"


def _nonlinear_terms(op: DiscreteOperator, u: np.ndarray):
    ts = op.p.two_star
    mask = op.interior
    g = np.abs(u) ** (ts - 2.0) * u
    gp = (ts - 1.0) * np.abs(u) ** (ts - 2.0)
    g[~mask] = 0.0
    gp[~mask] = 0.0
    return g, gp


def _scaled_residual(op: DiscreteOperator, u: np.ndarray) -> float:
    """Sup-norm PDE residual scaled by the nonlinear magnitude, with each
    row's evaluation-roundoff floor subtracted (a clustered high-order row
    cannot testify below its own noise)."""
    g, _ = _nonlinear_terms(op, u)
    F = op.matrix @ u - g
    floor_rows = 64.0 * np.finfo(float).eps * (
        np.abs(op.matrix) @ np.abs(u) + np.abs(g))
    scale = max(1.0, float(np.max(np.abs(g))))
    return float(np.max(np.maximum(np.abs(F) - floor_rows, 0.0)) / scale)


def newton_solve(p: ProblemParams, V: HardyPotential | None,
                 guess: RadialField, tol: float = 1e-9,
                 max_iter: int = 60,
                 op: DiscreteOperator | None = None) -> NewtonResult:
    """Damped Newton iteration on F(u) = (Delta^k - lambda - V) u - |u|^{2*-2}u.

    Residuals are measured in the sup norm scaled by max(1, ||u||_inf^{2*-1}),
    so deep blow-up cores are judged against their own nonlinear magnitude.
    A run that lands on the zero solution from a nontrivial guess is flagged
    ``collapsed_to_trivial`` rather than returned as a success.
    """
    if p.lam < 0:
        raise ValueError("lambda must be nonnegative")
    if op is None:
        op = assemble_operator(p, V, guess.grid)
    u = guess.values.copy()
    guess_sup = float(np.max(np.abs(u)))
    abs_matrix = np.abs(op.matrix)
    eps = np.finfo(float).eps

    def finish(u, it, res):
        sup = float(np.max(np.abs(u)))
        fld = RadialField(guess.grid, u, "even")
        if guess_sup >= 10.0 * tol and sup < 1e-8 * max(1.0, guess_sup):
            return NewtonResult(fld, "collapsed_to_trivial", it, res)
        return NewtonResult(fld, "converged", it, res)

    res = _scaled_residual(op, u)
    for it in range(1, max_iter + 1):
        g, gp = _nonlinear_terms(op, u)
        F = op.matrix @ u - g
        absF = np.abs(F)
        raw = float(np.max(absF))
        # row-wise roundoff floor of the residual evaluation: inner rows of a
        # clustered high-order operator cannot be verified below their own
        # evaluation noise, outer rows must genuinely meet the tolerance
        floor_rows = 64.0 * eps * (abs_matrix @ np.abs(u) + np.abs(g))
        scale = max(1.0, float(np.max(np.abs(g))))
        res = float(np.max(np.maximum(absF - floor_rows, 0.0))) / scale
        done = np.all(absF <= np.maximum(floor_rows, tol * scale))
        if done:
            return finish(u, it, res)
        J = op.matrix - np.diag(gp)
        # row equilibration: interior rows scale like h^{-2k}, BC rows like 1
        d = 1.0 / np.maximum(np.max(np.abs(J), axis=1), 1e-300)
        try:
            step = sla.solve(J * d[:, None], -F * d)
        except sla.LinAlgError:
            return NewtonResult(None, "singular", it, res)
        if not np.all(np.isfinite(step)):
            return NewtonResult(None, "singular", it, res)
        merit = float(np.max(absF / np.maximum(floor_rows, tol * scale)))
        t = 1.0
        while t > 1.0 / 256.0:
            u_try = u + t * step
            g_try, _ = _nonlinear_terms(op, u_try)
            f_try = np.abs(op.matrix @ u_try - g_try)
            m_try = float(np.max(f_try / np.maximum(floor_rows, tol * scale)))
            if m_try <= (1.0 - 1e-4 * t) * merit or m_try <= 1.0:
                break
            t *= 0.5
        else:
            return NewtonResult(None, "diverged", it, res)
        u = u + t * step
    g, _ = _nonlinear_terms(op, u)
    F = op.matrix @ u - g
    scale = max(1.0, float(np.max(np.abs(g))))
    res = float(np.max(np.abs(F))) / scale
    if res <= 10.0 * tol:
        return finish(u, max_iter, res)
    return NewtonResult(None, "diverged", max_iter, res)


def bubble_guess(p: ProblemParams, grid: RadialGrid, amplitude: float,
                 mu: float | None = None) -> RadialField:
    """Bubble-shaped initial iterate damped to satisfy the boundary rows."""
    if mu is None:
        mu = amplitude ** (-2.0 / (p.n - 2 * p.k))
    b = BubbleProfile(p, mu=mu, eps=1)
    cap = lambda r: (1.0 - (r / grid.r_max) ** 2) ** p.k
    scale = amplitude / abs(bubble_eval(b, 0.0))
    return sample(lambda r: scale * bubble_eval(b, r) * cap(r), grid, "even")


def robust_first_solve(p: ProblemParams, grid: RadialGrid, amplitude: float,
                       tol: float = 1e-9,
                       V: HardyPotential | None = None) -> NewtonResult:
    """First nontrivial solve for a branch seed: tries bubble-shaped and
    ground-state-shaped iterates over a small amplitude ladder."""
    _, phi = principal_eigenpair(
        assemble_operator(p.with_lambda(0.0), None, grid))
    guesses = []
    for fac in (1.0, 2.0, 0.5, 4.0, 0.25):
        amp = amplitude * fac
        guesses.append(bubble_guess(p, grid, amp))
        guesses.append(RadialField(grid, amp * phi.values, "even"))
    last = None
    for guess in guesses:
        res = newton_solve(p, V, guess, tol=tol)
        if res.ok:
            return res
        last = res
    return last


# ---------------------------------------------------------------------------
# branches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchEntry:
    lam: float
    field: RadialField
    sup_norm: float
    l2star_norm: float
    hk: float
    nu: float
    residual: float


@dataclass
class SolutionBranch:
    params: ProblemParams            # lambda field is a placeholder here
    entries: list[BranchEntry] = dfield(default_factory=list)
    direction: str = "decreasing-lambda"
    failure_lambda: float | None = None
    failure_reason: str | None = None
    tol: float = 1e-9

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([e.sup_norm for e in self.entries])

    def growth_factor(self) -> float:
        s = self.sup_norms
        return float(s.max() / s[0]) if len(s) else np.nan

    def write(self, outdir: str | Path):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "n": self.params.n, "k": self.params.k,
            "direction": self.direction, "tol": self.tol,
            "failure_lambda": self.failure_lambda,
            "failure_reason": self.failure_reason,
            "entries": [
                {"lambda": e.lam, "sup_norm": e.sup_norm,
                 "l2star_norm": e.l2star_norm, "hk_seminorm": e.hk,
                 "nu": e.nu, "residual": e.residual,
                 "csv": f"entry_{i:03d}.csv"}
                for i, e in enumerate(self.entries)],
        }
        (outdir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True))
        for i, e in enumerate(self.entries):
            e.field.to_csv(outdir / f"entry_{i:03d}.csv")


def _make_entry(p: ProblemParams, lam: float, fld: RadialField,
                residual: float) -> BranchEntry:
    pl = p.with_lambda(lam)
    sup = float(np.max(np.abs(fld.values)))
    nu = sup ** (-2.0 / (p.n - 2 * p.k))
    return BranchEntry(lam=lam, field=fld, sup_norm=sup,
                       l2star_norm=lp_norm(fld, pl, pl.two_star),
                       hk=hk_seminorm(fld, pl), nu=nu, residual=residual)


def even_interpolant(fld: RadialField) -> CubicSpline:
    r = fld.grid.nodes
    rr = np.concatenate([-r[::-1], r])
    vv = np.concatenate([fld.values[::-1], fld.values])
    return CubicSpline(rr, vv)


def _predict(entries: list[BranchEntry], grid: RadialGrid,
             p: ProblemParams, lam_next: float) -> RadialField:
    """Dilation-corrected warm start: extrapolate ln(nu) linearly in lambda
    along the branch tail and rescale the last solution accordingly."""
    last = entries[-1]
    spl = even_interpolant(last.field)
    s = 1.0
    if len(entries) >= 2:
        prev = entries[-2]
        dlam = last.lam - prev.lam
        if dlam != 0.0 and prev.nu > 0:
            slope = np.log(last.nu / prev.nu) / dlam
            s = float(np.exp(slope * (lam_next - last.lam)))
    s = float(np.clip(s, 0.2, 5.0))
    e = 0.5 * (p.n - 2 * p.k)
    r = np.clip(grid.nodes / s, 0.0, last.field.grid.r_max)
    vals = s ** (-e) * spl(r)
    return RadialField(grid, vals, "even")


def _regrid_if_needed(entry: BranchEntry, grid: RadialGrid, n_points: int,
                      min_core_nodes: int = 30) -> RadialGrid | None:
    nu = entry.nu
    if nu >= grid.r_max / 20.0:
        return None
    inside = int(np.count_nonzero(grid.nodes <= 5.0 * nu))
    if inside >= min_core_nodes:
        return None
    return core_graded_nodes(n_points, grid.r_max, nu, core_nodes=48)


def continuation(p_template: ProblemParams, lambda_path,
                 seed_guess: RadialField, V: HardyPotential | None = None,
                 tol: float = 1e-9, n_points: int | None = None,
                 regrid: bool = True) -> SolutionBranch:
    """Solve along a monotone lambda path, warm-starting each step.

    Stops at the first failure and records the failing lambda.  Entries store
    their own grids; after a regrid the solution is re-converged at the same
    lambda before the branch moves on.
    """
    lambda_path = list(map(float, lambda_path))
    if len(lambda_path) == 0:
        raise ValueError("empty lambda path")
    diffs = np.diff(lambda_path)
    if np.any(diffs >= 0) and np.any(diffs <= 0):
        raise ValueError("lambda path must be monotone")
    direction = "decreasing-lambda" if (len(diffs) == 0 or diffs[0] < 0) \
        else "increasing-lambda"
    p0 = p_template
    grid = seed_guess.grid
    n_points = n_points or len(grid)
    branch = SolutionBranch(params=p0, direction=direction, tol=tol)
    for j, lam in enumerate(lambda_path):
        p = p0.with_lambda(lam)
        guess = seed_guess if j == 0 else _predict(branch.entries, grid, p0, lam)
        result = newton_solve(p, V, guess, tol=tol)
        if not result.ok:
            branch.failure_lambda = lam
            branch.failure_reason = result.status
            break
        entry = _make_entry(p0, lam, result.field, result.residual)
        if regrid:
            new_grid = _regrid_if_needed(entry, grid, n_points)
            if new_grid is not None:
                grid = new_grid
                guess2 = _predict(branch.entries + [entry], grid, p0, lam)
                result2 = newton_solve(p, V, guess2, tol=tol)
                if result2.ok:
                    entry = _make_entry(p0, lam, result2.field,
                                        result2.residual)
        branch.entries.append(entry)
    return branch


def track_to_barrier(p_template: ProblemParams, lambda_start: float,
                     seed_guess: RadialField, lambda_floor: float = 0.0,
                     step_frac: float = 0.15, min_step_frac: float = 2e-4,
                     sup_cap_factor: float = 400.0, tol: float = 1e-9,
                     n_points: int | None = None) -> SolutionBranch:
    """Adaptive decreasing-lambda continuation toward a blow-up barrier.

    The relative step halves on every Newton failure; the walk stops when the
    step underflows min_step_frac, the sup norm exceeds sup_cap_factor times
    the first entry's, or lambda reaches lambda_floor.
    """
    p0 = p_template
    grid = seed_guess.grid
    n_points = n_points or len(grid)
    branch = SolutionBranch(params=p0, direction="decreasing-lambda", tol=tol)
    lam = float(lambda_start)
    p = p0.with_lambda(lam)
    result = newton_solve(p, None, seed_guess, tol=tol)
    if not result.ok:
        branch.failure_lambda = lam
        branch.failure_reason = f"seed solve: {result.status}"
        return branch
    branch.entries.append(_make_entry(p0, lam, result.field, result.residual))
    frac = step_frac
    while True:
        sup0 = branch.entries[0].sup_norm
        if branch.entries[-1].sup_norm >= sup_cap_factor * sup0:
            branch.failure_reason = "sup_cap"
            break
        if frac < min_step_frac:
            branch.failure_reason = "step_underflow"
            break
        lam_try = lam * (1.0 - frac)
        if lam_try < lambda_floor:
            lam_try = lambda_floor
        p = p0.with_lambda(lam_try)
        guess = _predict(branch.entries, grid, p0, lam_try)
        result = newton_solve(p, None, guess, tol=tol)
        if result.ok:
            entry = _make_entry(p0, lam_try, result.field, result.residual)
            new_grid = _regrid_if_needed(entry, grid, n_points)
            if new_grid is not None:
                grid = new_grid
                guess2 = _predict(branch.entries + [entry], grid, p0, lam_try)
                result2 = newton_solve(p, None, guess2, tol=tol)
                if result2.ok:
                    entry = _make_entry(p0, lam_try, result2.field,
                                        result2.residual)
            branch.entries.append(entry)
            lam = lam_try
            frac = min(frac * 1.4, step_frac)
            if lam_try == lambda_floor:
                branch.failure_reason = "reached_floor"
                break
        else:
            branch.failure_lambda = lam_try
            branch.failure_reason = result.status
            frac *= 0.5
    return branch


def verify_entry_residual(entry: BranchEntry, p: ProblemParams,
                          V: HardyPotential | None = None) -> float:
    """Recompute the scaled PDE residual from scratch (fresh operator)."""
    pl = p.with_lambda(entry.lam)
    op = assemble_operator(pl, V, entry.field.grid)
    return _scaled_residual(op, entry.field.values)


# ---------------------------------------------------------------------------
# blow-up diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlowupReport:
    nu: float
    eps0: int
    profile_error: float
    greenlimit_error: float
    greenlimit_error_lambda0: float
    weak_estimate_sup: float
    gamma_envelope: float
    gamma: float
    R: float
    delta: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("nu", "eps0", "profile_error", "greenlimit_error",
                 "greenlimit_error_lambda0", "weak_estimate_sup",
                 "gamma_envelope", "gamma", "R", "delta")}


def blowup_diagnostics(branch: SolutionBranch, index: int, R: float,
                       delta: float, gamma: float,
                       mass_u2sm1: float | None = None,
                       blowup_factor: float = 10.0) -> BlowupReport:
    """Measure how closely one deep branch entry follows the blow-up picture.

    Refuses entries whose sup norm has not grown by ``blowup_factor`` over
    the first entry (not in the blow-up regime).  Requires nu * R < 1.
    """
    p = branch.params
    entry = branch.entries[index]
    sup0 = branch.entries[0].sup_norm
    if entry.sup_norm < blowup_factor * sup0:
        raise ValueError(
            f"entry {index} has sup growth {entry.sup_norm / sup0:.2f}x < "
            f"{blowup_factor}x: not in the blow-up regime")
    nu = entry.nu
    if nu * R >= 1.0:
        raise ValueError("rescaling window nu*R must sit inside the ball")
    e = 0.5 * (p.n - 2 * p.k)
    u = entry.field
    eps0 = int(np.sign(u.values[0]))
    spl = even_interpolant(u)
    xs = np.linspace(0.0, R, 400)
    rescaled = nu ** e * spl(nu * xs)
    bubble = eps0 * bubble_eval(BubbleProfile(p, mu=1.0, eps=1), xs)
    profile_error = float(np.max(np.abs(rescaled - bubble)))

    if mass_u2sm1 is None:
        mass_u2sm1 = bubble_integrals(p)["massU2sm1"]
    r = u.grid.nodes
    window = (r >= delta) & (r <= 1.0 - delta)
    pl = p.with_lambda(entry.lam)
    op = assemble_operator(pl, None, u.grid)
    table = discrete_green(op, 0.0)
    H_lam = eps0 * mass_u2sm1 * table.values[window]
    ratio = np.abs(u.values[window] / nu ** e - H_lam) / np.abs(H_lam)
    greenlimit = float(np.max(ratio))
    H0 = eps0 * mass_u2sm1 * boggio_center(p.n, p.k, r[window])
    ratio0 = np.abs(u.values[window] / nu ** e - H0) / np.abs(H0)
    greenlimit0 = float(np.max(ratio0))

    weak_sup = float(np.max(r ** e * np.abs(u.values)))
    outer = r >= nu
    envelope = float(np.max(
        np.abs(u.values[outer]) * r[outer] ** (p.n - 2 * p.k - gamma)
        / nu ** (e - gamma)))
    return BlowupReport(nu=nu, eps0=eps0, profile_error=profile_error,
                        greenlimit_error=greenlimit,
                        greenlimit_error_lambda0=greenlimit0,
                        weak_estimate_sup=weak_sup, gamma_envelope=envelope,
                        gamma=gamma, R=R, delta=delta)


def default_branch_grid(n_points: int = 360) -> RadialGrid:
    return make_grid(n_points, "clustered", 1.0)
