"""Command-line harness: experiments in, JSON + CSV + plot data + figures out.

Exit codes: 0 success, 1 precondition/domain failure, 2 numerical failure.
A diagnostic JSON is written even on failure.  All stochastic operations take
an explicit --seed; there is no hidden entropy.  Default output directory
comes from POLYRAD_OUTDIR, overridable with --outdir.  A flat key=value file
passed through --config supplies defaults for flags not given on the command
line.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import (ProblemParams, assemble_operator, boggio_center, bubble_field,
               bubble_integrals, bubble_residual, BubbleProfile,
               bubble_shape_constant, coercivity_margin, continuation,
               default_bubble_grid, discrete_green, green_bound_certificate,
               inverse_power_potential, make_grid, mollify_potential,
               pohozaev_profile_constant, pohozaev_residual,
               sample, track_to_barrier, hardy_best_constant)
from .bvp import default_branch_grid, robust_first_solve
from .reporting import default_outdir, write_curve, write_report
from . import plotting


class PreconditionFailure(click.ClickException):
    exit_code = 1


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _merge_config(ctx: click.Context, cfg: dict):
    """Fill parameters not given on the command line from the config file."""
    for key, val in cfg.items():
        if key in ctx.params and ctx.get_parameter_source(key) == \
                click.core.ParameterSource.DEFAULT:
            param = next(p for p in ctx.command.params if p.name == key)
            ctx.params[key] = param.type.convert(val, param, ctx)
    return ctx.params


def _params_or_fail(n: int, k: int, lam: float = 0.0) -> ProblemParams:
    try:
        return ProblemParams(n, k, lam)
    except (ValueError, TypeError) as exc:
        raise PreconditionFailure(f"requires n > 2k: {exc}")


def _run(outdir: Path, name: str, config: dict, body):
    """Run a command body; always leave a JSON report behind."""
    outdir.mkdir(parents=True, exist_ok=True)
    report_path = outdir / f"{name}.json"
    try:
        payload = body()
    except PreconditionFailure as exc:
        write_report(report_path, {"status": "precondition-failure",
                                   "error": str(exc)}, config)
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (ValueError, TypeError) as exc:
        write_report(report_path, {"status": "precondition-failure",
                                   "error": str(exc)}, config)
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:  # numerical failures
        write_report(report_path, {"status": "numerical-failure",
                                   "error": f"{type(exc).__name__}: {exc}"},
                     config)
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(2)
    payload["status"] = "ok"
    write_report(report_path, payload, config)
    click.echo(f"wrote {report_path}")


@click.group()
def main():
    """Radial polyharmonic laboratory."""


_shared = [
    click.option("--n", type=int, required=True, help="space dimension"),
    click.option("--k", type=int, required=True, help="polyharmonic order"),
    click.option("--outdir", type=click.Path(path_type=Path),
                 default=None, help="output directory"),
    click.option("--config", "config_file", type=click.Path(exists=True),
                 default=None, help="flat key=value defaults file"),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


@main.command()
@shared_options
@click.option("--mu", type=float, default=1.0, help="bubble scale")
@click.option("--grid-points", type=int, default=600)
@click.option("--r-max", type=float, default=12.0)
@click.pass_context
def bubble(ctx, n, k, outdir, config_file, mu, grid_points, r_max):
    """Bubble profile: constants, residual, whole-space masses."""
    params = _merge_config(ctx, _load_config(config_file))
    outdir = params["outdir"] or default_outdir()
    config = {"command": "bubble", "n": n, "k": k, "mu": params["mu"],
              "grid_points": params["grid_points"], "r_max": params["r_max"]}

    def body():
        p = _params_or_fail(n, k)
        grid = default_bubble_grid(params["grid_points"], params["r_max"])
        b = BubbleProfile(p, mu=params["mu"], eps=1)
        res = bubble_residual(b, grid)
        masses = bubble_integrals(p)
        fld = bubble_field(b, grid)
        fld.to_csv(outdir / "bubble_profile.csv")
        write_curve(outdir / "bubble_profile.dat", grid.nodes, fld.values)
        plotting.save_profile(outdir / "bubble_profile.png", grid.nodes,
                              fld.values, f"bubble n={n} k={k} mu={params['mu']}",
                              ylabel="U(r)")
        return {"ank": bubble_shape_constant(n, k), "residual": res,
                "massU2s": masses["massU2s"],
                "massU2sm1": masses["massU2sm1"]}

    _run(outdir, "bubble", config, body)


@main.command()
@shared_options
@click.option("--pole", type=float, default=0.0,
              help="pole radius; 0 = center pole")
@click.option("--grid-points", type=int, default=400)
@click.option("--lam", type=float, default=0.0, help="spectral shift lambda")
@click.option("--mu", type=float, default=0.0,
              help="Hardy potential strength mu (V = mu r^{-2k})")
@click.pass_context
def green(ctx, n, k, outdir, config_file, pole, grid_points, lam, mu):
    """Discrete Green table, with the Boggio closed form when comparable."""
    params = _merge_config(ctx, _load_config(config_file))
    outdir = params["outdir"] or default_outdir()
    config = {"command": "green", "n": n, "k": k, "pole": params["pole"],
              "grid_points": params["grid_points"], "lam": params["lam"],
              "mu": params["mu"]}

    def body():
        p = _params_or_fail(n, k, params["lam"])
        grid = make_grid(params["grid_points"], "clustered", 1.0)
        V = inverse_power_potential(params["mu"], k) if params["mu"] > 0 \
            else None
        op = assemble_operator(p, V, grid)
        table = discrete_green(op, params["pole"])
        table.write(outdir / "green_table")
        write_curve(outdir / "green_table.dat", grid.nodes, table.values)
        curves = {"discrete": np.abs(table.values)}
        payload = {"pole": table.pole, "provenance": table.provenance}
        if params["pole"] == 0.0 and params["lam"] == 0.0 and params["mu"] == 0.0:
            gb = boggio_center(n, k, grid.nodes[:-1])
            curves["boggio"] = np.abs(np.append(gb, 0.0))
            mid = (grid.nodes > 0.2) & (grid.nodes < 0.8)
            rel = np.abs(table.values[:-1] - gb)[mid[:-1]] / np.abs(gb)[mid[:-1]]
            payload["boggio_max_rel_diff_mid"] = float(np.max(rel))
        plotting.save_kernel_comparison(outdir / "green_table.png",
                                        grid.nodes, curves,
                                        f"Green kernel n={n} k={k}")
        return payload

    _run(outdir, "green", config, body)


@main.command()
@shared_options
@click.option("--dkn", "dkn_flag", is_flag=True,
              help="boundary invariant of the fundamental profile")
@click.option("--r", type=float, default=0.5, help="sphere radius")
@click.option("--case", type=click.Choice(["ball", "annulus"]),
              default="ball", help="identity check case (without --dkn)")
@click.option("--grid-points", type=int, default=240)
@click.pass_context
def pohozaev(ctx, n, k, outdir, config_file, dkn_flag, r, case, grid_points):
    """Pohozaev identity checks and the fundamental-profile invariant."""
    params = _merge_config(ctx, _load_config(config_file))
    outdir = params["outdir"] or default_outdir()
    config = {"command": "pohozaev", "n": n, "k": k, "dkn": dkn_flag,
              "r": params["r"], "case": params["case"],
              "grid_points": params["grid_points"]}

    def body():
        p = _params_or_fail(n, k)
        if dkn_flag:
            rr = params["r"]
            val = pohozaev_profile_constant(p, rr)
            scaled = [pohozaev_profile_constant(p, x) / x ** (2 * k - n)
                      for x in (0.25, 0.5, 0.75)]
            return {"D_r": val, "r": rr,
                    "scaled_samples": scaled,
                    "scaling_spread": float(np.ptp(scaled))}
        grid = make_grid(params["grid_points"], "uniform", 1.0)
        if params["case"] == "ball":
            u = sample(lambda x: (1.0 - x ** 2) ** k, grid, "even")
            rep = pohozaev_residual(u, 0.0, 1.0, None, p)
        else:
            u = sample(lambda x: x ** (2 * k - n), grid, "none")
            inner = grid.nodes[grid.index_of(0.3, tol=2e-2)]
            outer = grid.nodes[grid.index_of(0.9, tol=2e-2)]
            rep = pohozaev_residual(u, 0.0, outer, inner, p)
        plotting.save_term_bars(outdir / "pohozaev_terms.png", rep.terms,
                                f"boundary terms n={n} k={k}")
        return {"lhs": rep.lhs, "rhs": rep.rhs, "residual": rep.residual,
                "relative_residual": rep.relative_residual,
                "terms": rep.terms, "radii": rep.radii}

    _run(outdir, "pohozaev", config, body)


@main.command()
@shared_options
@click.option("--lambda-start", type=float, required=True)
@click.option("--lambda-end", type=float, default=None)
@click.option("--steps", type=int, default=24)
@click.option("--grid-points", type=int, default=360)
@click.option("--tol", type=float, default=1e-9)
@click.option("--barrier", is_flag=True,
              help="adaptive walk toward the blow-up barrier")
@click.option("--amplitude", type=float, default=3.0,
              help="seed guess amplitude")
@click.pass_context
def branch(ctx, n, k, outdir, config_file, lambda_start, lambda_end, steps,
           grid_points, tol, barrier, amplitude):
    """Continuation along a lambda path (or adaptive barrier tracking)."""
    params = _merge_config(ctx, _load_config(config_file))
    outdir = params["outdir"] or default_outdir()
    config = {"command": "branch", "n": n, "k": k,
              "lambda_start": params["lambda_start"],
              "lambda_end": params["lambda_end"], "steps": params["steps"],
              "grid_points": params["grid_points"], "tol": params["tol"],
              "barrier": params["barrier"], "amplitude": params["amplitude"]}

    def body():
        p = _params_or_fail(n, k, 0.0)
        grid = default_branch_grid(params["grid_points"])
        first = robust_first_solve(p.with_lambda(params["lambda_start"]),
                                   grid, params["amplitude"],
                                   tol=params["tol"])
        if first is None or not first.ok:
            raise RuntimeError(
                f"no nontrivial solution found at lambda-start "
                f"({None if first is None else first.status})")
        guess = first.field
        if params["barrier"]:
            br = track_to_barrier(p, params["lambda_start"], guess,
                                  tol=params["tol"],
                                  n_points=params["grid_points"])
        else:
            if params["lambda_end"] is None:
                raise PreconditionFailure("--lambda-end required without "
                                          "--barrier")
            path = np.linspace(params["lambda_start"], params["lambda_end"],
                               params["steps"])
            br = continuation(p, path, guess, tol=params["tol"],
                              n_points=params["grid_points"])
        if not br.entries:
            raise RuntimeError(
                f"no branch entries; first solve failed: {br.failure_reason}")
        br.write(outdir / "branch")
        write_curve(outdir / "branch_diagram.dat", br.lambdas, br.sup_norms)
        plotting.save_branch_diagram(outdir / "branch_diagram.png",
                                     br.lambdas, br.sup_norms,
                                     f"branch n={n} k={k}")
        return {"entries": len(br.entries),
                "lambda_last": float(br.lambdas[-1]),
                "sup_first": float(br.sup_norms[0]),
                "sup_last": float(br.sup_norms[-1]),
                "growth_factor": br.growth_factor(),
                "failure_lambda": br.failure_lambda,
                "failure_reason": br.failure_reason}

    _run(outdir, "branch", config, body)


@main.command()
@shared_options
@click.option("--mu", type=float, default=0.0,
              help="Hardy potential strength (V = mu r^{-2k})")
@click.option("--h-const", type=float, default=0.0,
              help="constant zeroth-order coefficient h")
@click.option("--eps", type=float, default=0.0,
              help="mollification radius (0 = none)")
@click.option("--grid-points", type=int, default=280)
@click.pass_context
def coercivity(ctx, n, k, outdir, config_file, mu, h_const, eps, grid_points):
    """Coercivity margin of Delta^k + h - V against Delta^k."""
    params = _merge_config(ctx, _load_config(config_file))
    outdir = params["outdir"] or default_outdir()
    config = {"command": "coercivity", "n": n, "k": k, "mu": params["mu"],
              "h_const": params["h_const"], "eps": params["eps"],
              "grid_points": params["grid_points"]}

    def body():
        p = _params_or_fail(n, k)
        grid = make_grid(params["grid_points"], "clustered", 1.0, beta=8.0)
        h = None
        if params["h_const"] != 0.0:
            h = sample(lambda r: np.full_like(r, params["h_const"]), grid,
                       "even")
        V = None
        if params["mu"] > 0.0:
            V = inverse_power_potential(params["mu"], k)
            if params["eps"] > 0.0:
                V = mollify_potential(V, params["eps"])
        rep = coercivity_margin(p, h, V, grid)
        return rep.as_dict()

    _run(outdir, "coercivity", config, body)


@main.command()
@shared_options
@click.option("--mu-frac", type=float, default=0.5,
              help="potential strength as a fraction of the threshold")
@click.option("--gamma", "gammas", type=float, multiple=True,
              default=(0.2, 0.5, 0.8))
@click.option("--poles", type=int, default=5)
@click.option("--grid-points", type=int, default=360)
@click.pass_context
def certify(ctx, n, k, outdir, config_file, mu_frac, gammas, poles,
            grid_points):
    """Pointwise-bound certificates for Green tables of Delta^k - V."""
    params = _merge_config(ctx, _load_config(config_file))
    outdir = params["outdir"] or default_outdir()
    config = {"command": "certify", "n": n, "k": k,
              "mu_frac": params["mu_frac"], "gammas": list(params["gammas"]),
              "poles": params["poles"], "grid_points": params["grid_points"]}

    def body():
        p = _params_or_fail(n, k)
        ch = hardy_best_constant(n, k)
        if ch is None:
            grid0 = make_grid(params["grid_points"], "clustered", 1.0,
                              beta=8.0)
            ch = coercivity_margin(p, None, None, grid0).hardy_constant_used
        mu = params["mu_frac"] / (2.0 * ch)
        grid = make_grid(params["grid_points"], "clustered", 1.0)
        V = inverse_power_potential(mu, k)
        op = assemble_operator(p, V, grid)
        pole_radii = np.linspace(0.15, 0.85, params["poles"])
        tables = [discrete_green(op, r0) for r0 in pole_radii]
        worst = {}
        for g in params["gammas"]:
            rep = green_bound_certificate(tables, g, mu)
            worst[f"gamma_{g}"] = {"worst": rep.worst,
                                   "derivatives": rep.worst_derivative,
                                   "finite": rep.finite}
        rho = np.abs(tables[0].grid.nodes - tables[0].pole)
        keep = rho > 3 * np.max(np.gradient(tables[0].grid.nodes))
        g0 = params["gammas"][0]
        maj = (np.maximum(tables[0].grid.nodes, tables[0].pole)
               / np.minimum(tables[0].grid.nodes, tables[0].pole)) ** g0 \
            * rho ** (2 * k - n)
        write_curve(outdir / "certificate_ratios.dat", rho[keep],
                    np.abs(tables[0].values[keep]) / maj[keep])
        plotting.save_ratio_scatter(outdir / "certificate_ratios.png",
                                    rho[keep],
                                    np.abs(tables[0].values[keep]) / maj[keep],
                                    f"bound ratios n={n} k={k} gamma={g0}")
        return {"mu": mu, "hardy_constant": ch, "worst_constants": worst}

    _run(outdir, "certify", config, body)


@main.command(context_settings={"ignore_unknown_options": True})
@click.option("--config", "config_file", type=click.Path(exists=True),
              required=True, help="flat key=value file with a 'command' key")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
def run(config_file, overrides):
    """Dispatch on the 'command' key of a config file."""
    cfg = _load_config(config_file)
    name = cfg.pop("command", None)
    if name not in {"bubble", "green", "pohozaev", "branch", "coercivity",
                    "certify"}:
        click.echo(f"error: unknown command {name!r} in config", err=True)
        sys.exit(1)
    args = []
    for k, v in cfg.items():
        flag = f"--{k.replace('_', '-')}"
        if str(v).lower() in ("true", "yes", "1") and k in ("dkn", "barrier"):
            args.append(flag)
        elif str(v).lower() in ("false", "no", "0") and k in ("dkn", "barrier"):
            continue
        else:
            args.append(f"{flag}={v}")
    args.extend(overrides)
    main.main(args=[name, *args], standalone_mode=True)


if __name__ == "__main__":
    main()
