"""Command-line front end: every computation as a reproducible batch run.

Tabular results go to --out as CSV or JSON (stdout when no path is given);
runs that produce fields also dump them in the plain-text field format.
Alongside any file output the matching figure is rendered as a PNG next to
it unless --no-plot is passed. Exit codes: 0 success, 2 usage error,
3 hypothesis/precondition violation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anneal import (
    AnnealSchedule,
    RunReport,
    _child_seed,
    anneal,
    cascade_experiment,
    gamma_limit_experiment,
)
from .core1d import (
    ProblemParams,
    gamma_interval,
    lamellar_energy,
    lamellar_profile,
    optimal_k,
    solve_potential_1d,
)
from .energy2d import total_energy
from .errors import BracketFailure, NumericalError, PreconditionError
from .fields import SpinField, default_grid, random_spin_field, thin_grid
from .stability import epsilon_star, is_stable


class UsageError(ValueError):
    """Bad flag combination or out-of-domain parameter: exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """One validated CLI invocation: subcommand, parameters, output plan."""

    subcommand: str
    params: dict = field(default_factory=dict)
    out: Path | None = None
    fmt: str = "csv"
    plot: bool = True

    def artifact(self, suffix: str) -> Path | None:
        """Sibling path for a secondary output file; None without --out."""
        if self.out is None:
            return None
        return self.out.with_name(self.out.stem + suffix)


# ------------------------------------------------------------------ output


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit_rows(rows: list[dict], header: list[str], cfg: RunConfig) -> None:
    if cfg.fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(_cell(row.get(col)) for col in header) for row in rows]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps([{col: row.get(col) for col in header} for row in rows],
                          indent=2) + "\n"
    _write_text(text, cfg)


def _emit_json(blob: dict, cfg: RunConfig) -> None:
    _write_text(json.dumps(blob, indent=2) + "\n", cfg)


def _write_text(text: str, cfg: RunConfig) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        cfg.out.write_text(text)
        print(f"wrote {cfg.out}", file=sys.stderr)


def _saved(path: Path | None) -> None:
    if path is not None:
        print(f"wrote {path}", file=sys.stderr)


# ------------------------------------------------------------- phase sweep


def cmd_phase1d(cfg: RunConfig) -> None:
    p = cfg.params
    if p["gamma"] is not None:
        gammas = [float(p["gamma"])]
    else:
        if p["gamma_max"] is None:
            raise UsageError("phase1d needs --gamma or --gamma-min/--gamma-max")
        lo, hi, steps = p["gamma_min"], p["gamma_max"], p["steps"]
        if not 0.0 <= lo < hi:
            raise UsageError(f"need 0 <= gamma-min < gamma-max, got [{lo}, {hi}]")
        if steps < 2:
            raise UsageError(f"steps must be >= 2, got {steps}")
        gammas = np.linspace(lo, hi, steps).tolist()
    rows = []
    for g in gammas:
        ks = sorted(optimal_k(g))
        k = ks[0]
        lo_k, hi_k = gamma_interval(k)
        rows.append(
            {
                "gamma": g,
                "k_opt": "|".join(str(x) for x in ks) if len(ks) > 1 else ks[0],
                "energy": lamellar_energy(k, g),
                "gamma1_k": lo_k,
                "gamma2_k": hi_k,
            }
        )
    _emit_rows(rows, ["gamma", "k_opt", "energy", "gamma1_k", "gamma2_k"], cfg)
    if cfg.plot and cfg.out is not None and len(rows) > 1:
        from .plotting import save_staircase_plot

        _saved(
            save_staircase_plot(
                gammas,
                [min(optimal_k(g)) for g in gammas],
                [row["energy"] for row in rows],
                cfg.artifact(".png"),
            )
        )


# --------------------------------------------------------------- potential


def cmd_potential(cfg: RunConfig) -> None:
    k = cfg.params["k"]
    if k is None or k < 1:
        raise UsageError("potential needs --k >= 1")
    samples = cfg.params["samples"]
    if samples < 2:
        raise UsageError(f"samples must be >= 2, got {samples}")
    y = np.linspace(0.0, 1.0, samples)
    u = lamellar_profile(k)
    v = solve_potential_1d(u, 0.0)
    uy, vy, dy = u.evaluate(y), v.value(y), v.derivative(y)
    rows = [
        {"y": float(y[i]), "u": float(uy[i]), "v": float(vy[i]), "v_prime": float(dy[i])}
        for i in range(samples)
    ]
    _emit_rows(rows, ["y", "u", "v", "v_prime"], cfg)
    if cfg.plot and cfg.out is not None:
        from .plotting import save_potential_plot

        _saved(save_potential_plot(k, cfg.artifact(".png"), samples=samples))


# --------------------------------------------------------------- stability


def _parse_list(text: str, kind, flag: str) -> list:
    try:
        return [kind(tok) for tok in str(text).split(",") if tok != ""]
    except ValueError as err:
        raise UsageError(f"bad {flag} value {text!r}") from err


def cmd_stability(cfg: RunConfig) -> None:
    p = cfg.params
    if p["k"] is None or p["gamma"] is None:
        raise UsageError("stability needs --k and --gamma")
    ks = _parse_list(p["k"], int, "--k")
    gammas = _parse_list(p["gamma"], float, "--gamma")
    if any(k < 1 for k in ks):
        raise UsageError("every k must be >= 1")
    if any(g < 0 for g in gammas):
        raise UsageError("every gamma must be >= 0")
    rows = []
    if p["eps"] is not None:
        # single-width verdicts
        for k in ks:
            for g in gammas:
                if g == 0.0:
                    rows.append({"k": k, "gamma": g, "eps": p["eps"], "stable": True,
                                 "min_eig": None, "worst_block": None,
                                 "paper_bound": None, "note": "unconditionally stable"})
                    continue
                rep = is_stable(k, ProblemParams(gamma=g, eps=p["eps"]))
                rows.append({"k": k, "gamma": g, "eps": p["eps"], "stable": rep.stable,
                             "min_eig": rep.min_eig, "worst_block": rep.worst_block,
                             "paper_bound": rep.sufficient_bound, "note": None})
        header = ["k", "gamma", "eps", "stable", "min_eig", "worst_block",
                  "paper_bound", "note"]
        _emit_rows(rows, header, cfg)
        return
    # threshold scan
    for k in ks:
        for g in gammas:
            if g == 0.0:
                rows.append({"k": k, "gamma": g, "eps_star": None,
                             "paper_bound": None, "note": "unconditionally stable"})
                continue
            bound = math.pi * math.sqrt(k / (2.0 * g))
            try:
                star = epsilon_star(k, g)
                note = None
            except BracketFailure:
                star = None
                note = "stable throughout scan"
            rows.append({"k": k, "gamma": g, "eps_star": star,
                         "paper_bound": bound, "note": note})
    _emit_rows(rows, ["k", "gamma", "eps_star", "paper_bound", "note"], cfg)
    if cfg.plot and cfg.out is not None:
        from .plotting import save_stability_plot

        plottable = [row for row in rows if row["paper_bound"] is not None]
        if plottable:
            _saved(save_stability_plot(plottable, cfg.artifact(".png")))


# ------------------------------------------------------------- optimizers


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**31))
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _schedule(p: dict, seed: int) -> AnnealSchedule:
    return AnnealSchedule(
        t_init=p["t_init"],
        t_final=p["t_final"],
        cooling=p["cooling"],
        sweeps_per_stage=p["sweeps_per_stage"],
        refresh_sweeps=p["refresh_sweeps"],
        seed=seed,
    )


def _parse_grid(text: str | None, eps: float):
    if text is None:
        return default_grid(eps)
    try:
        nx, ny = (int(tok) for tok in text.lower().split("x"))
    except ValueError as err:
        raise UsageError(f"--grid expects NXxNY, got {text!r}") from err
    if nx < 1 or ny < 2:
        raise UsageError(f"grid {text!r} is too small")
    return thin_grid(eps, nx, ny)


def _report_row(report: RunReport) -> dict:
    return {
        "seed": report.seed,
        "stripes": report.stripes,
        "predicted_k": report.predicted_k,
        "energy": report.energy.total,
        "rescaled_energy": report.energy.rescaled_total,
        "l1_to_uk": report.l1_to_uk,
        "sweeps": report.sweeps,
        "walltime_s": report.walltime_s,
    }


def cmd_minimize2d(cfg: RunConfig) -> None:
    p = cfg.params
    if p["gamma"] is None:
        raise UsageError("minimize2d needs --gamma")
    if p["seeds"] < 1:
        raise UsageError("--seeds must be >= 1")
    eps = p["eps"]
    grid = _parse_grid(p["grid"], eps)
    params = ProblemParams(gamma=p["gamma"], m=p["m"], eps=eps)
    seed = _resolve_seed(p["seed"])
    reports: list[RunReport] = []
    for i in range(p["seeds"]):
        child = seed if p["seeds"] == 1 else _child_seed(seed, i)
        init = random_spin_field(grid, p["m"], np.random.default_rng(child))
        reports.append(anneal(init, params, _schedule(p, child), p["delta_mode"]))
    best = min(reports, key=lambda r: r.energy.total)
    if cfg.fmt == "csv":
        header = ["seed", "stripes", "predicted_k", "energy", "rescaled_energy",
                  "l1_to_uk", "sweeps", "walltime_s"]
        _emit_rows([_report_row(r) for r in reports], header, cfg)
    elif p["seeds"] == 1:
        _emit_json(best.to_json_dict(), cfg)
    else:
        counts: dict = {}
        for r in reports:
            counts[r.stripes] = counts.get(r.stripes, 0) + 1
        majority = max(counts, key=counts.get)
        _emit_json(
            {
                "seeds": p["seeds"],
                "base_seed": seed,
                "majority_stripes": majority,
                "majority_count": counts[majority],
                "runs": [r.to_json_dict() for r in reports],
            },
            cfg,
        )
    if cfg.out is not None:
        for r in reports:
            fpath = cfg.artifact(f"_field_s{r.seed}.txt")
            r.best.save(fpath)
            _saved(fpath)
        if cfg.plot:
            from .plotting import save_field_image, save_trace_plot

            note = f"seed {best.seed}: stripes={best.stripes}"
            _saved(save_field_image(best.best, params.gamma, cfg.artifact(".png"), note))
            _saved(save_trace_plot(best, cfg.artifact("_trace.png")))


def cmd_cascade(cfg: RunConfig) -> None:
    p = cfg.params
    gammas = _parse_list(p["gammas"], float, "--gammas")
    if not gammas:
        raise UsageError("--gammas must name at least one value")
    eps = p["eps"]
    grid = _parse_grid(p["grid"], eps)
    params = ProblemParams(gamma=gammas[0], m=p["m"], eps=eps)
    seed = _resolve_seed(p["seed"])
    rows = cascade_experiment(gammas, params, _schedule(p, seed), grid=grid)
    table = [
        {
            "gamma": row.gamma,
            "predicted_k": row.predicted_k,
            "stripes": row.stripes,
            "energy": row.energy,
            "seed": row.report.seed,
        }
        for row in rows
    ]
    _emit_rows(table, ["gamma", "predicted_k", "stripes", "energy", "seed"], cfg)
    if cfg.plot and cfg.out is not None:
        from .plotting import save_cascade_plot

        _saved(save_cascade_plot(rows, cfg.artifact(".png")))


def cmd_gamma_limit(cfg: RunConfig) -> None:
    p = cfg.params
    if p["gamma"] is None or p["a"] is None:
        raise UsageError("gamma-limit needs --gamma and --a")
    j_list = _parse_list(p["j_list"], int, "--j-list")
    if not j_list:
        raise UsageError("--j-list must name at least one refinement level")
    seed = _resolve_seed(p["seed"])
    rows = gamma_limit_experiment(
        p["gamma"], p["a"], j_list, _schedule(p, seed),
        m=p["m"], ny=p["ny"], init_mode=p["init"],
    )
    table = [
        {
            "j": row.j,
            "eps": row.eps,
            "stripes": row.stripes,
            "l1": row.l1,
            "l1_per_area": row.l1_per_area,
            "rescaled_energy": row.rescaled_energy,
        }
        for row in rows
    ]
    _emit_rows(
        table, ["j", "eps", "stripes", "l1", "l1_per_area", "rescaled_energy"], cfg
    )
    if cfg.plot and cfg.out is not None:
        from .plotting import save_gamma_limit_plot

        _saved(save_gamma_limit_plot(rows, p["gamma"], cfg.artifact(".png")))


def cmd_energy(cfg: RunConfig) -> None:
    p = cfg.params
    if p["gamma"] is None:
        raise UsageError("energy needs --gamma")
    path = Path(p["field"])
    if not path.exists():
        raise UsageError(f"field file {path} does not exist")
    u = SpinField.load(path)
    breakdown = total_energy(u, p["gamma"])
    _emit_rows(
        [breakdown.to_json_dict()],
        ["perimeter", "nonlocal", "total", "rescaled_total", "gamma", "m", "eps"],
        cfg,
    )
    if cfg.plot and cfg.out is not None:
        from .plotting import save_field_image

        _saved(save_field_image(u, p["gamma"], cfg.artifact(".png")))


# ------------------------------------------------------------------ parser


def _add_output_flags(sp, default_format: str) -> None:
    sp.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default=default_format)
    sp.add_argument("--no-plot", action="store_true",
                    help="skip PNG rendering next to --out")


def _add_schedule_flags(sp) -> None:
    sp.add_argument("--seed", type=int, default=None,
                    help="RNG seed (drawn and printed when omitted)")
    sp.add_argument("--t-init", type=float, default=0.02)
    sp.add_argument("--t-final", type=float, default=1e-4)
    sp.add_argument("--cooling", type=float, default=0.98)
    sp.add_argument("--sweeps-per-stage", type=int, default=250)
    sp.add_argument("--refresh-sweeps", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlip",
        description="Sharp-interface nonlocal isoperimetric energies on thin rectangles.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("phase1d", help="optimal interface count over a gamma sweep")
    sp.add_argument("--gamma", type=float, default=None, help="single gamma to report")
    sp.add_argument("--gamma-min", type=float, default=0.0)
    sp.add_argument("--gamma-max", type=float, default=None)
    sp.add_argument("--steps", type=int, default=101)
    _add_output_flags(sp, "csv")

    sp = sub.add_parser("potential", help="sampled profile and potential for one k")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--samples", type=int, default=1001)
    _add_output_flags(sp, "csv")

    sp = sub.add_parser("stability", help="stability verdicts or threshold scan")
    sp.add_argument("--k", default=None, help="interface count(s), comma separated")
    sp.add_argument("--gamma", default=None, help="gamma value(s), comma separated")
    sp.add_argument("--eps", type=float, default=None,
                    help="verdict at this width (omit to scan for the threshold)")
    _add_output_flags(sp, "csv")

    sp = sub.add_parser("minimize2d", help="anneal on the thin rectangle")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--m", type=float, default=0.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--grid", default=None, help="NXxNY (default from eps)")
    sp.add_argument("--seeds", type=int, default=1, help="number of chains")
    sp.add_argument("--delta-mode", choices=("frozen", "exact"), default="frozen")
    _add_schedule_flags(sp)
    _add_output_flags(sp, "json")

    sp = sub.add_parser("cascade", help="one anneal per gamma vs the predicted count")
    sp.add_argument("--gammas", default="5,50,150,400,800")
    sp.add_argument("--m", type=float, default=0.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--grid", default=None)
    _add_schedule_flags(sp)
    _add_output_flags(sp, "csv")

    sp = sub.add_parser("gamma-limit", help="width refinement toward the 1D limit")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--a", type=float, default=None, help="reference width; eps_j = a/j")
    sp.add_argument("--j-list", default="2,4,8")
    sp.add_argument("--ny", type=int, default=240)
    sp.add_argument("--m", type=float, default=0.0)
    sp.add_argument("--init", choices=("random", "predicted"), default="random")
    _add_schedule_flags(sp)
    _add_output_flags(sp, "csv")

    sp = sub.add_parser("energy", help="evaluate one saved field file")
    sp.add_argument("--field", required=True, help="field file path")
    sp.add_argument("--gamma", type=float, default=None)
    _add_output_flags(sp, "csv")

    return parser


_HANDLERS = {
    "phase1d": cmd_phase1d,
    "potential": cmd_potential,
    "stability": cmd_stability,
    "minimize2d": cmd_minimize2d,
    "cascade": cmd_cascade,
    "gamma-limit": cmd_gamma_limit,
    "energy": cmd_energy,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    params = {
        key: val
        for key, val in vars(args).items()
        if key not in ("subcommand", "out", "format", "no_plot")
    }
    cfg = RunConfig(
        subcommand=args.subcommand,
        params=params,
        out=args.out,
        fmt=args.format,
        plot=not args.no_plot,
    )
    try:
        _HANDLERS[cfg.subcommand](cfg)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except PreconditionError as err:
        print(f"hypothesis violation: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
