"""Command-line entry point: solve, audit, validate, sweep.

Exit codes: 0 success, 2 config/input error, 3 solver non-convergence,
4 assumption audit failure, 5 validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config, validate_config
from .diagnostics import CertifyThresholds, certify, estimate_suite
from .grid import ScalarField, TorusGrid, read_field_csv, write_field_csv
from .hamiltonian import (HamiltonianModel, audit_assumptions,
                          check_parameter_admissibility, coefficient_field)
from .solver import ContinuationConfig, NewtonConfig, continuation_run
from .system import MFGModels, MFGState, PerturbationPair, bilinear_form

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_AUDIT = 4
EXIT_VALIDATE = 5


def format_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion key order, floats at 17 digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  "{k}": {format_json(v, indent + 1)}' for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ", ".join(format_json(v, indent + 1) for v in obj)
        return "[" + items + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return f"{float(obj):.17g}"
    if obj is None:
        return "null"
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_json(obj) + "\n")


def build_setup(cfg: RunConfig):
    """Grid, models, and solver configurations from a validated config."""
    validate_config(cfg)
    grid = TorusGrid(cfg.grid_d, cfg.grid_n)
    a = coefficient_field(grid, cfg.hamiltonian_a)
    if np.min(a) <= 0.0:
        raise ConfigError(f"hamiltonian.a = {cfg.hamiltonian_a!r} is not "
                          "strictly positive on the grid")
    b = coefficient_field(grid, cfg.potential_b)
    models = MFGModels(grid, cfg.congestion_alpha, cfg.hamiltonian_gamma,
                       a, b, cfg.potential_sign)
    newton = NewtonConfig(tol_residual=cfg.newton_tol,
                          max_iters=cfg.newton_max_iters,
                          min_m_floor=cfg.newton_min_m_floor)
    cont = ContinuationConfig(lambda_step_init=cfg.continuation_step_init,
                              lambda_step_min=cfg.continuation_step_min,
                              grow_factor=cfg.continuation_grow,
                              shrink_factor=cfg.continuation_shrink)
    return grid, models, newton, cont


def _admissibility_gate(cfg: RunConfig) -> bool:
    report = check_parameter_admissibility(
        cfg.hamiltonian_gamma, cfg.congestion_alpha, cfg.grid_d)
    if report.admissible or cfg.overrides_allow_inadmissible:
        return True
    for cond in report.violated():
        print(f"inadmissible parameters: {cond.name} violated "
              f"({cond.statement}; margin {cond.margin:.6g})", file=sys.stderr)
    return False


def _path_summary(path) -> dict:
    return {
        "status": path.status,
        "steps": [
            {"lambda": s.lam, "iters": s.iters, "residual": s.residual_norm,
             "min_m": s.min_m}
            for s in path.steps
        ],
        "total_iters": path.total_iters,
    }


def _solve_with_config(cfg: RunConfig, quiet: bool = False):
    grid, models, newton, cont = build_setup(cfg)
    log = None if quiet else (lambda line: print(line))
    return grid, models, continuation_run(models, newton, cont, log=log)


def _write_solution_files(out_dir, grid, models, path) -> None:
    os.makedirs(out_dir, exist_ok=True)
    state = path.final_state
    write_field_csv(ScalarField(grid, state.u), os.path.join(out_dir, "u.csv"))
    write_field_csv(ScalarField(grid, state.m), os.path.join(out_dir, "m.csv"))
    _write_json(_path_summary(path), os.path.join(out_dir, "path.json"))
    report = estimate_suite(state, models)
    _write_json(report.to_dict(), os.path.join(out_dir, "diagnostics.json"))
    # plot data: fields side by side, and the continuation trace
    coords = grid.coords()
    header = ("x," if grid.d == 1 else "x,y,") + "u,m"
    with open(os.path.join(out_dir, "solution.csv"), "w") as fh:
        fh.write(header + "\n")
        for point, uv, mv in zip(coords, state.u, state.m):
            cells = [f"{c:.17g}" for c in point] + [f"{uv:.17g}", f"{mv:.17g}"]
            fh.write(",".join(cells) + "\n")
    with open(os.path.join(out_dir, "path.csv"), "w") as fh:
        fh.write("lambda,iters,residual,min_m\n")
        for s in path.steps:
            fh.write(f"{s.lam:.17g},{s.iters},{s.residual_norm:.17g},"
                     f"{s.min_m:.17g}\n")


def cmd_solve(cfg: RunConfig, out_dir: str | None = None) -> int:
    if not _admissibility_gate(cfg):
        return EXIT_CONFIG
    grid, models, path = _solve_with_config(cfg)
    _write_solution_files(out_dir or cfg.output_dir, grid, models, path)
    if not path.reached_one:
        print(f"continuation stopped: {path.status} at "
              f"lambda={path.steps[-1].lam:.6g}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_audit(cfg: RunConfig) -> int:
    grid, models, _, _ = build_setup(cfg)
    if cfg.hamiltonian_kind == "example":
        model = HamiltonianModel("example", cfg.hamiltonian_gamma, models.a)
    elif cfg.hamiltonian_kind == "power":
        model = HamiltonianModel("power", cfg.hamiltonian_gamma)
    else:
        model = HamiltonianModel("blend", cfg.hamiltonian_gamma, models.a, lam=0.5)
    audit = audit_assumptions(model, cfg.congestion_alpha, d=max(cfg.grid_d, 2))
    adm = check_parameter_admissibility(
        cfg.hamiltonian_gamma, cfg.congestion_alpha, cfg.grid_d)

    print(f"assumption audit: kind={model.kind} gamma={cfg.hamiltonian_gamma:g} "
          f"alpha={cfg.congestion_alpha:g}")
    for check in audit.checks:
        consts = " ".join(f"{k}={v:.6g}" for k, v in check.constants.items())
        print(f"  [{'pass' if check.passed else 'FAIL'}] {check.name}: "
              f"{check.statement}  ({consts})")
    if model.kind == "example":
        print(f"  inf alpha_tilde = {audit.alpha_tilde_inf:.6g} "
              f"(requires alpha < inf alpha_tilde)")
    for cond in adm.conditions:
        print(f"  [{'pass' if cond.satisfied else 'FAIL'}] {cond.name}: "
              f"{cond.statement}  (margin {cond.margin:.6g})")
    ok = audit.all_passed and adm.admissible
    return EXIT_OK if ok else EXIT_AUDIT


def cmd_validate(cfg: RunConfig, fields_dir: str, out_dir: str | None = None) -> int:
    grid, models, _, _ = build_setup(cfg)
    try:
        u = read_field_csv(os.path.join(fields_dir, "u.csv"), grid)
        m = read_field_csv(os.path.join(fields_dir, "m.csv"), grid)
    except (OSError, ValueError) as exc:
        print(f"cannot load fields: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if np.min(m.values) <= 0.0:
        print("validation precondition violated: density field has a "
              "non-positive entry", file=sys.stderr)
        return EXIT_CONFIG
    state = MFGState(grid, u.values, m.values, 1.0)
    report = estimate_suite(state, models)
    # monotone-sign bilinear-form spot check over a few fixed perturbations
    mono = MFGModels(grid, models.alpha, models.gamma, models.a, models.b,
                     "monotone")
    rng = np.random.default_rng(0)
    bmax = max(
        bilinear_form(w, w, state, mono)
        for w in (PerturbationPair(rng.standard_normal(grid.npoints),
                                   rng.standard_normal(grid.npoints))
                  for _ in range(8)))
    verdicts = certify(report, CertifyThresholds(), bform_max=bmax)
    for v in verdicts:
        print(f"  [{'pass' if v.passed else 'FAIL'}] {v.name}: "
              f"value={v.value:.6g} threshold={v.threshold:.6g}")
    _write_json(report.to_dict(),
                os.path.join(out_dir or fields_dir, "diagnostics.json"))
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_VALIDATE


def cmd_sweep(cfg: RunConfig, gamma_list, alpha_list,
              out_dir: str | None = None) -> int:
    if not gamma_list or not alpha_list:
        print("sweep needs non-empty gamma and alpha lists", file=sys.stderr)
        return EXIT_CONFIG
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    rows = []
    for gamma in gamma_list:
        for alpha in alpha_list:
            adm = check_parameter_admissibility(gamma, alpha, cfg.grid_d)
            attempt = adm.admissible or cfg.overrides_allow_inadmissible
            row = {"gamma": gamma, "alpha": alpha,
                   "admissible": adm.admissible, "reached_one": False,
                   "iters_total": 0, "min_m": float("nan"),
                   "energy_residual": float("nan")}
            if attempt:
                sub = RunConfig(**{**cfg.__dict__})
                sub.hamiltonian_gamma = gamma
                sub.congestion_alpha = alpha
                try:
                    grid, models, path = _solve_with_config(sub, quiet=True)
                except (ConfigError, ValueError) as exc:
                    print(f"sweep pair gamma={gamma:g} alpha={alpha:g} "
                          f"failed to set up: {exc}", file=sys.stderr)
                    rows.append(row)
                    continue
                row["reached_one"] = path.reached_one
                row["iters_total"] = path.total_iters
                if path.steps:
                    row["min_m"] = min(s.min_m for s in path.steps)
                if path.reached_one:
                    report = estimate_suite(path.final_state, models)
                    row["energy_residual"] = report.energy_identity_residual
            rows.append(row)

    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("gamma,alpha,admissible,reached_one,iters_total,min_m,"
                 "energy_residual\n")
        for r in rows:
            fh.write(f"{r['gamma']:.17g},{r['alpha']:.17g},"
                     f"{str(r['admissible']).lower()},"
                     f"{str(r['reached_one']).lower()},{r['iters_total']},"
                     f"{r['min_m']:.17g},{r['energy_residual']:.17g}\n")
    # admissibility frontier: largest alpha allowed at each gamma
    with open(os.path.join(out, "frontier.csv"), "w") as fh:
        fh.write("gamma,alpha_max\n")
        for gamma in np.linspace(1.01, 1.99, 99):
            amax = min(2.0, (2.0 - gamma) / (2.0 * (gamma - 1.0)))
            fh.write(f"{gamma:.17g},{amax:.17g}\n")
    print(f"sweep complete: {len(rows)} pairs, results in {out}/sweep.csv")
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    toks = [t for t in text.split(",") if t.strip()]
    return [float(t) for t in toks]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfglab",
        description="Stationary mean-field games with congestion: homotopy "
                    "continuation solver and estimate certification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "audit", "validate", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to a section.key = value file")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--override-admissibility", action="store_true")
        if name == "validate":
            p.add_argument("--fields", help="directory holding u.csv and m.csv")
        if name == "sweep":
            p.add_argument("--gamma", help="comma-separated gamma values")
            p.add_argument("--alpha", help="comma-separated alpha values")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.override_admissibility:
            cfg.overrides_allow_inadmissible = True
        validate_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "solve":
            return cmd_solve(cfg, args.out)
        if args.command == "audit":
            return cmd_audit(cfg)
        if args.command == "validate":
            fields_dir = args.fields or cfg.output_dir
            return cmd_validate(cfg, fields_dir, args.out)
        if args.command == "sweep":
            try:
                gammas = _float_list(args.gamma) if args.gamma else []
                alphas = _float_list(args.alpha) if args.alpha else []
            except ValueError as exc:
                print(f"config error: bad sweep list: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            return cmd_sweep(cfg, gammas, alphas, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
