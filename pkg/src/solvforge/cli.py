"""Command-line entry point.

    forge run <config.json> [--out-dir DIR]
    forge verify <potential.csv> <solution.csv> --h <expr> --gamma-sq <val> [--tol T]
    forge parse-check <expr>

`run` executes one job described by a JSON config (schema documented in the
README), writes the constructed potential and transformed solutions as CSV,
plus a JSON report with every residual check, and exits 0 only if all checks
pass.  Exit codes: 0 success, 2 config or input-schema violation, 3 singular
seed / P matrix / blow-up, 4 residual failure.

Artifacts are written atomically (temp file, then rename) after the whole
job has been computed, so error paths leave no partial files.  Identical
configs produce byte-identical outputs; CSV numbers carry 17 significant
digits and the report echoes the config together with its SHA-256.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from ._kernels import kernel_backend
from .bargmann import (
    BargmannSeed,
    bargmann_potential,
    bargmann_solution,
    make_seed_set,
    p_matrix,
    transformed_seed_solutions,
)
from .darboux import chain_second_step, darboux_potential, darboux_solution, darboux_transform
from .errors import (
    BlowupError,
    BoundaryError,
    ConfigError,
    DirectionMismatchError,
    DomainError,
    DuplicateSpectralError,
    ExprSyntaxError,
    ForgeError,
    NonUniformShiftError,
    SeedRejectedError,
    SingularPotentialError,
    SingularSeedError,
)
from .expr import evaluate_on_grid, parse
from .grid import Direction, RadialGrid, SampledField
from .multichannel import (
    diagonal_base_system,
    multichannel_potential,
    multichannel_solution,
    transformed_seed_vectors,
)
from .solver import (
    JOST_AT_RIGHT,
    REGULAR_AT_LEFT,
    CustomBC,
    Solution,
    seed_from_expression,
    solve,
)
from . import verify as verify_mod

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_RESIDUAL = 4

_STRUCTURAL_ERRORS = (
    SingularSeedError,
    SingularPotentialError,
    DuplicateSpectralError,
    BlowupError,
    BoundaryError,
    SeedRejectedError,
    DirectionMismatchError,
    NonUniformShiftError,
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# CSV schemas


def _csv_potential(grid: RadialGrid, field: SampledField) -> str:
    lines = ["r,V"]
    r = grid.r
    for i in range(grid.n):
        lines.append(f"{_fmt(r[i])},{_fmt(field.values[i])}")
    return "\n".join(lines) + "\n"


def _csv_potential_matrix(grid: RadialGrid, vmat) -> str:
    n_ch = len(vmat)
    header = "r," + ",".join(f"V_{a + 1}{b + 1}" for a in range(n_ch) for b in range(n_ch))
    lines = [header]
    r = grid.r
    cols = [vmat[a][b].values for a in range(n_ch) for b in range(n_ch)]
    for i in range(grid.n):
        lines.append(_fmt(r[i]) + "," + ",".join(_fmt(c[i]) for c in cols))
    return "\n".join(lines) + "\n"


def _csv_solution(grid: RadialGrid, sol: Solution) -> str:
    lines = ["r,phi,dphi"]
    r = grid.r
    for i in range(grid.n):
        lines.append(f"{_fmt(r[i])},{_fmt(sol.values[i])},{_fmt(sol.derivs[i])}")
    return "\n".join(lines) + "\n"


def _csv_solution_matrix(grid: RadialGrid, phimat) -> str:
    n_ch = len(phimat)
    header = "r," + ",".join(
        f"phi_{a + 1}{b + 1},dphi_{a + 1}{b + 1}" for a in range(n_ch) for b in range(n_ch)
    )
    lines = [header]
    r = grid.r
    cols = []
    for a in range(n_ch):
        for b in range(n_ch):
            cols.append((phimat[a][b].values, phimat[a][b].derivs))
    for i in range(grid.n):
        row = [_fmt(r[i])]
        for v, d in cols:
            row.append(_fmt(v[i]))
            row.append(_fmt(d[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _read_csv(path: str, expected_header: list[str]) -> dict[str, np.ndarray]:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ConfigError(f"{path} is empty")
    header = lines[0].split(",")
    if header != expected_header:
        raise ConfigError(
            f"{path}: expected header {','.join(expected_header)!r}, got {lines[0]!r}"
        )
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ConfigError(f"{path}:{k}: expected {len(header)} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ConfigError(f"{path}:{k}: non-numeric entry") from exc
    data = np.asarray(rows)
    return {name: data[:, j] for j, name in enumerate(header)}


# ---------------------------------------------------------------------------
# config handling


def _load_config(path: str) -> tuple[dict, str]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg, hashlib.sha256(raw).hexdigest()


def _cfg_get(cfg: dict, key: str, kind, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key {key!r}")
    val = cfg[key]
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if not isinstance(val, kind):
        raise ConfigError(f"{where}: key {key!r} must be {kind.__name__}")
    return val


def _parse_expr(text, where: str):
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected an expression string")
    try:
        return parse(text)
    except ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _grid_from_config(cfg: dict) -> RadialGrid:
    gcfg = _cfg_get(cfg, "grid", dict)
    a = _cfg_get(gcfg, "a", float, "grid")
    b = _cfg_get(gcfg, "b", float, "grid")
    n = _cfg_get(gcfg, "n", int, "grid")
    try:
        return RadialGrid(a, b, n)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _direction_from_config(cfg: dict) -> Direction:
    name = cfg.get("direction", "from_left")
    try:
        return Direction(name)
    except ValueError as exc:
        raise ConfigError(f"direction must be 'from_left' or 'from_right', got {name!r}") from exc


def _bc_from_spec(spec, where: str):
    if spec == "regular_at_left":
        return REGULAR_AT_LEFT
    if spec == "jost_at_right":
        return JOST_AT_RIGHT
    if isinstance(spec, dict):
        try:
            return CustomBC(float(spec["value"]), float(spec["slope"]), spec.get("at", "left"))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: bad custom boundary condition: {exc}") from exc
    raise ConfigError(f"{where}: unknown boundary condition {spec!r}")


def _seed_solution(seed_cfg: dict, grid, V0f, hf, where: str) -> Solution:
    gamma_sq = _cfg_get(seed_cfg, "gamma_sq", float, where)
    if "expr" in seed_cfg:
        return seed_from_expression(
            _parse_expr(seed_cfg["expr"], where), grid, gamma_sq=gamma_sq, V0=V0f, h=hf
        )
    if "bc" in seed_cfg:
        return solve(V0f, hf, gamma_sq, _bc_from_spec(seed_cfg["bc"], where))
    raise ConfigError(f"{where}: seed needs either 'expr' or 'bc'")


def _eval_bc(direction: Direction):
    return REGULAR_AT_LEFT if direction is Direction.FROM_LEFT else JOST_AT_RIGHT


# ---------------------------------------------------------------------------
# job execution


def _run_single_channel(cfg, grid, direction, tol):
    base = _cfg_get(cfg, "base", dict)
    h_expr = _parse_expr(_cfg_get(base, "h", str, "base"), "base.h")
    v0_expr = _parse_expr(_cfg_get(base, "V0", str, "base"), "base.V0")
    try:
        hf = evaluate_on_grid(h_expr, grid)
        v0f = evaluate_on_grid(v0_expr, grid)
    except DomainError as exc:
        raise ConfigError(f"base expressions not evaluable on the grid: {exc}") from exc

    mode = cfg["mode"]
    eval_gammas = cfg.get("eval_gammas", [])
    if not isinstance(eval_gammas, list):
        raise ConfigError("eval_gammas must be a list of gamma^2 values")

    residuals = []
    extras: dict = {}
    solutions: list[tuple[str, Solution]] = []

    if mode == "darboux":
        seeds = _cfg_get(cfg, "seeds", list)
        if len(seeds) != 1:
            raise ConfigError("darboux mode takes exactly one seed")
        seed = _seed_solution(seeds[0], grid, v0f, hf, "seeds[0]")
        potential = darboux_potential(seed, h_expr, v0f)
        for k, gsq in enumerate(eval_gammas):
            phi0 = solve(v0f, hf, float(gsq), _eval_bc(direction))
            phi = darboux_solution(seed, hf, phi0)
            rep = verify_mod.residual(potential, hf, phi, tol=tol)
            residuals.append({"kind": "transformed", "gamma_sq": float(gsq), **rep.to_dict()})
            solutions.append((f"solution_{k:03d}", phi))

    elif mode == "chain":
        seeds = _cfg_get(cfg, "seeds", list)
        if len(seeds) != 1:
            raise ConfigError("chain mode takes exactly one seed")
        coeff = _cfg_get(seeds[0], "C", float, "seeds[0]")
        seed = _seed_solution(seeds[0], grid, v0f, hf, "seeds[0]")
        first = darboux_transform(seed, h_expr, v0f)
        potential, smap = chain_second_step(first, coeff, direction)
        sset = make_seed_set(
            [BargmannSeed(seed.gamma_sq, coeff, seed)], v0f, h_expr, direction
        )
        pm = p_matrix(sset)
        v_b = bargmann_potential(sset, pm)
        extras["chain_vs_bargmann_supnorm"] = float(
            np.max(np.abs(potential.values - v_b.values))
        )
        sol_sup = 0.0
        for k, gsq in enumerate(eval_gammas):
            phi0 = solve(v0f, hf, float(gsq), _eval_bc(direction))
            phi = smap(phi0)
            phi_b = bargmann_solution(sset, pm, phi0)
            sol_sup = max(sol_sup, float(np.max(np.abs(phi.values - phi_b.values))))
            rep = verify_mod.residual(potential, hf, phi, tol=tol)
            residuals.append({"kind": "transformed", "gamma_sq": float(gsq), **rep.to_dict()})
            solutions.append((f"solution_{k:03d}", phi))
        if eval_gammas:
            extras["chain_vs_bargmann_solution_supnorm"] = sol_sup

    elif mode == "bargmann":
        seed_cfgs = _cfg_get(cfg, "seeds", list)
        if not seed_cfgs:
            raise ConfigError("bargmann mode needs at least one seed")
        bseeds = []
        for k, scfg in enumerate(seed_cfgs):
            coeff = _cfg_get(scfg, "C", float, f"seeds[{k}]")
            sol = _seed_solution(scfg, grid, v0f, hf, f"seeds[{k}]")
            bseeds.append(BargmannSeed(sol.gamma_sq, coeff, sol))
        sset = make_seed_set(bseeds, v0f, h_expr, direction)
        pm = p_matrix(sset)
        potential = bargmann_potential(sset, pm)
        extras["p_matrix"] = pm.condition_summary()
        for k, y in enumerate(transformed_seed_solutions(sset, pm)):
            rep = verify_mod.residual(potential, hf, y, tol=tol)
            residuals.append(
                {"kind": "seed_image", "gamma_sq": y.gamma_sq, **rep.to_dict()}
            )
            solutions.append((f"seed_solution_{k:03d}", y))
        for k, gsq in enumerate(eval_gammas):
            phi0 = solve(v0f, hf, float(gsq), _eval_bc(direction))
            phi = bargmann_solution(sset, pm, phi0)
            rep = verify_mod.residual(potential, hf, phi, tol=tol)
            residuals.append({"kind": "transformed", "gamma_sq": float(gsq), **rep.to_dict()})
            solutions.append((f"solution_{k:03d}", phi))

    else:
        raise ConfigError(f"unknown mode {mode!r}")

    artifacts = {"potential": _csv_potential(grid, potential)}
    for name, sol in solutions:
        artifacts[name] = _csv_solution(grid, sol)
    return artifacts, residuals, extras


def _run_multichannel(cfg, grid, direction, tol):
    base = _cfg_get(cfg, "base", dict)
    v0_list = _cfg_get(base, "V0", list, "base")
    h_text = _cfg_get(base, "h", str, "base")
    mc = _cfg_get(cfg, "seeds", dict)
    gamma_prime = _cfg_get(mc, "gamma_prime_sq", list, "seeds")
    coeffs = _cfg_get(mc, "c", list, "seeds")
    if not (len(v0_list) == len(gamma_prime) == len(coeffs)):
        raise ConfigError("base.V0, seeds.gamma_prime_sq and seeds.c must have equal lengths")
    try:
        cs = diagonal_base_system(
            [str(e) for e in v0_list],
            h_text,
            grid,
            [float(x) for x in gamma_prime],
            [float(x) for x in coeffs],
            direction,
        )
    except (ExprSyntaxError, DomainError, ValueError) as exc:
        raise ConfigError(f"multichannel base: {exc}") from exc

    vmat = multichannel_potential(cs)
    n_ch = cs.n_channels
    sym = max(
        float(np.max(np.abs(vmat[a][b].values - vmat[b][a].values)))
        for a in range(n_ch)
        for b in range(n_ch)
    )
    extras = {"symmetry_defect": sym}

    residuals = []
    psi = transformed_seed_vectors(cs)
    psimat = tuple(
        (Solution(cs.gamma_prime_sq[a], psi[a], CustomBC(0.0, 0.0, "left")),)
        for a in range(n_ch)
    )
    rep = verify_mod.matrix_residual(vmat, cs.h_field, psimat, cs.gamma_prime_sq, tol=tol)
    residuals.append({"kind": "transformed_seed_vectors", **rep.to_dict()})

    artifacts = {"potential": _csv_potential_matrix(grid, vmat)}
    forms_gap = 0.0
    eval_gammas = cfg.get("eval_gammas", [])
    for k, gvec in enumerate(eval_gammas):
        if not isinstance(gvec, list) or len(gvec) != n_ch:
            raise ConfigError(
                f"eval_gammas[{k}]: multichannel evaluation spectra must be "
                f"lists of {n_ch} gamma^2 values"
            )
        gnew = [float(x) for x in gvec]
        phi = multichannel_solution(cs, gnew)
        delta = gnew[0] - cs.gamma_prime_sq[0]
        if abs(delta) >= 1e-8:
            phi_w = multichannel_solution(cs, gnew, form="wronskian")
            forms_gap = max(
                forms_gap,
                max(
                    float(np.max(np.abs(phi[a][b].values - phi_w[a][b].values)))
                    for a in range(n_ch)
                    for b in range(n_ch)
                ),
            )
        rep = verify_mod.matrix_residual(vmat, cs.h_field, phi, gnew, tol=tol)
        residuals.append({"kind": "transformed", "gamma_sq": gnew, **rep.to_dict()})
        artifacts[f"solution_{k:03d}"] = _csv_solution_matrix(grid, phi)
    if eval_gammas:
        extras["forms_max_diff"] = forms_gap
    return artifacts, residuals, extras


def cmd_run(args) -> int:
    cfg, sha = _load_config(args.config)
    mode = _cfg_get(cfg, "mode", str)
    grid = _grid_from_config(cfg)
    direction = _direction_from_config(cfg)
    tol = float(cfg.get("tolerance", verify_mod.default_tolerance()))

    out_cfg = cfg.get("output", {})
    if not isinstance(out_cfg, dict):
        raise ConfigError("output must be an object")
    out_dir = args.out_dir or out_cfg.get("dir", ".")
    prefix = out_cfg.get("prefix", "job")

    if mode == "multichannel":
        artifacts, residuals, extras = _run_multichannel(cfg, grid, direction, tol)
    else:
        artifacts, residuals, extras = _run_single_channel(cfg, grid, direction, tol)

    all_passed = all(r["passed"] for r in residuals)
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name, text in artifacts.items():
        path = os.path.join(out_dir, f"{prefix}_{name}.csv")
        _atomic_write(path, text)
        paths[name] = path

    report = {
        "tool": {"name": "solvforge", "version": __version__, "kernel": kernel_backend()},
        "config": cfg,
        "config_sha256": sha,
        "mode": mode,
        "tolerance": tol,
        "residuals": residuals,
        "artifacts": paths,
        "all_passed": all_passed,
        **extras,
    }
    report_path = os.path.join(out_dir, f"{prefix}_report.json")
    _atomic_write(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(report_path)
    return EXIT_OK if all_passed else EXIT_RESIDUAL


def cmd_verify(args) -> int:
    pot = _read_csv(args.potential, ["r", "V"])
    sol = _read_csv(args.solution, ["r", "phi", "dphi"])
    if pot["r"].shape != sol["r"].shape:
        raise ConfigError(
            f"grid mismatch: potential has {pot['r'].size} rows, solution {sol['r'].size}"
        )
    if np.max(np.abs(pot["r"] - sol["r"])) > 0.0:
        raise ConfigError("grid mismatch: r columns differ")
    r = pot["r"]
    if r.size < 7:
        raise ConfigError("need at least 7 rows")
    step = (r[-1] - r[0]) / (r.size - 1)
    if np.max(np.abs(r - (r[0] + step * np.arange(r.size)))) > 1e-9 * max(1.0, abs(r[-1])):
        raise ConfigError("grid is not uniform")
    grid = RadialGrid(float(r[0]), float(r[-1]), int(r.size))

    h_expr = _parse_expr(args.h, "--h")
    hf = evaluate_on_grid(h_expr, grid)
    vf = SampledField(grid, pot["V"], np.gradient(pot["V"], grid.step))
    phi = Solution(
        float(args.gamma_sq),
        SampledField(grid, sol["phi"], sol["dphi"]),
        CustomBC(float(sol["phi"][0]), float(sol["dphi"][0]), "left"),
    )
    tol = args.tol if args.tol is not None else verify_mod.default_tolerance()
    rep = verify_mod.residual(vf, hf, phi, tol=tol)
    print(json.dumps({"gamma_sq": float(args.gamma_sq), **rep.to_dict()}, indent=2, sort_keys=True))
    return EXIT_OK if rep.passed else EXIT_RESIDUAL


def cmd_parse_check(args) -> int:
    e = parse(args.expr)
    print(json.dumps({"ok": True, "canonical": str(e), "derivative": str(e.derivative())}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="forge",
        description="Construct exactly solvable radial potentials and verify them.",
    )
    ap.add_argument("--version", action="version", version=f"solvforge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a job from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out-dir", default=None, help="override the output directory")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="re-verify exported CSV artifacts")
    p_ver.add_argument("potential", help="potential CSV (header r,V)")
    p_ver.add_argument("solution", help="solution CSV (header r,phi,dphi)")
    p_ver.add_argument("--h", required=True, help="weight function expression")
    p_ver.add_argument("--gamma-sq", type=float, required=True, dest="gamma_sq")
    p_ver.add_argument("--tol", type=float, default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_pc = sub.add_parser("parse-check", help="parse an expression and print its derivative")
    p_pc.add_argument("expr")
    p_pc.set_defaults(func=cmd_parse_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExprSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _STRUCTURAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
