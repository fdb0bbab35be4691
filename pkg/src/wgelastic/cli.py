"""Command-line entry point: convergence studies and property suites.

    wgelastic --family tri --k 1 --lambda 1 --levels 5..7 --solution e1
    wgelastic --suite properties
    wgelastic --config study.ini --levels 3..4

A config file is INI-style with a ``[study]`` section whose keys are the long
flag names (``family = ncpoly2d``, ``lambda = 1e5``, ...).  Flags given on the
command line override the file.

Exit codes: 0 success, 1 some solve was flagged non-converged or a property
check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import re
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    StudyConfig,
    check_commutation,
    check_norm_equivalence,
    convergence_study,
    emit_table,
    energy_error,
    l2_error,
)
from .linsolve import cg_solve, dense_cholesky_solve
from .polymesh import GENERATORS
from .solutions import get_solution
from .system import assemble
from .weakops import InvalidDegreeError

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FLAGGED, EXIT_CONFIG = 0, 1, 2

# defaults applied after the config file and the flags have been merged
DEFAULTS = {
    "family": "tri",
    "levels": "2..4",
    "k": "1",
    "mu": "1.0",
    "lambda": "1.0",
    "solution": None,  # e1 in 2D, e3 in 3D
    "degree_policy": "paper",
    "r1": None,
    "r2": None,
    "quad_oversample": None,
    "solver": "direct",
    "solver_tol": "1e-12",
    "maxit": None,
    "precond": "jacobi",
    "seed": "0",
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wgelastic", description="Stabilizer-free weak Galerkin elasticity benchmarks")
    p.add_argument("--config", help="INI file with a [study] section")
    p.add_argument("--family", help="tri | ncpoly2d | tet3d | file:<path>")
    p.add_argument("--levels", help="inclusive range like 5..7, or a comma list")
    p.add_argument("--k", help="polynomial degree, 1..4")
    p.add_argument("--mu")
    p.add_argument("--lambda", dest="lambda_")
    p.add_argument("--solution", help="e1 | e3 | polynomial-patch:<degree>")
    p.add_argument("--degree-policy", help="paper | override | override:<r1>,<r2>")
    p.add_argument("--r1")
    p.add_argument("--r2")
    p.add_argument("--quad-oversample")
    p.add_argument("--solver", help="direct | cg | cholesky")
    p.add_argument("--solver-tol")
    p.add_argument("--maxit")
    p.add_argument("--precond", help="jacobi | none")
    p.add_argument("--seed")
    p.add_argument("--suite", choices=["properties"])
    p.add_argument("--csv", help="write the report as CSV to this path")
    p.add_argument("--md", help="write the markdown table to this path")
    p.add_argument("--dump-matrix", help="directory for A.mtx / rhs.txt of the first level")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_levels(text: str) -> tuple[int, ...]:
    text = text.strip()
    m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"empty level range {text!r}")
        return tuple(range(lo, hi + 1))
    try:
        levels = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"cannot parse levels {text!r}") from None
    if not levels or min(levels) < 1:
        raise ConfigError(f"levels must be positive integers, got {text!r}")
    return levels


def _read_config_file(path) -> dict:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not cp.has_section("study"):
        raise ConfigError(f"config {path} has no [study] section")
    out = {}
    for key, value in cp.items("study"):
        key = key.replace("-", "_")
        if key not in DEFAULTS and key not in ("csv", "md", "dump_matrix"):
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
    return out


def merge_settings(args) -> dict:
    """Defaults < config file < command-line flags."""
    settings = dict(DEFAULTS)
    settings.update(csv=None, md=None, dump_matrix=None)
    if args.config:
        settings.update(_read_config_file(args.config))
    flags = vars(args).copy()
    flags["lambda"] = flags.pop("lambda_")
    for key, value in flags.items():
        if key in settings and value is not None:
            settings[key] = value
    return settings


def _opt(cast, value, name):
    if value is None:
        return None
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {name}: {value!r}") from None


def config_from_settings(s: dict) -> StudyConfig:
    policy = s["degree_policy"]
    r1, r2 = _opt(int, s["r1"], "r1"), _opt(int, s["r2"], "r2")
    m = re.fullmatch(r"override:\(?\s*(\d+)\s*,\s*(\d+)\s*\)?", policy or "")
    if m:
        policy, r1, r2 = "override", int(m.group(1)), int(m.group(2))
    family = s["family"]
    if family not in GENERATORS and not family.startswith("file:"):
        raise ConfigError(f"unknown mesh family {family!r}")
    solution = s["solution"] or ("e3" if family == "tet3d" else "e1")
    if s["solver"] not in ("direct", "cg", "cholesky"):
        raise ConfigError(f"unknown solver {s['solver']!r}")
    if s["precond"] not in ("jacobi", "none"):
        raise ConfigError(f"unknown preconditioner {s['precond']!r}")
    cfg = StudyConfig(
        family=family,
        levels=parse_levels(s["levels"]),
        k=_opt(int, s["k"], "k"),
        mu=_opt(float, s["mu"], "mu"),
        lam=_opt(float, s["lambda"], "lambda"),
        solution=solution,
        degree_policy=policy,
        r1=r1,
        r2=r2,
        quad_oversample=_opt(int, s["quad_oversample"], "quad-oversample"),
        solver=s["solver"],
        solver_tol=_opt(float, s["solver_tol"], "solver-tol"),
        maxit=_opt(int, s["maxit"], "maxit"),
        precond=s["precond"],
        seed=_opt(int, s["seed"], "seed"),
    )
    try:
        cfg.validate()
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def run_study(cfg: StudyConfig, settings: dict, out=sys.stdout) -> int:
    if settings.get("dump_matrix"):
        mesh = cfg.mesh(cfg.levels[0])
        exact = get_solution(cfg.solution, mesh.dim, cfg.mu, cfg.lam, cfg.seed)
        system = assemble(mesh, cfg.k, cfg.mu, cfg.lam, exact.f, exact.u,
                          policy=cfg.degree_policy, r1=cfg.r1, r2=cfg.r2,
                          oversample=cfg.quad_oversample)
        system.dump(settings["dump_matrix"])
    report = convergence_study(cfg)
    table = emit_table(report, "md")
    print(table, file=out)
    if settings.get("md"):
        Path(settings["md"]).write_text(table + "\n", encoding="utf-8")
    if settings.get("csv"):
        Path(settings["csv"]).write_text(report.to_csv(), encoding="utf-8")
    return EXIT_OK if report.all_converged else EXIT_FLAGGED


def property_suite(seed: int = 0, out=sys.stdout) -> bool:
    """Commutation, norm equivalence, patch tests and SPD/solver agreement on
    small meshes.  Prints one line per check and returns overall success."""
    ok_all = True

    def report(name, ok, detail):
        nonlocal ok_all
        ok_all &= bool(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)

    meshes = {"tri": GENERATORS["tri"](2), "ncpoly2d": GENERATORS["ncpoly2d"](2),
              "tet3d": GENERATORS["tet3d"](1)}
    for fam, mesh in meshes.items():
        for k in ((1, 2) if fam == "tet3d" else (1, 2, 3, 4)):
            dev = check_commutation(mesh, k, n_samples=5, seed=seed).max_deviation
            report(f"commutation {fam} k={k}", dev <= 1e-10, f"max deviation {dev:.2e}")

    for fam in ("tri", "ncpoly2d"):
        for k in (1, 2):
            bands = [check_norm_equivalence(assemble(GENERATORS[fam](L), k, 1.0, 1.0), 20, seed)
                     for L in (1, 2)]
            ok = bands[1].max <= 1.5 * bands[0].max and bands[1].min > 0
            report(f"norm equivalence {fam} k={k}", ok,
                   " ".join(f"[{b.min:.3g}, {b.max:.3g}]" for b in bands))

    for fam, mesh in meshes.items():
        k = 2
        exact = get_solution(f"polynomial-patch:{k}", mesh.dim, 1.0, 1.0, seed)
        system = assemble(mesh, k, 1.0, 1.0, exact.f, exact.u)
        x = system.expand(dense_cholesky_solve(system.A, system.rhs))
        scale = max(1.0, float(np.abs(system.boundary_values).max()))
        e0, e1 = l2_error(system, x, exact) / scale, energy_error(system, x, exact) / scale
        report(f"patch test {fam} k={k}", max(e0, e1) <= 1e-8, f"L2 {e0:.1e} energy {e1:.1e}")

    for fam, mesh in meshes.items():
        exact = get_solution("e3" if mesh.dim == 3 else "e1", mesh.dim, 1.0, 1.0)
        system = assemble(mesh, 1, 1.0, 1.0, exact.f, exact.u)
        A = system.A
        asym = abs(A - A.T).max() / abs(A).max()
        eig_min = float(np.linalg.eigvalsh(A.toarray()).min())
        x_cg, _ = cg_solve(A, system.rhs, tol=1e-13)
        x_ch = dense_cholesky_solve(A, system.rhs)
        rel = np.linalg.norm(x_cg - x_ch) / np.linalg.norm(x_ch)
        ok = asym <= 1e-12 and eig_min > 0 and rel <= 1e-9
        report(f"SPD and solver agreement {fam}", ok,
               f"asymmetry {asym:.1e}, min eigenvalue {eig_min:.2e}, CG vs Cholesky {rel:.1e}")
    return ok_all


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        settings = merge_settings(args)
        if args.suite == "properties":
            seed = _opt(int, settings["seed"], "seed")
            return EXIT_OK if property_suite(seed, out) else EXIT_FLAGGED
        cfg = config_from_settings(settings)
    except ConfigError as exc:
        print(f"wgelastic: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_study(cfg, settings, out)
    except InvalidDegreeError as exc:
        print(f"wgelastic: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
