"""Command line entry point: ``renarea {catalog,solve,renormalize,verify,suite}``.

Exit status: 0 success, 2 configuration error, 3 solver failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .scenarios import ConfigError, RunConfig, list_catalog, load_catalog, load_config

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4
log = logging.getLogger("renarea")


class SolverFailure(RuntimeError):
    pass


def write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def dump_json(path, obj):
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def max_workers():
    try:
        return max(1, int(os.environ.get("RENAREA_WORKERS", "1")))
    except ValueError:
        return 1


# -- pipeline ------------------------------------------------------------------

def solve(cfg: RunConfig, catalog):
    from .solver import SolverError, solve_cohomogeneity_one
    scn = cfg.scenario_obj(catalog)
    try:
        res = solve_cohomogeneity_one(scn)
    except (SolverError, ValueError, FloatingPointError) as exc:
        raise SolverFailure(str(exc)) from exc
    return scn, res


def solve_summary(scn, res):
    from .solver import profile_residuals
    return dict(
        scenario=scn.name, k=scn.k, p1=scn.p1, p2=scn.p2, psi0=scn.psi0, eta=scn.eta,
        r_min=scn.r_min, r_0=scn.r_0, n_r=scn.n_r,
        residual_norm=res.residual_norm, profile_residual=profile_residuals(res),
        collapse_info=_plain(res.collapse_info),
        branches=[dict(start_kind=b.start_kind, start_value=b.start_value, mismatch=b.mismatch,
                       collapse=b.collapse, chi=b.chi) for b in res.branches],
    )


def _plain(x):
    from .verify import _plain as p
    return p(x)


def _dir(cfg):
    return os.path.join(cfg.directory, cfg.scenario)


def run_solve(cfg, catalog):
    entry = cfg.entry(catalog)
    if entry.boundary == "none":
        dump_json(os.path.join(_dir(cfg), "solve.json"), dict(scenario=cfg.scenario, note="ambient only"))
        return None, None
    scn, res = solve(cfg, catalog)
    dump_json(os.path.join(_dir(cfg), "solve.json"), solve_summary(scn, res))
    return scn, res


def run_renormalize(cfg, catalog, scn=None, res=None):
    from .geometry import normal_form_orbit
    from .renormalization import (
        EpsilonLadderFit, fit_expansion, laplacian_ladder, renormalized_volume_4d,
        write_ladder_csv, _quad_for,
    )
    entry = cfg.entry(catalog)
    eps = cfg.ladder()
    fits: dict[str, EpsilonLadderFit] = {}
    if entry.boundary == "none":
        fits["volume"] = renormalized_volume_4d(normal_form_orbit(2, 0), eps)
    else:
        if res is None:
            scn, res = run_solve(cfg, catalog)
        q, _ = _quad_for(scn, res, eps)
        basis = (-3, -1, 0, 1, 2) if scn.k == 4 else (-1, 0, 1, 2)
        fits["area"] = fit_expansion(eps, q.integral_above(None, eps), basis, diagnose=(-2,))
        fits["bo2"] = fit_expansion(eps, q.integral_above("bosq", eps), (-1, 0, 1, 2))
        fits["lap_bo2"] = fit_expansion(eps, laplacian_ladder(q), (-1, 0, 1, 2))
        if scn.k == 4:
            fits["boundary_term"] = fit_expansion(eps, q.boundary_integral("bdry_literal"), basis)
    d = _dir(cfg)
    if "csv" in cfg.formats:
        for name, f in fits.items():
            write_ladder_csv(os.path.join(d, f"ladder_{name}.csv"), f)
    dump_json(os.path.join(d, "fits.json"), {k: f.to_dict() for k, f in fits.items()})
    return scn, res, fits


def run_verify(cfg, catalog, scn=None, res=None):
    from .geometry import normal_form_orbit
    from .verify import REPORTS, verify_anderson_4d
    entry = cfg.entry(catalog)
    eps = cfg.ladder()
    reports = []
    for ident in cfg.requested(catalog):
        if ident == "anderson_4d":
            rep = verify_anderson_4d(normal_form_orbit(2, 0), chi=entry.chi_hint or 1, eps=eps)
        else:
            if res is None:
                scn, res = run_solve(cfg, catalog)
            fn = REPORTS[ident]
            if ident in ("lemma_4_1", "conformal_invariance"):
                rep = fn(scn, res, seed=cfg.seed)
            elif ident == "sc_pointwise":
                rep = fn(scn, res)
            else:
                rep = fn(scn, res, eps=eps)
        rep.provenance["seed"] = cfg.seed
        dump_json(os.path.join(_dir(cfg), f"report_{ident}.json"), rep.to_dict())
        reports.append(rep)
        log.info("%s %s: residual %.3e tolerance %.3e %s", cfg.scenario, ident, rep.residual,
                 rep.tolerance, "PASS" if rep.passed else "FAIL")
    summary = {r.identity_id: dict(passed=r.passed, residual=r.residual, tolerance=r.tolerance)
               for r in reports}
    dump_json(os.path.join(_dir(cfg), "summary.json"), summary)
    return reports


def run_suite_entry(args):
    cfg_kwargs, catalog_path = args
    catalog = load_catalog(catalog_path)
    cfg = RunConfig(**cfg_kwargs).validate(catalog)
    try:
        scn, res = run_solve(cfg, catalog)
        run_renormalize(cfg, catalog, scn, res)
        reports = run_verify(cfg, catalog, scn, res)
    except SolverFailure as exc:
        return cfg.scenario, "solver", str(exc)
    return cfg.scenario, "ok", {r.identity_id: r.passed for r in reports}


# -- argument handling --------------------------------------------------------

def _common(p):
    p.add_argument("config", nargs="?", help="run configuration (TOML)")
    p.add_argument("--scenario", help="catalog entry id")
    p.add_argument("--catalog", help="catalog file (default: packaged catalog)")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-0", type=float)
    p.add_argument("--n-r", type=int)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--ladder-count", type=int)
    p.add_argument("--ladder-ratio", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--verifications", help="comma separated identity ids")


def build_parser():
    ap = argparse.ArgumentParser(prog="renarea", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("catalog", help="list catalog entries and their validation status")
    c.add_argument("--catalog")
    c.add_argument("--json", action="store_true")
    for name, text in (("solve", "solve the minimal hypersurface"),
                       ("renormalize", "write ladder tables and fits"),
                       ("verify", "run the requested identity checks")):
        _common(sub.add_parser(name, help=text))
    s = sub.add_parser("suite", help="solve, renormalize and verify every catalog entry")
    s.add_argument("--catalog")
    s.add_argument("--out", default="renarea-out")
    s.add_argument("--scenarios", help="comma separated subset of catalog ids")
    s.add_argument("--seed", type=int, default=0)
    return ap


def config_from_args(a) -> RunConfig:
    cfg = load_config(a.config) if a.config else None
    if cfg is None:
        if not a.scenario:
            raise ConfigError("give a config file or --scenario")
        cfg = RunConfig(scenario=a.scenario)
    elif a.scenario:
        cfg.scenario = a.scenario
    pairs = dict(r_min=a.r_min, r_0=a.r_0, n_r=a.n_r, eps_max=a.eps_max, count=a.ladder_count,
                 ratio=a.ladder_ratio, directory=a.out, seed=a.seed)
    for k, v in pairs.items():
        if v is not None:
            setattr(cfg, k, v)
    if a.verifications:
        cfg.verifications = tuple(s.strip() for s in a.verifications.split(",") if s.strip())
    return cfg


def main(argv=None):
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    logging.getLogger("jax").setLevel(logging.WARNING)
    try:
        if a.command == "catalog":
            rows = list_catalog(a.catalog)
            if a.json:
                print(json.dumps(rows, indent=2, sort_keys=True))
            else:
                print(f"{'id':<20} {'ambient':<27} {'boundary':<18} {'eta':>10}  check")
                for r in rows:
                    print(f"{r['id']:<20} {r['ambient']:<27} {r['boundary']:<18} {r['eta']:>10.3e}  "
                          f"{'ok' if r['valid'] else 'FAIL'}: {r['eta_check']}")
            return EXIT_OK
        if a.command == "suite":
            return suite(a)
        catalog = load_catalog(a.catalog)
        cfg = config_from_args(a).validate(catalog)
        if a.command == "solve":
            run_solve(cfg, catalog)
            return EXIT_OK
        if a.command == "renormalize":
            run_renormalize(cfg, catalog)
            return EXIT_OK
        reports = run_verify(cfg, catalog)
        for r in reports:
            print(f"{r.identity_id:<22} {'PASS' if r.passed else 'FAIL'}  residual {r.residual:.3e}  "
                  f"tolerance {r.tolerance:.3e}")
        return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def suite(a):
    catalog = load_catalog(a.catalog)
    ids = [s.strip() for s in a.scenarios.split(",")] if a.scenarios else list(catalog)
    unknown = set(ids) - set(catalog)
    if unknown:
        raise ConfigError(f"unknown scenarios {sorted(unknown)}")
    jobs = [(dict(scenario=i, directory=a.out, seed=a.seed), a.catalog) for i in ids]
    if max_workers() > 1:
        with ProcessPoolExecutor(max_workers=max_workers()) as ex:
            results = list(ex.map(run_suite_entry, jobs))
    else:
        results = [run_suite_entry(j) for j in jobs]
    status = EXIT_OK
    table = {}
    for sid, kind, payload in results:
        table[sid] = dict(status=kind, reports=payload if kind == "ok" else {}, error=None if kind == "ok" else payload)
        if kind == "solver":
            print(f"{sid:<20} SOLVER FAILURE  {payload}")
            status = max(status, EXIT_SOLVER) if status != EXIT_VERIFY else status
            continue
        for ident, ok in payload.items():
            print(f"{sid:<20} {ident:<22} {'PASS' if ok else 'FAIL'}")
            if not ok:
                status = EXIT_VERIFY
    dump_json(os.path.join(a.out, "suite.json"), table)
    return status


if __name__ == "__main__":
    sys.exit(main())
