"""Command-line front end: ``necklace {bands,eigs,gap,solve,simulate,verify}``.

Exit codes: 0 ok, 2 usage, 3 certification failure, 4 non-convergence.
Options can also come from an INI file (``--config``); each subcommand reads
its own section plus ``[common]``, and explicit flags win.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .exceptions import CertificationError, ConvergenceError
from .gapcheck import (FrequencyConfig, delta_sqrt, delta_star, minimal_kappa,
                       smallest_certified_kappa)
from .graph import NecklaceGrid
from .spectrum import (SUP_BOUND, band_closed_form, band_from_monodromy, bloch_eigenfunction,
                       hill_discriminant)

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_CONVERGENCE = 0, 2, 3, 4
VERIFY_TOL = 1e-9

log = logging.getLogger("necklace")


class UsageError(Exception):
    pass


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def _manifest(args, inputs=(), tolerances=None, certificate=None) -> io.RunManifest:
    return io.RunManifest(args.command, _echo(args), list(inputs), tolerances or {},
                          args.threads, certificate)


def _finish(man: io.RunManifest, out: Path, outputs) -> str:
    man.outputs = [str(p) for p in outputs]
    path = out.with_name(out.stem + ".manifest.json")
    man.write(path)
    return path.name


def _write_csv(path: Path, header, rows, comment: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# -- bands / eigs ------------------------------------------------------------

def cmd_bands(args) -> int:
    m_lo, m_hi = args.mrange
    if m_hi < m_lo:
        raise UsageError("empty m-range")
    if args.lsamples < 2:
        raise UsageError("--lsamples must be >= 2")
    out = Path(args.out)
    man = _manifest(args, tolerances={"cross_check": 1e-8})
    worst = 0.0
    rows = []
    for m in range(m_lo, m_hi + 1):
        for l in np.linspace(-0.5, 0.5, args.lsamples):
            le = 0.5 if l <= -0.5 else float(l)  # a(l) is 1-periodic and even
            bp = band_closed_form(m, le)
            row = [m, repr(float(l)), repr(float(bp.lam)), repr(float(bp.a_of_l)),
                   repr(float(hill_discriminant(bp.lam)))]
            if args.cross_check:
                lam_m = band_from_monodromy(m, le).lam
                worst = max(worst, abs(lam_m - bp.lam))
                row.append(repr(float(lam_m)))
            rows.append(row)
    header = ["m", "l", "lambda", "a_of_l", "trM_of_lambda"]
    if args.cross_check:
        header.append("lambda_monodromy")
    mname = out.with_name(out.stem + ".manifest.json").name
    _write_csv(out, header, rows, f"manifest: {mname}; l dimensionless, lambda in 1/length^2")
    _finish(man, out, [out])
    if args.cross_check:
        print(f"max |closed form - monodromy| = {worst:.3e}")
        if worst > 1e-8:
            return EXIT_CERT
    return EXIT_OK


def cmd_eigs(args) -> int:
    if not -0.5 < args.l <= 0.5:
        raise UsageError("l must lie in (-1/2, 1/2]")
    out = Path(args.out)
    man = _manifest(args)
    phi = bloch_eigenfunction(args.m, args.l)
    y = np.linspace(0, np.pi, args.samples)
    rows = []
    for edge in ("0", "+", "-"):
        vals = phi.evaluate("+" if edge == "-" else edge, y)
        x0 = 0.0 if edge == "0" else np.pi
        rows += [[edge, repr(float(yy)), repr(float(yy + x0)),
                  repr(float(v.real)), repr(float(v.imag))]
                 for yy, v in zip(y, vals)]
    mname = out.with_name(out.stem + ".manifest.json").name
    _write_csv(out, ["edge", "y", "x", "re", "im"], rows, f"manifest: {mname}; x in length units")
    summary = {"m": phi.m, "l": phi.l, "lambda": phi.lam, "sup_norm": phi.sup_norm(),
               "sup_bound": SUP_BOUND, "phase": phi.phase,
               "eigenspace_dim": len(phi.eigenspace), "residuals": phi.residuals()}
    print(json.dumps(summary, indent=2))
    _finish(man, out, [out])
    return EXIT_OK


# -- gap -----------------------------------------------------------------------

def cmd_gap(args) -> int:
    A = args.alpha if args.A is None else args.A
    if A < args.alpha or args.alpha < 0:
        raise UsageError("need A >= alpha >= 0")
    kmin = minimal_kappa(args.k0, A, args.alpha)
    kappa = args.kappa or kmin
    cfg = FrequencyConfig(k0=args.k0, kappa=kappa, alpha=args.alpha, A=A)
    cert = delta_star(cfg)
    try:
        dl = delta_sqrt(cfg)
    except ValueError:
        dl = None
    out = Path(args.out)
    man = _manifest(args, certificate=None)
    doc = {
        "delta_star": cert.delta_star, "delta": dl, "delta0": cert.delta0,
        "kappa": kappa, "kappa_min": kmin,
        "kappa_scan": smallest_certified_kappa(args.k0, args.alpha),
        "worst_pair": cert.worst_pair, "k_enum": cert.k_enum, "tail_bound": cert.tail_bound,
        "certified": bool(cert.delta_star > 0 and dl is not None and dl > 0),
        "manifest": out.with_name(out.stem + ".manifest.json").name,
    }
    doc = io._jsonable(doc)
    io.validate(doc, "gap")
    man.certificate = {"delta_star": cert.delta_star, "certified": doc["certified"]}
    out.write_text(json.dumps(doc, indent=2))
    _finish(man, out, [out])
    print(json.dumps(doc, indent=2))
    return EXIT_OK if doc["certified"] else EXIT_CERT


# -- solve / verify ------------------------------------------------------------------

def _solve_config(args) -> FrequencyConfig:
    A = args.alpha if args.A is None else args.A
    kappa = minimal_kappa(args.k0, A, args.alpha) if args.auto_kappa else args.kappa
    return FrequencyConfig(k0=args.k0, kappa=kappa, alpha=args.alpha, A=A, p=args.p,
                           K=kappa * (2 * args.harmonics - 1))


def cmd_solve(args) -> int:
    from .solver import ModalOperators, nehari_minimize, newton_solve, seed_field

    cfg = _solve_config(args)
    grid = NecklaceGrid(args.cells, args.points, args.boundary, symmetric=True)
    ops = ModalOperators(cfg, grid, force_uncertified=args.force_uncertified)
    start = seed_field(cfg, grid, width=args.seed_width, nt=args.nt)
    if args.seed is not None:
        rng = np.random.default_rng(args.seed)
        start.coeffs += args.seed_noise * rng.standard_normal(start.coeffs.shape)
    if args.method == "nehari":
        state = nehari_minimize(cfg, start, ops, args.sign, tol_outer=args.tol_outer,
                                tol_inner=args.tol_inner)
    else:
        state = newton_solve(cfg, start, ops, args.sign, tol=args.tol_newton)
    out = Path(args.out)
    man = _manifest(args, tolerances={"outer": args.tol_outer, "inner": args.tol_inner,
                                      "newton": args.tol_newton},
                    certificate={"delta_star": ops.certificate.delta_star,
                                 "discrete_gap": ops.discrete_gap})
    mname = out.with_name(out.stem + ".manifest.json").name
    io.write_breather(state, out, manifest=mname)
    _finish(man, out, [out, out.with_suffix(".csv")])
    d = state.diagnostics
    print(json.dumps({k: d[k] for k in ("pde_residual", "nehari_self", "nehari_minus",
                                        "J_value", "tail_fraction")}, indent=2))
    return EXIT_OK


def recompute(state):
    from .solver import ModalOperators, compute_diagnostics

    f = state.field
    ops = ModalOperators(f.config, f.grid, force_uncertified=True)
    return compute_diagnostics(f, ops, state.sign, state.diagnostics.get("tail_cell"))


def compare_diagnostics(stored: dict, fresh: dict, tol: float = VERIFY_TOL) -> dict:
    bad = {}
    for key, new in fresh.items():
        old = stored.get(key)
        if old is None:
            continue
        a, b = np.asarray(old, dtype=float), np.asarray(new, dtype=float)
        err = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))) if a.size else 0.0
        if err > tol:
            bad[key] = err
    return bad


def cmd_verify(args) -> int:
    state = io.read_breather(args.input)
    fresh = recompute(state)
    bad = compare_diagnostics(state.diagnostics, fresh)
    print(json.dumps({"input": args.input, "mismatches": bad, "reproduced": not bad,
                      "pde_residual": fresh["pde_residual"]}, indent=2))
    return EXIT_OK if not bad else EXIT_CERT


# -- simulate -----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .timesim import simulate

    state = io.read_breather(args.input)
    f = state.field
    dt = args.dt or f.grid.step / 2
    if np.allclose(f.coeffs, 0):
        t = np.linspace(0, args.periods * f.ansatz_period, 2)
        rows = np.column_stack([t, np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2)])
    else:
        rows, _ = simulate(state, dt, args.periods, every=args.every)
    out = Path(args.observables)
    man = _manifest(args, inputs=[args.input], tolerances={"dt": dt})
    mname = out.with_name(out.stem + ".manifest.json").name
    _write_csv(out, ["t", "energy", "l2_norm", "tail_mass", "return_gap"],
               [[repr(float(v)) for v in r] for r in rows],
               f"manifest: {mname}; t in time units, energy in action/time, tail_mass and return_gap relative")
    _finish(man, out, [out])
    drift = abs(rows[-1, 1] - rows[0, 1]) / abs(rows[0, 1]) if rows[0, 1] else 0.0
    print(json.dumps({"records": len(rows), "t_end": rows[-1, 0], "return_gap": rows[-1, 4], "energy_drift": drift}))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [common] and per-command sections")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="necklace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bands", parents=[common], help="band table")
    b.add_argument("--mrange", type=int, nargs=2, default=[-3, 3], metavar=("MLO", "MHI"))
    b.add_argument("--lsamples", type=int, default=257)
    b.add_argument("--cross-check", action="store_true")
    b.add_argument("--out", default="bands.csv")
    b.set_defaults(func=cmd_bands)

    e = sub.add_parser("eigs", parents=[common], help="one Bloch eigenfunction")
    e.add_argument("--m", type=int, default=0)
    e.add_argument("--l", type=float, default=0.0)
    e.add_argument("--samples", type=int, default=65)
    e.add_argument("--out", default="eig.csv")
    e.set_defaults(func=cmd_eigs)

    g = sub.add_parser("gap", parents=[common], help="non-resonance certificate")
    g.add_argument("--k0", type=int, default=1)
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--A", type=float, default=None)
    g.add_argument("--kappa", type=int, default=None)
    g.add_argument("--out", default="gap.json")
    g.set_defaults(func=cmd_gap)

    s = sub.add_parser("solve", parents=[common], help="compute a breather")
    s.add_argument("--p", type=float, default=3.0)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--A", type=float, default=None)
    s.add_argument("--k0", type=int, default=1)
    s.add_argument("--kappa", type=int, default=1)
    s.add_argument("--auto-kappa", action="store_true")
    s.add_argument("--harmonics", type=int, default=4, help="J, number of odd harmonics")
    s.add_argument("--cells", type=int, default=24, help="N, cells -N..N")
    s.add_argument("--points", type=int, default=24, help="M, intervals per edge")
    s.add_argument("--boundary", choices=["periodic_cells", "dirichlet_truncation"],
                   default="periodic_cells")
    s.add_argument("--nt", type=int, default=0, help="collocation times (0: 4J)")
    s.add_argument("--sign", choices=["focusing", "defocusing"], default="focusing")
    s.add_argument("--method", choices=["nehari", "newton"], default="nehari")
    s.add_argument("--tol-outer", type=float, default=1e-10)
    s.add_argument("--tol-inner", type=float, default=1e-11)
    s.add_argument("--tol-newton", type=float, default=1e-10)
    s.add_argument("--seed", type=int, default=None, help="RNG seed for a perturbed start")
    s.add_argument("--seed-noise", type=float, default=1e-3)
    s.add_argument("--seed-width", type=float, default=4.0)
    s.add_argument("--force-uncertified", action="store_true")
    s.add_argument("--out", default="breather.json")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", parents=[common], help="Verlet run from breather data")
    m.add_argument("--input", required=True)
    m.add_argument("--dt", type=float, default=None, help="time step (default h/2)")
    m.add_argument("--periods", type=float, default=1.0)
    m.add_argument("--every", type=int, default=1, help="record every n steps")
    m.add_argument("--observables", default="observables.csv")
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="recompute stored diagnostics")
    v.add_argument("--input", required=True)
    v.set_defaults(func=cmd_verify)
    return p


def _apply_config_file(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cp = configparser.ConfigParser()
    if not cp.read(known.config):
        raise UsageError(f"cannot read config file {known.config}")
    cmd = next((a for a in argv if not a.startswith("-")), None)
    sub = parser._subparsers._group_actions[0].choices.get(cmd)
    if sub is None:
        return
    values = {}
    for section in ("common", cmd):
        if cp.has_section(section):
            values.update(cp[section])
    defaults = {}
    for action in sub._actions:
        key = action.dest
        raw = values.get(key, values.get(key.replace("_", "-")))
        if raw is None:
            continue
        if action.nargs in (2, "+", "*"):
            defaults[key] = [action.type(x) if action.type else x for x in raw.split()]
        elif action.const is True or isinstance(action, argparse._StoreTrueAction):
            defaults[key] = cp.BOOLEAN_STATES[raw.lower()]
        else:
            defaults[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificationError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
