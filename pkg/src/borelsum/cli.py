"""Command-line front end.

    borelsum <command> --problem <path> --out <dir> [--set key=value ...]

Commands:

    check           parse the problem, run the structural-constraint and
                    spectral-cone checks
    normalize       parse a raw scalar quasilinear equation and write the
                    normalized first-order system as a problem spec
    series          exact large-x asymptotic expansion of the solution
    solve-borel     solve the Borel-plane fixed-point equation
    resum           solve, then Laplace-resum onto an x-grid
    accelerate      apply the order-n acceleration kernel to the Borel
                    solution (requires --set growth_nu=...)
    harry-dym       moving-singularity case study: series coefficients,
                    residual structure, optionally the rescaled solve
    oracle-compare  cross-check the resummed solution against the
                    method-of-lines reference integrator

All artifacts are written under --out together with `manifest.json`
listing their SHA-256 checksums; identical inputs produce byte-identical
artifacts.  Exit status: 0 success, 1 validation failure, 2 numerical
failure.  `--set key=value` overrides solver-configuration fields (nu,
tol, grid_nodes, p_max, quad_order, time_quad_order, s_max, theta_cap,
max_iters, ray, ...) and per-command knobs documented below.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from fractions import Fraction

import numpy as np

from .grid import RayGridFunction
from .oracle import OracleConfig, oracle_integrate
from .probspec import ParseError, parse_problem, parse_raw_problem, \
    write_problem
from .problem import check_cone_condition, formal_series_solve, normalize, \
    validate_constraint
from .solver import SolveConfig, solve
from .transforms import AccelerationSpec, accelerate, laplace_ray
from ._phi import TimeGrid

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


# ---------------------------------------------------------------------------
# artifact plumbing

def _fmt(v):
    """Deterministic cell formatting: shortest round-trip repr for floats."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


class Artifacts:
    """Collects output files and writes a checksum manifest."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def _write(self, name, text):
        path = os.path.join(self.out_dir, name)
        data = text.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        self.files.append((name, hashlib.sha256(data).hexdigest()))

    def write_text(self, name, text):
        self._write(name, text)

    def write_json(self, name, obj):
        self._write(name, json.dumps(_jsonable(obj), indent=2,
                                     sort_keys=True) + "\n")

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        self._write(name, "\n".join(lines) + "\n")

    def finish(self):
        manifest = {name: digest for name, digest in sorted(self.files)}
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# option handling

def _parse_overrides(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ParseError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out

def _pop(overrides, key, conv, default):
    if key in overrides:
        return conv(overrides.pop(key))
    return default


def _solve_config(overrides, base=None):
    """Build a SolveConfig from --set overrides, consuming matched keys."""
    kwargs = {}
    for f in dataclasses.fields(SolveConfig):
        if f.name not in overrides:
            continue
        raw = overrides.pop(f.name)
        if f.name == "theta_cap":
            kwargs[f.name] = Fraction(raw)
        elif f.name in ("max_iters", "grid_nodes", "quad_order",
                        "time_quad_order"):
            kwargs[f.name] = int(raw)
        elif f.name == "epsilon_guard":
            kwargs[f.name] = raw.lower() not in ("0", "false", "no")
        else:
            kwargs[f.name] = float(raw)
    if base is not None:
        return dataclasses.replace(base, **kwargs)
    return SolveConfig(**kwargs)


def _reject_unknown(overrides):
    if overrides:
        raise ParseError("unknown --set key(s): "
                         + ", ".join(sorted(overrides)))


# ---------------------------------------------------------------------------
# shared numerical steps

def _final_time_functions(problem, F):
    return [RayGridFunction(F[l].grid, F[l].values[:, -1],
                            F[l].origin_exponent)
            for l in range(problem.m)]


def _resum_table(problem, F, config, xs):
    """Resummed solution at the solver's time nodes on the x-grid `xs`.

    Returns (times, values) with values indexed (component, time, x).
    """
    tg = TimeGrid(problem.horizon, config.time_quad_order)
    times = tg.nodes
    values = np.empty((problem.m, len(times), len(xs)), dtype=complex)
    for l in range(problem.m):
        for j in range(len(times)):
            col = RayGridFunction(F[l].grid, F[l].values[:, j],
                                  F[l].origin_exponent)
            for i, x in enumerate(xs):
                values[l, j, i] = laplace_ray(col, x)
    return times, values


# ---------------------------------------------------------------------------
# commands

def _cmd_check(problem, art, overrides):
    _reject_unknown(overrides)
    violations = validate_constraint(problem)
    try:
        cone = check_cone_condition(problem.symbol, problem.sector.phi)
        cone_payload = {"ok": cone.ok, "C": cone.C, "R": cone.R,
                        "worst_ray": cone.worst_ray,
                        "message": cone.message}
    except ValueError as exc:
        cone_payload = {"ok": False, "message": str(exc)}
    ok = not violations and cone_payload["ok"]
    art.write_json("check.json", {
        "name": problem.name, "d": problem.d, "n": problem.n,
        "m": problem.m, "alpha_r": problem.alpha_r,
        "violations": violations, "cone": cone_payload, "ok": ok})
    lines = [f"problem: {problem.name or '(unnamed)'}",
             f"constraint violations: {len(violations)}"]
    lines += [f"  - {v}" for v in violations]
    lines.append(f"cone condition: "
                 f"{'ok' if cone_payload['ok'] else 'FAILED'}"
                 + (f"  (C = {cone_payload['C']:.6g}, "
                    f"R = {cone_payload['R']:.6g})"
                    if cone_payload["ok"] else
                    f"  ({cone_payload['message']})"))
    art.write_text("summary.txt", "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_normalize(path, art, overrides):
    _reject_unknown(overrides)
    raw = parse_raw_problem(path)
    problem = normalize(raw)
    write_problem(problem, os.path.join(art.out_dir, "normalized.prob"))
    with open(os.path.join(art.out_dir, "normalized.prob"), "rb") as fh:
        data = fh.read()
    art.files.append(("normalized.prob",
                      hashlib.sha256(data).hexdigest()))
    art.write_text("summary.txt",
                   f"normalized scalar equation of order {raw.n} into a "
                   f"{problem.m}-component first-order system with "
                   f"{len(problem.terms)} nonlinear terms\n")
    return EXIT_OK


def _cmd_series(problem, art, overrides):
    order = _pop(overrides, "order", int, 6)
    _reject_unknown(overrides)
    slices = formal_series_solve(problem, order)
    rows = []
    for depth, row in enumerate(slices):
        for l, piece in enumerate(row):
            for e in sorted(piece.terms, reverse=True):
                from ._tpoly import ExpPoly
                c = ExpPoly.coerce(piece.terms[e])
                for mu in sorted(c.terms, key=lambda v: abs(complex(v))):
                    for degree, coeff in enumerate(c.terms[mu]):
                        if coeff == 0:
                            continue
                        cc = complex(coeff)
                        rows.append((depth, l, repr(cc.real), repr(cc.imag),
                                     str(e), degree, str(Fraction(mu))))
    art.write_csv("series.csv",
                  ("depth", "component", "coeff_re", "coeff_im",
                   "exponent", "t_degree", "mu"), rows)
    art.write_text("summary.txt",
                   f"requested depth {order}, converged depth "
                   f"{len(slices)}\n")
    return EXIT_OK


def _cmd_solve_borel(problem, art, overrides):
    config = _solve_config(overrides)
    _reject_unknown(overrides)
    F, report = solve(problem, config)
    _write_solve_report(art, report)
    finals = _final_time_functions(problem, F)
    rows = []
    for l, fin in enumerate(finals):
        for p, v in zip(fin.grid.radii, fin.values):
            rows.append((l, repr(float(p)), repr(float(v.real)),
                         repr(float(v.imag))))
    art.write_csv("borel.csv", ("component", "p", "re_F", "im_F"), rows)
    art.write_text("summary.txt", report.summary() + "\n")
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _write_solve_report(art, report):
    art.write_json("report.json", {
        "iters": report.iters, "converged": report.converged,
        "nu": report.nu, "tol": report.tol,
        "residual": report.residual, "norms": report.norms,
        "diffs": report.diffs,
        "contraction_ratios": report.contraction_ratios,
        "ball_ok": report.ball_ok, "contract_ok": report.contract_ok,
        "epsilon_ok": report.epsilon_ok, "margins": report.margins})


def _x_window(overrides, problem):
    x_min = _pop(overrides, "x_min", float, max(5.0,
                                                2.0 * problem.sector.rho))
    x_max = _pop(overrides, "x_max", float, 4.0 * x_min)
    nx = _pop(overrides, "nx", int, 31)
    return np.linspace(x_min, x_max, nx)


def _cmd_resum(problem, art, overrides):
    xs = _x_window(overrides, problem)
    config = _solve_config(overrides)
    _reject_unknown(overrides)
    F, report = solve(problem, config)
    _write_solve_report(art, report)
    times, values = _resum_table(problem, F, config, xs)
    rows = []
    for l in range(problem.m):
        for j, t in enumerate(times):
            for i, x in enumerate(xs):
                v = values[l, j, i]
                rows.append((l, repr(float(t)), repr(float(x)),
                             repr(float(v.real)), repr(float(v.imag))))
    art.write_csv("resum.csv", ("component", "t", "x", "re_f", "im_f"),
                  rows)
    art.write_text("summary.txt",
                   report.summary() + f"\nresummed on x in "
                   f"[{xs[0]:g}, {xs[-1]:g}] at {len(times)} time nodes\n")
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _cmd_accelerate(problem, art, overrides):
    if "growth_nu" not in overrides:
        print("accelerate: growth certificate required -- pass --set "
              "growth_nu=<order-n exponential rate of the Borel solution>",
              file=sys.stderr)
        return EXIT_VALIDATION
    growth_nu = float(overrides.pop("growth_nu"))
    q_max = _pop(overrides, "q_max", float, 20.0)
    accel_nodes = _pop(overrides, "accel_nodes", int, 24)
    x_values = (2.0, 3.0)
    config = _solve_config(overrides)
    _reject_unknown(overrides)
    F, report = solve(problem, config)
    fin = _final_time_functions(problem, F)[0]
    radii = fin.grid.radii

    def G(q):
        if q <= 0:
            return 0.0
        if q >= radii[-1]:
            return 0.0
        return complex(np.interp(q, radii, fin.values.real)).real

    spec = AccelerationSpec(n=problem.n, q_max=min(q_max, radii[-1]),
                            quad_nodes=accel_nodes)
    from .grid import RayGrid
    p_grid = RayGrid(10.0, 60, grading=3.0)
    result = accelerate(G, spec, p_grid=p_grid, x_values=x_values,
                        growth_nu=growth_nu)
    rows = [(repr(float(p)), repr(float(g.real)), repr(float(g.imag)),
             repr(float(result.kernel_error)))
            for p, g in zip(result.p_grid, result.g1_samples)]
    art.write_csv("accel.csv", ("p", "re_G1", "im_G1", "kernel_error"),
                  rows)
    identity = {repr(float(x)): {"lhs": _jsonable(complex(lhs)),
                                 "rhs": _jsonable(complex(rhs))}
                for x, (lhs, rhs) in result.identity_check.items()}
    art.write_json("accel_identity.json", identity)
    worst = max(abs(complex(l["re"], l["im"])
                    - complex(r["re"], r["im"]))
                for l, r in ((v["lhs"], v["rhs"])
                             for v in identity.values()))
    art.write_text("summary.txt",
                   f"acceleration level n = {problem.n}, kernel error "
                   f"{result.kernel_error:.3e}, worst identity mismatch "
                   f"{worst:.3e}\n")
    return EXIT_OK


def _cmd_harry_dym(art, overrides):
    from .harrydym import (FAST_SCALED_CONFIG, harry_dym_residual,
                           harry_dym_scaled, harry_dym_series)
    N = _pop(overrides, "N", int, 3)
    T = _pop(overrides, "T", float, 0.0)
    config = _solve_config(overrides, base=FAST_SCALED_CONFIG)
    _reject_unknown(overrides)
    coeffs = harry_dym_series(N)
    report = harry_dym_residual(N)
    payload = {
        "N": N,
        "structure_ok": {n: coeffs.structure_ok(n) for n in range(N + 1)},
        "residual": {"lowest_degree": report.lowest_degree,
                     "highest_degree": report.highest_degree,
                     "n_monomials": report.n_monomials},
    }
    rows = []
    from ._tpoly import ExpPoly
    for e in sorted(coeffs.gN.terms, reverse=True):
        c = ExpPoly.coerce(coeffs.gN.terms[e])
        for mu in c.terms:
            for degree, coeff in enumerate(c.terms[mu]):
                if coeff == 0:
                    continue
                cc = complex(coeff)
                rows.append((repr(cc.real), repr(cc.imag), str(e), degree))
    art.write_csv("gN.csv", ("coeff_re", "coeff_im", "exponent",
                             "t_degree"), rows)
    lines = [f"truncation order N = {N}",
             f"structure check (orders 0..{N}): "
             + ("all ok" if all(payload["structure_ok"].values())
                else "FAILED"),
             f"residual lowest total degree {report.lowest_degree} "
             f"(expected {N + 1}), highest {report.highest_degree} "
             f"(bound {4 * N + 1})"]
    if T > 0:
        scaled = harry_dym_scaled(N, T, config=config)
        payload["scaled"] = {
            "rho": scaled.rho,
            "sector_halfangle": scaled.sector_halfangle,
            "theta_exponents": [str(Fraction(e))
                                for e in scaled.theta_exponents],
            "h_exponents": [str(Fraction(e))
                            for e in scaled.h_exponents]}
        rows = [(k, repr(float(z)), repr(float(scaled.G_eval(k, z))))
                for k in sorted(scaled.G) for z in scaled.zeta]
        art.write_csv("G.csv", ("k", "zeta", "G_k"), rows)
        lines.append(f"rescaled solve at T = {T:g}: rho = "
                     f"{scaled.rho:.4g}, sector half-angle "
                     f"{scaled.sector_halfangle:.6g}")
    art.write_json("harrydym.json", payload)
    art.write_text("summary.txt", "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_oracle_compare(problem, art, overrides):
    """Consistency check: the method-of-lines integrator is driven with
    edge-strip boundary values taken from the resummed Borel solution, so
    this compares the two evolutions in the window interior, not two fully
    independent pipelines (the boundary strips are shared by
    construction)."""
    tol = _pop(overrides, "tol", float, 1e-3)
    xs = _x_window(overrides, problem)
    n_nodes = _pop(overrides, "oracle_nodes", int, 350)
    rtol = _pop(overrides, "oracle_rtol", float, 1e-6)
    config = _solve_config(overrides)
    _reject_unknown(overrides)
    if problem.d != 1:
        raise ValueError("oracle comparison requires d = 1")

    F, report = solve(problem, config)
    _write_solve_report(art, report)
    if not report.converged:
        return EXIT_NUMERICAL

    ocfg = OracleConfig(x_min=float(xs[0]), x_max=float(xs[-1]),
                        n_nodes=n_nodes, rtol=rtol)
    # resummation callable on the strip nodes, splined over the time nodes
    from scipy.interpolate import CubicSpline
    full = np.linspace(ocfg.x_min - ocfg.pad_left,
                       ocfg.x_max + ocfg.pad_right, n_nodes)
    nw = ocfg.nudge_width
    strip = np.concatenate([full[:nw], full[-nw:]])
    times, strip_vals = _resum_table(problem, F, config, strip)
    order = np.argsort(times)
    splines = [CubicSpline(np.asarray(times)[order],
                           strip_vals[l][order].real)
               for l in range(problem.m)]
    lookup = {round(float(x), 9): i for i, x in enumerate(strip)}

    def boundary(l, xq, t):
        tt = min(max(float(t), times.min()), times.max())
        row = splines[l](tt)
        return np.array([row[lookup[round(float(x), 9)]]
                         for x in np.atleast_1d(xq)])

    result = oracle_integrate(problem, ocfg, t_end=problem.horizon,
                              boundary_data=boundary)
    _, borel_vals = _resum_table(problem, F, config, result.x)
    t_idx = int(np.argmax(np.asarray(times)))
    rows = []
    max_err = 0.0
    for l in range(problem.m):
        oracle_final = result.values[l, -1, :]
        borel_final = borel_vals[l, t_idx, :].real
        for x, ov, bv in zip(result.x, oracle_final, borel_final):
            err = abs(ov - bv)
            max_err = max(max_err, err)
            rows.append((l, repr(float(x)), repr(float(bv)),
                         repr(float(ov)), repr(float(err))))
    art.write_csv("compare.csv",
                  ("component", "x", "borel", "oracle", "abs_err"), rows)
    ok = max_err <= tol
    art.write_json("compare.json", {"max_abs_err": max_err, "tol": tol,
                                    "ok": ok,
                                    "t_end": problem.horizon})
    art.write_text("summary.txt",
                   f"max |borel - oracle| = {max_err:.3e} on "
                   f"x in [{result.x[0]:g}, {result.x[-1]:g}] at "
                   f"t = {problem.horizon:g} (tol {tol:g}): "
                   f"{'ok' if ok else 'FAILED'}\n")
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# entry point

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="borelsum",
        description="Borel-Laplace summation toolkit for quasilinear "
                    "evolution equations")
    parser.add_argument("command",
                        choices=["check", "normalize", "series",
                                 "solve-borel", "resum", "accelerate",
                                 "harry-dym", "oracle-compare"])
    parser.add_argument("--problem", help="problem-spec file "
                        "(raw-equation spec for `normalize`; unused by "
                        "`harry-dym`)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE", dest="overrides",
                        help="override a config key (repeatable)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    needs_problem = args.command != "harry-dym"
    if needs_problem and not args.problem:
        print(f"{args.command}: --problem is required", file=sys.stderr)
        return EXIT_VALIDATION
    if args.problem and not os.path.exists(args.problem):
        print(f"problem file not found: {args.problem}", file=sys.stderr)
        return EXIT_VALIDATION

    art = Artifacts(args.out)
    try:
        overrides = _parse_overrides(args.overrides)
        if args.command == "normalize":
            status = _cmd_normalize(args.problem, art, overrides)
        elif args.command == "harry-dym":
            status = _cmd_harry_dym(art, overrides)
        else:
            problem = parse_problem(args.problem)
            dispatch = {"check": _cmd_check,
                        "series": _cmd_series,
                        "solve-borel": _cmd_solve_borel,
                        "resum": _cmd_resum,
                        "accelerate": _cmd_accelerate,
                        "oracle-compare": _cmd_oracle_compare}
            status = dispatch[args.command](problem, art, overrides)
    except ParseError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, NotImplementedError, TypeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    art.finish()
    return status


if __name__ == "__main__":
    sys.exit(main())
