"""Command-line entry point.

Every command prints a JSON report to stdout (or ``--report PATH``) and exits
with 0 when all checks pass, 1 when a check fails with finite residuals and 2
on input or configuration errors.  Commands that sample along ``t`` also write
a CSV file (``--out``) whose first line is a timestamp comment.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exterior import Form, FormError, basis, wedge
from .flow import FlowConfig, FlowConfigError, FlowError, FlowMode, FlowState, Termination, integrate
from .formats import InputError, read_algebra, read_form
from .g2 import d7_psi, d7_star_psi, nearly_parallel_residual, star_psi
from .hitchin import StabilityError, StableClass, classify, eps2, eps3, eps4, hat, lambda3, lambda4
from .lie import LieAlgebraError
from .solutions import FamilyError, cone_family, nearly_kahler_su2su2, sine_cone_family
from .su3 import SU3Error, assemble, check_su3, classify_torsion, validate

FORMATS_HELP = """\
Input formats
-------------
Form file (JSON):
  {"dim": 6, "degree": 3,
   "terms": [{"indices": [1, 2, 3], "coeff": 1.0}, ...]}
  indices are 1-based and strictly increasing; unlisted coefficients are 0.

Lie algebra file (JSON), one of:
  {"name": "...", "salamon": "(0,0,0,0,12,13)"}
  {"differentials": [{"k": 5, "terms": [{"i": 1, "j": 2, "coeff": 1.0}]}]}
  "(t1,...,t6)" lists de^1..de^6; each t_k is 0 or a signed sum such as 12-2*34.
  In the explicit form each term needs i < j.

CSV outputs (first line is '# generated <timestamp>', then a header row)
------------------------------------------------------------------------
lift-verify:   t, residual, c1, c2, c3, eps_phi, eps_omega
  residual = ||d psi - lambda *psi|| (nearly-parallel) or
             sqrt(||d psi||^2 + ||d *psi||^2) (half-flat)
  c1 = ||d phi + (lambda/2) omega^2|| (nearly-parallel) or max(||d phi||, ||d sigma||)
  c2 = ||omega ^ phi||, c3 = |eps(phi) - eps(omega)|
evolve:        t, phi_<ijk> (20 columns), c1, c2, c3, eps_phi, H, dH_dt
  H is empty-valued (nan) on non-unimodular algebras and in half-flat mode.
exact-family:  t, residual, d_star_psi, omega_wedge_phi, eps_omega, eps_phi, metric_scale
  residual = ||d psi|| (cone) or ||d psi - lambda *psi|| (sine-cone, fitted lambda)
"""


class _Report:
    def __init__(self, command: str, inputs: dict, tolerances: dict):
        self.doc = {
            "command": command,
            "version": __version__,
            "inputs": inputs,
            "tolerances": tolerances,
            "checks": [],
        }

    def check(self, name: str, value: float, threshold: float | None, passed: bool, **extra) -> bool:
        entry = {"name": name, "value": _num(value), "threshold": _num(threshold), "passed": bool(passed)}
        entry.update(extra)
        self.doc["checks"].append(entry)
        return passed

    def info(self, key: str, value) -> None:
        self.doc[key] = value

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.doc["checks"])


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.17g}"


def _write_csv(path: Path, header: list[str], rows: list[list[float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


# ---------------------------------------------------------------------------
# commands


def _cmd_classify(args, rep: _Report) -> None:
    rho = read_form(args.form, expect_dim=6)
    kind = classify(rho, args.tol)
    rep.info("class", kind.value)
    if rho.degree == 2:
        rep.check("eps(omega)", eps2(rho), args.tol * rho.norm() ** 3, kind is not StableClass.NOT_STABLE)
    elif rho.degree == 3:
        lam = lambda3(rho)
        rep.check("lambda(phi)", lam, args.tol * rho.norm() ** 4, kind is not StableClass.NOT_STABLE)
        if kind is StableClass.POSITIVE3:
            rep.info("eps", eps3(rho))
    elif rho.degree == 4:
        rep.check("lambda(sigma)", lambda4(rho), args.tol * rho.norm() ** 6, kind is not StableClass.NOT_STABLE)
        if kind is StableClass.STABLE4:
            rep.info("eps", eps4(rho))
    else:
        raise InputError(f"{args.form}: classify supports degrees 2, 3, 4, got {rho.degree}")


def _read_pair(args) -> tuple[Form, Form]:
    return read_form(args.omega, expect_degree=2, expect_dim=6), read_form(args.phi, expect_degree=3, expect_dim=6)


def _cmd_validate(args, rep: _Report) -> None:
    omega, phi = _read_pair(args)
    for c in check_su3(omega, phi, args.tol):
        rep.check(f"condition {c.name}", c.residual, args.tol, c.passed, detail=c.detail)


def _cmd_torsion(args, rep: _Report) -> None:
    L = read_algebra(args.algebra)
    omega, phi = _read_pair(args)
    try:
        s = validate(omega, phi, args.tol)
    except SU3Error as exc:
        rep.check(f"condition {exc.condition}", exc.residual, args.tol, False, detail=str(exc))
        return
    tc = classify_torsion(L, s, args.tol)
    rep.info("torsion", tc.tag.value)
    rep.info("lambda_def", tc.lambda_def)
    rep.info("lambda_g2", tc.lambda_g2)
    for name, value in tc.residuals.items():
        if name == "nhf_lambda_def":
            continue
        rep.check(name, value, args.tol, True, role="residual")
    rep.check("classified", 0.0 if tc.tag.value != "Unclassified" else 1.0, 0.0, tc.tag.value != "Unclassified")


def _flow_setup(args) -> tuple:
    L = read_algebra(args.algebra)
    omega, phi = _read_pair(args)
    mode = FlowMode(args.mode)
    if args.t1 is None:
        raise InputError("--t1 is required")
    lam = args.lam if args.lam is not None else (0.0 if mode is FlowMode.HALF_FLAT else None)
    if lam is None:
        raise InputError("--lambda is required in nearly-parallel mode")
    monitor = 1
    if args.grid is not None:
        if args.grid < 2:
            raise FlowConfigError("--grid must be at least 2")
        n_steps = math.ceil(abs(args.t1 - args.t0) / args.step) if args.step > 0 else 1
        monitor = max(1, n_steps // (args.grid - 1))
    config = FlowConfig(lam=lam, step=args.step, t_end=args.t1, mode=mode, monitor_every=monitor)
    sigma = 0.5 * wedge(omega, omega) if mode is FlowMode.HALF_FLAT else None
    return L, omega, phi, config, FlowState(args.t0, phi, sigma)


def _run_flow(L, omega, phi, config, state0, rep: _Report):
    if config.mode is FlowMode.NEARLY_PARALLEL:
        c1 = (L.d(phi) + (config.lam / 2) * wedge(omega, omega)).norm()
        rep.check("initial d phi + (lambda/2) omega^2", c1, rep.doc["tolerances"]["tol"], c1 <= rep.doc["tolerances"]["tol"])
    try:
        traj = integrate(L, state0, config)
    except StabilityError as exc:
        raise InputError(f"initial data rejected: {exc}") from None
    except ValueError as exc:
        raise InputError(f"initial data rejected: {exc}") from None
    rep.info("termination", traj.termination.value)
    if traj.message:
        rep.info("termination_message", traj.message)
    rep.check("completed", 0.0, None, traj.termination is Termination.COMPLETED)
    return traj


def _cmd_lift_verify(args, rep: _Report) -> None:
    L, omega, phi, config, state0 = _flow_setup(args)
    traj = _run_flow(L, omega, phi, config, state0, rep)
    rows = []
    for st, d in zip(traj.states, traj.diagnostics):
        rows.append([st.t, d.closure, d.c1, d.c2, d.c3, d.eps_phi, d.eps_omega])
    for col, name in ((1, "max residual"), (2, "max c1"), (3, "max c2"), (4, "max c3")):
        worst = max(r[col] for r in rows)
        rep.check(name, worst, args.tol, worst <= args.tol)
    if args.out:
        _write_csv(Path(args.out), ["t", "residual", "c1", "c2", "c3", "eps_phi", "eps_omega"], rows)
        rep.info("csv", str(args.out))


def _cmd_evolve(args, rep: _Report) -> None:
    L, omega, phi, config, state0 = _flow_setup(args)
    traj = _run_flow(L, omega, phi, config, state0, rep)
    rows = [
        [st.t, *st.phi.coeffs, d.c1, d.c2, d.c3, d.eps_phi, d.H, d.dH_dt]
        for st, d in zip(traj.states, traj.diagnostics)
    ]
    drift = traj.max_drift()
    for k in ("c1", "c2", "c3"):
        rep.check(f"max {k}", drift[k], args.tol, drift[k] <= args.tol)
    header = ["t"] + ["phi_" + "".join(map(str, idx)) for idx in basis(6, 3)] + ["c1", "c2", "c3", "eps_phi", "H", "dH_dt"]
    if args.out:
        _write_csv(Path(args.out), header, rows)
        rep.info("csv", str(args.out))


def _cmd_exact_family(args, rep: _Report) -> None:
    if args.algebra or args.omega or args.phi:
        if not (args.algebra and args.omega and args.phi):
            raise InputError("give all of --algebra, --omega, --phi or none (shipped su(2)+su(2) base)")
        L = read_algebra(args.algebra)
        omega, phi = _read_pair(args)
        try:
            base = validate(omega, phi, args.tol)
        except SU3Error as exc:
            raise InputError(f"base structure invalid: {exc}") from None
    else:
        L, base = nearly_kahler_su2su2()
    try:
        fam = cone_family(L, base, args.tol) if args.family == "cone" else sine_cone_family(L, base, args.tol)
    except FamilyError as exc:
        raise InputError(str(exc)) from None
    t0 = args.t0 if args.t0 is not None else (0.5 if args.family == "cone" else 0.2)
    t1 = args.t1 if args.t1 is not None else (3.0 if args.family == "cone" else math.pi - 0.2)
    grid = args.grid or 50
    if not t0 < t1 or grid < 2:
        raise InputError("need t0 < t1 and --grid >= 2")
    rep.info("lambda", fam.lam)
    rows = []
    for t in np.linspace(t0, t1, grid):
        try:
            s = fam.structure(t, args.tol)
        except (FamilyError, SU3Error) as exc:
            raise InputError(f"sample t = {t}: {exc}") from None
        pd, od = fam.phidot(t), fam.omegadot(t)
        res = nearly_parallel_residual(L, s, pd, fam.lam)
        dstar = d7_star_psi(L, s, od).norm()
        rows.append([t, res, dstar, wedge(s.omega, s.phi).norm(), s.eps, eps3(s.phi), fam.metric_scale(t)])
    for col, name in ((1, "max residual"), (2, "max d*psi")):
        worst = max(r[col] for r in rows)
        rep.check(name, worst, args.tol, worst <= args.tol)
    if args.out:
        _write_csv(
            Path(args.out),
            ["t", "residual", "d_star_psi", "omega_wedge_phi", "eps_omega", "eps_phi", "metric_scale"],
            rows,
        )
        rep.info("csv", str(args.out))


COMMANDS = {
    "classify": _cmd_classify,
    "validate-su3": _cmd_validate,
    "torsion": _cmd_torsion,
    "lift-verify": _cmd_lift_verify,
    "evolve": _cmd_evolve,
    "exact-family": _cmd_exact_family,
}


class _HelpFormats(argparse.Action):
    def __init__(self, option_strings, dest, **kwargs):
        super().__init__(option_strings, dest, nargs=0, default=argparse.SUPPRESS, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        print(FORMATS_HELP)
        parser.exit(0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stableforms", description="Stable forms, SU(3)- and G2-structures.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--help-formats", action=_HelpFormats, help="describe input files and CSV columns")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol=1e-9):
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--report", help="write the JSON report here instead of stdout")

    sp = sub.add_parser("classify", help="stability type of a 2-, 3- or 4-form on R^6")
    sp.add_argument("form", nargs="?", help="form file")
    sp.add_argument("--form", dest="form_opt")
    common(sp, tol=1e-10)

    sp = sub.add_parser("validate-su3", help="check SU(3) compatibility of (omega, phi)")
    sp.add_argument("--omega", required=True)
    sp.add_argument("--phi", required=True)
    common(sp)

    sp = sub.add_parser("torsion", help="nearly-Kaehler / half-flat / nearly half-flat tests")
    sp.add_argument("--algebra", required=True)
    sp.add_argument("--omega", required=True)
    sp.add_argument("--phi", required=True)
    common(sp)

    for name, helptext in (("lift-verify", "evolve and verify d psi = lambda *psi"), ("evolve", "integrate the flow")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--algebra", required=True)
        sp.add_argument("--omega", required=True)
        sp.add_argument("--phi", required=True)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--mode", choices=[m.value for m in FlowMode], default=FlowMode.NEARLY_PARALLEL.value)
        sp.add_argument("--step", type=float, default=1e-3)
        sp.add_argument("--t0", type=float, default=0.0)
        sp.add_argument("--t1", type=float)
        sp.add_argument("--grid", type=int, help="number of output samples (default: every step)")
        sp.add_argument("--out", help="CSV output path")
        common(sp, tol=1e-8)

    sp = sub.add_parser("exact-family", help="sample the cone or sine-cone family")
    sp.add_argument("--family", choices=["cone", "sine-cone"], required=True)
    sp.add_argument("--algebra")
    sp.add_argument("--omega")
    sp.add_argument("--phi")
    sp.add_argument("--t0", type=float)
    sp.add_argument("--t1", type=float)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--out")
    common(sp, tol=1e-8)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "classify":
        args.form = args.form_opt or args.form
        if not args.form:
            parser.error("classify needs a form file")
    inputs = {k: v for k, v in vars(args).items() if k not in ("command", "tol", "report", "form_opt")}
    rep = _Report(args.command, inputs, {"tol": args.tol})
    try:
        COMMANDS[args.command](args, rep)
    except (InputError, FlowConfigError, FormError, LieAlgebraError) as exc:
        rep.info("error", str(exc))
        _emit(rep, args.report)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FlowError as exc:
        rep.info("error", str(exc))
        _emit(rep, args.report)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rep.info("passed", rep.passed)
    _emit(rep, args.report)
    return 0 if rep.passed else 1


def _emit(rep: _Report, path) -> None:
    text = json.dumps(rep.doc, indent=2, sort_keys=False)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
