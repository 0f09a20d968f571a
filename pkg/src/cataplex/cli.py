"""Batch command-line front end.

Every command turns its options into a list of independent checks, runs them
(concurrently when ``CATAPLEX_THREADS`` allows), and collects the outcomes in
input order into a :class:`Report`.  Exit codes: 0 all checks pass, 1 some
check failed, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backlund as bk
from . import entwine as ew
from . import liouville as lv
from . import timemap as tm
from .bessel import k_imag
from .errors import CataplexError, NumericalFailure, SlowDecay

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(CataplexError):
    """Invalid command-line configuration."""


# --------------------------------------------------------------------------
# reports


@dataclass
class Check:
    check_id: str
    inputs: dict
    values: dict
    residual: float
    tolerance: float

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)
        self.inputs = {k: _plain(v) for k, v in self.inputs.items()}
        self.values = {k: _plain(v) for k, v in self.values.items()}

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def as_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "inputs": self.inputs,
            "values": self.values,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class Report:
    command: str
    checks: list[Check] = field(default_factory=list)
    table_header: list[str] | None = None
    table: list[list[float]] | None = None
    wall_time: float = 0.0

    @property
    def summary(self) -> dict:
        residuals = [c.residual for c in self.checks]
        passed = sum(c.passed for c in self.checks)
        return {
            "checks": len(self.checks),
            "passed": passed,
            "failed": len(self.checks) - passed,
            "max_residual": max(residuals) if residuals else 0.0,
        }

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        # wall time stays out so that files are byte-stable
        out = {"command": self.command, "summary": self.summary, "checks": [c.as_dict() for c in self.checks]}
        if self.table is not None:
            out["table"] = {"header": self.table_header, "rows": [[_plain(v) for v in row] for row in self.table]}
        return out


RECORD_HEADER = ["check_id", "inputs", "residual", "tolerance", "pass"]


def _inputs_text(inputs: dict) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in inputs.items())


def _plain(v):
    """numpy scalars to builtin numbers, so JSON and CSV output look the same."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _fmt(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_report(report: Report, fmt: str) -> str:
    """Text of the report: JSON, or CSV of the data table if there is one,
    else of the check records."""
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2, sort_keys=False) + "\n"
    if fmt != "csv":
        raise UsageError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if report.table is not None:
        writer.writerow(report.table_header)
        writer.writerows([[_fmt(v) for v in row] for row in report.table])
    else:
        writer.writerow(RECORD_HEADER)
        for c in report.checks:
            writer.writerow([c.check_id, _inputs_text(c.inputs), _fmt(c.residual), _fmt(c.tolerance), _fmt(c.passed)])
    return buf.getvalue()


def write_report(report: Report, path, fmt: str = "csv") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_report(report, fmt))


# --------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str) -> list[float]:
    """``lo:hi:n`` (``n`` points, or spacing if not an integer), a comma list,
    or a single number."""
    text = str(text).strip()
    if not text:
        raise UsageError("empty grid")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid {text!r} must be lo:hi:n")
            lo, hi = float(parts[0]), float(parts[1])
            third = float(parts[2])
            if third.is_integer() and "." not in parts[2] and "e" not in parts[2].lower():
                n = int(third)
                if n < 1:
                    raise UsageError(f"grid {text!r} is empty")
                return [lo] if n == 1 else [float(v) for v in np.linspace(lo, hi, n)]
            if third <= 0 or hi < lo:
                raise UsageError(f"grid {text!r} needs a positive spacing and lo <= hi")
            n = int(round((hi - lo) / third)) + 1
            return [float(v) for v in lo + third * np.arange(n)]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}") from exc
    if not values:
        raise UsageError("empty grid")
    return values


def read_config(path) -> list[str]:
    """``key=value`` lines as ``--key=value`` tokens; ``#`` starts a comment."""
    tokens = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        tokens.append(f"--{key.replace('_', '-')}={value}")
    return tokens


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse would read "-2:1:4" as an option
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok.startswith("--")
            and "=" not in tok
            and i + 1 < len(argv)
            and len(argv[i + 1]) > 1
            and argv[i + 1][0] == "-"
            and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")
        ):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def thread_count() -> int:
    raw = os.environ.get("CATAPLEX_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError("CATAPLEX_THREADS must be an integer") from exc
    return max(1, n)


def _run_all(tasks) -> list:
    """Run zero-argument callables; results come back in input order."""
    workers = thread_count()
    if workers == 1 or len(tasks) < 2:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda task: task(), tasks))


# --------------------------------------------------------------------------
# commands


def cmd_macdonald(args) -> Report:
    xs, ys, mus = parse_grid(args.x_grid), parse_grid(args.y_grid), parse_grid(args.mu)

    def task(x, y, mu):
        def run():
            c = lv.macdonald_check(x, y, mu)
            return Check("macdonald", {"x": x, "y": y, "mu": mu}, {"lhs": c.lhs, "rhs": c.rhs}, c.residual, args.tol)

        return run

    return Report("macdonald", _run_all([task(x, y, m) for m in mus for x in xs for y in ys]))


def cmd_sister(args) -> Report:
    xs, ys, nus = parse_grid(args.x_grid), parse_grid(args.y_grid), parse_grid(args.nu)

    def task(x, y, nu):
        def run():
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SlowDecay)
                c = lv.sister_check(x, y, nu)
            return Check("sister", {"x": x, "y": y, "nu": nu}, {"lhs": c.lhs, "rhs": c.rhs}, c.residual, args.tol)

        return run

    return Report("sister", _run_all([task(x, y, n) for n in nus for x in xs for y in ys if x != y]))


def cmd_propagator(args) -> Report:
    xs, ys, zs = parse_grid(args.x_grid), parse_grid(args.y_grid), parse_grid(args.z_grid)

    def task(x, y, z):
        def run():
            value, e_max, tail, _ = lv.spectral_propagator(x, y, z, full_output=True)
            exact = lv.propagator_closed_form(x, y, z)[1]
            rel = abs(value - exact) / abs(exact)
            return Check(
                "propagator", {"x": x, "y": y, "z": z}, {"spectral": value, "closed_form": exact, "e_max": e_max},
                rel, args.tol,
            )

        return run

    return Report("propagator", _run_all([task(x, y, z) for x in xs for y in ys for z in zs]))


def cmd_timemap(args) -> Report:
    energies, zs = parse_grid(args.energy), parse_grid(args.z)

    def task(E, z):
        def run():
            exact = -math.log(k_imag(math.sqrt(E), math.exp(z))) / E
            series = tm.euclidean_T_series(E, z, args.order)
            return Check(
                "timemap", {"E": E, "z": z, "order": args.order}, {"T": exact, "series": series},
                abs(series - exact) / abs(exact), args.tol,
            )

        return run

    return Report("timemap", _run_all([task(E, z) for E in energies for z in zs]))


def _default_seed(E: float) -> complex:
    zeros = tm.real_axis_zeros(E, -8.0, 0.0)
    if not zeros:
        raise UsageError("no real-axis zero to seed a closed contour; pass --z0")
    return complex(zeros[-1] + 0.3)


def cmd_contour(args) -> Report:
    energies = parse_grid(args.energy)
    if len(energies) != 1:
        raise UsageError("contour traces one energy at a time")
    E = energies[0]
    try:
        z0 = _default_seed(E) if args.z0 == "auto" else complex(args.z0.replace(" ", ""))
    except ValueError as exc:
        raise UsageError(f"cannot parse z0 {args.z0!r}") from exc
    c = tm.trace_level_contour(E, z0, args.step, args.max_steps)
    deviation = float(np.max(np.abs(c.modulus - c.level)) / c.level)
    steps = np.diff(c.phase)
    monotone = bool(np.all(steps > 0) or np.all(steps < 0))
    kind = tm.classify_contour(c).value
    checks = [
        Check("contour-level", {"E": E, "z0": str(z0), "step": args.step}, {"kind": kind, "points": len(c.points),
              "termination": c.termination}, deviation, args.tol),
        Check("contour-phase", {"E": E, "z0": str(z0), "step": args.step}, {"monotone": monotone},
              0.0 if monotone else 1.0, 0.0),
    ]
    rows = [
        [float(z.real), float(z.imag), float(m), float(p), int(b)]
        for z, m, p, b in zip(c.points, c.modulus, c.phase, c.branch_track)
    ]
    return Report("contour", checks, ["re_z", "im_z", "abs_k", "arg_k", "branch"], rows)


def cmd_soliton(args) -> Report:
    model = bk.ModelKind.parse(args.model)
    sigma = np.array(parse_grid(args.sigma))
    if sigma.size < 5:
        raise UsageError("sigma grid needs at least 5 points")
    z = args.z
    if args.psi_left is None:
        if model is not bk.ModelKind.SINE_GORDON:
            raise UsageError("--psi-left is required for this model")
        psi_left = float(bk.kink_profile(sigma[0], z))
    else:
        psi_left = args.psi_left
    seed = bk.FieldSlice.vacuum(sigma)
    out = bk.solve_backlund(model, seed, bk.BacklundParams(z, psi_left))
    checks = []
    inputs = {"model": model.value, "z": z, "psi_left": psi_left}
    if model is bk.ModelKind.SINE_GORDON:
        if math.isclose(psi_left, float(bk.kink_profile(sigma[0], z)), rel_tol=0, abs_tol=1e-15):
            gap = float(np.max(np.abs(out.phi - bk.kink_profile(sigma, z))))
            checks.append(Check("soliton-kink", inputs, {}, gap, args.tol))
        if z == 0:
            checks.append(Check("soliton-eom", inputs, {}, bk.eom_residual(model, out), args.eom_tol))
    rows = [list(map(float, r)) for r in zip(sigma, seed.phi, seed.pi, out.phi, out.pi)]
    return Report("soliton", checks, ["sigma", "phi", "pi_phi", "psi", "pi_psi"], rows)


def cmd_contract(args) -> Report:
    ws = parse_grid(args.w)
    phis, psis, zs = parse_grid(args.phi), parse_grid(args.psi), parse_grid(args.z)
    checks = []
    for w in ws:
        for phi in phis:
            for psi in psis:
                for z in zs:
                    sample = (phi, psi, z)
                    gap = bk.contract_to_liouville(w, sample)
                    law = bk.contraction_remainder(w, sample)
                    checks.append(Check("contract", {"w": w, "phi": phi, "psi": psi, "z": z},
                                        {"discrepancy": gap, "law": law}, abs(gap / law - 1), args.tol))
    return Report("contract", checks)


def cmd_entwine(args) -> Report:
    models = list(bk.ModelKind) if args.model == "all" else [bk.ModelKind.parse(m) for m in args.model.split(",")]
    lattice = ew.Lattice(args.sites, args.spacing)
    if args.configs < 1:
        raise UsageError("--configs must be positive")

    def task(model, index):
        def run():
            pair = ew.random_pair(lattice, args.z, args.seed, index)
            err = ew.gradient_oracle_error(model, pair)
            unit = abs(abs(ew.kernel(model, pair)) - 1.0)
            return Check("entwine-gradient", {"model": model.value, "config": index},
                         {"modulus_gap": unit}, max(err, unit), args.tol)

        return run

    checks = _run_all([task(m, i) for m in models for i in range(args.configs)])
    rows = []
    for model in models:
        constant = ew.constant_pair(lattice, 0.3, -0.2, args.z)
        for kind, fn in ew.RESIDUALS.items():
            checks.append(Check("entwine-constant", {"model": model.value, "identity": kind}, {},
                                float(fn(model, constant)), 1e-12))
        study = ew.refinement_study(model, args.identity, sites=parse_grid(args.refine), length=args.length, z=args.z)
        for row in study:
            rows.append([model.value, args.identity, row.spacing, row.residual, row.order])
    return Report("entwine", checks, ["model", "identity", "a", "residual", "order"], rows)


COMMANDS = {
    "macdonald": cmd_macdonald,
    "sister": cmd_sister,
    "propagator": cmd_propagator,
    "timemap": cmd_timemap,
    "contour": cmd_contour,
    "soliton": cmd_soliton,
    "contract": cmd_contract,
    "entwine": cmd_entwine,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cataplex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, tol):
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=tol)

    p = sub.add_parser("macdonald", help="Macdonald's identity on a grid")
    common(p, 1e-8)
    p.add_argument("--x-grid", default="-2:1:4")
    p.add_argument("--y-grid", default="-2:1:4")
    p.add_argument("--mu", default="0.5,1,2")

    p = sub.add_parser("sister", help="companion identity with I_nu")
    common(p, 1e-5)
    p.add_argument("--x-grid", default="-1,0")
    p.add_argument("--y-grid", default="1,2")
    p.add_argument("--nu", default="0,0.5,1")

    p = sub.add_parser("propagator", help="spectral vs closed-form propagator")
    common(p, 1e-4)
    p.add_argument("--x-grid", default="-1:1:3")
    p.add_argument("--y-grid", default="-1:1:3")
    p.add_argument("--z-grid", default="-1:1:3")

    p = sub.add_parser("timemap", help="deep-Euclidean series for T")
    common(p, 1e-3)
    p.add_argument("--energy", default="1")
    p.add_argument("--z", default="3")
    p.add_argument("--order", type=int, default=3)

    p = sub.add_parser("contour", help="trace a constant-modulus contour")
    common(p, 1e-8)
    p.add_argument("--energy", default="1")
    p.add_argument("--z0", default="auto")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--max-steps", type=int, default=2000)

    p = sub.add_parser("soliton", help="Backlund map of the vacuum")
    common(p, 1e-8)
    p.add_argument("--model", default="sine-gordon")
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--sigma", default="-5:5:0.001")
    p.add_argument("--psi-left", type=float, default=None)
    p.add_argument("--eom-tol", type=float, default=1e-6)

    p = sub.add_parser("contract", help="sinh-Gordon to Liouville contraction")
    common(p, 1e-10)
    p.add_argument("--w", default="0,1,3,5")
    p.add_argument("--phi", default="-1,1")
    p.add_argument("--psi", default="-1,1")
    p.add_argument("--z", default="-1,1")

    p = sub.add_parser("entwine", help="lattice entwining identities")
    common(p, 1e-6)
    p.add_argument("--model", default="all")
    p.add_argument("--sites", type=int, default=12)
    p.add_argument("--spacing", type=float, default=0.3)
    p.add_argument("--z", type=float, default=0.2)
    p.add_argument("--configs", type=int, default=10)
    p.add_argument("--identity", choices=sorted(ew.RESIDUALS), default="energy")
    p.add_argument("--refine", default="32,64,128")
    p.add_argument("--length", type=float, default=8.0)
    return parser


def parse_args(argv: list[str]):
    argv = _join_negative_values(list(argv))
    config = None
    for i, tok in enumerate(argv):
        if tok.startswith("--config="):
            config = tok.split("=", 1)[1]
        elif tok == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
    if config is not None and argv:
        # config values go first so that explicit flags override them
        argv = argv[:1] + read_config(config) + argv[1:]
    return build_parser().parse_args(argv)


def run_command(args) -> Report:
    start = time.perf_counter()
    report = COMMANDS[args.command](args)
    report.wall_time = time.perf_counter() - start
    return report


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        report = run_command(args)
        if args.out:
            write_report(report, args.out, args.format)
        else:
            sys.stdout.write(render_report(report, args.format))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CataplexError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    s = report.summary
    print(
        f"{report.command}: {s['passed']}/{s['checks']} passed, max residual {s['max_residual']:.3e}, "
        f"{report.wall_time:.2f} s",
        file=sys.stderr,
    )
    return EXIT_OK if report.all_passed else EXIT_FAIL
