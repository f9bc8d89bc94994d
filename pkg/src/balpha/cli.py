"""Command-line entry point.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 optimizer budget
exhausted, 5 integrator or quadrature failure.  Every run logs its resolved
configuration to stderr; stdout (or ``--out``) carries only the result, so
repeated runs with the same arguments are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import fock, pulse
from .errors import (
    ChamberViolation,
    ConfigError,
    GateParseError,
    IntegratorFailure,
    InvalidAlpha,
    NonUnitaryInput,
    QuadratureFailure,
    ResidualTooLarge,
)
from .family import balpha_gate, chamber_scan, two_application_coverage
from .gates import NAMED_GATES, check_unitary, gate_from_json
from .synthesis import (
    OptimizerOptions,
    synthesize_three_applications,
    synthesize_two_applications,
)
from .weyl import (
    cartan_coordinates,
    canonical_gate,
    entangling_power,
    invariants_from_matrix,
    to_positive_chamber,
)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_BUDGET, EXIT_INTEGRATOR = 0, 2, 3, 4, 5
THREADS_ENV = "BALPHA_THREADS"
SPE_TOL = 1e-9

log = logging.getLogger("balpha")


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


# --- input helpers ----------------------------------------------------------

_ANGLE = re.compile(
    r"^([-+])?\s*(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)?\s*\*?\s*(pi)?\s*(?:/\s*(\d+\.?\d*))?$"
)


def parse_angle(text: str) -> float:
    """Float or a multiple of pi such as ``pi/2``, ``3pi/4``, ``-0.5*pi``."""
    m = _ANGLE.match(text.strip())
    if not m or (m.group(2) is None and m.group(3) is None):
        raise CliError(EXIT_PARSE, f"cannot parse angle {text!r}")
    sign, num, has_pi, den = m.groups()
    val = float(num) if num else 1.0
    if has_pi:
        val *= math.pi
    if den:
        val /= float(den)
    return -val if sign == "-" else val


def read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc.strerror}") from exc


def read_json(path: str) -> Any:
    text = read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(
            EXIT_PARSE, f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def load_gate(path: str) -> np.ndarray:
    try:
        u = gate_from_json(read_text(path))
    except GateParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc
    return check_unitary(u, 4)


def resolve_target(text: str) -> tuple[str, np.ndarray | None, np.ndarray | None]:
    """A gate file, a named gate, or comma-separated coordinates.

    Returns ``(kind, gate, coords)``; exactly one of gate/coords is set.
    """
    if os.path.exists(text):
        return "file", load_gate(text), None
    name = text.strip().upper()
    if name in NAMED_GATES:
        return "name", np.asarray(NAMED_GATES[name]), None
    if name == "B":
        return "name", balpha_gate(1.0), None
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError(EXIT_PARSE, f"target {text!r} is not a file, gate name or c1,c2,c3")
    return "coords", None, np.array([parse_angle(p) for p in parts])


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# --- output helpers ---------------------------------------------------------


def _angles(values, degrees: bool) -> list[float]:
    return [math.degrees(v) if degrees else float(v) for v in values]


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list) and obj and not isinstance(obj[0], (dict, list)):
        return [(prefix, " ".join(_fmt(v) for v in obj))]
    if isinstance(obj, list):
        out = []
        for i, v in enumerate(obj):
            out += _flatten(v, f"{prefix}[{i}]")
        return out
    return [(prefix, obj)]


def _fmt(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower() if v is not None else "null"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def render(obj: dict, fmt: str, pretty: Callable[[dict], str] | None = None) -> str:
    if fmt == "json":
        return json.dumps(obj, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(obj):
            w.writerow([k, _fmt(v)])
        return buf.getvalue()
    if pretty is not None:
        return pretty(obj)
    rows = _flatten({k: v for k, v in obj.items() if k not in ("locals", "extracted_gate")})
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k:<{width}}  {_fmt(v)}\n" for k, v in rows)


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- subcommands ------------------------------------------------------------


def cmd_analyze(args) -> int:
    u = load_gate(args.gate)
    kak = cartan_coordinates(u)
    c = kak.coords
    pos = to_positive_chamber(c)
    inv = invariants_from_matrix(u)
    ep = entangling_power(c)
    report = {
        "angle_unit": "deg" if args.degrees else "rad",
        "coords_standard": _angles(c, args.degrees),
        "coords_positive": _angles(pos, args.degrees),
        "g1": [inv.g1.real, inv.g1.imag],
        "g2": inv.g2,
        "entangling_power": ep,
        "special_perfect_entangler": bool(abs(ep - 2 / 9) <= SPE_TOL),
        "degenerate_spectrum": bool(kak.degenerate),
    }
    emit(render(report, args.format), args.out)
    return EXIT_OK


def cmd_coverage(args) -> int:
    kind, gate, coords = resolve_target(args.target)
    if gate is not None:
        coords = to_positive_chamber(cartan_coordinates(gate).coords).as_array()
    verdict = two_application_coverage(args.alpha, coords).to_dict()
    verdict["coords"] = _angles(verdict["coords"], args.degrees)
    verdict["angle_unit"] = "deg" if args.degrees else "rad"
    verdict["target_kind"] = kind
    emit(render(verdict, args.format), args.out)
    return EXIT_OK


def cmd_chamber_scan(args) -> int:
    scan = chamber_scan(args.alpha, args.resolution, args.mc_samples, args.seed)
    log.info(
        "covered fraction %.6f (%d of %d grid points covered)",
        scan.covered_fraction,
        int(scan.covered.sum()),
        len(scan.points),
    )
    if args.format == "csv":
        pts = np.degrees(scan.points) if args.degrees else scan.points
        text = type(scan)(scan.alpha, pts, scan.set1, scan.set2, scan.covered_fraction, scan.mc_samples).to_csv()
    else:
        obj = {
            "alpha": scan.alpha,
            "resolution": args.resolution,
            "angle_unit": "deg" if args.degrees else "rad",
            "covered_fraction": scan.covered_fraction,
            "mc_samples": scan.mc_samples,
            "grid_points": len(scan.points),
            "grid_set1": int(scan.set1.sum()),
            "grid_set2": int(scan.set2.sum()),
            "grid_covered": int(scan.covered.sum()),
        }
        if args.format == "json":
            obj["points"] = [
                [*_angles(p, args.degrees), bool(s1), bool(s2)]
                for p, s1, s2 in zip(scan.points, scan.set1, scan.set2)
            ]
        text = render(obj, args.format)
    emit(text, args.out)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    _, gate, coords = resolve_target(args.target)
    target = gate if gate is not None else canonical_gate(coords)
    opts = OptimizerOptions(
        starts=args.starts, max_iterations=args.max_iterations, threshold=args.threshold, seed=args.seed
    )
    fn = synthesize_two_applications if args.apps == 2 else synthesize_three_applications
    res = fn(args.alpha, target, opts)
    out = {"alpha": args.alpha, "applications": args.apps}
    out.update(res.to_dict())
    if res.success:
        out["verdict"] = "reached"
    elif res.distance >= args.falsify:
        out["verdict"] = "unreachable"
    else:
        out["verdict"] = "inconclusive"
    out["falsify_bound"] = args.falsify
    emit(render(out, args.format), args.out)
    return EXIT_OK if res.success else EXIT_BUDGET


def _plan_table(d: dict) -> str:
    lines = [
        f"alpha        {d['alpha']:.12g}",
        f"chi_x        {d['chi_x']:.15e}   target {d['target_chi_x']:.15e}",
        f"chi_y        {d['chi_y']:.15e}   target {d['target_chi_y']:.15e}",
        f"delta_x      {d['config']['delta_x']:.10e} rad/s",
        f"delta_y      {d['config']['delta_y']:.10e} rad/s",
        f"rabi_x       {d['config']['rabi_x'][0]:.10e} {d['config']['rabi_x'][1]:.10e} rad/s",
        f"rabi_y       {d['config']['rabi_y'][0]:.10e} {d['config']['rabi_y'][1]:.10e} rad/s",
        f"inv. dist    {d['invariant_distance']:.3e}",
        f"closed       {str(d['closed']).lower()} (tol {d['tol']:.0e})",
        "",
        f"{'residual':<14}{'max |value|':>14}",
    ]
    lines += [f"{k:<14}{v:>14.3e}" for k, v in d["residuals"].items()]
    return "\n".join(lines) + "\n"


def cmd_pulse_plan(args) -> int:
    base = read_json(args.config) if args.config else {}
    if not isinstance(base, dict):
        raise CliError(EXIT_PARSE, "pulse config must be a JSON object")
    allowed = {"alpha", "tau", "n_loops", "eta_m", "eta_n", "split", "psi_x", "psi_y", "tol"}
    extra = set(base) - allowed
    if extra:
        raise ConfigError(f"unknown pulse config keys: {sorted(extra)}")
    flags = {
        "alpha": args.alpha,
        "tau": args.tau,
        "n_loops": args.loops,
        "eta_m": args.eta,
        "eta_n": args.eta_n,
        "split": args.split,
        "psi_x": args.psi_x,
        "psi_y": args.psi_y,
        "tol": args.tol,
    }
    defaults = {"alpha": None, "tau": 1e-4, "n_loops": 1, "eta_m": 0.1, "eta_n": None,
                "split": "symmetric", "psi_x": 0.0, "psi_y": 0.0, "tol": pulse.CLOSURE_TOL}
    cfg = {k: flags[k] if flags[k] is not None else base.get(k, defaults[k]) for k in defaults}
    if cfg["alpha"] is None:
        raise CliError(EXIT_PARSE, "--alpha is required (flag or config file)")
    split = cfg["split"]
    if split != "symmetric":
        try:
            split = float(split)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"split must be 'symmetric' or a positive ratio, got {split!r}") from exc
    log.info("pulse plan inputs %s", json.dumps(cfg, sort_keys=True))
    plan = pulse.plan_pulse(
        float(cfg["alpha"]),
        float(cfg["tau"]),
        int(cfg["n_loops"]),
        float(cfg["eta_m"]),
        None if cfg["eta_n"] is None else float(cfg["eta_n"]),
        split,
        float(cfg["psi_x"]),
        float(cfg["psi_y"]),
        float(cfg["tol"]),
    )
    emit(render(plan.to_dict(), args.format, _plan_table), args.out)
    return EXIT_OK


def _load_plan(path: str) -> pulse.PulsePlan:
    d = read_json(path)
    if not isinstance(d, dict):
        raise CliError(EXIT_PARSE, f"{path}: plan must be a JSON object")
    return pulse.plan_from_dict(d)


def cmd_pulse_verify(args) -> int:
    plan = _load_plan(args.plan)
    cfg = plan.config
    t = cfg.tau if args.time is None else args.time
    closed = pulse.magnus_coefficients(cfg, t)
    quad = pulse.quadrature_oracle(cfg, t, args.quad_tol)
    rows = []
    worst = 0.0
    # differences are relative to the largest coefficient, since most vanish at closure
    scale = max(float(np.max(np.abs(a))) for a in closed.fields().values()) or 1.0
    for name, a in closed.fields().items():
        b = quad.fields()[name]
        for idx in np.ndindex(a.shape):
            diff = abs(a[idx] - b[idx])
            rel = diff / scale
            worst = max(worst, rel)
            rows.append(
                {
                    "coefficient": name,
                    "index": "".join(map(str, idx)),
                    "closed_form": [float(np.real(a[idx])), float(np.imag(a[idx]))],
                    "quadrature": [float(np.real(b[idx])), float(np.imag(b[idx]))],
                    "abs_diff": float(diff),
                    "rel_diff": float(rel),
                }
            )
    out = {
        "time": t,
        "closed": closed.is_closed(plan.tol),
        "residuals": closed.residuals(),
        "coupling_x": closed.coupling_x,
        "coupling_y": closed.coupling_y,
        "scale": scale,
        "max_rel_diff": worst,
        "coefficients": rows,
    }
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["coefficient", "index", "closed_re", "closed_im", "quad_re", "quad_im", "abs_diff", "rel_diff"])
        for r in rows:
            w.writerow([r["coefficient"], r["index"], *(f"{v:.15e}" for v in r["closed_form"] + r["quadrature"]),
                        f"{r['abs_diff']:.3e}", f"{r['rel_diff']:.3e}"])
        text = buf.getvalue()
    elif args.format == "pretty":
        head = f"{'coefficient':<14}{'idx':>4}{'closed form':>44}{'quadrature':>44}{'rel diff':>11}"
        lines = [head, "-" * len(head)]
        for r in rows:
            cf = f"{r['closed_form'][0]:+.12e}{r['closed_form'][1]:+.12e}j"
            qd = f"{r['quadrature'][0]:+.12e}{r['quadrature'][1]:+.12e}j"
            lines.append(f"{r['coefficient']:<14}{r['index']:>4}{cf:>44}{qd:>44}{r['rel_diff']:>11.2e}")
        lines.append("")
        lines.append(f"max relative difference {worst:.3e}")
        lines.append(f"closed at t              {str(out['closed']).lower()}")
        text = "\n".join(lines) + "\n"
    else:
        text = render(out, "json")
    emit(text, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    d = read_json(args.plan)
    if not isinstance(d, dict):
        raise CliError(EXIT_PARSE, f"{args.plan}: expected a JSON object")
    alpha = None
    if "trap" in d:
        cfg = fock.SimConfig.from_dict(d)
        if args.fock_dim is not None or args.nbar is not None:
            cfg = fock.SimConfig(
                cfg.trap,
                args.fock_dim or cfg.fock_dim,
                cfg.nbar if args.nbar is None else args.nbar,
                cfg.rtol,
                cfg.atol,
            )
    else:
        plan = pulse.plan_from_dict(d)
        alpha = plan.alpha
        cfg = fock.SimConfig(plan.config, args.fock_dim or 20, args.nbar or 0.0)
    if args.pure_x:
        cfg = fock.SimConfig(cfg.trap.replace(rabi_y=(0.0, 0.0)), cfg.fock_dim, cfg.nbar, cfg.rtol, cfg.atol)
    log.info("simulation config %s", json.dumps(cfg.to_dict(), sort_keys=True))
    if args.eta_sweep:
        try:
            etas = [float(x) for x in args.eta_sweep.split(",")]
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"--eta-sweep expects comma-separated numbers: {exc}") from exc
        if alpha is None:
            raise ConfigError("--eta-sweep needs a pulse plan file (alpha is taken from it)")
        rows = fock.eta_sweep(cfg.trap, etas, alpha, cfg.fock_dim, cfg.nbar, args.threads)
        text = fock.sweep_csv(rows) if args.format == "csv" else render({"rows": rows}, args.format)
        emit(text, args.out)
        return EXIT_OK
    rep = fock.simulate(cfg, alpha=alpha, check_truncation=args.check_truncation)
    out = rep.to_dict()
    if alpha is not None:
        out["alpha"] = alpha
    if args.format == "pretty":
        text = rep.summary() + "\n"
    else:
        text = render(out, args.format)
    emit(text, args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _alpha(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        # fractions such as 2/3
        if re.fullmatch(r"\s*\d+\s*/\s*\d+\s*", text):
            n, d = text.split("/")
            return int(n) / int(d)
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument(
        "--threads",
        type=int,
        default=default_threads(),
        help=f"maximum worker threads (default ${THREADS_ENV} or 1)",
    )
    common.add_argument(
        "--format", choices=("json", "csv", "pretty"), default="json", help="output format (default json)"
    )
    common.add_argument("--degrees", action="store_true", help="print angles in degrees (display only)")
    common.add_argument("--out", metavar="PATH", help="write the result to PATH instead of stdout")
    common.add_argument(
        "--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="stderr log level"
    )

    p = argparse.ArgumentParser(
        prog="balpha",
        description="Two-qubit gate analysis, B^alpha coverage, synthesis, pulse design and simulation.",
        epilog="exit codes: 0 ok, 2 parse error, 3 validation error, 4 optimizer budget exhausted, "
        "5 integrator failure",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    a = sub.add_parser("analyze", parents=[common], help="Cartan coordinates, invariants and entangling power")
    a.add_argument("gate", help="gate JSON file ({'dim': 4, 'entries': [[re, im], ...]})")
    a.set_defaults(func=cmd_analyze)

    target_help = "gate JSON file, gate name (I, CNOT, CZ, SWAP, ISWAP, B) or coordinates c1,c2,c3 (e.g. pi/2,pi/4,0)"

    c = sub.add_parser("coverage", parents=[common], help="two-application coverage verdict for one target")
    c.add_argument("--alpha", type=_alpha, required=True, help="B^alpha exponent in [0, 1] (e.g. 0.5 or 2/3)")
    c.add_argument("--target", required=True, help=target_help + "; coordinates must be in the positive chamber")
    c.set_defaults(func=cmd_coverage)

    s = sub.add_parser("chamber-scan", parents=[common], help="coverage over a positive-chamber grid")
    s.add_argument("--alpha", type=_alpha, required=True, help="B^alpha exponent in [0, 1]")
    s.add_argument("--resolution", type=int, default=24, help="lattice subdivisions per edge (default 24)")
    s.add_argument(
        "--mc-samples", type=int, default=1_000_000, help="samples for the covered-volume estimate (default 1e6)"
    )
    s.set_defaults(func=cmd_chamber_scan, format_default="csv")

    y = sub.add_parser("synthesize", parents=[common], help="numerical search for a B^alpha circuit")
    y.add_argument("--alpha", type=_alpha, required=True, help="B^alpha exponent in [0, 1]")
    y.add_argument("--apps", type=int, choices=(2, 3), default=2, help="number of B^alpha applications")
    y.add_argument("--target", required=True, help=target_help)
    y.add_argument("--starts", type=int, default=32, help="multistart budget (default 32)")
    y.add_argument("--max-iterations", type=int, default=2000, help="iterations per start (default 2000)")
    y.add_argument("--threshold", type=float, default=1e-6, help="success distance (default 1e-6)")
    y.add_argument("--falsify", type=float, default=1e-3, help="distance counted as unreachable (default 1e-3)")
    y.set_defaults(func=cmd_synthesize)

    q = sub.add_parser("pulse-plan", parents=[common], help="closure detunings and Rabi frequencies for B^alpha")
    q.add_argument("--config", metavar="PATH", help="JSON with any of alpha, tau, n_loops, eta_m, eta_n, split, "
                   "psi_x, psi_y, tol; flags override")
    q.add_argument("--alpha", type=_alpha, help="B^alpha exponent in [0, 1]")
    q.add_argument("--tau", type=float, help="gate time in seconds (default 1e-4)")
    q.add_argument("--loops", type=int, help="phase-space loops N (default 1)")
    q.add_argument("--eta", type=float, help="Lamb-Dicke parameter of ion m (default 0.1)")
    q.add_argument("--eta-n", type=float, help="Lamb-Dicke parameter of ion n (default: same as --eta)")
    q.add_argument("--split", help="'symmetric' or a Rabi ratio Omega_m/Omega_n (default symmetric)")
    q.add_argument("--psi-x", type=float, help="phase of the x pair in radians (default 0)")
    q.add_argument("--psi-y", type=float, help="phase of the y pair in radians (default 0)")
    q.add_argument("--tol", type=float, help="closure residual tolerance (default 1e-10)")
    q.set_defaults(func=cmd_pulse_plan)

    v = sub.add_parser("pulse-verify", parents=[common], help="closed forms against adaptive quadrature")
    v.add_argument("--plan", required=True, help="pulse plan JSON written by pulse-plan")
    v.add_argument("--time", type=float, help="evaluation time in seconds (default tau)")
    v.add_argument("--quad-tol", type=float, default=1e-10, help="absolute quadrature tolerance (default 1e-10)")
    v.set_defaults(func=cmd_pulse_verify, format_default="pretty")

    m = sub.add_parser("simulate", parents=[common], help="truncated Fock-space simulation of a plan")
    m.add_argument("--plan", required=True, help="pulse plan JSON or simulation config JSON (with 'trap')")
    m.add_argument("--fock-dim", type=int, help="motional truncation (default 20)")
    m.add_argument("--nbar", type=float, help="thermal occupation of the initial motion (default 0)")
    m.add_argument("--pure-x", action="store_true", help="drop the y drive (control run)")
    m.add_argument("--check-truncation", action="store_true", help="repeat at fock_dim + 10 and report the change")
    m.add_argument("--eta-sweep", metavar="LIST", help="comma-separated eta values; Rabi frequencies held fixed")
    m.set_defaults(func=cmd_simulate)
    return p


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "format_default")}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if not any(a.startswith("--format") for a in argv) and getattr(args, "format_default", None):
        args.format = args.format_default
    logging.basicConfig(level=args.log_level, format="%(name)s %(levelname)s: %(message)s", stream=sys.stderr,
                        force=True)
    log.info("resolved config %s", json.dumps(_resolved(args), sort_keys=True))
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except GateParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except (NonUnitaryInput, ChamberViolation, InvalidAlpha, ConfigError, ResidualTooLarge) as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    except (IntegratorFailure, QuadratureFailure) as exc:
        log.error("integration failure: %s", exc)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
