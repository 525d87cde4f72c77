"""Command-line entry point ``locc``.

Exit codes: 0 when every invariant flag passes, 2 when one fails, 1 for usage,
file or parse errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .engine import Measure, run_protocol, sample_protocol, validate_measurement
from .errors import LoccError, ParseError, ProtocolError
from .protocol_io import parse_complex, parse_protocol
from .report import dumps, envelope, input_digest, run_report
from .scenarios import get_scenario, run_scenario, scenario_registry, threequbit_report
from .tensor_core import validate_density
from .tolerances import DEFAULT, Tolerances

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    for f in fields(Tolerances):
        p.add_argument(f"--tol-{f.name}", type=float, default=None, metavar="X", help=f"default {getattr(DEFAULT, f.name)}")


def build_parser() -> _Parser:
    parser = _Parser(prog="locc", description="LOCC protocol simulator and majorization checks")
    parser.add_argument("--version", action="version", version=f"locc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a protocol file; extra --NAME VALUE pairs set params")
    run.add_argument("file")
    run.add_argument("--mode", choices=["branch", "sample"], default="branch")
    run.add_argument("--shots", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0, help="sampling seed (LOCC_SEED overrides)")
    run.add_argument("--threads", type=int, default=1)
    _add_common(run)

    val = sub.add_parser("validate", help="parse and validate a protocol file")
    val.add_argument("file")
    _add_common(val)

    sc = sub.add_parser("scenario", help="run a built-in scenario, or 'list' them")
    sc.add_argument("name")
    _add_common(sc)

    tq = sub.add_parser("threequbit", help="construct the three-qubit y/z families")
    tq.add_argument("--l", nargs=3, type=float, required=True, metavar=("L1", "L2", "L3"))
    tq.add_argument("--family", choices=["y", "z", "both"], default="both")
    tq.add_argument("--phase", action="append", default=[], metavar="KLM=THETA", help="phase of one amplitude")
    _add_common(tq)
    return parser


def _tolerances(args) -> Tolerances:
    return DEFAULT.with_overrides(**{f.name: getattr(args, f"tol_{f.name}") for f in fields(Tolerances)})


def _extra_pairs(extra: list[str]) -> dict[str, str]:
    out = {}
    k = 0
    while k < len(extra):
        tok = extra[k]
        if not tok.startswith("--") or len(tok) < 3:
            raise UsageError(f"unexpected argument {tok!r}")
        name, eq, value = tok[2:].partition("=")
        if not eq:
            if k + 1 >= len(extra):
                raise UsageError(f"missing value for {tok}")
            k += 1
            value = extra[k]
        out[name.replace("-", "_")] = value
        k += 1
    return out


def _number(text: str):
    try:
        z = parse_complex(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None
    return z.real if z.imag == 0 else z


def _load(path: str, extra: list[str], tol: Tolerances):
    params = {k: _number(v) for k, v in _extra_pairs(extra).items()}
    text = _read(path)
    pf = parse_protocol(text, params, tol)
    unknown = sorted(set(params) - set(pf.params))
    if unknown:
        raise UsageError(f"{path} declares no param named {', '.join(unknown)}")
    return text, pf


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _emit(report: dict, out: str | None, summary: list[str]) -> int:
    text = dumps(report)
    if out:
        Path(out).write_text(text)
        for line in summary:
            print(line)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.get("passed", False) else EXIT_VIOLATION


def _cmd_run(args, extra) -> int:
    tol = _tolerances(args)
    text, pf = _load(args.file, extra, tol)
    if pf.initial is None:
        raise UsageError(f"{args.file}: no initial state declared")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.mode == "branch":
        report = run_report(text=text, params=pf.params, initial=pf.initial, tol=tol,
                            tree=run_protocol(pf.protocol, pf.initial, tol, args.threads))
    else:
        seed = int(os.environ["LOCC_SEED"]) if os.environ.get("LOCC_SEED") else args.seed
        if args.shots < 1:
            raise UsageError("--shots must be >= 1")
        report = run_report(text=text, params=pf.params, initial=pf.initial, tol=tol,
                            sample=sample_protocol(pf.protocol, pf.initial, args.shots, seed, tol))
    summary = [f"{len(report['leaves'])} leaves, mode {report['mode']}"]
    for m, exp in zip(report["monotonicity"], report["expected_spectra"]):
        summary.append(f"party {m['party']}: expected spectrum top {exp[0]:.6f}, majorizes initial: {m['holds']}")
    summary.append("PASS" if report["passed"] else "FAIL")
    return _emit(report, args.out, summary)


def _cmd_validate(args, extra) -> int:
    tol = _tolerances(args)
    text, pf = _load(args.file, extra, tol)
    measures = [s for s in pf.protocol.steps if isinstance(s, Measure)]
    report = envelope(
        "validate",
        tol,
        input_digest=input_digest(text, pf.params),
        layout=list(pf.layout.dims),
        steps=len(pf.protocol.steps),
        completeness_defects={s.label: validate_measurement(s.mset, tol.complete).completeness_defect for s in measures},
        passed=True,
    )
    if pf.initial is not None:
        d = validate_density(pf.initial, tol.trace)
        report["state"] = {
            "hermiticity_defect": d.hermiticity_defect,
            "min_eigenvalue": d.min_eigenvalue,
            "trace_defect": d.trace_defect,
        }
    return _emit(report, args.out, [f"{args.file}: ok ({len(pf.protocol.steps)} steps)"])


def _cmd_scenario(args, extra) -> int:
    if args.name == "list":
        if extra:
            raise UsageError("'scenario list' takes no options")
        for sc in scenario_registry():
            opts = " ".join(f"--{p.name} {p.default}" for p in sc.params)
            print(f"{sc.name:26s} {sc.summary}  [{opts}]")
        return EXIT_OK
    try:
        sc = get_scenario(args.name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    sp = _Parser(prog=f"locc scenario {sc.name}")
    for p in sc.params:
        sp.add_argument(f"--{p.name}", type=p.type, default=p.default, help=p.help or None)
    values = vars(sp.parse_args(extra))
    report = run_scenario(sc.name, _tolerances(args), **values)
    return _emit(report, args.out, [f"{sc.name}: {'PASS' if report['passed'] else 'FAIL'}"])


def _cmd_threequbit(args, extra) -> int:
    if extra:
        raise UsageError(f"unexpected arguments {extra}")
    phases = {}
    for item in args.phase:
        klm, eq, theta = item.partition("=")
        if not eq:
            raise UsageError(f"bad --phase {item!r}; expected KLM=THETA")
        phases[klm] = float(theta)
    tol = _tolerances(args)
    body = threequbit_report(args.l, args.family, phases, tol)
    report = envelope("threequbit", tol, family=args.family, phases=phases, **body)
    summary = [f"{k}: {v['verdict']}" for k, v in body["families"].items()]
    if "witness" in body:
        w = body["witness"]
        summary.append(f"witness: {w['verdict']}" + (f" (sigma11={w['sigma11']:.6f}, tau11={w['tau11']:.6f})" if "sigma11" in w else ""))
    return _emit(report, args.out, summary)


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "scenario": _cmd_scenario, "threequbit": _cmd_threequbit}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        return _COMMANDS[args.command](args, extra)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        for ln, col, msg in exc.issues:
            print(f"{args.file}:{ln}:{col}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ProtocolError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (LoccError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
