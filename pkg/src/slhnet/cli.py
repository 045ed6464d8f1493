"""Command-line front end: compose, generator, check, simulate, poles.

Exit codes: 0 = success (check holds), 1 = a requested certificate failed
(its margin is printed), 2 = input error (usage, parse, or validation;
diagnostics go to stderr).  Reports are plain text on stdout with fixed
number formatting, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .dissipation import (ExosystemClass, NaturalRate, StabilityFormRate,
                          check_bounded_real, check_dissipation,
                          check_positive_real, stability_certificate)
from .dynamics import expectation_trace, mean_drift_matrix
from .errors import SlhnetError
from .hilbert import FOCK, QUBIT
from .netspec import NetspecError, parse_netspec, parse_operator_expr
from .operators import DensityMatrix, StateVector, expectation

CLEAN_EPS = 1e-12


def _clean(x: float) -> float:
    return 0.0 if abs(x) < CLEAN_EPS else float(x)


def _fmt_real(x: float) -> str:
    return f"{_clean(x):.9g}"


def _fmt_complex(z: complex) -> str:
    re_part, im_part = _clean(z.real), _clean(z.imag)
    if im_part == 0:
        return f"{re_part:.9g}"
    if re_part == 0:
        return f"{im_part:.9g}i"
    return f"({re_part:.9g}{im_part:+.9g}i)"


def _print_matrix(mat: np.ndarray, indent: str = "  "):
    for row in np.atleast_2d(mat):
        print(indent + " ".join(_fmt_complex(z) for z in row))


def _load_doc(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SlhnetError(f"cannot read {path}: {exc}") from exc
    return parse_netspec(text)


def _space_line(space) -> str:
    if not space.factors:
        return "scalar"
    return " ".join(f"{f.label}:{f.kind}({f.dim})" for f in space.factors)


def _observable(doc, text):
    return parse_operator_expr(text, doc.spaces)


def _initial_state(doc, init: str) -> DensityMatrix:
    space = doc.hilbert_space()
    vecs = {}
    for f in space.factors:
        v = np.zeros(f.dim, dtype=complex)
        v[1 if f.kind == QUBIT else 0] = 1.0
        vecs[f.label] = v
    if init and init != "vacuum":
        for part in init.split(";"):
            fields = part.strip().split(":")
            kind = fields[0]
            if kind == "vacuum":
                continue
            if len(fields) < 2 or not space.has_label(fields[1]):
                raise SlhnetError(f"bad state component {part!r}")
            f = space.factor(fields[1])
            if kind == "basis":
                idx = int(fields[2])
                if not 0 <= idx < f.dim:
                    raise SlhnetError(f"basis index {idx} out of range")
                v = np.zeros(f.dim, dtype=complex)
                v[idx] = 1.0
            elif kind == "coherent":
                if f.kind != FOCK:
                    raise SlhnetError("coherent states need a fock factor")
                alpha = complex(float(fields[2]),
                                float(fields[3]) if len(fields) > 3 else 0.0)
                from .operators import coherent_state
                v = coherent_state(alpha, f.dim, f.label).amplitudes
            else:
                raise SlhnetError(f"unknown state component {kind!r}")
            vecs[f.label] = v
    full = np.array([1.0 + 0j])
    for f in space.factors:
        full = np.kron(full, vecs[f.label])
    psi = StateVector(space, full, init or "vacuum")
    return psi.to_density()


def _report_certificate(report, label_op: str, v_op, witness_space):
    print(f"certificate: {report.kind}")
    print(f"method: {report.method}")
    print(f"margin: {_fmt_real(report.margin)}")
    print(f"tolerance: {report.tol:.9g}")
    print(f"holds: {'yes' if report.holds else 'no'}")
    if report.samples:
        print(f"samples: {len(report.samples)}")
        worst = report.worst_sample()
        print(f"worst sample: {worst.label}")
    if report.witness is not None and v_op is not None:
        val = expectation(report.witness, v_op)
        print(f"witness <{label_op}>: {_fmt_real(val.real)}")
    return 0 if report.holds else 1


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_compose(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    print(f"top: {doc.top}")
    print(f"channels: {top.n}")
    print(f"space: {_space_line(top.space)}")
    for i in range(top.n):
        for j in range(top.n):
            print(f"S[{i}][{j}] =")
            _print_matrix(top.S[i][j].matrix)
    for i in range(top.n):
        print(f"L[{i}] =")
        _print_matrix(top.L[i].matrix)
    print("H =")
    _print_matrix(top.H.matrix)
    return 0


def cmd_generator(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    x = _observable(doc, args.observable)
    from .generator import generator
    out = generator(top, x)
    print(f"top: {doc.top}")
    print(f"observable: {args.observable}")
    print("generator =")
    _print_matrix(out.matrix)
    return 0


def _exosystems_for(doc, args, channels) -> ExosystemClass:
    if getattr(args, "exo", None):
        if args.exo not in doc.exosystems:
            raise SlhnetError(f"no exosystem named {args.exo!r} in the document")
        return doc.exosystems[args.exo]
    return ExosystemClass.scalar_grid(channels=channels, grid=args.grid)


def cmd_check_dissipation(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    v = _observable(doc, args.storage)
    rate = NaturalRate() if args.rate == "natural" else \
        StabilityFormRate(c=0.0, lam=0.0)
    cls = _exosystems_for(doc, args, top.n)
    report = check_dissipation(top, v, rate, cls, network=args.network,
                               tol=args.tol)
    return _report_certificate(report, "V", v, top.space)


def cmd_check_pr(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    v = _observable(doc, args.storage)
    n_ops = [_observable(doc, t) for t in (args.n_out or [])]
    k_ops = [_observable(doc, t) for t in (args.coupling_k or [])]
    report, z = check_positive_real(top, v, K=k_ops, N=n_ops, lam=args.lam,
                                    tol=args.tol)
    code = _report_certificate(report, "V", v, top.space)
    print(f"grid margin: {_fmt_real(report.extras['grid_margin'])}")
    for i, op in enumerate(z):
        print(f"Z[{i}] =")
        _print_matrix(op.matrix)
    return code


def cmd_check_br(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    v = _observable(doc, args.storage)
    n_ops = [_observable(doc, t) for t in (args.n_out or [])]
    z_entries = [_observable(doc, t) for t in (args.z or ["1"] * top.n)]
    if len(z_entries) != top.n:
        raise SlhnetError(
            f"need {top.n} Z entries (diagonal), got {len(z_entries)}")
    z_rows = [[z_entries[i] if i == j else 0.0 for j in range(top.n)]
              for i in range(top.n)]
    report = check_bounded_real(top, v, Z=z_rows, N=n_ops, g=args.gain,
                                lam=args.lam, tol=args.tol)
    code = _report_certificate(report, "V", v, top.space)
    print(f"branch: {report.extras['branch']}")
    return code


def cmd_check_stability(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    v = _observable(doc, args.storage)
    report = stability_certificate(top, v, c=args.c, lam=args.lam,
                                   tol=args.tol)
    code = _report_certificate(report, "V", v, top.space)
    bound = report.extras["bound"]
    print(f"bound: exp(-{_fmt_real(bound.c)} t) <V(0)> + "
          f"{_fmt_real(bound.lam / bound.c)}")
    return code


def cmd_simulate(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    v = _observable(doc, args.observable)
    rho0 = _initial_state(doc, args.init)
    trace = expectation_trace(top, v, rho0, t_final=args.t_final, dt=args.dt)
    if args.out:
        trace.to_csv(args.out)
        print(f"top: {doc.top}")
        print(f"observable: {args.observable}")
        print(f"points: {len(trace.times)}")
        print(f"initial: {_fmt_real(trace.values[0])}")
        print(f"final: {_fmt_real(trace.values[-1])}")
        print(f"csv: {args.out}")
    else:
        trace.to_csv(sys.stdout)
    return 0


def cmd_poles(args) -> int:
    doc = _load_doc(args.file)
    top = doc.top_system()
    drift = mean_drift_matrix(top)
    print(f"top: {doc.top}")
    print("drift matrix =")
    _print_matrix(drift.matrix)
    print("offset =")
    _print_matrix(drift.offset.reshape(1, -1))
    eigs = ", ".join(_fmt_complex(e) for e in drift.eigenvalues)
    print(f"eigenvalues: {eigs}")
    return 0


# ----------------------------------------------------------------------
# argument wiring
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slhnet",
        description="Compose (S,L,H) networks, check dissipation "
                    "certificates, and simulate expectation dynamics.")
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="certificate margin tolerance (default 1e-8)")
    parser.add_argument("--grid", type=int, default=5,
                        help="amplitude grid points per axis over [-4, 4] "
                             "(default 5)")
    parser.add_argument("--out", default=None,
                        help="output path for CSV traces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="compose the document's top system")
    p.add_argument("file")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("generator", help="apply the top system's generator")
    p.add_argument("file")
    p.add_argument("--observable", required=True,
                   help="operator expression, e.g. 'adag@cav*a@cav'")
    p.set_defaults(func=cmd_generator)

    chk = sub.add_parser("check", help="verify a certificate")
    chk_sub = chk.add_subparsers(dest="check_kind", required=True)

    p = chk_sub.add_parser("dissipation", help="grid dissipation check")
    p.add_argument("file")
    p.add_argument("--storage", required=True)
    p.add_argument("--rate", choices=("natural", "zero"), default="natural")
    p.add_argument("--exo", default=None,
                   help="exosystem class declared in the document")
    p.add_argument("--network", choices=("series", "lft"), default="series")
    p.set_defaults(func=cmd_check_dissipation)

    p = chk_sub.add_parser("pr", help="passivity (positive real) certificate")
    p.add_argument("file")
    p.add_argument("--storage", required=True)
    p.add_argument("--n-out", action="append", default=None,
                   help="output operator N, repeatable per channel")
    p.add_argument("--coupling-k", action="append", default=None,
                   help="plant-side direct coupling K, repeatable")
    p.add_argument("--lam", type=float, default=0.0)
    p.set_defaults(func=cmd_check_pr)

    p = chk_sub.add_parser("br", help="gain (bounded real) certificate")
    p.add_argument("file")
    p.add_argument("--storage", required=True)
    p.add_argument("--gain", type=float, required=True)
    p.add_argument("--z", action="append", default=None,
                   help="diagonal Z entry, repeatable per channel "
                        "(default identity)")
    p.add_argument("--n-out", action="append", default=None)
    p.add_argument("--lam", type=float, default=0.0)
    p.set_defaults(func=cmd_check_br)

    p = chk_sub.add_parser("stability", help="exponential decay certificate")
    p.add_argument("file")
    p.add_argument("--storage", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--lam", type=float, default=0.0)
    p.set_defaults(func=cmd_check_stability)

    p = sub.add_parser("simulate", help="trace <V(t)> and emit CSV")
    p.add_argument("file")
    p.add_argument("--observable", required=True)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--init", default="vacuum",
                   help="semicolon-separated components: vacuum | "
                        "basis:<label>:<idx> | coherent:<label>:<re>[:<im>]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("poles", help="mean quadrature drift eigenvalues")
    p.add_argument("file")
    p.set_defaults(func=cmd_poles)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NetspecError as exc:
        print(f"error[{exc.code}] {exc.line}:{exc.col}: {exc.reason}",
              file=sys.stderr)
        return 2
    except SlhnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
