"""Command-line front end.

Every command emits a JSON report (the single source of truth); the text
format is rendered from that JSON.  Exit codes: 0 success/all-pass,
1 mathematical violation, 2 input error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import CartanKitError, DimensionOverflow, ParseError
from .groupoid import validate as validate_groupoid
from .inclusion import (
    left_kernel,
    pseudo_expectations,
    strongly_compatible,
)
from .matalg import DIM_CAP, EPS, block_structure
from .reduced import is_cartan_pair, realize, reduced_norm
from .serialize import (
    classify,
    groupoid_from_json,
    inclusion_from_json,
    load_json,
    twist_from_json,
    twist_to_json,
)
from .twist import delta, trivial_twist, validate_cocycle

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


def _base_report(args) -> dict:
    return {
        "schema": "cartankit/v1",
        "version": __version__,
        "tolerance": args.tolerance,
        "word_bound": args.word_bound,
    }


def _render_text(obj, indent=0) -> str:
    lines = []
    pad = "  " * indent
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(v)}")
    else:
        lines.append(f"{pad}{json.dumps(obj)}")
    return "\n".join(lines)


def _emit(report: dict, args) -> None:
    if args.format == "json":
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(_render_text(report) + "\n")


def _load_twist(data):
    kind = classify(data)
    if kind == "twist":
        return twist_from_json(data)
    if kind == "groupoid":
        return trivial_twist(groupoid_from_json(data))
    raise ParseError(f"expected a groupoid or twist file, found {kind}")


def cmd_validate(args) -> int:
    data = load_json(args.path)
    kind = classify(data)
    report = _base_report(args)
    report["kind"] = kind
    violations = []
    if kind == "inclusion":
        inclusion_from_json(data, cap=args.cap)  # constructor validates
    else:
        T = _load_twist(data)
        violations = validate_groupoid(T.groupoid) + validate_cocycle(T)
    report["violations"] = violations
    report["valid"] = not violations
    _emit(report, args)
    return EXIT_OK if not violations else EXIT_VIOLATION


def cmd_cstar(args) -> int:
    T = _load_twist(load_json(args.path))
    bad = validate_groupoid(T.groupoid) + validate_cocycle(T)
    if bad:
        report = _base_report(args)
        report["violations"] = bad
        _emit(report, args)
        return EXIT_VIOLATION
    R = realize(T, args.degree)
    cert = is_cartan_pair(R)
    report = _base_report(args)
    report["degree"] = args.degree
    report["block_structure"] = list(block_structure(R.algebra))
    report["cartan"] = {"masa": cert.diagonal_is_masa,
                        "regular": cert.regular,
                        "faithful_E": cert.expectation_faithful,
                        "is_cartan": cert.is_cartan}
    report["norm_table"] = {
        a: reduced_norm(delta(T, args.degree, a))
        for a in T.groupoid.arrows}
    _emit(report, args)
    return EXIT_OK


def cmd_analyze(args) -> int:
    inc = inclusion_from_json(load_json(args.path), cap=args.cap)
    pe = pseudo_expectations(inc)
    report = _base_report(args)
    report["C_dim"] = inc.C.dim
    report["D_dim"] = inc.D.dim
    report["commutant_dim"] = inc.commutant_of_D.dim
    report["masa"] = inc.is_masa
    report["regular"] = inc.regular
    report["corner_dims"] = [c.algebra.dim for c in pe.corners]
    report["unique_pseudo_expectation"] = pe.unique
    report["faithful"] = pe.faithful
    if pe.unique and inc.regular:
        report["left_kernel_dim"] = left_kernel(inc, pe.expectation).dim
        report["strongly_compatible_states"] = len(strongly_compatible(inc))
    _emit(report, args)
    return EXIT_OK


def cmd_weyl(args) -> int:
    from .weyl import weyl_twist

    inc = inclusion_from_json(load_json(args.path), cap=args.cap)
    W = weyl_twist(inc, args.word_bound)
    report = _base_report(args)
    report["units"] = len(W.twist.groupoid.units)
    report["arrows"] = len(W.twist.groupoid.arrows)
    report["twist"] = twist_to_json(W.twist)
    _emit(report, args)
    return EXIT_OK


def cmd_envelope(args) -> int:
    from .envelope import cartan_envelope

    inc = inclusion_from_json(load_json(args.path), cap=args.cap)
    cert = cartan_envelope(inc, args.word_bound)
    report = _base_report(args)
    report["success"] = cert.success
    report["certificate"] = {
        "unique_pseudo_expectation": cert.has_unique_pseudo_expectation,
        "Dc_abelian": cert.dc_abelian,
        "Dc_essential_over_D": cert.dc_essential_over_d,
        "C_essential_over_Dc": cert.c_essential_over_dc,
        "regular_homomorphism": cert.regular_homomorphism,
        "kernel_equals_KF": cert.kernel_equals_KF,
        "generation": cert.generation,
        "D1_generation": cert.d1_generation,
        "essential_extension": cert.essential_extension,
        "pointwise_density": cert.pointwise_density,
        "cartan": cert.cartan,
        "theta_isomorphism": cert.theta_isomorphism,
    }
    if cert.rejection_reason:
        report["rejection_reason"] = cert.rejection_reason
    if cert.data is not None:
        report["twist"] = twist_to_json(cert.data.twist)
        report["block_structure"] = list(
            block_structure(cert.realization.algebra))
    _emit(report, args)
    return EXIT_OK if cert.success else EXIT_VIOLATION


def cmd_compare(args) -> int:
    from .groupoid import find_isomorphism

    report = _base_report(args)
    if args.path2 is None:
        from .envelope import envelope_uniqueness_crosscheck

        inc = inclusion_from_json(load_json(args.path), cap=args.cap)
        agree = envelope_uniqueness_crosscheck(inc, args.word_bound)
        report["mode"] = "envelope-crosscheck"
        report["agree"] = agree
    else:
        T1 = _load_twist(load_json(args.path))
        T2 = _load_twist(load_json(args.path2))
        b1 = list(block_structure(realize(T1, args.degree).algebra))
        b2 = list(block_structure(realize(T2, args.degree).algebra))
        iso = find_isomorphism(T1.groupoid, T2.groupoid)
        report["mode"] = "twist-comparison"
        report["block_structures"] = [b1, b2]
        report["groupoids_isomorphic"] = iso is not None
        report["agree"] = b1 == b2 and iso is not None
    _emit(report, args)
    return EXIT_OK if report["agree"] else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cartankit",
        description="Finite-scale toolkit for regular inclusions of "
                    "C*-algebras")
    p.add_argument("--tolerance", type=float, default=EPS,
                   help="numerical tolerance (1e-14..1e-4)")
    p.add_argument("--word-bound", type=int, default=4,
                   help="word-length bound for *-semigroup enumeration "
                        "(1..8)")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--degree", type=int, choices=(-1, 1), default=1)
    p.add_argument("--cap", type=int, default=DIM_CAP,
                   help="dimension cap for generated algebras")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="validate a groupoid/twist/inclusion "
                   "file").add_argument("path")
    sub.add_parser("cstar", help="realize the reduced C*-algebra of a "
                   "twist").add_argument("path")
    sub.add_parser("analyze", help="analyze an inclusion "
                   "file").add_argument("path")
    sub.add_parser("weyl", help="extract the Weyl twist of an "
                   "inclusion").add_argument("path")
    sub.add_parser("envelope", help="run the Cartan-envelope "
                   "pipeline").add_argument("path")
    cmp_p = sub.add_parser("compare", help="compare two twists, or "
                           "crosscheck an inclusion's envelope")
    cmp_p.add_argument("path")
    cmp_p.add_argument("path2", nargs="?", default=None)
    return p


_COMMANDS = {
    "validate": cmd_validate,
    "cstar": cmd_cstar,
    "analyze": cmd_analyze,
    "weyl": cmd_weyl,
    "envelope": cmd_envelope,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not (1e-14 <= args.tolerance <= 1e-4):
        sys.stderr.write("tolerance out of range [1e-14, 1e-4]\n")
        return EXIT_INPUT
    if not (1 <= args.word_bound <= 8):
        sys.stderr.write("word bound out of range [1, 8]\n")
        return EXIT_INPUT
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        loc = ""
        if exc.line is not None:
            loc = f" (line {exc.line}, column {exc.column})"
        sys.stderr.write(f"input error: {exc}{loc}\n")
        return EXIT_INPUT
    except DimensionOverflow as exc:
        sys.stderr.write(f"resource cap exceeded: {exc}\n")
        return EXIT_RESOURCE
    except CartanKitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
