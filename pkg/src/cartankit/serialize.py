"""JSON schemas for groupoids, twists, inclusions, and matrices.

Matrices serialize as row-major arrays of [re, im] pairs.  Cocycles
serialize as sparse [pair, [re, im]] entries with omitted pairs
defaulting to 1.  All loaders raise ParseError with line/column
information for malformed JSON.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ParseError
from .groupoid import FiniteGroupoid, build_groupoid
from .inclusion import Inclusion, make_inclusion
from .matalg import generate_star_algebra
from .twist import CocycleTwist


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    try:
        return np.array([[complex(e[0], e[1]) for e in row] for row in data])
    except (TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"malformed matrix entry: {exc}") from exc


def groupoid_to_json(G: FiniteGroupoid) -> dict:
    return {
        "units": list(G.units),
        "arrows": [{"id": a, "src": G.src[a], "rng": G.rng[a],
                    "inv": G.inv[a]} for a in G.arrows],
        "compose": [[a, b, ab] for (a, b), ab in
                    sorted(G.compose_table.items())],
        "unit_arrows": {u: e for u, e in sorted(G.unit_arrow.items())},
    }


def groupoid_from_json(data) -> FiniteGroupoid:
    try:
        specs = [(a["id"], a["src"], a["rng"], a["inv"])
                 for a in data["arrows"]]
        pairs = [tuple(entry) for entry in data.get("compose", [])]
        unit_arrows = data.get("unit_arrows")
        return build_groupoid(data["units"], specs, pairs, unit_arrows)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed groupoid object: {exc}") from exc


def twist_to_json(T: CocycleTwist) -> dict:
    cocycle = []
    for (a, b), v in sorted(T.sigma.items()):
        if abs(v - 1.0) > 1e-14:
            cocycle.append([[a, b], [float(v.real), float(v.imag)]])
    return {"groupoid": groupoid_to_json(T.groupoid), "cocycle": cocycle}


def twist_from_json(data) -> CocycleTwist:
    G = groupoid_from_json(data["groupoid"] if "groupoid" in data else data)
    sigma = {pair: 1.0 + 0.0j for pair in G.compose_table}
    try:
        for entry in data.get("cocycle", []):
            (a, b), (re, im) = entry
            key = (a, b)
            if key not in sigma:
                raise ParseError(f"cocycle entry on non-composable pair "
                                 f"({a!r}, {b!r})")
            sigma[key] = complex(re, im)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed cocycle entry: {exc}") from exc
    return CocycleTwist(groupoid=G, sigma=sigma)


def inclusion_to_json(inc: Inclusion) -> dict:
    return {
        "ambient_dim": inc.C.ambient_dim,
        "C_generators": [matrix_to_json(b) for b in inc.C.basis],
        "D_generators": [matrix_to_json(b) for b in inc.D.basis],
        "normalizers": [matrix_to_json(v) for v in inc.normalizer_gens],
    }


def inclusion_from_json(data, cap: int = None) -> Inclusion:
    try:
        n = int(data["ambient_dim"])
        cgens = [matrix_from_json(m) for m in data["C_generators"]]
        dgens = [matrix_from_json(m) for m in data["D_generators"]]
        norms = [matrix_from_json(m) for m in data.get("normalizers", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed inclusion object: {exc}") from exc
    kwargs = {} if cap is None else {"cap": cap}
    C = generate_star_algebra(n, cgens, **kwargs)
    D = generate_star_algebra(n, dgens, **kwargs)
    return make_inclusion(C, D, norms)


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc


def classify(data) -> str:
    """Which schema a parsed JSON object follows."""
    if not isinstance(data, dict):
        raise ParseError("top-level JSON value must be an object")
    if "ambient_dim" in data:
        return "inclusion"
    if "groupoid" in data or "cocycle" in data:
        return "twist"
    if "units" in data:
        return "groupoid"
    raise ParseError("unrecognized schema: expected a groupoid, twist, or "
                     "inclusion object")
