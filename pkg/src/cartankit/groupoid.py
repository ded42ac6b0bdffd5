"""Finite groupoids: validation, isotropy, bisections, subgroupoids.

Arrows and units are interned string identifiers; composition is a dense
table keyed by arrow pairs.  Every finite groupoid is automatically etale
and Hausdorff, so no topology is carried.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

from .errors import NotASubgroupoid, UnknownArrow, UnknownUnit


@dataclass(frozen=True)
class FiniteGroupoid:
    """A finite groupoid given by explicit tables.

    Composition convention: compose(a, b) is defined exactly when
    source(a) = range(b), i.e. the product "a after b".
    """

    units: tuple
    arrows: tuple
    src: dict
    rng: dict
    inv: dict
    compose_table: dict  # (a, b) -> ab
    unit_arrow: dict     # unit -> its identity arrow

    def compose(self, a, b):
        return self.compose_table.get((a, b))

    def is_unit_arrow(self, a) -> bool:
        return a in self._unit_arrow_set

    @cached_property
    def _unit_arrow_set(self):
        return frozenset(self.unit_arrow.values())

    @cached_property
    def composable_pairs(self):
        return tuple(sorted(self.compose_table.keys()))

    def arrows_with_source(self, x):
        if x not in self.unit_arrow:
            raise UnknownUnit(f"unknown unit {x!r}")
        return tuple(a for a in self.arrows if self.src[a] == x)

    def arrows_with_range(self, x):
        if x not in self.unit_arrow:
            raise UnknownUnit(f"unknown unit {x!r}")
        return tuple(a for a in self.arrows if self.rng[a] == x)

    def orbit_representatives(self):
        """One unit per r-orbit: the smallest identifier in each orbit."""
        parent = {x: x for x in self.units}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in self.arrows:
            rx, ry = find(self.src[a]), find(self.rng[a])
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
        reps = sorted({find(x) for x in self.units})
        return tuple(reps)


def build_groupoid(units, arrow_specs, compose_pairs=None,
                   unit_arrows=None) -> FiniteGroupoid:
    """Assemble a FiniteGroupoid from raw tables.

    arrow_specs: iterable of (id, src, rng, inv).  compose_pairs may be
    omitted when it should be inferred (only possible for explicitly listed
    triples); unit arrows are inferred as arrows with src == rng that are
    fixed by inversion and marked in unit_arrows, or given explicitly.
    """
    units = tuple(sorted(units))
    arrows = tuple(sorted(s[0] for s in arrow_specs))
    src = {a: s for a, s, _, _ in arrow_specs}
    rng = {a: r for a, _, r, _ in arrow_specs}
    inv = {a: i for a, _, _, i in arrow_specs}
    compose_table = {(a, b): c for a, b, c in (compose_pairs or [])}
    if unit_arrows is None:
        # infer: the unit arrow of x is the arrow e at x with e*e = e
        unit_arrows = {}
        for a in arrows:
            if src[a] == rng[a] and compose_table.get((a, a)) == a:
                unit_arrows[src[a]] = a
    return FiniteGroupoid(units=units, arrows=arrows, src=src, rng=rng,
                          inv=inv, compose_table=compose_table,
                          unit_arrow=dict(unit_arrows))


def validate(G: FiniteGroupoid) -> list:
    """Check all groupoid axioms; returns a list of violation strings."""
    bad = []
    for x in G.units:
        e = G.unit_arrow.get(x)
        if e is None:
            bad.append(f"unit {x!r} has no unit arrow")
            continue
        if G.src.get(e) != x or G.rng.get(e) != x:
            bad.append(f"unit arrow {e!r} of {x!r} has wrong source/range")
    for a in G.arrows:
        if G.src.get(a) not in G.unit_arrow or G.rng.get(a) not in G.unit_arrow:
            bad.append(f"arrow {a!r} has unknown source or range")
            continue
        ia = G.inv.get(a)
        if ia not in G.src:
            bad.append(f"arrow {a!r} has unknown inverse {ia!r}")
            continue
        if G.inv.get(ia) != a:
            bad.append(f"inverse not involutive at arrow {a!r}")
        if G.src[ia] != G.rng[a] or G.rng[ia] != G.src[a]:
            bad.append(f"inverse of {a!r} has wrong source/range")
        er, es = G.unit_arrow[G.rng[a]], G.unit_arrow[G.src[a]]
        if G.compose(er, a) != a:
            bad.append(f"r(g)g != g at arrow {a!r}")
        if G.compose(a, es) != a:
            bad.append(f"g s(g) != g at arrow {a!r}")
        if G.compose(ia, a) != es:
            bad.append(f"g^-1 g != unit at arrow {a!r}")
        if G.compose(a, ia) != er:
            bad.append(f"g g^-1 != unit at arrow {a!r}")
    for a in G.arrows:
        for b in G.arrows:
            defined = (a, b) in G.compose_table
            should = G.src[a] == G.rng[b]
            if defined and not should:
                bad.append(f"compose defined for non-composable pair ({a!r},{b!r})")
            if should and not defined:
                bad.append(f"compose missing for composable pair ({a!r},{b!r})")
            if defined:
                ab = G.compose_table[(a, b)]
                if ab not in G.src:
                    bad.append(f"compose({a!r},{b!r}) is unknown arrow {ab!r}")
                elif G.src[ab] != G.src[b] or G.rng[ab] != G.rng[a]:
                    bad.append(f"compose({a!r},{b!r}) has wrong source/range")
    for (a, b) in G.composable_pairs:
        ab = G.compose(a, b)
        if ab is None:
            continue
        for c in G.arrows:
            if G.src[b] == G.rng[c]:
                bc = G.compose(b, c)
                if bc is not None and G.compose(ab, c) != G.compose(a, bc):
                    bad.append(f"associativity fails at ({a!r},{b!r},{c!r})")
    return bad


def isotropy(G: FiniteGroupoid, x) -> tuple:
    """Arrows with source and range both equal to x."""
    if x not in G.unit_arrow:
        raise UnknownUnit(f"unknown unit {x!r}")
    return tuple(a for a in G.arrows if G.src[a] == x and G.rng[a] == x)


def is_bisection(G: FiniteGroupoid, S) -> bool:
    """True iff range and source are injective on the arrow set S."""
    S = list(S)
    for a in S:
        if a not in G.src:
            raise UnknownArrow(f"unknown arrow {a!r}")
    srcs = [G.src[a] for a in S]
    rngs = [G.rng[a] for a in S]
    return len(set(srcs)) == len(S) and len(set(rngs)) == len(S)


def is_subgroupoid(G: FiniteGroupoid, H) -> bool:
    """H is an arrow subset closed under inverse and composition, containing
    the unit arrows of its units."""
    H = set(H)
    if not H <= set(G.arrows):
        return False
    for a in H:
        if G.inv[a] not in H:
            return False
        if G.unit_arrow[G.src[a]] not in H or G.unit_arrow[G.rng[a]] not in H:
            return False
        for b in H:
            ab = G.compose(a, b)
            if ab is not None and ab not in H:
                return False
    return True


def has_factorization_property(G: FiniteGroupoid, H) -> bool:
    """Every G-factorization of an H-arrow stays inside H."""
    H = set(H)
    if not is_subgroupoid(G, H):
        raise NotASubgroupoid("H is not a subgroupoid")
    for (a, b), ab in G.compose_table.items():
        if ab in H and (a not in H or b not in H):
            return False
    return True


def restrict_groupoid(G: FiniteGroupoid, H) -> FiniteGroupoid:
    """The subgroupoid on the arrow subset H as a standalone groupoid."""
    H = set(H)
    if not is_subgroupoid(G, H):
        raise NotASubgroupoid("H is not a subgroupoid")
    units = sorted({G.src[a] for a in H} | {G.rng[a] for a in H})
    specs = [(a, G.src[a], G.rng[a], G.inv[a]) for a in sorted(H)]
    pairs = [(a, b, ab) for (a, b), ab in G.compose_table.items()
             if a in H and b in H]
    unit_arrows = {x: G.unit_arrow[x] for x in units}
    return build_groupoid(units, specs, pairs, unit_arrows)


# --- constructions -------------------------------------------------------

def pair_groupoid(n: int, prefix: str = "u") -> FiniteGroupoid:
    """The pair groupoid on n units; arrow i<-j for every pair (i, j)."""
    units = [f"{prefix}{i}" for i in range(n)]
    specs = []
    pairs = []
    aid = lambda i, j: f"{prefix}{i}<-{prefix}{j}"
    for i in range(n):
        for j in range(n):
            specs.append((aid(i, j), units[j], units[i], aid(j, i)))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                pairs.append((aid(i, j), aid(j, k), aid(i, k)))
    unit_arrows = {units[i]: aid(i, i) for i in range(n)}
    return build_groupoid(units, specs, pairs, unit_arrows)


def group_groupoid(elements, mult, inverse, identity,
                   unit: str = "e0", prefix: str = "") -> FiniteGroupoid:
    """A finite group as a one-unit groupoid.

    mult: (g, h) -> gh; inverse: g -> g^-1 over the element labels.
    """
    name = lambda g: f"{prefix}{g}"
    specs = [(name(g), unit, unit, name(inverse(g))) for g in elements]
    pairs = [(name(g), name(h), name(mult(g, h)))
             for g in elements for h in elements]
    return build_groupoid([unit], specs, pairs, {unit: name(identity)})


def klein_four_groupoid(unit: str = "e0", prefix: str = "k") -> FiniteGroupoid:
    """Z/2 x Z/2 over one unit, elements k00, k01, k10, k11."""
    elems = [(0, 0), (0, 1), (1, 0), (1, 1)]
    label = lambda g: f"{g[0]}{g[1]}"
    return group_groupoid(
        [label(g) for g in elems],
        mult=lambda a, b: label(((int(a[0]) + int(b[0])) % 2,
                                 (int(a[1]) + int(b[1])) % 2)),
        inverse=lambda a: a,
        identity="00", unit=unit, prefix=prefix)


def cyclic_groupoid(n: int, unit: str = "e0", prefix: str = "c") -> FiniteGroupoid:
    """Z/n over one unit."""
    return group_groupoid(
        [str(i) for i in range(n)],
        mult=lambda a, b: str((int(a) + int(b)) % n),
        inverse=lambda a: str((-int(a)) % n),
        identity="0", unit=unit, prefix=prefix)


def disjoint_union(G1: FiniteGroupoid, G2: FiniteGroupoid,
                   p1: str = "A.", p2: str = "B.") -> FiniteGroupoid:
    """Disjoint union with identifier prefixes to avoid collisions."""
    def relabel(G, p):
        units = [p + u for u in G.units]
        specs = [(p + a, p + G.src[a], p + G.rng[a], p + G.inv[a])
                 for a in G.arrows]
        pairs = [(p + a, p + b, p + ab)
                 for (a, b), ab in G.compose_table.items()]
        uarr = {p + u: p + e for u, e in G.unit_arrow.items()}
        return units, specs, pairs, uarr

    u1, s1, c1, e1 = relabel(G1, p1)
    u2, s2, c2, e2 = relabel(G2, p2)
    return build_groupoid(u1 + u2, s1 + s2, c1 + c2, {**e1, **e2})


# --- isomorphism search --------------------------------------------------

def invariant_signature(G: FiniteGroupoid):
    """Cheap isomorphism invariants: arrow counts per orbit-normalized
    (source, target) profile and isotropy group orders."""
    iso_orders = sorted(len(isotropy(G, x)) for x in G.units)
    degree_profile = sorted(
        (len(G.arrows_with_source(x)), len(G.arrows_with_range(x)))
        for x in G.units)
    return (len(G.units), len(G.arrows), tuple(iso_orders),
            tuple(degree_profile))


def find_isomorphism(G1: FiniteGroupoid, G2: FiniteGroupoid,
                     max_arrows: int = 12):
    """Exhaustive isomorphism search for small groupoids.

    Returns an arrow bijection dict or None.  For groupoids above
    max_arrows only the invariant signature is compared and an empty dict
    is returned on a match.
    """
    if invariant_signature(G1) != invariant_signature(G2):
        return None
    if len(G1.arrows) > max_arrows:
        return {}

    def compat(u_map, a_map, a, b):
        if u_map.get(G1.src[a], G2.src[b]) != G2.src[b]:
            return False
        if u_map.get(G1.rng[a], G2.rng[b]) != G2.rng[b]:
            return False
        if G1.inv[a] in a_map and a_map[G1.inv[a]] != G2.inv[b]:
            return False
        return True

    arrows1 = sorted(G1.arrows)
    used = set()

    def extend(i, u_map, a_map):
        if i == len(arrows1):
            # verify full table
            for (a, b), ab in G1.compose_table.items():
                if G2.compose(a_map[a], a_map[b]) != a_map[ab]:
                    return None
            return dict(a_map)
        a = arrows1[i]
        for b in G2.arrows:
            if b in used or not compat(u_map, a_map, a, b):
                continue
            if G1.is_unit_arrow(a) != G2.is_unit_arrow(b):
                continue
            # partial composition consistency
            ok = True
            for a2, b2 in a_map.items():
                for x, y, x2, y2 in ((a, b, a2, b2), (a2, b2, a, b)):
                    ab1 = G1.compose(x, x2)
                    ab2 = G2.compose(y, y2)
                    if (ab1 is None) != (ab2 is None):
                        ok = False
                        break
                    if ab1 is not None and ab1 in a_map and a_map[ab1] != ab2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                continue
            used.add(b)
            u_new = dict(u_map)
            u_new[G1.src[a]] = G2.src[b]
            u_new[G1.rng[a]] = G2.rng[b]
            a_map[a] = b
            res = extend(i + 1, u_new, a_map)
            if res is not None:
                return res
            del a_map[a]
            used.discard(b)
        return None

    return extend(0, {}, {})
