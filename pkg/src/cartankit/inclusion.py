"""Finite-dimensional inclusions (C, D): normalizers, dynamics, states,
pseudo-expectations and the canonical ideals.

D is an abelian unital subalgebra of C sharing its unit.  Its Gelfand
space is the finite list of minimal projections p_1..p_m; characters are
sigma_i(d) = trace(p_i d)/trace(p_i).  Pseudo-expectations are exactly
the maps E(x) = sum_i phi_i(p_i x p_i) p_i with each phi_i a state on
the corner p_i C p_i; uniqueness holds iff all corners are scalar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    NotANormalizer,
    NotAbelian,
    NotASubalgebra,
    NotInvariant,
    NotRegular,
    NonUniquePseudoExpectation,
    OutsideAmbient,
)
from .matalg import (
    EPS,
    FdStarAlgebra,
    IdealSubspace,
    _algebra_from_rows,
    _orthonormal_rows,
    _vec,
    generate_star_algebra,
    hs_norm,
    ideal_from_subspace,
    minimal_projections,
    relative_commutant,
    span_residual,
)

#: Default word-length bound for *-semigroup enumeration.
WORD_BOUND = 4
#: Cap on distinct words kept during enumeration.
WORD_CAP = 4000

_WORD_SEED = 0xC0C0


@dataclass(frozen=True)
class Inclusion:
    """An ambient algebra C with distinguished abelian subalgebra D and a
    generating set of verified normalizers."""

    C: FdStarAlgebra
    D: FdStarAlgebra
    normalizer_gens: tuple  # of matrices

    @cached_property
    def min_projs(self) -> tuple:
        return minimal_projections(self.D)

    @cached_property
    def n_corners(self) -> int:
        return len(self.min_projs)

    def char(self, i: int, d) -> complex:
        """The character sigma_i of D, extended to C by compression."""
        p = self.min_projs[i]
        return complex(np.trace(p @ np.asarray(d, dtype=complex) @ p)
                       / np.trace(p))

    @cached_property
    def regular(self) -> bool:
        gens = list(self.normalizer_gens) + list(self.D.basis)
        if not gens:
            return self.C.dim == 1
        A = generate_star_algebra(self.C.ambient_dim, gens)
        return A.subspace_equals(self.C)

    @cached_property
    def commutant_of_D(self) -> FdStarAlgebra:
        return relative_commutant(self.D, self.C)

    @cached_property
    def is_masa(self) -> bool:
        return self.commutant_of_D.subspace_equals(self.D, 1e-7)


def make_inclusion(C: FdStarAlgebra, D: FdStarAlgebra,
                   normalizer_gens=(), eps: float = EPS) -> Inclusion:
    if not D.is_subalgebra_of(C, eps):
        raise NotASubalgebra("D is not contained in C")
    if not D.is_abelian(eps):
        raise NotAbelian("D is not abelian")
    if hs_norm(C.unit - D.unit) >= eps:
        raise NotASubalgebra("C and D do not share a unit")
    gens = tuple(np.asarray(v, dtype=complex) for v in normalizer_gens)
    inc = Inclusion(C=C, D=D, normalizer_gens=gens)
    for v in gens:
        if not is_normalizer(inc, v, eps):
            raise NotANormalizer("generator fails the normalizer condition")
    return inc


def is_normalizer(inc: Inclusion, v, eps: float = EPS) -> bool:
    v = np.asarray(v, dtype=complex)
    if not inc.C.contains(v, max(eps, 1e-7)):
        raise OutsideAmbient("v lies outside the ambient algebra")
    tol = max(eps, 1e-7)
    for d in inc.D.basis:
        if not inc.D.contains(v @ d @ v.conj().T, tol):
            return False
        if not inc.D.contains(v.conj().T @ d @ v, tol):
            return False
    return True


def _require_normalizer(inc: Inclusion, v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if not is_normalizer(inc, v):
        raise NotANormalizer("v is not a normalizer of D in C")
    return v


def beta(inc: Inclusion, v, eps: float = EPS) -> dict:
    """The partial bijection on corner indices induced by v."""
    v = _require_normalizer(inc, v)
    vv = v.conj().T @ v
    out = {}
    for i in range(inc.n_corners):
        wt = inc.char(i, vv).real
        if wt <= max(eps, 1e-9):
            continue
        # beta_v(sigma_i)(d) = sigma_i(v* d v)/sigma_i(v*v): a character
        targets = [j for j in range(inc.n_corners)
                   if abs(inc.char(i, v.conj().T @ inc.min_projs[j] @ v) / wt - 1.0)
                   < 1e-7]
        if len(targets) != 1:
            raise NotANormalizer(
                f"corner {i} does not map to a unique corner under v")
        out[i] = targets[0]
    return out


@dataclass(frozen=True)
class ThetaMap:
    """The *-isomorphism theta_v between corner-supported ideals of D."""

    inclusion: Inclusion
    v: np.ndarray
    domain: tuple  # corner indices j supporting D vv*
    codomain: tuple

    def apply(self, d) -> np.ndarray:
        """theta_v(vv* h) = v* h v; d must lie in the domain ideal."""
        inc = self.inclusion
        v = self.v
        vv = v @ v.conj().T
        h = np.zeros_like(vv)
        for j in self.domain:
            p = inc.min_projs[j]
            h += (inc.char(j, d) / inc.char(j, vv)) * p
        return v.conj().T @ h @ v


def theta(inc: Inclusion, v) -> ThetaMap:
    v = _require_normalizer(inc, v)
    vv = v @ v.conj().T
    dom = tuple(j for j in range(inc.n_corners)
                if abs(inc.char(j, vv)) > 1e-9)
    b = beta(inc, v)
    cod = tuple(sorted(b.keys()))
    return ThetaMap(inclusion=inc, v=v, domain=dom, codomain=cod)


def fixed_point_ideal(inc: Inclusion, v, eps: float = EPS) -> IdealSubspace:
    """K0 = {d in the support ideal of vv*D : vd = dv lies in D^c}."""
    v = _require_normalizer(inc, v)
    vv = v @ v.conj().T
    support = [j for j in range(inc.n_corners) if abs(inc.char(j, vv)) > 1e-9]
    if not support:
        return ideal_from_subspace(inc.D, np.zeros((0, inc.D.ambient_dim ** 2)))
    projs = [inc.min_projs[j] for j in support]
    dc = inc.commutant_of_D
    # linear conditions on coefficients t_j of d = sum t_j p_j
    cols = []
    for p in projs:
        rows = [(v @ p - p @ v).ravel()]
        for c in dc.basis:
            rows.append((v @ p @ c - c @ v @ p).ravel())
        cols.append(np.concatenate(rows))
    K = np.array(cols).T
    u, s, vh = np.linalg.svd(K)
    scale = max(s[0], 1.0) if len(s) else 1.0
    nmask = np.concatenate([s, np.zeros(vh.shape[0] - len(s))]) <= 1e-8 * scale
    sols = vh[nmask].conj()
    mats = [sum(t * p for t, p in zip(sol, projs)) for sol in sols]
    rows = _orthonormal_rows(_vec(mats)) if mats else \
        np.zeros((0, inc.D.ambient_dim ** 2))
    return ideal_from_subspace(inc.D, rows)


def fixed_set_check(inc: Inclusion, v, eps: float = EPS):
    """Corner support of K0 within the v*v ideal vs fixed points of beta."""
    v = _require_normalizer(inc, v)
    K0 = fixed_point_ideal(inc, v)
    b = beta(inc, v)
    fixed = {i for i, j in b.items() if i == j}
    vstar_support = {i for i, _ in b.items()}
    # support of K0 restricted to the v*v ideal
    support = set()
    for i in vstar_support:
        p = inc.min_projs[i]
        if K0.dim and span_residual(K0.basis_rows, p) < 1e-7:
            support.add(i)
        elif K0.dim:
            # p need not be in K0 itself; check p against the projection of
            # K0 onto this corner: some element of K0 is nonzero at corner i
            if any(abs(inc.char(i, k)) > 1e-7 for k in K0.basis):
                support.add(i)
    return (support == fixed, {"support": sorted(support),
                               "fixed": sorted(fixed)})


# --- states --------------------------------------------------------------

@dataclass(frozen=True)
class ModState:
    """A state on C extending the character sigma_i of D."""

    inclusion: Inclusion
    corner_index: int
    values: np.ndarray  # functional values on the basis of C

    def __call__(self, x) -> complex:
        coeffs = self.inclusion.C.coefficients(x)
        return complex(self.values @ coeffs)

    def close_to(self, other: "ModState", tol: float = 1e-7) -> bool:
        return bool(np.max(np.abs(self.values - other.values)) < tol)


def _functional_values(inc: Inclusion, func) -> np.ndarray:
    return np.array([func(b) for b in inc.C.basis], dtype=complex)


def mod_state_from_density(inc: Inclusion, i: int, rho) -> ModState:
    """The state x -> trace(rho p_i x p_i) as a ModState at corner i."""
    rho = np.asarray(rho, dtype=complex)
    p = inc.min_projs[i]
    vals = _functional_values(inc, lambda x: np.trace(rho @ p @ x @ p))
    return ModState(inclusion=inc, corner_index=i, values=vals)


def canonical_corner_state(inc: Inclusion, i: int) -> ModState:
    """The normalized-trace corner state (the unique one for scalar corners)."""
    p = inc.min_projs[i]
    return mod_state_from_density(inc, i, p / np.trace(p))


def check_mod_state(rho: ModState, eps: float = 1e-7) -> list:
    """Verify the ModState invariants; returns violations."""
    inc = rho.inclusion
    bad = []
    if abs(rho(inc.C.unit) - 1.0) > eps:
        bad.append("not unital")
    basis = inc.C.basis
    gram = np.array([[rho(a.conj().T @ b) for b in basis] for a in basis])
    evals = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    if evals.min() < -eps:
        bad.append(f"Gram matrix not PSD (min eigenvalue {evals.min():.2e})")
    for j, p in enumerate(inc.min_projs):
        want = 1.0 if j == rho.corner_index else 0.0
        if abs(rho(p) - want) > eps:
            bad.append(f"restriction to D wrong at corner {j}")
    p = inc.min_projs[rho.corner_index]
    for b in basis:
        if abs(rho(b) - rho(p @ b @ p)) > eps:
            bad.append("state not concentrated on its corner")
            break
    return bad


@dataclass(frozen=True)
class CornerDescriptor:
    """The corner algebra p_i C p_i and its extreme corner states when
    the corner is abelian."""

    corner_index: int
    algebra: FdStarAlgebra
    extreme_states: tuple  # of ModState; empty when corner non-abelian


def corner_algebra(inc: Inclusion, i: int) -> FdStarAlgebra:
    p = inc.min_projs[i]
    mats = [p @ b @ p for b in inc.C.basis]
    rows = _orthonormal_rows(_vec(mats))
    return _algebra_from_rows(inc.C.ambient_dim, rows, p,
                              unit_is_ambient=False)


def mod_states(inc: Inclusion) -> tuple:
    """One CornerDescriptor per minimal projection of D."""
    out = []
    for i in range(inc.n_corners):
        A = corner_algebra(inc, i)
        extremes = ()
        if A.is_abelian(1e-8):
            qs = minimal_projections(A)
            extremes = tuple(
                mod_state_from_density(inc, i, q / np.trace(q)) for q in qs)
        out.append(CornerDescriptor(corner_index=i, algebra=A,
                                    extreme_states=extremes))
    return tuple(out)


# --- word enumeration ----------------------------------------------------

def normalizer_words(inc: Inclusion, word_bound: int = WORD_BOUND,
                     include_d: bool = True, cap: int = WORD_CAP) -> list:
    """Deduplicated *-semigroup words in the generators (and D elements)
    up to the given length.  Deterministic order."""
    alphabet = []
    for v in inc.normalizer_gens:
        alphabet.append(v)
        alphabet.append(v.conj().T)
    if include_d:
        alphabet.extend(inc.min_projs)
        alphabet.append(np.asarray(inc.D.unit, dtype=complex))
        # a deterministic generic diagonal unitary of D, to exercise
        # multiplicative D-coefficients
        rng = np.random.default_rng(_WORD_SEED)
        phases = np.exp(2j * np.pi * rng.random(inc.n_corners))
        u = sum(z * p for z, p in zip(phases, inc.min_projs))
        alphabet.append(u)

    def key(m):
        return tuple(np.round(m.ravel(), 8).tobytes()
                     for m in (m.real, m.imag))

    seen = {}
    frontier = []
    for m in alphabet:
        k = key(m)
        if k not in seen:
            seen[k] = m
            frontier.append(m)
    for _ in range(word_bound - 1):
        new = []
        for w in frontier:
            for a in alphabet:
                m = w @ a
                k = key(m)
                if k not in seen:
                    seen[k] = m
                    new.append(m)
                if len(seen) >= cap:
                    break
            if len(seen) >= cap:
                break
        frontier = new
        if not frontier or len(seen) >= cap:
            break
    return list(seen.values())


def is_compatible_state(inc: Inclusion, rho: ModState,
                        word_bound: int = WORD_BOUND,
                        tol: float = 1e-7):
    """|rho(v)|^2 in {0, rho(v*v)} over the bounded word *-semigroup.

    Returns (True, None) or (False, witness matrix).
    """
    for w in normalizer_words(inc, word_bound):
        lhs = abs(rho(w)) ** 2
        rhs = rho(w.conj().T @ w).real
        scale = max(1.0, abs(rhs))
        if lhs > tol * scale and abs(lhs - rhs) > tol * scale:
            return False, w
    return True, None


def transported_state(inc: Inclusion, rho: ModState, v) -> ModState:
    """beta-tilde_v(rho): x -> rho(v* x v)/rho(v*v)."""
    wt = rho(v.conj().T @ v).real
    vals = _functional_values(inc, lambda x: rho(v.conj().T @ x @ v) / wt)
    # locate the corner the transported state restricts to
    corner = max(range(inc.n_corners),
                 key=lambda j: (vals @ inc.C.coefficients(inc.min_projs[j])).real)
    return ModState(inclusion=inc, corner_index=corner, values=vals)


# --- pseudo-expectations -------------------------------------------------

@dataclass(frozen=True)
class PseudoExpectation:
    """E(x) = sum_i phi_i(p_i x p_i) p_i for corner states phi_i given by
    density matrices."""

    inclusion: Inclusion
    corner_densities: tuple  # density matrices, one per corner

    def apply(self, x) -> np.ndarray:
        inc = self.inclusion
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x)
        for p, rho in zip(inc.min_projs, self.corner_densities):
            out += np.trace(rho @ p @ x @ p) * p
        return out


def canonical_expectation(inc: Inclusion) -> PseudoExpectation:
    dens = tuple(p / np.trace(p) for p in inc.min_projs)
    return PseudoExpectation(inclusion=inc, corner_densities=dens)


@dataclass(frozen=True)
class PseudoExpectationSet:
    """The convex set of pseudo-expectations, via its corner state spaces."""

    inclusion: Inclusion
    corners: tuple  # CornerDescriptor per corner
    unique: bool
    expectation: PseudoExpectation | None
    faithful: bool | None


def pseudo_expectations(inc: Inclusion) -> PseudoExpectationSet:
    corners = mod_states(inc)
    unique = all(c.algebra.dim == 1 for c in corners)
    E = None
    faithful = None
    if unique:
        E = canonical_expectation(inc)
        L = left_kernel(inc, E) if inc.regular else _left_kernel_subspace(inc, E)
        faithful = (L.dim == 0)
    return PseudoExpectationSet(inclusion=inc, corners=corners,
                                unique=unique, expectation=E,
                                faithful=faithful)


def _left_kernel_subspace(inc: Inclusion, E: PseudoExpectation) -> IdealSubspace:
    """{x in C : E(x* x) = 0}, as a subspace wrapped with central support.

    Since each phi_i is a state with density rho_i, E(x*x) = 0 iff
    x p_i rho_i^{1/2} = 0 for every corner; this is a linear condition.
    """
    n = inc.C.ambient_dim
    roots = []
    for p, rho in zip(inc.min_projs, E.corner_densities):
        evals, evecs = np.linalg.eigh(rho)
        evals = np.clip(evals, 0.0, None)
        roots.append(p @ evecs @ np.diag(np.sqrt(evals)) @ evecs.conj().T)
    cols = []
    for b in inc.C.basis:
        cols.append(np.concatenate([(b @ r).ravel() for r in roots]))
    K = np.array(cols).T
    u, s, vh = np.linalg.svd(K)
    scale = max(s[0], 1.0) if len(s) else 1.0
    nmask = np.concatenate([s, np.zeros(vh.shape[0] - len(s))]) <= 1e-8 * scale
    sols = vh[nmask].conj()
    mats = [inc.C.element(c) for c in sols]
    rows = _orthonormal_rows(_vec(mats)) if mats else np.zeros((0, n * n))
    return ideal_from_subspace(inc.C, rows)


def left_kernel(inc: Inclusion, E: PseudoExpectation) -> IdealSubspace:
    """L(C, D) = {x : E(x*x) = 0}; an ideal for regular inclusions."""
    if not inc.regular:
        raise NotRegular("left kernel requires a regular inclusion")
    return _left_kernel_subspace(inc, E)


def radical_ideal(inc: Inclusion, F, check_invariance: bool = True,
                  word_bound: int = 2) -> IdealSubspace:
    """K_F = {x : rho(x*x) = 0 for all rho in F}."""
    F = list(F)
    n = inc.C.ambient_dim
    if not F:
        return ideal_from_subspace(inc.C, inc.C.basis_rows)
    if check_invariance and not _is_invariant(inc, F, word_bound):
        raise NotInvariant("F is not invariant under the normalizer action")
    basis = inc.C.basis
    total = np.zeros((inc.C.dim, inc.C.dim), dtype=complex)
    for rho in F:
        gram = np.array([[rho(a.conj().T @ b) for b in basis] for a in basis])
        total += 0.5 * (gram + gram.conj().T)
    evals, evecs = np.linalg.eigh(total)
    scale = max(float(evals.max()), 1.0)
    null = evecs[:, evals <= 1e-8 * scale]
    mats = [inc.C.element(null[:, j]) for j in range(null.shape[1])]
    rows = _orthonormal_rows(_vec(mats)) if mats else np.zeros((0, n * n))
    return ideal_from_subspace(inc.C, rows)


def _is_invariant(inc: Inclusion, F, word_bound: int) -> bool:
    for rho in F:
        for v in normalizer_words(inc, word_bound, include_d=False):
            if rho(v.conj().T @ v).real <= 1e-9:
                continue
            moved = transported_state(inc, rho, v)
            if not any(moved.close_to(s) for s in F):
                return False
    return True


def strongly_compatible(inc: Inclusion) -> tuple:
    """S_s(C, D) = {sigma_i o E} for the unique pseudo-expectation E."""
    pe = pseudo_expectations(inc)
    if not pe.unique:
        raise NonUniquePseudoExpectation(
            "inclusion does not have the unique pseudo-expectation property")
    E = pe.expectation
    out = []
    for i in range(inc.n_corners):
        vals = _functional_values(
            inc, lambda x: inc.char(i, E.apply(x)))
        out.append(ModState(inclusion=inc, corner_index=i, values=vals))
    return tuple(out)
