"""Eigenfunctionals, eigenfunctional twists over compatible covers, the
homomorphism theta_F, and the Cartan-envelope pipeline.

An eigenfunctional [v, f](x) = f(v* x)/f(v*v)^{1/2} is stored as its
value vector on the basis of C.  Stored representatives automatically
satisfy phi(v) = f(v*v)^{1/2} > 0.  Twist arrows are circle classes of
eigenfunctionals, pinned by rotating the first significant value-vector
entry to the positive reals; because the unit direction is the first
basis vector of C, cover states are already canonical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    CoverNotCertified,
    EnvelopeAbsent,
    NotComposable,
    NotCovering,
    NotInvariant,
    NotNested,
    NotRegular,
    SourceVanishes,
)
from .groupoid import build_groupoid, find_isomorphism, is_subgroupoid, \
    has_factorization_property
from .inclusion import (
    WORD_BOUND,
    Inclusion,
    ModState,
    canonical_expectation,
    is_compatible_state,
    left_kernel,
    make_inclusion,
    normalizer_words,
    pseudo_expectations,
    radical_ideal,
    strongly_compatible,
    _functional_values,
    _is_invariant,
)
from .matalg import (
    FdStarAlgebra,
    _algebra_from_rows,
    _orthonormal_rows,
    _vec,
    central_projections,
    generate_star_algebra,
    hs_norm,
    minimal_projections,
    relative_commutant,
    span_residual,
)
from .reduced import ReducedAlgebra, is_cartan_pair, realize
from .twist import CocycleTwist, EquivariantFunction, convolve, delta, \
    involution, restrict_twist

_EIG_TOL = 1e-7


@dataclass(frozen=True)
class Eigenfunctional:
    """[v, f] with cached source and range states."""

    inclusion: Inclusion
    v: np.ndarray
    source: ModState
    values: np.ndarray  # functional values on the basis of C

    def __call__(self, x) -> complex:
        return complex(self.values @ self.inclusion.C.coefficients(x))

    @cached_property
    def range(self) -> ModState:
        inc = self.inclusion
        pv = complex(self(self.v))
        vals = _functional_values(inc, lambda x: self(x @ self.v) / pv)
        corner = max(range(inc.n_corners),
                     key=lambda j: (vals @ inc.C.coefficients(
                         inc.min_projs[j])).real)
        return ModState(inclusion=inc, corner_index=corner, values=vals)

    def equal(self, other: "Eigenfunctional", tol: float = _EIG_TOL) -> bool:
        """Equality criterion: same source state and s(v* w) > 0."""
        if not self.source.close_to(other.source, tol):
            return False
        t = complex(self.source(self.v.conj().T @ other.v))
        return abs(t.imag) < tol and t.real > tol

    def phase_class_equal(self, other: "Eigenfunctional",
                          tol: float = _EIG_TOL) -> bool:
        """Equality up to a circle factor."""
        if not self.source.close_to(other.source, tol):
            return False
        return abs(self.source(self.v.conj().T @ other.v)) > tol


def eigenfunctional(inc: Inclusion, v, f: ModState) -> Eigenfunctional:
    v = np.asarray(v, dtype=complex)
    wt = complex(f(v.conj().T @ v))
    if wt.real <= 1e-9:
        raise SourceVanishes("f(v*v) vanishes; [v, f] is undefined")
    root = np.sqrt(wt.real)
    vals = _functional_values(inc, lambda x: f(v.conj().T @ x) / root)
    return Eigenfunctional(inclusion=inc, v=v, source=f, values=vals)


def eig_product(a: Eigenfunctional, b: Eigenfunctional) -> Eigenfunctional:
    """a.b = [v_a v_b, s(b)], defined when s(a) = r(b)."""
    if not a.source.close_to(b.range):
        raise NotComposable("source of the first does not match range of "
                            "the second")
    return eigenfunctional(a.inclusion, a.v @ b.v, b.source)


def eig_inverse(a: Eigenfunctional) -> Eigenfunctional:
    """a^{-1} = [v*, r(a)]; satisfies a^{-1}(x) = conj(a(x*))."""
    return eigenfunctional(a.inclusion, a.v.conj().T, a.range)


def _canonicalize(a: Eigenfunctional, tol: float = 1e-9) -> Eigenfunctional:
    """Rotate by a circle factor so the first significant value is
    positive real ([z v, f] = conj(z) [v, f])."""
    scale = np.abs(a.values).max()
    for z in a.values:
        if abs(z) > tol * max(scale, 1.0):
            phase = z / abs(z)
            if abs(phase - 1.0) < 1e-14:
                return a
            # values scale by conj(w) when v scales by w; choose w with
            # conj(w) = conj(phase), i.e. v -> phase^{-1}... rotate v so the
            # stored functional is values/phase
            return Eigenfunctional(inclusion=a.inclusion,
                                   v=a.v * phase,
                                   source=a.source,
                                   values=a.values / phase)
    return a


# --- covers --------------------------------------------------------------

@dataclass(frozen=True)
class CompatibleCover:
    """A certified finite compatible cover of the Gelfand space of D."""

    inclusion: Inclusion
    states: tuple  # of ModState
    word_bound: int
    certified: bool = True


def build_cover(inc: Inclusion, mode: str = "strongly_compatible",
                F=None, word_bound: int = WORD_BOUND) -> CompatibleCover:
    if mode == "strongly_compatible":
        F = strongly_compatible(inc)
    elif mode == "custom":
        F = tuple(F)
    else:
        raise ValueError(f"unknown cover mode {mode!r}")
    corners = {rho.corner_index for rho in F}
    if corners != set(range(inc.n_corners)):
        raise NotCovering("restrictions to the Gelfand space of D are not "
                          "surjective")
    for rho in F:
        ok, witness = is_compatible_state(inc, rho, word_bound)
        if not ok:
            raise NotCovering("cover contains an incompatible state")
    if not _is_invariant(inc, F, word_bound):
        raise NotInvariant("cover is not invariant under the normalizer "
                           "action")
    return CompatibleCover(inclusion=inc, states=tuple(F),
                           word_bound=word_bound)


def covers_nested(F1: CompatibleCover, F2: CompatibleCover):
    """Map each F1 state to its index in F2, or None if not nested."""
    idx = []
    for rho in F1.states:
        hits = [j for j, s in enumerate(F2.states) if rho.close_to(s)]
        if len(hits) != 1:
            return None
        idx.append(hits[0])
    return idx


# --- the eigenfunctional twist -------------------------------------------

@dataclass(frozen=True)
class EigenTwistData:
    """The extracted twist with its canonical eigenfunctional per arrow."""

    inclusion: Inclusion
    cover: CompatibleCover
    twist: CocycleTwist
    arrow_eigs: dict   # arrow id -> canonical Eigenfunctional
    unit_of_state: dict  # cover-state index -> unit id


def _state_index(cover: CompatibleCover, s: ModState):
    for j, rho in enumerate(cover.states):
        if s.close_to(rho):
            return j
    return None


def eigen_twist(inc: Inclusion, cover: CompatibleCover) -> EigenTwistData:
    if not isinstance(cover, CompatibleCover) or not cover.certified:
        raise CoverNotCertified("cover is not certified")
    F = cover.states
    unit_of_state = {j: f"f{j}" for j in range(len(F))}

    # collect canonical eigenfunctional classes
    classes = []  # list of (s_idx, r_idx, Eigenfunctional)
    for j, f in enumerate(F):
        phi = _canonicalize(eigenfunctional(inc, inc.C.unit, f))
        classes.append((j, j, phi))
    for w in normalizer_words(inc, cover.word_bound):
        for j, f in enumerate(F):
            wt = complex(f(w.conj().T @ w))
            if wt.real <= 1e-9 or abs(wt.imag) > 1e-9:
                continue
            phi = _canonicalize(eigenfunctional(inc, w, f))
            r_idx = _state_index(cover, phi.range)
            if r_idx is None:
                continue
            if any(s == j and phi.phase_class_equal(c)
                   for (s, r, c) in classes):
                continue
            classes.append((j, r_idx, phi))

    def sort_key(entry):
        s, r, phi = entry
        rounded = np.round(phi.values, 6)
        return (s, r) + tuple(x for z in rounded for x in (z.real, z.imag))

    classes.sort(key=sort_key)
    arrow_ids = [f"a{k}" for k in range(len(classes))]
    arrow_eigs = {aid: phi for aid, (_, _, phi) in zip(arrow_ids, classes)}
    src = {aid: unit_of_state[s] for aid, (s, _, _) in zip(arrow_ids, classes)}
    rng = {aid: unit_of_state[r] for aid, (_, r, _) in zip(arrow_ids, classes)}

    def find_class(phi: Eigenfunctional):
        """Arrow id and circle factor lam with phi = lam * canonical."""
        for aid, c in arrow_eigs.items():
            if phi.phase_class_equal(c):
                lam = complex(np.vdot(c.values, phi.values)
                              / np.vdot(c.values, c.values))
                return aid, lam / abs(lam)
        return None, None

    inv = {}
    for aid, phi in arrow_eigs.items():
        iid, _ = find_class(_canonicalize(eig_inverse(phi)))
        if iid is None:
            raise CoverNotCertified(
                "eigenfunctional classes not closed under inversion; "
                "raise the word bound")
        inv[aid] = iid

    pairs = []
    sigma = {}
    for a, pa in arrow_eigs.items():
        for b, pb in arrow_eigs.items():
            if src[a] != rng[b]:
                continue
            prod = eig_product(pa, pb)
            cid, lam = find_class(prod)
            if cid is None:
                raise CoverNotCertified(
                    "eigenfunctional classes not closed under products; "
                    "raise the word bound")
            pairs.append((a, b, cid))
            # theta_F(x)(g) = phi_g(x) is multiplicative for the cocycle
            # conj(lam), where phi_a phi_b = lam phi_{ab}
            sigma[(a, b)] = np.conj(lam)

    specs = [(aid, src[aid], rng[aid], inv[aid]) for aid in arrow_ids]
    unit_arrows = {unit_of_state[s]: arrow_ids[k]
                   for k, (s, r, phi) in enumerate(classes)
                   if s == r and hs_norm(
                       phi.values - _canonicalize(eigenfunctional(
                           inc, inc.C.unit, F[s])).values) < 1e-6}
    G = build_groupoid(list(unit_of_state.values()), specs, pairs,
                       unit_arrows)
    T = CocycleTwist(groupoid=G, sigma=sigma)
    return EigenTwistData(inclusion=inc, cover=cover, twist=T,
                          arrow_eigs=arrow_eigs,
                          unit_of_state=unit_of_state)


def theta_F(data: EigenTwistData, a) -> EquivariantFunction:
    """The degree-1 function g -> phi_g(a)."""
    T = data.twist
    vals = np.zeros(len(T.groupoid.arrows), dtype=complex)
    for arrow, phi in data.arrow_eigs.items():
        vals[T.arrow_index[arrow]] = phi(a)
    return EquivariantFunction(T, 1, vals)


def theta_kernel_rows(data: EigenTwistData) -> np.ndarray:
    """Orthonormal rows spanning ker theta_F inside C."""
    inc = data.inclusion
    M = np.array([theta_F(data, b).values for b in inc.C.basis])
    u, s, vh = np.linalg.svd(M.T, full_matrices=True)
    scale = max(s[0], 1.0) if len(s) else 1.0
    nmask = np.concatenate([s, np.zeros(vh.shape[0] - len(s))]) <= 1e-8 * scale
    sols = vh[nmask].conj()
    mats = [inc.C.element(c) for c in sols]
    if not mats:
        return np.zeros((0, inc.C.ambient_dim ** 2))
    return _orthonormal_rows(_vec(mats))


# --- envelope pipeline ---------------------------------------------------

def essential_inclusion(A: FdStarAlgebra, B: FdStarAlgebra) -> bool:
    """Every nonzero ideal of A meets B (finite scale: every minimal
    central block of A)."""
    for q in central_projections(A):
        cols = [(b - q @ b).ravel() for b in B.basis]
        K = np.array(cols).T
        s = np.linalg.svd(K, compute_uv=False)
        scale = max(s[0], 1.0) if len(s) else 1.0
        rank = int(np.sum(s > 1e-8 * scale))
        if rank == B.dim:  # no nonzero b with qb = b
            return False
    return True


@dataclass(frozen=True)
class EnvelopeCertificate:
    """Evidence for (or the reasons against) a Cartan envelope."""

    inclusion: Inclusion
    has_unique_pseudo_expectation: bool
    dc_abelian: bool
    dc_essential_over_d: bool
    c_essential_over_dc: bool
    rejection_reason: str | None = None
    data: EigenTwistData | None = None
    realization: ReducedAlgebra | None = None
    regular_homomorphism: bool = False
    kernel_equals_KF: bool = False
    generation: bool = False
    d1_generation: bool = False
    essential_extension: bool = False
    pointwise_density: bool = False
    cartan: bool = False
    theta_isomorphism: bool = False

    @property
    def success(self) -> bool:
        return (self.has_unique_pseudo_expectation
                and self.regular_homomorphism and self.kernel_equals_KF
                and self.generation and self.d1_generation
                and self.essential_extension and self.pointwise_density
                and self.cartan)


def cartan_envelope(inc: Inclusion,
                    word_bound: int = WORD_BOUND) -> EnvelopeCertificate:
    if not inc.regular:
        raise NotRegular("Cartan envelope requires a regular inclusion")
    pe = pseudo_expectations(inc)
    dc = inc.commutant_of_D
    dc_abelian = dc.is_abelian(1e-8)
    dc_ess = essential_inclusion(dc, inc.D)
    c_ess = essential_inclusion(inc.C, dc)
    if not pe.unique:
        reason = ("no unique pseudo-expectation; the relative commutant "
                  "of D is " + ("abelian" if dc_abelian else "non-abelian"))
        return EnvelopeCertificate(
            inclusion=inc, has_unique_pseudo_expectation=False,
            dc_abelian=dc_abelian, dc_essential_over_d=dc_ess,
            c_essential_over_dc=c_ess, rejection_reason=reason)

    cover = build_cover(inc, "strongly_compatible", word_bound=word_bound)
    data = eigen_twist(inc, cover)
    R = realize(data.twist, 1)

    # theta_F is a *-homomorphism into the realization
    basis = inc.C.basis
    theta_imgs = [theta_F(data, b) for b in basis]
    hom = True
    for i, a in enumerate(basis):
        if hs_norm(theta_F(data, a.conj().T).values
                   - involution(theta_imgs[i]).values) > 1e-8:
            hom = False
        for j, b in enumerate(basis):
            lhs = theta_F(data, a @ b).values
            rhs = convolve(theta_imgs[i], theta_imgs[j]).values
            if hs_norm(lhs - rhs) > 1e-7:
                hom = False
    # regularity of theta: generator images normalize the diagonal
    for v in inc.normalizer_gens:
        m = R.represent(theta_F(data, v))
        for d in R.diagonal.basis:
            if not R.diagonal.contains(m @ d @ m.conj().T, 1e-7) or \
                    not R.diagonal.contains(m.conj().T @ d @ m, 1e-7):
                hom = False

    # ker theta_F = K_F
    ker_rows = theta_kernel_rows(data)
    KF = radical_ideal(inc, cover.states, check_invariance=False)
    same_dim = ker_rows.shape[0] == KF.dim
    ker_eq = same_dim and all(
        span_residual(ker_rows, k) < 1e-7 for k in KF.basis) if same_dim \
        else False
    if same_dim and KF.dim == 0:
        ker_eq = True

    # generation checks
    img_mats = [R.represent(f) for f in theta_imgs]
    gen_alg = generate_star_algebra(R.total_dim,
                                    img_mats + list(R.diagonal.basis))
    generation = gen_alg.subspace_equals(R.algebra, 1e-7)
    e_imgs = [R.represent(R.expectation(f)) for f in theta_imgs]
    d1 = generate_star_algebra(R.total_dim, e_imgs)
    d1_generation = d1.subspace_equals(R.diagonal, 1e-7)

    # essential extension: cover <-> Gelfand space of D bijectively
    corners = [s.corner_index for s in cover.states]
    essential = (len(cover.states) == inc.n_corners
                 and len(set(corners)) == inc.n_corners)

    # pointwise density: theta(C) * C(F) spans every arrow coordinate
    G = data.twist.groupoid
    rows = []
    for f in theta_imgs:
        for x in G.units:
            mask = np.array([1.0 if G.src[a] == x else 0.0
                             for a in G.arrows])
            rows.append(f.values * mask)
    M = np.array(rows)
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(s[0], 1.0) if len(s) else 1.0
    density = int(np.sum(s > 1e-8 * scale)) == len(G.arrows)

    cert = is_cartan_pair(R)
    theta_iso = (KF.dim == 0 and inc.C.dim == R.algebra.dim)
    return EnvelopeCertificate(
        inclusion=inc, has_unique_pseudo_expectation=True,
        dc_abelian=dc_abelian, dc_essential_over_d=dc_ess,
        c_essential_over_dc=c_ess, data=data, realization=R,
        regular_homomorphism=hom, kernel_equals_KF=ker_eq,
        generation=generation, d1_generation=d1_generation,
        essential_extension=essential, pointwise_density=density,
        cartan=cert.is_cartan, theta_isomorphism=theta_iso)


# --- cover comparison ----------------------------------------------------

@dataclass(frozen=True)
class CoverComparison:
    """The restriction epimorphism between nested-cover realizations."""

    data_big: EigenTwistData
    data_small: EigenTwistData
    arrow_map: dict  # small-twist arrow -> big-twist arrow
    dim_big: int
    dim_small: int
    intertwining_residual: float

    def quotient(self, f: EquivariantFunction) -> EquivariantFunction:
        """Restrict a function over the big twist to the small twist."""
        Ts = self.data_small.twist
        vals = np.zeros(len(Ts.groupoid.arrows), dtype=complex)
        Tb = self.data_big.twist
        for a_small, a_big in self.arrow_map.items():
            vals[Ts.arrow_index[a_small]] = f.values[Tb.arrow_index[a_big]]
        return EquivariantFunction(Ts, f.degree, vals)


def cover_comparison(inc: Inclusion, F1: CompatibleCover,
                     F2: CompatibleCover) -> CoverComparison:
    nesting = covers_nested(F1, F2)
    if nesting is None:
        raise NotNested("F1 is not contained in F2")
    d1 = eigen_twist(inc, F1)
    d2 = eigen_twist(inc, F2)
    G2 = d2.twist.groupoid
    keep_units = {d2.unit_of_state[j] for j in nesting}
    H = [a for a in G2.arrows
         if G2.src[a] in keep_units and G2.rng[a] in keep_units]
    if not is_subgroupoid(G2, H) or not has_factorization_property(G2, H):
        raise NotNested("restriction to the small cover is not "
                        "factorization-closed")
    # match small-twist arrows with big-twist arrows via their functionals
    arrow_map = {}
    for a1, phi1 in d1.arrow_eigs.items():
        hits = [a2 for a2 in H
                if phi1.phase_class_equal(d2.arrow_eigs[a2])
                and hs_norm(phi1.values - d2.arrow_eigs[a2].values) < 1e-6]
        if len(hits) != 1:
            raise NotNested("could not match eigenfunctional classes "
                            "between the covers")
        arrow_map[a1] = hits[0]
    # intertwining: q(theta_2(b)) = theta_1(b)
    resid = 0.0
    for b in inc.C.basis:
        t2 = theta_F(d2, b)
        t1 = theta_F(d1, b)
        restricted = np.array(
            [t2.values[d2.twist.arrow_index[arrow_map[a]]]
             for a in d1.twist.groupoid.arrows])
        resid = max(resid, float(np.max(np.abs(restricted - t1.values))))
    R1 = realize(d1.twist, 1)
    R2 = realize(d2.twist, 1)
    return CoverComparison(data_big=d2, data_small=d1, arrow_map=arrow_map,
                           dim_big=R2.algebra.dim, dim_small=R1.algebra.dim,
                           intertwining_residual=resid)


def envelope_uniqueness_crosscheck(inc: Inclusion,
                                   word_bound: int = WORD_BOUND) -> bool:
    """Build the envelope via the eigenfunctional twist and via the Weyl
    twist of C/L(C,D); compare block structures and groupoids."""
    from .weyl import weyl_twist
    from .matalg import block_structure

    cert = cartan_envelope(inc, word_bound)
    if not cert.success:
        raise EnvelopeAbsent(cert.rejection_reason or
                             "no Cartan envelope exists")
    # quotient by L(C, D) = compression by the complementary support
    E = canonical_expectation(inc)
    L = left_kernel(inc, E)
    if L.dim:
        q = inc.C.unit - L.support_projection
        n = inc.C.ambient_dim
        c_rows = _orthonormal_rows(_vec([q @ b @ q for b in inc.C.basis]))
        d_rows = _orthonormal_rows(_vec([q @ b @ q for b in inc.D.basis]))
        Cq = _algebra_from_rows(n, c_rows, q, unit_is_ambient=False)
        Dq = _algebra_from_rows(n, d_rows, q, unit_is_ambient=False)
        gens = [q @ v @ q for v in inc.normalizer_gens]
        inc_q = make_inclusion(Cq, Dq, gens)
    else:
        inc_q = inc
    W = weyl_twist(inc_q, word_bound)
    RA = cert.realization
    RB = realize(W.twist, 1)
    if block_structure(RA.algebra) != block_structure(RB.algebra):
        return False
    GA = cert.data.twist.groupoid
    GB = W.twist.groupoid
    return find_isomorphism(GA, GB) is not None
