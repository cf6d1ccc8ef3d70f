"""sl2-triples and commuting gradings for commuting nilpotent families.

Everything here runs in exact rational arithmetic. Orientation convention
used throughout: ``[Y, N] = 2N``, ``[Y, N-] = -2 N-``, ``[N, N-] = Y`` so
that ``N`` raises ``Y``-weight by two.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import numlin
from .errors import (
    CheckFailed,
    DetNotOne,
    DimensionMismatch,
    GradingNotFound,
    Infeasible,
    InputError,
    NonCommuting,
    NotATriple,
    NotNilpotent,
    NotNilpotentFamily,
    NotUnipotent,
    ZeroNilpotent,
)
from .numlin import bracket, eye, rational, zeros

__all__ = [
    "CommutingGrading",
    "KostantCertificate",
    "MonodromyFamily",
    "NilpotentFamily",
    "Sl2Triple",
    "WeightFiltration",
    "commuting_grading",
    "diagonal_constraint",
    "engel_flag",
    "jm_triple",
    "jm_triple_constrained",
    "jordan_chains",
    "kostant_check",
    "validate_family",
    "weight_filtration",
]


def _is_zero(M):
    return all(v == 0 for v in np.asarray(M).flat)


def _is_diagonal(M):
    M = np.asarray(M)
    return all(M[i, j] == 0 for i in range(M.shape[0]) for j in range(M.shape[1]) if i != j)


def _vec(M):
    return np.asarray(M).reshape(-1)


def _unvec(v, n):
    return np.asarray(v).reshape(n, n)


def _columns(B):
    return [B[:, j] for j in range(B.shape[1])]


def _stack_cols(vectors, n):
    out = zeros((n, len(vectors)))
    for j, v in enumerate(vectors):
        out[:, j] = v
    return out


@dataclass(frozen=True)
class MonodromyFamily:
    gammas: tuple

    @property
    def r(self):
        return self.gammas[0].shape[0]

    @property
    def k(self):
        return len(self.gammas)


@dataclass(frozen=True)
class NilpotentFamily:
    N: tuple
    flag_basis: object = None

    @property
    def r(self):
        return self.N[0].shape[0]

    @property
    def k(self):
        return len(self.N)


@dataclass(frozen=True)
class Sl2Triple:
    N: object
    Y: object
    Nminus: object

    def residuals(self):
        """The three bracket defects; all zero for a valid triple."""
        N, Y, M = self.N, self.Y, self.Nminus
        return {
            "[Y,N]-2N": bracket(Y, N) - 2 * N,
            "[Y,N-]+2N-": bracket(Y, M) + 2 * M,
            "[N,N-]-Y": bracket(N, M) - Y,
        }

    def is_valid(self):
        return all(_is_zero(R) for R in self.residuals().values())


@dataclass(frozen=True)
class CommutingGrading:
    """Joint diagonal grading of a commuting nilpotent family.

    ``basis`` is the change of basis ``g`` (columns are the new basis
    vectors in the input coordinates); ``N`` and ``Y`` are expressed in that
    basis, with every ``Y[i]`` diagonal.
    """

    basis: object
    N: tuple
    Y: tuple
    triples: tuple
    tier: str

    @property
    def weights(self):
        """``weights[i][j]`` is the j-th diagonal entry of ``Y[i]``."""
        return [[Y[j, j] for j in range(Y.shape[0])] for Y in self.Y]

    def check(self):
        for i, j in combinations(range(len(self.Y)), 2):
            if not _is_zero(bracket(self.Y[i], self.Y[j])):
                return False
        return all(_is_diagonal(Y) and sum(np.diag(Y)) == 0 for Y in self.Y) and all(
            t.is_valid() for t in self.triples
        )


@dataclass(frozen=True)
class WeightFiltration:
    weights: tuple
    pieces: dict

    def graded(self, w):
        """Coordinate indices spanning the weight-``w`` piece."""
        return self.pieces.get(w, [])

    def W(self, w):
        """Basis (columns) of ``W_w``: the sum of pieces of weight <= w."""
        idx = [j for j, a in enumerate(self.weights) if a <= w]
        out = zeros((len(self.weights), len(idx)))
        for c, j in enumerate(idx):
            out[j, c] = Fraction(1)
        return out

    def lowers_by_two(self, M):
        """True when ``M`` sends each weight-``w`` piece into the weight-``w-2`` piece."""
        M = np.asarray(M)
        for a_src, src in self.pieces.items():
            for j in src:
                for i in range(M.shape[0]):
                    if M[i, j] != 0 and self.weights[i] != a_src - 2:
                        return False
        return True


@dataclass(frozen=True)
class KostantCertificate:
    difference: object
    in_kernel: bool
    in_image: bool
    nilpotent: bool
    preimage: object = field(default=None, repr=False)


# --- family validation -----------------------------------------------------


def validate_family(gammas):
    """Check integer monodromies and take their logarithms.

    Returns ``(MonodromyFamily, NilpotentFamily)``.
    """
    gammas = [np.asarray(g) for g in gammas]
    if not gammas:
        raise InputError("at least one generator is required")
    r = gammas[0].shape[0] if gammas[0].ndim == 2 else -1
    for idx, g in enumerate(gammas):
        if g.ndim != 2 or g.shape != (r, r):
            raise DimensionMismatch(f"generator {idx} has shape {g.shape}, expected ({r}, {r})")
        if g.dtype == object:
            if any(Fraction(v).denominator != 1 for v in g.flat):
                raise InputError(f"generator {idx} has non-integer entries")
        elif g.dtype.kind not in "iu":
            raise InputError(f"generator {idx} has non-integer entries")
    ex = [rational(g) for g in gammas]
    for idx, g in enumerate(ex):
        if numlin.det(g) != 1:
            raise DetNotOne(f"generator {idx} has determinant {numlin.det(g)}")
    Ns = []
    for idx, g in enumerate(ex):
        try:
            Ns.append(numlin.logm_unipotent(g))
        except NotUnipotent as exc:
            raise NotUnipotent(f"generator {idx} is not unipotent") from exc
    for i, j in combinations(range(len(ex)), 2):
        if not _is_zero(bracket(ex[i], ex[j])):
            raise NonCommuting(f"generators {i} and {j} do not commute", pair=(i, j))
    return MonodromyFamily(tuple(ex)), NilpotentFamily(tuple(Ns))


def _as_family(family):
    if isinstance(family, NilpotentFamily):
        return family
    return NilpotentFamily(tuple(rational(N) for N in family))


# --- Engel flag ------------------------------------------------------------


def engel_flag(family):
    """Basis in which every member of the family is strictly upper triangular.

    Built one vector at a time: given the invariant flag ``V_m`` spanned so
    far, the next vector is the first canonical nullspace vector of
    ``{v : N_i v in V_m for all i}`` not already in ``V_m``.
    """
    fam = _as_family(family)
    r = fam.r
    chosen = []
    for _ in range(r):
        if chosen:
            V = _stack_cols(chosen, r)
            Q = numlin.nullspace(V.T).T  # rows annihilate V_m
        else:
            Q = eye(r)
        A = np.concatenate([Q @ N for N in fam.N], axis=0)
        S = numlin.nullspace(A)
        pick = None
        for v in _columns(S):
            if numlin.rank(_stack_cols(chosen + [v], r)) > len(chosen):
                pick = v
                break
        if pick is None:
            raise NotNilpotentFamily(f"no common kernel vector after {len(chosen)} steps")
        chosen.append(pick)
    g = _stack_cols(chosen, r)
    gi = numlin.inv(g)
    for N in fam.N:
        M = gi @ N @ g
        if any(M[i, j] != 0 for i in range(r) for j in range(i + 1)):
            raise NotNilpotentFamily("family is not simultaneously triangularizable")
    return g


# --- Jacobson-Morozov, Jordan route -----------------------------------------


def jordan_chains(N):
    """Jordan basis of a nilpotent matrix.

    Returns ``(P, sizes)``: the columns of ``P`` are grouped in chains
    ``(N^{m-1} v, ..., N v, v)`` of the listed lengths, longest first, so that
    ``P^{-1} N P`` is a direct sum of upper shift blocks.
    """
    N = rational(N)
    r = N.shape[0]
    if not numlin.is_nilpotent(N):
        raise NotNilpotent("matrix is not nilpotent")
    powers = [eye(r)]
    while not _is_zero(powers[-1]):
        powers.append(powers[-1] @ N)
    m = len(powers) - 1
    kernels = [numlin.nullspace(P) for P in powers]
    chains = []
    for j in range(m, 0, -1):
        span = _columns(kernels[j - 1]) + [powers[length - j] @ v for v, length in chains]
        current = numlin.rank(_stack_cols(span, r)) if span else 0
        for v in _columns(kernels[j]):
            if numlin.rank(_stack_cols(span + [v], r)) > current:
                span.append(v)
                current += 1
                chains.append((v, j))
    cols = []
    for v, length in chains:
        cols.extend(powers[length - 1 - t] @ v for t in range(length))
    return _stack_cols(cols, r), [length for _, length in chains]


def _jordan_model(sizes):
    r = sum(sizes)
    Y = zeros((r, r))
    M = zeros((r, r))
    N = zeros((r, r))
    start = 0
    for m in sizes:
        for i in range(m):
            Y[start + i, start + i] = Fraction(m - 1 - 2 * i)
            if i + 1 < m:
                N[start + i, start + i + 1] = Fraction(1)
                M[start + i + 1, start + i] = Fraction((i + 1) * (m - i - 1))
        start += m
    return N, Y, M


def jm_triple(N):
    """Complete a nonzero nilpotent ``N`` to an sl2-triple via its Jordan form."""
    N = rational(N)
    if not numlin.is_nilpotent(N):
        raise NotNilpotent("matrix is not nilpotent")
    if _is_zero(N):
        raise ZeroNilpotent("the zero matrix has no sl2 completion")
    P, sizes = jordan_chains(N)
    Pi = numlin.inv(P)
    _, Yj, Mj = _jordan_model(sizes)
    t = Sl2Triple(N, P @ Yj @ Pi, P @ Mj @ Pi)
    assert t.is_valid()
    return t


# --- Jacobson-Morozov, constrained linear route -----------------------------


def diagonal_constraint(r):
    """Basis of trace-free diagonal matrices: ``E_jj - E_{j+1,j+1}``."""
    basis = []
    for j in range(r - 1):
        Z = zeros((r, r))
        Z[j, j] = Fraction(1)
        Z[j + 1, j + 1] = Fraction(-1)
        basis.append(Z)
    return basis


def centralizer(N):
    """Basis of ``{Z : [N, Z] = 0}`` in gl(r)."""
    N = rational(N)
    r = N.shape[0]
    return [_unvec(v, r) for v in _columns(numlin.nullspace(numlin.ad_matrix(N)))]


def _nminus(N, Y):
    r = N.shape[0]
    ad_n = numlin.ad_matrix(N)
    ad_y = numlin.ad_matrix(Y) + 2 * eye(r * r)
    A = np.concatenate([ad_n, ad_y], axis=0)
    b = np.concatenate([_vec(Y), _vec(zeros((r, r)))])
    sol = numlin.solve_linear(A, b)
    if not sol.feasible:
        raise NotATriple("no N- completes (N, Y)")
    return _unvec(sol.particular, r)


def jm_triple_constrained(N, constraint="diagonal"):
    """Complete ``N`` with ``Y`` restricted to a linear subspace.

    ``constraint`` is a list of basis matrices or ``"diagonal"`` (trace-free
    diagonal matrices). ``Y`` must satisfy ``[Y, N] = 2N`` and be
    trace-orthogonal to the centralizer of ``N``; the latter is exactly
    membership in the image of ``ad N``. Raises :class:`Infeasible` with a
    left-null witness when the subspace holds no such ``Y``.
    """
    N = rational(N)
    r = N.shape[0]
    if not numlin.is_nilpotent(N):
        raise NotNilpotent("matrix is not nilpotent")
    if _is_zero(N):
        raise ZeroNilpotent("the zero matrix has no sl2 completion")
    if isinstance(constraint, str):
        if constraint != "diagonal":
            raise InputError(f"unknown constraint {constraint!r}")
        basis = diagonal_constraint(r)
    else:
        basis = [rational(Z) for Z in constraint]
    cent = centralizer(N)
    cols = []
    for Z in basis:
        bracket_part = _vec(bracket(Z, N))
        trace_part = np.array([np.sum(Z * C.T) for C in cent], dtype=object)
        cols.append(np.concatenate([bracket_part, trace_part]))
    A = zeros((r * r + len(cent), len(basis)))
    for j, c in enumerate(cols):
        A[:, j] = c
    b = np.concatenate([_vec(2 * N), np.array([Fraction(0)] * len(cent), dtype=object)])
    sol = numlin.solve_linear(A, b)
    if not sol.feasible:
        raise Infeasible(
            "no Y in the constraint subspace completes N", witness=sol.witness, residual=sol.residual
        )
    Y = zeros((r, r))
    for c, Z in zip(sol.particular, basis):
        Y = Y + c * Z
    t = Sl2Triple(N, Y, _nminus(N, Y))
    if not t.is_valid():
        raise NotATriple("constrained solve produced an invalid triple")
    return t


def _kostant_directions(N):
    # Ker(ad N) ∩ Im(ad N): centralizer elements trace-orthogonal to the centralizer
    cent = centralizer(N)
    if not cent:
        return []
    G = zeros((len(cent), len(cent)))
    for a, Ca in enumerate(cent):
        for b, Cb in enumerate(cent):
            G[a, b] = np.sum(Ca * Cb.T)
    out = []
    for coeffs in _columns(numlin.nullspace(G)):
        Z = zeros(cent[0].shape)
        for c, C in zip(coeffs, cent):
            Z = Z + c * C
        out.append(Z)
    return out


# --- commuting gradings ----------------------------------------------------


def _components(mats, r):
    parent = list(range(r))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for M in mats:
        for i in range(r):
            for j in range(r):
                if M[i, j] != 0:
                    parent[find(i)] = find(j)
    groups = {}
    for i in range(r):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _block_split_ys(Ns, r):
    comps = _components(Ns, r)
    owners = []
    for comp in comps:
        who = [i for i, N in enumerate(Ns) if not _is_zero(N[np.ix_(comp, comp)])]
        if len(who) > 1:
            return None
        owners.append(who[0] if who else None)
    Ys = [zeros((r, r)) for _ in Ns]
    for comp, i in zip(comps, owners):
        if i is None:
            continue
        sub = jm_triple(Ns[i][np.ix_(comp, comp)])
        for a, ia in enumerate(comp):
            for b, ib in enumerate(comp):
                Ys[i][ia, ib] = sub.Y[a, b]
    return Ys


def _solve_commuting(Y0, directions, others):
    """Find ``Y0 + sum c_k Z_k`` commuting with every matrix in ``others``."""
    if not others:
        return Y0
    r = Y0.shape[0]
    if not directions:
        return Y0 if all(_is_zero(bracket(Y0, X)) for X in others) else None
    A = zeros((r * r * len(others), len(directions)))
    b = np.concatenate([_vec(-bracket(Y0, X)) for X in others])
    for k, Z in enumerate(directions):
        A[:, k] = np.concatenate([_vec(bracket(Z, X)) for X in others])
    sol = numlin.solve_linear(A, b)
    if not sol.feasible:
        return None
    Y = Y0
    for c, Z in zip(sol.particular, directions):
        Y = Y + c * Z
    return Y


def _newton(Ns, Ys, budget):
    """Exact Newton iteration on the bilinear system ``[Y_i, Y_j] = 0``.

    Each ``Y_i`` moves in its own Kostant directions; one step solves the
    linearization in all of them jointly.
    """
    active = [i for i, N in enumerate(Ns) if not _is_zero(N)]
    pairs = list(combinations(active, 2))
    cols = [(i, Z) for i in active for Z in _kostant_directions(Ns[i])]
    r = Ns[0].shape[0]
    Ys = list(Ys)
    for step in range(budget):
        if all(_is_zero(bracket(Ys[i], Ys[j])) for i, j in pairs):
            return Ys, step
        if not cols:
            break
        A = zeros((r * r * len(pairs), len(cols)))
        b = np.concatenate([_vec(-bracket(Ys[i], Ys[j])) for i, j in pairs])
        for c, (k, Z) in enumerate(cols):
            blocks = []
            for i, j in pairs:
                if k == i:
                    blocks.append(_vec(bracket(Z, Ys[j])))
                elif k == j:
                    blocks.append(_vec(bracket(Ys[i], Z)))
                else:
                    blocks.append(_vec(zeros((r, r))))
            A[:, c] = np.concatenate(blocks)
        sol = numlin.solve_linear(A, b)
        if not sol.feasible:
            break
        for c, (k, Z) in zip(sol.particular, cols):
            if c:
                Ys[k] = Ys[k] + c * Z
    if all(_is_zero(bracket(Ys[i], Ys[j])) for i, j in pairs):
        return Ys, budget
    return None, step


def _alternate(Ns, Ys, budget):
    active = [i for i, N in enumerate(Ns) if not _is_zero(N)]
    dirs = {i: _kostant_directions(Ns[i]) for i in active}
    Ys = list(Ys)
    for sweep in range(budget):
        if all(_is_zero(bracket(Ys[i], Ys[j])) for i, j in combinations(active, 2)):
            return Ys, sweep
        order = active[sweep % len(active):] + active[: sweep % len(active)]
        done = []
        for i in order:
            others = [Ys[j] for j in active if j != i]
            Y = _solve_commuting(Ys[i], dirs[i], others)
            if Y is None:
                Y = _solve_commuting(Ys[i], dirs[i], [Ys[j] for j in done])
            if Y is not None:
                Ys[i] = Y
            done.append(i)
    if all(_is_zero(bracket(Ys[i], Ys[j])) for i, j in combinations(active, 2)):
        return Ys, budget
    return None, budget


def _joint_eigenbasis(Ys, r):
    """Joint eigenvectors of commuting semisimple rational matrices.

    Each eigenspace basis is normalized so that its vectors end in a 1 at
    distinct trailing positions; vectors are then ordered by that trailing
    position, which keeps ``g`` upper unitriangular whenever possible.
    """
    spaces = [(eye(r), ())]
    for Y in Ys:
        split = []
        for B, key in spaces:
            for lam in range(-(r - 1), r):
                C = numlin.nullspace((Y - Fraction(lam) * eye(r)) @ B)
                if C.shape[1]:
                    split.append((B @ C, key + (lam,)))
        spaces = split
    if sum(B.shape[1] for B, _ in spaces) != r:
        raise GradingNotFound("grading elements are not simultaneously diagonalizable")
    vectors = []
    for B, key in spaces:
        R, pivots = numlin.rref(B.T[:, ::-1])
        for row, p in zip(R, pivots):
            vectors.append((r - 1 - p, tuple(-w for w in key), row[::-1]))
    vectors.sort(key=lambda item: (item[0], item[1]))
    return _stack_cols([v for _, _, v in vectors], r)


def commuting_grading(family, budget=32):
    """Diagonal semisimple elements ``Y_i`` completing each ``N_i``.

    Strategy by tier: a single generator uses its Jordan triple (T1); a
    family supported on disjoint diagonal blocks, one generator per block,
    is handled blockwise (T2); otherwise (T3) the Engel flag is tried with a
    diagonal-constrained solve. Failing that, each ``Y_i`` ranges over its
    affine set of completions and the search for pairwise commuting ``Y_i``
    runs exact Newton steps on the joint bilinear system, then alternating
    one-at-a-time solves. ``budget`` caps the passes of both.
    """
    fam = _as_family(family)
    Ns = list(fam.N)
    r = fam.r
    if any(N.shape != (r, r) for N in Ns):
        raise DimensionMismatch("family members differ in size")
    base = eye(r)
    if len(Ns) == 1:
        tier = "T1"
        Ys = [jm_triple(Ns[0]).Y if not _is_zero(Ns[0]) else zeros((r, r))]
    else:
        Ys = _block_split_ys(Ns, r)
        tier = "T2"
        if Ys is None:
            tier = "T3"
            base = engel_flag(fam)
            bi = numlin.inv(base)
            Ns_b = [bi @ N @ base for N in Ns]
            Ys, feasible = [], True
            for N in Ns_b:
                if _is_zero(N):
                    Ys.append(zeros((r, r)))
                    continue
                try:
                    Ys.append(jm_triple_constrained(N).Y)
                except Infeasible:
                    feasible = False
                    Ys.append(jm_triple(N).Y)
            if not feasible:
                found, used = _newton(Ns_b, Ys, budget)
                if found is None:
                    found, _ = _alternate(Ns_b, Ys, max(budget - used, 1))
                Ys = found
                if Ys is None:
                    raise GradingNotFound(f"no commuting grading found within {budget} alternating passes")
    if all(_is_diagonal(Y) for Y in Ys):
        g = eye(r)
    else:
        g = _joint_eigenbasis(Ys, r)
    gi = numlin.inv(g)
    Yd = tuple(gi @ Y @ g for Y in Ys)
    total = base @ g
    ti = numlin.inv(total)
    Nd = tuple(ti @ N @ total for N in Ns)
    triples = tuple(
        Sl2Triple(N, Y, _nminus(N, Y)) if not _is_zero(N) else Sl2Triple(N, Y, zeros((r, r)))
        for N, Y in zip(Nd, Yd)
    )
    out = CommutingGrading(total, Nd, Yd, triples, tier)
    if not out.check():
        raise GradingNotFound(f"tier {tier} produced a grading that fails verification")
    return out


# --- filtrations and uniqueness --------------------------------------------


def _in_image(N, D):
    r = N.shape[0]
    sol = numlin.solve_linear(numlin.ad_matrix(N), _vec(D))
    return sol.feasible, (_unvec(sol.particular, r) if sol.feasible else None)


def weight_filtration(Y, N):
    """Weight filtration of ``N`` read off a diagonal grading element ``Y``.

    The section-level operator ``-N^T`` lowers weights by two.
    """
    Y = rational(Y)
    N = rational(N)
    if not _is_diagonal(Y):
        raise NotATriple("grading element must be diagonal")
    if not _is_zero(bracket(Y, N) - 2 * N):
        raise NotATriple("[Y, N] != 2N")
    if not _is_zero(N) and not _in_image(N, Y)[0]:
        raise NotATriple("Y is not in the image of ad N")
    weights = tuple(Y[j, j] for j in range(Y.shape[0]))
    pieces = {}
    for j, w in enumerate(weights):
        pieces.setdefault(w, []).append(j)
    return WeightFiltration(weights, dict(sorted(pieces.items())))


def kostant_check(N, Y1, Y2):
    """Certify that ``Y1 - Y2`` lies in ``Ker(ad N) ∩ Im(ad N)`` and is nilpotent.

    For diagonal inputs the difference must vanish outright.
    """
    N, Y1, Y2 = rational(N), rational(Y1), rational(Y2)
    for name, Y in (("Y1", Y1), ("Y2", Y2)):
        if not _is_zero(bracket(Y, N) - 2 * N):
            raise CheckFailed(f"{name} violates [Y, N] = 2N", membership="bracket")
    D = Y1 - Y2
    in_kernel = _is_zero(bracket(N, D))
    in_image, pre = _in_image(N, D)
    nilpotent = numlin.is_nilpotent(D)
    cert = KostantCertificate(D, in_kernel, in_image, nilpotent, pre)
    if not in_kernel:
        raise CheckFailed("difference is not in Ker(ad N)", membership="kernel")
    if not in_image:
        raise CheckFailed("difference is not in Im(ad N)", membership="image")
    if not nilpotent:
        raise CheckFailed("difference is not nilpotent", membership="nilpotent")
    if _is_diagonal(Y1) and _is_diagonal(Y2) and not _is_zero(D):
        raise CheckFailed("diagonal grading elements differ", membership="diagonal")
    return cert
