"""Clonoid coordinates, the embeddings L_A and the CompRep algorithm.

For ``0 <= i <= k`` let ``dom_i`` be the full-rank i x k matrices.  A clonoid
C from F^k to B is described by submodules ``C_i`` of ``B^{dom_i}`` that are
invariant under ``g -> g(M .)`` for M in GL_i.  For a full-rank m x i matrix
A the embedding ``L_A`` turns ``g`` into an m-ary operation with
``L_A(g)(A U) = g(U)`` and ``L_A(g)(X) = 0`` for other X of rank <= i.

All values are handled in the Z/N embedding of B used by funcspace.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .clonoid import ClonoidLevel
from .funcspace import FuncTable, ModuleSpec, to_zn_vector
from .linalg import (
    Subspace,
    all_matrices,
    check_budget,
    colspace,
    decode_batch,
    encode,
    encode_batch,
    enumerate_GL,
    enumerate_codes,
    enumerate_subspaces,
    inverse,
    is_subspace,
    left_action_codes,
    matmul,
    matrix_ranks,
    rank,
    solve_right,
    subspaces_of,
    batch_rank,
)
from .scalars import FieldSpec, Submodule, check_coprime, field_make, howell_form
from .unifgen import _completion, build_JH, op_apply


class RankMismatch(ValueError):
    pass


class InvalidCoords(ValueError):
    pass


@lru_cache(maxsize=64)
def domain_codes(F: FieldSpec, i: int, k: int) -> np.ndarray:
    """Codes of the full-rank i x k matrices, ascending."""
    if i == 0:
        return np.zeros(1, dtype=np.int64)
    return enumerate_codes(F, i, k, rank_eq=i)


@lru_cache(maxsize=64)
def _domain_lookup(F: FieldSpec, i: int, k: int) -> np.ndarray:
    lut = np.full(F.q ** (i * k), -1, dtype=np.int64)
    dom = domain_codes(F, i, k)
    lut[dom] = np.arange(len(dom))
    return lut


def mik_size(F: FieldSpec, i: int, k: int) -> int:
    return len(domain_codes(F, i, k))


def _left_inverse(F: FieldSpec, A) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    return inverse(F, _completion(F, A))[: A.shape[1]]


# ---------------------------------------------------------------------------
# L_A


class LAOperator:
    """The embedding ``L_A`` of B^{dom_i} into m-ary operations on F^k."""

    def __init__(self, field: FieldSpec, k: int, module: ModuleSpec, A):
        A = np.asarray(A, dtype=np.int64)
        m, i = A.shape
        if rank(field, A) != i:
            raise RankMismatch("A must have full column rank")
        if i > k:
            raise RankMismatch(f"rank {i} exceeds k = {k}")
        check_coprime(field.q, module.order)
        self.field, self.k, self.module, self.A = field, k, module, A
        self.m, self.i, self.N = m, i, module.N
        self.H = colspace(field, A)

    def _gvec(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=np.int64).reshape(-1, self.module.r)
        if g.shape[0] != mik_size(self.field, self.i, self.k):
            raise ValueError("coordinate vector has the wrong length")
        return g % self.N

    def eval(self, g, X) -> np.ndarray:
        """``L_A(g)(X)`` by reduction to the column space of X."""
        F, k, i, N = self.field, self.k, self.i, self.N
        g = self._gvec(g)
        X = np.asarray(X, dtype=np.int64)
        zero = np.zeros(self.module.r, dtype=np.int64)
        if i == 0:
            return g[0].copy()
        W = colspace(F, X)
        if W.dim < i or not is_subspace(F, self.H, W):
            return zero
        BW = W.columns()
        Z = solve_right(F, BW, X)
        Ap = solve_right(F, BW, self.A)
        lut = _domain_lookup(F, i, k)
        if W.dim == i:
            U = matmul(F, inverse(F, Ap), Z)
            return g[lut[encode(U, F.q)]].copy()
        d = W.dim
        J = build_JH(F, k, N, colspace(F, Ap), d)
        Y = matmul(F, J.matrices(), Z)  # (T, d, k)
        keep = batch_rank(F, Y) == i
        if not keep.any():
            return zero
        U = matmul(F, _left_inverse(F, Ap), Y[keep])
        idx = lut[encode_batch(U, F.q)]
        return (J.coeffs[keep] @ g[idx]) % N

    def table(self, g) -> np.ndarray:
        """Embedded values at every X in F^{m x k}, shape (q^{mk}, r)."""
        Xs = all_matrices(self.field, self.m, self.k)
        return np.array([self.eval(g, X) for X in Xs], dtype=np.int64).reshape(len(Xs), self.module.r)

    def prime_table(self, g) -> np.ndarray:
        """``L'_A(g)``: g(U) at X = A U with U of rank i, 0 elsewhere."""
        F, k, i = self.field, self.k, self.i
        g = self._gvec(g)
        out = np.zeros((self.field.q ** (self.m * k), self.module.r), dtype=np.int64)
        dom = decode_batch(domain_codes(F, i, k), i, k, F.q)
        if i == 0:
            out[0] = g[0]
            return out
        out[encode_batch(matmul(F, self.A, dom), F.q)] = g
        return out

    def table_via_operator(self, g) -> np.ndarray:
        """``J_{C(A)}(L'_A g)`` computed with the arity-m interpolator."""
        F, k, i, m = self.field, self.k, self.i, self.m
        base = self.prime_table(g)
        if m == i:
            return base
        if i == 0:
            return np.broadcast_to(base[0], base.shape).copy()
        J = build_JH(F, k, self.N, self.H, m)
        embedded = ModuleSpec((self.N,) * self.module.r)
        out = op_apply(J, FuncTable(F, k, m, embedded, base))
        return out.values.copy()


def build_LA(field: FieldSpec, k: int, module: ModuleSpec, A) -> LAOperator:
    return LAOperator(field, k, module, A)


def eval_LA(op: LAOperator, g, X) -> np.ndarray:
    return op.eval(g, X)


def representative(H: Subspace) -> np.ndarray:
    """The fixed ``A_H``: columns are the RREF basis rows of H."""
    return H.columns()


# ---------------------------------------------------------------------------
# decomposition


def decompose(f: FuncTable, order_seed: int | None = None) -> dict:
    """Components ``{H: g_H}`` with ``f = Σ_H L_{A_H}(g_H)``.

    Components are embedded coordinate vectors of shape ``(|dom_i|, r)``.
    ``order_seed`` permutes the enumeration order of subspaces within a
    dimension; the result does not depend on it.
    """
    F, k, m, module = f.field, f.k, f.m, f.module
    check_coprime(F.q, module.order)
    resid = to_zn_vector(f).reshape(-1, module.r).copy()
    N = module.N
    comps = {}
    rng = None if order_seed is None else np.random.default_rng(order_seed)
    for i in range(min(k, m) + 1):
        Hs = enumerate_subspaces(F, m, i)
        if rng is not None:
            Hs = [Hs[j] for j in rng.permutation(len(Hs))]
        dom = decode_batch(domain_codes(F, i, k), i, k, F.q)
        for H in Hs:
            A = representative(H)
            pts = np.zeros(1, dtype=np.int64) if i == 0 else encode_batch(matmul(F, A, dom), F.q)
            g = resid[pts].copy()
            comps[H] = g
        for H in Hs:
            if comps[H].any():
                resid = (resid - LAOperator(F, k, module, representative(H)).table(comps[H])) % N
    if resid.any():
        raise RuntimeError("decomposition left a nonzero residual")
    return comps


def recompose(comps: dict, field: FieldSpec, k: int, m: int, module: ModuleSpec) -> np.ndarray:
    out = np.zeros((field.q ** (m * k), module.r), dtype=np.int64)
    for H, g in comps.items():
        if np.asarray(g).any():
            out = (out + LAOperator(field, k, module, representative(H)).table(g)) % module.N
    return out


# ---------------------------------------------------------------------------
# coordinates


@dataclass(frozen=True, eq=False)
class ClonoidCoords:
    field: FieldSpec
    k: int
    module: ModuleSpec
    levels: tuple  # Submodule per i = 0..k

    def __eq__(self, other):
        return (
            isinstance(other, ClonoidCoords)
            and (self.field, self.k, self.module) == (other.field, other.k, other.module)
            and self.levels == other.levels
        )

    def __hash__(self):
        return hash((self.field, self.k, self.module, self.levels))

    def __le__(self, other) -> bool:
        return all(a <= b for a, b in zip(self.levels, other.levels))

    def validate(self, check_invariance: bool = True) -> None:
        F, k = self.field, self.k
        if len(self.levels) != k + 1:
            raise InvalidCoords(f"expected {k + 1} levels, got {len(self.levels)}")
        for i, S in enumerate(self.levels):
            dim = mik_size(F, i, k) * self.module.r
            if S.dim != dim or S.N != self.module.N:
                raise InvalidCoords(f"level {i} lives in the wrong ambient module")
            if check_invariance and not is_invariant(F, i, k, self.module, S):
                raise InvalidCoords(f"level {i} is not GL_{i}-invariant")

    def to_json(self) -> dict:
        return {
            "q": self.field.q,
            "p": self.field.p,
            "e": self.field.e,
            "k": self.k,
            "module": list(self.module.factors),
            "levels": [{"i": i, "basis": S.basis.tolist()} for i, S in enumerate(self.levels)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClonoidCoords":
        F = field_make(int(obj["p"]), int(obj.get("e", 1)))
        k = int(obj["k"])
        module = ModuleSpec(tuple(obj["module"]))
        levels = []
        for i, lev in enumerate(sorted(obj["levels"], key=lambda d: d["i"])):
            if int(lev["i"]) != i:
                raise InvalidCoords("levels must be numbered 0..k")
            dim = mik_size(F, i, k) * module.r
            levels.append(Submodule.span(np.array(lev["basis"], dtype=np.int64).reshape(-1, dim), module.N, dim))
        out = cls(F, k, module, tuple(levels))
        out.validate()
        return out


def gl_permutations(F: FieldSpec, i: int, k: int) -> np.ndarray:
    """``perm[t, u]`` = index of ``M_t U_u`` in dom_i for M_t in GL_i."""
    if i == 0:
        return np.zeros((1, 1), dtype=np.int64)
    dom = decode_batch(domain_codes(F, i, k), i, k, F.q)
    codes = left_action_codes(F, enumerate_GL(F, i), dom)
    return _domain_lookup(F, i, k)[codes]


def _act(vec, perm, r):
    v = np.asarray(vec).reshape(-1, r)
    return v[perm].reshape(-1)


def is_invariant(F, i, k, module, S: Submodule) -> bool:
    perms = gl_permutations(F, i, k)
    return all(_act(row, p, module.r) in S for row in S.basis for p in perms)


def coords_from_level(level: ClonoidLevel) -> ClonoidCoords:
    """Coordinates ``C_i = {U -> h([Id_i; 0] U) : h in C^(m), h = 0 at rank < i}``."""
    F, k, m, module = level.field, level.k, level.m, level.module
    if m < k:
        raise InvalidCoords("coordinates need a level of arity >= k")
    r, N = module.r, module.N
    ranks = matrix_ranks(F, m, k)
    basis = level.basis
    levels = []
    for i in range(k + 1):
        dim_i = mik_size(F, i, k) * r
        A = np.zeros((m, i), dtype=np.int64)
        A[:i, :i] = np.eye(i, dtype=np.int64)
        dom = decode_batch(domain_codes(F, i, k), i, k, F.q)
        fiber_pts = np.zeros(1, dtype=np.int64) if i == 0 else encode_batch(matmul(F, A, dom), F.q)
        low_pts = np.flatnonzero(ranks < i)
        rest_pts = np.setdiff1d(np.arange(len(ranks)), np.r_[low_pts, fiber_pts])

        def cols(pts):
            return (pts[:, None] * r + np.arange(r)[None, :]).reshape(-1)

        low, fib, rest = cols(low_pts), cols(fiber_pts), cols(rest_pts)
        if basis.shape[0] == 0:
            levels.append(Submodule.zero(N, dim_i))
            continue
        reordered = basis[:, np.r_[low, fib, rest]]
        Hf = howell_form(reordered, N, reordered.shape[1])
        lead = np.array([np.flatnonzero(row)[0] for row in Hf], dtype=np.int64)
        keep = Hf[lead >= len(low)]
        proj = keep[:, len(low) : len(low) + len(fib)]
        levels.append(Submodule.span(proj, N, dim_i))
    return ClonoidCoords(F, k, module, tuple(levels))


def zero_coords(F: FieldSpec, k: int, module: ModuleSpec) -> ClonoidCoords:
    return ClonoidCoords(
        F, k, module, tuple(Submodule.zero(module.N, mik_size(F, i, k) * module.r) for i in range(k + 1))
    )


def full_coords(F: FieldSpec, k: int, module: ModuleSpec) -> ClonoidCoords:
    levels = []
    for i in range(k + 1):
        dim = mik_size(F, i, k) * module.r
        gens = np.diag(np.tile(module.scales, dim // module.r))
        levels.append(Submodule.span(gens, module.N, dim))
    return ClonoidCoords(F, k, module, tuple(levels))


# ---------------------------------------------------------------------------
# CompRep


def relevant_subspaces(F: FieldSpec, inputs) -> list[Subspace]:
    """All subspaces of the column spaces of the inputs."""
    found = set()
    for X in inputs:
        found.update(subspaces_of(F, colspace(F, X)))
    return sorted(found, key=lambda H: (H.dim, H.basis))


def comprep_solve(coords: ClonoidCoords, inputs, validate: bool = True) -> Submodule:
    """Howell basis of ``{(f(X_1), ..., f(X_n)) : f in C^(m)}`` in the Z/N embedding."""
    if validate:
        coords.validate(check_invariance=False)
    F, k, module = coords.field, coords.k, coords.module
    inputs = [np.asarray(X, dtype=np.int64) for X in inputs]
    if not inputs:
        return Submodule.zero(module.N, 0)
    m = inputs[0].shape[0]
    for X in inputs:
        if X.shape != (m, k):
            raise InvalidCoords(f"input of shape {X.shape}, expected {(m, k)}")
    r, n = module.r, len(inputs)
    dim = n * r
    rows = []
    for H in relevant_subspaces(F, inputs):
        i = H.dim
        S = coords.levels[i]
        if S.basis.shape[0] == 0:
            continue
        op = LAOperator(F, k, module, representative(H))
        for g in S.basis:
            rows.append(np.concatenate([op.eval(g, X) for X in inputs]))
    rows = np.array(rows, dtype=np.int64).reshape(-1, dim)
    return Submodule.span(rows, module.N, dim)


def comprep_bruteforce(gens, inputs) -> Submodule:
    """Span of ``(g(R X_1), ..., g(R X_n))`` over generators g and all matrices R.

    This is the image of the m-ary part of ``<gens>`` computed from the
    definition, so it serves as an oracle for :func:`comprep_solve`.
    """
    gens = list(gens)
    F, module = gens[0].field, gens[0].module
    inputs = np.array([np.asarray(X, dtype=np.int64) for X in inputs])
    m = inputs.shape[1]
    r, n = module.r, len(inputs)
    rows = []
    for g in gens:
        Rs = all_matrices(F, g.m, m)
        pts = left_action_codes(F, Rs, inputs)  # (|R|, n)
        vec = to_zn_vector(g).reshape(-1, r)
        rows.append(vec[pts].reshape(len(Rs), n * r))
    rows = np.concatenate(rows) if rows else np.zeros((0, n * r), dtype=np.int64)
    return Submodule.span(np.unique(rows, axis=0), module.N, n * r)


def comprep_from_table(level: ClonoidLevel, inputs) -> Submodule:
    """Evaluate every basis function of an m-ary level at the inputs."""
    F, module = level.field, level.module
    r = module.r
    idx = encode_batch(np.array(inputs, dtype=np.int64), F.q)
    rows = np.array([row.reshape(-1, r)[idx].reshape(-1) for row in level.basis], dtype=np.int64)
    return Submodule.span(rows.reshape(-1, len(idx) * r), module.N, len(idx) * r)


# ---------------------------------------------------------------------------
# lattice


def _all_vectors(module: ModuleSpec, size: int) -> np.ndarray:
    from itertools import product

    elems = np.array([e * module.scales for e in module.elements()], dtype=np.int64) % module.N
    out = np.array([np.concatenate(t) for t in product(elems, repeat=size)], dtype=np.int64)
    return out.reshape(-1, size * module.r)


def invariant_submodules(F: FieldSpec, i: int, k: int, module: ModuleSpec, budget: int = 10_000) -> list[Submodule]:
    """Every GL_i-invariant submodule of B^{dom_i}."""
    size = mik_size(F, i, k)
    check_budget(module.order**size, budget)
    perms = gl_permutations(F, i, k)
    dim, N = size * module.r, module.N
    cyclic = set()
    for v in _all_vectors(module, size):
        orbit = np.array([_act(v, p, module.r) for p in perms])
        cyclic.add(Submodule.span(orbit, N, dim))
    cyc = list(cyclic)
    found = set(cyc) | {Submodule.zero(N, dim)}
    frontier = list(found)
    while frontier:
        nxt = []
        for S in frontier:
            for C in cyc:
                T = S + C
                if T not in found:
                    found.add(T)
                    nxt.append(T)
        frontier = nxt
    return sorted(found, key=lambda S: (S.cardinality(), S.basis.tobytes()))


def lattice_count(F: FieldSpec, k: int, module: ModuleSpec, per_level: list | None = None) -> int:
    total = 1
    for i in range(k + 1):
        c = len(invariant_submodules(F, i, k, module))
        if per_level is not None:
            per_level.append(c)
        total *= c
    return total
