"""Minor operators ``f -> Σ α_M f(M X)`` and certificates built from them.

A :class:`MinorOperator` of arity m is a Z/N-linear combination of m x m
matrices.  Applied to an m-ary operation it yields ``X -> Σ α_M f(M X)``.
Whether an operator is the identity on some set of operations only depends
on its pushforward ``Σ α_M e_{MX}`` at each point X, which is what all the
verification routines compute.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .funcspace import FuncTable, SignatureMismatch
from .linalg import (
    Subspace,
    all_matrices,
    check_budget,
    colspace,
    decode_batch,
    encode,
    encode_batch,
    enumerate_all_subspaces,
    enumerate_codes,
    enumerate_subspaces,
    identity,
    inverse,
    left_action_codes,
    matmul,
    matrix_ranks,
    rank,
    rank_factorize,
    row_span,
)
from .scalars import FieldSpec, NotCoprime, check_coprime, field_make, solve_gf2_bitsets, solve_zn
from .theta import _as_field, certificate_delta, x0_matrix


class VerificationFailed(RuntimeError):
    pass


class ArityMismatch(ValueError):
    pass


class DimMismatch(ValueError):
    pass


def _consolidate(codes, coeffs, N: int):
    codes = np.asarray(codes, dtype=np.int64).reshape(-1)
    coeffs = np.asarray(coeffs, dtype=np.int64).reshape(-1) % N
    if codes.size == 0:
        return codes, coeffs
    order = np.argsort(codes, kind="stable")
    codes, coeffs = codes[order], coeffs[order]
    starts = np.flatnonzero(np.r_[True, codes[1:] != codes[:-1]])
    sums = np.add.reduceat(coeffs, starts) % N
    keep = sums != 0
    return codes[starts][keep], sums[keep]


class MinorOperator:
    """Sparse formal sum of m x m matrices with coefficients in Z/N."""

    __slots__ = ("field", "m", "N", "rank_bound", "codes", "coeffs")

    def __init__(self, field: FieldSpec, m: int, N: int, codes, coeffs, rank_bound: int | None = None):
        codes, coeffs = _consolidate(codes, coeffs, N)
        self.field, self.m, self.N = field, m, N
        self.codes, self.coeffs = codes, coeffs
        if rank_bound is None:
            rank_bound = int(self.term_ranks().max()) if codes.size else 0
        self.rank_bound = rank_bound

    @classmethod
    def identity(cls, field, m, N):
        return cls(field, m, N, [encode(identity(m), field.q)], [1], m)

    @classmethod
    def zero(cls, field, m, N, rank_bound=0):
        return cls(field, m, N, [], [], rank_bound)

    @classmethod
    def from_matrices(cls, field, N, mats, coeffs, rank_bound=None):
        mats = np.asarray(mats, dtype=np.int64)
        m = mats.shape[-1]
        return cls(field, m, N, encode_batch(mats, field.q), coeffs, rank_bound)

    def __len__(self):
        return int(self.codes.size)

    def matrices(self) -> np.ndarray:
        return decode_batch(self.codes, self.m, self.m, self.field.q)

    def term_ranks(self) -> np.ndarray:
        if self.field.q ** (self.m * self.m) <= 1 << 20:
            return matrix_ranks(self.field, self.m, self.m)[self.codes]
        from .linalg import batch_rank

        return batch_rank(self.field, self.matrices())

    def rank_sound(self) -> bool:
        return bool((self.term_ranks() <= self.rank_bound).all()) if len(self) else True

    def _check(self, other: "MinorOperator") -> None:
        if (self.field, self.m, self.N) != (other.field, other.m, other.N):
            raise SignatureMismatch("operators differ in field, arity or modulus")

    def __eq__(self, other):
        return (
            isinstance(other, MinorOperator)
            and (self.field, self.m, self.N) == (other.field, other.m, other.N)
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __repr__(self):
        return f"MinorOperator({self.field}, m={self.m}, N={self.N}, terms={len(self)}, rank<={self.rank_bound})"

    def terms(self):
        return list(zip(self.codes.tolist(), self.coeffs.tolist()))


def op_add(I1: MinorOperator, I2: MinorOperator) -> MinorOperator:
    I1._check(I2)
    return MinorOperator(
        I1.field, I1.m, I1.N,
        np.r_[I1.codes, I2.codes], np.r_[I1.coeffs, I2.coeffs],
        max(I1.rank_bound, I2.rank_bound),
    )


def op_scale(I: MinorOperator, c: int) -> MinorOperator:
    return MinorOperator(I.field, I.m, I.N, I.codes, I.coeffs * int(c), I.rank_bound)


def op_compose(I2: MinorOperator, I1: MinorOperator, chunk: int = 1 << 22) -> MinorOperator:
    """The operator ``f -> I2(I1(f))``: terms ``M S`` with M from I1, S from I2."""
    I1._check(I2)
    F, m, N = I1.field, I1.m, I1.N
    if not len(I1) or not len(I2):
        return MinorOperator.zero(F, m, N, min(I1.rank_bound, I2.rank_bound))
    A, B = I1.matrices(), I2.matrices()
    codes, coeffs = [], []
    step = max(1, chunk // max(1, len(B)))
    for s in range(0, len(A), step):
        prod = left_action_codes(F, A[s : s + step], B)
        codes.append(prod.reshape(-1))
        coeffs.append((I1.coeffs[s : s + step, None] * I2.coeffs[None, :] % N).reshape(-1))
        # consolidate as we go to bound memory
        c, v = _consolidate(np.concatenate(codes), np.concatenate(coeffs), N)
        codes, coeffs = [c], [v]
    return MinorOperator(F, m, N, codes[0], coeffs[0], min(I1.rank_bound, I2.rank_bound))


def op_apply(I: MinorOperator, f: FuncTable) -> FuncTable:
    """``X -> Σ α_M f(M X)``."""
    if f.m != I.m or f.field != I.field:
        raise SignatureMismatch("operator and function differ in arity or field")
    if any(I.N % d for d in f.module.factors):
        raise SignatureMismatch(f"module {f.module} is not a Z/{I.N}-module")
    Xs = all_matrices(f.field, f.m, f.k)
    out = np.zeros(f.values.shape, dtype=np.int64)
    mats = I.matrices()
    d = f.module.dvec
    step = max(1, (1 << 22) // max(1, len(Xs) * f.module.r))
    for s in range(0, len(mats), step):
        tgt = left_action_codes(f.field, mats[s : s + step], Xs)
        vals = f.values[tgt]  # (t, D, r)
        out = (out + np.einsum("t,tdr->dr", I.coeffs[s : s + step], vals % d)) % d
    return FuncTable(f.field, f.k, f.m, f.module, out)


# ---------------------------------------------------------------------------
# pushforward verification


def _parallel_all(fn, chunks, threads: int) -> bool:
    if threads <= 1 or len(chunks) <= 1:
        return all(fn(c) for c in chunks)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return all(pool.map(fn, chunks))


def pushforward(I: MinorOperator, k: int, xcodes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nonzero entries ``(x, y, c)`` of ``Σ_M α_M e_{M X}`` for each X in ``xcodes``."""
    F = I.field
    xcodes = np.asarray(xcodes, dtype=np.int64)
    Xs = decode_batch(xcodes, I.m, k, F.q)
    if not len(I) or not len(xcodes):
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    tgt = left_action_codes(F, I.matrices(), Xs)  # (T, D)
    size = F.q ** (I.m * k)
    keys = (np.arange(len(xcodes), dtype=np.int64)[None, :] * size + tgt).reshape(-1)
    vals = np.repeat(I.coeffs, len(xcodes))
    keys, vals = _consolidate(keys, vals, I.N)
    return xcodes[keys // size], keys % size, vals


def _chunks(codes, threads: int, per_chunk: int):
    codes = np.asarray(codes, dtype=np.int64)
    n = max(threads, -(-len(codes) // max(1, per_chunk)), 1)
    return [c for c in np.array_split(codes, min(n, max(1, len(codes)))) if len(c)]


def fixes_points(I: MinorOperator, k: int, xcodes, threads: int = 1) -> bool:
    """Whether ``I(f)(X) = f(X)`` for every f and every X in ``xcodes``."""
    per_chunk = max(1, (1 << 22) // max(1, len(I)))

    def ok(chunk):
        x, y, c = pushforward(I, k, chunk)
        return len(x) == len(chunk) and bool(np.all(x == y)) and bool(np.all(c == 1)) and np.array_equal(
            np.sort(x), np.sort(chunk)
        )

    return _parallel_all(ok, _chunks(xcodes, threads, per_chunk), threads)


def is_identity_on(I: MinorOperator, k: int, threads: int = 1) -> bool:
    """Identity on every m-ary operation over F^k."""
    return fixes_points(I, k, np.arange(I.field.q ** (I.m * k), dtype=np.int64), threads)


def fixes_rank_le(I: MinorOperator, k: int, i: int, threads: int = 1) -> bool:
    return fixes_points(I, k, enumerate_codes(I.field, I.m, k, rank_le=i), threads)


def jh_contract_ok(I: MinorOperator, k: int, H: Subspace, threads: int = 1) -> bool:
    """Contract of the column-space interpolator for H (dimension i).

    For every f supported on rank >= i and every X of rank <= i:
    ``I(f)(X) = f(X)`` if ``C(X) = H`` and 0 otherwise.
    """
    F, m, i = I.field, I.m, H.dim
    ranks = matrix_ranks(F, m, k)
    xs = np.flatnonzero(ranks <= i)
    per_chunk = max(1, (1 << 22) // max(1, len(I)))

    def ok(chunk):
        x, y, c = pushforward(I, k, chunk)
        keep = ranks[y] >= i
        x, y, c = x[keep], y[keep], c[keep]
        want = np.array(
            [int(c_) for c_ in chunk if ranks[c_] == i and colspace(F, decode_batch(np.array([c_]), m, k, F.q)[0]) == H],
            dtype=np.int64,
        )
        return (
            np.array_equal(np.sort(x), want)
            and bool(np.all(x == y))
            and bool(np.all(c == 1))
        )

    return _parallel_all(ok, _chunks(xs, threads, per_chunk), threads)


def fixes_delta_x0(I: MinorOperator, k: int) -> bool:
    from .theta import delta_identity_holds

    return delta_identity_holds(I.field, k, I.N, I.matrices(), I.coeffs, I.m)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    op: MinorOperator
    k: int
    scope: str  # "full-level" | "rank<=i" | "delta" | "J_H"
    provenance: str  # "constructive" | "solver"
    extra: dict = field(default_factory=dict)

    @property
    def field(self):
        return self.op.field

    def verify(self, threads: int = 1) -> bool:
        I, k = self.op, self.k
        if not I.rank_sound():
            return False
        if self.scope == "full-level":
            return is_identity_on(I, k, threads)
        if self.scope == "rank<=i":
            return fixes_rank_le(I, k, int(self.extra.get("i", I.rank_bound)), threads)
        if self.scope == "delta":
            return fixes_delta_x0(I, k)
        if self.scope == "J_H":
            H = row_span(I.field, np.array(self.extra["H"], dtype=np.int64), I.m)
            return jh_contract_ok(I, k, H, threads)
        raise ValueError(f"unknown scope {self.scope!r}")

    def to_json(self) -> dict:
        F = self.op.field
        out = {
            "q": F.q,
            "p": F.p,
            "e": F.e,
            "k": self.k,
            "N": self.op.N,
            "arity": self.op.m,
            "rank_bound": self.op.rank_bound,
            "scope": self.scope,
            "provenance": self.provenance,
            "terms": [
                {"matrix": M.tolist(), "coeff": int(c)} for M, c in zip(self.op.matrices(), self.op.coeffs)
            ],
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Certificate":
        F = field_make(int(obj["p"]), int(obj.get("e", 1)))
        if F.q != int(obj.get("q", F.q)):
            raise ValueError("q does not match p**e")
        m, N = int(obj["arity"]), int(obj["N"])
        mats = [np.asarray(t["matrix"], dtype=np.int64) for t in obj["terms"]]
        for M in mats:
            if M.shape != (m, m) or (M < 0).any() or (M >= F.q).any():
                raise ValueError("malformed term matrix")
        codes = encode_batch(np.array(mats), F.q) if mats else np.zeros(0, dtype=np.int64)
        coeffs = [int(t["coeff"]) for t in obj["terms"]]
        op = MinorOperator(F, m, N, codes, coeffs, int(obj["rank_bound"]))
        extra = {key: obj[key] for key in ("i", "H") if key in obj}
        return cls(op, int(obj["k"]), obj["scope"], obj.get("provenance", "constructive"), extra)


# ---------------------------------------------------------------------------
# interpolators


def _completion(F: FieldSpec, B) -> np.ndarray:
    """Invertible matrix whose first columns are those of B."""
    B = np.asarray(B, dtype=np.int64)
    m, d = B.shape
    cols = [B[:, j] for j in range(d)]
    for j in range(m):
        e = np.zeros(m, dtype=np.int64)
        e[j] = 1
        if rank(F, np.column_stack(cols + [e])) == len(cols) + 1:
            cols.append(e)
        if len(cols) == m:
            break
    return np.column_stack(cols)


@lru_cache(maxsize=256)
def _jh_theta(F: FieldSpec, k: int, N: int, H: Subspace) -> MinorOperator:
    cert = certificate_delta(F, k, N)
    S = _completion(F, H.columns())
    Sinv = inverse(F, S)
    mats = matmul(F, matmul(F, S, cert.matrices()), Sinv)
    return MinorOperator(F, k + 1, N, encode_batch(mats, F.q), cert.coeffs, k)


@lru_cache(maxsize=1024)
def _jh_restrict(F: FieldSpec, k: int, N: int, H: Subspace, m: int) -> MinorOperator:
    base = arity_certificate(F, H.dim, N, m).op
    keep = [j for j, M in enumerate(base.matrices()) if colspace(F, M) == H]
    return MinorOperator(F, m, N, base.codes[keep], base.coeffs[keep], H.dim)


def build_JH(F, k: int, N: int, H: Subspace, m: int | None = None) -> MinorOperator:
    """Interpolator picking out the column space H among rank-dim(H) points.

    For ``dim H = k`` and ``m = k+1`` it is the δ certificate conjugated by a
    matrix carrying ``C(X0)`` to H.  Otherwise it is the part of the
    rank-≤dim(H) arity certificate whose terms have column space H.
    """
    F = _as_field(F)
    m = H.m if m is None else m
    if H.m != m:
        raise DimMismatch(f"H lives in F^{H.m}, arity is {m}")
    if H.dim > k:
        raise DimMismatch(f"dim H = {H.dim} exceeds k = {k}")
    if H.dim == k and m == k + 1:
        return _jh_theta(F, k, N, H)
    return _jh_restrict(F, k, N, H, m)


def build_Jn(F, k: int, N: int, m: int | None = None) -> MinorOperator:
    """Sum of the interpolators over all k-dimensional H in F^m."""
    F = _as_field(F)
    m = k + 1 if m is None else m
    parts = [build_JH(F, k, N, H, m) for H in enumerate_subspaces(F, m, k)]
    codes = np.concatenate([p.codes for p in parts]) if parts else []
    coeffs = np.concatenate([p.coeffs for p in parts]) if parts else []
    return MinorOperator(F, m, N, codes, coeffs, k)


@lru_cache(maxsize=64)
def _level_certificate(F: FieldSpec, k: int, N: int) -> Certificate:
    check_coprime(F.q, N)
    if k == 0:
        op = MinorOperator(F, 1, N, [0], [1], 0)
    else:
        J = arity_certificate(F, k - 1, N, k + 1).op
        Jk = build_Jn(F, k, N, k + 1)
        JkJ = op_compose(Jk, J)
        op = op_add(op_add(J, Jk), op_scale(JkJ, -1))
        op = MinorOperator(F, k + 1, N, op.codes, op.coeffs, k)
    cert = Certificate(op, k, "full-level", "constructive")
    if not (op.rank_sound() and is_identity_on(op, k)):
        raise VerificationFailed(f"level certificate fails for q={F.q}, k={k}, N={N}")
    return cert


def build_level_certificate(q, k: int, N: int) -> Certificate:
    """Rank-≤k operator equal to the identity on all (k+1)-ary operations on F^k."""
    return _level_certificate(_as_field(q), k, N)


@lru_cache(maxsize=128)
def _arity_certificate(F: FieldSpec, j: int, N: int, m: int, budget: int) -> Certificate:
    if m <= j:
        return Certificate(MinorOperator.identity(F, m, N), j, "full-level", "constructive")
    if m == j + 1:
        return _level_certificate(F, j, N)
    check_budget(F.q ** (m * m), budget)
    prev = _arity_certificate(F, j, N, m - 1, budget).op
    level = _level_certificate(F, j, N).op
    P = level.matrices()
    codes, coeffs = [], []
    for M, c in zip(prev.matrices(), prev.coeffs):
        D = np.zeros((m, m), dtype=np.int64)
        D[: m - 1, : m - 1] = M
        D[m - 1, m - 1] = 1
        A, U = rank_factorize(F, D)
        if A.shape[1] <= j:
            codes.append(np.array([encode(D, F.q)]))
            coeffs.append(np.array([c]))
        else:
            prods = matmul(F, matmul(F, A, P), U)
            codes.append(encode_batch(prods, F.q))
            coeffs.append(level.coeffs * c % N)
    op = MinorOperator(F, m, N, np.concatenate(codes), np.concatenate(coeffs), j)
    if not (op.rank_sound() and is_identity_on(op, j)):
        raise VerificationFailed(f"arity certificate fails for q={F.q}, j={j}, m={m}")
    return Certificate(op, j, "full-level", "constructive")


def arity_certificate(q, j: int, N: int, m: int, budget: int = 1 << 20) -> Certificate:
    """Rank-≤j operator equal to the identity on all m-ary operations on F^j."""
    return _arity_certificate(_as_field(q), j, N, m, budget)


build_arity_certificate = arity_certificate


def build_Ii(q, k: int, N: int, i: int, m: int) -> MinorOperator:
    """Rank-≤i operator fixing every m-ary operation on F^k at points of rank ≤ i."""
    if i > k:
        raise DimMismatch("i must not exceed k")
    return arity_certificate(q, i, N, m).op


# ---------------------------------------------------------------------------
# direct solver


@dataclass
class SolverStats:
    unknowns: int
    equations: int
    reduced_rows: int


def solve_certificate_direct(q, k: int, N: int, n: int, budget: int = 1 << 20, stats: list | None = None):
    """Solve ``Σ_{M X = Y} α_M = [X = Y]`` over rank-≤n matrices M.

    Returns a verified :class:`Certificate`, or None when the system has no
    solution over Z/N (no rank-≤n formula exists).  Rows are generated from
    one representative X per column space, since right multiplication by
    GL_k permutes the equations of matrices sharing a column space.
    """
    F = _as_field(q)
    if math.gcd(F.q, N) != 1:
        raise NotCoprime(f"gcd({F.q}, {N}) != 1")
    m = k + 1
    check_budget(F.q ** (m * m), budget)
    unknown_codes = enumerate_codes(F, m, m, rank_le=n)
    mats = decode_batch(unknown_codes, m, m, F.q)
    reps = []
    for W in enumerate_all_subspaces(F, m, k):
        X = np.zeros((m, k), dtype=np.int64)
        X[:, : W.dim] = W.columns()
        reps.append(X)
    tgt = left_action_codes(F, mats, np.array(reps))  # (U, R)
    rows, rhs = [], []
    for r, X in enumerate(reps):
        xc = encode(X, F.q)
        col = tgt[:, r]
        order = np.argsort(col, kind="stable")
        sc = col[order]
        starts = np.flatnonzero(np.r_[True, sc[1:] != sc[:-1]])
        groups = np.split(order, starts[1:])
        ys = sc[starts]
        if xc not in set(ys.tolist()):
            rows.append(np.zeros(0, dtype=np.int64))
            rhs.append(1)
        for y, g in zip(ys.tolist(), groups):
            rows.append(g)
            rhs.append(1 if y == xc else 0)
    if stats is not None:
        stats.append(SolverStats(len(unknown_codes), F.q ** (2 * m * k), len(rows)))
    nu = len(unknown_codes)
    if N == 2:
        bitrows = [sum(1 << int(i) for i in g) for g in rows]
        sol = solve_gf2_bitsets(bitrows, rhs, nu)
        sol = None if sol is None else np.array(sol, dtype=np.int64)
    else:
        A = np.zeros((len(rows), nu), dtype=np.int64)
        for i, g in enumerate(rows):
            A[i, g] = 1
        sol = solve_zn(A, np.array(rhs, dtype=np.int64), N)
    if sol is None:
        return None
    op = MinorOperator(F, m, N, unknown_codes, sol, n)
    cert = Certificate(op, k, "full-level", "solver")
    if not cert.verify():
        raise VerificationFailed("solver output failed verification")
    return cert


# ---------------------------------------------------------------------------
# products


@dataclass
class ProductCertificate:
    field1: FieldSpec
    k1: int
    field2: FieldSpec
    k2: int
    N: int
    m: int
    codes1: np.ndarray
    codes2: np.ndarray
    coeffs: np.ndarray

    def __len__(self):
        return int(self.coeffs.size)

    def domain_size(self) -> int:
        return self.field1.q ** (self.m * self.k1) * self.field2.q ** (self.m * self.k2)

    def verify(self) -> bool:
        """Pushforward equals ``e_(X1, X2)`` at every point of (A1 x A2)^m."""
        F1, F2, m = self.field1, self.field2, self.m
        D1, D2 = F1.q ** (m * self.k1), F2.q ** (m * self.k2)
        X1 = all_matrices(F1, m, self.k1)
        X2 = all_matrices(F2, m, self.k2)
        T1 = left_action_codes(F1, decode_batch(self.codes1, m, m, F1.q), X1)  # (T, D1)
        T2 = left_action_codes(F2, decode_batch(self.codes2, m, m, F2.q), X2)  # (T, D2)
        x1, x2 = np.meshgrid(np.arange(D1), np.arange(D2), indexing="ij")
        x1, x2 = x1.reshape(-1), x2.reshape(-1)
        point = x1 * D2 + x2
        tgt = T1[:, x1] * D2 + T2[:, x2]  # (T, D1*D2)
        D = D1 * D2
        keys = (point[None, :] * D + tgt).reshape(-1)
        vals = np.repeat(self.coeffs, D)
        keys, vals = _consolidate(keys, vals, self.N)
        return (
            len(keys) == D
            and np.array_equal(keys // D, np.arange(D))
            and np.array_equal(keys % D, np.arange(D))
            and bool(np.all(vals == 1))
        )


def combine_product(c1: Certificate, c2: Certificate, N: int | None = None) -> ProductCertificate:
    """Pair every term of c1 with every term of c2, multiplying coefficients."""
    I1, I2 = c1.op, c2.op
    if I1.m != I2.m:
        raise ArityMismatch(f"arities {I1.m} and {I2.m}")
    N = I1.N if N is None else N
    if I1.N != N or I2.N != N:
        raise ValueError("certificates must share the modulus N")
    check_coprime(I1.field.q, N)
    check_coprime(I2.field.q, N)
    a, b = np.meshgrid(np.arange(len(I1)), np.arange(len(I2)), indexing="ij")
    a, b = a.reshape(-1), b.reshape(-1)
    return ProductCertificate(
        I1.field, c1.k, I2.field, c2.k, N, I1.m,
        I1.codes[a], I2.codes[b], I1.coeffs[a] * I2.coeffs[b] % N,
    )


def lower_bound(size_a: int, size_r: int) -> int:
    """Smallest m with ``|R|^m >= |A|``, i.e. ``ceil(log|A| / log|R|)``."""
    if size_a < 2 or size_r < 2:
        raise ValueError("sizes must be >= 2")
    m, p = 0, 1
    while p < size_a:
        p *= size_r
        m += 1
    return m
