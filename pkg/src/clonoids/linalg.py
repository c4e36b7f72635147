"""Matrices over GF(q): rank, RREF, factorizations, subspaces and enumeration.

A matrix is a numpy int64 array of element codes.  The integer code of an
``m x k`` matrix is its row-major base-q numeral with the first entry most
significant, so ascending codes enumerate matrices in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .scalars import FieldSpec

DEFAULT_BUDGET = 1 << 20


class BudgetExceeded(RuntimeError):
    pass


class AmbientMismatch(ValueError):
    pass


class NotFactorizationPair(ValueError):
    pass


class SingularMatrix(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# codec


@lru_cache(maxsize=None)
def _weights(q: int, size: int) -> np.ndarray:
    w = q ** np.arange(size - 1, -1, -1, dtype=np.int64)
    w.setflags(write=False)
    return w


def encode(X, q: int) -> int:
    X = np.asarray(X, dtype=np.int64)
    return int(X.reshape(-1) @ _weights(q, X.size)) if X.size else 0


def encode_batch(Xs, q: int) -> np.ndarray:
    """Codes of a stack of matrices with shape ``(..., m, k)``."""
    Xs = np.asarray(Xs, dtype=np.int64)
    m, k = Xs.shape[-2:]
    if m * k == 0:
        return np.zeros(Xs.shape[:-2], dtype=np.int64)
    return Xs.reshape(Xs.shape[:-2] + (m * k,)) @ _weights(q, m * k)


def decode(code: int, m: int, k: int, q: int) -> np.ndarray:
    return decode_batch(np.array([code]), m, k, q)[0]


def decode_batch(codes, m: int, k: int, q: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    digits = (codes[..., None] // _weights(q, m * k)) % q
    return digits.reshape(codes.shape + (m, k))


def check_budget(count: int, budget: int | None) -> None:
    if count > (DEFAULT_BUDGET if budget is None else budget):
        raise BudgetExceeded(f"{count} items exceed budget {budget or DEFAULT_BUDGET}")


@lru_cache(maxsize=64)
def _all_matrices(q: int, m: int, k: int) -> np.ndarray:
    out = decode_batch(np.arange(q ** (m * k), dtype=np.int64), m, k, q)
    out.setflags(write=False)
    return out


def all_matrices(F: FieldSpec, m: int, k: int, budget: int | None = None) -> np.ndarray:
    """Every ``m x k`` matrix, indexed by code."""
    check_budget(F.q ** (m * k), budget)
    return _all_matrices(F.q, m, k)


# ---------------------------------------------------------------------------
# elimination


def batch_rref(F: FieldSpec, Xs) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon forms and ranks of a stack ``(B, m, k)``."""
    X = np.array(Xs, dtype=np.int64, copy=True)
    B, m, k = X.shape
    r = np.zeros(B, dtype=np.int64)
    rows = np.arange(m)
    for c in range(k):
        cand = (X[:, :, c] != 0) & (rows[None, :] >= r[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = np.flatnonzero(has)
        pr = np.argmax(cand[b], axis=1)
        rr = r[b]
        top = X[b, pr].copy()
        X[b, pr] = X[b, rr]
        X[b, rr] = top
        inv = F.inv[X[b, rr, c]]
        X[b, rr] = F.mul[inv[:, None], X[b, rr]]
        prow = X[b, rr]
        factors = X[b, :, c].copy()
        factors[np.arange(b.size), rr] = 0
        X[b] = F.sub[X[b], F.mul[factors[:, :, None], prow[:, None, :]]]
        r[b] += 1
    return X, r


def batch_rank(F: FieldSpec, Xs, chunk: int = 1 << 14) -> np.ndarray:
    Xs = np.asarray(Xs, dtype=np.int64)
    if Xs.shape[0] == 0 or Xs.shape[1] == 0 or Xs.shape[2] == 0:
        return np.zeros(Xs.shape[0], dtype=np.int64)
    out = np.empty(Xs.shape[0], dtype=np.int64)
    for s in range(0, Xs.shape[0], chunk):
        out[s : s + chunk] = batch_rref(F, Xs[s : s + chunk])[1]
    return out


def rref(F: FieldSpec, X) -> tuple[np.ndarray, list[int]]:
    """RREF of one matrix and its pivot columns."""
    X = np.asarray(X, dtype=np.int64)
    if X.size == 0:
        return X.copy(), []
    R, r = batch_rref(F, X[None])
    R = R[0]
    pivots = [int(np.flatnonzero(R[i])[0]) for i in range(int(r[0]))]
    return R, pivots


def rank(F: FieldSpec, X) -> int:
    return len(rref(F, X)[1])


def matmul(F: FieldSpec, A, B) -> np.ndarray:
    return F.matmul(A, B)


def identity(m: int) -> np.ndarray:
    return np.eye(m, dtype=np.int64)


def solve_right(F: FieldSpec, A, B):
    """A matrix Z with ``A Z = B`` or None when no solution exists."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    m, n = A.shape
    if B.shape[0] != m:
        raise ValueError("row count mismatch")
    aug = np.concatenate([A, B], axis=1)
    R, pivots = rref(F, aug) if aug.size else (aug, [])
    if any(p >= n for p in pivots):
        return None
    Z = np.zeros((n, B.shape[1]), dtype=np.int64)
    for i, p in enumerate(pivots):
        Z[p] = R[i, n:]
    return Z


def inverse(F: FieldSpec, M) -> np.ndarray:
    M = np.asarray(M, dtype=np.int64)
    n = M.shape[0]
    if M.shape != (n, n) or rank(F, M) != n:
        raise SingularMatrix("matrix is not invertible")
    return solve_right(F, M, identity(n))


def transpose(X) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(X).T)


def rank_factorize(F: FieldSpec, X) -> tuple[np.ndarray, np.ndarray]:
    """``X = A U`` with A the pivot columns of X and U the nonzero RREF rows."""
    X = np.asarray(X, dtype=np.int64)
    R, pivots = rref(F, X)
    n = len(pivots)
    A = X[:, pivots] if n else np.zeros((X.shape[0], 0), dtype=np.int64)
    U = R[:n] if n else np.zeros((0, X.shape[1]), dtype=np.int64)
    return np.ascontiguousarray(A), np.ascontiguousarray(U)


def factorization_transition(F: FieldSpec, A, U, A2, U2) -> np.ndarray:
    """Invertible T with ``A2 = A T`` and ``U2 = T^-1 U``."""
    A, U, A2, U2 = (np.asarray(x, dtype=np.int64) for x in (A, U, A2, U2))
    if A.shape[1] != A2.shape[1]:
        raise NotFactorizationPair("inner dimensions differ")
    if not np.array_equal(matmul(F, A, U), matmul(F, A2, U2)):
        raise NotFactorizationPair("products differ")
    n = A.shape[1]
    if rank(F, A) != n or rank(F, U) != n:
        raise NotFactorizationPair("not a rank factorization")
    T = solve_right(F, A, A2)
    if T is None or rank(F, T) != n or not np.array_equal(matmul(F, T, U2), U):
        raise NotFactorizationPair("no transition matrix")
    return T


# ---------------------------------------------------------------------------
# subspaces


@dataclass(frozen=True)
class Subspace:
    """Subspace of F^m held by its unique RREF basis."""

    q: int
    m: int
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        if not self.basis:
            return np.zeros((0, self.m), dtype=np.int64)
        return np.array(self.basis, dtype=np.int64)

    def columns(self) -> np.ndarray:
        """The basis as an ``m x dim`` matrix of columns."""
        return np.ascontiguousarray(self.matrix().T)

    def __repr__(self):
        return f"Subspace(q={self.q}, m={self.m}, basis={list(map(list, self.basis))})"


def row_span(F: FieldSpec, rows, m: int) -> Subspace:
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, m)
    if rows.shape[0] == 0:
        return Subspace(F.q, m, ())
    R, pivots = rref(F, rows)
    return Subspace(F.q, m, tuple(tuple(int(x) for x in R[i]) for i in range(len(pivots))))


def colspace(F: FieldSpec, X) -> Subspace:
    X = np.asarray(X, dtype=np.int64)
    return row_span(F, X.T, X.shape[0])


def _check_ambient(V: Subspace, W: Subspace) -> None:
    if V.m != W.m or V.q != W.q:
        raise AmbientMismatch(f"{V.m} vs {W.m}")


def orth(F: FieldSpec, V: Subspace) -> Subspace:
    """``{y : y^T x = 0 for all x in V}``."""
    m = V.m
    if V.dim == 0:
        return Subspace(F.q, m, tuple(tuple(int(i == j) for j in range(m)) for i in range(m)))
    R = V.matrix()
    pivots = [int(np.flatnonzero(row)[0]) for row in R]
    free = [c for c in range(m) if c not in pivots]
    vecs = []
    for f in free:
        y = np.zeros(m, dtype=np.int64)
        y[f] = 1
        for i, p in enumerate(pivots):
            y[p] = F.neg[R[i, f]]
        vecs.append(y)
    return row_span(F, vecs, m)


def span_sum(F: FieldSpec, V: Subspace, W: Subspace) -> Subspace:
    _check_ambient(V, W)
    return row_span(F, np.vstack([V.matrix(), W.matrix()]), V.m)


def intersect(F: FieldSpec, V: Subspace, W: Subspace) -> Subspace:
    _check_ambient(V, W)
    return orth(F, span_sum(F, orth(F, V), orth(F, W)))


def contains(F: FieldSpec, V: Subspace, v) -> bool:
    v = np.asarray(v, dtype=np.int64).reshape(-1)
    if v.size != V.m:
        raise AmbientMismatch(f"vector of length {v.size} in F^{V.m}")
    return row_span(F, np.vstack([V.matrix(), v[None]]), V.m).dim == V.dim


def is_subspace(F: FieldSpec, V: Subspace, W: Subspace) -> bool:
    _check_ambient(V, W)
    return span_sum(F, V, W).dim == W.dim


def full_space(F: FieldSpec, m: int) -> Subspace:
    return orth(F, Subspace(F.q, m, ()))


# ---------------------------------------------------------------------------
# enumeration


def enumerate_matrices(F: FieldSpec, m: int, k: int, rank_eq=None, rank_le=None,
                       budget: int | None = None) -> np.ndarray:
    """Matrices of shape (m, k) in ascending code order, optionally rank-filtered."""
    Xs = all_matrices(F, m, k, budget)
    if rank_eq is None and rank_le is None:
        return Xs
    r = matrix_ranks(F, m, k)
    mask = np.ones(r.shape, dtype=bool)
    if rank_eq is not None:
        mask &= r == rank_eq
    if rank_le is not None:
        mask &= r <= rank_le
    return Xs[mask]


def enumerate_codes(F: FieldSpec, m: int, k: int, rank_eq=None, rank_le=None,
                    budget: int | None = None) -> np.ndarray:
    check_budget(F.q ** (m * k), budget)
    r = matrix_ranks(F, m, k)
    mask = np.ones(r.shape, dtype=bool)
    if rank_eq is not None:
        mask &= r == rank_eq
    if rank_le is not None:
        mask &= r <= rank_le
    return np.flatnonzero(mask).astype(np.int64)


@lru_cache(maxsize=64)
def _ranks(F: FieldSpec, m: int, k: int) -> np.ndarray:
    r = batch_rank(F, _all_matrices(F.q, m, k))
    r.setflags(write=False)
    return r


def matrix_ranks(F: FieldSpec, m: int, k: int) -> np.ndarray:
    """Rank of every ``m x k`` matrix, indexed by code."""
    check_budget(F.q ** (m * k), None)
    return _ranks(F, m, k)


def enumerate_GL(F: FieldSpec, m: int, budget: int | None = None) -> np.ndarray:
    return enumerate_matrices(F, m, m, rank_eq=m, budget=budget)


def enumerate_subspaces(F: FieldSpec, m: int, d: int) -> list[Subspace]:
    """All d-dimensional subspaces of F^m, sorted by basis."""
    out = []
    q = F.q
    for pivots in combinations(range(m), d):
        free = [(i, c) for i in range(d) for c in range(pivots[i] + 1, m) if c not in pivots]
        for vals in product(range(q), repeat=len(free)):
            R = np.zeros((d, m), dtype=np.int64)
            for i, p in enumerate(pivots):
                R[i, p] = 1
            for (i, c), v in zip(free, vals):
                R[i, c] = v
            out.append(Subspace(q, m, tuple(tuple(int(x) for x in row) for row in R)))
    out.sort(key=lambda s: s.basis)
    return out


def enumerate_all_subspaces(F: FieldSpec, m: int, max_dim: int | None = None) -> list[Subspace]:
    top = m if max_dim is None else min(m, max_dim)
    return [V for d in range(top + 1) for V in enumerate_subspaces(F, m, d)]


def subspaces_of(F: FieldSpec, W: Subspace) -> list[Subspace]:
    """All subspaces of W (as subspaces of the ambient space)."""
    B = W.matrix()
    out = []
    for V in enumerate_all_subspaces(F, W.dim):
        out.append(row_span(F, matmul(F, V.matrix(), B), W.m) if V.dim else Subspace(F.q, W.m, ()))
    return sorted(set(out), key=lambda s: (s.dim, s.basis))


def gaussian_binomial(q: int, m: int, d: int) -> int:
    if d < 0 or d > m:
        return 0
    num = den = 1
    for i in range(d):
        num *= q ** (m - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def gl_order(q: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= q**m - q**i
    return out


def left_action_codes(F: FieldSpec, Ms, Xs, chunk_elems: int = 1 << 22) -> np.ndarray:
    """``codes[t, x] = code(Ms[t] @ Xs[x])`` computed in chunks."""
    Ms = np.asarray(Ms, dtype=np.int64)
    Xs = np.asarray(Xs, dtype=np.int64)
    T, m, mp = Ms.shape
    D, mp2, k = Xs.shape
    assert mp == mp2
    out = np.empty((T, D), dtype=np.int64)
    if m * k == 0:
        out[:] = 0
        return out
    w = _weights(F.q, m * k)
    step = max(1, chunk_elems // max(1, D * m * k * (1 if F.e == 1 else mp)))
    for s in range(0, T, step):
        blk = Ms[s : s + step]
        if F.e == 1:
            prod = np.einsum("tab,dbc->tdac", blk, Xs) % F.p
        else:
            prod = F.matmul(blk[:, None], Xs[None])
        out[s : s + step] = prod.reshape(prod.shape[:2] + (m * k,)) @ w
    return out
