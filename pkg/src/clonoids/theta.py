"""θ-spaces in F^{(k+1) x k}, type labeling and the alternating δ identity.

Notation: ``X0 = [Id_k; 0]``.  A θ-space is ``{X + a u^T : u in F^k}`` with X
of rank k and a outside the column space of X.  Matrices reachable from X0
by admissible rank-one steps carry a type n together with the subspaces
``J(X)`` (admissible directions) and ``S(X)`` (row span of the steps).
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import (
    Subspace,
    all_matrices,
    colspace,
    decode,
    decode_batch,
    encode,
    inverse,
    left_action_codes,
    matmul,
    rank,
    row_span,
    _weights,
)
from .scalars import FieldSpec, NotCoprime, check_coprime, factorize, field_make, zn_inv


class DirectionInColumnSpace(ValueError):
    pass


class NotFullRank(ValueError):
    pass


class CanonicityError(RuntimeError):
    pass


class IdentityFailed(RuntimeError):
    pass


def field_from_order(q: int) -> FieldSpec:
    fac = factorize(q)
    if len(fac) != 1:
        raise ValueError(f"{q} is not a prime power")
    return field_make(*fac[0])


def _as_field(F) -> FieldSpec:
    return F if isinstance(F, FieldSpec) else field_from_order(int(F))


def x0_matrix(k: int, m: int | None = None) -> np.ndarray:
    m = k + 1 if m is None else m
    X = np.zeros((m, k), dtype=np.int64)
    X[:k, :k] = np.eye(k, dtype=np.int64)
    return X


def normalize_direction(F: FieldSpec, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    nz = np.flatnonzero(a)
    if nz.size == 0:
        raise ValueError("zero direction")
    return F.mul[F.inv[a[nz[0]]], a]


@dataclass(frozen=True)
class ThetaSpace:
    base: tuple  # smallest member, as nested tuples
    direction: tuple  # normalized to leading coefficient 1
    members: tuple  # sorted member codes

    @property
    def key(self):
        return (self.members[0], self.direction)

    def base_matrix(self) -> np.ndarray:
        return np.array(self.base, dtype=np.int64)

    def __contains__(self, code) -> bool:
        i = np.searchsorted(self.members, code)
        return i < len(self.members) and self.members[i] == code


def _theta_codes(F: FieldSpec, X, a) -> np.ndarray:
    X = np.asarray(X, dtype=np.int64)
    k = X.shape[1]
    U = all_matrices(F, 1, k)[:, 0, :]  # every u in F^k
    outer = F.mul[np.asarray(a)[None, :, None], U[:, None, :]]
    members = F.add[X[None], outer]
    return np.sort(members.reshape(len(U), -1) @ _weights(F.q, X.size))


def theta_members(F, X, a) -> ThetaSpace:
    F = _as_field(F)
    X = np.asarray(X, dtype=np.int64)
    a = np.asarray(a, dtype=np.int64).reshape(-1)
    k = X.shape[1]
    if X.shape != (k + 1, k) or a.size != k + 1:
        raise ValueError("expected X of shape (k+1, k) and a in F^{k+1}")
    if rank(F, X) != k:
        raise NotFullRank("base matrix must have rank k")
    if rank(F, np.column_stack([X, a])) == k:
        raise DirectionInColumnSpace("direction lies in the column space")
    codes = _theta_codes(F, X, a)
    base = decode(int(codes[0]), k + 1, k, F.q)
    return ThetaSpace(
        tuple(map(tuple, base.tolist())),
        tuple(int(x) for x in normalize_direction(F, a)),
        tuple(int(c) for c in codes),
    )


def mv_matrix(F, V: ThetaSpace) -> np.ndarray:
    """The k x (k+1) matrix M with ``M X = Id_k`` exactly for X in V."""
    F = _as_field(F)
    Y = V.base_matrix()
    k = Y.shape[1]
    Z = np.column_stack([Y, np.array(V.direction, dtype=np.int64)])
    return inverse(F, Z)[:k]


# ---------------------------------------------------------------------------
# type labeling


@dataclass(frozen=True)
class TypeRecord:
    n: int
    J: Subspace
    S: Subspace


class _VecSpace:
    """Code tables for F^d used by the labeling BFS."""

    def __init__(self, F: FieldSpec, d: int):
        self.F, self.d = F, d
        self.vecs = all_matrices(F, 1, d)[:, 0, :]
        self.size = len(self.vecs)
        self.add = encode_rows(F, F.add[self.vecs[:, None, :], self.vecs[None, :, :]])
        self.smul = encode_rows(F, F.mul[np.arange(F.q)[:, None, None], self.vecs[None, :, :]])
        self.normalized = [
            c for c in range(1, self.size) if self.vecs[c][np.flatnonzero(self.vecs[c])[0]] == 1
        ]

    def span_add(self, mask: int, u: int) -> int:
        out = 0
        for s in bits(mask):
            for c in range(self.F.q):
                out |= 1 << int(self.add[s, self.smul[c, u]])
        return out

    def to_subspace(self, mask: int) -> Subspace:
        rows = self.vecs[list(bits(mask))] if mask else np.zeros((0, self.d), dtype=np.int64)
        return row_span(self.F, rows, self.d)


def encode_rows(F: FieldSpec, arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64)
    return arr @ _weights(F.q, arr.shape[-1])


def bits(mask: int):
    c = 0
    while mask:
        if mask & 1:
            yield c
        mask >>= 1
        c += 1


class TypeLabeling:
    """Types of matrices in F^{(k+1) x k}; see :func:`label_types`."""

    def __init__(self, F: FieldSpec, k: int):
        self.F, self.k = F, k
        self.rows = _VecSpace(F, k + 1)  # F^{k+1}
        self.coef = _VecSpace(F, k)  # F^k
        self.labels: dict[int, tuple[int, int, int]] = {}
        self._colmask: dict[int, int] = {}
        size = (k + 1) * k
        # digits of a u^T for every (a, u)
        A = self.rows.vecs
        Uv = self.coef.vecs
        self.outer = F.mul[A[:, None, :, None], Uv[None, :, None, :]].reshape(len(A), len(Uv), size)
        self.w = _weights(F.q, size) if size else np.zeros(0, dtype=np.int64)

    def digits(self, code: int) -> np.ndarray:
        return decode(code, self.k + 1, self.k, self.F.q).reshape(-1)

    def colmask(self, code: int) -> int:
        got = self._colmask.get(code)
        if got is None:
            X = self.digits(code).reshape(self.k + 1, self.k)
            img = encode_rows(self.F, matmul(self.F, self.coef.vecs, X.T))
            got = 0
            for c in np.unique(img):
                got |= 1 << int(c)
            self._colmask[code] = got
        return got

    def children_codes(self, code: int, a: int, us) -> np.ndarray:
        base = self.digits(code)
        return self.F.add[base[None, :], self.outer[a, us]] @ self.w

    def record(self, code: int) -> TypeRecord | None:
        lab = self.labels.get(code)
        if lab is None:
            return None
        n, J, S = lab
        return TypeRecord(n, self.rows.to_subspace(J), self.coef.to_subspace(S))

    def type_of(self, code: int):
        lab = self.labels.get(code)
        return None if lab is None else lab[0]

    def counts(self) -> list[int]:
        out = [0] * (self.k + 1)
        for n, _, _ in self.labels.values():
            out[n] += 1
        return out

    def typed_codes(self, n: int) -> list[int]:
        return sorted(c for c, lab in self.labels.items() if lab[0] == n)

    def directions(self, code: int) -> list[int]:
        """Normalized admissible directions at a typed matrix."""
        n, J, _ = self.labels[code]
        C = self.colmask(code)
        return [a for a in self.rows.normalized if (J >> a) & 1 and not (C >> a) & 1]


@lru_cache(maxsize=32)
def label_types(F, k: int) -> TypeLabeling:
    """Breadth-first type labeling starting at X0.

    From a matrix X of type n, every admissible direction a in J(X) \\ C(X)
    and every u outside S(X) gives ``X + a u^T`` of type n+1 with
    ``J = J(X) ∩ C(X)`` and ``S = S(X) + <u>``.  A matrix reached with two
    different records raises :class:`CanonicityError`.
    """
    F = _as_field(F)
    L = TypeLabeling(F, k)
    x0 = encode(x0_matrix(k), F.q)
    full = (1 << L.rows.size) - 1
    L.labels[x0] = (0, full, 1)  # S = {0}: bit of the zero vector
    queue = deque([x0])
    while queue:
        code = queue.popleft()
        n, J, S = L.labels[code]
        if n == k:
            continue
        C = L.colmask(code)
        Jc = J & C
        us = [u for u in range(L.coef.size) if not (S >> u) & 1]
        if not us:
            continue
        for a in L.directions(code):
            kids = L.children_codes(code, a, us)
            for u, kid in zip(us, kids.tolist()):
                rec = (n + 1, Jc, L.coef.span_add(S, u))
                old = L.labels.get(kid)
                if old is None:
                    L.labels[kid] = rec
                    queue.append(kid)
                elif old != rec:
                    raise CanonicityError(f"matrix {kid} labeled {old} and {rec}")
    return L


def enumerate_theta(L: TypeLabeling, n: int) -> list[ThetaSpace]:
    """Θ_n: θ-spaces through type-n matrices along admissible directions."""
    F, k = L.F, L.k
    seen: dict = {}
    for code in L.typed_codes(n):
        X = L.digits(code).reshape(k + 1, k)
        for a in L.directions(code):
            avec = L.rows.vecs[a]
            codes = _theta_codes(F, X, avec)
            key = (int(codes[0]), tuple(int(x) for x in avec))
            if key not in seen:
                base = decode(int(codes[0]), k + 1, k, F.q)
                seen[key] = ThetaSpace(
                    tuple(map(tuple, base.tolist())), key[1], tuple(int(c) for c in codes)
                )
    return [seen[key] for key in sorted(seen)]


@lru_cache(maxsize=32)
def theta_family(F, k: int) -> tuple:
    F = _as_field(F)
    L = label_types(F, k)
    return tuple(tuple(enumerate_theta(L, n)) for n in range(k + 1))


# ---------------------------------------------------------------------------
# coefficients and identity


def _qpow(q: int, e: int, N: int) -> int:
    return pow(q, e, N) if e >= 0 else pow(zn_inv(q, N), -e, N)


def coefficients(q: int, k: int, N: int) -> list[int]:
    """α_0 = q^-k and α_i = -α_{i-1} q^{i-k} in Z/N."""
    if np.gcd(q, N) != 1:
        raise NotCoprime(f"gcd({q}, {N}) != 1")
    alpha = [_qpow(q, -k, N)]
    for i in range(1, k + 1):
        alpha.append((-alpha[-1] * _qpow(q, i - k, N)) % N)
    return alpha


def closed_form(q: int, k: int, N: int, variant: str) -> list[int]:
    """Closed-form candidates: ``"triangular"`` uses i(i+1)/2, ``"binomial"`` uses C(i,2)."""
    out = []
    for i in range(k + 1):
        tri = i * (i + 1) // 2 if variant == "triangular" else i * (i - 1) // 2
        out.append(((-1) ** i * _qpow(q, tri - (1 + i) * k, N)) % N)
    return out


@dataclass
class ThetaReport:
    q: int
    k: int
    N: int
    alpha: list
    type_counts: list
    theta_counts: list
    untyped: int
    untyped_full_rank: int
    incidence_ok: bool
    identity_ok: bool
    counterexamples: list = field(default_factory=list)
    triangular_matches: bool = False
    binomial_matches: bool = False
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.identity_ok and self.incidence_ok


def incidence_table(F, k: int) -> np.ndarray:
    """``inc[n, code]`` = number of V in Θ_n containing the matrix."""
    F = _as_field(F)
    fam = theta_family(F, k)
    inc = np.zeros((k + 1, F.q ** ((k + 1) * k)), dtype=np.int64)
    for n, spaces in enumerate(fam):
        for V in spaces:
            inc[n, list(V.members)] += 1
    return inc


def verify_identity(q, k: int, N: int, threads: int = 1) -> ThetaReport:
    """Check ``δ_{X0} = Σ_n α_n Σ_{V in Θ_n} δ_V`` at every matrix."""
    t0 = time.perf_counter()
    F = _as_field(q)
    check_coprime(F.q, N)
    L = label_types(F, k)
    fam = theta_family(F, k)
    alpha = coefficients(F.q, k, N)
    inc = incidence_table(F, k)
    size = inc.shape[1]
    rhs = (np.asarray(alpha, dtype=np.int64) @ inc) % N
    lhs = np.zeros(size, dtype=np.int64)
    lhs[encode(x0_matrix(k), F.q)] = 1
    bad = np.flatnonzero(lhs != rhs)
    inc_ok = True
    for code in range(size):
        t = L.type_of(code)
        expect = np.zeros(k + 1, dtype=np.int64)
        if t is not None:
            expect[t] = F.q ** (k - t)
            if t >= 1:
                expect[t - 1] = 1
        if not np.array_equal(inc[:, code], expect):
            inc_ok = False
            break
    typed = np.zeros(size, dtype=bool)
    typed[list(L.labels)] = True
    from .linalg import matrix_ranks

    ranks = matrix_ranks(F, k + 1, k)
    return ThetaReport(
        q=F.q,
        k=k,
        N=N,
        alpha=alpha,
        type_counts=L.counts(),
        theta_counts=[len(s) for s in fam],
        untyped=int((~typed).sum()),
        untyped_full_rank=int(((~typed) & (ranks == k)).sum()),
        incidence_ok=inc_ok,
        identity_ok=bad.size == 0,
        counterexamples=[int(c) for c in bad[:10]],
        triangular_matches=closed_form(F.q, k, N, "triangular") == alpha,
        binomial_matches=closed_form(F.q, k, N, "binomial") == alpha,
        seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# δ certificate


@dataclass
class ThetaCertificate:
    """Minor form ``δ_{X0}(X) = Σ α_M δ_{X0}(M X)`` with M = X0 M_V."""

    field: FieldSpec
    k: int
    N: int
    alpha: list
    codes: np.ndarray  # (k+1)x(k+1) matrix codes, ascending
    coeffs: np.ndarray
    theta_counts: list

    @property
    def q(self) -> int:
        return self.field.q

    def matrices(self) -> np.ndarray:
        return decode_batch(self.codes, self.k + 1, self.k + 1, self.q)

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "p": self.field.p,
            "e": self.field.e,
            "k": self.k,
            "N": self.N,
            "alpha": list(self.alpha),
            "terms": [
                {"matrix": M.tolist(), "coeff": int(c)} for M, c in zip(self.matrices(), self.coeffs)
            ],
            "theta_counts": list(self.theta_counts),
        }


def delta_identity_holds(F: FieldSpec, k: int, N: int, mats, coeffs, m: int | None = None) -> bool:
    """Whether ``Σ c δ_{X0}(M X) = δ_{X0}(X)`` for every X in F^{m x k}."""
    m = k + 1 if m is None else m
    Xs = all_matrices(F, m, k)
    x0 = encode(x0_matrix(k, m), F.q)
    if len(mats) == 0:
        return False
    hits = left_action_codes(F, mats, Xs) == x0
    val = (np.asarray(coeffs, dtype=np.int64) @ hits.astype(np.int64)) % N
    expect = np.zeros(len(Xs), dtype=np.int64)
    expect[x0] = 1
    return bool(np.array_equal(val, expect))


@lru_cache(maxsize=32)
def _certificate_delta(F: FieldSpec, k: int, N: int) -> ThetaCertificate:
    rep = verify_identity(F, k, N)
    if not rep.ok:
        raise IdentityFailed(f"θ identity fails for q={F.q}, k={k}, N={N}")
    alpha = rep.alpha
    X0 = x0_matrix(k)
    acc: dict[int, int] = {}
    for n, spaces in enumerate(theta_family(F, k)):
        for V in spaces:
            M = matmul(F, X0, mv_matrix(F, V))
            c = encode(M, F.q)
            acc[c] = (acc.get(c, 0) + alpha[n]) % N
    codes = np.array(sorted(c for c, v in acc.items() if v), dtype=np.int64)
    coeffs = np.array([acc[int(c)] for c in codes], dtype=np.int64)
    cert = ThetaCertificate(F, k, N, alpha, codes, coeffs, rep.theta_counts)
    if not delta_identity_holds(F, k, N, cert.matrices(), coeffs):
        raise IdentityFailed("emitted δ certificate does not verify")
    return cert


def certificate_delta(q, k: int, N: int) -> ThetaCertificate:
    return _certificate_delta(_as_field(q), k, N)
