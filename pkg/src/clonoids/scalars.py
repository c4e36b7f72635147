"""Exact arithmetic in GF(q) and Z/N, plus canonical linear algebra over Z/N.

Field elements are integer codes ``0..q-1``.  For prime fields the code is the
residue; for extension fields it is the base-p digit vector of the polynomial
representative (lowest degree digit first).  All field arithmetic is done by
table lookup, which also works elementwise on numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

SUPPORTED_ORDERS = (2, 3, 4, 5, 7, 8, 9, 11, 13, 16)

# monic moduli, coefficients lowest degree first (leading 1 included)
_MODULI = {
    (2, 2): (1, 1, 1),  # x^2 + x + 1
    (2, 3): (1, 1, 0, 1),  # x^3 + x + 1
    (3, 2): (1, 0, 1),  # x^2 + 1
    (2, 4): (1, 1, 0, 0, 1),  # x^4 + x + 1
}


class UnsupportedOrder(ValueError):
    pass


class NotPrime(ValueError):
    pass


class NotInvertible(ArithmeticError):
    pass


class NotCoprime(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization of ``n`` as ``[(prime, exponent), ...]``."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


# ---------------------------------------------------------------------------
# polynomials over GF(p), coefficient tuples lowest degree first


def _poly_trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a, b, p):
    a = _poly_trim(a)
    b = _poly_trim(b)
    inv_lead = pow(b[-1], -1, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        a = _poly_trim(a)
    return a


def is_irreducible(poly, p: int) -> bool:
    """Exhaustive irreducibility test: no monic factor of degree <= deg/2."""
    poly = _poly_trim(poly)
    deg = len(poly) - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for low in product(range(p), repeat=d):
            if not _poly_mod(poly, list(low) + [1], p):
                return False
    return True


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """The finite field of order ``q = p**e`` with lookup tables."""

    p: int
    e: int
    modulus: tuple = ()
    add: np.ndarray = field(repr=False, default=None)
    mul: np.ndarray = field(repr=False, default=None)
    neg: np.ndarray = field(repr=False, default=None)
    inv: np.ndarray = field(repr=False, default=None)
    sub: np.ndarray = field(repr=False, default=None)

    @property
    def q(self) -> int:
        return self.p**self.e

    @property
    def is_prime_field(self) -> bool:
        return self.e == 1

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and (self.p, self.e) == (other.p, other.e)

    def __hash__(self):
        return hash((self.p, self.e))

    def __repr__(self):
        return f"GF({self.q})"

    def to_json(self) -> dict:
        return {"p": self.p, "e": self.e}

    def matmul(self, a, b):
        """Matrix product over the field; broadcasts over leading axes."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return np.matmul(a, b) % self.p
        if a.shape[-1] == 0:
            shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (a.shape[-2], b.shape[-1])
            return np.zeros(shape, dtype=np.int64)
        prods = self.mul[a[..., :, :, None], b[..., None, :, :]]
        out = prods[..., 0, :]
        for t in range(1, a.shape[-1]):
            out = self.add[out, prods[..., t, :]]
        return out

    def dot(self, a, b) -> int:
        """Scalar product of two code vectors."""
        acc = 0
        for x, y in zip(a, b):
            acc = int(self.add[acc, self.mul[x, y]])
        return acc


def _poly_tables(p, e, modulus):
    q = p**e
    digits = [tuple((c // p**i) % p for i in range(e)) for c in range(q)]

    def code(d):
        return sum(int(x) * p**i for i, x in enumerate(d))

    add = np.zeros((q, q), dtype=np.int64)
    mul = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(q):
            add[a, b] = code([(x + y) % p for x, y in zip(digits[a], digits[b])])
            prod = [0] * (2 * e - 1)
            for i, x in enumerate(digits[a]):
                for j, y in enumerate(digits[b]):
                    prod[i + j] = (prod[i + j] + x * y) % p
            red = _poly_mod(prod, modulus, p) if e > 1 else [prod[0] % p]
            red = list(red) + [0] * (e - len(red))
            mul[a, b] = code(red[:e])
    return add, mul


@lru_cache(maxsize=None)
def field_make(p: int, e: int = 1) -> FieldSpec:
    """Build GF(p**e); instances are cached so equal fields are identical objects."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if e < 1 or p**e not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"order {p}**{e} not in {SUPPORTED_ORDERS}")
    q = p**e
    if e == 1:
        modulus = (0, 1)
    else:
        modulus = _MODULI[(p, e)]
        if not is_irreducible(modulus, p):
            raise AssertionError(f"modulus {modulus} reducible over GF({p})")
    add, mul = _poly_tables(p, e, modulus)
    neg = np.array([int(np.nonzero(add[a] == 0)[0][0]) for a in range(q)], dtype=np.int64)
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = int(np.nonzero(mul[a] == 1)[0][0])
    sub = add[:, neg]
    for t in (add, mul, neg, inv, sub):
        t.setflags(write=False)
    return FieldSpec(p, e, tuple(modulus), add, mul, neg, inv, sub)


@dataclass(frozen=True)
class RingSpec:
    N: int
    factorization: tuple

    @classmethod
    def make(cls, N: int) -> "RingSpec":
        if N < 2:
            raise ValueError("modulus must be >= 2")
        return cls(N, tuple(factorize(N)))


def check_coprime(q: int, N: int) -> None:
    if math.gcd(q, N) != 1:
        raise NotCoprime(f"gcd({q}, {N}) != 1")


def zn_inv(x: int, N: int) -> int:
    x %= N
    if math.gcd(x, N) != 1:
        raise NotInvertible(f"{x} is not a unit mod {N}")
    return pow(x, -1, N)


def _unit_to_gcd(a: int, N: int) -> int:
    """A unit ``w`` mod N with ``a*w % N == gcd(a, N)``."""
    g = math.gcd(a, N)
    n1 = N // g
    w = pow(a // g, -1, n1) if n1 > 1 else 1
    while math.gcd(w, N) != 1:
        w += n1
    return w % N


# ---------------------------------------------------------------------------
# Howell form


def _valuation(x, p):
    v = np.zeros(x.shape, dtype=np.int64)
    x = x.copy()
    mask = x != 0
    while True:
        div = mask & (x % p == 0)
        if not div.any():
            return v
        v[div] += 1
        x[div] //= p


def _howell_prime_power(rows: np.ndarray, N: int, p: int) -> np.ndarray:
    work = rows[np.any(rows != 0, axis=1)]
    ncols = rows.shape[1]
    pivots = []
    for c in range(ncols):
        if work.shape[0] == 0:
            break
        col = work[:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        vals = _valuation(col[nz], p)
        j = int(nz[np.argmin(vals)])
        v = int(vals.min())
        pv = p**v
        piv = work[j] * pow(int(work[j, c]) // pv, -1, N) % N
        rest = np.delete(work, j, axis=0)
        rest = (rest - np.outer(rest[:, c] // pv, piv)) % N
        if v > 0:
            rest = np.vstack([rest, piv * (N // pv) % N])
        work = rest[np.any(rest != 0, axis=1)]
        pivots.append((c, piv))
    return _back_reduce(pivots, N, ncols)


def _back_reduce(pivots, N, ncols):
    if not pivots:
        return np.zeros((0, ncols), dtype=np.int64)
    out = np.array([row for _, row in pivots], dtype=np.int64)
    for idx, (c, _) in enumerate(pivots):
        g = int(out[idx, c])
        if idx:
            f = out[:idx, c] // g
            out[:idx] = (out[:idx] - np.outer(f, out[idx])) % N
    return out


def _howell_general(rows: np.ndarray, N: int) -> np.ndarray:
    work = [list(map(int, r)) for r in rows if any(r)]
    ncols = rows.shape[1]
    pivots = []
    for c in range(ncols):
        if not work:
            break
        idx = [i for i, r in enumerate(work) if r[c] % N]
        if not idx:
            continue
        base = work[idx[0]]
        for i in idx[1:]:
            other = work[i]
            a, b = base[c], other[c]
            g, s, t = _xgcd(a, b)
            u, v = -b // g, a // g
            base, work[i] = (
                [(s * x + t * y) % N for x, y in zip(base, other)],
                [(u * x + v * y) % N for x, y in zip(base, other)],
            )
        w = _unit_to_gcd(base[c], N)
        base = [x * w % N for x in base]
        g = base[c]
        work = [r for i, r in enumerate(work) if i != idx[0] and any(r)]
        ann = [x * (N // g) % N for x in base]
        if any(ann):
            work.append(ann)
        pivots.append((c, np.array(base, dtype=np.int64)))
    return _back_reduce(pivots, N, ncols)


def _xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        qt, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    return a, x0, y0


def howell_form(gens, N: int, ncols: int | None = None) -> np.ndarray:
    """Howell canonical generating matrix of the row span of ``gens`` over Z/N.

    Two generating sets span the same submodule iff their Howell forms are
    identical arrays.
    """
    rows = np.asarray(gens, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows.reshape(0 if ncols is not None and rows.size == 0 else 1, -1) if rows.size else np.zeros((0, ncols or 0), dtype=np.int64)
    if ncols is not None and rows.shape[1] != ncols:
        if rows.shape[0] == 0:
            rows = np.zeros((0, ncols), dtype=np.int64)
        else:
            raise DimensionMismatch(f"expected {ncols} columns, got {rows.shape[1]}")
    rows = rows % N
    fac = factorize(N)
    if len(fac) == 1:
        return _howell_prime_power(rows, N, fac[0][0])
    return _howell_general(rows, N)


def howell_reduce(basis: np.ndarray, v, N: int) -> np.ndarray:
    """Reduce ``v`` against a Howell basis; the result is zero iff v is in the span."""
    v = np.asarray(v, dtype=np.int64) % N
    for row in basis:
        c = int(np.flatnonzero(row)[0])
        g = int(row[c])
        if v[c] % g:
            return v
        v = (v - (v[c] // g) * row) % N
    return v


@dataclass(frozen=True, eq=False)
class Submodule:
    """A submodule of (Z/N)^dim held by its Howell form."""

    N: int
    dim: int
    basis: np.ndarray

    @classmethod
    def span(cls, gens, N: int, dim: int) -> "Submodule":
        return cls(N, dim, howell_form(gens, N, dim))

    @classmethod
    def zero(cls, N: int, dim: int) -> "Submodule":
        return cls(N, dim, np.zeros((0, dim), dtype=np.int64))

    def _key(self):
        return (self.N, self.dim, self.basis.shape, self.basis.tobytes())

    def __eq__(self, other):
        return isinstance(other, Submodule) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __contains__(self, v) -> bool:
        return not howell_reduce(self.basis, v, self.N).any()

    def __le__(self, other: "Submodule") -> bool:
        return all(row in other for row in self.basis)

    def __add__(self, other: "Submodule") -> "Submodule":
        return Submodule.span(np.vstack([self.basis, other.basis]), self.N, self.dim)

    def add_vectors(self, vecs) -> "Submodule":
        vecs = np.asarray(vecs, dtype=np.int64).reshape(-1, self.dim)
        return Submodule.span(np.vstack([self.basis, vecs]), self.N, self.dim)

    def cardinality(self) -> int:
        size = 1
        for row in self.basis:
            c = int(np.flatnonzero(row)[0])
            size *= self.N // int(row[c])
        return size

    def elements(self):
        """All elements; only sensible for small submodules."""
        orders = []
        for row in self.basis:
            c = int(np.flatnonzero(row)[0])
            orders.append(self.N // int(row[c]))
        for coeffs in product(*[range(o) for o in orders]):
            v = np.zeros(self.dim, dtype=np.int64)
            for cf, row in zip(coeffs, self.basis):
                v = v + cf * row
            yield v % self.N

    def __repr__(self):
        return f"Submodule(N={self.N}, dim={self.dim}, rows={self.basis.shape[0]})"


# ---------------------------------------------------------------------------
# solving linear systems


def _solve_prime_power(A: np.ndarray, b: np.ndarray, pa: int, p: int):
    A = A % pa
    b = b % pa
    rows, cols = A.shape
    M = np.concatenate([A, b[:, None]], axis=1)
    colperm = list(range(cols))
    piv_info = []
    r = 0
    while r < rows and r < cols:
        sub = M[r:, r:cols]
        nz = np.argwhere(sub != 0)
        if nz.size == 0:
            break
        vals = _valuation(sub[nz[:, 0], nz[:, 1]], p)
        best = int(np.argmin(vals))
        i, j = int(nz[best, 0]) + r, int(nz[best, 1]) + r
        v = int(vals[best])
        M[[r, i]] = M[[i, r]]
        M[:, [r, j]] = M[:, [j, r]]
        colperm[r], colperm[j] = colperm[j], colperm[r]
        pv = p**v
        unit_inv = pow(int(M[r, r]) // pv, -1, pa)
        M[r] = M[r] * unit_inv % pa
        below = M[r + 1 :, r] // pv
        M[r + 1 :] = (M[r + 1 :] - np.outer(below, M[r])) % pa
        piv_info.append(v)
        r += 1
    if (M[r:, cols] % pa).any():
        return None
    x = np.zeros(cols, dtype=np.int64)
    for i in range(r - 1, -1, -1):
        pv = p ** piv_info[i]
        rhs = (int(M[i, cols]) - int(M[i, i + 1 : cols] @ x[i + 1 : cols])) % pa
        if rhs % pv:
            return None
        mod = pa // pv
        x[i] = (rhs // pv) % mod
    out = np.zeros(cols, dtype=np.int64)
    for pos, orig in enumerate(colperm):
        out[orig] = x[pos]
    return out


def crt(residues, moduli) -> int:
    x, m = 0, 1
    for r, n in zip(residues, moduli):
        t = ((r - x) * pow(m, -1, n)) % n
        x += m * t
        m *= n
    return x % m


def solve_zn(A, b, N: int):
    """A solution x of ``A x = b`` over Z/N, or None if there is none.

    Solves per prime-power factor with minimal-valuation pivots, then
    recombines by CRT.  Infeasibility is exact.
    """
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    if A.ndim != 2 or A.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"A{A.shape} vs b{b.shape}")
    parts, mods = [], []
    for p, a in factorize(N):
        pa = p**a
        x = _solve_prime_power(A.copy(), b.copy(), pa, p)
        if x is None:
            return None
        parts.append(x)
        mods.append(pa)
    out = np.array([crt([int(x[i]) for x in parts], mods) for i in range(A.shape[1])], dtype=np.int64)
    return out


def solve_gf2_bitsets(rows, rhs, ncols: int):
    """Solve a GF(2) system given as Python-int bitset rows.

    ``rows[i]`` has bit j set when unknown j occurs in equation i.  Returns a
    list of 0/1 values or None when the system is inconsistent.
    """
    rhs_bit = 1 << ncols
    pivots = {}
    for row, r in zip(rows, rhs):
        v = row | (rhs_bit if r & 1 else 0)
        while v & (rhs_bit - 1):
            low = (v & -v).bit_length() - 1
            pr = pivots.get(low)
            if pr is None:
                pivots[low] = v
                break
            v ^= pr
        else:
            if v:
                return None
    x = 0
    for col in sorted(pivots, reverse=True):
        row = pivots[col]
        val = (row >> ncols) & 1
        val ^= bin(row & x & (rhs_bit - 1) & ~(1 << col)).count("1") & 1
        if val:
            x |= 1 << col
    return [(x >> j) & 1 for j in range(ncols)]
