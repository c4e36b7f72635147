"""Dense tables for operations ``(F^k)^m -> B`` with B a product of cyclic groups."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import all_matrices, encode_batch, left_action_codes, decode
from .scalars import FieldSpec, field_make


class ShapeMismatch(ValueError):
    pass


class SignatureMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ModuleSpec:
    """``B = Z/d_1 x ... x Z/d_r`` acted on by Z/N with N the exponent."""

    factors: tuple

    def __post_init__(self):
        if not self.factors or any(int(d) < 2 for d in self.factors):
            raise ValueError(f"cyclic factors must be >= 2, got {self.factors}")
        object.__setattr__(self, "factors", tuple(int(d) for d in self.factors))

    @classmethod
    def parse(cls, text: str) -> "ModuleSpec":
        return cls(tuple(int(x) for x in str(text).split(",") if x.strip()))

    @property
    def r(self) -> int:
        return len(self.factors)

    @property
    def N(self) -> int:
        return math.lcm(*self.factors)

    @property
    def order(self) -> int:
        return math.prod(self.factors)

    @property
    def scales(self) -> np.ndarray:
        return np.array([self.N // d for d in self.factors], dtype=np.int64)

    @property
    def dvec(self) -> np.ndarray:
        return np.array(self.factors, dtype=np.int64)

    def check_coprime(self, q: int) -> None:
        from .scalars import check_coprime

        check_coprime(q, self.order)

    def elements(self):
        from itertools import product

        return [np.array(t, dtype=np.int64) for t in product(*[range(d) for d in self.factors])]

    def __str__(self):
        return "x".join(f"Z/{d}" for d in self.factors)


class FuncTable:
    """An m-ary operation on F^k with values in B, stored densely.

    ``values[c]`` is the B-element at the matrix with code ``c``.
    """

    __slots__ = ("field", "k", "m", "module", "values")

    def __init__(self, field: FieldSpec, k: int, m: int, module: ModuleSpec, values):
        vals = np.asarray(values, dtype=np.int64)
        size = field.q ** (m * k)
        if vals.ndim == 1 and module.r == 1:
            vals = vals.reshape(-1, 1)
        if vals.shape != (size, module.r):
            raise ShapeMismatch(f"expected {(size, module.r)} values, got {vals.shape}")
        vals = vals % module.dvec
        vals.setflags(write=False)
        self.field, self.k, self.m, self.module, self.values = field, k, m, module, vals

    # signature helpers
    @property
    def signature(self):
        return (self.field, self.k, self.m, self.module)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def _check(self, other: "FuncTable") -> None:
        if self.signature != other.signature:
            raise SignatureMismatch("operands have different signatures")

    @classmethod
    def zero(cls, field, k, m, module) -> "FuncTable":
        return cls(field, k, m, module, np.zeros((field.q ** (m * k), module.r), dtype=np.int64))

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        if X.shape != (self.m, self.k):
            raise ShapeMismatch(f"point of shape {X.shape}, expected {(self.m, self.k)}")
        return self.values[int(encode_batch(X, self.field.q))]

    def __eq__(self, other):
        return (
            isinstance(other, FuncTable)
            and self.signature == other.signature
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.signature, self.values.tobytes()))

    def __add__(self, other):
        self._check(other)
        return FuncTable(*self.signature, self.values + other.values)

    def __neg__(self):
        return FuncTable(*self.signature, -self.values)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: int) -> "FuncTable":
        return FuncTable(*self.signature, self.values * int(c))

    def is_zero(self) -> bool:
        return not self.values.any()

    def __repr__(self):
        return f"FuncTable({self.field}, k={self.k}, m={self.m}, B={self.module}, nnz={len(support_codes(self))})"

    # serialization
    def to_json(self) -> dict:
        vals = self.values[:, 0].tolist() if self.module.r == 1 else self.values.tolist()
        return {
            "field": self.field.to_json(),
            "k": self.k,
            "m": self.m,
            "module": list(self.module.factors),
            "values": vals,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FuncTable":
        F = field_make(int(obj["field"]["p"]), int(obj["field"].get("e", 1)))
        module = ModuleSpec(tuple(obj["module"]))
        return cls(F, int(obj["k"]), int(obj["m"]), module, obj["values"])


def add(f: FuncTable, g: FuncTable) -> FuncTable:
    return f + g


def neg(f: FuncTable) -> FuncTable:
    return -f


def scale(f: FuncTable, c: int) -> FuncTable:
    return f.scale(c)


def delta(field: FieldSpec, k: int, module: ModuleSpec, X0, b=1) -> FuncTable:
    """The function with value b at X0 and 0 elsewhere."""
    X0 = np.asarray(X0, dtype=np.int64)
    if X0.ndim != 2 or X0.shape[1] != k:
        raise ShapeMismatch(f"anchor of shape {X0.shape} for k={k}")
    m = X0.shape[0]
    vals = np.zeros((field.q ** (m * k), module.r), dtype=np.int64)
    vals[int(encode_batch(X0, field.q))] = np.broadcast_to(np.asarray(b, dtype=np.int64), (module.r,))
    return FuncTable(field, k, m, module, vals)


@lru_cache(maxsize=256)
def _minor_index(field: FieldSpec, k: int, mcode_bytes: bytes, shape: tuple) -> np.ndarray:
    M = np.frombuffer(mcode_bytes, dtype=np.int64).reshape(shape)
    Xs = all_matrices(field, shape[1], k)
    idx = left_action_codes(field, M[None], Xs)[0]
    idx.setflags(write=False)
    return idx


def minor_index(field: FieldSpec, k: int, M) -> np.ndarray:
    """``idx[code(X)] = code(M X)`` over all X in F^{m' x k}."""
    M = np.ascontiguousarray(M, dtype=np.int64)
    return _minor_index(field, k, M.tobytes(), M.shape)


def minor(f: FuncTable, M) -> FuncTable:
    """``X -> f(M X)``; M has shape ``(f.m, m')`` and the result has arity m'."""
    M = np.asarray(M, dtype=np.int64)
    if M.ndim != 2 or M.shape[0] != f.m:
        raise ShapeMismatch(f"minor matrix of shape {M.shape} for arity {f.m}")
    idx = minor_index(f.field, f.k, M)
    return FuncTable(f.field, f.k, M.shape[1], f.module, f.values[idx])


def support_codes(f: FuncTable) -> np.ndarray:
    return np.flatnonzero(f.values.any(axis=1))


def support(f: FuncTable) -> list[np.ndarray]:
    return [decode(int(c), f.m, f.k, f.field.q) for c in support_codes(f)]


def to_zn_vector(f: FuncTable) -> np.ndarray:
    """Embed into (Z/N)^{size*r}, point-major, scaling factor i by N/d_i."""
    return (f.values * f.module.scales).reshape(-1) % f.module.N


def from_zn_vector(field, k, m, module: ModuleSpec, vec) -> FuncTable:
    vec = np.asarray(vec, dtype=np.int64).reshape(-1, module.r)
    if (vec % module.scales).any():
        raise ValueError("vector is not in the image of the embedding")
    return FuncTable(field, k, m, module, vec // module.scales)


def random_table(field, k, m, module: ModuleSpec, rng: np.random.Generator) -> FuncTable:
    size = field.q ** (m * k)
    vals = np.stack([rng.integers(0, d, size=size) for d in module.factors], axis=1)
    return FuncTable(field, k, m, module, vals)
