"""Clonoid levels: the m-ary part of a generated clonoid as a Z/N-submodule.

The clone of F^k consists of the linear maps and the clone of B of the
Z-linear combinations, so the m-ary part of ``<G>`` is the span of all
minors ``X -> g(M X)`` with g in G and M of shape (arity(g), m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcspace import FuncTable, ModuleSpec, SignatureMismatch, from_zn_vector, minor_index, to_zn_vector
from .linalg import all_matrices, check_budget, encode_batch
from .scalars import FieldSpec, Submodule, howell_form


@dataclass(frozen=True, eq=False)
class ClonoidLevel:
    field: FieldSpec
    k: int
    m: int
    module: ModuleSpec
    sub: Submodule

    @property
    def signature(self):
        return (self.field, self.k, self.m, self.module)

    @property
    def basis(self) -> np.ndarray:
        return self.sub.basis

    def __eq__(self, other):
        return isinstance(other, ClonoidLevel) and self.signature == other.signature and self.sub == other.sub

    def __hash__(self):
        return hash((self.signature, self.sub))

    def __le__(self, other: "ClonoidLevel") -> bool:
        return self.signature == other.signature and self.sub <= other.sub

    def cardinality(self) -> int:
        return self.sub.cardinality()

    def functions(self) -> list[FuncTable]:
        """The basis rows as operations."""
        return [from_zn_vector(self.field, self.k, self.m, self.module, row) for row in self.basis]

    def is_minor_closed(self) -> bool:
        F, k, m = self.field, self.k, self.m
        for f in self.functions():
            for M in all_matrices(F, m, m):
                if not member(FuncTable(F, k, m, self.module, f.values[minor_index(F, k, M)]), self):
                    return False
        return True


def _signature(gens, field=None, k=None, module=None):
    gens = list(gens)
    if gens:
        field, k, module = gens[0].field, gens[0].k, gens[0].module
        for g in gens:
            if (g.field, g.k, g.module) != (field, k, module):
                raise SignatureMismatch("generators must share field, k and module")
    if field is None:
        raise ValueError("empty generator set needs an explicit signature")
    return gens, field, k, module


def minor_rows(gens, m: int, budget: int | None = None) -> np.ndarray:
    """Embedded vectors of every minor ``g(M X)`` with M of shape (arity(g), m)."""
    rows = []
    for g in gens:
        F, k = g.field, g.k
        check_budget(F.q ** (g.m * m), budget)
        Ms = all_matrices(F, g.m, m)
        Xs = all_matrices(F, m, k)
        from .linalg import left_action_codes

        idx = left_action_codes(F, Ms, Xs)  # (|M|, q^{mk})
        vec = to_zn_vector(g).reshape(-1, g.module.r)
        rows.append(vec[idx].reshape(len(Ms), -1))
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    out = np.concatenate(rows)
    return np.unique(out, axis=0)


def closure_level(gens, m: int, field=None, k=None, module=None, budget: int | None = None) -> ClonoidLevel:
    """The m-ary part of the clonoid generated by ``gens``."""
    gens, field, k, module = _signature(gens, field, k, module)
    dim = field.q ** (m * k) * module.r
    rows = minor_rows(gens, m, budget)
    if rows.size == 0:
        rows = np.zeros((0, dim), dtype=np.int64)
    sub = Submodule(module.N, dim, howell_form(rows, module.N, dim))
    return ClonoidLevel(field, k, m, module, sub)


def level_from_functions(funcs, field, k, m, module) -> ClonoidLevel:
    """Span of the given m-ary functions, without minor closure."""
    dim = field.q ** (m * k) * module.r
    rows = [to_zn_vector(f) for f in funcs]
    rows = np.array(rows, dtype=np.int64).reshape(-1, dim)
    return ClonoidLevel(field, k, m, module, Submodule.span(rows, module.N, dim))


def member(f: FuncTable, L: ClonoidLevel) -> bool:
    if (f.field, f.k, f.m, f.module) != L.signature:
        raise SignatureMismatch("function and level differ in signature")
    return to_zn_vector(f) in L.sub


def generated_by_n_ary(gens, n: int, m: int, field=None, k=None, module=None) -> bool:
    """Whether the m-ary part of ``<gens>`` equals that of ``<<gens>^(n)>``."""
    if m <= n:
        raise ValueError("need m > n")
    gens, field, k, module = _signature(gens, field, k, module)
    low = closure_level(gens, n, field, k, module)
    return closure_level(low.functions(), m, field, k, module) == closure_level(gens, m, field, k, module)


def enumerate_clonoids(field: FieldSpec, k: int, module: ModuleSpec, level_arity: int | None = None,
                       budget: int = 100_000) -> list[ClonoidLevel]:
    """Every minor- and module-closed submodule of B^{F^{m x k}} (default m = k).

    Cyclic clonoids of single functions are closed under pairwise sums until
    nothing new appears.
    """
    m = k if level_arity is None else level_arity
    size = field.q ** (m * k)
    total = module.order**size
    check_budget(total, budget)
    dim = size * module.r
    from itertools import product

    cyclic = {}
    for vals in product(*[module.elements()] * size):
        f = FuncTable(field, k, m, module, np.array(vals, dtype=np.int64).reshape(size, module.r))
        L = closure_level([f], m)
        cyclic[L] = None
    found = set(cyclic)
    frontier = list(found)
    cyc = list(cyclic)
    while frontier:
        nxt = []
        for L in frontier:
            for C in cyc:
                S = ClonoidLevel(field, k, m, module, L.sub + C.sub)
                if S not in found:
                    found.add(S)
                    nxt.append(S)
        frontier = nxt
        check_budget(len(found), budget)
    zero = ClonoidLevel(field, k, m, module, Submodule.zero(module.N, dim))
    found.add(zero)
    return sorted(found, key=lambda L: (L.cardinality(), L.basis.tobytes()))
