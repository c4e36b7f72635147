import numpy as np
import pytest

from clonoids.clonoid import (
    ClonoidLevel,
    closure_level,
    enumerate_clonoids,
    generated_by_n_ary,
    level_from_functions,
    member,
)
from clonoids.funcspace import FuncTable, ModuleSpec, SignatureMismatch, delta, random_table
from clonoids.scalars import field_make

F2, F3 = field_make(2), field_make(3)
Z3 = ModuleSpec((3,))


def test_closure_of_delta_one():
    L = closure_level([delta(F2, 1, Z3, [[1]])], 1)
    assert L.cardinality() == 3
    assert not member(delta(F2, 1, Z3, [[0]]), L)
    assert member(FuncTable.zero(F2, 1, 1, Z3), L)
    assert L.is_minor_closed()


def test_closure_of_delta_zero_contains_constants():
    # δ_0(0·x) is the constant 1
    L = closure_level([delta(F2, 1, Z3, [[0]])], 1)
    const = FuncTable(F2, 1, 1, Z3, [1, 1])
    assert member(const, L)


def test_closure_idempotent_and_monotone():
    rng = np.random.default_rng(0)
    gens = [random_table(F2, 1, 2, Z3, rng) for _ in range(2)]
    L = closure_level(gens, 2)
    again = closure_level(L.functions(), 2)
    assert np.array_equal(again.basis, L.basis)
    assert closure_level(gens[:1], 2) <= L
    assert L.is_minor_closed()


def test_level_from_functions_is_span_only():
    f = delta(F2, 1, Z3, [[1], [0]])
    S = level_from_functions([f], F2, 1, 2, Z3)
    assert S.cardinality() == 3
    assert not S.is_minor_closed()


def test_signature_mismatch():
    with pytest.raises(SignatureMismatch):
        closure_level([delta(F2, 1, Z3, [[1]]), delta(F3, 1, Z3, [[1]])], 1)
    with pytest.raises(SignatureMismatch):
        member(delta(F2, 1, Z3, [[1], [0]]), closure_level([delta(F2, 1, Z3, [[1]])], 1))


def test_generated_by_k_ary_random():
    rng = np.random.default_rng(5)
    for _ in range(4):
        gens = [random_table(F2, 2, int(rng.integers(1, 3)), Z3, rng) for _ in range(2)]
        assert generated_by_n_ary(gens, 2, 3)


def test_full_rank_delta_not_unary_generated():
    d = delta(F2, 2, Z3, np.eye(2, dtype=np.int64))
    assert not generated_by_n_ary([d], 1, 2)


@pytest.mark.parametrize(
    "F,k,B,count",
    [(F2, 1, (3,), 4), (F3, 1, (2,), 6), (F2, 1, (5,), 4)],
)
def test_enumerate_clonoids_counts(F, k, B, count):
    levels = enumerate_clonoids(F, k, ModuleSpec(B))
    assert len(levels) == count
    assert all(isinstance(L, ClonoidLevel) and L.is_minor_closed() for L in levels)


def test_enumerated_clonoids_are_unary_generated():
    # every clonoid at GF(2), k=1, Z/3: its binary part is the closure of its unary part
    for L in enumerate_clonoids(F2, 1, Z3):
        gens = L.functions() or [FuncTable.zero(F2, 1, 1, Z3)]
        binary = closure_level(gens, 2)
        # the binary part of <L> must equal the closure of its own unary part
        assert closure_level(binary.functions() or gens, 1) == closure_level(gens, 1)
        assert generated_by_n_ary(gens, 1, 2)
