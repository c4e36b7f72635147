import numpy as np
import pytest

from clonoids.funcspace import (
    FuncTable,
    ModuleSpec,
    ShapeMismatch,
    SignatureMismatch,
    delta,
    from_zn_vector,
    minor,
    random_table,
    support,
    to_zn_vector,
)
from clonoids.linalg import all_matrices, matmul
from clonoids.scalars import field_make

F2, F3 = field_make(2), field_make(3)
Z3 = ModuleSpec((3,))


def test_module_spec():
    B = ModuleSpec.parse("2,4")
    assert (B.r, B.N, B.order) == (2, 4, 8)
    assert B.scales.tolist() == [2, 1]
    assert len(B.elements()) == 8
    with pytest.raises(ValueError):
        ModuleSpec((1,))


def test_delta_and_call():
    X0 = np.array([[1, 0], [0, 1], [0, 0]])
    d = delta(F2, 2, Z3, X0, 2)
    assert d(X0).tolist() == [2]
    assert d(np.zeros((3, 2), dtype=np.int64)).tolist() == [0]
    assert [s.tolist() for s in support(d)] == [X0.tolist()]
    with pytest.raises(ShapeMismatch):
        d(np.zeros((2, 2), dtype=np.int64))


def test_arithmetic_and_signature():
    rng = np.random.default_rng(0)
    f = random_table(F3, 1, 2, Z3, rng)
    g = random_table(F3, 1, 2, Z3, rng)
    assert (f + g - g) == f
    assert f.scale(3).is_zero()
    with pytest.raises(SignatureMismatch):
        f + random_table(F3, 1, 1, Z3, rng)


@pytest.mark.parametrize("F,k", [(F2, 1), (F2, 2), (F3, 1)])
def test_minor_composition_law(F, k):
    rng = np.random.default_rng(1)
    f = random_table(F, k, 2, Z3, rng)
    mats = all_matrices(F, 2, 2)
    for M in mats:
        fM = minor(f, M)
        for S in mats[:: max(1, len(mats) // 9)]:
            assert minor(fM, S) == minor(f, matmul(F, M, S))


def test_minor_changes_arity_and_is_linear():
    rng = np.random.default_rng(2)
    f = random_table(F2, 1, 2, Z3, rng)
    g = random_table(F2, 1, 2, Z3, rng)
    M = np.array([[1, 1, 0], [0, 1, 1]])
    assert minor(f, M).m == 3
    assert minor(f + g, M) == minor(f, M) + minor(g, M)
    X = np.array([[1], [0], [1]])
    assert minor(f, M)(X).tolist() == f(matmul(F2, M, X)).tolist()


def test_zn_embedding_roundtrip():
    B = ModuleSpec((2, 4))
    rng = np.random.default_rng(3)
    f = random_table(F3, 1, 2, B, rng)
    v = to_zn_vector(f)
    assert from_zn_vector(F3, 1, 2, B, v) == f
    with pytest.raises(ValueError):
        from_zn_vector(F3, 1, 2, B, np.ones_like(v))


def test_json_roundtrip():
    f = random_table(field_make(2, 2), 1, 2, ModuleSpec((3, 3)), np.random.default_rng(4))
    assert FuncTable.from_json(f.to_json()) == f
