import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clonoids.linalg import (
    AmbientMismatch,
    BudgetExceeded,
    NotFactorizationPair,
    SingularMatrix,
    all_matrices,
    batch_rank,
    colspace,
    contains,
    decode,
    decode_batch,
    encode,
    encode_batch,
    enumerate_GL,
    enumerate_all_subspaces,
    enumerate_codes,
    enumerate_matrices,
    enumerate_subspaces,
    factorization_transition,
    full_space,
    gaussian_binomial,
    gl_order,
    intersect,
    inverse,
    is_subspace,
    left_action_codes,
    matmul,
    orth,
    rank,
    rank_factorize,
    row_span,
    solve_right,
    span_sum,
    subspaces_of,
)
from clonoids.scalars import field_make

F2, F3, F4 = field_make(2), field_make(3), field_make(2, 2)


def test_codec_first_entry_most_significant():
    X = np.array([[1, 0], [0, 0]])
    assert encode(X, 2) == 8
    assert np.array_equal(decode(8, 2, 2, 2), X)


@pytest.mark.parametrize("q,m,k", [(2, 2, 2), (2, 2, 4), (3, 2, 2), (3, 1, 3), (4, 2, 2)])
def test_codec_bijection(q, m, k):
    codes = np.arange(q ** (m * k))
    assert np.array_equal(encode_batch(decode_batch(codes, m, k, q), q), codes)


def test_small_counts():
    assert len(enumerate_matrices(F2, 2, 2, rank_le=1)) == 10
    assert len(enumerate_GL(F2, 2)) == 6
    assert len(enumerate_subspaces(F2, 3, 2)) == 7
    assert len(enumerate_GL(F3, 3)) == gl_order(3, 3) == 11232
    assert len(enumerate_codes(F3, 3, 3, rank_le=2)) == 8451
    assert len(enumerate_GL(F4, 2)) == gl_order(4, 2) == 180


@pytest.mark.parametrize("F", [F2, F3, F4])
def test_subspace_counts_gaussian(F):
    for m in range(4 if F.q < 4 else 3):
        for d in range(m + 1):
            assert len(enumerate_subspaces(F, m, d)) == gaussian_binomial(F.q, m, d)


def test_budget():
    with pytest.raises(BudgetExceeded):
        all_matrices(F3, 4, 4, budget=1000)


@pytest.mark.parametrize("F", [F2, F3])
def test_rank_of_product_exhaustive(F):
    Ms = all_matrices(F, 2, 2)
    r = batch_rank(F, Ms)
    prods = matmul(F, Ms[:, None], Ms[None, :])
    rp = batch_rank(F, prods.reshape(-1, 2, 2)).reshape(len(Ms), len(Ms))
    assert (rp <= np.minimum(r[:, None], r[None, :])).all()


@pytest.mark.parametrize("F,shapes", [(F2, [(2, 2), (2, 3), (3, 3)]), (F3, [(2, 2), (2, 3), (3, 2)])])
def test_rank_factorize_roundtrip(F, shapes):
    for m, k in shapes:
        for X in all_matrices(F, m, k):
            A, U = rank_factorize(F, X)
            assert A.shape[1] == U.shape[0] == rank(F, X)
            assert np.array_equal(matmul(F, A, U), X)


def test_factorization_transition():
    X = np.array([[1, 1], [0, 1], [1, 0]])
    A, U = rank_factorize(F2, X)
    T = np.array([[1, 1], [0, 1]])
    A2, U2 = matmul(F2, A, T), matmul(F2, inverse(F2, T), U)
    T2 = factorization_transition(F2, A, U, A2, U2)
    assert np.array_equal(matmul(F2, A, T2), A2)
    with pytest.raises(NotFactorizationPair):
        factorization_transition(F2, A, U, np.array([[1, 0], [0, 1], [0, 0]]), U2)


def test_inverse_and_solve():
    for M in enumerate_GL(F3, 2):
        assert np.array_equal(matmul(F3, M, inverse(F3, M)), np.eye(2, dtype=np.int64))
    with pytest.raises(SingularMatrix):
        inverse(F3, np.array([[1, 2], [2, 1]]))
    A = np.array([[1, 0], [0, 0]])
    assert solve_right(F2, A, np.array([[0], [1]])) is None


@given(st.lists(st.lists(st.integers(0, 2), min_size=3, max_size=3), min_size=1, max_size=4))
def test_subspace_canonicity(rows):
    rows = np.array(rows, dtype=np.int64)
    V = row_span(F3, rows, 3)
    mixed = np.vstack([rows[::-1], F3.add[rows[0], rows[-1]]])
    assert row_span(F3, mixed, 3) == V
    assert hash(row_span(F3, mixed, 3)) == hash(V)


@pytest.mark.parametrize("F,m", [(F2, 3), (F3, 2), (F3, 3), (F4, 2)])
def test_duality_laws_exhaustive(F, m):
    subs = enumerate_all_subspaces(F, m)
    for V in subs:
        assert orth(F, orth(F, V)) == V
        assert orth(F, V).dim == m - V.dim
    for V in subs:
        for W in subs:
            assert orth(F, span_sum(F, V, W)) == intersect(F, orth(F, V), orth(F, W))
            assert orth(F, intersect(F, V, W)) == span_sum(F, orth(F, V), orth(F, W))
            assert span_sum(F, V, W).dim + intersect(F, V, W).dim == V.dim + W.dim
            assert is_subspace(F, V, W) == (span_sum(F, V, W) == W)


def test_ambient_mismatch():
    with pytest.raises(AmbientMismatch):
        span_sum(F2, full_space(F2, 2), full_space(F2, 3))


def test_colspace_and_subspaces_of():
    X = np.array([[1, 0], [1, 0], [0, 1]])
    W = colspace(F2, X)
    assert W.dim == 2 and contains(F2, W, [1, 1, 0]) and not contains(F2, W, [1, 0, 0])
    assert len(subspaces_of(F2, W)) == 1 + 3 + 1


def test_left_action_codes():
    Ms = enumerate_GL(F2, 2)
    Xs = all_matrices(F2, 2, 1)
    codes = left_action_codes(F2, Ms, Xs)
    for t, M in enumerate(Ms):
        for x, X in enumerate(Xs):
            assert codes[t, x] == encode(matmul(F2, M, X), 2)
