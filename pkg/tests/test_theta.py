import itertools

import numpy as np
import pytest

from clonoids.linalg import all_matrices, encode, matmul, matrix_ranks, rank
from clonoids.scalars import NotCoprime, field_make
from clonoids.theta import (
    DirectionInColumnSpace,
    NotFullRank,
    certificate_delta,
    closed_form,
    coefficients,
    delta_identity_holds,
    enumerate_theta,
    label_types,
    mv_matrix,
    theta_family,
    theta_members,
    verify_identity,
    x0_matrix,
)

SMALL = [(2, 1), (3, 1), (2, 2), (3, 2)]


def test_type_counts_q2_k2():
    L = label_types(field_make(2), 2)
    assert L.counts() == [1, 12, 24]
    assert [len(s) for s in theta_family(field_make(2), 2)] == [4, 12, 6]


def test_coefficients_k1():
    assert coefficients(2, 1, 3) == [2, 1]
    assert coefficients(3, 1, 2) == [1, 1]
    with pytest.raises(NotCoprime):
        coefficients(2, 1, 4)


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (2, 2, 3), (3, 2, 2), (2, 2, 5), (3, 1, 7)])
def test_triangular_closed_form_matches_recurrence(q, k, N):
    assert closed_form(q, k, N, "triangular") == coefficients(q, k, N)


def test_binomial_closed_form_differs_in_general():
    # only agrees when q is 1 mod N
    assert closed_form(2, 1, 3, "binomial") != coefficients(2, 1, 3)
    assert closed_form(3, 2, 2, "binomial") == coefficients(3, 2, 2)


def test_theta_members_errors():
    F = field_make(2)
    X = x0_matrix(1)
    with pytest.raises(DirectionInColumnSpace):
        theta_members(F, X, [1, 0])
    with pytest.raises(NotFullRank):
        theta_members(F, np.zeros((2, 1), dtype=np.int64), [0, 1])


@pytest.mark.parametrize("q,k", SMALL)
def test_solution_sets_are_theta_spaces(q, k):
    """{X : M X = Id} is a θ-space for every full-rank M, and M_V recovers it."""
    F = field_make(q)
    Xs = all_matrices(F, k + 1, k)
    Ms = all_matrices(F, k, k + 1)
    Id = np.eye(k, dtype=np.int64)
    for M in Ms[matrix_ranks(F, k, k + 1) == k]:
        sol = np.flatnonzero((matmul(F, M, Xs) == Id).all(axis=(1, 2)))
        assert len(sol) == q**k
        ker = next(v for v in all_matrices(F, k + 1, 1)[1:] if not matmul(F, M, v).any())
        V = theta_members(F, Xs[sol[0]], ker[:, 0])
        assert list(V.members) == sol.tolist()
        MV = mv_matrix(F, V)
        assert np.array_equal(np.flatnonzero((matmul(F, MV, Xs) == Id).all(axis=(1, 2))), sol)


def _all_theta(F, k):
    Xs = all_matrices(F, k + 1, k)
    vecs = all_matrices(F, k + 1, 1)[1:, :, 0]
    spaces = {}
    for X in Xs:
        if rank(F, X) != k:
            continue
        for a in vecs:
            if rank(F, np.column_stack([X, a])) == k + 1:
                V = theta_members(F, X, a)
                spaces[V.key] = V
    return list(spaces.values())


@pytest.mark.parametrize("q,k", SMALL)
def test_theta_intersection_law(q, k):
    F = field_make(q)
    spaces = _all_theta(F, k)
    sets = [set(V.members) for V in spaces]
    for s, t in itertools.combinations(sets, 2):
        assert s != t
        assert len(s & t) <= 1


@pytest.mark.parametrize("q,k", SMALL)
def test_theta_members_of_type_n_space(q, k):
    """Members X + a u^T of a Θ_n space have type n if u ∈ S(X), else n+1."""
    F = field_make(q)
    L = label_types(F, k)
    coef = all_matrices(F, k, 1)[:, :, 0]
    for n in range(k):
        for V in enumerate_theta(L, n)[:40]:
            base = next(c for c in V.members if L.type_of(c) == n)
            rec = L.record(base)
            X = L.digits(base).reshape(k + 1, k)
            a = np.array(V.direction)
            for u in coef:
                Y = F.add[X, F.mul[a[:, None], u[None, :]]]
                inS = rank(F, np.vstack([rec.S.basis, u])) == rec.S.dim if rec.S.dim else not u.any()
                assert L.type_of(encode(Y, q)) == (n if inS else n + 1)


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (3, 1, 2), (2, 2, 3), (3, 2, 2)])
def test_verify_identity_small(q, k, N):
    rep = verify_identity(q, k, N)
    assert rep.identity_ok and rep.incidence_ok
    assert sum(rep.type_counts) + rep.untyped == q ** ((k + 1) * k)


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (2, 2, 3), (3, 2, 2)])
def test_delta_certificate(q, k, N):
    cert = certificate_delta(q, k, N)
    F = field_make(q)
    assert delta_identity_holds(F, k, N, cert.matrices(), cert.coeffs)
    bad = np.array(cert.coeffs).copy()
    bad[0] = (bad[0] + 1) % N
    assert not delta_identity_holds(F, k, N, cert.matrices(), bad)
    assert cert.to_json()["theta_counts"] == list(cert.theta_counts)
