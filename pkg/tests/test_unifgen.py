import numpy as np
import pytest

from clonoids.funcspace import FuncTable, ModuleSpec, delta, minor, random_table
from clonoids.linalg import (
    all_matrices,
    encode,
    enumerate_GL,
    enumerate_subspaces,
    inverse,
    left_action_codes,
    matmul,
    rank,
)
from clonoids.scalars import field_make
from clonoids.theta import certificate_delta, x0_matrix
from clonoids.unifgen import (
    Certificate,
    MinorOperator,
    arity_certificate,
    build_JH,
    build_Jn,
    build_level_certificate,
    combine_product,
    fixes_rank_le,
    is_identity_on,
    jh_contract_ok,
    lower_bound,
    op_add,
    op_apply,
    op_compose,
    op_scale,
    solve_certificate_direct,
)

F2, F3 = field_make(2), field_make(3)


def random_op(F, m, N, rng, terms=6, rank_le=None):
    mats = all_matrices(F, m, m)
    if rank_le is not None:
        mats = mats[[rank(F, M) <= rank_le for M in mats]]
    pick = rng.choice(len(mats), size=terms)
    return MinorOperator.from_matrices(F, N, mats[pick], rng.integers(0, N, size=terms))


@pytest.mark.parametrize("F,k,m", [(F2, 1, 2), (F2, 2, 2), (F3, 1, 2), (F3, 2, 2), (F2, 1, 3)])
def test_operator_calculus_laws(F, k, m):
    rng = np.random.default_rng(0)
    B = ModuleSpec((5,))
    for _ in range(10):
        I1, I2 = random_op(F, m, 5, rng), random_op(F, m, 5, rng)
        f, g = random_table(F, k, m, B, rng), random_table(F, k, m, B, rng)
        assert op_apply(op_compose(I2, I1), f) == op_apply(I2, op_apply(I1, f))
        assert op_apply(op_add(I1, I2), f) == op_apply(I1, f) + op_apply(I2, f)
        assert op_apply(op_scale(I1, 3), f) == op_apply(I1, f).scale(3)
        assert op_apply(I1, f + g) == op_apply(I1, f) + op_apply(I1, g)
        assert op_apply(MinorOperator.identity(F, m, 5), f) == f


@pytest.mark.parametrize("F", [F2, F3])
def test_rank_bound_soundness_of_composition(F):
    rng = np.random.default_rng(1)
    for r1 in range(3):
        for r2 in range(3):
            I1 = random_op(F, 2, 3, rng, rank_le=r1)
            I2 = random_op(F, 2, 3, rng, rank_le=r2)
            C = op_compose(I2, I1)
            assert C.rank_bound <= min(I1.rank_bound, I2.rank_bound)
            assert C.rank_sound()


def test_apply_matches_definition():
    rng = np.random.default_rng(2)
    B = ModuleSpec((3,))
    I = random_op(F2, 2, 3, rng)
    f = random_table(F2, 1, 2, B, rng)
    expect = FuncTable.zero(F2, 1, 2, B)
    for M, c in zip(I.matrices(), I.coeffs):
        expect = expect + minor(f, M).scale(int(c))
    assert op_apply(I, f) == expect


def fixes_delta_at(F, k, N, mats, coeffs, Y) -> bool:
    """Σ c [M X = Y] == [X = Y] for every X."""
    Xs = all_matrices(F, k + 1, k)
    y = encode(Y, F.q)
    hits = (left_action_codes(F, mats, Xs) == y).astype(np.int64)
    expect = np.zeros(len(Xs), dtype=np.int64)
    expect[y] = 1
    return np.array_equal(np.asarray(coeffs) @ hits % N, expect)


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (3, 1, 2), (2, 2, 3), (3, 2, 2)])
def test_delta_certificate_gl_equivariance(q, k, N):
    F = field_make(q)
    cert = certificate_delta(q, k, N)
    mats, coeffs = cert.matrices(), np.asarray(cert.coeffs)
    X0 = x0_matrix(k)
    for T in enumerate_GL(F, k):
        assert fixes_delta_at(F, k, N, mats, coeffs, matmul(F, X0, T))
    # conjugating by S in GL_{k+1} moves the fixed point to S X0
    GL = enumerate_GL(F, k + 1)
    for S in GL[:: max(1, len(GL) // 100)]:
        conj = matmul(F, matmul(F, S, mats), inverse(F, S))
        assert fixes_delta_at(F, k, N, conj, coeffs, matmul(F, S, X0))


def test_delta_certificate_applies_to_delta():
    F, k, N = F2, 2, 3
    cert = certificate_delta(2, k, N)
    op = MinorOperator.from_matrices(F, N, cert.matrices(), cert.coeffs)
    d = delta(F, k, ModuleSpec((N,)), x0_matrix(k))
    assert op_apply(op, d) == d


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (3, 1, 2), (2, 2, 3)])
def test_level_certificate(q, k, N):
    cert = build_level_certificate(q, k, N)
    assert cert.op.rank_bound == k and cert.op.rank_sound()
    assert cert.verify()
    rng = np.random.default_rng(3)
    f = random_table(field_make(q), k, k + 1, ModuleSpec((N,)), rng)
    assert op_apply(cert.op, f) == f


def test_level_certificate_k0():
    cert = build_level_certificate(2, 0, 3)
    assert len(cert.op) == 1 and cert.verify()


def test_arity_certificate_higher_arity():
    cert = arity_certificate(2, 1, 3, 3)
    assert cert.op.m == 3 and cert.op.rank_bound == 1
    assert is_identity_on(cert.op, 1)


def test_jh_contract():
    F = F2
    for H in enumerate_subspaces(F, 3, 2):
        assert jh_contract_ok(build_JH(F, 2, 3, H, 3), 2, H)
    for H in enumerate_subspaces(F, 3, 1):
        assert jh_contract_ok(build_JH(F, 1, 3, H, 3), 1, H)
    # J + J_k - J_k J is the level certificate
    J, Jn = arity_certificate(F, 1, 3, 3).op, build_Jn(F, 2, 3)
    level = op_add(op_add(J, Jn), op_scale(op_compose(Jn, J), -1))
    assert fixes_rank_le(level, 2, 2)


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (3, 1, 2), (2, 2, 3)])
def test_solver_agrees_with_construction(q, k, N):
    stats = []
    cert = solve_certificate_direct(q, k, N, k, stats=stats)
    assert cert is not None and cert.provenance == "solver"
    assert cert.verify()
    assert stats[0].unknowns > 0
    # the rank-<=k formula is unique, so both routes give the same operator
    assert cert.op == build_level_certificate(q, k, N).op


@pytest.mark.parametrize("q,k,N", [(2, 1, 3), (3, 1, 2), (2, 2, 3)])
def test_solver_infeasible_below_lower_bound(q, k, N):
    for n in range(lower_bound(q**k, q)):
        assert solve_certificate_direct(q, k, N, n) is None


def test_lower_bound():
    assert lower_bound(4, 2) == 2
    assert lower_bound(9, 3) == 2
    assert lower_bound(2, 2) == 1
    with pytest.raises(ValueError):
        lower_bound(1, 2)


def test_certificate_json_roundtrip_and_tamper():
    cert = build_level_certificate(2, 2, 3)
    back = Certificate.from_json(cert.to_json())
    assert back.op == cert.op and back.verify()
    obj = cert.to_json()
    obj["terms"][3]["coeff"] = (obj["terms"][3]["coeff"] + 1) % 3
    assert not Certificate.from_json(obj).verify()
    obj = cert.to_json()
    obj["rank_bound"] = 1
    assert not Certificate.from_json(obj).verify()


def test_product_certificate_small():
    c1 = build_level_certificate(2, 1, 5)
    c2 = build_level_certificate(3, 1, 5)
    P = combine_product(c1, c2)
    assert P.domain_size() == 36
    assert P.verify()
    P.coeffs[0] = (P.coeffs[0] + 1) % 5
    assert not P.verify()
