import copy

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import E, crandn
from simtri.algstruct import generate_algebra, jacobson_radical
from simtri.certify import (
    KINDS,
    ConstructionFailure,
    InstanceRecipe,
    burnside_reducibility_oracle,
    direct_sum,
    generate_instance,
    predicate_holds,
    target_residual,
    verify_certificate,
)
from simtri.commalg import OperatorFamily
from simtri.matcore import DEFAULT_TOL, fro
from simtri.trieng import (
    InvariantChain,
    PreconditionError,
    TriangularizationCertificate,
    analyze_normal_pair,
    scalar_diagonal_decomposition,
    triangularize,
    triangularize_shemesh,
)

GOLDEN_A = np.array([[1, 0], [0, 0]], dtype=complex)
GOLDEN_B = np.array([[0, 0], [1, 0]], dtype=complex)
PAIR_KINDS = ["shemesh_lr", "shemesh_ll", "normal_left_annihilate", "normal_pair", "jacobson", "putnam"]


def hand_certificate(P, members):
    forms = [np.linalg.solve(P, T @ P) for T in members]
    res = max(fro(np.tril(R, -1)) / max(fro(T), 1e-300) for R, T in zip(forms, members))
    return TriangularizationCertificate(P, forms, res, InvariantChain.from_basis(P), 1e-8, "hand")


def failed_names(report):
    return {c.name.split("[")[0] for c in report.failed()}


# ---------------------------------------------------------------------------
# verification


def test_golden_pair_certificate_verifies():
    cert = triangularize_shemesh(GOLDEN_A, GOLDEN_B)
    rep = verify_certificate(cert, [GOLDEN_A, GOLDEN_B])
    assert rep.overall and rep.worst() <= 1e-12


def test_identity_basis_on_nontriangular_family_fails():
    cert = hand_certificate(np.eye(2, dtype=complex), [GOLDEN_A, GOLDEN_B])
    rep = verify_certificate(cert, [GOLDEN_A, GOLDEN_B])
    assert not rep.overall
    # B = E21 is strictly lower, so triangularity and invariance of e1 both fail
    assert {"triangular", "invariance"} <= failed_names(rep)


def test_hand_chain_3x3():
    # e1 and span{e1, e2} are invariant for upper triangular members
    F = [np.triu(np.arange(1, 10).reshape(3, 3)).astype(complex), E(3, 0, 2)]
    rep = verify_certificate(hand_certificate(np.eye(3, dtype=complex), F), F)
    assert rep.overall
    # reversing the basis breaks the chain
    R = np.eye(3, dtype=complex)[:, ::-1]
    assert not verify_certificate(hand_certificate(R, F), F).overall


def test_commutator_diagonal_is_checked():
    # any triangularizing basis makes [A,B] strictly upper
    cert = triangularize_shemesh(GOLDEN_A, GOLDEN_B)
    rep = verify_certificate(cert, [GOLDEN_A, GOLDEN_B])
    assert any(c.name.startswith("commutator_diagonal") and c.passed for c in rep.checks)


def tamper(cert, how, rng):
    c = copy.deepcopy(cert)
    n = c.basis_change.shape[0]
    if how == "basis":
        c.basis_change = c.basis_change + 1e-3 * crandn(rng, n, n)
    elif how == "form":
        c.triangular_forms[0] = c.triangular_forms[0] + 1e-3 * np.ones((n, n))
    elif how == "chain":
        c.chain = InvariantChain.from_basis(c.basis_change[:, ::-1].copy())
    elif how == "singular":
        c.basis_change = np.zeros((n, n), dtype=complex)
    return c


@pytest.mark.parametrize("how", ["basis", "form", "chain", "singular"])
def test_tampering_detected(how):
    F = generate_instance(InstanceRecipe("l_nilpotent", 4, 3, blocks=2))
    _, cert = triangularize(F)
    assert verify_certificate(cert, F).overall
    bad = tamper(cert, how, np.random.default_rng(0))
    assert not verify_certificate(bad, F).overall


def test_sdf_and_normal_and_algebra_verify():
    F = generate_instance(InstanceRecipe("l_nilpotent", 5, 2, blocks=3))
    sdf = scalar_diagonal_decomposition(F)
    assert verify_certificate(sdf, F).overall
    bad = copy.deepcopy(sdf)
    bad.diagonal_scalars[0][0] += 1e-3
    assert not verify_certificate(bad, F).overall

    G = generate_instance(InstanceRecipe("normal_left_annihilate", 3, 1))
    ana = analyze_normal_pair(*G.members)
    assert verify_certificate(ana, G).overall

    alg = jacobson_radical(generate_algebra(F))
    assert verify_certificate(alg, F).overall
    alg.radical_exponent = alg.radical_exponent + 1
    assert not verify_certificate(alg, F).overall


def test_verification_is_deterministic():
    F = generate_instance(InstanceRecipe("commuting", 4, 1))
    _, cert = triangularize(F)
    a, b = verify_certificate(cert, F), verify_certificate(cert, F)
    assert a.as_dict() == b.as_dict()


def test_wrong_type_reported():
    with pytest.raises(TypeError):
        verify_certificate(object(), [np.eye(2)])


# ---------------------------------------------------------------------------
# Burnside oracle


def test_oracle_examples():
    irr = burnside_reducibility_oracle([E(2, 0, 1), E(2, 1, 0)])
    assert not irr and irr.algebra_dim == 4
    single = burnside_reducibility_oracle([np.diag([1.0, 2.0])])
    assert single and single.invariance_residual <= 1e-12
    pair = burnside_reducibility_oracle([GOLDEN_A, GOLDEN_B])
    # span{e2} is the only invariant line: A e2 = 0, B e2 = 0
    assert pair and pair.algebra_dim == 3
    v = pair.witness.vectors[:, 0]
    assert abs(abs(v[1]) - 1) < 1e-10


@given(st.integers(0, 10_000))
def test_oracle_generic_is_irreducible(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 4
    res = burnside_reducibility_oracle([crandn(rng, n, n), crandn(rng, n, n)])
    assert not res and res.algebra_dim == n * n


@given(st.integers(0, 10_000))
def test_oracle_block_triangular_is_reducible(seed):
    rng = np.random.default_rng(seed)
    n = 3 + seed % 3
    k = 1 + seed % (n - 1)
    S = np.eye(n) + 0.3 * crandn(rng, n, n) / n
    mats = []
    for _ in range(2):
        M = crandn(rng, n, n)
        M[k:, :k] = 0
        mats.append(S @ M @ np.linalg.inv(S))
    res = burnside_reducibility_oracle(mats)
    assert res and res.invariance_residual <= DEFAULT_TOL.certify_tol


def test_oracle_dim_cap():
    with pytest.raises(ValueError):
        burnside_reducibility_oracle([np.eye(7)])


# ---------------------------------------------------------------------------
# generators


@given(st.sampled_from(KINDS), st.integers(0, 10_000), st.integers(2, 7))
def test_generator_soundness(kind, seed, dim):
    F = generate_instance(InstanceRecipe(kind, dim, seed))
    assert F.dim == dim
    assert target_residual(kind, F) <= DEFAULT_TOL.zero_tol / 10


@given(st.sampled_from(KINDS), st.integers(0, 10_000))
def test_generator_deterministic(kind, seed):
    a = generate_instance(InstanceRecipe(kind, 4, seed))
    b = generate_instance(InstanceRecipe(kind, 4, seed))
    assert all(np.array_equal(x, y) for x, y in zip(a.members, b.members))
    c = generate_instance(InstanceRecipe(kind, 4, seed + 1))
    assert not all(np.array_equal(x, y) for x, y in zip(a.members, c.members))


@given(st.sampled_from(PAIR_KINDS), st.integers(0, 10_000), st.integers(2, 6))
def test_violated_instances_break_predicate(kind, seed, dim):
    F = generate_instance(InstanceRecipe(kind, dim, seed, violate=True))
    assert not predicate_holds(kind, F)


def test_generator_examples():
    F = generate_instance(InstanceRecipe("commuting", 4, 1))
    assert len(F) >= 2 and F.dim == 4
    G = generate_instance(InstanceRecipe("normal_left_annihilate", 3, 0))
    assert predicate_holds("normal_left_annihilate", G)
    assert verify_certificate(triangularize(G, mode="normal")[1], G).overall


def test_generator_rejects_bad_recipes():
    with pytest.raises(ValueError):
        generate_instance(InstanceRecipe("nonsense", 3))
    with pytest.raises(ValueError):
        generate_instance(InstanceRecipe("commuting", 1))


def test_construction_failure_is_raised():
    # an impossible headroom exhausts the retries
    tol = DEFAULT_TOL.replace(zero_tol=0.0)
    with pytest.raises(ConstructionFailure):
        generate_instance(InstanceRecipe("jacobson", 5, 0), tol, retries=1)


def test_violated_pair_refused():
    F = generate_instance(InstanceRecipe("shemesh_lr", 4, 1, violate=True))
    with pytest.raises(PreconditionError):
        triangularize(F, mode="shemesh")
    assert isinstance(F, OperatorFamily)


def test_golden_pair_plus_scalar_block():
    # appending a 1x1 block [5] to both members keeps A[A,B] = [A,B]B = 0
    A = direct_sum(GOLDEN_A, np.array([[5.0]]))
    B = direct_sum(GOLDEN_B, np.array([[5.0]]))
    assert predicate_holds("shemesh_lr", [A, B])
    assert burnside_reducibility_oracle([A, B]).reducible
    assert verify_certificate(triangularize_shemesh(A, B), [A, B]).overall
