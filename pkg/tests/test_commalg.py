import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import E, crandn
from simtri.certify import InstanceRecipe, generate_instance
from simtri.commalg import (
    OperatorFamily,
    check_conditions,
    family_report,
    iterated_commutators,
    l_nilpotency_length,
    last_nonzero_witnesses,
)
from simtri.matcore import DimensionMismatch, commutator, fro, nilpotency_index

kinds = st.sampled_from(["shemesh_lr", "shemesh_ll", "normal_left_annihilate", "normal_pair", "jacobson", "putnam"])


def l_nilpotent(seed, dim=None, blocks=None):
    dim = dim or 2 + seed % 5
    return generate_instance(InstanceRecipe("l_nilpotent", dim, seed, blocks=blocks or min(dim, 2 + seed % 3)))


# ---------------------------------------------------------------------------
# families


def test_family_validation():
    with pytest.raises(ValueError):
        OperatorFamily([])
    with pytest.raises(DimensionMismatch):
        OperatorFamily([np.eye(2), np.eye(3)])
    F = OperatorFamily([np.eye(2), np.zeros((2, 2))])
    assert F.dim == 2 and len(F) == 2


# ---------------------------------------------------------------------------
# iterated commutators


def test_lengths_of_small_families():
    # commuting: [A, B] = 0
    assert l_nilpotency_length([np.diag([1, 2]), np.diag([3, 4])]) == 1
    # Heisenberg: [E12, E23] = E13 is central
    assert l_nilpotency_length([E(3, 0, 1), E(3, 1, 2)]) == 2
    # E12, E21 generate sl2: never vanishes
    layers = iterated_commutators([E(2, 0, 1), E(2, 1, 0)])
    assert layers.vanished_at is None and layers.cycled


def test_upper_triangular_strict_family_length():
    # strictly upper 4x4 matrix units: each bracket with E_{i,i+1} raises the level
    F = [E(4, 0, 1), E(4, 1, 2), E(4, 2, 3)]
    assert l_nilpotency_length(F) == 3


@given(st.integers(0, 10_000))
def test_witness_consistency(seed):
    F = l_nilpotent(seed)
    layers = iterated_commutators(F)
    norms = [fro(T) for T in F.members]
    for k in range(1, len(layers.layers)):
        for _, e in layers.nonzero(k):
            a, b = e.witness
            recomputed = commutator(layers.bases[k - 1][a], F[b] / norms[b])
            assert np.array_equal(recomputed, e.matrix)


@given(st.integers(0, 10_000))
def test_last_witnesses_are_central(seed):
    F = l_nilpotent(seed)
    layers = iterated_commutators(F)
    k = layers.vanished_at
    assert k is not None
    witnesses = last_nonzero_witnesses(F, layers)
    assert (k >= 2) == bool(witnesses)
    for A, B, C, scale in witnesses:
        assert np.array_equal(C, commutator(A, B))
        assert fro(C) > 1e-10 * scale
        for T in F.members:
            assert fro(commutator(T, C)) <= 1e-8 * fro(T) * scale


def test_layers_deduplicate():
    # a repeated member adds nothing to any layer
    A, B = E(3, 0, 1), E(3, 1, 2)
    single = iterated_commutators([A, B])
    double = iterated_commutators([A, B, B.copy(), 2 * A])
    assert [len(x) for x in single.bases] == [len(x) for x in double.bases]


def test_max_depth_limit():
    layers = iterated_commutators([E(4, 0, 1), E(4, 1, 2), E(4, 2, 3)], max_depth=2)
    assert layers.vanished_at is None
    with pytest.raises(ValueError):
        iterated_commutators([np.eye(2)], max_depth=0)


def test_contracting_commutators_are_not_vanishing():
    # layers that shrink geometrically still span nonzero spaces
    rng = np.random.default_rng(3)
    A = np.diag([1.0, 0.5, 0.25, 0.125]).astype(complex)
    B = crandn(rng, 4, 4)
    assert l_nilpotency_length([0.01 * A, B]) is None


@given(st.integers(0, 1000))
def test_violated_instances_rejected(seed):
    F = generate_instance(InstanceRecipe("l_nilpotent", 2 + seed % 6, seed, violate=True))
    assert l_nilpotency_length(F) is None


# ---------------------------------------------------------------------------
# pair conditions


def test_golden_pair_conditions():
    A = np.array([[1, 0], [0, 0]], dtype=complex)
    B = np.array([[0, 0], [1, 0]], dtype=complex)
    rep = check_conditions(A, B)
    assert rep.shemesh_left_right and not rep.commuting
    # [A, B] = -E21 and E21 E21 = 0, so B[A, B] vanishes as well
    assert rep.shemesh_left_left
    assert rep.residual_norms["A[A,B]"] == 0 and rep.residual_norms["[A,B]B"] == 0
    assert rep.normal_flags == [True, False]
    assert rep.l_nilpotent_length is None
    assert rep.recheck()["shemesh_left_right"]


@given(kinds, st.integers(0, 10_000))
def test_recheck_agrees(kind, seed):
    F = generate_instance(InstanceRecipe(kind, 2 + seed % 5, seed))
    rep = check_conditions(F[0], F[1])
    again = rep.recheck()
    assert again["commuting"] == rep.commuting
    assert again["shemesh_left_right"] == rep.shemesh_left_right
    assert again["shemesh_left_left"] == rep.shemesh_left_left
    assert again["self_commuting_commutator"] == rep.self_commuting_commutator
    assert rep.product_form_agrees


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_shemesh_power_identity(seed, power):
    # A, B commute with AB, so (AB)^n = A^n B^n
    F = generate_instance(InstanceRecipe("shemesh_lr", 2 + seed % 5, seed))
    A, B = F.members
    assert check_conditions(A, B).shemesh_left_right
    lhs = np.linalg.matrix_power(A @ B, power)
    rhs = np.linalg.matrix_power(A, power) @ np.linalg.matrix_power(B, power)
    assert fro(lhs - rhs) <= 1e-8 * (fro(A) * fro(B)) ** power


@given(st.integers(0, 10_000))
def test_self_commuting_commutator_is_nilpotent(seed):
    n = 2 + seed % 5
    F = generate_instance(InstanceRecipe("jacobson", n, seed))
    A, B = F.members
    assert check_conditions(A, B).residual_norms["[A,[A,B]]"] <= 1e-10
    k = nilpotency_index(commutator(A, B), scale=fro(A) * fro(B))
    assert k is not None and k <= n


@given(st.integers(0, 10_000))
def test_diagonalizable_self_commuting_commutes(seed):
    F = generate_instance(InstanceRecipe("putnam", 2 + seed % 5, seed))
    A, B = F.members
    assert fro(commutator(A, B)) <= 1e-8 * fro(A) * fro(B)


def test_family_report_pairs():
    rep = family_report([E(3, 0, 1), E(3, 1, 2), np.eye(3)])
    assert rep.l_nilpotent_length == 2
    assert len(rep.pairs) == 3
    assert rep.normal_flags == [False, False, True]
