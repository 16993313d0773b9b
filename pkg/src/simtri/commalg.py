"""Iterated commutators of a family and the commutation predicates.

The predicates are the hypotheses of the triangularization procedures in
:mod:`simtri.trieng`; every boolean is stored next to the normalized
residual that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .matcore import (
    DEFAULT_TOL,
    DimensionMismatch,
    InconsistencyError,
    ToleranceContext,
    as_matrix,
    commutator,
    fro,
    relative,
)


class OperatorFamily:
    """Finite ordered list of same-size complex matrices.

    >>> F = OperatorFamily([np.eye(2), np.zeros((2, 2))], labels=["I", "Z"])
    >>> F.dim, len(F)
    (2, 2)
    """

    def __init__(self, members, labels=None):
        members = [as_matrix(M) for M in members]
        if not members:
            raise ValueError("a family needs at least one member")
        n = members[0].shape[0]
        for i, M in enumerate(members):
            if M.shape != (n, n):
                raise DimensionMismatch(f"member {i} has shape {M.shape}, expected {(n, n)}")
            M.setflags(write=False)
        if labels is None:
            labels = [f"M{i}" for i in range(len(members))]
        labels = [str(x) for x in labels]
        if len(labels) != len(members):
            raise ValueError("one label per member required")
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be unique, got {labels}")
        self.members = tuple(members)
        self.labels = tuple(labels)

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __repr__(self):
        return f"OperatorFamily(dim={self.dim}, labels={list(self.labels)})"

    def compress(self, Q: np.ndarray) -> "OperatorFamily":
        """Family of compressions ``Q* T Q`` for an orthonormal column basis ``Q``."""
        Qh = Q.conj().T
        return OperatorFamily([Qh @ T @ Q for T in self.members], self.labels)

    def adjoint(self) -> "OperatorFamily":
        return OperatorFamily([T.conj().T for T in self.members], [f"{x}*" for x in self.labels])

    def similar(self, S: np.ndarray) -> "OperatorFamily":
        """``S^-1 T S`` for every member."""
        return OperatorFamily([np.linalg.solve(S, T @ S) for T in self.members], self.labels)


def as_family(F) -> OperatorFamily:
    return F if isinstance(F, OperatorFamily) else OperatorFamily(F)


@dataclass
class LayerElement:
    matrix: np.ndarray
    witness: tuple | None  # (index into the previous layer's basis, index into F)
    scale: float  # product of the norms of the operands
    is_zero: bool


@dataclass
class CommutatorLayers:
    """``layers[0]`` is the family; ``layers[k]`` holds commutators spanning ``F^[k]``.

    ``bases[k]`` is a Frobenius-orthonormal basis of ``span F^[k]``. Each
    element of layer ``k >= 1`` is ``[bases[k-1][a], F[b] / |F[b]|]`` for its
    witness ``(a, b)``; the elements are the columns picked by a pivoted QR,
    so they span the same space as the basis.
    """

    layers: list
    vanished_at: int | None  # least k >= 1 with F^[k] = {0}
    cycled: bool = False  # a layer's span repeated an earlier one: never vanishes
    bases: list = field(default_factory=list)

    def matrices(self, k: int) -> list:
        return [e.matrix for e in self.layers[k]]

    def nonzero(self, k: int) -> list:
        return [(i, e) for i, e in enumerate(self.layers[k]) if not e.is_zero]


def _span(mats: list, n: int, threshold: float):
    """Orthonormal basis (as matrices) of the span, pivot order, smallest kept singular value."""
    if not mats:
        return [], [], 0.0
    M = np.column_stack([X.reshape(-1) for X in mats])
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(sv > threshold))
    if r == 0:
        return [], [], 0.0
    _, _, piv = scipy.linalg.qr(M, mode="economic", pivoting=True)
    return [U[:, i].reshape(n, n) for i in range(r)], list(piv[:r]), float(sv[r - 1])


def iterated_commutators(
    F, max_depth: int | None = None, tol: ToleranceContext = DEFAULT_TOL, scales=None, slack: float = 0.0
) -> CommutatorLayers:
    """Compute ``F^[1], F^[2], ...`` until a layer vanishes or ``max_depth``.

    Each layer is tracked through an orthonormal basis of its span: the next
    layer is spanned by ``[q, B / |B|]`` for basis elements ``q`` and members
    ``B``, and it vanishes when all of these are at most ``zero_tol``.
    Because ``q`` has unit norm this measures the commutator maps
    themselves, so a family whose commutators merely shrink from layer to
    layer is not mistaken for one whose commutators vanish. ``scales``
    overrides the member norms (used when ``F`` is a compression of a larger
    family and zero decisions must stay relative to the original). ``slack``
    is a known relative error in the members, such as the invariance
    residual of the subspaces they were compressed to. The cutoff is
    ``(zero_tol + 4 * slack) / s``, where ``s <= 1`` is the smallest singular
    value of the normalized members: a unit element of their span has
    coefficients up to ``1 / s``, which scale any error in the members.
    """
    F = as_family(F)
    n = F.dim
    if max_depth is None:
        max_depth = n * n + 1
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    norms = [fro(T) for T in F.members] if scales is None else [float(x) for x in scales]
    t = tol.zero_tol
    layer0 = [LayerElement(T, None, s, fro(T) <= t * s) for T, s in zip(F.members, norms)]
    gens = [(b, T / s) for b, (T, s) in enumerate(zip(F.members, norms)) if s > 0]
    basis, _, smin = _span([G for _, G in gens], n, t)
    cut = (t + 4 * slack) / min(1.0, smin) if smin > 0 else t
    layers, bases = [layer0], [basis]
    seen = []
    for k in range(1, max_depth + 1):
        witnesses = [(a, b) for a in range(len(basis)) for b, _ in gens]
        prods = [commutator(basis[a], G) for a in range(len(basis)) for _, G in gens]
        basis, piv, _ = _span(prods, n, cut)
        if not basis:
            layers.append([LayerElement(np.zeros((n, n), dtype=complex), None, 1.0, True)])
            bases.append([])
            return CommutatorLayers(layers, k, False, bases)
        layers.append([LayerElement(prods[i], witnesses[i], 1.0, False) for i in piv])
        bases.append(basis)
        Q = np.column_stack([X.reshape(-1) for X in basis])
        P = Q @ Q.conj().T
        if any(np.linalg.norm(P - P_old, 2) <= 1e-6 for P_old in seen):
            return CommutatorLayers(layers, None, True, bases)
        seen.append(P)
    return CommutatorLayers(layers, None, False, bases)


def l_nilpotency_length(
    F, max_depth: int | None = None, tol: ToleranceContext = DEFAULT_TOL, scales=None
) -> int | None:
    """Least ``k`` with ``F^[k] = {0}``; ``1`` exactly when the family commutes."""
    return iterated_commutators(F, max_depth, tol, scales).vanished_at


def commutator_sets(F, depth: int, tol: ToleranceContext = DEFAULT_TOL, scales=None) -> list:
    """Full sets ``F^[0..depth]`` as lists of ``(matrix, scale)``.

    Unlike :func:`iterated_commutators` nothing is dropped except zero
    elements and exact repeats (equal within ``zero_tol`` of their scale), so
    sums over the sets match their definition.
    """
    F = as_family(F)
    norms = [fro(T) for T in F.members] if scales is None else [float(x) for x in scales]
    sets = [[(T, s) for T, s in zip(F.members, norms)]]
    for _ in range(depth):
        nxt = []
        for X, sx in sets[-1]:
            if fro(X) <= tol.zero_tol * sx:
                continue
            for B, sb in zip(F.members, norms):
                C = commutator(X, B)
                sc = sx * sb
                if fro(C) <= tol.zero_tol * sc:
                    continue
                if any(fro(C - D) <= tol.zero_tol * sc for D, _ in nxt):
                    continue
                nxt.append((C, sc))
        sets.append(nxt)
    return sets


def last_nonzero_witnesses(F, layers: CommutatorLayers, tol: ToleranceContext = DEFAULT_TOL, scales=None) -> list:
    """Tuples ``(A, B, [A, B], scale)`` with ``A`` in ``F^[k-2]``, ``B`` in ``F`` and ``[A, B] != 0``.

    ``k`` is the L-nilpotency length found in ``layers`` and ``scale`` is
    the product of the operand norms behind ``[A, B]``. Every such
    commutator commutes with the whole family.
    """
    F = as_family(F)
    k = layers.vanished_at
    if k is None or k < 2:
        return []
    norms = [fro(T) for T in F.members] if scales is None else [float(x) for x in scales]
    out = []
    for X, sx in commutator_sets(F, k - 2, tol, norms)[k - 2]:
        for B, sb in zip(F.members, norms):
            C = commutator(X, B)
            if fro(C) > tol.zero_tol * sx * sb:
                out.append((X, B, C, sx * sb))
    return out


@dataclass
class ConditionReport:
    """Predicates on a pair ``(A, B)`` and the residuals behind them.

    Residuals are Frobenius norms divided by the product of the operand
    norms, e.g. ``|A[A,B]| / (|A|^2 |B|)``.
    """

    l_nilpotent_length: int | None
    commuting: bool
    shemesh_left_right: bool
    shemesh_left_left: bool
    self_commuting_commutator: bool
    normal_flags: list
    residual_norms: dict
    threshold: float
    product_form_agrees: bool = True

    def recheck(self, threshold: float | None = None) -> dict:
        """Recompute every boolean from the stored residuals."""
        t = self.threshold if threshold is None else threshold
        r = self.residual_norms
        return {
            "commuting": r["[A,B]"] <= t,
            "shemesh_left_right": r["A[A,B]"] <= t and r["[A,B]B"] <= t,
            "shemesh_left_left": r["A[A,B]"] <= t and r["B[A,B]"] <= t,
            "self_commuting_commutator": r["[A,[A,B]]"] <= t and r["[B,[A,B]]"] <= t,
            "normal_flags": [r["normal_A"] <= t, r["normal_B"] <= t],
        }

    def as_dict(self) -> dict:
        return {
            "l_nilpotent_length": self.l_nilpotent_length,
            "commuting": self.commuting,
            "shemesh_left_right": self.shemesh_left_right,
            "shemesh_left_left": self.shemesh_left_left,
            "self_commuting_commutator": self.self_commuting_commutator,
            "normal_flags": list(self.normal_flags),
            "residual_norms": dict(self.residual_norms),
            "threshold": self.threshold,
            "product_form_agrees": self.product_form_agrees,
        }


def check_conditions(A, B, tol: ToleranceContext = DEFAULT_TOL, max_depth: int | None = None) -> ConditionReport:
    """Evaluate every hypothesis used by the pair procedures."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"pair of shapes {A.shape} and {B.shape}")
    a, b = fro(A), fro(B)
    C = commutator(A, B)
    AB = A @ B
    res = {
        "[A,B]": relative(fro(C), a, b),
        "A[A,B]": relative(fro(A @ C), a, a, b),
        "[A,B]B": relative(fro(C @ B), a, b, b),
        "B[A,B]": relative(fro(B @ C), a, b, b),
        "[A,AB]": relative(fro(commutator(A, AB)), a, a, b),
        "[B,AB]": relative(fro(commutator(B, AB)), a, b, b),
        "[A,[A,B]]": relative(fro(commutator(A, C)), a, a, b),
        "[B,[A,B]]": relative(fro(commutator(B, C)), a, b, b),
        "normal_A": relative(fro(A @ A.conj().T - A.conj().T @ A), a, a),
        "normal_B": relative(fro(B @ B.conj().T - B.conj().T @ B), b, b),
    }
    t = tol.zero_tol
    lr = res["A[A,B]"] <= t and res["[A,B]B"] <= t
    # A[A,B] = [A,AB] and [A,B]B = [AB,B] identically
    lr_product = res["[A,AB]"] <= t and res["[B,AB]"] <= t
    agrees = lr == lr_product
    if not agrees:
        gap = max(abs(res["A[A,B]"] - res["[A,AB]"]), abs(res["[A,B]B"] - res["[B,AB]"]))
        if gap > 1e3 * np.finfo(float).eps:
            raise InconsistencyError(
                f"A[A,B]=[A,B]B=0 and [A,AB]=[B,AB]=0 disagree beyond roundoff (gap {gap:.3e})"
            )
    report = ConditionReport(
        l_nilpotent_length=l_nilpotency_length([A, B], max_depth, tol),
        commuting=res["[A,B]"] <= t,
        shemesh_left_right=lr,
        shemesh_left_left=res["A[A,B]"] <= t and res["B[A,B]"] <= t,
        self_commuting_commutator=res["[A,[A,B]]"] <= t and res["[B,[A,B]]"] <= t,
        normal_flags=[res["normal_A"] <= t, res["normal_B"] <= t],
        residual_norms=res,
        threshold=t,
        product_form_agrees=agrees,
    )
    return report


@dataclass
class FamilyReport:
    """Family-level summary used by the command line front end."""

    l_nilpotent_length: int | None
    normal_flags: list
    pairs: dict = field(default_factory=dict)  # "i,j" -> ConditionReport

    def as_dict(self) -> dict:
        return {
            "l_nilpotent_length": self.l_nilpotent_length,
            "normal_flags": list(self.normal_flags),
            "pairs": {k: v.as_dict() for k, v in self.pairs.items()},
        }


def family_report(F, tol: ToleranceContext = DEFAULT_TOL, max_depth: int | None = None) -> FamilyReport:
    F = as_family(F)
    t = tol.zero_tol
    normal = []
    for T in F.members:
        nt = fro(T)
        normal.append(relative(fro(T @ T.conj().T - T.conj().T @ T), nt, nt) <= t)
    pairs = {}
    for i in range(len(F)):
        for j in range(i + 1, len(F)):
            pairs[f"{F.labels[i]},{F.labels[j]}"] = check_conditions(F[i], F[j], tol, max_depth)
    return FamilyReport(l_nilpotency_length(F, max_depth, tol), normal, pairs)
