"""Constructive simultaneous triangularization.

Each procedure finds one common invariant subspace ``V1`` by the rule its
hypothesis allows, then recurses on the restriction to ``V1`` and the
compression to the orthogonal complement ``V1^perp``. Because every split
uses an orthonormal basis, the final change of basis is unitary.

Zero and scalar decisions inside the recursion are measured against the
norms of the *original* members, so a compression that is exactly zero in
exact arithmetic is not mistaken for structure when it arrives as roundoff.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .commalg import (
    OperatorFamily,
    as_family,
    commutator_sets,
    iterated_commutators,
    last_nonzero_witnesses,
)
from .matcore import (
    DEFAULT_TOL,
    InconsistencyError,
    NumericalWarning,
    SubspaceBasis,
    ToleranceContext,
    as_matrix,
    commutator,
    eigen_decomposition,
    eigen_index,
    fro,
    generalized_eigenspace,
    is_normal,
    kernel,
    minimal_polynomial,
    nilpotency_index,
    orthogonal_complement,
    range_space,
    relative,
)


class PreconditionError(ValueError):
    """The input does not satisfy the hypothesis of the requested procedure."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class NumericalFailure(RuntimeError):
    """A split that must exist in exact arithmetic could not be made numerically."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


@dataclass
class InvariantChain:
    ambient_dim: int
    subspaces: list  # SubspaceBasis, strictly increasing dimensions

    @property
    def dims(self) -> list:
        return [S.dim for S in self.subspaces]

    @property
    def maximal(self) -> bool:
        return self.dims == list(range(1, self.ambient_dim))

    @classmethod
    def from_basis(cls, P: np.ndarray, tol: ToleranceContext = DEFAULT_TOL, dims=None) -> "InvariantChain":
        n = P.shape[0]
        dims = range(1, n) if dims is None else dims
        subspaces = []
        for k in dims:
            Q, _ = np.linalg.qr(P[:, :k])
            subspaces.append(SubspaceBasis(Q, tol))
        return cls(n, subspaces)


@dataclass
class TriangularizationCertificate:
    """Change of basis ``P`` putting every member in upper triangular form.

    ``triangular_forms[i] = P^-1 members[i] P``; ``residual`` is the largest
    relative Frobenius norm of a strictly lower part.
    """

    basis_change: np.ndarray
    triangular_forms: list
    residual: float
    chain: InvariantChain
    tolerance: float
    producer: str = ""
    routes: list = field(default_factory=list)
    condition: float = 1.0
    labels: tuple = ()

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass
class ScalarDiagonalForm:
    """Block upper triangular form with scalar diagonal blocks.

    In the new basis member ``j`` equals ``sum_i diagonal_scalars[j][i] P_i + N_j``
    where ``P_i`` is the coordinate projection on block ``i`` and ``N_j`` is
    strictly block upper triangular.
    """

    block_dims: list
    basis_change: np.ndarray
    diagonal_scalars: list  # [member][block]
    nilpotent_parts: list
    projectors: list
    block_residual: float
    tolerance: float
    routes: list = field(default_factory=list)
    metrics: list = field(default_factory=list)  # RecursionMetrics per split, with children
    labels: tuple = ()

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    def block_slices(self) -> list:
        edges = np.cumsum([0] + list(self.block_dims))
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass
class RecursionMetrics:
    s_value: int  # sum of minimal polynomial degrees
    c_value: tuple  # (k, sum of nilpotency indices), (1, 1) for commuting families

    def as_dict(self) -> dict:
        return {"s_value": self.s_value, "c_value": list(self.c_value)}


@dataclass
class Diagonalization:
    unitary: np.ndarray
    eigenvalues_A: np.ndarray
    eigenvalues_B: np.ndarray
    offdiag_residual: float  # max relative off-diagonal norm of U* A U, U* B U


@dataclass
class NormalPairAnalysis:
    """Block analysis of a pair with a normal member annihilating the commutator."""

    splitting: tuple  # (ker A, (ker A)^perp) as SubspaceBasis
    blocks: dict
    residuals: dict
    commutator_square_residual: float
    certificate: TriangularizationCertificate
    injective: bool
    diagonalization: Diagonalization | None = None
    dual: bool = False
    tolerance: float = 1e-8


# ---------------------------------------------------------------------------
# the split/compress engine


@dataclass
class _Node:
    members: list
    scales: list
    tol: ToleranceContext
    slack: float = 0.0  # accumulated invariance residual of the compressions


def _scalar_dev(T: np.ndarray, scale: float) -> float:
    d = T.shape[0]
    return relative(fro(T - np.trace(T) / d * np.eye(d)), scale)


def _all_scalar(node: _Node) -> bool:
    return all(_scalar_dev(T, s) <= node.tol.zero_tol for T, s in zip(node.members, node.scales))


def _invariance_residual(members, scales, Q) -> float:
    P = Q @ Q.conj().T
    I = np.eye(Q.shape[0])
    worst = 0.0
    for T, s in zip(members, scales):
        worst = max(worst, relative(fro((I - P) @ T @ Q), s))
    return worst


def _split(node: _Node, Q1: np.ndarray, route: str) -> tuple:
    d = node.members[0].shape[0]
    k = Q1.shape[1]
    if not 0 < k < d:
        raise NumericalFailure(
            f"route {route!r} produced a trivial subspace (dimension {k} of {d})",
            {"route": route, "dim": k, "ambient": d},
        )
    res = _invariance_residual(node.members, node.scales, Q1)
    if res > node.tol.certify_tol:
        raise NumericalFailure(
            f"route {route!r}: subspace not invariant within tolerance (residual {res:.3e})",
            {"route": route, "invariance_residual": res},
        )
    return Q1, orthogonal_complement(Q1), res


def _compress(node: _Node, Q: np.ndarray, residual: float = 0.0) -> _Node:
    """Compression to ``Q``; ``residual`` is the invariance residual of the split that produced it."""
    Qh = Q.conj().T
    return _Node([Qh @ T @ Q for T in node.members], node.scales, node.tol, node.slack + residual)


def _run(node: _Node, splitter, routes: list) -> np.ndarray:
    """Unitary ``U`` with every ``U* T U`` upper triangular."""
    d = node.members[0].shape[0]
    if d == 1:
        return np.eye(1, dtype=complex)
    if all(fro(np.tril(T, -1)) <= node.tol.zero_tol * s for T, s in zip(node.members, node.scales)):
        # the coordinate flag is already invariant
        routes.append("already_triangular")
        return np.eye(d, dtype=complex)
    Q1, route = splitter(node)
    if Q1 is None:
        routes.append(route)
        return np.eye(d, dtype=complex)
    Q1, Q2, res = _split(node, Q1, route)
    routes.append(route)
    U1 = _run(_compress(node, Q1, res), splitter, routes)
    U2 = _run(_compress(node, Q2, res), splitter, routes)
    return np.hstack([Q1 @ U1, Q2 @ U2])


def _separated_eigenvalue(A: np.ndarray, scale: float, tol: ToleranceContext):
    """The eigenvalue farthest from the rest of the spectrum, with that distance over ``scale``.

    Any eigenvalue gives an invariant subspace; the widest gap makes it the
    least sensitive to perturbations of the other members.
    """
    eigs = eigen_decomposition(A, tol, scale)
    if len(eigs) == 1:
        return eigs[0][0], 0.0
    lams = [lam for lam, _ in eigs]
    gaps = [min(abs(lam - mu) for mu in lams if mu is not lam) for lam in lams]
    i = int(np.argmax(gaps))
    return lams[i], gaps[i] / scale


def _eigenspace_of(A: np.ndarray, scale: float, tol: ToleranceContext) -> np.ndarray:
    lam, _ = _separated_eigenvalue(A, scale, tol)
    return generalized_eigenspace(A, lam, 1, tol, scale, tol.zero_tol).vectors


def _best_member(node: _Node):
    """Nonscalar member and eigenvalue with the widest relative gap, or ``None`` if all are scalar."""
    best = None
    for T, s in zip(node.members, node.scales):
        if _scalar_dev(T, s) <= node.tol.zero_tol:
            continue
        lam, gap = _separated_eigenvalue(T, s, node.tol)
        if best is None or gap > best[3]:
            best = (T, s, lam, gap)
    return best


def _commuting_split(node: _Node):
    """Eigenspace of a nonscalar member, choosing the best separated eigenvalue."""
    best = _best_member(node)
    if best is None:
        return None, "all_scalar"
    A, s, lam, _ = best
    return generalized_eigenspace(A, lam, 1, node.tol, s, node.tol.zero_tol).vectors, "commuting_eigenspace"


def _witness(node: _Node, layers) -> tuple:
    """``[A, B]`` with ``A`` in ``F^[k-2]``, ``B`` in ``F``, largest relative to its operands.

    Falls back to the last nonvanishing layer's span when every set element
    is below the zero threshold (their span can still be nonzero).
    """
    found = last_nonzero_witnesses(node.members, layers, node.tol, node.scales)
    if found:
        _, _, C, sc = max(found, key=lambda w: fro(w[2]) / w[3])
        return C, sc
    k = layers.vanished_at
    best = max(layers.nonzero(k - 1), key=lambda ie: fro(ie[1].matrix) / ie[1].scale)[1]
    return best.matrix, best.scale


def _layers(node: _Node):
    return iterated_commutators(node.members, None, node.tol, node.scales, node.slack)


def _l_nilpotent_split(node: _Node):
    if _all_scalar(node):
        return None, "all_scalar"
    layers = _layers(node)
    k = layers.vanished_at
    if k is None:
        raise NumericalFailure("compressed family is not L-nilpotent within tolerance", {"route": "kernel"})
    if k == 1:
        return _commuting_split(node)
    C, sc = _witness(node, layers)
    return kernel(C, node.tol, sc, node.tol.zero_tol).vectors, "commutator_kernel"


def find_common_invariant_subspace(F, tol: ToleranceContext = DEFAULT_TOL):
    """One nontrivial subspace invariant under every member, or ``None``.

    Returns ``(basis_or_None, strategy)``. Strategies, in order: all members
    scalar (``None``); commuting family, an eigenspace of a nonscalar member;
    L-nilpotent of length ``k >= 2``, the kernel of the first nonzero
    ``[A, B]`` with ``A`` in ``F^[k-2]``; otherwise ``None`` with strategy
    ``"outside_hypotheses"``.
    """
    F = as_family(F)
    node = _Node(list(F.members), [fro(T) for T in F.members], tol)
    if F.dim == 1 or _all_scalar(node):
        return None, "all_scalar"
    layers = _layers(node)
    if layers.vanished_at is None:
        return None, "outside_hypotheses"
    Q, strategy = _l_nilpotent_split(node)
    if Q is None or not 0 < Q.shape[1] < F.dim:
        return None, strategy
    return SubspaceBasis(Q, tol), strategy


def _certificate(F: OperatorFamily, P: np.ndarray, producer: str, routes, tol: ToleranceContext):
    forms = [np.linalg.solve(P, T @ P) for T in F.members]
    residual = 0.0
    for T, R in zip(F.members, forms):
        residual = max(residual, relative(fro(np.tril(R, -1)), fro(T)))
    return TriangularizationCertificate(
        basis_change=P,
        triangular_forms=forms,
        residual=residual,
        chain=InvariantChain.from_basis(P, tol),
        tolerance=tol.certify_tol,
        producer=producer,
        routes=list(routes),
        condition=float(np.linalg.cond(P)),
        labels=F.labels,
    )


def _triangularize_with(F: OperatorFamily, splitter, producer: str, tol: ToleranceContext):
    routes = []
    node = _Node(list(F.members), [fro(T) for T in F.members], tol)
    P = _run(node, splitter, routes)
    return _certificate(F, P, producer, routes, tol)


def triangularize_commuting(F, tol: ToleranceContext = DEFAULT_TOL) -> TriangularizationCertificate:
    """Chain of common eigenspaces for a commuting family."""
    F = as_family(F)
    k = iterated_commutators(F, 1, tol).vanished_at
    if k != 1:
        raise PreconditionError("family does not commute")
    return _triangularize_with(F, _commuting_split, "commuting", tol)


def triangularize_l_nilpotent(F, tol: ToleranceContext = DEFAULT_TOL, max_depth=None) -> TriangularizationCertificate:
    """Maximal invariant chain for an L-nilpotent family.

    Commuting pieces split on an eigenspace; otherwise on ``ker [A, B]`` for
    the first nonzero commutator of the last nonvanishing layer (every
    member commutes with it, so its kernel is invariant).
    """
    F = as_family(F)
    layers = iterated_commutators(F, max_depth, tol)
    if layers.vanished_at is None:
        raise PreconditionError(
            f"family is not L-nilpotent within depth {len(layers.layers) - 1}",
            {"depth_checked": len(layers.layers) - 1, "cycled": layers.cycled},
        )
    return _triangularize_with(F, _l_nilpotent_split, "l_nilpotent", tol)


# ---------------------------------------------------------------------------
# scalar-diagonal block decomposition


def _metrics(node: _Node) -> RecursionMetrics:
    s = sum(minimal_polynomial(T, node.tol).degree for T in node.members)
    layers = _layers(node)
    k = layers.vanished_at
    if k is None:
        return RecursionMetrics(s, (np.inf, np.inf))
    if k == 1:
        return RecursionMetrics(s, (1, 1))
    sets = commutator_sets(node.members, k - 1, node.tol, node.scales)
    total = 0
    for X, sx in sets[k - 2]:
        for B, sb in zip(node.members, node.scales):
            C = commutator(X, B)
            if fro(C) <= node.tol.zero_tol * sx * sb:
                continue
            nidx = _scaled_nilpotency_index(C, sx * sb, node.tol)
            total += nidx
    return RecursionMetrics(s, (k, total))


def _scaled_nilpotency_index(C: np.ndarray, scale: float, tol: ToleranceContext) -> int:
    # against the original operands' scale; a non-nilpotent piece counts as n + 1
    k = nilpotency_index(C, tol, scale)
    return C.shape[0] + 1 if k is None else k


def _sdd_split(node: _Node):
    if _all_scalar(node):
        return None, "scalar_block"
    tol = node.tol
    layers = _layers(node)
    k = layers.vanished_at
    if k is None:
        raise NumericalFailure("compressed family is not L-nilpotent within tolerance")
    if k >= 2:
        C, sc = _witness(node, layers)
        return range_space(C, tol, sc, tol.zero_tol).vectors, "commutator_range"
    A, s, lam1, gap = _best_member(node)
    d = A.shape[0]
    if gap == 0.0:
        # every nonscalar member has a single eigenvalue
        lam0 = np.trace(A) / d
        m = _scaled_nilpotency_index(A - lam0 * np.eye(d), s, tol)
        # nonscalar with a single eigenvalue: index >= 2
        m = min(max(2, m), d)
        return generalized_eigenspace(A, lam0, m - 1, tol, s, tol.zero_tol).vectors, "single_eigenvalue_kernel"
    m = max(1, eigen_index(A, lam1, tol, s, tol.zero_tol))
    return generalized_eigenspace(A, lam1, m, tol, s, tol.zero_tol).vectors, "eigenvalue_separating_kernel"


def _run_blocks(node: _Node, routes: list, metrics: list):
    d = node.members[0].shape[0]
    Q1, route = _sdd_split(node) if d > 1 else (None, "scalar_block")
    if Q1 is None:
        if d == 1 or route == "scalar_block":
            routes.append("scalar_block")
            return np.eye(d, dtype=complex), [d]
    parent_metrics = _metrics(node)
    Q1, Q2, res = _split(node, Q1, route)
    routes.append(route)
    n1, n2 = _compress(node, Q1, res), _compress(node, Q2, res)
    record = {"route": route, "parent": parent_metrics, "children": [_metrics(n1), _metrics(n2)]}
    metrics.append(record)
    U1, b1 = _run_blocks(n1, routes, metrics)
    U2, b2 = _run_blocks(n2, routes, metrics)
    return np.hstack([Q1 @ U1, Q2 @ U2]), b1 + b2


def scalar_diagonal_decomposition(F, tol: ToleranceContext = DEFAULT_TOL, max_depth=None) -> ScalarDiagonalForm:
    """Decompose an L-nilpotent family into scalar diagonal blocks.

    Splitting rules, tried in this order on each piece:

    * some commutator is nonzero (length ``k >= 2``): ``V1 = ran [A, B]``
      for the first nonzero ``[A, B]`` with ``A`` in ``F^[k-2]``;
    * commuting, nonscalar ``A`` with one eigenvalue ``l0`` and index ``m``:
      ``V1 = ker (A - l0)^(m-1)``;
    * commuting, ``A`` with several eigenvalues: ``V1 = ker (A - l1)^m``
      for the generalized eigenspace of ``l1``.

    A piece where every member is scalar becomes a diagonal block.
    """
    F = as_family(F)
    layers = iterated_commutators(F, max_depth, tol)
    if layers.vanished_at is None:
        raise PreconditionError("family is not L-nilpotent", {"cycled": layers.cycled})
    node = _Node(list(F.members), [fro(T) for T in F.members], tol)
    routes, metrics = [], []
    P, blocks = _run_blocks(node, routes, metrics)
    return _assemble_sdf(F, P, blocks, routes, metrics, tol)


def _assemble_sdf(F, P, blocks, routes, metrics, tol):
    n = F.dim
    edges = np.cumsum([0] + blocks)
    slices = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    projectors = []
    for sl in slices:
        E = np.zeros((n, n), dtype=complex)
        E[sl, sl] = np.eye(sl.stop - sl.start)
        projectors.append(E)
    scalars, nilpotent, worst = [], [], 0.0
    for T in F.members:
        R = np.linalg.solve(P, T @ P)
        lams = [complex(np.trace(R[sl, sl]) / (sl.stop - sl.start)) for sl in slices]
        N = R - sum(lam * E for lam, E in zip(lams, projectors))
        s = fro(T)
        for i, sl in enumerate(slices):
            worst = max(worst, relative(fro(N[sl, sl]), s))
            for j in range(i):
                worst = max(worst, relative(fro(N[sl, slices[j]]), s))
        scalars.append(lams)
        nilpotent.append(N)
    return ScalarDiagonalForm(
        block_dims=list(blocks),
        basis_change=P,
        diagonal_scalars=scalars,
        nilpotent_parts=nilpotent,
        projectors=projectors,
        block_residual=worst,
        tolerance=tol.certify_tol,
        routes=routes,
        metrics=metrics,
        labels=F.labels,
    )


def recursion_metrics(F, tol: ToleranceContext = DEFAULT_TOL) -> RecursionMetrics:
    """``s(F)`` and ``c(F)`` for a family (the induction measures of the block recursion)."""
    F = as_family(F)
    return _metrics(_Node(list(F.members), [fro(T) for T in F.members], tol))


# ---------------------------------------------------------------------------
# pairs commuting with their product


def _pair_residuals(A, B, sa, sb):
    C = A @ B - B @ A
    return {
        "A[A,B]": relative(fro(A @ C), sa, sa, sb),
        "[A,B]B": relative(fro(C @ B), sa, sb, sb),
        "B[A,B]": relative(fro(B @ C), sa, sb, sb),
    }


def _pair_scales(A, B):
    return [fro(A), fro(B)]


def shemesh_split(A, B, tol: ToleranceContext = DEFAULT_TOL, scales=None, route=None):
    """One invariant subspace for a pair with ``A[A,B] = [A,B]B = 0``.

    Returns ``(basis, route)``; ``basis`` is ``None`` when both are scalar.
    Routes: ``"commuting"``; ``"product_eigenspace"`` (``AB`` nonscalar);
    ``"range_B"`` (``AB = 0``); ``"scaled_inverse_eigenspace"``
    (``AB = c I``, ``c != 0``). ``route`` forces one case (for testing the
    case analysis on inputs the ordering would send elsewhere).
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    sa, sb = scales if scales is not None else _pair_scales(A, B)
    node = _Node([A, B], [sa, sb], tol)
    d = A.shape[0]
    if route is None:
        route = _shemesh_route(A, B, sa, sb, tol)
    if route == "commuting":
        Q, r = _commuting_split(node)
        return Q, ("commuting" if Q is not None else r)
    if route == "product_eigenspace":
        return _eigenspace_of(A @ B, sa * sb, tol), route
    if route == "range_B":
        return range_space(B, tol, sb, tol.zero_tol).vectors, route
    if route == "scaled_inverse_eigenspace":
        c = np.trace(A @ B) / d
        if c == 0:
            raise NumericalFailure("AB is not a nonzero scalar")
        # A / c is a left inverse of B; any eigenspace of B with nonzero eigenvalue is A-invariant
        eigs = sorted(eigen_decomposition(B, tol, sb), key=lambda p: -abs(p[0]))
        for lam, _ in eigs:
            if abs(lam) == 0:
                continue
            Q = generalized_eigenspace(B, lam, 1, tol, sb, tol.zero_tol).vectors
            if 0 < Q.shape[1] < d:
                return Q, route
        raise NumericalFailure("no proper eigenspace of B with nonzero eigenvalue", {"route": route})
    raise ValueError(f"unknown route {route!r}")


def _shemesh_route(A, B, sa, sb, tol):
    d = A.shape[0]
    t = tol.zero_tol
    if (
        _scalar_dev(A, sa) <= t
        or _scalar_dev(B, sb) <= t
        or fro(A @ B - B @ A) <= t * sa * sb
    ):
        return "commuting"
    AB = A @ B
    scale = sa * sb
    dev = relative(fro(AB - np.trace(AB) / d * np.eye(d)), scale)
    if dev > 10 * t:
        return "product_eigenspace"
    if dev > t:
        warnings.warn(
            f"AB is within 10x of scalar (deviation {dev:.3e}); using the scalar case",
            NumericalWarning,
            stacklevel=3,
        )
    if relative(fro(AB), scale) <= 10 * t:
        return "range_B"
    return "scaled_inverse_eigenspace"


def _pair_splitter(kind: str):
    keys = ("A[A,B]", "[A,B]B") if kind == "shemesh" else ("A[A,B]", "B[A,B]")

    def split(node: _Node):
        A, B = node.members
        sa, sb = node.scales
        res = _pair_residuals(A, B, sa, sb)
        worst = max(res[k] for k in keys)
        if worst > 10 * node.tol.zero_tol:
            raise NumericalFailure(
                f"hypothesis lost after compression (residual {worst:.3e})",
                {"residuals": res},
            )
        if _all_scalar(node):
            return None, "all_scalar"
        if kind == "shemesh":
            return shemesh_split(A, B, node.tol, (sa, sb))
        C = A @ B - B @ A
        if fro(C) <= node.tol.zero_tol * sa * sb:
            return _commuting_split(node)
        return range_space(C, node.tol, sa * sb, node.tol.zero_tol).vectors, "commutator_range"

    return split


def _pair_family(A, B) -> OperatorFamily:
    return OperatorFamily([A, B], ["A", "B"])


def triangularize_shemesh(A, B, tol: ToleranceContext = DEFAULT_TOL) -> TriangularizationCertificate:
    """Simultaneous triangularization of ``A, B`` with ``A[A,B] = [A,B]B = 0``."""
    A, B = as_matrix(A), as_matrix(B)
    F = _pair_family(A, B)
    res = _pair_residuals(A, B, *_pair_scales(A, B))
    if res["A[A,B]"] > tol.zero_tol or res["[A,B]B"] > tol.zero_tol:
        raise PreconditionError("A[A,B] = [A,B]B = 0 does not hold", res)
    return _triangularize_with(F, _pair_splitter("shemesh"), "shemesh", tol)


def triangularize_left_annihilated(A, B, tol: ToleranceContext = DEFAULT_TOL) -> TriangularizationCertificate:
    """Simultaneous triangularization of ``A, B`` with ``A[A,B] = B[A,B] = 0``.

    The range of ``[A, B]`` is annihilated by both operators, hence invariant.
    """
    A, B = as_matrix(A), as_matrix(B)
    F = _pair_family(A, B)
    res = _pair_residuals(A, B, *_pair_scales(A, B))
    if res["A[A,B]"] > tol.zero_tol or res["B[A,B]"] > tol.zero_tol:
        raise PreconditionError("A[A,B] = B[A,B] = 0 does not hold", res)
    return _triangularize_with(F, _pair_splitter("left_annihilated"), "left_annihilated", tol)


# ---------------------------------------------------------------------------
# a normal member


def _schur_unitary(T: np.ndarray) -> np.ndarray:
    if T.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex)
    _, Z = scipy.linalg.schur(T, output="complex")
    return Z


def _diagonalize_normal_pair(A, B, tol: ToleranceContext) -> Diagonalization:
    n = A.shape[0]
    cols = []
    sa = fro(A)
    for lam, _ in eigen_decomposition(A, tol, sa):
        E = generalized_eigenspace(A, lam, 1, tol, sa, tol.zero_tol).vectors
        W = _schur_unitary(E.conj().T @ B @ E)
        cols.append(E @ W)
    U = np.hstack(cols)
    if U.shape[1] != n:
        raise InconsistencyError(f"eigenspaces of the normal operator span {U.shape[1]} of {n} dimensions")
    DA = U.conj().T @ A @ U
    DB = U.conj().T @ B @ U
    off = max(
        relative(fro(DA - np.diag(np.diag(DA))), fro(A)),
        relative(fro(DB - np.diag(np.diag(DB))), fro(B)),
    )
    return Diagonalization(U, np.diag(DA).copy(), np.diag(DB).copy(), off)


def analyze_normal_pair(A, B, tol: ToleranceContext = DEFAULT_TOL) -> NormalPairAnalysis:
    """Block analysis of ``A`` normal with ``A[A,B] = 0``.

    On ``ker A (+) (ker A)^perp`` the operator ``A`` is ``0 (+) A22`` with
    ``A22`` injective, which forces ``B21 = 0`` and ``[A22, B22] = 0``; so
    ``[A,B]^2 = 0``. A triangularizing basis is a Schur basis of ``B11``
    followed by a common triangularizing basis of the commuting ``A22, B22``.
    When ``B`` is normal as well, ``B12`` vanishes too and the pair is
    diagonalized through the eigenspaces of ``A``.
    """
    A, B = as_matrix(A), as_matrix(B)
    n = A.shape[0]
    sa, sb = fro(A), fro(B)
    C = A @ B - B @ A
    pre = {
        "normal_A": relative(fro(A @ A.conj().T - A.conj().T @ A), sa, sa),
        "A[A,B]": relative(fro(A @ C), sa, sa, sb),
    }
    if not is_normal(A, tol) or pre["A[A,B]"] > tol.zero_tol:
        raise PreconditionError("requires A normal and A[A,B] = 0", pre)
    K = kernel(A, tol, sa, tol.zero_tol)
    Kp = K.complement()
    Q = np.hstack([K.vectors, Kp.vectors])
    k = K.dim
    Ap = Q.conj().T @ A @ Q
    Bp = Q.conj().T @ B @ Q
    blocks = {
        "A11": Ap[:k, :k], "A12": Ap[:k, k:], "A21": Ap[k:, :k], "A22": Ap[k:, k:],
        "B11": Bp[:k, :k], "B12": Bp[:k, k:], "B21": Bp[k:, :k], "B22": Bp[k:, k:],
    }
    residuals = dict(pre)
    residuals["B21"] = relative(fro(blocks["B21"]), sb)
    residuals["[A22,B22]"] = relative(fro(commutator(blocks["A22"], blocks["B22"])), sa, sb)
    residuals["A_off_kernel"] = relative(fro(Ap[:k, :]) + fro(Ap[:, :k]), sa)
    sq = relative(fro(C @ C), sa, sb, sa, sb)
    residuals["[A,B]^2"] = sq
    injective = k == 0
    if injective:
        residuals["[A,B]"] = relative(fro(C), sa, sb)
    for key in ("B21", "[A22,B22]", "[A,B]^2") + (("[A,B]",) if injective else ()):
        if residuals[key] > tol.certify_tol:
            raise InconsistencyError(f"{key} residual {residuals[key]:.3e} exceeds {tol.certify_tol:.1e}")

    # triangularize: Schur flag of B11 on ker A, then the commuting pair on the complement
    U1 = _schur_unitary(blocks["B11"])
    if n - k > 0:
        sub = _Node([blocks["A22"], blocks["B22"]], [sa, sb], tol)
        routes = []
        U2 = _run(sub, _commuting_split, routes)
    else:
        U2, routes = np.zeros((0, 0), dtype=complex), []
    P = np.hstack([K.vectors @ U1, Kp.vectors @ U2])
    cert = _certificate(_pair_family(A, B), P, "normal", ["kernel_schur"] + routes, tol)

    diag = None
    if is_normal(B, tol):
        residuals["B12"] = relative(fro(blocks["B12"]), sb)
        if residuals["B12"] > tol.certify_tol:
            raise InconsistencyError(f"B normal but B12 residual {residuals['B12']:.3e} does not vanish")
        residuals["[A,B]"] = relative(fro(C), sa, sb)
        if residuals["[A,B]"] > tol.certify_tol:
            raise InconsistencyError(f"normal pair does not commute (residual {residuals['[A,B]']:.3e})")
        diag = _diagonalize_normal_pair(A, B, tol)
        residuals["offdiag"] = diag.offdiag_residual
    return NormalPairAnalysis(
        splitting=(K, Kp),
        blocks=blocks,
        residuals=residuals,
        commutator_square_residual=sq,
        certificate=cert,
        injective=injective,
        diagonalization=diag,
        dual=False,
        tolerance=tol.certify_tol,
    )


def analyze_normal_pair_dual(A, B, tol: ToleranceContext = DEFAULT_TOL) -> NormalPairAnalysis:
    """``B`` normal with ``[A,B]B = 0``: analyze the adjoint pair ``(B*, A*)``.

    A triangularizing chain ``M_1 < ... < M_{n-1}`` for the adjoints gives the
    chain of orthogonal complements for ``A, B``, i.e. the columns of the
    adjoint pair's basis in reverse order.
    """
    A, B = as_matrix(A), as_matrix(B)
    sa, sb = fro(A), fro(B)
    C = A @ B - B @ A
    pre = {
        "normal_B": relative(fro(B @ B.conj().T - B.conj().T @ B), sb, sb),
        "[A,B]B": relative(fro(C @ B), sa, sb, sb),
    }
    if not is_normal(B, tol) or pre["[A,B]B"] > tol.zero_tol:
        raise PreconditionError("requires B normal and [A,B]B = 0", pre)
    inner = analyze_normal_pair(B.conj().T, A.conj().T, tol)
    P = inner.certificate.basis_change[:, ::-1]
    cert = _certificate(_pair_family(A, B), P, "normal_dual", inner.certificate.routes, tol)
    sq = relative(fro(C @ C), sa, sb, sa, sb)
    if sq > tol.certify_tol:
        raise InconsistencyError(f"[A,B]^2 residual {sq:.3e}")
    diag = None
    if inner.diagonalization is not None:
        d = inner.diagonalization
        diag = Diagonalization(d.unitary, d.eigenvalues_B.conj(), d.eigenvalues_A.conj(), d.offdiag_residual)
    residuals = dict(inner.residuals)
    residuals.update(pre)
    residuals["[A,B]^2"] = sq
    return NormalPairAnalysis(
        splitting=inner.splitting,
        blocks=inner.blocks,
        residuals=residuals,
        commutator_square_residual=sq,
        certificate=cert,
        injective=inner.injective,
        diagonalization=diag,
        dual=True,
        tolerance=tol.certify_tol,
    )


# ---------------------------------------------------------------------------
# dispatch


MODES = ("l_nilpotent", "shemesh", "left_annihilated", "normal")


def applicable_modes(F, tol: ToleranceContext = DEFAULT_TOL, max_depth=None) -> dict:
    """Which procedures' hypotheses hold, with the residuals behind each answer."""
    F = as_family(F)
    out = {}
    out["l_nilpotent"] = iterated_commutators(F, max_depth, tol).vanished_at is not None
    if len(F) == 2:
        A, B = F.members
        res = _pair_residuals(A, B, fro(A), fro(B))
        t = tol.zero_tol
        out["shemesh"] = res["A[A,B]"] <= t and res["[A,B]B"] <= t
        out["left_annihilated"] = res["A[A,B]"] <= t and res["B[A,B]"] <= t
        out["normal"] = (is_normal(A, tol) and res["A[A,B]"] <= t) or (is_normal(B, tol) and res["[A,B]B"] <= t)
    else:
        out.update({"shemesh": False, "left_annihilated": False, "normal": False})
    return out


def triangularize(F, mode: str = "auto", tol: ToleranceContext = DEFAULT_TOL, max_depth=None):
    """Run the procedure named by ``mode`` (``auto``: first applicable in :data:`MODES`).

    Returns ``(mode_used, result)``; the result is a certificate, or a
    :class:`NormalPairAnalysis` for ``normal``.
    """
    F = as_family(F)
    if mode == "auto":
        ok = applicable_modes(F, tol, max_depth)
        for m in MODES:
            if ok[m]:
                mode = m
                break
        else:
            raise PreconditionError("no procedure's hypothesis holds", _all_residuals(F, tol))
    if mode == "l_nilpotent":
        return mode, triangularize_l_nilpotent(F, tol, max_depth)
    if len(F) != 2:
        raise PreconditionError(f"mode {mode!r} needs exactly two operators, got {len(F)}")
    A, B = F.members
    if mode == "shemesh":
        return mode, triangularize_shemesh(A, B, tol)
    if mode == "left_annihilated":
        return mode, triangularize_left_annihilated(A, B, tol)
    if mode == "normal":
        if is_normal(A, tol) and _pair_residuals(A, B, fro(A), fro(B))["A[A,B]"] <= tol.zero_tol:
            return mode, analyze_normal_pair(A, B, tol)
        return mode, analyze_normal_pair_dual(A, B, tol)
    raise ValueError(f"unknown mode {mode!r}")


def _all_residuals(F, tol):
    if len(F) != 2:
        return {"l_nilpotent": "not L-nilpotent"}
    A, B = F.members
    sa, sb = fro(A), fro(B)
    res = _pair_residuals(A, B, sa, sb)
    C = A @ B - B @ A
    res["[A,[A,B]]"] = relative(fro(A @ C - C @ A), sa, sa, sb)
    res["normal_A"] = relative(fro(A @ A.conj().T - A.conj().T @ A), sa, sa)
    res["normal_B"] = relative(fro(B @ B.conj().T - B.conj().T @ B), sb, sb)
    return res
