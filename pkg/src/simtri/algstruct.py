"""The associative algebra generated by a family, and its radical.

The algebra is the (non-unital) span of all words in the generators. Its
Jacobson radical is computed as the kernel of the trace form
``(x, y) -> tr(xy)``, which for a finite-dimensional algebra of complex
matrices is exactly the largest nilpotent ideal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .commalg import as_family
from .matcore import (
    DEFAULT_TOL,
    InconsistencyError,
    ToleranceContext,
    cluster_eigenvalues,
    fro,
    nilpotency_index,
)


@dataclass
class AlgebraStructure:
    """Basis and radical data of a matrix algebra.

    ``basis`` is a Frobenius-orthonormal basis (``words[i]`` is the word
    in generator indices that introduced ``basis[i]``); ``orthonormal``
    holds the same basis flattened into columns.
    """

    ambient_dim: int
    basis: list
    words: list
    orthonormal: np.ndarray
    rounds: int
    radical_basis: list | None = None
    radical_orthonormal: np.ndarray | None = None
    radical_exponent: int | None = None
    quotient_dim: int | None = None
    scalar_tuples: list | None = None
    radical_nilpotency: list = field(default_factory=list)

    @property
    def dim_algebra(self) -> int:
        return len(self.basis)

    @property
    def radical_dim(self) -> int | None:
        return None if self.radical_basis is None else len(self.radical_basis)

    def span_residual(self, X: np.ndarray, radical: bool = False) -> float:
        """Relative distance of ``X`` from the algebra (or from its radical)."""
        Q = self.radical_orthonormal if radical else self.orthonormal
        v = np.asarray(X, dtype=complex).reshape(-1)
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        if Q is None or Q.shape[1] == 0:
            return 1.0
        r = v - Q @ (Q.conj().T @ v)
        return float(np.linalg.norm(r) / nv)


def _independent(Q: np.ndarray, v: np.ndarray, threshold: float):
    """Gram-Schmidt step; returns the new unit vector or ``None``."""
    nv = np.linalg.norm(v)
    if nv == 0:
        return None
    r = v - Q @ (Q.conj().T @ v)
    r = r - Q @ (Q.conj().T @ r)
    nr = np.linalg.norm(r)
    if nr <= threshold * nv:
        return None
    return r / nr


def generate_algebra(F, tol: ToleranceContext = DEFAULT_TOL) -> AlgebraStructure:
    """Span of all words in the members of ``F``.

    The span is grown like a block Krylov space: each new orthonormal
    element is multiplied on the right by every (normalized) generator, and
    the product is kept when its component orthogonal to the current span
    exceeds ``certify_tol / 10`` (membership is certified at
    ``certify_tol``). Multiplying orthonormalized elements rather than raw
    words keeps long words from collapsing onto a dominant direction.
    ``words[i]`` records the word whose product introduced ``basis[i]``.

    >>> generate_algebra([np.eye(2)]).dim_algebra
    1
    """
    F = as_family(F)
    n = F.dim
    threshold = tol.certify_tol / 10
    gens = [T / fro(T) if fro(T) > 0 else T for T in F.members]
    Q = np.zeros((n * n, 0), dtype=complex)
    basis, words = [], []

    def admit(W, word):
        nonlocal Q
        v = W.reshape(-1)
        # operands have unit norm, so the cutoff is absolute
        r = v - Q @ (Q.conj().T @ v)
        r = r - Q @ (Q.conj().T @ r)
        nr = np.linalg.norm(r)
        if nr <= threshold:
            return False
        Q = np.column_stack([Q, r / nr])
        basis.append((r / nr).reshape(n, n))
        words.append(word)
        return True

    frontier = [i for j, G in enumerate(gens) if admit(G, (j,)) for i in [len(basis) - 1]]
    rounds = 1
    while frontier and rounds <= n * n:
        new_frontier = []
        for i in frontier:
            for j, G in enumerate(gens):
                if admit(basis[i] @ G, words[i] + (j,)):
                    new_frontier.append(len(basis) - 1)
        frontier = new_frontier
        rounds += 1
    return AlgebraStructure(n, basis, words, Q, rounds)


def _nullspace(G: np.ndarray, rtol: float) -> np.ndarray:
    if G.size == 0:
        return np.zeros((0, 0), dtype=complex)
    _, s, Vh = np.linalg.svd(G)
    if s[0] == 0:
        return np.eye(G.shape[1], dtype=complex)
    r = int(np.sum(s > rtol * s[0]))
    return Vh[r:].conj().T


def _orthonormalize(mats: list, n: int, threshold: float) -> np.ndarray:
    Q = np.zeros((n * n, 0), dtype=complex)
    for X in mats:
        q = _independent(Q, np.asarray(X).reshape(-1), threshold)
        if q is not None:
            Q = np.column_stack([Q, q])
    return Q


def _product_span(Q1: np.ndarray, Q2: np.ndarray, n: int, threshold: float):
    """Orthonormal basis of span{x y : x in span Q1, y in span Q2}.

    The factors have unit norm, so the cutoff on the singular values of the
    stacked products is absolute.
    """
    prods = [
        (Q1[:, a].reshape(n, n) @ Q2[:, b].reshape(n, n)).reshape(-1)
        for a in range(Q1.shape[1])
        for b in range(Q2.shape[1])
    ]
    if not prods:
        return np.zeros((n * n, 0), dtype=complex)
    U, s, _ = np.linalg.svd(np.column_stack(prods), full_matrices=False)
    return U[:, : int(np.sum(s > threshold))]


def jacobson_radical(alg: AlgebraStructure, tol: ToleranceContext = DEFAULT_TOL) -> AlgebraStructure:
    """Radical as the kernel of the trace form on the algebra.

    Every radical basis element is checked to be nilpotent; the exponent is
    the least ``m`` with ``J^m = 0`` (``1`` for a zero radical), where a
    product of unit radical elements counts as zero below ``certify_tol``.
    """
    n = alg.ambient_dim
    Q = alg.orthonormal
    d = Q.shape[1]
    mats = [Q[:, i].reshape(n, n) for i in range(d)]
    G = np.array([[np.trace(x @ y) for y in mats] for x in mats], dtype=complex).reshape(d, d)
    # tr(xy) = tr(yx): G is symmetric, so left and right kernels agree
    N = _nullspace(G, max(tol.zero_tol, tol.rank_threshold(d)))
    radical = [sum(N[i, c] * mats[i] for i in range(d)) for c in range(N.shape[1])]
    RQ = _orthonormalize(radical, n, tol.zero_tol)
    radical = [RQ[:, c].reshape(n, n) for c in range(RQ.shape[1])]
    indices = []
    for r in radical:
        k = nilpotency_index(r, tol)
        if k is None:
            raise InconsistencyError("trace-form radical contains an element that is not nilpotent")
        indices.append(k)
    exponent = 1
    if radical:
        power = RQ
        exponent = None
        for m in range(2, n + 2):
            power = _product_span(power, RQ, n, tol.certify_tol)
            if power.shape[1] == 0:
                exponent = m
                break
        if exponent is None:
            raise InconsistencyError("radical is not nilpotent within the dimension bound")
    return replace(
        alg,
        radical_basis=radical,
        radical_orthonormal=RQ,
        radical_exponent=exponent,
        quotient_dim=d - len(radical),
        radical_nilpotency=indices,
    )


def radical_power_residual(alg: AlgebraStructure, power: int | None = None, tol: ToleranceContext = DEFAULT_TOL) -> float:
    """Largest ``|x r|_F`` with ``x`` a unit element of ``J^(m-1)`` and ``r`` a unit radical element.

    ``J^(m-1)`` is spanned from orthonormal products, so the residual is
    measured on unit-norm elements rather than on a growing word list.
    """
    n = alg.ambient_dim
    m = alg.radical_exponent if power is None else power
    RQ = alg.radical_orthonormal
    if RQ is None or RQ.shape[1] == 0:
        return 0.0
    if m <= 1:
        return 1.0
    current = RQ
    for _ in range(m - 2):
        current = _product_span(current, RQ, n, tol.certify_tol)
        if current.shape[1] == 0:
            return 0.0
    worst = 0.0
    for a in range(current.shape[1]):
        X = current[:, a].reshape(n, n)
        for b in range(RQ.shape[1]):
            worst = max(worst, fro(X @ RQ[:, b].reshape(n, n)))
    return worst


@dataclass
class QuotientCheck:
    commutative: bool
    max_residual: float
    threshold: float
    worst_pair: tuple | None


def verify_quotient_commutative(alg: AlgebraStructure, tol: ToleranceContext = DEFAULT_TOL) -> QuotientCheck:
    """Whether every commutator of basis elements lies in the radical span."""
    if alg.radical_orthonormal is None:
        raise ValueError("compute the radical first")
    worst, where = 0.0, None
    B = alg.basis
    for i in range(len(B)):
        for j in range(i + 1, len(B)):
            C = B[i] @ B[j] - B[j] @ B[i]
            nc = fro(C)
            if nc == 0:
                continue
            # relative to |x||y| = 1 (basis is normalized)
            r = alg.span_residual(C, radical=True) * nc
            if r > worst:
                worst, where = r, (i, j)
    t = tol.certify_tol
    return QuotientCheck(worst <= t, worst, t, where)


@dataclass
class QuotientMap:
    tuples: list  # per generator: (lambda_1j, ..., lambda_mj)
    block_signatures: list  # per block: (lambda_i1, ..., lambda_ir)
    realized_dim: int  # distinct nonzero block signatures
    quotient_dim: int | None


def _scalar_classes(sdf, tol: ToleranceContext) -> list:
    """Per block, the eigenvalue cluster of each member's block scalar (``0`` is the cluster of zero).

    Block scalars are eigenvalues of the member, so two blocks carry the
    same scalar exactly when their scalars fall in the same eigenvalue
    cluster; this inherits the clustering's perturbation radii instead of
    a fixed cutoff, which matters for defective eigenvalues.
    """
    m = len(sdf.block_dims)
    classes = [[] for _ in range(m)]
    for row, N in zip(sdf.diagonal_scalars, sdf.nilpotent_parts):
        R = sum(lam * P for lam, P in zip(row, sdf.projectors)) + N
        n = R.shape[0]
        # a detached zero eigenvalue marks the cluster of zero
        clusters, w = cluster_eigenvalues(scipy.linalg.block_diag(R, [[0.0]]), tol)
        means = [complex(np.mean(w[g])) for g in clusters]
        zero = next(c for c, g in enumerate(clusters) if n in g)
        for i, lam in enumerate(row):
            c = int(np.argmin([abs(lam - mu) for mu in means]))
            classes[i].append(0 if c == zero else c + 1)
    return classes


def quotient_scalar_map(alg: AlgebraStructure, sdf, tol: ToleranceContext = DEFAULT_TOL) -> QuotientMap:
    """Diagonal scalars of each generator, and the dimension of their image.

    The homomorphism onto ``C^m`` sends generator ``j`` to its tuple of block
    scalars. Its image is spanned by indicator vectors of the classes of
    blocks with equal scalar signatures (excluding the all-zero signature),
    so its dimension is the number of distinct nonzero signatures.
    """
    tuples = [tuple(row) for row in sdf.diagonal_scalars]
    m = len(sdf.block_dims)
    signatures = [tuple(t[i] for t in tuples) for i in range(m)]
    classes = {tuple(c) for c in _scalar_classes(sdf, tol) if any(c)}
    return QuotientMap(tuples, signatures, len(classes), alg.quotient_dim)


def word_span_bound(num_blocks: int, num_generators: int) -> int:
    """Number of words ``P N P N ... P`` with at most ``num_blocks`` factors ``N``."""
    m, r = num_blocks, num_generators
    return sum(m ** (k + 1) * r ** k for k in range(m + 1))


def product_closure_residual(alg: AlgebraStructure) -> float:
    """Largest relative distance of a basis product from the algebra."""
    worst = 0.0
    for X in alg.basis:
        for Y in alg.basis:
            worst = max(worst, alg.span_residual(X @ Y) * fro(X @ Y))
    return worst


def ideal_residual(alg: AlgebraStructure) -> float:
    """Largest distance of ``x r`` or ``r x`` from the radical span (basis x, radical r)."""
    worst = 0.0
    for X in alg.basis:
        for R in alg.radical_basis or []:
            for P in (X @ R, R @ X):
                worst = max(worst, alg.span_residual(P, radical=True) * fro(P))
    return worst
