"""Dense complex matrix primitives.

Rank, kernel, range, spectral and polynomial computations shared by the
triangularization algorithms. Every "is zero" decision is made against a
:class:`ToleranceContext` so that exact algebraic statements become
reproducible numerical ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

EPS = np.finfo(float).eps


class DimensionMismatch(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """Two routes to the same quantity, or a guaranteed conclusion, disagreed beyond tolerance."""


class NumericalWarning(UserWarning):
    """A rank or dependence decision was made close to its threshold."""


@dataclass(frozen=True)
class ToleranceContext:
    """Thresholds used for every numerical zero/rank decision.

    Parameters
    ----------
    rank_tol : float or None
        Relative singular-value cutoff. ``None`` means ``64 * n * eps`` for
        an ``n``-dimensional problem.
    eig_cluster_tol : float
        Base radius (relative to the operator norm) for merging eigenvalues.
    zero_tol : float
        Relative threshold for "this matrix is zero".
    certify_tol : float
        Relative threshold used when checking certificates.
    """

    rank_tol: float | None = None
    eig_cluster_tol: float = 1e-8
    zero_tol: float = 1e-10
    certify_tol: float = 1e-8

    def __post_init__(self):
        for name in ("eig_cluster_tol", "zero_tol", "certify_tol"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.rank_tol is not None and not self.rank_tol >= 0:
            raise ValueError("rank_tol must be nonnegative")

    def rank_threshold(self, n: int) -> float:
        if self.rank_tol is not None:
            return self.rank_tol
        return 64.0 * max(n, 1) * EPS

    def as_dict(self) -> dict:
        return {
            "rank_tol": self.rank_tol,
            "eig_cluster_tol": self.eig_cluster_tol,
            "zero_tol": self.zero_tol,
            "certify_tol": self.certify_tol,
        }

    def replace(self, **changes) -> "ToleranceContext":
        values = self.as_dict()
        values.update({k: v for k, v in changes.items() if v is not None})
        return ToleranceContext(**values)


DEFAULT_TOL = ToleranceContext()


def as_matrix(M) -> np.ndarray:
    """Validate and copy ``M`` into a finite square complex array."""
    arr = np.array(M, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def fro(M) -> float:
    return float(np.linalg.norm(M))


def opnorm(M) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def relative(value: float, *scales: float) -> float:
    """``value`` divided by the product of ``scales`` (0 when that product is 0)."""
    denom = float(np.prod(scales)) if scales else 1.0
    if denom == 0.0:
        return 0.0 if value == 0.0 else np.inf
    return value / denom


def commutator(S, T) -> np.ndarray:
    """Return ``ST - TS`` with no tolerance applied."""
    S = np.asarray(S, dtype=complex)
    T = np.asarray(T, dtype=complex)
    if S.shape != T.shape:
        raise DimensionMismatch(f"commutator of {S.shape} and {T.shape}")
    return S @ T - T @ S


def scalar_deviation(M) -> float:
    """Relative distance ``|M - (tr M / n) I|_F / |M|_F`` (0 for the zero matrix)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    c = np.trace(M) / n
    return relative(fro(M - c * np.eye(n)), fro(M))


def is_scalar(M, tol: ToleranceContext = DEFAULT_TOL) -> bool:
    return scalar_deviation(M) <= tol.zero_tol


def is_zero(M, scale: float, tol: ToleranceContext = DEFAULT_TOL) -> bool:
    return fro(M) <= tol.zero_tol * scale


def is_normal(M, tol: ToleranceContext = DEFAULT_TOL) -> bool:
    M = np.asarray(M, dtype=complex)
    H = M.conj().T
    return fro(M @ H - H @ M) <= tol.zero_tol * fro(M) ** 2


def _phase_normalize(V: np.ndarray) -> np.ndarray:
    # largest-modulus entry of each column made real positive
    V = V.copy()
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j]) - 1e-12 * np.arange(V.shape[0])))
        if V[i, j] != 0:
            V[:, j] *= abs(V[i, j]) / V[i, j]
    return V


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal column basis of a subspace of ``C^ambient_dim``."""

    vectors: np.ndarray
    tol: ToleranceContext = field(default=DEFAULT_TOL)

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.dim

    def projector(self) -> np.ndarray:
        Q = self.vectors
        return Q @ Q.conj().T

    def complement(self) -> "SubspaceBasis":
        """Orthogonal complement."""
        return SubspaceBasis(orthogonal_complement(self.vectors), self.tol)

    def contains(self, other: "SubspaceBasis", threshold: float = 1e-8) -> bool:
        if other.dim == 0:
            return True
        R = other.vectors - self.projector() @ other.vectors
        return opnorm(R) <= threshold

    def same_as(self, other: "SubspaceBasis", threshold: float = 1e-8) -> bool:
        return self.dim == other.dim and opnorm(self.projector() - other.projector()) <= threshold

    @classmethod
    def span(cls, columns, tol: ToleranceContext = DEFAULT_TOL) -> "SubspaceBasis":
        """Orthonormal basis of the span of the given columns."""
        V = np.asarray(columns, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        return range_space(V, tol)


def orthogonal_complement(Q: np.ndarray) -> np.ndarray:
    n, k = Q.shape
    if k == 0:
        return np.eye(n, dtype=complex)
    if k == n:
        return np.zeros((n, 0), dtype=complex)
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    return _phase_normalize(U[:, k:])


def numerical_rank(s: np.ndarray, rtol: float) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _cutoff_rank(s: np.ndarray, rtol: float, scale: float | None) -> int:
    if scale is None:
        return numerical_rank(s, rtol)
    return int(np.sum(s > rtol * scale)) if scale > 0 else 0


def kernel(M, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None, rtol: float | None = None) -> SubspaceBasis:
    """Numerical null space of ``M``.

    Singular values at or below ``rtol * scale`` count as zero. ``rtol``
    defaults to the context's rank threshold and ``scale`` to the largest
    singular value of ``M``; pass the norm of the operands ``M`` was built
    from when ``M`` itself may be tiny.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    rtol = tol.rank_threshold(M.shape[0]) if rtol is None else rtol
    _, s, Vh = np.linalg.svd(M)
    s_full = np.zeros(n)
    s_full[: s.size] = s
    r = _cutoff_rank(s_full, rtol, scale)
    return SubspaceBasis(_phase_normalize(Vh[r:].conj().T), tol)


def range_space(M, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None, rtol: float | None = None) -> SubspaceBasis:
    """Numerical column space of ``M`` (may be rectangular); cutoff as in :func:`kernel`."""
    M = np.asarray(M, dtype=complex)
    if M.shape[1] == 0:
        return SubspaceBasis(np.zeros((M.shape[0], 0), dtype=complex), tol)
    rtol = tol.rank_threshold(M.shape[0]) if rtol is None else rtol
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = _cutoff_rank(s, rtol, scale)
    return SubspaceBasis(_phase_normalize(U[:, :r]), tol)


@dataclass(frozen=True)
class Polynomial:
    """Monic polynomial, coefficients lowest degree first."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValueError("empty polynomial")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, M) -> np.ndarray:
        """Evaluate at a square matrix (Horner)."""
        M = np.asarray(M, dtype=complex)
        n = M.shape[0]
        out = np.zeros_like(M)
        for c in reversed(self.coeffs):
            out = out @ M + c * np.eye(n)
        return out

    def evaluate(self, z):
        return np.polyval(list(reversed(self.coeffs)), z)

    @classmethod
    def normalized(cls, coeffs) -> "Polynomial":
        coeffs = [complex(c) for c in coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        lead = coeffs[-1]
        return cls(tuple(c / lead for c in coeffs))

    def roots(self) -> np.ndarray:
        if self.degree == 0:
            return np.zeros(0, dtype=complex)
        return np.roots(list(reversed(self.coeffs)))


def _krylov_powers(M: np.ndarray, max_degree: int):
    """Yield ``(d, v_d, residual_d)`` for ``v_d = vec((M / |M|_2)^d)``.

    ``residual_d`` is the component of ``v_d`` orthogonal to ``v_0..v_{d-1}``.
    Every ``v_d`` has norm at most ``sqrt(n)``, which sets the scale of the
    residuals.
    """
    n = M.shape[0]
    s = opnorm(M)
    Mt = M / s if s > 0 else M
    P = np.eye(n, dtype=complex)
    Q = np.zeros((n * n, 0), dtype=complex)
    for d in range(max_degree + 1):
        v = P.reshape(-1)
        r = v - Q @ (Q.conj().T @ v)
        r = r - Q @ (Q.conj().T @ r)  # reorthogonalize
        yield d, v, r
        nr = np.linalg.norm(r)
        if nr > 0:
            Q = np.column_stack([Q, r / nr])
        P = P @ Mt


def minimal_polynomial(M, tol: ToleranceContext = DEFAULT_TOL) -> Polynomial:
    """Monic annihilating polynomial of least degree.

    Powers ``I, M, M^2, ...`` (after scaling ``M`` to unit norm) are flattened
    and orthogonalized in turn; the first power whose residual falls below
    ``zero_tol * sqrt(n)`` is taken as dependent on its predecessors, and the
    coefficients come from a least-squares fit against them.

    Examples
    --------
    >>> p = minimal_polynomial([[1, 0], [0, 0]])
    >>> p.degree, bool(np.allclose(p.coeffs, [0, -1, 1]))
    (2, True)
    """
    M = as_matrix(M)
    n = M.shape[0]
    s = opnorm(M)
    if s == 0:
        return Polynomial((0j, 1 + 0j))
    threshold = tol.zero_tol * np.sqrt(n)
    powers = []
    for d, v, r in _krylov_powers(M, n):
        nr = float(np.linalg.norm(r))
        if d > 0 and threshold / 10 < nr <= 10 * threshold:
            warnings.warn(
                f"degree-{d} dependence decided within 10x of threshold "
                f"(residual {nr:.3e}, threshold {threshold:.3e})",
                NumericalWarning,
                stacklevel=2,
            )
        if d > 0 and (nr <= threshold or d == n):
            c, *_ = np.linalg.lstsq(np.column_stack(powers), v, rcond=None)
            # p~(z) = z^d - sum c_k z^k annihilates M / s; p(z) = s^d p~(z / s)
            coeffs = [-c[k] * s ** (d - k) for k in range(d)] + [1.0]
            return Polynomial.normalized(coeffs)
        powers.append(v)
    raise AssertionError("unreachable: Cayley-Hamilton bounds the degree")


def annihilation_residual(p: Polynomial, M) -> float:
    """``|p(M)|_F`` measured for ``M / |M|_2`` (comparable with ``zero_tol * sqrt(n)``)."""
    M = as_matrix(M)
    s = opnorm(M)
    if s == 0:
        return fro(p(M))
    d = p.degree
    scaled = Polynomial(tuple(c / s ** (d - k) for k, c in enumerate(p.coeffs)))
    return fro(scaled(M / s))


def best_monic_residual(M, degree: int) -> float:
    """Smallest ``|q(M~)|_F`` over monic ``q`` of the given degree, ``M~ = M/|M|_2``."""
    M = as_matrix(M)
    for d, _, r in _krylov_powers(M, degree):
        if d == degree:
            return float(np.linalg.norm(r))
    raise ValueError("degree must be nonnegative")


def nilpotency_index(N, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None) -> int | None:
    """Least ``k <= n`` with ``|N^k| <= zero_tol * scale^k``, or ``None`` if not nilpotent.

    ``scale`` defaults to ``|N|_F``; pass the norms of the operands ``N``
    was built from (e.g. ``|A| |B|`` for ``N = [A, B]``) when ``N`` may be
    zero up to roundoff.
    """
    N = as_matrix(N)
    n = N.shape[0]
    s = fro(N) if scale is None else float(scale)
    if s == 0 or fro(N) <= tol.zero_tol * s:
        return 1
    Nt = N / s
    P = Nt.copy()
    for k in range(1, n + 1):
        if fro(P) <= tol.zero_tol:
            return k
        P = P @ Nt
    return None


def _eigen_condition_radii(M: np.ndarray, w: np.ndarray, vl: np.ndarray, vr: np.ndarray, scale: float):
    n = M.shape[0]
    kappa = np.empty(n)
    for i in range(n):
        y, x = vl[:, i], vr[:, i]
        denom = abs(np.vdot(y, x))
        kappa[i] = np.inf if denom == 0 else np.linalg.norm(x) * np.linalg.norm(y) / denom
    # first-order eigenvalue perturbation bound with a generous safety factor,
    # capped so exactly-defective eigenvalues do not swallow distant ones
    radius = np.minimum(1e4 * n * EPS * scale * kappa, 2e-3 * scale)
    return radius


def cluster_eigenvalues(M, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None):
    """Group computed eigenvalues into clusters.

    Single linkage: two eigenvalues merge when their distance is at most
    ``eig_cluster_tol * |M|`` plus the sum of their first-order perturbation
    radii (eigenvalue condition number times a backward-error budget). The
    second term is what keeps the split roots of a defective eigenvalue
    together.

    ``scale`` (at least ``|M|``) sets the size of roundoff to expect, for
    matrices that are compressions of larger operators.

    Returns a list of index arrays and the eigenvalues.
    """
    M = as_matrix(M)
    n = M.shape[0]
    w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    scale = max(opnorm(M), scale or 0.0)
    radius = _eigen_condition_radii(M, w, vl, vr, scale)
    base = tol.eig_cluster_tol * scale
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= base + radius[i] + radius[j]:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = [np.array(g) for g in groups.values()]
    clusters.sort(key=lambda g: (-len(g), -round(float(np.mean(w[g]).real), 8), -round(float(np.mean(w[g]).imag), 8)))
    return clusters, w


def eigen_decomposition(M, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None) -> list:
    """Clustered spectrum as ``[(eigenvalue, algebraic_multiplicity), ...]``.

    A cluster's eigenvalue is the mean of its members (the mean of a split
    defective eigenvalue is far more accurate than any single member).
    Ordered by decreasing multiplicity, then decreasing real and imaginary part.

    >>> eigen_decomposition(np.diag([1.0, 1.0, 2.0]))
    [((1+0j), 2), ((2+0j), 1)]
    """
    clusters, w = cluster_eigenvalues(M, tol, scale)
    out = []
    for g in clusters:
        lam = complex(np.mean(w[g]))
        # clean signed zeros and roundoff-level parts for readable output
        re = 0.0 if abs(lam.real) <= EPS * max(1.0, abs(lam)) else lam.real
        im = 0.0 if abs(lam.imag) <= EPS * max(1.0, abs(lam)) else lam.imag
        out.append((complex(re, im), len(g)))
    return out


def _kernel_of(X: np.ndarray, scale: float, rtol: float) -> np.ndarray:
    # absolute cutoff against a supplied scale (rank relative to the parent operator)
    if X.shape[1] == 0:
        return np.zeros((X.shape[1], 0), dtype=complex)
    _, s, Vh = np.linalg.svd(X)
    k = X.shape[1]
    s_full = np.zeros(k)
    s_full[: s.size] = s
    r = int(np.sum(s_full > rtol * scale)) if scale > 0 else 0
    return Vh[r:].conj().T


def generalized_eigenspace(
    M, lam, power: int, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None, rtol: float | None = None
) -> SubspaceBasis:
    """``ker (M - lam I)^power``.

    Built iteratively, ``K_{j+1} = {x : (M - lam) x in K_j}``, so that every
    rank decision is made on a matrix of the size of ``M - lam I`` rather than
    on its ``power``-th power. ``scale`` and ``rtol`` set the cutoff as in
    :func:`kernel` (defaults: ``|M - lam I|`` and the rank threshold).
    """
    if power < 1:
        raise ValueError("power must be >= 1")
    M = as_matrix(M)
    n = M.shape[0]
    X = M - lam * np.eye(n)
    scale = opnorm(X) if scale is None else scale
    rtol = tol.rank_threshold(n) if rtol is None else rtol
    K = np.zeros((n, 0), dtype=complex)
    for _ in range(power):
        proj_out = np.eye(n) - K @ K.conj().T
        newK = _kernel_of(proj_out @ X, scale, rtol)
        if newK.shape[1] == K.shape[1]:
            break
        K = newK
    return SubspaceBasis(_phase_normalize(K), tol)


def eigen_index(M, lam, tol: ToleranceContext = DEFAULT_TOL, scale: float | None = None, rtol: float | None = None) -> int:
    """Exponent of ``(z - lam)`` in the minimal polynomial (0 if ``lam`` is no eigenvalue)."""
    M = as_matrix(M)
    n = M.shape[0]
    prev = 0
    for p in range(1, n + 1):
        d = generalized_eigenspace(M, lam, p, tol, scale, rtol).dim
        if d == prev:
            return p - 1
        prev = d
    return n
