"""Independent checks and seeded instance generators.

:func:`verify_certificate` recomputes every claim of a certificate from the
family and the basis change alone. :func:`burnside_reducibility_oracle`
decides reducibility of small families two ways and insists they agree.
:func:`generate_instance` builds families satisfying a chosen hypothesis.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .algstruct import (
    AlgebraStructure,
    generate_algebra,
    ideal_residual,
    jacobson_radical,
    product_closure_residual,
    radical_power_residual,
)
from .commalg import OperatorFamily, as_family, check_conditions, l_nilpotency_length
from .matcore import (
    DEFAULT_TOL,
    EPS,
    SubspaceBasis,
    ToleranceContext,
    commutator,
    eigen_decomposition,
    fro,
    generalized_eigenspace,
    kernel,
    opnorm,
    relative,
)
from .trieng import NormalPairAnalysis, ScalarDiagonalForm, TriangularizationCertificate


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    threshold: float

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "residual": float(self.residual), "threshold": float(self.threshold)}


@dataclass
class VerificationReport:
    checks: list
    context: str

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def worst(self, prefix: str = "") -> float:
        vals = [c.residual for c in self.checks if c.name.startswith(prefix)]
        return max(vals) if vals else 0.0

    def as_dict(self) -> dict:
        return {"context": self.context, "overall": self.overall, "checks": [c.as_dict() for c in self.checks]}


class _Checks(list):
    def add(self, name, residual, threshold):
        residual = float(residual)
        self.append(Check(name, bool(residual <= threshold), residual, float(threshold)))


def _recompute_forms(P, members):
    return [np.linalg.solve(P, T @ P) for T in members]


def _basis_checks(checks: _Checks, P: np.ndarray, n: int):
    if P.shape != (n, n):
        checks.append(Check("basis_shape", False, np.inf, 0.0))
        return False
    cond = np.linalg.cond(P)
    # reciprocal condition number against a loose floor
    checks.add("basis_invertible", 1e3 * EPS * cond if np.isfinite(cond) else np.inf, 1.0)
    return np.isfinite(cond)


def _power_sum_residual(T: np.ndarray, diag: np.ndarray) -> float:
    """Max over k <= n of |tr T^k - sum d_i^k| / (n |T|_2^k)."""
    n = T.shape[0]
    s = opnorm(T)
    if s == 0:
        return float(np.max(np.abs(diag))) if diag.size else 0.0
    X = T / s
    d = diag / s
    P = np.eye(n, dtype=complex)
    worst = 0.0
    for k in range(1, n + 1):
        P = P @ X
        worst = max(worst, abs(np.trace(P) - np.sum(d**k)) / n)
    return worst


def _triangular_checks(checks: _Checks, cert: TriangularizationCertificate, F: OperatorFamily, t: float):
    n = F.dim
    P = np.asarray(cert.basis_change, dtype=complex)
    if not _basis_checks(checks, P, n):
        return
    forms = _recompute_forms(P, F.members)
    stored = list(cert.triangular_forms)
    if len(stored) != len(F):
        checks.append(Check("forms_count", False, np.inf, 0.0))
    for i, (T, R) in enumerate(zip(F.members, forms)):
        s = fro(T)
        checks.add(f"triangular[{i}]", relative(fro(np.tril(R, -1)), s), t)
        if i < len(stored):
            checks.add(f"forms_match[{i}]", relative(fro(np.asarray(stored[i]) - R), s), t)
        checks.add(f"spectrum[{i}]", _power_sum_residual(T, np.diag(R)), t)
    # the stored chain, checked directly
    chain = cert.chain
    dims = [S.dim for S in chain.subspaces]
    checks.add("chain_maximal", 0.0 if dims == list(range(1, n)) else 1.0, 0.0)
    for k, S in enumerate(chain.subspaces):
        Q = np.asarray(S.vectors, dtype=complex)
        Pi = Q @ Q.conj().T
        I = np.eye(n)
        inv = max(relative(fro((I - Pi) @ T @ Pi), fro(T)) for T in F.members)
        checks.add(f"invariance[{S.dim}]", inv, t)
        lead = np.linalg.qr(P[:, : S.dim])[0]
        checks.add(f"chain_matches_basis[{S.dim}]", opnorm(lead @ lead.conj().T - Pi), t)
        if k > 0:
            prev = np.asarray(chain.subspaces[k - 1].vectors)
            checks.add(f"chain_nested[{S.dim}]", opnorm(prev - Pi @ prev), t)
    for i in range(len(F)):
        for j in range(i + 1, len(F)):
            A, B = F[i], F[j]
            D = np.linalg.solve(P, commutator(A, B) @ P)
            checks.add(f"commutator_diagonal[{i},{j}]", relative(float(np.max(np.abs(np.diag(D)))), fro(A), fro(B)), t)


def _sdf_checks(checks: _Checks, sdf: ScalarDiagonalForm, F: OperatorFamily, t: float):
    n = F.dim
    blocks = list(sdf.block_dims)
    checks.add("blocks_sum", abs(sum(blocks) - n), 0)
    if sum(blocks) != n or any(b <= 0 for b in blocks):
        return
    P = np.asarray(sdf.basis_change, dtype=complex)
    if not _basis_checks(checks, P, n):
        return
    edges = np.cumsum([0] + blocks)
    slices = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    m = len(blocks)
    proj_sum = np.zeros((n, n), dtype=complex)
    for i, (E, sl) in enumerate(zip(sdf.projectors, slices)):
        E = np.asarray(E)
        expect = np.zeros((n, n))
        expect[sl, sl] = np.eye(sl.stop - sl.start)
        checks.add(f"projector[{i}]", fro(E - expect), t)
        proj_sum = proj_sum + E
    checks.add("projectors_sum", fro(proj_sum - np.eye(n)), t)
    for j, T in enumerate(F.members):
        s = fro(T)
        R = np.linalg.solve(P, T @ P)
        lams = sdf.diagonal_scalars[j]
        N = R.copy()
        worst_block, worst_lower = 0.0, 0.0
        for i, sl in enumerate(slices):
            d = sl.stop - sl.start
            worst_block = max(worst_block, relative(fro(R[sl, sl] - lams[i] * np.eye(d)), s))
            N[sl, sl] -= lams[i] * np.eye(d)
            for k in range(i):
                worst_lower = max(worst_lower, relative(fro(R[sl, slices[k]]), s))
        checks.add(f"scalar_blocks[{j}]", worst_block, t)
        checks.add(f"block_upper[{j}]", worst_lower, t)
        checks.add(f"nilpotent_match[{j}]", relative(fro(np.asarray(sdf.nilpotent_parts[j]) - N), s), t)
        Nn = N / s if s > 0 else N
        checks.add(f"nilpotent_power[{j}]", fro(np.linalg.matrix_power(Nn, m)), t)


def _normal_checks(checks: _Checks, ana: NormalPairAnalysis, F: OperatorFamily, t: float):
    A, B = F.members
    sa, sb = fro(A), fro(B)
    _triangular_checks(checks, ana.certificate, F, t)
    X, Y = (B.conj().T, A.conj().T) if ana.dual else (A, B)
    K = np.asarray(ana.splitting[0].vectors, dtype=complex)
    Kp = np.asarray(ana.splitting[1].vectors, dtype=complex)
    Q = np.hstack([K, Kp])
    n = A.shape[0]
    checks.add("splitting_unitary", opnorm(Q.conj().T @ Q - np.eye(n)), t)
    sx, sy = fro(X), fro(Y)
    checks.add("kernel", relative(fro(X @ K), sx), t)
    k = K.shape[1]
    Yp = Q.conj().T @ Y @ Q
    Xp = Q.conj().T @ X @ Q
    checks.add("B21", relative(fro(Yp[k:, :k]), sy), t)
    checks.add("[A22,B22]", relative(fro(commutator(Xp[k:, k:], Yp[k:, k:])), sx, sy), t)
    C = commutator(A, B)
    checks.add("[A,B]^2", relative(fro(C @ C), sa, sb, sa, sb), t)
    if ana.diagonalization is not None:
        U = np.asarray(ana.diagonalization.unitary, dtype=complex)
        checks.add("diag_unitary", opnorm(U.conj().T @ U - np.eye(n)), t)
        DA, DB = U.conj().T @ A @ U, U.conj().T @ B @ U
        checks.add("offdiag_A", relative(fro(DA - np.diag(np.diag(DA))), sa), t)
        checks.add("offdiag_B", relative(fro(DB - np.diag(np.diag(DB))), sb), t)
        checks.add("eigenvalues_A", relative(float(np.max(np.abs(np.diag(DA) - ana.diagonalization.eigenvalues_A))), sa), t)
        checks.add("eigenvalues_B", relative(float(np.max(np.abs(np.diag(DB) - ana.diagonalization.eigenvalues_B))), sb), t)
        checks.add("commute", relative(fro(C), sa, sb), t)


def _algebra_checks(checks: _Checks, alg: AlgebraStructure, F: OperatorFamily, tol: ToleranceContext):
    t = tol.certify_tol
    n = F.dim
    Q = np.column_stack([np.asarray(X).reshape(-1) for X in alg.basis]) if alg.basis else np.zeros((n * n, 0))
    checks.add("basis_orthonormal", opnorm(Q.conj().T @ Q - np.eye(Q.shape[1])) if Q.size else 0.0, t)
    # the stored span against one regenerated from the family
    fresh = generate_algebra(F, tol)
    checks.add("dim_algebra", abs(fresh.dim_algebra - alg.dim_algebra), 0)
    gens = [alg.span_residual(T) for T in F.members]
    checks.add("generators_in_span", max(gens, default=0.0), t)
    if fresh.dim_algebra == alg.dim_algebra and Q.size:
        Pf = fresh.orthonormal @ fresh.orthonormal.conj().T
        checks.add("span_matches", opnorm(Pf - Q @ Q.conj().T), t)
    checks.add("product_closed", product_closure_residual(alg), t)
    if alg.radical_basis is None:
        return
    R = alg.radical_basis
    checks.add("radical_in_algebra", max((alg.span_residual(X) for X in R), default=0.0), t)
    trace_form = max((abs(np.trace(X @ Y)) for X in R for Y in alg.basis), default=0.0)
    checks.add("radical_trace_orthogonal", trace_form, t)
    checks.add("radical_ideal", ideal_residual(alg), t)
    checks.add("radical_power", radical_power_residual(alg, tol=tol), t)
    if alg.radical_exponent and alg.radical_exponent > 1:
        # minimality: one power lower must not vanish
        checks.add("radical_exponent_minimal", 0.0 if radical_power_residual(alg, alg.radical_exponent - 1, tol) > t else 1.0, 0.0)
    checks.add("quotient_dim", abs(alg.dim_algebra - len(R) - (alg.quotient_dim or 0)), 0)


def verify_certificate(cert, F, tol: ToleranceContext = DEFAULT_TOL) -> VerificationReport:
    """Re-derive every claim of ``cert`` about ``F`` from scratch.

    Works for :class:`TriangularizationCertificate`,
    :class:`ScalarDiagonalForm`, :class:`NormalPairAnalysis` and
    :class:`AlgebraStructure`; failures are report entries, never exceptions.
    """
    F = as_family(F)
    checks = _Checks()
    t = tol.certify_tol
    try:
        if isinstance(cert, TriangularizationCertificate):
            context = f"triangularization ({cert.producer or 'unknown'})"
            _triangular_checks(checks, cert, F, t)
        elif isinstance(cert, ScalarDiagonalForm):
            context = "scalar_diagonal_decomposition"
            _sdf_checks(checks, cert, F, t)
        elif isinstance(cert, NormalPairAnalysis):
            context = "normal_pair_dual" if cert.dual else "normal_pair"
            if len(F) != 2:
                checks.append(Check("pair", False, np.inf, 0.0))
            else:
                _normal_checks(checks, cert, F, t)
        elif isinstance(cert, AlgebraStructure):
            context = "algebra"
            _algebra_checks(checks, cert, F, tol)
        else:
            raise TypeError(f"cannot verify {type(cert).__name__}")
    except (ValueError, np.linalg.LinAlgError, IndexError) as exc:
        checks.append(Check(f"error: {exc}", False, np.inf, 0.0))
        context = type(cert).__name__
    return VerificationReport(list(checks), context)


# ---------------------------------------------------------------------------
# Burnside oracle

ORACLE_DIM_CAP = 6


class OracleDisagreement(RuntimeError):
    pass


@dataclass
class OracleResult:
    reducible: bool
    algebra_dim: int
    witness: SubspaceBasis | None
    witness_route: str
    invariance_residual: float

    def __bool__(self):
        return self.reducible


def _invariant_residual(mats, Q):
    if Q.shape[1] == 0:
        return 0.0
    n = Q.shape[0]
    Pi = Q @ Q.conj().T
    return max((relative(fro((np.eye(n) - Pi) @ X @ Q), fro(X)) for X in mats), default=0.0)


def _common_eigenvectors(mats, tol: ToleranceContext, Q=None, depth=0):
    """Depth-first intersection of eigenspaces; returns a basis of common eigenvectors or None."""
    n = mats[0].shape[0] if mats else 0
    if Q is None:
        Q = np.eye(n, dtype=complex)
    if depth == len(mats):
        return Q
    X = mats[depth]
    for lam, _ in eigen_decomposition(X, tol):
        # eigenvectors of X inside span(Q)
        Mx = (X - lam * np.eye(n)) @ Q
        scale = max(opnorm(X - lam * np.eye(n)), opnorm(X))
        _, s, Vh = np.linalg.svd(Mx)
        sfull = np.zeros(Q.shape[1])
        sfull[: s.size] = s
        keep = sfull <= 1e-7 * max(scale, 1e-300)
        if not np.any(keep):
            continue
        W = Q @ Vh[keep].conj().T
        W, _ = np.linalg.qr(W)
        found = _common_eigenvectors(mats, tol, W, depth + 1)
        if found is not None:
            return found
    return None


def _commutant(mats, n):
    """Basis of {X : X M = M X for all M}."""
    I = np.eye(n)
    rows = [np.kron(M, I) - np.kron(I, M.T) for M in mats]
    L = np.vstack(rows) if rows else np.zeros((0, n * n))
    if L.shape[0] == 0:
        return [np.eye(n)]
    _, s, Vh = np.linalg.svd(L)
    sfull = np.zeros(n * n)
    sfull[: s.size] = s
    top = sfull[0] if sfull[0] > 0 else 1.0
    null = Vh[sfull <= 1e-9 * top]
    return [v.conj().reshape(n, n) for v in null]


def _candidate_subspaces(mats, tol: ToleranceContext):
    """Proper subspaces that may be invariant, found without counting dimensions."""
    n = mats[0].shape[0]
    # 1. a common eigenvector of the algebra basis
    V = _common_eigenvectors(mats, tol)
    if V is not None and V.shape[1] > 0:
        yield V[:, :1], "common_eigenvector"
    # 2. a nonscalar element of the commutant: its eigenspaces are invariant
    for X in _commutant(mats, n):
        sx = fro(X)
        if fro(X - np.trace(X) / n * np.eye(n)) > 1e-6 * sx:
            for lam, _ in eigen_decomposition(X, tol):
                Q = generalized_eigenspace(X, lam, 1, tol, sx, 1e-8).vectors
                if 0 < Q.shape[1] < n:
                    yield Q, "commutant_eigenspace"
    # 3. a nonzero nilpotent ideal R of the unital algebra: R V is proper
    unital = generate_algebra(list(mats) + [np.eye(n)], tol)
    rad = jacobson_radical(unital, tol)
    if rad.radical_basis:
        U, s, _ = np.linalg.svd(np.hstack(rad.radical_basis), full_matrices=False)
        r = int(np.sum(s > 1e-8 * s[0])) if s.size and s[0] > 0 else 0
        if 0 < r < n:
            yield U[:, :r], "radical_range"


def _structural_invariant_subspace(mats, members, tol: ToleranceContext):
    """First candidate that the members leave invariant within ``certify_tol``."""
    for Q, route in _candidate_subspaces(mats, tol):
        res = _invariant_residual(members, Q)
        if res <= tol.certify_tol:
            return Q, route, res
    return None, "none", np.inf


def burnside_reducibility_oracle(F, tol: ToleranceContext = DEFAULT_TOL, dim_cap: int = ORACLE_DIM_CAP) -> OracleResult:
    """Reducibility of a small family, decided twice.

    Sub-oracle one: the unital algebra generated by ``F`` is smaller than the
    full matrix algebra. Sub-oracle two: an explicit proper invariant subspace
    is found (common eigenvector, commutant eigenspace, or radical range) and
    checked. Over the complex numbers the two must agree.
    """
    F = as_family(F)
    n = F.dim
    if n > dim_cap:
        raise ValueError(f"oracle limited to dim <= {dim_cap}, got {n}")
    if n == 1:
        return OracleResult(False, 1, None, "one_dimensional", 0.0)
    alg = generate_algebra(list(F.members) + [np.eye(n)], tol)
    by_dimension = alg.dim_algebra < n * n
    mats = alg.basis
    Q, route, residual = _structural_invariant_subspace(mats, list(F.members), tol)
    by_search = Q is not None
    if by_dimension != by_search:
        raise OracleDisagreement(
            f"algebra dimension {alg.dim_algebra} of {n * n} but invariant-subspace search says "
            f"{'reducible' if by_search else 'irreducible'} (route {route}, residual {residual:.3e})"
        )
    witness = SubspaceBasis(Q, tol) if by_search else None
    return OracleResult(by_dimension, alg.dim_algebra, witness, route, residual if by_search else 0.0)


# ---------------------------------------------------------------------------
# instance generators

KINDS = (
    "commuting",
    "l_nilpotent",
    "shemesh_lr",
    "shemesh_ll",
    "normal_left_annihilate",
    "normal_pair",
    "jacobson",
    "putnam",
)


class ConstructionFailure(RuntimeError):
    pass


@dataclass
class InstanceRecipe:
    kind: str
    dim: int
    seed: int = 0
    violate: bool = False
    kappa_max: float = 100.0
    blocks: int | None = None  # l_nilpotent: number of diagonal blocks
    construction_log: list = field(default_factory=list)


def _rng(recipe: InstanceRecipe, attempt: int) -> np.random.Generator:
    tag = zlib.crc32(recipe.kind.encode())
    return np.random.default_rng([recipe.seed, recipe.dim, tag, attempt, int(recipe.violate)])


def _cnormal(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(rng, n: int) -> np.ndarray:
    Z = _cnormal(rng, n, n)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_similarity(rng, n: int, kappa_max: float = 100.0) -> np.ndarray:
    """``U diag(s) V*`` with singular values in ``[1, kappa_max]``."""
    s = np.exp(rng.uniform(0.0, np.log(kappa_max), n))
    s[0] = 1.0
    return random_unitary(rng, n) @ np.diag(s) @ random_unitary(rng, n).conj().T


def _separated_scalars(rng, count: int, min_sep: float = 0.3) -> np.ndarray:
    for _ in range(1000):
        z = _cnormal(rng, count) * 1.5
        if count < 2 or min(abs(a - b) for i, a in enumerate(z) for b in z[i + 1:]) >= min_sep:
            return z
    raise ConstructionFailure("could not draw separated scalars")


def _composition(rng, n: int, parts: int) -> list:
    cuts = sorted(rng.choice(np.arange(1, n), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0] + [int(c) for c in cuts] + [n]
    return [b - a for a, b in zip(edges[:-1], edges[1:])]


def direct_sum(*blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def _conjugate(S, mats):
    Sinv = np.linalg.inv(S)
    return [S @ M @ Sinv for M in mats]


def _poly_of(rng, X, max_degree=3):
    n = X.shape[0]
    deg = int(rng.integers(1, max_degree + 1))
    c = _cnormal(rng, deg + 1)
    out = np.zeros((n, n), dtype=complex)
    P = np.eye(n, dtype=complex)
    for k in range(deg + 1):
        out = out + c[k] * P
        P = P @ X
    return out


def _build_commuting(rng, recipe, log):
    n = recipe.dim
    X = _cnormal(rng, n, n) / np.sqrt(n)
    r = int(rng.integers(2, 4))
    log.append(f"{r} random polynomials of one random {n}x{n} matrix")
    return [_poly_of(rng, X) for _ in range(r)]


def _build_l_nilpotent(rng, recipe, log):
    n = recipe.dim
    m = recipe.blocks or int(rng.integers(2, min(4, n) + 1))
    m = min(m, n)
    sizes = _composition(rng, n, m)
    # contiguous groups of blocks; at least one group holds two or more blocks
    if m == 1:
        groups = [[0]]
    else:
        ngroups = int(rng.integers(1, m))
        gsizes = _composition(rng, m, ngroups)
        groups, b = [], 0
        for g in gsizes:
            groups.append(list(range(b, b + g)))
            b += g
    r = int(rng.integers(2, 4))
    edges = np.cumsum([0] + sizes)
    members = []
    for _ in range(r):
        lams = _separated_scalars(rng, len(groups))
        M = np.zeros((n, n), dtype=complex)
        for gi, g in enumerate(groups):
            for p in g:
                sp = slice(edges[p], edges[p + 1])
                M[sp, sp] = lams[gi] * np.eye(sizes[p])
                for q in g:
                    if q > p:
                        sq = slice(edges[q], edges[q + 1])
                        M[sp, sq] = _cnormal(rng, sizes[p], sizes[q])
        members.append(M)
    S = random_similarity(rng, n, recipe.kappa_max)
    log.append(f"block sizes {sizes}, groups {groups}, {r} members, conjugated (cond {np.linalg.cond(S):.1f})")
    return _conjugate(S, members)


def _zero_product_pair(rng, k):
    """Random ``(A, B)`` with ``AB = 0``: ``A`` kills the range of ``B``."""
    rank = int(rng.integers(1, k))
    B = _cnormal(rng, k, rank) @ _cnormal(rng, rank, k)
    Ub, _, _ = np.linalg.svd(B)
    Pi = Ub[:, :rank] @ Ub[:, :rank].conj().T
    A = _cnormal(rng, k, k) @ (np.eye(k) - Pi)
    return A, B


def _ll_zero_product_pair(rng, k):
    """``AB = 0`` and ``B^2 A = 0``."""
    B = _cnormal(rng, k, k - 1) @ _cnormal(rng, k - 1, k)
    Ub, _, _ = np.linalg.svd(B)
    Pi = Ub[:, : k - 1] @ Ub[:, : k - 1].conj().T
    _, s, Vh = np.linalg.svd(B @ B)
    Kb = Vh[np.sum(s > 1e-12 * s[0]):].conj().T
    A = Kb @ _cnormal(rng, Kb.shape[1], k) @ (np.eye(k) - Pi)
    return A, B


def _pair_blocks(rng, recipe, log, kind):
    n = recipe.dim
    Apieces, Bpieces, names = [], [], []
    remaining = n
    noncommuting = 0
    while remaining > 0:
        options = []
        if remaining >= 2:
            options += ["golden", "zero_product"] if kind == "lr" else ["annihilated_pair", "ll_zero_product"]
        if noncommuting > 0 or remaining < 2:
            options += ["commuting"]
        choice = options[int(rng.integers(len(options)))]
        a, b = _cnormal(rng, 2)
        if choice == "golden":
            A = a * np.array([[1, 0], [0, 0]]); B = b * np.array([[0, 0], [1, 0]])
        elif choice == "annihilated_pair":
            A = a * np.array([[0, 0], [0, 1]]); B = b * np.array([[0, 1], [0, 0]])
        elif choice in ("zero_product", "ll_zero_product"):
            k = int(rng.integers(2, remaining + 1))
            A, B = (_zero_product_pair if choice == "zero_product" else _ll_zero_product_pair)(rng, k)
        else:
            k = int(rng.integers(1, remaining + 1))
            X = _cnormal(rng, k, k)
            A, B = _poly_of(rng, X), _poly_of(rng, X)
        if choice != "commuting":
            noncommuting += 1
        Apieces.append(np.asarray(A, dtype=complex))
        Bpieces.append(np.asarray(B, dtype=complex))
        names.append(f"{choice}({A.shape[0]})")
        remaining -= A.shape[0]
    S = random_similarity(rng, n, recipe.kappa_max)
    log.append(f"direct sum {' + '.join(names)}, conjugated (cond {np.linalg.cond(S):.1f})")
    return _conjugate(S, [direct_sum(*Apieces), direct_sum(*Bpieces)])


def _grouped_values(rng, count, nonzero=True):
    distinct = int(rng.integers(1, count + 1))
    vals = _separated_scalars(rng, distinct)
    if nonzero:
        vals = np.where(np.abs(vals) < 0.3, vals + 1.0, vals)
    idx = np.sort(np.concatenate([np.arange(distinct), rng.integers(0, distinct, count - distinct)]))
    return vals[idx], idx


def _build_normal_left_annihilate(rng, recipe, log):
    n = recipe.dim
    k = int(rng.integers(1, n))
    a, groups = _grouped_values(rng, n - k)
    A = direct_sum(np.zeros((k, k), dtype=complex), np.diag(a))
    B = np.zeros((n, n), dtype=complex)
    B[:k, :k] = _cnormal(rng, k, k)
    B[:k, k:] = _cnormal(rng, k, n - k)
    for g in np.unique(groups):
        pos = k + np.flatnonzero(groups == g)
        B[np.ix_(pos, pos)] = _cnormal(rng, len(pos), len(pos))
    W = random_unitary(rng, n)
    log.append(f"ker A of dim {k}, A22 eigenvalue groups {np.bincount(groups).tolist()}, unitary rotation")
    return [W @ A @ W.conj().T, W @ B @ W.conj().T]


def _build_normal_pair(rng, recipe, log):
    n = recipe.dim
    a, groups = _grouped_values(rng, n, nonzero=False)
    B = np.zeros((n, n), dtype=complex)
    for g in np.unique(groups):
        pos = np.flatnonzero(groups == g)
        V = random_unitary(rng, len(pos))
        B[np.ix_(pos, pos)] = V @ np.diag(_cnormal(rng, len(pos))) @ V.conj().T
    W = random_unitary(rng, n)
    log.append(f"common eigenbasis, A eigenvalue groups {np.bincount(groups).tolist()}")
    return [W @ np.diag(a) @ W.conj().T, W @ B @ W.conj().T]


def _build_jacobson(rng, recipe, log):
    # A = sum of (l_i + J_i), B = sum of c_i diag(0..k-1) + q(A): [A,B] = sum c_i J_i commutes with A
    n = recipe.dim
    nb = int(rng.integers(1, min(3, n - 1) + 1))
    sizes = _composition(rng, n, nb)  # fewer blocks than n: some block has size >= 2
    lams = _separated_scalars(rng, nb)
    Ablocks, Dblocks = [], []
    for lam, k in zip(lams, sizes):
        Ablocks.append(lam * np.eye(k) + np.diag(np.ones(k - 1), 1))
        Dblocks.append(_cnormal(rng, 1)[0] * np.diag(np.arange(k, dtype=float)))
    A = direct_sum(*Ablocks)
    B = direct_sum(*Dblocks) + _poly_of(rng, A)
    S = random_similarity(rng, n, recipe.kappa_max)
    log.append(f"Jordan blocks {sizes}, shift/position pairs plus a polynomial in A, conjugated")
    return _conjugate(S, [A, B])


def ad_squared_nullspace(A: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Basis (as flattened rows) of ``{X : [A, [A, X]] = 0}``."""
    n = A.shape[0]
    I = np.eye(n)
    ad = np.kron(A, I) - np.kron(I, A.T)  # row-major vec: vec(AX - XA)
    L = ad @ ad
    _, s, Vh = np.linalg.svd(L)
    return Vh[s <= rtol * s[0]].conj()


def _build_putnam(rng, recipe, log):
    n = recipe.dim
    a = _separated_scalars(rng, n, 0.5)
    A = np.diag(a)
    N = ad_squared_nullspace(A)
    B = (_cnormal(rng, N.shape[0]) @ N).reshape(n, n)
    log.append(f"A diagonal with distinct eigenvalues; B drawn from ker ad_A^2 (dim {N.shape[0]})")
    return [A, B]


_BUILDERS = {
    "commuting": _build_commuting,
    "l_nilpotent": _build_l_nilpotent,
    "shemesh_lr": lambda rng, r, log: _pair_blocks(rng, r, log, "lr"),
    "shemesh_ll": lambda rng, r, log: _pair_blocks(rng, r, log, "ll"),
    "normal_left_annihilate": _build_normal_left_annihilate,
    "normal_pair": _build_normal_pair,
    "jacobson": _build_jacobson,
    "putnam": _build_putnam,
}


def target_residual(kind: str, F, tol: ToleranceContext = DEFAULT_TOL) -> float:
    """The residual of the hypothesis ``kind`` is built to satisfy (0 means holds exactly)."""
    F = as_family(F)
    if kind == "commuting":
        worst = 0.0
        for i in range(len(F)):
            for j in range(i + 1, len(F)):
                worst = max(worst, relative(fro(commutator(F[i], F[j])), fro(F[i]), fro(F[j])))
        return worst
    if kind == "l_nilpotent":
        k = l_nilpotency_length(F, None, tol.replace(zero_tol=tol.zero_tol / 10))
        return 0.0 if k is not None else np.inf
    rep = check_conditions(F[0], F[1], tol)
    r = rep.residual_norms
    if kind == "shemesh_lr":
        return max(r["A[A,B]"], r["[A,B]B"])
    if kind == "shemesh_ll":
        return max(r["A[A,B]"], r["B[A,B]"])
    if kind == "normal_left_annihilate":
        return max(r["normal_A"], r["A[A,B]"])
    if kind == "normal_pair":
        return max(r["normal_A"], r["normal_B"], r["A[A,B]"])
    if kind in ("jacobson", "putnam"):
        return r["[A,[A,B]]"]
    raise ValueError(f"unknown kind {kind!r}")


def predicate_holds(kind: str, F, tol: ToleranceContext = DEFAULT_TOL) -> bool:
    return target_residual(kind, F, tol) <= tol.zero_tol


def _violate(rng, kind, members, log):
    members = list(members)
    j = 1 if len(members) > 1 else 0
    if kind == "normal_left_annihilate" and rng.random() < 0.5:
        j = 0  # break normality of A instead
    if kind == "l_nilpotent":
        # a generic matrix destroys L-nilpotency
        members[j] = members[j] + 0.3 * fro(members[j]) / members[j].shape[0] * _cnormal(rng, *members[j].shape)
    else:
        E = _cnormal(rng, *members[j].shape)
        members[j] = members[j] + 1e-3 * fro(members[j]) * E / fro(E)
    log.append(f"violated: perturbed member {j}")
    return members


def generate_instance(recipe: InstanceRecipe, tol: ToleranceContext = DEFAULT_TOL, retries: int = 10) -> OperatorFamily:
    """Seeded family satisfying (or, with ``violate``, breaking) the hypothesis ``kind``.

    ``(kind, dim, seed, violate)`` fully determines the output. Unless
    violated, the emitted family's hypothesis residual is at most
    ``zero_tol / 10``.
    """
    if recipe.kind not in _BUILDERS:
        raise ValueError(f"unknown kind {recipe.kind!r}; choose from {KINDS}")
    if recipe.dim < 2:
        raise ValueError("dim must be >= 2")
    headroom = tol.zero_tol / 10
    last = None
    for attempt in range(retries):
        rng = _rng(recipe, attempt)
        log = []
        members = _BUILDERS[recipe.kind](rng, recipe, log)
        # normalize the overall scale
        members = [M / max(fro(M), 1e-300) * np.sqrt(recipe.dim) if fro(M) > 0 else M for M in members]
        if recipe.violate:
            members = _violate(rng, recipe.kind, members, log)
            recipe.construction_log = log
            return OperatorFamily(members, _labels(len(members)))
        res = target_residual(recipe.kind, members, tol)
        last = res
        if res <= headroom:
            log.append(f"hypothesis residual {res:.2e} <= {headroom:.1e} (attempt {attempt})")
            recipe.construction_log = log
            return OperatorFamily(members, _labels(len(members)))
    raise ConstructionFailure(f"{recipe.kind}: residual {last:.3e} above {headroom:.1e} after {retries} attempts")


def _labels(r):
    return ["A", "B"] if r == 2 else [f"A{i + 1}" for i in range(r)]
