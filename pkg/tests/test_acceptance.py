"""Acceptance criteria 1-8, one test each, with a PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed under "acceptance criteria" at the end of the session.
"""

import copy
import itertools
import json
import time

import numpy as np

from simtri.algstruct import (
    generate_algebra,
    ideal_residual,
    jacobson_radical,
    product_closure_residual,
    quotient_scalar_map,
    radical_power_residual,
    verify_quotient_commutative,
)
from simtri.certify import (
    KINDS,
    InstanceRecipe,
    OracleDisagreement,
    burnside_reducibility_oracle,
    generate_instance,
    predicate_holds,
    verify_certificate,
)
from simtri.cli import EXIT_FAILED, EXIT_OK, main
from simtri.commalg import check_conditions
from simtri.matcore import commutator, fro, nilpotency_index
from simtri.trieng import (
    analyze_normal_pair,
    scalar_diagonal_decomposition,
    triangularize_l_nilpotent,
    triangularize_left_annihilated,
    triangularize_shemesh,
)

TOL = 1e-8


def rel(x, *scales):
    return x / max(np.prod(scales), 1e-300)


def l_nilpotent_suite():
    """200 recipes with dims 2-8 and block counts 2-4 (never more blocks than the dimension)."""
    out = []
    for seed in range(200):
        n = 2 + seed % 7
        m = min(n, 2 + (seed // 7) % 3)
        out.append(InstanceRecipe("l_nilpotent", n, seed, blocks=m))
    return out


_SUITE = {}


def suite_instances():
    if not _SUITE:
        _SUITE["F"] = [(r, generate_instance(r)) for r in l_nilpotent_suite()]
    return _SUITE["F"]


# ---------------------------------------------------------------------------


def test_criterion_1_golden_example(acceptance):
    t0 = time.perf_counter()
    A = np.array([[1, 0], [0, 0]], dtype=complex)
    B = np.array([[0, 0], [1, 0]], dtype=complex)
    C = commutator(A, B)
    exact = np.array_equal(C, np.array([[0, 0], [-1, 0]]))
    rep = check_conditions(A, B)
    left = rep.residual_norms["A[A,B]"]
    cert = triangularize_shemesh(A, B)
    verified = verify_certificate(cert, [A, B]).overall and cert.producer == "shemesh"
    square_zero = np.array_equal(C @ C, np.zeros((2, 2))) and analyze_normal_pair(A, B).commutator_square_residual == 0.0
    elapsed = time.perf_counter() - t0
    ok = exact and left <= 1e-12 and rep.shemesh_left_right and verified and square_zero and elapsed < 1.0
    acceptance(1, ok, f"[A,B] exact={exact}, A[A,B]={left:.1e}, verified={verified} routes={cert.routes}, "
                      f"[A,B]^2=0 {square_zero}, {elapsed:.3f}s")
    assert ok


def test_criterion_2_l_nilpotent_triangularization(acceptance):
    t0 = time.perf_counter()
    failures, worst_lower, worst_diag = [], 0.0, 0.0
    for r, F in suite_instances():
        cert = triangularize_l_nilpotent(F)
        ver = verify_certificate(cert, F)
        P = cert.basis_change
        lower = max(rel(fro(np.tril(np.linalg.solve(P, T @ P), -1)), fro(T)) for T in F.members)
        diag = 0.0
        for X, Y in itertools.combinations(F.members, 2):
            D = np.linalg.solve(P, commutator(X, Y) @ P)
            diag = max(diag, rel(np.max(np.abs(np.diag(D))), fro(X), fro(Y)))
        worst_lower, worst_diag = max(worst_lower, lower), max(worst_diag, diag)
        if not (ver.overall and lower <= TOL and diag <= TOL):
            failures.append(r.seed)
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    acceptance(2, ok, f"{200 - len(failures)}/200 verified, lower {worst_lower:.1e}, "
                      f"commutator diagonal {worst_diag:.1e}, {elapsed:.1f}s")
    assert ok, failures[:10]


def test_criterion_3_scalar_diagonal_form(acceptance):
    failures, worst_block, worst_nil = [], 0.0, 0.0
    for r, F in suite_instances():
        sdf = scalar_diagonal_decomposition(F)
        P = sdf.basis_change
        edges = np.cumsum([0] + list(sdf.block_dims))
        m = len(sdf.block_dims)
        block, nil = 0.0, 0.0
        for j, T in enumerate(F.members):
            R = np.linalg.solve(P, T @ P)
            N = R.copy()
            for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
                lam = sdf.diagonal_scalars[j][i]
                block = max(block, rel(fro(R[a:b, a:b] - lam * np.eye(b - a)), fro(T)))
                N[a:b, a:b] -= lam * np.eye(b - a)
            nil = max(nil, fro(np.linalg.matrix_power(N / fro(T), m)))
        worst_block, worst_nil = max(worst_block, block), max(worst_nil, nil)
        if not (verify_certificate(sdf, F).overall and block <= TOL and nil <= TOL):
            failures.append(r.seed)
    ok = not failures
    acceptance(3, ok, f"{200 - len(failures)}/200, block residual {worst_block:.1e}, N^m {worst_nil:.1e}")
    assert ok, failures[:10]


def test_criterion_4_algebra_structure(acceptance):
    failures = []
    for r, F in suite_instances():
        alg = jacobson_radical(generate_algebra(F))
        sdf = scalar_diagonal_decomposition(F)
        comm = max(
            (alg.span_residual(commutator(X, Y), radical=True) * fro(commutator(X, Y))
             for X, Y in itertools.combinations(alg.basis, 2)),
            default=0.0,
        )
        checks = [
            product_closure_residual(alg) <= TOL,
            ideal_residual(alg) <= TOL,
            all(nilpotency_index(R, scale=1.0) is not None for R in alg.radical_basis),
            radical_power_residual(alg) <= TOL,
            comm <= TOL,
            verify_quotient_commutative(alg).commutative,
            quotient_scalar_map(alg, sdf).realized_dim == alg.quotient_dim,
            verify_certificate(alg, F).overall,
        ]
        if not all(checks):
            failures.append((r.seed, checks))
    ok = not failures
    acceptance(4, ok, f"{200 - len(failures)}/200 closed, nilpotent ideal, commutators in radical, quotient = tuple count")
    assert ok, failures[:10]


def test_criterion_5_pair_theorems(acceptance):
    solvers = {"shemesh_lr": triangularize_shemesh, "shemesh_ll": triangularize_left_annihilated}
    summary, failures, disagreements = [], [], 0
    for kind, solve in solvers.items():
        good = 0
        for seed in range(200):
            F = generate_instance(InstanceRecipe(kind, 2 + seed % 5, seed))
            verified = verify_certificate(solve(*F.members), F).overall
            try:
                reducible = burnside_reducibility_oracle(F).reducible
            except OracleDisagreement:
                disagreements += 1
                reducible = False
            if verified and reducible:
                good += 1
            else:
                failures.append((kind, seed))
        summary.append(f"{kind} {good}/200")
    ok = not failures and disagreements == 0
    acceptance(5, ok, ", ".join(summary) + f", oracle disagreements {disagreements}")
    assert ok, failures[:10]


def test_criterion_6_normal_pairs(acceptance):
    failures, worst = [], {"B21": 0.0, "[A22,B22]": 0.0, "[A,B]^2": 0.0, "offdiag": 0.0, "[A,B]": 0.0}
    for seed in range(100):
        F = generate_instance(InstanceRecipe("normal_left_annihilate", 2 + seed % 6, seed))
        A, B = F.members
        ana = analyze_normal_pair(A, B)
        C = commutator(A, B)
        sq = rel(fro(C @ C), fro(A), fro(B), fro(A), fro(B))
        vals = {"B21": ana.residuals["B21"], "[A22,B22]": ana.residuals["[A22,B22]"], "[A,B]^2": sq}
        for k, v in vals.items():
            worst[k] = max(worst[k], v)
        if max(vals.values()) > TOL or not verify_certificate(ana, F).overall:
            failures.append(("normal_left_annihilate", seed))
    for seed in range(100):
        F = generate_instance(InstanceRecipe("normal_pair", 2 + seed % 6, seed))
        A, B = F.members
        ana = analyze_normal_pair(A, B)
        d = ana.diagonalization
        U = d.unitary if d is not None else np.eye(F.dim)
        off = max(rel(fro(X - np.diag(np.diag(X))), fro(M)) for M in (A, B) for X in [U.conj().T @ M @ U])
        comm = rel(fro(A @ B - B @ A), fro(A), fro(B))
        worst["offdiag"], worst["[A,B]"] = max(worst["offdiag"], off), max(worst["[A,B]"], comm)
        if d is None or off > TOL or comm > TOL or not verify_certificate(ana, F).overall:
            failures.append(("normal_pair", seed))
    ok = not failures
    acceptance(6, ok, f"{200 - len(failures)}/200, " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok, failures[:10]


def test_criterion_7_background_identities(acceptance):
    failures, worst_index, worst_comm = [], 0, 0.0
    for seed in range(100):
        n = 2 + seed % 6
        F = generate_instance(InstanceRecipe("jacobson", n, seed))
        A, B = F.members
        k = nilpotency_index(commutator(A, B), scale=fro(A) * fro(B))
        if k is None or k > n:
            failures.append(("jacobson", seed))
        else:
            worst_index = max(worst_index, k)
    for seed in range(100):
        F = generate_instance(InstanceRecipe("putnam", 2 + seed % 6, seed))
        A, B = F.members
        distinct = len(set(np.round(np.diag(A), 6))) == F.dim and np.array_equal(A, np.diag(np.diag(A)))
        comm = rel(fro(commutator(A, B)), fro(A), fro(B))
        worst_comm = max(worst_comm, comm)
        if not distinct or comm > TOL:
            failures.append(("putnam", seed))
    ok = not failures
    acceptance(7, ok, f"{200 - len(failures)}/200, largest commutator index {worst_index}, "
                      f"diagonal-case commutator {worst_comm:.1e}")
    assert ok, failures[:10]


def tampered_reports(tmp_path):
    """100 fresh reports, each damaged in one of four ways."""
    kinds = ["l_nilpotent", "commuting", "shemesh_lr", "shemesh_ll", "normal_left_annihilate"]
    rng = np.random.default_rng(2024)
    for case in range(100):
        kind = kinds[case % len(kinds)]
        gen = tmp_path / f"g{case}.json"
        main(["generate", "--kind", kind, "--dim", str(3 + case % 4), "--seed", str(case), "--out", str(gen)])
        out = tmp_path / f"r{case}.json"
        assert main(["triangularize", str(gen), "--out", str(out)]) == EXIT_OK
        rep = json.loads(out.read_text())
        res = copy.deepcopy(rep["result"])
        cert = res["certificate"] if "certificate" in res else res
        how = case % 4
        if how == 0:  # perturb the basis change
            P = np.array(cert["basis_change"], dtype=float)
            P = P + 1e-3 * rng.standard_normal(P.shape)
            cert["basis_change"] = P.tolist()
        elif how == 1:  # reverse the basis
            cert["basis_change"] = [row[::-1] for row in cert["basis_change"]]
        elif how == 2:  # alter a stored triangular form
            F0 = np.array(cert["triangular_forms"][0], dtype=float)
            F0[0, -1, 0] += 1e-3 * (1 + abs(F0[0, -1, 0]))
            cert["triangular_forms"][0] = F0.tolist()
        else:  # swap two basis columns
            cert["basis_change"] = [[row[1], row[0]] + row[2:] for row in cert["basis_change"]]
        rep["result"] = res
        bad = tmp_path / f"t{case}.json"
        bad.write_text(json.dumps(rep))
        yield case, str(bad)


def test_criterion_8_negative_controls(acceptance, tmp_path):
    rejected = {}
    for kind in KINDS:
        rejected[kind] = sum(
            not predicate_holds(kind, generate_instance(InstanceRecipe(kind, 2 + seed % 6, seed, violate=True)))
            for seed in range(100)
        )
    caught = 0
    for case, path in tampered_reports(tmp_path):
        caught += main(["verify", path, "--out", str(tmp_path / f"v{case}.json")]) == EXIT_FAILED
    ok = all(v >= 99 for v in rejected.values()) and caught == 100
    acceptance(8, ok, "rejected " + ", ".join(f"{k} {v}/100" for k, v in rejected.items()) + f"; tampered caught {caught}/100")
    assert ok
