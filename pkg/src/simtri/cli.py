"""Command line front end.

Matrix families and run reports are JSON documents in which every complex
number is an explicit ``[re, im]`` pair, e.g.::

    {"dim": 2,
     "matrices": [{"name": "A", "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
                  {"name": "B", "entries": [[[0, 0], [0, 0]], [[1, 0], [0, 0]]]}],
     "tolerances": {"zero_tol": 1e-10}}

Exit status: 0 when the analysis completed (and verified, where that
applies), 1 on a failed hypothesis or verification, 2 on unusable input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .algstruct import AlgebraStructure, generate_algebra, jacobson_radical, quotient_scalar_map, verify_quotient_commutative
from .certify import KINDS, ConstructionFailure, InstanceRecipe, generate_instance, verify_certificate
from .commalg import OperatorFamily, family_report, l_nilpotency_length
from .matcore import DEFAULT_TOL, DimensionMismatch, InconsistencyError, SubspaceBasis, ToleranceContext
from .trieng import (
    MODES,
    Diagonalization,
    InvariantChain,
    NormalPairAnalysis,
    NumericalFailure,
    PreconditionError,
    RecursionMetrics,
    ScalarDiagonalForm,
    TriangularizationCertificate,
    scalar_diagonal_decomposition,
    triangularize,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
TOLERANCE_KEYS = ("rank_tol", "eig_cluster_tol", "zero_tol", "certify_tol")


class InputError(ValueError):
    """Unusable input file or arguments (exit status 2)."""


# ---------------------------------------------------------------------------
# encoding


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        return [encode_complex(z) for z in M]
    return [[encode_complex(z) for z in row] for row in M]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _decode_pair(pair, where: str) -> complex:
    if not (isinstance(pair, list) and len(pair) == 2 and all(_is_number(x) for x in pair)):
        raise InputError(f"{where}: expected [re, im] pair of finite numbers, got {json.dumps(pair)}")
    return complex(pair[0], pair[1])


def decode_vector(data, where: str) -> np.ndarray:
    if not isinstance(data, list):
        raise InputError(f"{where}: expected a list of [re, im] pairs")
    return np.array([_decode_pair(p, f"{where}, entry {i}") for i, p in enumerate(data)], dtype=complex)


def decode_matrix(data, where: str) -> np.ndarray:
    """Nested lists of ``[re, im]`` pairs to a complex 2-d array, with located errors."""
    if not isinstance(data, list):
        raise InputError(f"{where}: expected a list of rows")
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, list):
            raise InputError(f"{where}, row {i}: expected a list of [re, im] pairs")
        rows.append([_decode_pair(p, f"{where}, row {i}, column {j}") for j, p in enumerate(row)])
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise InputError(f"{where}: rows have different lengths {sorted(widths)}")
    width = widths.pop() if widths else 0
    return np.array(rows, dtype=complex).reshape(len(rows), width)


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise InputError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


@dataclass
class FamilyFile:
    family: OperatorFamily
    tolerances: dict
    extra: dict

    def to_dict(self) -> dict:
        d = family_to_dict(self.family, self.tolerances)
        d.update(self.extra)
        return d


def family_to_dict(F: OperatorFamily, tolerances: dict | None = None) -> dict:
    d = {
        "dim": F.dim,
        "matrices": [{"name": name, "entries": encode_matrix(M)} for name, M in zip(F.labels, F.members)],
    }
    if tolerances:
        d["tolerances"] = dict(tolerances)
    return d


def parse_family(data, where: str = "family") -> FamilyFile:
    if not isinstance(data, dict):
        raise InputError(f"{where}: top level must be an object")
    for key in ("dim", "matrices"):
        if key not in data:
            raise InputError(f"{where}: missing field {key!r}")
    dim = data["dim"]
    if not (isinstance(dim, int) and not isinstance(dim, bool) and dim >= 1):
        raise InputError(f"{where}: 'dim' must be a positive integer")
    mats = data["matrices"]
    if not isinstance(mats, list) or not mats:
        raise InputError(f"{where}: 'matrices' must be a nonempty list")
    names, members = [], []
    for k, entry in enumerate(mats):
        if not isinstance(entry, dict) or "entries" not in entry:
            raise InputError(f"{where}: matrix {k} needs an 'entries' field")
        name = str(entry.get("name", f"T{k + 1}"))
        if name in names:
            raise InputError(f"{where}: duplicate matrix name {name!r}")
        M = decode_matrix(entry["entries"], f"matrix {name!r}")
        if M.shape != (dim, dim):
            raise DimensionMismatch(f"matrix {name!r}: expected {dim}x{dim}, got {M.shape[0]}x{M.shape[1]}")
        names.append(name)
        members.append(M)
    tols = data.get("tolerances") or {}
    if not isinstance(tols, dict):
        raise InputError(f"{where}: 'tolerances' must be an object")
    for key, value in tols.items():
        if key not in TOLERANCE_KEYS:
            raise InputError(f"{where}: unknown tolerance {key!r} (known: {', '.join(TOLERANCE_KEYS)})")
        if value is not None and not (_is_number(value) and value >= 0):
            raise InputError(f"{where}: tolerance {key!r} must be a nonnegative number")
    extra = {k: v for k, v in data.items() if k not in ("dim", "matrices", "tolerances")}
    return FamilyFile(OperatorFamily(members, names), dict(tols), extra)


def read_family(path: str) -> FamilyFile:
    return parse_family(_load_json(path), path)


def digest(F: OperatorFamily) -> str:
    canonical = json.dumps(family_to_dict(F), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# result (de)serialization


def _subspace(Q) -> list:
    return encode_matrix(np.asarray(Q.vectors if isinstance(Q, SubspaceBasis) else Q))


def _num(x):
    return None if x is None else (float(x) if math.isfinite(x) else str(x))


def certificate_to_dict(c: TriangularizationCertificate) -> dict:
    return {
        "type": "triangularization",
        "producer": c.producer,
        "routes": list(c.routes),
        "labels": list(c.labels),
        "basis_change": encode_matrix(c.basis_change),
        "triangular_forms": [encode_matrix(R) for R in c.triangular_forms],
        "residual": _num(c.residual),
        "tolerance": c.tolerance,
        "condition": _num(c.condition),
        "chain_dims": c.chain.dims,
        "chain": [_subspace(S) for S in c.chain.subspaces],
    }


def _metrics_to_dict(m):
    if isinstance(m, RecursionMetrics):
        return {"s_value": m.s_value, "c_value": [_num(x) if isinstance(x, float) else x for x in m.c_value]}
    if isinstance(m, dict):
        return {k: _metrics_to_dict(v) for k, v in m.items()}
    if isinstance(m, list):
        return [_metrics_to_dict(v) for v in m]
    return m


def sdf_to_dict(s: ScalarDiagonalForm) -> dict:
    return {
        "type": "scalar_diagonal",
        "labels": list(s.labels),
        "block_dims": list(s.block_dims),
        "basis_change": encode_matrix(s.basis_change),
        "diagonal_scalars": [[encode_complex(z) for z in row] for row in s.diagonal_scalars],
        "nilpotent_parts": [encode_matrix(N) for N in s.nilpotent_parts],
        "projectors": [encode_matrix(E) for E in s.projectors],
        "block_residual": _num(s.block_residual),
        "tolerance": s.tolerance,
        "routes": list(s.routes),
        "metrics": _metrics_to_dict(s.metrics),
    }


def normal_to_dict(a: NormalPairAnalysis) -> dict:
    d = {
        "type": "normal_pair",
        "dual": a.dual,
        "injective": a.injective,
        "splitting": [_subspace(S) for S in a.splitting],
        "blocks": {k: encode_matrix(v) for k, v in a.blocks.items()},
        "residuals": {k: _num(v) for k, v in a.residuals.items()},
        "commutator_square_residual": _num(a.commutator_square_residual),
        "tolerance": a.tolerance,
        "certificate": certificate_to_dict(a.certificate),
        "diagonalization": None,
    }
    if a.diagonalization is not None:
        g = a.diagonalization
        d["diagonalization"] = {
            "unitary": encode_matrix(g.unitary),
            "eigenvalues_A": encode_matrix(g.eigenvalues_A),
            "eigenvalues_B": encode_matrix(g.eigenvalues_B),
            "offdiag_residual": _num(g.offdiag_residual),
        }
    return d


def algebra_to_dict(alg: AlgebraStructure, extra: dict | None = None) -> dict:
    d = {
        "type": "algebra",
        "ambient_dim": alg.ambient_dim,
        "dim_algebra": alg.dim_algebra,
        "radical_dim": alg.radical_dim,
        "radical_exponent": alg.radical_exponent,
        "quotient_dim": alg.quotient_dim,
        "words": [list(w) for w in alg.words],
        "basis": [encode_matrix(X) for X in alg.basis],
        "radical_basis": [encode_matrix(X) for X in alg.radical_basis or []],
        "radical_nilpotency": list(alg.radical_nilpotency),
    }
    d.update(extra or {})
    return d


def result_to_dict(result) -> dict:
    if isinstance(result, TriangularizationCertificate):
        return certificate_to_dict(result)
    if isinstance(result, ScalarDiagonalForm):
        return sdf_to_dict(result)
    if isinstance(result, NormalPairAnalysis):
        return normal_to_dict(result)
    if isinstance(result, AlgebraStructure):
        return algebra_to_dict(result)
    raise TypeError(type(result).__name__)


def _mat(d, key, where):
    if key not in d:
        raise InputError(f"{where}: missing field {key!r}")
    return decode_matrix(d[key], f"{where}.{key}")


def _float(x):
    return float(x) if not isinstance(x, str) else float(x.replace("Infinity", "inf"))


def certificate_from_dict(d: dict, tol: ToleranceContext, where="result") -> TriangularizationCertificate:
    P = _mat(d, "basis_change", where)
    chain = InvariantChain(P.shape[0], [SubspaceBasis(decode_matrix(S, f"{where}.chain"), tol) for S in d.get("chain", [])])
    return TriangularizationCertificate(
        basis_change=P,
        triangular_forms=[decode_matrix(R, f"{where}.triangular_forms") for R in d.get("triangular_forms", [])],
        residual=_float(d.get("residual", "inf")),
        chain=chain,
        tolerance=float(d.get("tolerance", tol.certify_tol)),
        producer=d.get("producer", ""),
        routes=list(d.get("routes", [])),
        condition=_float(d.get("condition", 1.0)),
        labels=tuple(d.get("labels", ())),
    )


def sdf_from_dict(d: dict, tol: ToleranceContext, where="result") -> ScalarDiagonalForm:
    return ScalarDiagonalForm(
        block_dims=[int(b) for b in d.get("block_dims", [])],
        basis_change=_mat(d, "basis_change", where),
        diagonal_scalars=[list(decode_vector(row, f"{where}.diagonal_scalars")) for row in d.get("diagonal_scalars", [])],
        nilpotent_parts=[decode_matrix(N, f"{where}.nilpotent_parts") for N in d.get("nilpotent_parts", [])],
        projectors=[decode_matrix(E, f"{where}.projectors") for E in d.get("projectors", [])],
        block_residual=_float(d.get("block_residual", "inf")),
        tolerance=float(d.get("tolerance", tol.certify_tol)),
        routes=list(d.get("routes", [])),
        metrics=d.get("metrics", []),
        labels=tuple(d.get("labels", ())),
    )


def normal_from_dict(d: dict, tol: ToleranceContext, where="result") -> NormalPairAnalysis:
    diag = None
    if d.get("diagonalization"):
        g = d["diagonalization"]
        diag = Diagonalization(
            _mat(g, "unitary", where),
            decode_vector(g.get("eigenvalues_A"), f"{where}.eigenvalues_A"),
            decode_vector(g.get("eigenvalues_B"), f"{where}.eigenvalues_B"),
            _float(g.get("offdiag_residual", "inf")),
        )
    K, Kp = (SubspaceBasis(decode_matrix(S, f"{where}.splitting"), tol) for S in d["splitting"])
    return NormalPairAnalysis(
        splitting=(K, Kp),
        blocks={k: decode_matrix(v, f"{where}.blocks") for k, v in d.get("blocks", {}).items()},
        residuals={k: _float(v) for k, v in d.get("residuals", {}).items()},
        commutator_square_residual=_float(d.get("commutator_square_residual", "inf")),
        certificate=certificate_from_dict(d["certificate"], tol, f"{where}.certificate"),
        injective=bool(d.get("injective")),
        diagonalization=diag,
        dual=bool(d.get("dual")),
        tolerance=float(d.get("tolerance", tol.certify_tol)),
    )


def algebra_from_dict(d: dict, tol: ToleranceContext, where="result") -> AlgebraStructure:
    n = int(d["ambient_dim"])
    basis = [decode_matrix(X, f"{where}.basis") for X in d.get("basis", [])]
    radical = [decode_matrix(X, f"{where}.radical_basis") for X in d.get("radical_basis", [])]

    def stack(ms):
        return np.column_stack([M.reshape(-1) for M in ms]) if ms else np.zeros((n * n, 0), dtype=complex)

    return AlgebraStructure(
        ambient_dim=n,
        basis=basis,
        words=[tuple(w) for w in d.get("words", [])],
        orthonormal=stack(basis),
        rounds=0,
        radical_basis=radical,
        radical_orthonormal=stack(radical),
        radical_exponent=d.get("radical_exponent"),
        quotient_dim=d.get("quotient_dim"),
        radical_nilpotency=list(d.get("radical_nilpotency", [])),
    )


def result_from_dict(d: dict, tol: ToleranceContext):
    if not isinstance(d, dict) or "type" not in d:
        raise InputError("report has no result object")
    kind = d["type"]
    try:
        if kind == "triangularization":
            return certificate_from_dict(d, tol)
        if kind == "scalar_diagonal":
            return sdf_from_dict(d, tol)
        if kind == "normal_pair":
            return normal_from_dict(d, tol)
        if kind == "algebra":
            return algebra_from_dict(d, tol)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed {kind} result: {exc}") from exc
    raise InputError(f"unknown result type {kind!r}")


# ---------------------------------------------------------------------------
# commands


@dataclass
class RunReport:
    command: str
    input_digest: str
    family: dict
    tolerances: dict
    condition_report: dict | None
    result: dict | None
    verification: dict | None
    timings: dict
    status: str
    message: str = ""
    extra: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "format": "simtri-run-report",
            "version": __version__,
            "command": self.command,
            "status": self.status,
            "message": self.message,
            "input_digest": self.input_digest,
            "tolerances": self.tolerances,
            "family": self.family,
            "condition_report": self.condition_report,
            "result": self.result,
            "verification": self.verification,
            "timings": self.timings,
        }
        if self.extra:
            d.update(self.extra)
        return d


def resolve_tolerances(file_tols: dict, args) -> ToleranceContext:
    values = DEFAULT_TOL.as_dict()
    values.update({k: v for k, v in (file_tols or {}).items() if v is not None})
    flags = {
        "rank_tol": getattr(args, "rank_tol", None),
        "eig_cluster_tol": getattr(args, "eig_tol", None),
        "zero_tol": getattr(args, "zero_tol", None),
        "certify_tol": getattr(args, "certify_tol", None),
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    try:
        return ToleranceContext(**values)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, complex):
        return encode_complex(obj)
    return obj


def _condition_dict(F: OperatorFamily, tol: ToleranceContext, max_depth) -> dict:
    return _jsonable(family_report(F, tol, max_depth).as_dict())


def _base(command, ff: FamilyFile, tol) -> dict:
    return {
        "command": command,
        "input_digest": digest(ff.family),
        "family": family_to_dict(ff.family, ff.tolerances),
        "tolerances": _jsonable(tol.as_dict()),
    }


def cmd_check(path: str, args) -> tuple:
    ff = read_family(path)
    tol = resolve_tolerances(ff.tolerances, args)
    t0 = time.perf_counter()
    cond = _condition_dict(ff.family, tol, args.max_depth)
    report = RunReport(
        **_base("check", ff, tol), condition_report=cond, result=None, verification=None,
        timings={"analysis_s": time.perf_counter() - t0}, status="ok",
    )
    return report, EXIT_OK


def cmd_triangularize(path: str, args) -> tuple:
    ff = read_family(path)
    tol = resolve_tolerances(ff.tolerances, args)
    F = ff.family
    base = _base("triangularize", ff, tol)
    t0 = time.perf_counter()
    cond = _condition_dict(F, tol, args.max_depth)
    try:
        mode, result = triangularize(F, args.mode, tol, args.max_depth)
    except PreconditionError as exc:
        return RunReport(
            **base, condition_report=cond, result=None, verification=None,
            timings={"analysis_s": time.perf_counter() - t0}, status="predicate_failed",
            message=f"{exc}; residuals: " + ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in exc.residuals.items()),
            extra={"residuals": _jsonable(exc.residuals)},
        ), EXIT_FAILED
    except (NumericalFailure, InconsistencyError) as exc:
        return RunReport(
            **base, condition_report=cond, result=None, verification=None,
            timings={"analysis_s": time.perf_counter() - t0}, status="numerical_failure", message=str(exc),
        ), EXIT_FAILED
    t1 = time.perf_counter()
    ver = verify_certificate(result, F, tol)
    t2 = time.perf_counter()
    res = result_to_dict(result)
    res["mode"] = mode
    report = RunReport(
        **base, condition_report=cond, result=res, verification=_jsonable(ver.as_dict()),
        timings={"analysis_s": t1 - t0, "verification_s": t2 - t1},
        status="verified" if ver.overall else "verification_failed",
        message=f"mode {mode}" + ("" if ver.overall else "; failed: " + ", ".join(c.name for c in ver.failed())),
    )
    return report, EXIT_OK if ver.overall else EXIT_FAILED


def cmd_algebra(path: str, args) -> tuple:
    ff = read_family(path)
    tol = resolve_tolerances(ff.tolerances, args)
    F = ff.family
    base = _base("algebra", ff, tol)
    t0 = time.perf_counter()
    try:
        alg = jacobson_radical(generate_algebra(F, tol), tol)
        qc = verify_quotient_commutative(alg, tol)
        extra = {"quotient_commutative": qc.commutative, "quotient_commutator_residual": _num(qc.max_residual)}
        if l_nilpotency_length(F, args.max_depth, tol) is not None:
            qm = quotient_scalar_map(alg, scalar_diagonal_decomposition(F, tol, args.max_depth), tol)
            extra["scalar_tuple_count"] = qm.realized_dim
            extra["scalar_tuples"] = [[encode_complex(z) for z in t] for t in qm.tuples]
        else:
            extra["scalar_tuple_count"] = None
    except (InconsistencyError, NumericalFailure) as exc:
        return RunReport(
            **base, condition_report=None, result=None, verification=None,
            timings={"analysis_s": time.perf_counter() - t0}, status="inconsistent", message=str(exc),
        ), EXIT_FAILED
    t1 = time.perf_counter()
    ver = verify_certificate(alg, F, tol)
    t2 = time.perf_counter()
    report = RunReport(
        **base, condition_report=None, result=_jsonable(algebra_to_dict(alg, extra)),
        verification=_jsonable(ver.as_dict()), timings={"analysis_s": t1 - t0, "verification_s": t2 - t1},
        status="verified" if ver.overall else "verification_failed",
        message=f"dim {alg.dim_algebra}, radical {alg.radical_dim}, exponent {alg.radical_exponent}, quotient {alg.quotient_dim}",
    )
    return report, EXIT_OK if ver.overall else EXIT_FAILED


def cmd_verify(report_path: str, args) -> tuple:
    data = _load_json(report_path)
    if not isinstance(data, dict):
        raise InputError(f"{report_path}: not a run report")
    for key in ("family", "result", "input_digest"):
        if key not in data:
            raise InputError(f"{report_path}: missing field {key!r}")
    ff = parse_family(data["family"], f"{report_path}: family")
    if digest(ff.family) != data["input_digest"]:
        raise InputError(f"{report_path}: input digest does not match the embedded family")
    if data["result"] is None:
        raise InputError(f"{report_path}: report has no result object to verify")
    produced_with = data.get("tolerances") or {}
    tol = resolve_tolerances(produced_with, args)
    result = result_from_dict(data["result"], tol)
    t0 = time.perf_counter()
    ver = verify_certificate(result, ff.family, tol)
    report = RunReport(
        command="verify",
        input_digest=data["input_digest"],
        family=data["family"],
        tolerances=_jsonable(tol.as_dict()),
        condition_report=None,
        result=None,
        verification=_jsonable(ver.as_dict()),
        timings={"verification_s": time.perf_counter() - t0},
        status="verified" if ver.overall else "verification_failed",
        message="" if ver.overall else "failed: " + ", ".join(c.name for c in ver.failed()),
        extra={"produced_with_tolerances": produced_with, "verified_report": report_path},
    )
    return report, EXIT_OK if ver.overall else EXIT_FAILED


def cmd_generate(args) -> tuple:
    recipe = InstanceRecipe(args.kind, args.dim, args.seed, violate=args.violate)
    try:
        F = generate_instance(recipe)
    except ConstructionFailure as exc:
        raise InputError(str(exc)) from exc
    d = family_to_dict(F)
    d["recipe"] = {"kind": recipe.kind, "dim": recipe.dim, "seed": recipe.seed, "violate": recipe.violate,
                   "log": recipe.construction_log}
    return d, EXIT_OK


# ---------------------------------------------------------------------------
# argument handling


def _decimal(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}")
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be finite and nonnegative: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simtri", description="Certified simultaneous triangularization of matrix families.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def tolerance_flags(p):
        p.add_argument("--rank-tol", type=_decimal, help="relative singular value cutoff")
        p.add_argument("--eig-tol", type=_decimal, help="eigenvalue clustering radius (relative)")
        p.add_argument("--zero-tol", type=_decimal, help="relative threshold for zero matrices")
        p.add_argument("--certify-tol", type=_decimal, help="threshold used when checking certificates")
        p.add_argument("--out", help="write the JSON report here instead of standard output")

    p = sub.add_parser("check", help="evaluate every hypothesis on a family")
    p.add_argument("path")
    p.add_argument("--max-depth", type=_positive_int)
    tolerance_flags(p)

    p = sub.add_parser("triangularize", help="certified simultaneous triangularization")
    p.add_argument("path")
    p.add_argument("--mode", choices=("auto",) + MODES, default="auto")
    p.add_argument("--max-depth", type=_positive_int)
    tolerance_flags(p)

    p = sub.add_parser("algebra", help="generated algebra, radical and quotient")
    p.add_argument("path")
    p.add_argument("--max-depth", type=_positive_int)
    tolerance_flags(p)

    p = sub.add_parser("verify", help="re-check the result stored in a run report")
    p.add_argument("path")
    tolerance_flags(p)

    p = sub.add_parser("generate", help="write a seeded instance as a family file")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--violate", action="store_true", help="break the hypothesis (negative control)")
    p.add_argument("--out")
    return parser


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=1)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            payload, code = cmd_generate(args)
            _emit(payload, args.out)
            return code
        command = {"check": cmd_check, "triangularize": cmd_triangularize, "algebra": cmd_algebra, "verify": cmd_verify}
        report, code = command[args.command](args.path, args)
    except (InputError, DimensionMismatch) as exc:
        print(f"simtri {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report.to_dict(), args.out)
    summary = f"simtri {args.command}: {report.status}"
    if report.message:
        summary += f" ({report.message})"
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
