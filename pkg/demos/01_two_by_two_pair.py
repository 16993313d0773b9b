"""
A non-commuting pair that is still triangularizable
===================================================

``A`` projects onto the first coordinate and ``B`` sends it to the second.
They do not commute, yet ``A[A,B] = [A,B]B = 0``, which is enough for a
common invariant line to exist.
"""

import numpy as np

from simtri import check_conditions, commutator, triangularize_shemesh, verify_certificate
from simtri.trieng import analyze_normal_pair

A = np.array([[1, 0], [0, 0]], dtype=complex)
B = np.array([[0, 0], [1, 0]], dtype=complex)

# The commutator is computed exactly in floating point.
C = commutator(A, B)
print("[A,B] =\n", C.real)

# Which hypotheses hold? Residuals are relative to the operand norms.
rep = check_conditions(A, B)
print("commuting:", rep.commuting, " A[A,B] = [A,B]B = 0:", rep.shemesh_left_right)
print("residuals:", {k: v for k, v in rep.residual_norms.items() if k in ("A[A,B]", "[A,B]B")})

# The split uses the kernel or range of one of the operators; here the range of B.
cert = triangularize_shemesh(A, B)
print("routes taken:", cert.routes)
print("basis change P =\n", cert.basis_change.real)
for name, R in zip("AB", cert.triangular_forms):
    print(f"P^-1 {name} P =\n", np.round(R.real, 12))

# Every claim is recomputed from (A, B, P) alone.
report = verify_certificate(cert, [A, B])
print("verified:", report.overall, " worst residual:", report.worst())

# A is normal with A[A,B] = 0, so the commutator squares to zero.
ana = analyze_normal_pair(A, B)
print("[A,B]^2 =\n", (C @ C).real + 0.0, "\nrelative residual:", ana.commutator_square_residual)
