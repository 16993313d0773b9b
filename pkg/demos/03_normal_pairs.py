"""
A normal member
===============

When ``A`` is normal and ``A[A,B] = 0``, the splitting into ``ker A`` and its
orthogonal complement makes ``B`` block upper triangular and the two
operators commute on the complement. If ``B`` is normal too, they commute
outright and share an orthonormal eigenbasis.
"""

import numpy as np

from simtri import InstanceRecipe, analyze_normal_pair, commutator, generate_instance, verify_certificate

F = generate_instance(InstanceRecipe("normal_left_annihilate", dim=5, seed=3))
A, B = F.members
ana = analyze_normal_pair(A, B)
k = ana.splitting[0].dim
print(f"ker A has dimension {k}")
for key in ("B21", "[A22,B22]", "[A,B]^2"):
    print(f"  {key} residual: {ana.residuals[key]:.1e}")
print("  [A,B] itself:", f"{np.linalg.norm(commutator(A, B)):.3f}", "(need not vanish)")
print("triangularization verified:", verify_certificate(ana, F).overall)

G = generate_instance(InstanceRecipe("normal_pair", dim=4, seed=3))
ana = analyze_normal_pair(*G.members)
d = ana.diagonalization
print("\nboth normal: off-diagonal residual", f"{d.offdiag_residual:.1e}")
print("eigenvalues of A:", np.round(d.eigenvalues_A, 3))
print("eigenvalues of B:", np.round(d.eigenvalues_B, 3))
