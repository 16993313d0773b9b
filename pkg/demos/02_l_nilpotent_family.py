"""
Families whose iterated commutators die out
===========================================

Build a family whose iterated commutators vanish, then
triangularize it, split it into scalar-plus-nilpotent blocks and inspect the
algebra it generates.
"""

import numpy as np

from simtri import (
    InstanceRecipe,
    generate_algebra,
    generate_instance,
    iterated_commutators,
    jacobson_radical,
    quotient_scalar_map,
    scalar_diagonal_decomposition,
    triangularize_l_nilpotent,
    verify_certificate,
)

F = generate_instance(InstanceRecipe("l_nilpotent", dim=6, seed=5, blocks=4))
print("members:", F.labels, "dimension", F.dim)

# Layer k spans all brackets of depth k; the first empty layer gives the length.
layers = iterated_commutators(F)
print("layer dimensions:", [len(b) for b in layers.bases], " vanishes at depth", layers.vanished_at)

# Recursive splitting along common invariant subspaces.
cert = triangularize_l_nilpotent(F)
print("routes:", cert.routes)
print("below-diagonal residual:", f"{cert.residual:.2e}", " condition of P:", f"{cert.condition:.1f}")
print("certificate verified:", verify_certificate(cert, F).overall)

# Block form: each member is a scalar on every diagonal block plus a nilpotent part.
sdf = scalar_diagonal_decomposition(F)
print("block sizes:", sdf.block_dims)
for label, scalars in zip(F.labels, sdf.diagonal_scalars):
    print(f"  {label}:", np.round(scalars, 4))
print("block form verified:", verify_certificate(sdf, F).overall)

# The generated algebra: its radical is the strictly block-upper part,
# and the quotient is spanned by the distinct scalar tuples.
alg = jacobson_radical(generate_algebra(F))
q = quotient_scalar_map(alg, sdf)
print(f"algebra dim {alg.dim_algebra}, radical dim {alg.radical_dim}, "
      f"radical exponent {alg.radical_exponent}, quotient dim {alg.quotient_dim}")
print("distinct scalar tuples:", q.realized_dim)
