"""Gram-rank thresholds and a decompose/reconstruct round trip."""
import numpy as np

from fe_workbench.tensors import decompose, enumerate_monomials, generic_vectors, independence, lemma_thresholds

rng = np.random.default_rng(1)
for m in (1, 2, 3):
    q = generic_vectors(m, rng)
    lo, hi = lemma_thresholds(m)
    verdicts = {r: independence(q, r).independent for r in range(1, hi + 1)}
    print(f"m={m}: independent up to r={lo}, dependent at r={hi}: {verdicts}")

q = generic_vectors(2, rng)
F = np.einsum("i,j->ij", q[0], q[1]) + 0.5 * np.eye(4)
dec = decompose(F, q, 2)
for t, c in zip(dec.monomials, dec.coefficients):
    print(f"  {t.code}: {c:+.3f}")
print("residual", dec.residual, "basis size", len(enumerate_monomials(2, 2)))
