"""
Solving the all-uniform rank-1 system
=====================================

Every state in this instance is the uniform superposition ``|h>`` over
``N = 2**n`` basis states, and the matrix is ``I + |h><h|``. Its inverse
halves ``|h>``, so the overlap ``<h|x>`` is exactly 1/2 at every size.
"""

# %%
# Build the problem and solve it exactly. The solver reads the four
# overlaps off exact ancilla probabilities and combines them classically.
from qwoodbury import solver

for n in (2, 8, 20):
    report = solver.solve_rank1_overlap(solver.uniform_problem(n))
    print(f"n = {n:2d}  <z|x> = {report.overlap.real:.15f}  gamma = {report.gamma.real:.3f}")

# %%
# The same numbers come out of a dense solve when the register is small.
p = solver.uniform_problem(4)
print("dense oracle:", solver.dense_overlap(p))

# %%
# Sampled mode runs each Hadamard test for a finite number of shots.
# Here every test has P(0) = 1, so shot noise vanishes entirely and the
# sampled answer is still exactly 1/2.
cfg = solver.EstimationConfig(mode="sampled", shots=100_000, seed=1)
print("sampled:", solver.solve_rank1_overlap(p, cfg).overlap.real)

# %%
# A less symmetric instance shows genuine shot noise. Each estimate carries
# a propagated standard error.
import numpy as np

from qwoodbury import circuits as qc


def ry_layer(n, theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return qc.single_qubit_layer([np.array([[c, -s], [s, c]])] * n)


f = solver.LowRankFactors((0.8,), (ry_layer(2, 0.9),), (0.6,), (ry_layer(2, -0.4),))
rotated = solver.WoodburyProblem(f, ry_layer(2, 1.3), qc.uniform_preparer(2), declared_real=True)
for shots in (1_000, 10_000, 100_000):
    r = solver.solve(rotated, solver.EstimationConfig(mode="sampled", shots=shots, seed=3))
    print(f"{shots:>7d} shots: {r.overlap.real:.5f} +/- {r.std_error:.5f}"
          f"  (exact {solver.dense_overlap(rotated).real:.5f})")
