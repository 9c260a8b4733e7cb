"""
Higher-rank updates and a unitary base matrix
=============================================

For ``A + U C V`` with rank ``k`` the solver estimates ``k**2 + 2k + 1``
overlaps and inverts a ``k x k`` capacitance matrix classically. When
``A`` is a unitary circuit ``Q``, each overlap gets ``Q^dag`` inserted.
"""

# %%
import numpy as np

from qwoodbury import circuits as qc
from qwoodbury import experiment, solver

rng = np.random.default_rng(0)
p = experiment.random_problem(rng, qubits=3, rank=3)
r = solver.solve(p)
print("rank 3:", r.overlap, "dense:", solver.dense_overlap(p))
print("overlaps estimated:", len(r.per_inner_product))
print("capacitance condition number:", r.capacitance_condition)

# %%
# A random unitary base matrix.
p = experiment.random_problem(rng, qubits=3, rank=2, unitary_a=True)
print("unitary A:", solver.solve(p).overlap, "dense:", solver.dense_overlap(p))

# %%
# ``X`` on every qubit leaves the uniform state alone, so the uniform
# instance with ``A = X...X`` still gives 1/2.
u = solver.uniform_problem(4)
q = solver.WoodburyProblem(u.factors, u.b_preparer, u.z_preparer, a_unitary=qc.pauli_circuit("XXXX"))
print("A = XXXX:", solver.solve(q).overlap)

# %%
# Problems serialize to JSON, which is what the ``qwoodbury solve`` command reads.
print(q.to_json()[:120], "...")
