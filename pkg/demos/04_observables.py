"""
Expectation values of the solution
==================================

``<x|O|x>`` for a Hermitian ``O`` written as a weighted sum of unitaries
needs three Hadamard-test overlaps per unitary on top of the two that fix
the rank-1 coefficient. The solution vector itself is never built.
"""

# %%
import numpy as np

from qwoodbury import circuits as qc
from qwoodbury import experiment, solver

# The identity observable gives the squared norm of x, which is 1/4 for the
# uniform instance.
ident = solver.HermitianLCU((1.0,), (qc.empty(2),))
print(solver.expectation_hermitian(solver.uniform_problem(2), ident).value)

# %%
# A Pauli-sum observable on a random complex instance, checked densely.
o = solver.HermitianLCU.from_paulis({"ZZ": 0.5, "XI": -1.0, "YX": 0.25})
p = experiment.random_problem(np.random.default_rng(4), qubits=2, rank=1)
r = solver.expectation_hermitian(p, o)
print("estimated:", r.value, "dense:", solver.dense_expectation(p, o))
print("imaginary residue:", r.imag_residue)
