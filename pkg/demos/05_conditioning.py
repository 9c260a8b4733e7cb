"""
Condition number of a rank-1 update of the identity
===================================================

For real ``u`` and ``v`` the matrix ``I + u v^T`` has at most two singular
values different from 1. A closed form for the extreme pair is checked
here against a full SVD.
"""

# %%
import numpy as np

from qwoodbury import experiment, linalg

u = np.ones(8) / np.sqrt(8)
cc = linalg.conjectured_condition(u, u)
print(cc)
print("SVD:", linalg.singular_values(np.eye(8) + np.outer(u, u))[[0, -1]])

# %%
# Random trials. Any disagreement would be collected in the report rather
# than raised.
report = experiment.verify_conjecture(dim_max=256, trials=100, seed=0)
print(f"max relative deviation {report.max_deviation:.2e}, "
      f"{len(report.counterexamples)} counterexamples")
