"""
Noise, readout correction and zero-noise extrapolation
======================================================

Gate noise is modeled with random Pauli errors after every gate, and
readout with an asymmetric confusion matrix. Readout correction (MEM)
inverts the confusion matrix; zero-noise extrapolation (ZNE) reruns the
whole pipeline with every gate folded into ``G G^dag G`` and extrapolates
linearly back to zero noise.
"""

# %%
import numpy as np

from qwoodbury import estimator as est
from qwoodbury import simulator as sim
from qwoodbury import solver

noise = sim.NoiseModel.with_readout_error(p1=0.004, p2=0.004, e0=0.03, e1=0.05)
print(noise.to_json())

# %%
# MEM undoes a known readout channel exactly.
r = noise.confusion
true = np.array([0.7, 0.3])
print("observed:", r @ true, "corrected:", est.mem_correct(r @ true, r))

# %%
# The two-point extrapolation is exact for signals linear in the noise level.
print(est.zne_extrapolate(0.5 - 0.02, 0.5 - 0.06))

# %%
# Compare post-processing choices on the 4-qubit uniform instance over a few
# seeds. The exact answer is 0.5.
p = solver.uniform_problem(4)
for mode in ("none", "mem", "mem_zne"):
    errs = []
    for seed in range(5):
        cfg = solver.EstimationConfig(
            mode="sampled", shots=100_000, noise=noise, seed=seed,
            mitigation=est.MitigationConfig.from_noise(mode, noise),
        )
        errs.append(abs(solver.solve(p, cfg).overlap.real - 0.5) / 0.5)
    print(f"{mode:8s} median relative error {np.median(errs):.4f}")
