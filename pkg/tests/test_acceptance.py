"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the terminal summary)
before asserting.
"""

import time

import numpy as np
import pytest

from qwoodbury import circuits as qc
from qwoodbury import estimator as est
from qwoodbury import simulator as sim
from qwoodbury.experiment import ExperimentConfig, oracle_check, random_problem, run_figure1, verify_conjecture
from qwoodbury.linalg import conjectured_condition, singular_values
from qwoodbury.solver import (
    EstimationConfig,
    HermitianLCU,
    LowRankFactors,
    WoodburyProblem,
    dense_expectation,
    dense_overlap,
    dense_solution,
    expectation_hermitian,
    solve_rank1_overlap,
    solve_rankk_overlap,
    uniform_problem,
)

from conftest import ACCEPTANCE_LINES

PAULI_LABELS = [a + b for a in "IXYZ" for b in "IXYZ"]


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def ry_layer(n, theta):
    ry = np.array([[np.cos(theta / 2), -np.sin(theta / 2)], [np.sin(theta / 2), np.cos(theta / 2)]])
    return qc.single_qubit_layer([ry] * n)


def rotated_problem(n=2):
    # real rank-1 instance with every Hadamard-test probability strictly inside (0, 1)
    f = LowRankFactors((0.8,), (ry_layer(n, 0.9),), (0.6,), (ry_layer(n, -0.4),))
    return WoodburyProblem(f, ry_layer(n, 1.3), qc.uniform_preparer(n), declared_real=True)


def propagated_sigma(p, shots):
    """First-order shot-noise sigma of the rank-1 overlap from exact overlaps."""
    e = solve_rank1_overlap(p).per_inner_product
    vals = {x.label: x.value.real for x in e}
    ab = p.factors.alphas[0] * p.factors.betas[0]
    g = ab / (1 + ab * vals["v0u0"])
    var = lambda m: (1 - m**2) / shots  # noqa: E731  variance of 2P(0) - 1
    return np.sqrt(
        var(vals["zb"])
        + abs(g * vals["zu0"]) ** 2 * var(vals["v0b"])
        + abs(g * g * vals["v0b"] * vals["zu0"]) ** 2 * var(vals["v0u0"])
        + abs(g * vals["v0b"]) ** 2 * var(vals["zu0"])
    )


def test_criterion_1_analytic_instance():
    t0 = time.perf_counter()
    rows = run_figure1(ExperimentConfig(sizes=tuple(range(2, 21))))
    elapsed = time.perf_counter() - t0
    worst = max(abs(r.estimate - 0.5) for r in rows)
    record(1, worst <= 1e-10 and elapsed < 10,
           f"exact <z|x> for log2N=2..20, max |err|={worst:.2e} (tol 1e-10), {elapsed:.2f}s (<10s)")


def test_criterion_2_sampled_precision():
    t0 = time.perf_counter()
    shots = 100_000
    cfg = lambda s: EstimationConfig(mode="sampled", shots=shots, seed=s)  # noqa: E731
    uni = np.array([solve_rank1_overlap(uniform_problem(4), cfg(s)).overlap.real for s in range(30)])
    mean_err = np.mean(np.abs(uni - 0.5))
    # on the uniform instance every test has P(0) = 1, so both sigmas vanish
    # (the propagated one only up to round-off in the exact overlaps)
    uni_ok = mean_err <= 0.01 and uni.std(ddof=1) == 0 and propagated_sigma(uniform_problem(4), shots) < 1e-8
    p = rotated_problem()
    exact = dense_overlap(p).real
    rot = np.array([solve_rank1_overlap(p, cfg(s)).overlap.real for s in range(30)])
    emp, prop = rot.std(ddof=1), propagated_sigma(p, shots)
    ratio = emp / prop
    rot_ok = np.mean(np.abs(rot - exact)) <= 0.01 and 0.5 <= ratio <= 2
    elapsed = time.perf_counter() - t0
    record(2, uni_ok and rot_ok and elapsed < 120,
           f"1e5 shots x 30 seeds: uniform mean|err|={mean_err:.2e} (sigma 0 = propagated 0); "
           f"rotated instance sigma_emp/sigma_prop={ratio:.2f} (within x2), {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_3_oracle_equivalence():
    t0 = time.perf_counter()
    r = oracle_check(200, 6, 4, seed=0)
    elapsed = time.perf_counter() - t0
    cases = ", ".join(f"{k}={v:.1e}" for k, v in r.max_delta_by_case.items())
    record(3, r.max_delta <= 1e-9 and elapsed < 120,
           f"200 instances, max |delta|={r.max_delta:.2e} (tol 1e-9) [{cases}], {elapsed:.1f}s")


def test_criterion_4_shot_plan():
    eps = 0.01
    plan = est.shot_plan(eps, 1, 1, 1, 1, 1)
    exact_counts = plan.as_tuple() == (10000, 2500, 625, 2500)
    cfg = lambda s: EstimationConfig(mode="sampled", plan=plan, seed=s)  # noqa: E731
    uni = [solve_rank1_overlap(uniform_problem(2), cfg(s)).overlap.real for s in range(50)]
    rot = [solve_rank1_overlap(rotated_problem(), cfg(s)).overlap.real for s in range(50)]
    s_uni, s_rot = np.std(uni, ddof=1), np.std(rot, ddof=1)
    record(4, exact_counts and s_uni <= 4 * eps and s_rot <= 4 * eps,
           f"plan={plan.as_tuple()}; MC sigma over 50 seeds uniform={s_uni:.2e}, "
           f"rotated={s_rot:.2e} (<= {4 * eps})")


@pytest.mark.slow
def test_criterion_5_conjecture():
    r = verify_conjecture(1024, 500, seed=0)
    u = np.ones(8) / np.sqrt(8)
    kappa = conjectured_condition(u, u).kappa
    s = singular_values(np.eye(8) + np.outer(u, u))
    canonical = abs(kappa - 2) < 1e-12 and abs(s[0] / s[-1] - 2) < 1e-12
    # counterexamples are reported, not failed
    record(5, canonical,
           f"500 trials dim<=1024: max dev={r.max_deviation:.2e} (tol 1e-8), "
           f"counterexamples={len(r.counterexamples)}; canonical kappa={kappa:.12f}")


@pytest.mark.slow
def test_criterion_6_zne():
    formula = all(est.zne_extrapolate(e1, e3) == e1 + (e1 - e3) / 2 for e1, e3 in [(0.9, 0.7), (0.3, -0.2), (1.0, 1.0)])
    rng = np.random.default_rng(6)
    lin = max(abs(est.zne_extrapolate(a + b, a + 3 * b) - a) for a, b in rng.uniform(-1, 1, (100, 2)))
    noise = sim.NoiseModel.with_readout_error(0.004, 0.004, 0.03, 0.05)
    p = uniform_problem(4)
    rel = {"none": [], "mem_zne": []}
    for s in range(20):
        for m in rel:
            cfg = EstimationConfig(mode="sampled", shots=100_000, noise=noise,
                                   mitigation=est.MitigationConfig.from_noise(m, noise), seed=s)
            rel[m].append(abs(solve_rank1_overlap(p, cfg).overlap.real - 0.5) / 0.5)
    med_none, med_zne = np.median(rel["none"]), np.median(rel["mem_zne"])
    record(6, formula and lin <= 1e-12 and med_zne <= 0.5 * med_none,
           f"formula exact, linear-signal max err={lin:.1e}; median rel err none={med_none:.4f}, "
           f"mem+zne={med_zne:.4f} (n=4, 20 paired seeds)")


def test_criterion_7_mem():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        e0, e1 = rng.uniform(0, 0.3, 2)
        r = np.array([[1 - e0, e1], [e0, 1 - e1]])
        pt = rng.dirichlet([1, 1])
        worst = max(worst, np.max(np.abs(est.mem_correct(r @ pt, r) - pt)))
    noise = sim.NoiseModel.with_readout_error(0.0, 0.0, 0.03, 0.05)
    mit = est.MitigationConfig.from_noise("mem", noise)
    p = rotated_problem()
    exact = dense_overlap(p).real
    vals = np.array([
        solve_rank1_overlap(p, EstimationConfig(mode="sampled", shots=100_000, noise=noise,
                                                mitigation=mit, seed=s)).overlap.real
        for s in range(30)
    ])
    z = abs(vals.mean() - exact) / (vals.std(ddof=1) / np.sqrt(30))
    record(7, worst <= 1e-10 and z <= 4,
           f"round trip max err={worst:.1e} (tol 1e-10); readout-only MEM bias = {z:.2f} sigma (<= 4)")


def test_criterion_8_structural_counts(monkeypatch):
    real = est.estimate_inner_product
    calls = []

    def spy(*a, **kw):
        calls.append(kw["label"])
        return real(*a, **kw)

    monkeypatch.setattr(est, "estimate_inner_product", spy)
    rng = np.random.default_rng(8)
    counts = {}
    for k in (1, 2, 3, 4):
        calls.clear()
        solve_rankk_overlap(random_problem(rng, 2, k))
        counts[k] = len(calls)
    ok = all(counts[k] == k * k + 2 * k + 1 for k in counts)
    record(8, ok, f"inner-product estimations per k: {counts} (expected k^2+2k+1)")


def test_criterion_9_expectation():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        coeffs = rng.normal(size=16)
        o = HermitianLCU.from_paulis(dict(zip(PAULI_LABELS, coeffs)))
        p = random_problem(rng, 2, 1)
        worst = max(worst, abs(expectation_hermitian(p, o).value - dense_expectation(p, o)))
    ident = HermitianLCU((1.0,), (qc.empty(2),))
    p = uniform_problem(2)
    norm2 = float(np.vdot(dense_solution(p), dense_solution(p)).real)
    got = expectation_hermitian(p, ident).value
    record(9, worst <= 1e-9 and abs(got - norm2) <= 1e-9 and abs(norm2 - 0.25) <= 1e-12,
           f"Pauli-sum max |err|={worst:.1e} (tol 1e-9); O=I gives {got:.12f}, ||x||^2={norm2:.12f}")
