import itertools
import json
from functools import reduce

import numpy as np
import pytest

from qwoodbury import circuits as qc
from qwoodbury import simulator as sim
from qwoodbury.simulator import NoiseModel, apply, exact_ancilla_statistic, sample

from conftest import random_state

PAULI = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]


def gate_unitary(g, n):
    """Full matrix of one gate, built from projectors (independent of the simulator)."""
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    dim = 2**n
    total = np.zeros((dim, dim), dtype=complex)
    controls = g.controls
    m = g.base_matrix()
    for bits in itertools.product((0, 1), repeat=len(controls)):
        ops = [np.eye(2)] * n
        for c, bit in zip(controls, bits):
            ops[c] = p1 if bit else p0
        if all(bits):
            ops[g.target] = m
        total += reduce(np.kron, ops)
    return total


def channel_statistic(c: qc.CircuitSpec, noise: NoiseModel) -> float:
    """Exact noisy ancilla P(0) - P(1) by density-matrix evolution."""
    n = c.qubit_count
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    for g in c.gates:
        u = gate_unitary(g, n)
        rho = u @ rho @ u.conj().T
        k = len(g.targets)
        p = noise.p1 if k == 1 else noise.p2
        if p:
            acc = np.zeros_like(rho)
            for code in itertools.product(range(4), repeat=k):
                if not any(code):
                    continue
                ops = [np.eye(2)] * n
                for q, d in zip(g.targets, code):
                    ops[q] = PAULI[d]
                P = reduce(np.kron, ops)
                acc += P @ rho @ P.conj().T
            rho = (1 - p) * rho + p / (4**k - 1) * acc
    half = 2 ** (n - 1)
    p0 = np.trace(rho[:half, :half]).real
    r = noise.confusion
    obs0 = r[0, 0] * p0 + r[0, 1] * (1 - p0)
    return 2 * obs0 - 1


def uniform_test_circuit(n, part="real"):
    u = qc.uniform_preparer(n)
    prep, w = qc.overlap_test_pair(u, u)
    return qc.hadamard_test(prep, w, part)


def rotated_test_circuit(n, theta=0.7):
    ry = np.array([[np.cos(theta / 2), -np.sin(theta / 2)], [np.sin(theta / 2), np.cos(theta / 2)]])
    a = qc.uniform_preparer(n)
    b = qc.single_qubit_layer([ry] * n)
    prep, w = qc.overlap_test_pair(a, b)
    return qc.hadamard_test(prep, w)


class TestApply:
    def test_h(self):
        out = apply(qc.CircuitSpec(1, (qc.Gate("H", (0,)),)), sim.zero_state(1))
        np.testing.assert_allclose(out, [2**-0.5, 2**-0.5])

    def test_cx(self):
        out = apply(qc.CircuitSpec(2, (qc.Gate("CX", (0, 1)),)), np.array([0, 0, 1, 0]))
        np.testing.assert_allclose(out, [0, 0, 0, 1])

    def test_norm_after_many_gates(self, rng):
        c = qc.random_circuit(6, 1000, rng)
        assert np.linalg.norm(apply(c, random_state(rng, 6))) == pytest.approx(1.0, abs=1e-10)

    def test_matches_gate_products(self, rng):
        c = qc.random_circuit(4, 30, rng)
        u = reduce(lambda acc, g: gate_unitary(g, 4) @ acc, c.gates, np.eye(16))
        psi = random_state(rng, 4)
        np.testing.assert_allclose(apply(c, psi), u @ psi, atol=1e-10)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            apply(qc.empty(2), np.ones(8) / np.sqrt(8))


class TestExactStatistic:
    def test_identity(self):
        assert exact_ancilla_statistic(qc.hadamard_test(qc.empty(1), qc.empty(1))) == pytest.approx(1)

    def test_x(self):
        x = qc.CircuitSpec(1, (qc.Gate("X", (0,)),))
        assert exact_ancilla_statistic(qc.hadamard_test(qc.empty(1), x)) == pytest.approx(0, abs=1e-15)

    def test_consistent_with_sampling(self, rng):
        c = qc.hadamard_test(qc.random_circuit(3, 10, rng), qc.random_circuit(3, 10, rng))
        m = exact_ancilla_statistic(c)
        r = sample(c, 100_000, seed=5)
        sigma = np.sqrt((1 - m**2) / 100_000)
        assert abs(r.statistic - m) < 5 * sigma


class TestMethodsAgree:
    @pytest.mark.parametrize("n", [1, 2, 5, 8, 12])
    def test_product_vs_statevector_uniform(self, n):
        for part in ("real", "imag"):
            c = uniform_test_circuit(n, part)
            assert sim.is_product_form(c)
            a = exact_ancilla_statistic(c, "product")
            b = exact_ancilla_statistic(c, "statevector")
            assert a == pytest.approx(b, abs=1e-10)

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_product_vs_statevector_random_layers(self, rng, n):
        from scipy.stats import unitary_group

        a = qc.single_qubit_layer([unitary_group.rvs(2, random_state=rng) for _ in range(n)])
        b = qc.single_qubit_layer([unitary_group.rvs(2, random_state=rng) for _ in range(n)])
        prep, w = qc.overlap_test_pair(a, b)
        for c in (qc.hadamard_test(prep, w), qc.fold(qc.hadamard_test(prep, w, "imag"), 1)):
            assert exact_ancilla_statistic(c, "product") == pytest.approx(
                exact_ancilla_statistic(c, "statevector"), abs=1e-10
            )

    def test_patterns_agree(self, rng):
        c = rotated_test_circuit(4)
        comp = {m: sim._Compiled(c, m) for m in ("dense", "product", "statevector")}
        for _ in range(20):
            k = int(rng.integers(1, 4))
            gates = sorted(rng.choice(len(c), size=k, replace=False).tolist())
            pattern = tuple((g, int(rng.integers(1, 4 ** len(c.gates[g].targets)))) for g in gates)
            vals = [comp[m].p0(pattern) for m in comp]
            assert max(vals) - min(vals) < 1e-10

    def test_product_rejects_entangling(self):
        c = qc.CircuitSpec(3, (qc.Gate("CX", (1, 2)),))
        assert not sim.is_product_form(c)
        with pytest.raises(ValueError):
            exact_ancilla_statistic(c, "product")

    @pytest.mark.parametrize("n", [24, 26])
    def test_large_uniform_via_product(self, n):
        assert exact_ancilla_statistic(uniform_test_circuit(n)) == pytest.approx(1.0, abs=1e-10)

    def test_statevector_cap(self):
        c = qc.CircuitSpec(27, (qc.Gate("CX", (1, 2)),))
        with pytest.raises(ValueError):
            exact_ancilla_statistic(c)


class TestSample:
    def test_identity_all_zero(self):
        r = sample(qc.hadamard_test(qc.empty(1), qc.empty(1)), 1000, seed=1)
        assert r.counts == {"0": 1000, "1": 0}

    def test_counts_sum(self, rng):
        c = qc.hadamard_test(qc.random_circuit(2, 6, rng), qc.random_circuit(2, 6, rng))
        r = sample(c, 777, NoiseModel(0.05, 0.05), seed=2)
        assert sum(r.counts.values()) == r.shots == 777

    def test_readout_channel(self):
        noise = NoiseModel(readout=((0.9, 0.2), (0.1, 0.8)))
        r = sample(qc.hadamard_test(qc.empty(1), qc.empty(1)), 200_000, noise, seed=3)
        assert r.p0 == pytest.approx(0.9, abs=5 * np.sqrt(0.09 / 200_000))

    def test_deterministic(self, rng):
        c = rotated_test_circuit(3)
        noise = NoiseModel.with_readout_error(0.02, 0.03, 0.02, 0.04)
        assert sample(c, 5000, noise, seed=11) == sample(c, 5000, noise, seed=11)
        assert sample(c, 5000, noise, seed=11) != sample(c, 5000, noise, seed=12)

    def test_task_streams_differ(self):
        c = rotated_test_circuit(2)
        assert sample(c, 5000, seed=1, task="a") != sample(c, 5000, seed=1, task="b")

    def test_noiseless_unbiased(self):
        c = rotated_test_circuit(3)
        m = exact_ancilla_statistic(c)
        stats = [sample(c, 10_000, seed=s).statistic for s in range(30)]
        sigma_mean = np.sqrt((1 - m**2) / 10_000 / 30)
        assert abs(np.mean(stats) - m) < 4 * sigma_mean

    @pytest.mark.parametrize("n", [2, 4])
    def test_depolarizing_shrinks_signal(self, n):
        c = uniform_test_circuit(n)
        noise = NoiseModel(0.01, 0.01)
        stats = np.array([sample(c, 10_000, noise, seed=s).statistic for s in range(30)])
        se = stats.std(ddof=1) / np.sqrt(30)
        assert stats.mean() < exact_ancilla_statistic(c) - 5 * se

    @pytest.mark.parametrize("builder", [uniform_test_circuit, rotated_test_circuit])
    def test_trajectories_match_channel(self, builder):
        c = builder(3)
        noise = NoiseModel.with_readout_error(0.03, 0.05, 0.02, 0.04)
        expected = channel_statistic(c, noise)
        stats = np.array([sample(c, 20_000, noise, seed=s).statistic for s in range(20)])
        se = np.sqrt((1 - expected**2) / 20_000 / 20)
        assert abs(stats.mean() - expected) < 5 * se

    def test_trajectories_match_channel_folded_product_path(self):
        c = qc.fold(rotated_test_circuit(2), 1)
        noise = NoiseModel(0.02, 0.02)
        expected = channel_statistic(c, noise)
        stats = np.array([sample(c, 20_000, noise, seed=s, method="product").statistic for s in range(5)])
        se = np.sqrt((1 - expected**2) / 20_000 / 5)
        assert abs(stats.mean() - expected) < 5 * se

    def test_swap_circuit_with_three_qubit_noise(self, rng):
        a, b = qc.random_circuit(1, 4, rng), qc.random_circuit(1, 4, rng)
        c = qc.swap_test(a, b)
        noise = NoiseModel(0.02, 0.04)
        expected = channel_statistic(c, noise)
        stats = np.array([sample(c, 20_000, noise, seed=s).statistic for s in range(10)])
        se = np.sqrt((1 - expected**2) / 20_000 / 10)
        assert abs(stats.mean() - expected) < 5 * se

    def test_zero_shots(self):
        with pytest.raises(ValueError):
            sample(qc.hadamard_test(qc.empty(1), qc.empty(1)), 0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("with_p2", [False, True])
def test_depolarizing_monotone(n, with_p2):
    c = uniform_test_circuit(n)
    ps = [0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4]
    vals = [abs(channel_statistic(c, NoiseModel(p, p if with_p2 else 0.0))) for p in ps]
    assert all(a > b for a, b in zip(vals, vals[1:]))


class TestNoiseModel:
    def test_bad_probability(self):
        with pytest.raises(ValueError):
            NoiseModel(p1=1.5)

    def test_columns_must_sum_to_one(self):
        with pytest.raises(ValueError):
            NoiseModel(readout=((0.9, 0.2), (0.2, 0.8)))

    def test_json(self):
        nm = NoiseModel.with_readout_error(0.01, 0.02, 0.03, 0.04)
        d = json.loads(nm.to_json())
        assert set(d) == {"p1", "p2", "readout"}
        assert NoiseModel.from_json(nm.to_json()) == nm

    def test_noiseless_flag(self):
        assert NoiseModel().is_noiseless
        assert not NoiseModel(p2=0.1).is_noiseless
