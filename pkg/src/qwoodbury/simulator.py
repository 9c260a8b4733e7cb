"""Statevector simulation with exact and shot-sampled ancilla statistics.

Three evaluation paths share one interface:

* a dense path for small circuits (up to 7 qubits) that caches the
  cumulative unitary after every gate, so a noisy trajectory costs a few
  matrix-vector products;
* a generic statevector path for up to :data:`MAX_QUBITS` qubits; and
* a product-state path for circuits in which register qubits never
  interact with each other (only with the ancilla on qubit 0). The state
  is then kept as ``|0>|A> + |1>|B>`` with ``A`` and ``B`` short sums of
  tensor-product states, so cost is linear in the register size.

Noise is simulated by Pauli trajectories. After each gate, with
probability ``p1`` (one-qubit gates) or ``p2`` (multi-qubit gates), a
uniformly random non-identity Pauli string is applied to the gate's
qubits. Since only the ancilla is measured, a shot's outcome depends on its
trajectory only through that trajectory's ``P(0)``. :func:`sample`
therefore draws each shot's Pauli pattern, evaluates ``P(0)`` once per
distinct pattern, and draws outcomes per pattern group. That has the same
distribution as running every shot separately.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuits import PAULI_MATRICES, CircuitSpec

MAX_QUBITS = 26
#: Registers up to this size keep every intermediate state for trajectory reuse.
_PREFIX_CACHE_MAX = 2**18
#: Circuits up to this many qubits are simulated with cumulative dense unitaries.
_DENSE_MAX_QUBITS = 7

_PAULIS = [PAULI_MATRICES[k] for k in "IXYZ"]


def rng_stream(seed: int, task: int | str = 0) -> np.random.Generator:
    """Counter-based (Philox) generator for one ``(seed, task)`` pair.

    String task labels are hashed with CRC32, so a stream depends only on
    the seed and the label, never on scheduling order.
    """
    if isinstance(task, str):
        task = zlib.crc32(task.encode())
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(task),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing rates plus one column-stochastic ancilla confusion matrix.

    ``readout[i][j]`` is the probability of reading ``i`` when the true
    outcome is ``j``.
    """

    p1: float = 0.0
    p2: float = 0.0
    readout: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        r = np.asarray(self.readout, dtype=float)
        if r.shape != (2, 2):
            raise ValueError("readout must be a 2x2 matrix")
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("readout entries must lie in [0, 1]")
        if not np.allclose(r.sum(axis=0), 1.0, atol=1e-12):
            raise ValueError("readout columns must sum to 1")
        object.__setattr__(self, "readout", tuple(tuple(float(x) for x in row) for row in r))

    @property
    def confusion(self) -> np.ndarray:
        return np.array(self.readout)

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.readout == ((1.0, 0.0), (0.0, 1.0))

    @classmethod
    def with_readout_error(cls, p1: float, p2: float, e0: float, e1: float) -> "NoiseModel":
        """``e0 = P(read 1 | 0)``, ``e1 = P(read 0 | 1)``."""
        return cls(p1, p2, ((1 - e0, e1), (e0, 1 - e1)))

    def to_dict(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "readout": [list(r) for r in self.readout]}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        readout = d.get("readout", [[1.0, 0.0], [0.0, 1.0]])
        return cls(float(d.get("p1", 0.0)), float(d.get("p2", 0.0)), tuple(map(tuple, readout)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "NoiseModel":
        return cls.from_dict(json.loads(s))


NOISELESS = NoiseModel()


@dataclass(frozen=True)
class ShotResult:
    shots: int
    counts: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def p0(self) -> float:
        return self.counts.get("0", 0) / self.shots

    @property
    def statistic(self) -> float:
        """Empirical ``P(0) - P(1)`` of the ancilla."""
        return 2.0 * self.p0 - 1.0


# --------------------------------------------------------------------------
# generic statevector path


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def _apply_op(psi: np.ndarray, m: np.ndarray, controls, target: int) -> None:
    """Apply a (multi-)controlled 2x2 ``m`` in place on a ``(2,)*n`` tensor."""
    idx = [slice(None)] * psi.ndim
    for c in controls:
        idx[c] = 1
    sub = psi[tuple(idx)]
    t = target - sum(1 for c in controls if c < target)
    lead = (slice(None),) * t
    i0, i1 = lead + (0,), lead + (1,)
    if m[0, 1] == 0 and m[1, 0] == 0:
        if m[0, 0] != 1:
            sub[i0] *= m[0, 0]
        if m[1, 1] != 1:
            sub[i1] *= m[1, 1]
        return
    a = sub[i0].copy()
    b = sub[i1].copy()
    sub[i0] = m[0, 0] * a + m[0, 1] * b
    sub[i1] = m[1, 0] * a + m[1, 1] * b


def _apply_pauli(psi: np.ndarray, qubits, code: int) -> None:
    # code is base-4 with one digit per qubit, most significant first
    for q in reversed(qubits):
        d = code % 4
        code //= 4
        if d:
            _apply_op(psi, _PAULIS[d], (), q)


def apply(c: CircuitSpec, state: np.ndarray) -> np.ndarray:
    """Noiseless action of ``c`` on a statevector (returns a new array)."""
    n = c.qubit_count
    if n > MAX_QUBITS:
        raise ValueError(f"statevector simulation is capped at {MAX_QUBITS} qubits")
    state = np.asarray(state, dtype=complex)
    if state.shape != (2**n,):
        raise ValueError(f"state has {state.size} amplitudes, circuit needs {2**n}")
    psi = state.reshape((2,) * n).copy() if n else state.copy()
    for g in c.gates:
        _apply_op(psi, g.base_matrix(), g.controls, g.target)
    return psi.reshape(-1)


def circuit_unitary(c: CircuitSpec) -> np.ndarray:
    """Dense unitary of ``c``, built column by column from :func:`apply`."""
    from .linalg import check_oracle_size

    dim = 2**c.qubit_count
    check_oracle_size(dim)
    cols = []
    for j in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[j] = 1.0
        cols.append(apply(c, e))
    return np.stack(cols, axis=1)


def prepare(c: CircuitSpec) -> np.ndarray:
    return apply(c, zero_state(c.qubit_count))


# --------------------------------------------------------------------------
# product-state path


def is_product_form(c: CircuitSpec) -> bool:
    """True when no gate couples two register qubits (qubits >= 1)."""
    if c.qubit_count < 1:
        return False
    for g in c.gates:
        if len(g.targets) == 1:
            continue
        if len(g.targets) != 2 or g.controls != (0,):
            return False
    return True


class _ProductState:
    """``sum_a |a> sum_t coef[a][t] (x)_q fac[a][t, q]`` over the register."""

    def __init__(self, m: int):
        f = np.zeros((1, m, 2), dtype=complex)
        f[:, :, 0] = 1.0
        self.coef = [np.ones(1, dtype=complex), np.zeros(0, dtype=complex)]
        self.fac = [f, np.zeros((0, m, 2), dtype=complex)]

    def register_gate(self, m: np.ndarray, q: int, branches=(0, 1)) -> None:
        for a in branches:
            if len(self.coef[a]):
                self.fac[a][:, q, :] = self.fac[a][:, q, :] @ m.T

    def ancilla_gate(self, m: np.ndarray) -> None:
        c0, c1 = self.coef
        f0, f1 = self.fac
        new_coef, new_fac = [], []
        for r in range(2):
            coef = np.concatenate([m[r, 0] * c0, m[r, 1] * c1])
            fac = np.concatenate([f0, f1])
            coef, fac = _merge_terms(coef, fac)
            new_coef.append(coef)
            new_fac.append(fac)
        self.coef, self.fac = new_coef, new_fac

    def p0(self) -> float:
        return _sum_norm2(self.coef[0], self.fac[0])

    def norm2(self) -> float:
        return self.p0() + _sum_norm2(self.coef[1], self.fac[1])


def _merge_terms(coef: np.ndarray, fac: np.ndarray, atol: float = 1e-13):
    keep_c, keep_f = [], []
    for c, f in zip(coef, fac):
        for i, g in enumerate(keep_f):
            if np.allclose(f, g, atol=atol, rtol=0):
                keep_c[i] += c
                break
        else:
            keep_c.append(c)
            keep_f.append(f)
    m = fac.shape[1]
    mask = [abs(c) > 1e-15 for c in keep_c]
    coef = np.array([c for c, k in zip(keep_c, mask) if k], dtype=complex)
    fac = np.array([f for f, k in zip(keep_f, mask) if k], dtype=complex).reshape(-1, m, 2)
    return coef, fac


def _sum_norm2(coef: np.ndarray, fac: np.ndarray) -> float:
    if len(coef) == 0:
        return 0.0
    # gram[s, t] = prod_q <fac[s, q] | fac[t, q]>
    overlaps = np.einsum("sqi,tqi->stq", fac.conj(), fac)
    gram = np.prod(overlaps, axis=2) if fac.shape[1] else np.ones((len(coef),) * 2)
    return float(np.real(coef.conj() @ gram @ coef))


def _product_p0(ops, pattern=()) -> float:
    m = ops.qubit_count - 1
    st = _ProductState(m)
    errors = dict(pattern)
    for k, (mat, controls, target, qubits) in enumerate(ops.ops):
        if target == 0:
            st.ancilla_gate(mat)
        elif controls:
            st.register_gate(mat, target - 1, branches=(1,))
        else:
            st.register_gate(mat, target - 1)
        code = errors.get(k)
        if code:
            for q in reversed(qubits):
                d = code % 4
                code //= 4
                if d:
                    if q == 0:
                        st.ancilla_gate(_PAULIS[d])
                    else:
                        st.register_gate(_PAULIS[d], q - 1)
    return min(max(st.p0(), 0.0), 1.0)


# --------------------------------------------------------------------------
# compiled circuits and ancilla statistics


class _Compiled:
    def __init__(self, c: CircuitSpec, method: str):
        self.circuit = c
        self.qubit_count = c.qubit_count
        self.ops = [(g.base_matrix(), g.controls, g.target, g.targets) for g in c.gates]
        if method == "auto":
            if c.qubit_count <= _DENSE_MAX_QUBITS:
                method = "dense"
            elif is_product_form(c):
                method = "product"
            else:
                method = "statevector"
        if method not in ("dense", "product", "statevector"):
            raise ValueError(f"unknown simulation method {method!r}")
        if method == "dense" and c.qubit_count > _DENSE_MAX_QUBITS:
            raise ValueError(f"dense method is limited to {_DENSE_MAX_QUBITS} qubits")
        if method == "product" and not is_product_form(c):
            raise ValueError("circuit is not in product form")
        if method == "statevector" and c.qubit_count > MAX_QUBITS:
            raise ValueError(
                f"{c.qubit_count} qubits exceeds the statevector cap of {MAX_QUBITS}"
            )
        self.method = method
        self._p0_cache: dict = {}
        self._prefix: list | None = None
        self._cumulative: np.ndarray | None = None
        self._pauli_cache: dict = {}

    def _cumulative_unitaries(self) -> np.ndarray:
        # W[k] = G_k ... G_0, built by pushing the identity through the gates
        if self._cumulative is None:
            n = self.qubit_count
            dim = 2**n
            psi = np.eye(dim, dtype=complex).T.reshape((2,) * n + (dim,))
            out = np.empty((len(self.ops) + 1, dim, dim), dtype=complex)
            out[0] = np.eye(dim)
            for k, (mat, controls, target, _) in enumerate(self.ops):
                _apply_op(psi, mat, controls, target)
                out[k + 1] = psi.reshape(dim, dim)
            self._cumulative = out
        return self._cumulative

    def _pauli_dense(self, qubits, code: int) -> np.ndarray:
        key = (qubits, code)
        hit = self._pauli_cache.get(key)
        if hit is None:
            n = self.qubit_count
            ops = [PAULI_MATRICES["I"]] * n
            for q in reversed(qubits):
                ops[q] = _PAULIS[code % 4]
                code //= 4
            hit = ops[0]
            for m in ops[1:]:
                hit = np.kron(hit, m)
            self._pauli_cache[key] = hit
        return hit

    def _dense_p0(self, pattern) -> float:
        w = self._cumulative_unitaries()
        last = 0
        v = None
        for k, code in pattern:
            if v is None:
                v = w[k + 1][:, 0].copy()
            else:
                v = w[k + 1] @ (w[last + 1].conj().T @ v)
            v = self._pauli_dense(self.ops[k][3], code) @ v
            last = k
        if v is None:
            v = w[-1][:, 0]
        else:
            v = w[-1] @ (w[last + 1].conj().T @ v)
        half = v.size // 2
        p0 = float(np.real(np.vdot(v[:half], v[:half])))
        return min(max(p0, 0.0), 1.0)

    def _prefix_states(self):
        if self._prefix is None:
            n = self.qubit_count
            psi = zero_state(n).reshape((2,) * n)
            states = []
            for mat, controls, target, _ in self.ops:
                _apply_op(psi, mat, controls, target)
                states.append(psi.copy())
            self._prefix = states
        return self._prefix

    def _statevector_p0(self, pattern) -> float:
        n = self.qubit_count
        if pattern and 2**n * len(self.ops) <= _PREFIX_CACHE_MAX:
            start = pattern[0][0]
            psi = self._prefix_states()[start].copy()
            _apply_pauli(psi, self.ops[start][3], pattern[0][1])
            rest = dict(pattern[1:])
            first = start + 1
        else:
            psi = zero_state(n).reshape((2,) * n)
            rest = dict(pattern)
            first = 0
        for k in range(first, len(self.ops)):
            mat, controls, target, qubits = self.ops[k]
            _apply_op(psi, mat, controls, target)
            code = rest.get(k)
            if code:
                _apply_pauli(psi, qubits, code)
        p0 = float(np.sum(np.abs(psi[0]) ** 2))
        return min(max(p0, 0.0), 1.0)

    def p0(self, pattern=()) -> float:
        """Ancilla ``P(0)`` for one Pauli pattern ``((gate_index, code), ...)``."""
        pattern = tuple(pattern)
        hit = self._p0_cache.get(pattern)
        if hit is None:
            if self.method == "dense":
                hit = self._dense_p0(pattern)
            elif self.method == "product":
                hit = _product_p0(self, pattern)
            else:
                hit = self._statevector_p0(pattern)
            if len(self._p0_cache) < 200_000:
                self._p0_cache[pattern] = hit
        return hit


@lru_cache(maxsize=64)
def _compile(c: CircuitSpec, method: str) -> _Compiled:
    return _Compiled(c, method)


def ancilla_p0(c: CircuitSpec, method: str = "auto") -> float:
    return _compile(c, method).p0()


def exact_ancilla_statistic(c: CircuitSpec, method: str = "auto") -> float:
    """Noiseless ``P(0) - P(1)`` of qubit 0 from exact amplitudes."""
    if c.qubit_count < 1:
        raise ValueError("circuit needs at least one qubit")
    return 2.0 * ancilla_p0(c, method) - 1.0


def _sample_patterns(c: _Compiled, shots: int, noise: NoiseModel, rng: np.random.Generator):
    """Group shots by Pauli error pattern; returns ``{pattern: count}``."""
    shot_ids, gate_ids, codes = [], [], []
    for k, (_, _, _, qubits) in enumerate(c.ops):
        p = noise.p1 if len(qubits) == 1 else noise.p2
        if p <= 0.0:
            continue
        hits = int(rng.binomial(shots, p))
        if not hits:
            continue
        who = rng.choice(shots, size=hits, replace=False)
        shot_ids.append(who)
        gate_ids.append(np.full(hits, k))
        codes.append(rng.integers(1, 4 ** len(qubits), size=hits))
    if not shot_ids:
        return {(): shots}
    s = np.concatenate(shot_ids)
    g = np.concatenate(gate_ids)
    v = np.concatenate(codes)
    order = np.lexsort((g, s))
    s, g, v = s[order], g[order], v[order]
    groups: dict = {}
    bounds = np.flatnonzero(np.diff(s)) + 1
    for seg_g, seg_v in zip(np.split(g, bounds), np.split(v, bounds)):
        key = tuple(zip(seg_g.tolist(), seg_v.tolist()))
        groups[key] = groups.get(key, 0) + 1
    clean = shots - len(bounds) - 1
    if clean:
        groups[()] = clean
    return groups


def sample(
    c: CircuitSpec,
    shots: int,
    noise: NoiseModel = NOISELESS,
    seed: int = 0,
    task: int | str = 0,
    method: str = "auto",
) -> ShotResult:
    """Measure the ancilla of ``c`` over ``shots`` noisy trajectories.

    The result is a pure function of ``(c, shots, noise, seed, task)``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    compiled = _compile(c, method)
    rng = rng_stream(seed, task)
    groups = _sample_patterns(compiled, shots, noise, rng)
    true0 = 0
    for pattern in sorted(groups):
        count = groups[pattern]
        true0 += int(rng.binomial(count, compiled.p0(pattern)))
    true1 = shots - true0
    r = noise.readout
    obs0 = int(rng.binomial(true0, r[0][0])) + int(rng.binomial(true1, r[0][1]))
    return ShotResult(shots=shots, counts={"0": obs0, "1": shots - obs0}, seed=seed)
