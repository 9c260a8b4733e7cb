"""Gate-list circuits: state preparers, Hadamard/swap tests, inversion, folding.

A :class:`CircuitSpec` is an immutable list of gates applied left to right.
Qubit 0 is the most significant bit of a basis-state index, so on two
qubits ``|10>`` means qubit 0 is set. Interference-test circuits place the
ancilla on qubit 0 and shift the register up by one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_S2 = 1.0 / np.sqrt(2.0)

FIXED_MATRICES = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "SX": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
}
for _m in FIXED_MATRICES.values():
    _m.setflags(write=False)

ONE_QUBIT_KINDS = ("H", "X", "S", "SDG", "SX", "U1Q")
KINDS = ONE_QUBIT_KINDS + ("CX", "CU1Q")

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": FIXED_MATRICES["X"],
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _is_unitary(m: np.ndarray, atol: float = 1e-12) -> bool:
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol, rtol=0)


@dataclass(frozen=True)
class Gate:
    """One gate.

    ``targets`` lists every qubit the gate touches. For ``CX`` it is
    ``(control, target)``; for ``CU1Q`` it is ``(*controls, target)`` and
    ``matrix`` is the 2x2 block applied to the target when all controls
    are set. ``U1Q`` carries an arbitrary 2x2 unitary in ``matrix``.
    """

    kind: str
    targets: tuple[int, ...]
    matrix: tuple[complex, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated qubit in {self.kind} targets {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError("qubit indices must be non-negative")
        arity = len(self.targets)
        if self.kind in ONE_QUBIT_KINDS and arity != 1:
            raise ValueError(f"{self.kind} acts on one qubit, got {self.targets}")
        if self.kind == "CX" and arity != 2:
            raise ValueError(f"CX needs (control, target), got {self.targets}")
        if self.kind == "CU1Q" and arity < 2:
            raise ValueError("CU1Q needs at least one control")
        if self.kind in ("U1Q", "CU1Q"):
            if self.matrix is None:
                raise ValueError(f"{self.kind} requires a 2x2 matrix")
            m = np.asarray(self.matrix, dtype=complex).reshape(2, 2)
            if not _is_unitary(m):
                raise ValueError(f"{self.kind} payload is not unitary")
            object.__setattr__(self, "matrix", tuple(complex(z) for z in m.ravel()))
        elif self.matrix is not None:
            raise ValueError(f"{self.kind} takes no matrix payload")

    @property
    def controls(self) -> tuple[int, ...]:
        return self.targets[:-1] if self.kind in ("CX", "CU1Q") else ()

    @property
    def target(self) -> int:
        return self.targets[-1]

    def base_matrix(self) -> np.ndarray:
        """The 2x2 operator applied to :attr:`target`."""
        if self.kind == "CX":
            return FIXED_MATRICES["X"]
        if self.matrix is not None:
            return np.array(self.matrix, dtype=complex).reshape(2, 2)
        return FIXED_MATRICES[self.kind]

    def adjoint(self) -> "Gate":
        if self.kind in ("H", "X", "CX"):
            return self
        if self.kind == "S":
            return Gate("SDG", self.targets)
        if self.kind == "SDG":
            return Gate("S", self.targets)
        m = self.base_matrix().conj().T
        kind = "CU1Q" if self.kind == "CU1Q" else "U1Q"
        return Gate(kind, self.targets, tuple(m.ravel()))

    def shifted(self, offset: int) -> "Gate":
        return Gate(self.kind, tuple(t + offset for t in self.targets), self.matrix)

    def with_control(self, control: int) -> "Gate":
        """This gate with ``control`` prepended to its control list."""
        return Gate("CU1Q", (control,) + self.targets, tuple(self.base_matrix().ravel()))


@dataclass(frozen=True)
class CircuitSpec:
    qubit_count: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.qubit_count < 0:
            raise ValueError("qubit_count must be non-negative")
        for g in self.gates:
            if max(g.targets) >= self.qubit_count:
                raise ValueError(
                    f"gate {g.kind}{g.targets} outside {self.qubit_count}-qubit circuit"
                )

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    # JSON wire format: {"qubits": n, "gates": [{"kind": "H", "targets": [0]}, ...]}
    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            d = {"kind": g.kind, "targets": list(g.targets)}
            if g.matrix is not None:
                d["matrix"] = [[z.real, z.imag] for z in g.matrix]
            gates.append(d)
        return {"qubits": self.qubit_count, "gates": gates}

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        gates = []
        for gd in d.get("gates", []):
            m = gd.get("matrix")
            if m is not None:
                m = tuple(complex(re, im) for re, im in m)
            gates.append(Gate(gd["kind"], tuple(gd["targets"]), m))
        return cls(int(d["qubits"]), tuple(gates))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "CircuitSpec":
        return cls.from_dict(json.loads(s))


def empty(n: int) -> CircuitSpec:
    """Identity circuit on ``n`` qubits."""
    return CircuitSpec(n, ())


def uniform_preparer(n: int) -> CircuitSpec:
    """``H`` on every qubit: prepares the uniform superposition."""
    if n < 1:
        raise ValueError("uniform_preparer needs at least one qubit")
    return CircuitSpec(n, tuple(Gate("H", (q,)) for q in range(n)))


def basis_preparer(n: int, index: int) -> CircuitSpec:
    """X gates preparing the computational basis state ``|index>``."""
    if not 0 <= index < 2**n:
        raise ValueError(f"basis index {index} out of range for {n} qubits")
    bits = format(index, f"0{n}b") if n else ""
    return CircuitSpec(n, tuple(Gate("X", (q,)) for q, b in enumerate(bits) if b == "1"))


def single_qubit_layer(matrices: Sequence[np.ndarray]) -> CircuitSpec:
    """Tensor product of arbitrary one-qubit unitaries, one per qubit."""
    return CircuitSpec(
        len(matrices),
        tuple(Gate("U1Q", (q,), tuple(np.asarray(m, complex).ravel())) for q, m in enumerate(matrices)),
    )


def compose(*circuits: CircuitSpec) -> CircuitSpec:
    """Run the circuits one after another (first argument first)."""
    if not circuits:
        raise ValueError("compose needs at least one circuit")
    n = circuits[0].qubit_count
    for c in circuits[1:]:
        if c.qubit_count != n:
            raise ValueError(f"qubit-count mismatch: {n} vs {c.qubit_count}")
    return CircuitSpec(n, tuple(g for c in circuits for g in c.gates))


def inverse(c: CircuitSpec) -> CircuitSpec:
    return CircuitSpec(c.qubit_count, tuple(g.adjoint() for g in reversed(c.gates)))


def embed(c: CircuitSpec, qubit_count: int, offset: int) -> CircuitSpec:
    """Place ``c`` on qubits ``offset .. offset + c.qubit_count - 1`` of a wider circuit."""
    if offset + c.qubit_count > qubit_count:
        raise ValueError("embedded circuit does not fit")
    return CircuitSpec(qubit_count, tuple(g.shifted(offset) for g in c.gates))


def controlled(c: CircuitSpec) -> CircuitSpec:
    """Controlled version of ``c`` with the new control on qubit 0."""
    return CircuitSpec(
        c.qubit_count + 1, tuple(g.shifted(1).with_control(0) for g in c.gates)
    )


def fold(c: CircuitSpec, foldings: int) -> CircuitSpec:
    """Replace every gate ``G`` with ``G (G^dag G)^foldings``.

    One folding triples the length without changing the ideal unitary.
    """
    if foldings < 0:
        raise ValueError("foldings must be >= 0")
    if foldings == 0:
        return c
    gates = []
    for g in c.gates:
        gates.append(g)
        adj = g.adjoint()
        for _ in range(foldings):
            gates.extend((adj, g))
    return CircuitSpec(c.qubit_count, tuple(gates))


def hadamard_test(prep: CircuitSpec, w: CircuitSpec, part: str = "real") -> CircuitSpec:
    """Hadamard test whose ancilla gives ``P(0) - P(1) = Re/Im <psi|w|psi>``.

    ``psi = prep |0>``. The ancilla is qubit 0; ``part="imag"`` inserts
    ``S^dag`` on the ancilla before the controlled ``w``.
    """
    if prep.qubit_count != w.qubit_count:
        raise ValueError(
            f"qubit-count mismatch: prep has {prep.qubit_count}, w has {w.qubit_count}"
        )
    if part not in ("real", "imag"):
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    n = prep.qubit_count
    gates = [Gate("H", (0,))]
    if part == "imag":
        gates.append(Gate("SDG", (0,)))
    gates.extend(embed(prep, n + 1, 1).gates)
    gates.extend(controlled(w).gates)
    gates.append(Gate("H", (0,)))
    return CircuitSpec(n + 1, tuple(gates))


def overlap_test_pair(
    prep_a: CircuitSpec,
    prep_b: CircuitSpec,
    middle: CircuitSpec | None = None,
    form: str = "prepared",
) -> tuple[CircuitSpec, CircuitSpec]:
    """``(prep, w)`` such that ``<psi|w|psi> = <a| middle |b>``.

    ``form="prepared"`` prepares ``|a>`` and controls ``w = middle B A^dag``;
    ``form="compact"`` prepares nothing and controls ``w = A^dag middle B``.
    """
    if prep_a.qubit_count != prep_b.qubit_count:
        raise ValueError("preparers act on different qubit counts")
    n = prep_a.qubit_count
    mid = middle if middle is not None else empty(n)
    if mid.qubit_count != n:
        raise ValueError("middle circuit has the wrong qubit count")
    if form == "prepared":
        return prep_a, compose(inverse(prep_a), prep_b, mid)
    if form == "compact":
        return empty(n), compose(prep_b, mid, inverse(prep_a))
    raise ValueError(f"unknown form {form!r}")


def swap_test(prep_a: CircuitSpec, prep_b: CircuitSpec) -> CircuitSpec:
    """Swap test on ``2n + 1`` qubits; ancilla ``P(0) = (1 + |<a|b>|^2) / 2``.

    Register A sits on qubits ``1..n`` and register B on ``n+1..2n``.
    Each controlled swap is ``CX(b,a) CCX(anc,a,b) CX(b,a)``.
    """
    if prep_a.qubit_count != prep_b.qubit_count:
        raise ValueError(
            f"register size mismatch: {prep_a.qubit_count} vs {prep_b.qubit_count}"
        )
    n = prep_a.qubit_count
    total = 2 * n + 1
    gates = [Gate("H", (0,))]
    gates.extend(embed(prep_a, total, 1).gates)
    gates.extend(embed(prep_b, total, n + 1).gates)
    x = tuple(FIXED_MATRICES["X"].ravel())
    for q in range(n):
        a, b = 1 + q, n + 1 + q
        gates.append(Gate("CX", (b, a)))
        gates.append(Gate("CU1Q", (0, a, b), x))
        gates.append(Gate("CX", (b, a)))
    gates.append(Gate("H", (0,)))
    return CircuitSpec(total, tuple(gates))


def random_circuit(n: int, depth: int, rng: np.random.Generator) -> CircuitSpec:
    """Random circuit drawing from every gate kind; used by tests and demos."""
    from scipy.stats import unitary_group

    gates: list[Gate] = []
    for _ in range(depth):
        r = rng.integers(0, 4 if n > 1 else 2)
        q = int(rng.integers(n))
        if r == 0:
            gates.append(Gate(str(rng.choice(["H", "X", "S", "SDG", "SX"])), (q,)))
        elif r == 1:
            m = unitary_group.rvs(2, random_state=rng)
            gates.append(Gate("U1Q", (q,), tuple(m.ravel())))
        elif r == 2:
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate("CX", (int(c), int(t))))
        else:
            c, t = rng.choice(n, size=2, replace=False)
            m = unitary_group.rvs(2, random_state=rng)
            gates.append(Gate("CU1Q", (int(c), int(t)), tuple(m.ravel())))
    return CircuitSpec(n, tuple(gates))


def pauli_circuit(label: str) -> CircuitSpec:
    """Circuit for a Pauli string such as ``"XZ"`` (qubit 0 first)."""
    gates = []
    for q, p in enumerate(label):
        if p == "I":
            continue
        if p not in PAULI_MATRICES:
            raise ValueError(f"bad Pauli letter {p!r}")
        gates.append(Gate("U1Q", (q,), tuple(PAULI_MATRICES[p].ravel())))
    return CircuitSpec(len(label), tuple(gates))
