"""Woodbury solvers for ``(A + U C V) x = b`` built from estimated overlaps.

The solution is never materialized. Each solver estimates the handful of
inner products the identity needs and combines them classically into the
unnormalized overlap ``<z|x>``:

* rank 1, ``A = I``: four overlaps ``<z|b>``, ``<v0|b>``, ``<v0|u0>``, ``<z|u0>``;
* rank k, ``A = I``: ``k^2 + 2k + 1`` overlaps and a ``k x k`` inversion;
* rank k, ``A = Q`` unitary: the same with ``Q^dag`` inside every overlap.

``U = sum_i alpha_i |u_i><i|`` and ``V = sum_j beta_j |j><v_j|``, with every
state prepared from ``|0>`` by a :class:`~qwoodbury.circuits.CircuitSpec`.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import circuits as qc
from . import estimator as est
from . import linalg
from . import simulator as sim


class NearSingularError(ValueError):
    """The estimated rank-1 denominator is below shot-noise resolution."""


def _cplx(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(x[0], x[1])
    return complex(x)


def _cplx_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


@dataclass(frozen=True, eq=False)
class LowRankFactors:
    alphas: tuple[complex, ...]
    u_preparers: tuple[qc.CircuitSpec, ...]
    betas: tuple[complex, ...]
    v_preparers: tuple[qc.CircuitSpec, ...]
    c_matrix: np.ndarray = None

    def __post_init__(self):
        k = len(self.alphas)
        object.__setattr__(self, "alphas", tuple(complex(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(complex(b) for b in self.betas))
        object.__setattr__(self, "u_preparers", tuple(self.u_preparers))
        object.__setattr__(self, "v_preparers", tuple(self.v_preparers))
        if k < 1:
            raise ValueError("rank must be at least 1")
        if not (len(self.betas) == len(self.u_preparers) == len(self.v_preparers) == k):
            raise ValueError("alphas, betas, u_preparers and v_preparers must have equal length")
        c = np.eye(k, dtype=complex) if self.c_matrix is None else linalg.as_matrix(self.c_matrix)
        if c.shape != (k, k):
            raise ValueError(f"c_matrix must be {k}x{k}, got {c.shape}")
        linalg.inverse(c, "C")
        c.setflags(write=False)
        object.__setattr__(self, "c_matrix", c)

    @property
    def k(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True, eq=False)
class WoodburyProblem:
    """``(A + U C V) x = b`` with ``A`` the identity or a unitary circuit ``Q``."""

    factors: LowRankFactors
    b_preparer: qc.CircuitSpec
    z_preparer: qc.CircuitSpec
    a_unitary: qc.CircuitSpec | None = None
    declared_real: bool = False

    def __post_init__(self):
        n = self.b_preparer.qubit_count
        circuits = [self.z_preparer, *self.factors.u_preparers, *self.factors.v_preparers]
        if self.a_unitary is not None:
            circuits.append(self.a_unitary)
        for c in circuits:
            if c.qubit_count != n:
                raise ValueError(f"all circuits must act on {n} qubits, got {c.qubit_count}")

    @property
    def qubits(self) -> int:
        return self.b_preparer.qubit_count

    @property
    def k(self) -> int:
        return self.factors.k

    def to_dict(self) -> dict:
        f = self.factors
        return {
            "qubits": self.qubits,
            "a_part": "identity" if self.a_unitary is None else {"unitary": self.a_unitary.to_dict()},
            "alphas": [_cplx_json(a) for a in f.alphas],
            "u_preparers": [c.to_dict() for c in f.u_preparers],
            "betas": [_cplx_json(b) for b in f.betas],
            "v_preparers": [c.to_dict() for c in f.v_preparers],
            "c_matrix": [[_cplx_json(z) for z in row] for row in f.c_matrix],
            "b_preparer": self.b_preparer.to_dict(),
            "z_preparer": self.z_preparer.to_dict(),
            "declared_real": self.declared_real,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WoodburyProblem":
        a_part = d.get("a_part", "identity")
        if a_part == "identity":
            q = None
        elif isinstance(a_part, dict) and "unitary" in a_part:
            q = qc.CircuitSpec.from_dict(a_part["unitary"])
        else:
            raise ValueError(f"bad a_part {a_part!r}")
        alphas = [_cplx(a) for a in d["alphas"]]
        c = d.get("c_matrix")
        c = None if c is None else np.array([[_cplx(z) for z in row] for row in c])
        factors = LowRankFactors(
            alphas=tuple(alphas),
            u_preparers=tuple(qc.CircuitSpec.from_dict(c_) for c_ in d["u_preparers"]),
            betas=tuple(_cplx(b) for b in d["betas"]),
            v_preparers=tuple(qc.CircuitSpec.from_dict(c_) for c_ in d["v_preparers"]),
            c_matrix=c,
        )
        p = cls(
            factors=factors,
            b_preparer=qc.CircuitSpec.from_dict(d["b_preparer"]),
            z_preparer=qc.CircuitSpec.from_dict(d["z_preparer"]),
            a_unitary=q,
            declared_real=bool(d.get("declared_real", False)),
        )
        if "qubits" in d and int(d["qubits"]) != p.qubits:
            raise ValueError("'qubits' does not match the circuits")
        return p

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "WoodburyProblem":
        return cls.from_dict(json.loads(s))


def uniform_problem(n: int, alpha: float = 1.0, beta: float = 1.0) -> WoodburyProblem:
    """Rank-1 instance with every state the uniform superposition.

    With ``alpha = beta = 1`` all four overlaps are 1 and ``<z|x> = 1/2``.
    """
    h = qc.uniform_preparer(n)
    return WoodburyProblem(
        factors=LowRankFactors((alpha,), (h,), (beta,), (h,)),
        b_preparer=h,
        z_preparer=h,
        declared_real=True,
    )


@dataclass(frozen=True)
class HermitianLCU:
    """``O = sum_i gamma_i W_i`` with each ``W_i`` a unitary circuit."""

    gammas: tuple[complex, ...]
    w_circuits: tuple[qc.CircuitSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(complex(g) for g in self.gammas))
        object.__setattr__(self, "w_circuits", tuple(self.w_circuits))
        if len(self.gammas) != len(self.w_circuits) or not self.gammas:
            raise ValueError("need one coefficient per unitary, at least one term")
        n = self.w_circuits[0].qubit_count
        if any(w.qubit_count != n for w in self.w_circuits):
            raise ValueError("all unitaries must act on the same register")
        if n <= 6 and not self.is_hermitian():
            raise ValueError("sum_i gamma_i W_i is not Hermitian")

    @classmethod
    def from_paulis(cls, terms: dict[str, complex]) -> "HermitianLCU":
        labels = list(terms)
        return cls(tuple(terms[k] for k in labels), tuple(qc.pauli_circuit(k) for k in labels))

    def matrix(self) -> np.ndarray:
        return sum(g * sim.circuit_unitary(w) for g, w in zip(self.gammas, self.w_circuits))

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        m = self.matrix()
        return bool(np.allclose(m, m.conj().T, atol=atol, rtol=0))


@dataclass
class EstimationConfig:
    """How overlaps are obtained.

    ``mode="exact"`` reads ancilla statistics off exact amplitudes. In
    ``"sampled"`` mode every circuit gets ``shots`` shots under ``noise``,
    unless ``plan`` (rank 1 only) sets per-overlap counts. ``epsilon``
    builds such a plan from a ``pilot_shots`` pilot run.
    """

    mode: str = "exact"
    shots: int = 100_000
    noise: sim.NoiseModel = sim.NOISELESS
    mitigation: est.MitigationConfig = est.NO_MITIGATION
    seed: int = 0
    method: str = "hadamard"
    form: str = "prepared"
    epsilon: float | None = None
    plan: est.ShotPlan | None = None
    pilot_shots: int = 1000
    sim_method: str = "auto"
    max_workers: int = 1

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass
class SolveReport:
    overlap: complex
    per_inner_product: list = field(default_factory=list)
    capacitance_condition: float = 1.0
    gamma: complex | None = None
    fold_level_values: list = field(default_factory=list)
    per_level_estimates: list = field(default_factory=list)
    std_error: float = 0.0


@dataclass
class ExpectationReport:
    value: float
    imag_residue: float
    std_error: float
    fold_level_values: list = field(default_factory=list)
    estimates: list = field(default_factory=list)


# --------------------------------------------------------------------------
# estimation plumbing


@dataclass(frozen=True)
class _Job:
    label: str
    prep_a: qc.CircuitSpec
    prep_b: qc.CircuitSpec
    middle: qc.CircuitSpec | None
    shots: int | None
    real: bool


def _run_jobs(jobs: list[_Job], cfg: EstimationConfig, fold: int) -> dict:
    def one(job: _Job):
        return est.estimate_inner_product(
            job.prep_a,
            job.prep_b,
            middle=job.middle,
            method=cfg.method,
            shots=job.shots,
            noise=cfg.noise if job.shots is not None else sim.NOISELESS,
            mitigation=cfg.mitigation,
            seed=cfg.seed,
            task="solve",
            real=job.real,
            fold=fold,
            form=cfg.form,
            sim_method=cfg.sim_method,
            label=job.label,
        )

    if cfg.max_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.max_workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    return {j.label: r for j, r in zip(jobs, results)}


def _fold_levels(cfg: EstimationConfig) -> tuple[int, ...]:
    return cfg.mitigation.fold_levels


def _combine_levels(values: list):
    if len(values) == 1:
        return values[0]
    e1, e3 = values
    return est.zne_extrapolate(e1, e3)


def _zne_se(ses: list) -> float:
    if len(ses) == 1:
        return ses[0]
    return math.hypot(1.5 * ses[0], 0.5 * ses[1])


# --------------------------------------------------------------------------
# rank 1


def _rank1_scale(p: WoodburyProblem) -> complex:
    f = p.factors
    return f.alphas[0] * f.betas[0] * complex(f.c_matrix[0, 0])


def _rank1_assemble(ab: complex, e: dict) -> tuple[complex, complex, float]:
    zb, v0b, v0u0, zu0 = (e[k].value for k in ("zb", "v0b", "v0u0", "zu0"))
    den = 1.0 + ab * v0u0
    den_se = abs(ab) * e["v0u0"].std_error
    tol = max(1e-8, 10.0 * den_se)
    if abs(den) < tol:
        raise NearSingularError(
            f"|1 + ab<v0|u0>| = {abs(den):.3e} is below tolerance {tol:.3e}"
        )
    g = ab / den
    overlap = zb - g * v0b * zu0
    # first-order propagation of the four estimate errors
    se = math.sqrt(
        e["zb"].std_error ** 2
        + abs(g * zu0) ** 2 * e["v0b"].std_error ** 2
        + abs(g * g * v0b * zu0) ** 2 * e["v0u0"].std_error ** 2
        + abs(g * v0b) ** 2 * e["zu0"].std_error ** 2
    )
    return overlap, g, se


def _pilot_plan(p: WoodburyProblem, cfg: EstimationConfig) -> est.ShotPlan:
    mitigation = est.NO_MITIGATION
    if cfg.mitigation.uses_mem:
        mitigation = est.MitigationConfig("mem", cfg.mitigation.confusion)
    pilot = replace(cfg, epsilon=None, plan=None, shots=cfg.pilot_shots,
                    mitigation=mitigation, seed=cfg.seed + 1_000_003)
    e = _run_jobs(_rank1_jobs(p, pilot), pilot, 0)
    return est.shot_plan(cfg.epsilon, _rank1_scale(p), *(e[k].value for k in ("zb", "v0b", "v0u0", "zu0")))


def _rank1_jobs(p: WoodburyProblem, cfg: EstimationConfig, plan: est.ShotPlan | None = None) -> list[_Job]:
    f = p.factors
    z, b, u0, v0 = p.z_preparer, p.b_preparer, f.u_preparers[0], f.v_preparers[0]
    if cfg.mode == "exact":
        counts = (None,) * 4
    elif plan is not None:
        counts = plan.as_tuple()
    else:
        counts = (cfg.shots,) * 4
    real = p.declared_real
    return [
        _Job("zb", z, b, None, counts[0], real),
        _Job("v0b", v0, b, None, counts[1], real),
        _Job("v0u0", v0, u0, None, counts[2], real),
        _Job("zu0", z, u0, None, counts[3], real),
    ]


def solve_rank1_overlap(p: WoodburyProblem, cfg: EstimationConfig | None = None) -> SolveReport:
    """``<z|x> = <z|b> - ab <v0|b><z|u0> / (1 + ab <v0|u0>)`` with ``ab = alpha0 beta0 C00``."""
    cfg = cfg or EstimationConfig()
    if p.k != 1 or p.a_unitary is not None:
        raise ValueError("solve_rank1_overlap needs k = 1 and A = I")
    plan = cfg.plan
    if cfg.mode == "sampled" and plan is None and cfg.epsilon is not None:
        plan = _pilot_plan(p, cfg)
    ab = _rank1_scale(p)
    jobs = _rank1_jobs(p, cfg, plan)
    values, ses, per_level = [], [], []
    g = None
    for fold in _fold_levels(cfg):
        e = _run_jobs(jobs, cfg, fold)
        overlap, g_level, se = _rank1_assemble(ab, e)
        if g is None:
            g = g_level
        values.append(overlap)
        ses.append(se)
        per_level.append([e[j.label] for j in jobs])
    return SolveReport(
        overlap=complex(_combine_levels(values)),
        per_inner_product=per_level[0],
        capacitance_condition=1.0,
        gamma=g,
        fold_level_values=values,
        per_level_estimates=per_level,
        std_error=_zne_se(ses),
    )


# --------------------------------------------------------------------------
# rank k


def _rankk_jobs(p: WoodburyProblem, cfg: EstimationConfig) -> list[_Job]:
    f = p.factors
    shots = None if cfg.mode == "exact" else cfg.shots
    mid = None if p.a_unitary is None else qc.inverse(p.a_unitary)
    real = p.declared_real
    jobs = [_Job("zb", p.z_preparer, p.b_preparer, mid, shots, real)]
    jobs += [_Job(f"zu{i}", p.z_preparer, f.u_preparers[i], mid, shots, real) for i in range(p.k)]
    jobs += [_Job(f"v{j}b", f.v_preparers[j], p.b_preparer, mid, shots, real) for j in range(p.k)]
    jobs += [
        _Job(f"v{j}u{i}", f.v_preparers[j], f.u_preparers[i], mid, shots, real)
        for j in range(p.k)
        for i in range(p.k)
    ]
    return jobs


def _rankk_assemble(p: WoodburyProblem, e: dict):
    f = p.factors
    k = p.k
    alphas = np.array(f.alphas)
    betas = np.array(f.betas)
    y1 = e["zb"].value
    y2 = alphas * np.array([e[f"zu{i}"].value for i in range(k)])
    y3 = betas * np.array([e[f"v{j}b"].value for j in range(k)])
    # vu[j, i] = beta_j alpha_i <v_j|u_i>, i.e. the k x k matrix V U
    vu = np.array(
        [[betas[j] * alphas[i] * e[f"v{j}u{i}"].value for i in range(k)] for j in range(k)]
    )
    cap = linalg.inverse(f.c_matrix, "C") + vu
    cond = linalg.condition_number(cap)
    m = linalg.inverse(cap, "capacitance")
    return complex(y1 - y2 @ m @ y3), cond


def _solve_general(p: WoodburyProblem, cfg: EstimationConfig) -> SolveReport:
    if cfg.epsilon is not None or cfg.plan is not None:
        raise ValueError("shot plans are only defined for the rank-1 solver")
    jobs = _rankk_jobs(p, cfg)
    values, per_level, conds = [], [], []
    for fold in _fold_levels(cfg):
        e = _run_jobs(jobs, cfg, fold)
        overlap, c = _rankk_assemble(p, e)
        conds.append(c)
        values.append(overlap)
        per_level.append([e[j.label] for j in jobs])
    cond = conds[0]
    g = None
    if p.k == 1:
        ab = _rank1_scale(p)
        den = 1.0 + ab * per_level[0][-1].value  # last job is v0u0
        g = ab / den if den != 0 else None
    return SolveReport(
        overlap=complex(_combine_levels(values)),
        per_inner_product=per_level[0],
        capacitance_condition=cond,
        gamma=g,
        fold_level_values=values,
        per_level_estimates=per_level,
    )


def solve_rankk_overlap(p: WoodburyProblem, cfg: EstimationConfig | None = None) -> SolveReport:
    """``<z|x> = y1 - y2^T (C^-1 + VU)^-1 y3`` from ``k^2 + 2k + 1`` overlaps (``A = I``)."""
    if p.a_unitary is not None:
        raise ValueError("solve_rankk_overlap needs A = I; use solve_unitary_a_overlap")
    return _solve_general(p, cfg or EstimationConfig())


def solve_unitary_a_overlap(p: WoodburyProblem, cfg: EstimationConfig | None = None) -> SolveReport:
    """Rank-k solve for ``A = Q`` unitary; every overlap carries ``Q^dag``.

    A problem without ``a_unitary`` is treated as ``Q = I``.
    """
    return _solve_general(p, cfg or EstimationConfig())


def solve(p: WoodburyProblem, cfg: EstimationConfig | None = None) -> SolveReport:
    """Dispatch to the cheapest applicable solver."""
    if p.a_unitary is not None:
        return solve_unitary_a_overlap(p, cfg)
    if p.k == 1:
        return solve_rank1_overlap(p, cfg)
    return solve_rankk_overlap(p, cfg)


# --------------------------------------------------------------------------
# <x|O|x>


def expectation_hermitian(p: WoodburyProblem, o: HermitianLCU, cfg: EstimationConfig | None = None) -> ExpectationReport:
    """``<x|O|x>`` for the rank-1, ``A = I`` solution without forming ``|x>``.

    With ``|x> = |b> - c|u0>`` and ``c = ab<v0|b> / (1 + ab<v0|u0>)``::

        <x|O|x> = <b|O|b> - 2 Re(c <b|O|u0>) + |c|^2 <u0|O|u0>

    Every term ``<a|O|b>`` is ``sum_i gamma_i <a|W_i|b>``, one Hadamard-test
    pair per unitary.
    """
    cfg = cfg or EstimationConfig()
    if p.k != 1 or p.a_unitary is not None:
        raise ValueError("expectation_hermitian needs k = 1 and A = I")
    if o.w_circuits[0].qubit_count != p.qubits:
        raise ValueError("observable acts on the wrong register size")
    if cfg.method != "hadamard":
        raise ValueError("expectation_hermitian uses Hadamard tests only")
    f = p.factors
    b, u0, v0 = p.b_preparer, f.u_preparers[0], f.v_preparers[0]
    shots = None if cfg.mode == "exact" else cfg.shots
    real = p.declared_real
    jobs = [
        _Job("v0b", v0, b, None, shots, real),
        _Job("v0u0", v0, u0, None, shots, real),
    ]
    for i, w in enumerate(o.w_circuits):
        jobs += [
            _Job(f"bW{i}b", b, b, w, shots, False),
            _Job(f"bW{i}u0", b, u0, w, shots, False),
            _Job(f"u0W{i}u0", u0, u0, w, shots, False),
        ]
    ab = _rank1_scale(p)
    gam = np.array(o.gammas)
    values, ses, residues, all_est = [], [], [], []
    for fold in _fold_levels(cfg):
        e = _run_jobs(jobs, cfg, fold)
        v0b, v0u0 = e["v0b"].value, e["v0u0"].value
        den = 1.0 + ab * v0u0
        tol = max(1e-8, 10.0 * abs(ab) * e["v0u0"].std_error)
        if abs(den) < tol:
            raise NearSingularError(f"|1 + ab<v0|u0>| = {abs(den):.3e} is below tolerance {tol:.3e}")
        c = ab * v0b / den

        def term(name):
            vals = np.array([e[name.format(i)].value for i in range(len(gam))])
            ses_ = np.array([e[name.format(i)].std_error for i in range(len(gam))])
            return complex(gam @ vals), float(np.sqrt(np.sum(np.abs(gam) ** 2 * ses_**2)))

        bob, se_bob = term("bW{}b")
        bou, se_bou = term("bW{}u0")
        uou, se_uou = term("u0W{}u0")
        total = bob - 2.0 * (c * bou).real + abs(c) ** 2 * uou
        values.append(total.real)
        residues.append(abs(bob.imag + abs(c) ** 2 * uou.imag))
        ses.append(math.sqrt(se_bob**2 + 4 * abs(c) ** 2 * se_bou**2 + abs(c) ** 4 * se_uou**2))
        all_est.append([e[j.label] for j in jobs])
    value = float(_combine_levels(values))
    se = _zne_se(ses)
    residue = residues[0]
    if residue > max(5.0 * se, 1e-9):
        warnings.warn(
            f"imaginary residue {residue:.3e} exceeds 5 standard errors ({se:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return ExpectationReport(value, residue, se, values, all_est)


# --------------------------------------------------------------------------
# dense oracle


def dense_system(p: WoodburyProblem):
    """``(A + U C V, b, z)`` as dense arrays (register size capped by the oracle)."""
    dim = 2**p.qubits
    linalg.check_oracle_size(dim)
    f = p.factors
    a = np.eye(dim, dtype=complex) if p.a_unitary is None else sim.circuit_unitary(p.a_unitary)
    u = np.stack([al * sim.prepare(c) for al, c in zip(f.alphas, f.u_preparers)], axis=1)
    v = np.stack([be * sim.prepare(c).conj() for be, c in zip(f.betas, f.v_preparers)], axis=0)
    m = a + u @ f.c_matrix @ v
    return m, sim.prepare(p.b_preparer), sim.prepare(p.z_preparer)


def dense_solution(p: WoodburyProblem) -> np.ndarray:
    m, b, _ = dense_system(p)
    return linalg.direct_solve(m, b)


def dense_overlap(p: WoodburyProblem) -> complex:
    """Reference ``<z|x>`` from a direct dense solve."""
    m, b, z = dense_system(p)
    return complex(np.vdot(z, linalg.direct_solve(m, b)))


def dense_expectation(p: WoodburyProblem, o: HermitianLCU) -> float:
    x = dense_solution(p)
    return float(np.real(np.vdot(x, o.matrix() @ x)))
