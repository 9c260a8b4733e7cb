"""Experiment harness: the uniform-instance size sweep, the conditioning
conjecture check and the randomized oracle-equivalence suite."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import circuits as qc
from . import estimator as est
from . import linalg
from . import simulator as sim
from . import solver

log = logging.getLogger(__name__)

DEFAULT_SIZES = (2, 4, 8, 12, 16, 20)
#: Sizes above this need the product-state simulator.
GENERIC_MAX_LOG2N = 20
CSV_HEADER = ["log2_n", "mitigation", "estimate", "exact", "relative_error", "wall_time_s"]


@dataclass
class ExperimentConfig:
    sizes: tuple[int, ...] = DEFAULT_SIZES
    shots_per_inner_product: int = 100_000
    noise: sim.NoiseModel = sim.NOISELESS
    mitigations: tuple[str, ...] = ("none",)
    seed: int = 0
    mode: str = "exact"
    #: record wall-clock time per row; disable for byte-identical CSVs
    timing: bool = True
    sim_method: str = "auto"

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.mitigations = tuple(_mitigation_name(m) for m in self.mitigations)
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("sizes must be non-empty and each >= 1")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.mode == "sampled" and self.shots_per_inner_product < 1:
            raise ValueError("shots_per_inner_product must be >= 1")
        for n in self.sizes:
            if n > sim.MAX_QUBITS:
                raise ValueError(f"log2_n = {n} exceeds the simulator cap of {sim.MAX_QUBITS}")
            if n > GENERIC_MAX_LOG2N and self.sim_method not in ("auto", "product"):
                raise ValueError(f"log2_n = {n} needs the product-state simulator")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "noise" in d:
            d["noise"] = sim.NoiseModel.from_dict(d["noise"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "shots_per_inner_product": self.shots_per_inner_product,
            "noise": self.noise.to_dict(),
            "mitigations": list(self.mitigations),
            "seed": self.seed,
            "mode": self.mode,
            "timing": self.timing,
            "sim_method": self.sim_method,
        }


def _mitigation_name(m: str) -> str:
    m = m.replace("+", "_").lower()
    if m not in est.MITIGATION_MODES:
        raise ValueError(f"unknown mitigation {m!r}")
    return m


@dataclass(frozen=True)
class ExperimentRow:
    log2_n: int
    mitigation: str
    estimate: float
    exact_value: float
    relative_error: float
    wall_time: float

    def csv_row(self) -> list:
        return [self.log2_n, self.mitigation, repr(self.estimate), repr(self.exact_value),
                repr(self.relative_error), f"{self.wall_time:.6f}"]


def run_figure1(cfg: ExperimentConfig, out=None, plot_data=None) -> list[ExperimentRow]:
    """Solve the all-uniform rank-1 instance for every size and mitigation.

    The exact overlap is 1/2 at every size. Rows go to ``out`` as CSV when
    given; ``plot_data`` receives ``{mitigation: [[log2_n, estimate], ...]}``
    as JSON.
    """
    rows = []
    for n in cfg.sizes:
        problem = solver.uniform_problem(n)
        for m in cfg.mitigations:
            ecfg = solver.EstimationConfig(
                mode=cfg.mode,
                shots=cfg.shots_per_inner_product,
                noise=cfg.noise if cfg.mode == "sampled" else sim.NOISELESS,
                mitigation=est.MitigationConfig.from_noise(m, cfg.noise),
                seed=cfg.seed + n,
                sim_method=cfg.sim_method,
            )
            t0 = time.perf_counter()
            value = solver.solve_rank1_overlap(problem, ecfg).overlap.real
            elapsed = time.perf_counter() - t0 if cfg.timing else 0.0
            rows.append(ExperimentRow(n, m, value, 0.5, abs(value - 0.5) / 0.5, elapsed))
            log.info("log2_n=%d %s estimate=%.6f", n, m, value)
    if out is not None:
        write_rows(out, rows)
    if plot_data is not None:
        series: dict = {}
        for r in rows:
            series.setdefault(r.mitigation, []).append([r.log2_n, r.estimate])
        with open(plot_data, "w") as fh:
            json.dump(series, fh, indent=1)
    return rows


def write_rows(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_row())


# --------------------------------------------------------------------------
# conditioning conjecture


@dataclass
class ConjectureReport:
    trials: int
    max_deviation: float
    counterexamples: list = field(default_factory=list)
    tolerance: float = 1e-8

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "counterexamples": self.counterexamples,
        }


def conjecture_deviation(u, v) -> float:
    """Largest relative gap between the closed form and an SVD of ``I + u v^T``.

    Compares the largest and smallest singular values and their ratio. The
    closed form assumes at least two dimensions (it relies on the unit
    singular values of the orthogonal complement).
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    cc = linalg.conjectured_condition(u, v)
    s = linalg.singular_values(np.eye(u.size) + np.outer(u, v))
    return max(
        abs(cc.s_max - s[0]) / s[0],
        abs(cc.s_min - s[-1]) / s[-1],
        abs(cc.kappa - s[0] / s[-1]) / (s[0] / s[-1]),
    )


def verify_conjecture(dim_max: int, trials: int, seed: int = 0, tol: float = 1e-8) -> ConjectureReport:
    """Fuzz the closed-form conditioning of ``I + u v^T`` against SVD.

    Dimensions are drawn log-uniformly from ``[2, dim_max]`` and vector
    norms log-uniformly around 1. Mismatches are logged and collected, not
    raised.
    """
    if dim_max > 2**linalg.ORACLE_MAX_QUBITS:
        raise linalg.OracleSizeError(f"dim_max {dim_max} exceeds the oracle cap")
    if dim_max < 2:
        raise ValueError("dim_max must be at least 2")
    rng = sim.rng_stream(seed, "conjecture")
    worst = 0.0
    bad = []
    for t in range(trials):
        dim = int(round(math.exp(rng.uniform(math.log(2), math.log(dim_max)))))
        u = rng.normal(size=dim) / math.sqrt(dim) * math.exp(rng.uniform(-1, 1))
        v = rng.normal(size=dim) / math.sqrt(dim) * math.exp(rng.uniform(-1, 1))
        try:
            dev = conjecture_deviation(u, v)
        except (linalg.ConjectureDomainError, linalg.SingularMatrixError) as exc:
            bad.append({"trial": t, "dim": dim, "error": str(exc)})
            log.warning("conjecture trial %d (dim %d): %s", t, dim, exc)
            continue
        worst = max(worst, dev)
        if dev > tol:
            bad.append({"trial": t, "dim": dim, "deviation": dev})
            log.warning("conjecture trial %d (dim %d): deviation %.3e", t, dim, dev)
    return ConjectureReport(trials, worst, bad, tol)


# --------------------------------------------------------------------------
# randomized oracle equivalence


CASES = ("rank1", "rankk", "unitary")


def random_problem(
    rng: np.random.Generator,
    qubits: int,
    rank: int,
    unitary_a: bool = False,
    max_condition: float = 100.0,
    depth: int | None = None,
) -> solver.WoodburyProblem:
    """Random problem whose dense matrix has condition number <= ``max_condition``.

    Coefficients are shrunk until the bound holds.
    """
    depth = depth or 3 * qubits + 4
    rc = lambda: qc.random_circuit(qubits, depth, rng)  # noqa: E731
    alphas = rng.normal(size=rank) + 1j * rng.normal(size=rank)
    betas = rng.normal(size=rank) + 1j * rng.normal(size=rank)
    c = np.eye(rank) + 0.3 * (rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank)))
    us = tuple(rc() for _ in range(rank))
    vs = tuple(rc() for _ in range(rank))
    b, z = rc(), rc()
    q = rc() if unitary_a else None
    scale = 1.0
    for _ in range(60):
        f = solver.LowRankFactors(tuple(scale * alphas), us, tuple(betas), vs, c)
        p = solver.WoodburyProblem(f, b, z, a_unitary=q)
        m, _, _ = solver.dense_system(p)
        if linalg.condition_number(m) <= max_condition:
            return p
        scale *= 0.7
    raise RuntimeError("could not draw a well-conditioned problem")


@dataclass
class OracleReport:
    trials: int
    max_delta: float
    max_delta_by_case: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"trials": self.trials, "max_delta": self.max_delta,
                "max_delta_by_case": self.max_delta_by_case}


def oracle_check(trials: int, max_qubits: int, max_rank: int, seed: int = 0) -> OracleReport:
    """Exact-mode solver output versus dense solves on random instances.

    Trials cycle through the rank-1, rank-k and unitary-A cases.
    """
    if max_qubits > 6 or max_qubits < 1:
        raise ValueError("max_qubits must be in [1, 6]")
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    rng = sim.rng_stream(seed, "oracle-check")
    by_case = {c: 0.0 for c in CASES}
    for t in range(trials):
        case = CASES[t % len(CASES)]
        n = int(rng.integers(1, max_qubits + 1))
        k = 1 if case == "rank1" else int(rng.integers(1, max_rank + 1))
        p = random_problem(rng, n, k, unitary_a=case == "unitary")
        if case == "rank1":
            got = solver.solve_rank1_overlap(p).overlap
        elif case == "rankk":
            got = solver.solve_rankk_overlap(p).overlap
        else:
            got = solver.solve_unitary_a_overlap(p).overlap
        delta = abs(got - solver.dense_overlap(p))
        by_case[case] = max(by_case[case], delta)
    return OracleReport(trials, max(by_case.values()), by_case)
