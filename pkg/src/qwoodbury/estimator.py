"""Inner-product estimation from ancilla statistics, plus post-processing.

Covers Hadamard- and swap-test estimators, shot budgeting for the rank-1
overlap, readout-error correction (MEM) and two-point linear zero-noise
extrapolation (ZNE).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import circuits as qc
from . import simulator as sim
from .linalg import SINGULAR_RTOL

MITIGATION_MODES = ("none", "mem", "mem_zne")


@dataclass(frozen=True)
class InnerProductEstimate:
    value: complex
    shots_real: int = 0
    shots_imag: int = 0
    std_error: float = 0.0
    label: str = ""
    #: set when the swap-test radicand went negative and was clamped to 0
    clamped: bool = False

    @property
    def shots(self) -> int:
        return self.shots_real + self.shots_imag

    def csv_row(self) -> list:
        return [self.label, repr(self.value.real), repr(self.value.imag), self.shots, repr(self.std_error)]


def write_estimates_csv(path, estimates: Iterable[InnerProductEstimate]) -> None:
    """Write ``label, re, im, shots, std_error`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "re", "im", "shots", "std_error"])
        for e in estimates:
            w.writerow(e.csv_row())


@dataclass(frozen=True)
class MitigationConfig:
    """Which post-processing to run.

    ``mem`` corrects every ancilla histogram with ``confusion``; ``mem_zne``
    additionally evaluates the whole pipeline at fold levels 0 and 1 and
    extrapolates linearly to zero noise.
    """

    mode: str = "none"
    confusion: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    fold_levels: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        if self.mode not in MITIGATION_MODES:
            raise ValueError(f"mitigation mode must be one of {MITIGATION_MODES}, got {self.mode!r}")
        conf = np.asarray(self.confusion, dtype=float)
        if conf.shape != (2, 2):
            raise ValueError("confusion must be 2x2")
        object.__setattr__(self, "confusion", tuple(tuple(float(x) for x in r) for r in conf))
        if self.mode != "none":
            _check_confusion(conf)
        levels = self.fold_levels
        if levels is None:
            levels = (0, 1) if self.mode == "mem_zne" else (0,)
        levels = tuple(int(f) for f in levels)
        if self.mode == "mem_zne" and levels != (0, 1):
            raise ValueError("mem_zne uses fold levels (0, 1)")
        if self.mode != "mem_zne" and levels != (0,):
            raise ValueError(f"{self.mode} runs at fold level 0 only")
        object.__setattr__(self, "fold_levels", levels)

    @property
    def uses_mem(self) -> bool:
        return self.mode in ("mem", "mem_zne")

    @classmethod
    def from_noise(cls, mode: str, noise: sim.NoiseModel) -> "MitigationConfig":
        """Mitigation calibrated with the noise model's own readout matrix."""
        return cls(mode=mode, confusion=noise.readout)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "confusion": [list(r) for r in self.confusion],
            "fold_levels": list(self.fold_levels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MitigationConfig":
        levels = d.get("fold_levels")
        return cls(
            mode=d.get("mode", "none"),
            confusion=tuple(map(tuple, d.get("confusion", [[1.0, 0.0], [0.0, 1.0]]))),
            fold_levels=None if levels is None else tuple(levels),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "MitigationConfig":
        return cls.from_dict(json.loads(s))


NO_MITIGATION = MitigationConfig()


def _check_confusion(conf: np.ndarray) -> None:
    s = np.linalg.svd(conf, compute_uv=False)
    if s[0] == 0 or s[-1] < SINGULAR_RTOL * s[0]:
        raise np.linalg.LinAlgError("confusion matrix is singular")


# --------------------------------------------------------------------------
# post-processing


def mem_correct(observed, confusion) -> np.ndarray:
    """Undo readout error on a 2-outcome distribution.

    Solves ``confusion @ p_true = observed``, clips to ``[0, 1]`` and
    renormalizes.
    """
    conf = np.asarray(confusion, dtype=float)
    obs = np.asarray(observed, dtype=float).reshape(2)
    _check_confusion(conf)
    p = np.linalg.solve(conf, obs)
    p = np.clip(p, 0.0, 1.0)
    total = p.sum()
    if total == 0.0:
        return np.array([0.5, 0.5])
    return p / total


def zne_extrapolate(e1, e3):
    """Zero-noise value of the line through ``(1, e1)`` and ``(3, e3)``."""
    return e1 + (e1 - e3) / 2


# --------------------------------------------------------------------------
# shot budgeting


@dataclass(frozen=True)
class ShotPlan:
    n_zb: int
    n_v0b: int
    n_v0u0: int
    n_zu0: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n_zb, self.n_v0b, self.n_v0u0, self.n_zu0)


def _shot_count(x: float) -> int:
    # shave relative round-off so that e.g. 2500.0000000000005 -> 2500
    return max(1, math.ceil(x * (1.0 - 1e-12)))


def gamma(alpha0beta0: complex, v0u0: complex) -> complex:
    """``a / (1 + a <v0|u0>)`` with ``a = alpha0 * beta0``."""
    den = 1.0 + alpha0beta0 * v0u0
    if den == 0:
        raise ZeroDivisionError("1 + alpha0*beta0*<v0|u0> is zero")
    return alpha0beta0 / den


def shot_plan(epsilon: float, alpha0beta0: complex, zb: complex, v0b: complex,
              v0u0: complex, zu0: complex) -> ShotPlan:
    """Per-inner-product shot counts for additive precision ``epsilon`` on ``<z|x>``.

    Counts are the first-order propagation targets for the rank-1 overlap,
    using magnitudes of complex inputs, rounded up and floored at one shot.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    a = abs(alpha0beta0)
    den = abs(1.0 + alpha0beta0 * v0u0)
    if den < 1e-12:
        raise ZeroDivisionError(f"resonant denominator |1 + ab<v0|u0>| = {den:.3e}")
    n_zb = (1.0 / epsilon) ** 2
    n_v0b = (a * abs(zu0) / (epsilon * den)) ** 2
    n_v0u0 = (a * a * abs(zu0) * abs(v0b) / (epsilon * den**2)) ** 2
    n_zu0 = (a * abs(v0b) / (epsilon * den)) ** 2
    return ShotPlan(*(_shot_count(x) for x in (n_zb, n_v0b, n_v0u0, n_zu0)))


# --------------------------------------------------------------------------
# estimation


def _statistic(result: sim.ShotResult, mitigation: MitigationConfig) -> tuple[float, float]:
    """Ancilla ``P(0) - P(1)`` and its binomial standard error."""
    p0 = result.p0
    se = math.sqrt(max(p0 * (1.0 - p0), 0.0) / result.shots)
    if mitigation.uses_mem:
        conf = np.asarray(mitigation.confusion)
        p0 = mem_correct([p0, 1.0 - p0], conf)[0]
        se /= abs(np.linalg.det(conf))
    return 2.0 * p0 - 1.0, 2.0 * se


def _run(circuit, shots, noise, mitigation, seed, task, sim_method):
    if shots is None:
        return sim.exact_ancilla_statistic(circuit, sim_method), 0.0
    r = sim.sample(circuit, shots, noise, seed=seed, task=task, method=sim_method)
    return _statistic(r, mitigation)


def estimate_inner_product(
    prep_a: qc.CircuitSpec,
    prep_b: qc.CircuitSpec,
    *,
    middle: qc.CircuitSpec | None = None,
    method: str = "hadamard",
    shots: int | None = None,
    noise: sim.NoiseModel = sim.NOISELESS,
    mitigation: MitigationConfig = NO_MITIGATION,
    seed: int = 0,
    task: int | str = 0,
    real: bool = False,
    fold: int = 0,
    form: str = "prepared",
    sim_method: str = "auto",
    label: str = "",
) -> InnerProductEstimate:
    """Estimate ``<a| middle |b>`` with ``|a> = prep_a|0>``, ``|b> = prep_b|0>``.

    ``shots=None`` evaluates the ancilla statistic exactly (no sampling,
    no noise). With ``real=True`` the caller asserts the overlap is real
    and only the real-part circuit runs. The swap test additionally needs
    the overlap to be real and non-negative and returns
    ``sqrt(max(0, 2 P(0) - 1))``.
    """
    if shots is not None and shots < 1:
        raise ValueError("shots must be >= 1")
    if shots is None and not noise.is_noiseless:
        raise ValueError("exact mode is noiseless; pass shots to sample with noise")
    if mitigation.uses_mem:
        _check_confusion(np.asarray(mitigation.confusion))
    task = f"{task}|{label}|f{fold}"

    if method == "swap":
        if middle is not None:
            raise ValueError("the swap test cannot interpose a middle circuit")
        if not real:
            raise ValueError("swap test needs the overlap declared real and non-negative")
        circuit = qc.fold(qc.swap_test(prep_a, prep_b), fold)
        m, se_m = _run(circuit, shots, noise, mitigation, seed, task + "|swap", sim_method)
        sq = m  # 2 P(0) - 1 = |<a|b>|^2
        clamped = sq < 0
        val = math.sqrt(max(sq, 0.0))
        if shots is None:
            se = 0.0
        elif val > 0:
            se = se_m / (2.0 * val)
        else:
            se = math.sqrt(se_m)
        return InnerProductEstimate(complex(val), shots or 0, 0, se, label, clamped)

    if method != "hadamard":
        raise ValueError(f"unknown method {method!r}")
    prep, w = qc.overlap_test_pair(prep_a, prep_b, middle, form)
    re_c = qc.fold(qc.hadamard_test(prep, w, "real"), fold)
    re, se_re = _run(re_c, shots, noise, mitigation, seed, task + "|re", sim_method)
    im, se_im = 0.0, 0.0
    shots_imag = 0
    if not real:
        im_c = qc.fold(qc.hadamard_test(prep, w, "imag"), fold)
        im, se_im = _run(im_c, shots, noise, mitigation, seed, task + "|im", sim_method)
        shots_imag = shots or 0
    return InnerProductEstimate(
        complex(re, im), shots or 0, shots_imag, math.hypot(se_re, se_im), label
    )
