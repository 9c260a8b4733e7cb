"""Dense complex linear algebra used as the classical oracle.

Everything here works on small dense numpy arrays. Quantum-estimated
results elsewhere in the package are checked against these routines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Relative threshold below which a matrix counts as singular.
SINGULAR_RTOL = 1e-12

#: Largest register the dense oracle will materialize (2**12 amplitudes).
ORACLE_MAX_QUBITS = 12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix is numerically singular.

    ``which`` names the offending block (``"A"``, ``"C"``, ``"capacitance"``
    or ``"M"``) and ``condition`` carries its 2-norm condition estimate.
    """

    def __init__(self, which: str, condition: float):
        self.which = which
        self.condition = condition
        super().__init__(f"{which} is singular (condition estimate {condition:.3e})")


class ConjectureDomainError(ValueError):
    """The closed-form conditioning formula hit a negative radicand."""


class OracleSizeError(ValueError):
    """Requested dense object exceeds the oracle's size cap."""


def as_matrix(m) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=complex))
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex).reshape(-1)
    if a.size == 0:
        raise ValueError("vector must be non-empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def check_oracle_size(dim: int) -> None:
    if dim > 2**ORACLE_MAX_QUBITS:
        raise OracleSizeError(
            f"dense oracle is capped at 2**{ORACLE_MAX_QUBITS} entries, got {dim}"
        )


def singular_values(m) -> np.ndarray:
    """Singular values of ``m`` in descending order."""
    a = as_matrix(m)
    return np.linalg.svd(a, compute_uv=False)


def condition_number(m) -> float:
    s = singular_values(m)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def _check_nonsingular(m: np.ndarray, which: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{which} must be square, got shape {m.shape}")
    s = singular_values(m)
    if s[0] == 0.0 or s[-1] < SINGULAR_RTOL * s[0]:
        cond = float("inf") if s[-1] == 0.0 else float(s[0] / s[-1])
        raise SingularMatrixError(which, cond)


def direct_solve(m, b) -> np.ndarray:
    """Solve ``m @ x = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrixError` (``which="M"``) when ``m`` fails the
    relative singular-value test.
    """
    a = as_matrix(m)
    rhs = as_vector(b)
    if a.shape[0] != rhs.size:
        raise ValueError(f"shape mismatch: {a.shape} vs {rhs.size}")
    _check_nonsingular(a, "M")
    return np.linalg.solve(a, rhs)


def inverse(m, which: str = "M") -> np.ndarray:
    a = as_matrix(m)
    _check_nonsingular(a, which)
    return np.linalg.inv(a)


def woodbury_inverse(a, u, c, v) -> np.ndarray:
    """Inverse of ``a + u @ c @ v`` through the Woodbury identity.

    Computes ``A^-1 - A^-1 U (C^-1 + V A^-1 U)^-1 V A^-1``. Each of ``A``,
    ``C`` and the capacitance ``C^-1 + V A^-1 U`` is tested for singularity
    separately so callers can tell which block broke.
    """
    a = as_matrix(a)
    u = as_matrix(u)
    c = as_matrix(c)
    v = as_matrix(v)
    n, k = u.shape
    if a.shape != (n, n) or c.shape != (k, k) or v.shape != (k, n):
        raise ValueError(
            f"incompatible shapes A{a.shape} U{u.shape} C{c.shape} V{v.shape}"
        )
    a_inv = inverse(a, "A")
    c_inv = inverse(c, "C")
    a_inv_u = a_inv @ u
    cap = c_inv + v @ a_inv_u
    cap_inv = inverse(cap, "capacitance")
    return a_inv - a_inv_u @ cap_inv @ (v @ a_inv)


@dataclass(frozen=True)
class ConjecturedConditioning:
    """Closed-form singular values of ``I + u v^T`` for real ``u``, ``v``."""

    kappa: float
    s_max: float
    s_min: float
    x_aux: float
    y_aux: float


def conjectured_condition(u, v, tol: float = 1e-12) -> ConjecturedConditioning:
    """Conjectured extreme singular values of ``I + u v^T``.

    Uses only ``|u|``, ``|v|`` and ``u . v``::

        x  = |u|^2 |v|^2 / 2 + u.v + 1
        y  = |u| |v| sqrt(|u|^2 |v|^2 + 4 u.v + 4)
        S1 = sqrt(x + y/2),  S2 = sqrt(x - y/2),  kappa = S1 / S2

    The formula is unproven in general; :func:`singular_values` is the
    reference. Only real vectors are accepted.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        if np.any(np.imag(u) != 0) or np.any(np.imag(v) != 0):
            raise ValueError("conjectured_condition is defined for real vectors only")
        u, v = np.real(u), np.real(v)
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if u.shape != v.shape or u.size == 0:
        raise ValueError("u and v must be non-empty and of equal length")

    nu2 = float(u @ u)
    nv2 = float(v @ v)
    uv = float(u @ v)
    x = nu2 * nv2 / 2.0 + uv + 1.0
    inner = nu2 * nv2 + 4.0 * uv + 4.0
    # inner = |u|^2|v|^2 - (u.v)^2 + (u.v + 2)^2 >= 0 by Cauchy-Schwarz
    y = np.sqrt(nu2 * nv2) * np.sqrt(max(inner, 0.0))
    lo = x - y / 2.0
    scale = max(1.0, abs(x))
    if lo < -tol * scale:
        raise ConjectureDomainError(f"x - y/2 = {lo:.3e} is negative")
    s_max = float(np.sqrt(x + y / 2.0))
    # (x + y/2)(x - y/2) == (1 + u.v)^2, so this is sqrt(x - y/2) without
    # the cancellation that hits ill-conditioned pairs.
    s_min = abs(1.0 + uv) / s_max
    if s_min == 0.0:
        raise SingularMatrixError("I + u v^T", float("inf"))
    return ConjecturedConditioning(
        kappa=s_max / s_min, s_max=s_max, s_min=s_min, x_aux=float(x), y_aux=float(y)
    )
