"""Newton-Raphson power flow in rectangular voltage coordinates.

This is the nonlinear reference the linear models are judged against.  It
works directly on ``x = [Re V; Im V]`` so its Jacobian is exactly the
stacked real matrix of the perturbation coefficients evaluated at the
current iterate; the builder is shared with the linear solvers rather than
reimplemented.  ZIP buses contribute active and reactive balance rows, PV
buses an active row and a squared-magnitude row ``|V|^2 = v_set^2``.

All residual rows are quadratic in the unknowns, so central finite
differences reproduce the analytic Jacobian to roundoff; ``jacobian_check``
exploits that as a built-in self-test.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._linalg import solve_checked
from .errors import SolverError
from .linearize import (NominalOrigin, NominalVoltage, assemble_coefficients,
                        compute_noload_voltage, real_block_matrix)
from .netmodel import AdmittancePartition, NetworkCase
from .residuals import complex_injection


class InitialGuess(Enum):
    FLAT = "flat"
    NO_LOAD = "no-load"
    GIVEN = "given"


@dataclass(frozen=True)
class NewtonSettings:
    """Iteration controls.

    ``initial = NO_LOAD`` falls back to the flat profile when the no-load
    voltage cannot be computed.  No step damping is applied by default; a
    half-step fallback triggers only when a full step would increase the
    mismatch.
    """

    tolerance: float = 1e-10
    max_iterations: int = 50
    initial: InitialGuess = InitialGuess.NO_LOAD
    initial_voltage: np.ndarray | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.initial is InitialGuess.GIVEN and self.initial_voltage is None:
            raise ValueError("GIVEN initial guess needs initial_voltage")


@dataclass(frozen=True, eq=False)
class NewtonResult:
    """Outcome of a Newton run.

    Hitting the iteration cap is not an exception: the best iterate comes
    back with ``converged = False`` so callers can inspect it.
    """

    voltage: np.ndarray
    converged: bool
    iterations: int
    final_mismatch: float

    def __post_init__(self):
        v = np.array(self.voltage, dtype=complex)
        v.flags.writeable = False
        object.__setattr__(self, "voltage", v)


def _case_targets(case: NetworkCase):
    s_target, q_known = case.injection_targets()
    pv_pos = np.flatnonzero(~q_known)
    vset_sq = np.array([case.non_slack[i].pv_setpoint.v_mag ** 2
                        for i in pv_pos])
    return s_target, pv_pos, vset_sq


def _residual(partition, i_load, v_slack, s_target, pv_pos, vset_sq, v):
    """Stacked residual [active rows; reactive or |V|^2 rows]."""
    ds = complex_injection(partition, v, i_load, v_slack) - s_target
    lower = ds.imag.copy()
    if pv_pos.size:
        lower[pv_pos] = (v.real[pv_pos] ** 2 + v.imag[pv_pos] ** 2
                         - vset_sq)
    return np.concatenate([ds.real, lower]), ds


def _mismatch_measure(ds, pv_pos, f_lower):
    """Per-bus mismatch: |complex| at ZIP buses, active and |V|^2 at PV."""
    per_bus = np.abs(ds)
    if pv_pos.size:
        per_bus[pv_pos] = np.maximum(np.abs(ds.real[pv_pos]),
                                     np.abs(f_lower[pv_pos]))
    return float(per_bus.max(initial=0.0))


def _jacobian(partition, i_load, v_slack, pv_pos, v):
    """Analytic Jacobian; shares the block builder with the linear solvers."""
    coeffs = assemble_coefficients(
        partition, NominalVoltage(v, NominalOrigin.USER), i_load, v_slack)
    jac = real_block_matrix(coeffs)
    n = partition.n
    for k in pv_pos:
        row = np.zeros(2 * n)
        row[k] = 2.0 * v.real[k]
        row[n + k] = 2.0 * v.imag[k]
        jac[n + k, :] = row
    return jac


def _initial_voltage(partition, case, settings):
    n = partition.n
    if settings.initial is InitialGuess.GIVEN:
        v = np.asarray(settings.initial_voltage, dtype=complex).copy()
        if v.shape != (n,):
            raise ValueError("initial_voltage has the wrong length")
        return v
    if settings.initial is InitialGuess.NO_LOAD:
        try:
            return compute_noload_voltage(
                partition, case.i_load_vector(), case.v_slack).V.copy()
        except SolverError:
            pass
    return np.ones(n, dtype=complex)


def solve_newton(partition: AdmittancePartition,
                 case: NetworkCase,
                 settings: NewtonSettings | None = None) -> NewtonResult:
    """Run Newton-Raphson to the requested per-bus mismatch tolerance.

    Raises ``SINGULAR_JACOBIAN`` when an iterate's Jacobian cannot be
    factored.  A converged result satisfies: every ZIP bus's complex
    mismatch and every PV bus's active mismatch and squared-magnitude
    deviation are at most ``settings.tolerance``.
    """
    settings = settings or NewtonSettings()
    i_load = case.i_load_vector()
    v_slack = case.v_slack
    s_target, pv_pos, vset_sq = _case_targets(case)
    v = _initial_voltage(partition, case, settings)
    n = partition.n

    f, ds = _residual(partition, i_load, v_slack, s_target, pv_pos,
                      vset_sq, v)
    mismatch = _mismatch_measure(ds, pv_pos, f[n:])
    for it in range(settings.max_iterations):
        if mismatch <= settings.tolerance:
            return NewtonResult(v, True, it, mismatch)
        jac = _jacobian(partition, i_load, v_slack, pv_pos, v)
        step2n, _ = solve_checked(jac, -f, code="SINGULAR_JACOBIAN",
                                  what="power-flow Jacobian")
        step = step2n[:n] + 1j * step2n[n:]

        # Full step first; halve only while the mismatch would increase.
        best = None
        scale = 1.0
        for _ in range(5):
            cand = v + scale * step
            f_c, ds_c = _residual(partition, i_load, v_slack, s_target,
                                  pv_pos, vset_sq, cand)
            m_c = _mismatch_measure(ds_c, pv_pos, f_c[n:])
            if best is None or m_c < best[0]:
                best = (m_c, cand, f_c, ds_c)
            if m_c <= mismatch:
                break
            scale *= 0.5
        mismatch, v, f, ds = best
    converged = mismatch <= settings.tolerance
    return NewtonResult(v, converged, settings.max_iterations, mismatch)


def jacobian_check(partition: AdmittancePartition,
                   case: NetworkCase,
                   voltage: np.ndarray,
                   step: float = 1e-6) -> float:
    """Largest relative gap between analytic and central-difference Jacobian.

    Entries whose analytic magnitude is at most 1e-8 are skipped (relative
    comparison is meaningless there).  Returns 0.0 when nothing qualifies.
    """
    v = np.asarray(voltage, dtype=complex)
    i_load = case.i_load_vector()
    v_slack = case.v_slack
    s_target, pv_pos, vset_sq = _case_targets(case)
    n = partition.n
    analytic = _jacobian(partition, i_load, v_slack, pv_pos, v)

    fd = np.empty_like(analytic)
    for k in range(2 * n):
        bump = np.zeros(n, dtype=complex)
        if k < n:
            bump[k] = step
        else:
            bump[k - n] = 1j * step
        f_plus, _ = _residual(partition, i_load, v_slack, s_target, pv_pos,
                              vset_sq, v + bump)
        f_minus, _ = _residual(partition, i_load, v_slack, s_target, pv_pos,
                               vset_sq, v - bump)
        fd[:, k] = (f_plus - f_minus) / (2.0 * step)

    mask = np.abs(analytic) > 1e-8
    if not mask.any():
        return 0.0
    rel = np.abs(fd - analytic)[mask] / np.abs(analytic)[mask]
    return float(rel.max())
