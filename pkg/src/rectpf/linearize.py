"""First-order perturbation model of the power-balance equations.

The complex power injected at the non-slack buses for a voltage ``V`` is::

    S(V) = diag(V) conj(Y V + Ybar V_slack - I_L)

Writing ``V = V0 + dv`` for a nominal profile ``V0`` and collecting terms
by order of ``dv`` gives an exactly linear model plus one quadratic
remainder::

    diag(direct) dv + cross conj(dv) = S + offset      (linear model)
    S(V0 + dv) - S = [linear residual] + diag(dv) conj(Y) conj(dv)

with ``direct = conj(Y) conj(V0) + conj(Ybar V_slack) - conj(I_L)``,
``cross = diag(V0) conj(Y)`` and ``offset = -V0 * direct``.  This module
assembles those coefficients, solves the stacked 2N real system in the
general case, and provides the closed form available at the no-load nominal
(where ``direct`` and ``offset`` vanish identically).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from ._linalg import solve_checked
from .errors import SolverError
from .netmodel import AdmittancePartition, NetworkCase

# Nominal-voltage entries below this magnitude make the closed form (which
# divides by conj(V0)) meaningless.
MIN_NOMINAL_VMAG = 1e-12


class NominalOrigin(Enum):
    FLAT = "flat"
    NO_LOAD = "no-load"
    USER = "user"


class SolutionMethod(Enum):
    GENERAL_2N = "general-2n"
    NOLOAD_CLOSED_FORM = "noload-closed-form"
    LOSSLESS_FLAT = "lossless-flat"
    CLASSICAL_DC = "classical-dc"


@dataclass(frozen=True, eq=False)
class NominalVoltage:
    """A nominal complex voltage profile and where it came from."""

    V: np.ndarray
    origin: NominalOrigin

    def __post_init__(self):
        v = np.array(self.V, dtype=complex)
        if v.ndim != 1:
            raise ValueError("nominal voltage must be a vector")
        if not np.isfinite(v.view(float)).all():
            raise ValueError("nominal voltage must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "V", v)

    @property
    def n(self) -> int:
        return self.V.shape[0]


def flat_nominal(n: int) -> NominalVoltage:
    """The flat profile: one per-unit, zero angle, at every bus."""
    return NominalVoltage(np.ones(n, dtype=complex), NominalOrigin.FLAT)


@dataclass(frozen=True, eq=False)
class PerturbationCoefficients:
    """Coefficients of the linear model at a given nominal voltage.

    ``direct`` is the diagonal coefficient of the perturbation itself (kept
    as a vector; the matrix is diagonal by construction), ``cross`` the full
    matrix multiplying the conjugated perturbation, and ``offset`` the
    constant term moved to the right-hand side.  ``offset == -V0 * direct``
    always; both reuse the same shared subexpression.
    """

    nominal: NominalVoltage
    direct: np.ndarray
    cross: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        for name in ("direct", "cross", "offset"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.direct.shape[0]


def assemble_coefficients(partition: AdmittancePartition,
                          nominal: NominalVoltage,
                          i_load: np.ndarray,
                          v_slack: complex) -> PerturbationCoefficients:
    """Build the linear-model coefficients around ``nominal``."""
    v0 = nominal.V
    if v0.shape[0] != partition.n:
        raise ValueError("nominal voltage length does not match the network")
    direct = (partition.Y.conj() @ v0.conj()
              + partition.Ybar.conj() * np.conj(v_slack)
              - np.conj(np.asarray(i_load, dtype=complex)))
    cross = v0[:, None] * partition.Y.conj()
    offset = -v0 * direct
    return PerturbationCoefficients(nominal, direct, cross, offset)


def real_block_matrix(coeffs: PerturbationCoefficients) -> np.ndarray:
    """Stack the complex linear model into its 2N x 2N real form.

    Unknown ordering is ``[Re dv; Im dv]``; row ordering is active-power
    rows then reactive-power rows.  The same matrix is the power-flow
    Jacobian at the nominal point, which is why the Newton solver reuses
    this builder.
    """
    dre = np.diag(coeffs.direct.real)
    dim = np.diag(coeffs.direct.imag)
    cre = coeffs.cross.real
    cim = coeffs.cross.imag
    return np.block([[dre + cre, -dim + cim],
                     [dim + cim, dre - cre]])


def linear_injection(coeffs: PerturbationCoefficients,
                     dv: np.ndarray) -> np.ndarray:
    """Complex power the linear model attributes to a perturbation ``dv``.

    For a perturbation produced by a full-system solve this reproduces the
    requested injection up to solver roundoff.  For partially constrained
    solves (flat lossless profile: active rows only) the imaginary part is
    the model's own reactive prediction.
    """
    dv = np.asarray(dv, dtype=complex)
    return coeffs.direct * dv + coeffs.cross @ dv.conj() - coeffs.offset


@dataclass(frozen=True, eq=False)
class SolveDiagnostics:
    """What a solver observed: conditioning and named gate checks."""

    condition: float | None = None
    singular: bool = False
    flags: Mapping[str, bool] = field(default_factory=dict)
    override_used: bool = False
    violated_buses: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "flags", MappingProxyType(dict(self.flags)))


@dataclass(frozen=True, eq=False)
class LinearSolution:
    """A solved voltage perturbation around a nominal profile."""

    nominal: NominalVoltage
    dv: np.ndarray
    method: SolutionMethod
    diagnostics: SolveDiagnostics

    def __post_init__(self):
        dv = np.array(self.dv, dtype=complex)
        dv.flags.writeable = False
        object.__setattr__(self, "dv", dv)

    def approx_voltage(self) -> np.ndarray:
        return self.nominal.V + self.dv


def solve_general_2n(coeffs: PerturbationCoefficients,
                     s: np.ndarray,
                     extra_flags: Mapping[str, bool] | None = None
                     ) -> LinearSolution:
    """Solve the full 2N real system for a fully specified injection ``s``.

    Both active and reactive rows are enforced, so every bus must carry a
    known complex power target.  Raises ``SINGULAR_SYSTEM`` when the LU
    pivot ratio collapses; the coefficients at an arbitrary nominal carry no
    general nonsingularity guarantee, so this is detected, never assumed.
    """
    s = np.asarray(s, dtype=complex)
    n = coeffs.n
    m = real_block_matrix(coeffs)
    rhs = np.concatenate([s.real + coeffs.offset.real,
                          s.imag + coeffs.offset.imag])
    x, cond = solve_checked(m, rhs, code="SINGULAR_SYSTEM",
                            what="stacked 2N perturbation system")
    dv = x[:n] + 1j * x[n:]
    return LinearSolution(
        coeffs.nominal, dv, SolutionMethod.GENERAL_2N,
        SolveDiagnostics(condition=cond, flags=dict(extra_flags or {})))


def compute_noload_voltage(partition: AdmittancePartition,
                           i_load: np.ndarray,
                           v_slack: complex) -> NominalVoltage:
    """Voltage with every constant-power injection removed.

    Solves ``Y V0 = I_L - Ybar V_slack``.  Raises ``SINGULAR_Y`` when Y
    cannot be factored and ``ZERO_NOLOAD_VOLTAGE`` when any entry of the
    profile is numerically zero (the closed form divides by it).
    """
    rhs = np.asarray(i_load, dtype=complex) - partition.Ybar * v_slack
    v0, _ = solve_checked(partition.Y, rhs, code="SINGULAR_Y",
                          what="admittance block Y")
    if v0.size and np.abs(v0).min() < MIN_NOMINAL_VMAG:
        raise SolverError(
            "no-load voltage vanishes at some bus; the closed form is "
            "undefined there", code="ZERO_NOLOAD_VOLTAGE")
    return NominalVoltage(v0, NominalOrigin.NO_LOAD)


def solve_noload_closed_form(partition: AdmittancePartition,
                             nominal: NominalVoltage,
                             s: np.ndarray,
                             extra_flags: Mapping[str, bool] | None = None
                             ) -> LinearSolution:
    """Closed-form perturbation at the no-load nominal.

    At the no-load profile the ``direct`` coefficient vanishes identically
    and the linear model collapses to ``diag(conj(V0)) Y dv = conj(s)``.
    """
    if nominal.origin is not NominalOrigin.NO_LOAD:
        raise ValueError("the closed form is only valid at a no-load nominal")
    v0 = nominal.V
    if np.abs(v0).min(initial=np.inf) < MIN_NOMINAL_VMAG:
        raise SolverError("nominal voltage vanishes at some bus",
                          code="ZERO_NOLOAD_VOLTAGE")
    s = np.asarray(s, dtype=complex)
    system = v0.conj()[:, None] * partition.Y
    dv, cond = solve_checked(system, s.conj(), code="SINGULAR_Y",
                             what="scaled admittance block diag(conj(V0)) Y")
    return LinearSolution(
        nominal, dv, SolutionMethod.NOLOAD_CLOSED_FORM,
        SolveDiagnostics(condition=cond, flags=dict(extra_flags or {})))


def solve_general(partition: AdmittancePartition,
                  case: NetworkCase,
                  nominal: NominalVoltage | None = None) -> LinearSolution:
    """Case-level general solve at an arbitrary nominal (flat by default).

    The stacked system enforces both power rows at every bus, which leaves
    no room for a free reactive injection: cases containing PV buses are
    rejected with ``PV_UNSUPPORTED_IN_GENERAL``.
    """
    if case.has_pv:
        raise SolverError(
            "the general 2N solve needs a fully specified complex power at "
            "every bus; PV buses are not supported here",
            code="PV_UNSUPPORTED_IN_GENERAL")
    if nominal is None:
        nominal = flat_nominal(partition.n)
    s, _ = case.injection_targets()
    coeffs = assemble_coefficients(partition, nominal, case.i_load_vector(),
                                   case.v_slack)
    return solve_general_2n(coeffs, s)
