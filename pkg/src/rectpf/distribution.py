"""Distribution feeders: no-load closed form and its decompositions.

With every non-slack bus carrying only a ZIP load, linearizing around the
no-load voltage gives the closed form ``dv = Y^(-1) diag(1/conj(V0)) conj(S)``
whose neglected term is bounded a priori by
``max_row_norm(conj(Y)) |dv|^2``.  Splitting ``Y^(-1) = R + jX`` and the
nominal into magnitude and angle separates the P and Q pathways into real
and imaginary voltage changes; when coupling vanishes (X = 0, flat angles)
the familiar decoupled magnitude/angle estimates drop out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import invert_checked, solve_checked
from .errors import InternalCheckError, SolverError
from .linearize import (MIN_NOMINAL_VMAG, LinearSolution, NominalOrigin,
                        NominalVoltage, SolutionMethod, SolveDiagnostics,
                        compute_noload_voltage, solve_noload_closed_form)
from .netmodel import (AdmittancePartition, NetworkCase,
                       check_noload_structure)
from .residuals import max_row_norm


def solve_distribution(partition: AdmittancePartition,
                       case: NetworkCase) -> LinearSolution:
    """No-load closed form for an all-ZIP case.

    Rejects cases with PV buses (``NON_ZIP_BUS_PRESENT``): the closed form
    needs a known complex power at every bus.
    """
    if case.has_pv:
        raise SolverError(
            "distribution closed form requires every non-slack bus to be a "
            "ZIP bus", code="NON_ZIP_BUS_PRESENT")
    i_load = case.i_load_vector()
    nominal = compute_noload_voltage(partition, i_load, case.v_slack)
    s, _ = case.injection_targets()
    structure = check_noload_structure(partition, i_load, case.v_slack)
    return solve_noload_closed_form(
        partition, nominal, s,
        extra_flags={"noload_structure": structure.verdict})


@dataclass(frozen=True, eq=False)
class ImpedanceDecomposition:
    """Real and imaginary parts of the inverted admittance block.

    ``(R + jX)(G + jB) = I`` holds to inversion accuracy; both matrices are
    dense and generally full even for radial feeders.
    """

    R: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        for name in ("R", "X"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def impedance_decomposition(partition: AdmittancePartition
                            ) -> ImpedanceDecomposition:
    yinv, _ = invert_checked(partition.Y, code="SINGULAR_Y",
                             what="admittance block Y")
    return ImpedanceDecomposition(yinv.real, yinv.imag)


def _magnitude_angle(nominal: NominalVoltage):
    vmag = np.abs(nominal.V)
    if vmag.size and vmag.min() < MIN_NOMINAL_VMAG:
        raise SolverError(
            "nominal voltage magnitude vanishes at some bus; angle "
            "extraction is undefined", code="ZERO_NOLOAD_VOLTAGE")
    theta = np.arctan2(nominal.V.imag, nominal.V.real)
    return vmag, theta


@dataclass(frozen=True, eq=False)
class CouplingTerms:
    """The four P/Q pathways of the closed form, split by target component.

    ``re_from_p + re_from_q`` is the real part of the full closed-form
    perturbation and ``im_from_p + im_from_q`` the imaginary part; the
    split shows how strongly active and reactive injections cross-couple
    through X and the nominal angles.
    """

    re_from_p: np.ndarray
    re_from_q: np.ndarray
    im_from_p: np.ndarray
    im_from_q: np.ndarray

    @property
    def dv(self) -> np.ndarray:
        return (self.re_from_p + self.re_from_q
                + 1j * (self.im_from_p + self.im_from_q))


def coupling_decomposition(partition: AdmittancePartition,
                           nominal: NominalVoltage,
                           s: np.ndarray) -> CouplingTerms:
    """Split the closed-form perturbation into its P and Q pathways.

    With ``A = R diag(cos/Vm) - X diag(sin/Vm)`` and
    ``C = X diag(cos/Vm) + R diag(sin/Vm)``::

        Re dv = A P + C Q        Im dv = C P - A Q
    """
    dec = impedance_decomposition(partition)
    vmag, theta = _magnitude_angle(nominal)
    s = np.asarray(s, dtype=complex)
    p, q = s.real, s.imag
    dc = np.cos(theta) / vmag
    ds = np.sin(theta) / vmag
    a = dec.R * dc[None, :] - dec.X * ds[None, :]
    c = dec.X * dc[None, :] + dec.R * ds[None, :]
    return CouplingTerms(re_from_p=a @ p, re_from_q=c @ q,
                         im_from_p=c @ p, im_from_q=-(a @ q))


@dataclass(frozen=True, eq=False)
class DecoupledEstimate:
    """Magnitude/angle estimates under the fully decoupled assumptions.

    The assumptions (no susceptance anywhere, flat nominal angles) are
    never silently trusted: ``susceptance_norm`` and ``max_nominal_angle``
    quantify how badly they are violated for the case at hand, and are
    returned unconditionally.
    """

    v_mag: np.ndarray
    theta: np.ndarray
    susceptance_norm: float
    max_nominal_angle: float


def decoupled_estimate(partition: AdmittancePartition,
                       nominal: NominalVoltage,
                       s: np.ndarray) -> DecoupledEstimate:
    """Magnitude from P, angle from Q, through the conductance block only.

    Returns ``|V0| + G^(-1) diag(1/|V0|) P`` and
    ``angle(V0) - G^(-1) diag(1/|V0|) Q``.
    """
    vmag, theta = _magnitude_angle(nominal)
    s = np.asarray(s, dtype=complex)
    dmag, _ = solve_checked(partition.G, s.real / vmag, code="SINGULAR_G",
                            what="conductance block G")
    dang, _ = solve_checked(partition.G, s.imag / vmag, code="SINGULAR_G",
                            what="conductance block G")
    return DecoupledEstimate(
        v_mag=vmag + dmag, theta=theta - dang,
        susceptance_norm=max_row_norm(partition.B),
        max_nominal_angle=float(np.abs(theta).max(initial=0.0)))


def solve_no_current_closed_form(partition: AdmittancePartition,
                                 v_slack: complex,
                                 s: np.ndarray,
                                 i_load: np.ndarray | None = None
                                 ) -> LinearSolution:
    """Closed form specialized to feeders without constant-current loads.

    The no-load profile factors as ``V0 = V_slack * w`` with the open-circuit
    divider vector ``w = -Y^(-1) Ybar``, and the perturbation takes the form
    ``(V_slack/|V_slack|^2) Y^(-1) diag(1/conj(w)) conj(s)``.  The result is
    the same profile the general no-load closed form produces; this is
    asserted internally rather than taken on faith.

    ``i_load`` may be passed for validation; any nonzero entry raises
    ``NONZERO_CURRENT_LOAD``.
    """
    if i_load is not None and np.abs(np.asarray(i_load)).max(initial=0.0) > 0:
        raise SolverError(
            "this special form assumes no constant-current loads",
            code="NONZERO_CURRENT_LOAD")
    s = np.asarray(s, dtype=complex)
    w, _ = solve_checked(partition.Y, -partition.Ybar, code="SINGULAR_Y",
                         what="admittance block Y")
    v0 = v_slack * w
    if np.abs(v0).min(initial=np.inf) < MIN_NOMINAL_VMAG:
        raise SolverError("open-circuit voltage vanishes at some bus",
                          code="ZERO_NOLOAD_VOLTAGE")
    scaled, cond = solve_checked(partition.Y, s.conj() / w.conj(),
                                 code="SINGULAR_Y",
                                 what="admittance block Y")
    dv = (v_slack / abs(v_slack) ** 2) * scaled

    nominal = NominalVoltage(v0, NominalOrigin.NO_LOAD)
    reference = solve_noload_closed_form(partition, nominal, s)
    gap = float(np.abs(dv - reference.dv).max(initial=0.0))
    if gap > 1e-12 * (1.0 + float(np.abs(dv).max(initial=0.0))):
        raise InternalCheckError(
            f"no-current special form disagrees with the general closed "
            f"form by {gap:.3e}")
    diagnostics = SolveDiagnostics(condition=cond,
                                   flags={"no_current_special": True})
    return LinearSolution(nominal, dv, SolutionMethod.NOLOAD_CLOSED_FORM,
                          diagnostics)


def complex_error_bound(partition: AdmittancePartition,
                        sol: LinearSolution) -> float:
    """A-priori bound on the closed form's neglected complex power.

    ``max_row_norm(conj(Y)) |dv|^2``.  For the no-current special form this
    is identical to the slack-scaled statement of the same bound, since
    ``|dv|`` already carries the 1/|V_slack| factor.
    """
    if sol.method is not SolutionMethod.NOLOAD_CLOSED_FORM:
        raise ValueError("bound applies to no-load closed-form solutions")
    return max_row_norm(partition.Y.conj()) * float(
        np.linalg.norm(sol.dv)) ** 2
