"""Lossless transmission networks: flat-profile solution and DC recovery.

For a network with no resistive part anywhere (series or shunt) and a unity
slack voltage, linearizing around the flat profile leaves the active-power
rows depending on the perturbation through::

    diag(re_coeff) dRe + im_coeff dIm = P + Re(I_L)

with ``re_coeff = -Re(I_L)`` and ``im_coeff = -(B - diag(Bsh)) - diag(Im(I_L))``.
That is N equations in 2N unknowns; fixing ``dRe = 0`` and solving the
square system for ``dIm`` yields a profile whose neglected active-power
quadratic term is identically zero, since with zero conductance the term
reduces to ``-diag(dRe) B dIm + diag(dIm) B dRe``.  The reactive error it
does commit is bounded a priori by ``max_row_norm(B) |dIm|^2``.

Dropping the current loads and shunts from the same active-power rows and
reading ``dIm`` as a small angle recovers the classical DC power flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import solve_checked
from .errors import SolverError
from .linearize import (LinearSolution, SolutionMethod, SolveDiagnostics,
                        flat_nominal)
from .netmodel import AdmittancePartition, NetworkCase
from .residuals import max_row_norm

# Largest conductance entry (series or shunt) tolerated by the lossless gate.
LOSSLESS_GMAX = 1e-9


@dataclass(frozen=True, eq=False)
class LosslessSystem:
    """Data of the active-power rows at the flat nominal of a lossless grid.

    ``re_coeff`` is the diagonal coefficient of the real perturbation (kept
    as a vector), ``im_coeff`` the full matrix on the imaginary part.
    """

    B: np.ndarray
    Bsh: np.ndarray
    re_coeff: np.ndarray
    im_coeff: np.ndarray
    p: np.ndarray
    i_load: np.ndarray

    def __post_init__(self):
        for name in ("B", "Bsh", "re_coeff", "im_coeff", "p", "i_load"):
            arr = np.array(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.B.shape[0]


def build_lossless_system(partition: AdmittancePartition,
                          case: NetworkCase) -> LosslessSystem:
    """Gate a case into the lossless flat-profile formulation.

    Raises ``LOSSY_NETWORK`` when any conductance entry exceeds
    :data:`LOSSLESS_GMAX` and ``SLACK_NOT_UNITY`` unless the slack voltage
    is exactly one per-unit at zero angle (the formulation is derived for
    that reference; no attempt is made to rescale).
    """
    gmax = float(np.abs(partition.G).max(initial=0.0))
    if gmax > LOSSLESS_GMAX:
        raise SolverError(
            f"network has conductance up to {gmax:.3e} pu; the lossless "
            f"formulation requires at most {LOSSLESS_GMAX:.0e}",
            code="LOSSY_NETWORK")
    if abs(case.v_slack - 1.0) > 1e-12:
        raise SolverError(
            "lossless flat-profile solve requires slack voltage 1.0 at "
            "zero angle", code="SLACK_NOT_UNITY")
    b = partition.B
    bsh = partition.Bsh
    i_load = case.i_load_vector()
    re_coeff = -i_load.real
    im_coeff = -(b - np.diag(bsh)) - np.diag(i_load.imag)
    return LosslessSystem(B=b, Bsh=bsh, re_coeff=re_coeff,
                          im_coeff=im_coeff, p=case.p_vector(),
                          i_load=i_load)


@dataclass(frozen=True, eq=False)
class FlatSolveConditions:
    """Per-bus dominance conditions guaranteeing the flat solve's system.

    ``weak`` must hold at every bus and ``strict`` at one slack-adjacent
    bus at least; together with connectivity they make ``im_coeff``
    invertible.  ``lhs``/``rhs`` keep the raw compared quantities for
    reporting.
    """

    lhs: np.ndarray
    rhs: np.ndarray
    weak: np.ndarray
    strict: np.ndarray
    strict_at_slack_adjacent: bool
    overall: bool

    def violated_buses(self) -> tuple[int, ...]:
        return tuple(int(i) + 1 for i in np.flatnonzero(~self.weak))


def check_flat_conditions(sys: LosslessSystem,
                          slack_adjacent) -> FlatSolveConditions:
    """Evaluate the dominance conditions for the flat-profile solve.

    Per bus the net susceptance tied to its own voltage (diagonal minus
    shunt, i.e. minus the sum of all incident series susceptances) shifted
    by the imaginary current load must weakly dominate the row of couplings
    to the other non-slack buses; strictly so at one slack-adjacent bus.
    ``slack_adjacent`` is a collection of 1-based bus ids.
    """
    b = sys.B
    diag = np.diag(b)
    lhs = np.abs(diag - sys.Bsh - sys.i_load.imag)
    rhs = np.abs(b).sum(axis=1) - np.abs(diag)
    tol = 1e-12 * (lhs + rhs)
    weak = lhs >= rhs - tol
    strict = lhs > rhs + tol
    adjacent = sorted(int(k) for k in slack_adjacent)
    strict_at = any(strict[k - 1] for k in adjacent)
    overall = bool(weak.all() and strict_at)
    return FlatSolveConditions(lhs=lhs, rhs=rhs, weak=weak, strict=strict,
                               strict_at_slack_adjacent=strict_at,
                               overall=overall)


def solve_lossless_flat(sys: LosslessSystem,
                        conditions: FlatSolveConditions,
                        *, override_conditions: bool = False
                        ) -> LinearSolution:
    """Solve the active-power rows at the flat nominal with ``dRe = 0``.

    Only the N active rows are enforced; the reactive injections are left
    to whatever the profile implies.  When the dominance conditions fail
    the solve refuses unless ``override_conditions`` is set, in which case
    the violated buses are recorded in the diagnostics and the LU pivot
    check is the only remaining safeguard (``SINGULAR_FLAT_SYSTEM``).
    """
    violated = conditions.violated_buses()
    if not conditions.overall and not override_conditions:
        raise SolverError(
            "flat-profile dominance conditions do not hold "
            f"(buses {list(violated) or 'strictness'}); pass the override "
            "to attempt the solve anyway",
            code="FLAT_CONDITIONS_VIOLATED")
    rhs = sys.p + sys.i_load.real
    dv_im, cond = solve_checked(sys.im_coeff, rhs,
                                code="SINGULAR_FLAT_SYSTEM",
                                what="flat-profile coefficient matrix")
    diagnostics = SolveDiagnostics(
        condition=cond,
        flags={"flat_profile_conditions": conditions.overall},
        override_used=bool(override_conditions and not conditions.overall),
        violated_buses=violated if not conditions.overall else ())
    return LinearSolution(flat_nominal(sys.n), 1j * dv_im,
                          SolutionMethod.LOSSLESS_FLAT, diagnostics)


def reactive_error_bound(sys: LosslessSystem, sol: LinearSolution) -> float:
    """A-priori bound on the reactive quadratic term of the flat solve.

    With ``dRe = 0`` that term is ``-diag(dIm) B dIm``, so its norm is at
    most ``max_row_norm(B) |dIm|^2``.
    """
    if sol.method is not SolutionMethod.LOSSLESS_FLAT:
        raise ValueError("bound applies to flat-profile solutions only")
    dim = sol.dv.imag
    return max_row_norm(sys.B) * float(np.linalg.norm(dim)) ** 2


def solve_classical_dc(partition: AdmittancePartition,
                       p: np.ndarray,
                       keep_shunt_conductance: bool = False) -> np.ndarray:
    """Classical DC power flow: ``-(B - diag(Bsh)) theta = P``.

    This drops every conductance and current load from the flat-profile
    active rows and reads the imaginary perturbation as a bus angle (the
    small-angle identification happens only here).  With
    ``keep_shunt_conductance`` the shunt-conductance load stays on the
    right-hand side (``P - Gsh``); the difference between the two variants
    is exactly ``(B - diag(Bsh))^(-1) Gsh``.
    """
    p = np.asarray(p, dtype=float)
    m = -(partition.B - np.diag(partition.Bsh))
    rhs = p - partition.Gsh if keep_shunt_conductance else p
    theta, _ = solve_checked(m, rhs, code="SINGULAR_B",
                             what="DC susceptance matrix")
    return theta
