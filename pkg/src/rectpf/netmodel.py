"""Network data model and admittance-matrix construction.

Buses are numbered 1..N+1 with the slack (reference) bus fixed at N+1.
All stored quantities are per-unit on the case's MVA base; angles are
radians (the case-file layer converts from degrees).  Every type here is
immutable after construction, so instances are safe to share freely.

Index convention: bus id ``k`` (1-based) occupies position ``k - 1`` in all
vectors and matrices over the non-slack buses; the slack bus has no position.

Admittance partition of the full nodal equations, with the slack voltage
pinned::

    [ I ]     [ Y     Ybar    ] [ V       ]
    [ I_s ] = [ Ybar^T  y_slack ] [ V_slack ]

where Y is the N x N block over non-slack buses.  Storage is dense; the
package targets desk-scale studies (N up to a few hundred).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import CaseValidationError


class BusKind(Enum):
    SLACK = "slack"
    PV = "pv"
    ZIP = "zip"


@dataclass(frozen=True)
class ZipLoad:
    """Parallel constant-impedance / constant-current / constant-power load.

    Sign convention: ``power`` and ``current`` are injections into the bus,
    so consumption is negative.  ``shunt_admittance`` is the constant
    impedance part expressed as an admittance; it is stamped onto the bus
    diagonal together with any line shunts.
    """

    shunt_admittance: complex = 0j
    current: complex = 0j
    power: complex = 0j

    def is_zero(self) -> bool:
        return (self.shunt_admittance == 0 and self.current == 0
                and self.power == 0)


@dataclass(frozen=True)
class PvSetpoint:
    """Generator setpoint: fixed active injection and voltage magnitude."""

    p: float
    v_mag: float


@dataclass(frozen=True)
class SlackVoltage:
    """Reference-bus voltage: magnitude and angle (radians)."""

    v_mag: float
    theta: float = 0.0

    @property
    def phasor(self) -> complex:
        return self.v_mag * cmath.exp(1j * self.theta)


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    load: ZipLoad = field(default_factory=ZipLoad)
    pv_setpoint: PvSetpoint | None = None
    slack_voltage: SlackVoltage | None = None


@dataclass(frozen=True)
class Branch:
    """Pi-model branch: series admittance plus a lumped total shunt.

    The total shunt admittance is split 50/50 between the two terminals.
    Parallel branches between the same pair of buses simply sum.
    """

    from_bus: int
    to_bus: int
    series_admittance: complex
    shunt_admittance_total: complex = 0j


def _finite(x) -> bool:
    if isinstance(x, complex):
        return math.isfinite(x.real) and math.isfinite(x.imag)
    return math.isfinite(x)


def _validate_bus(bus: Bus, problems: list[str]) -> None:
    where = f"bus {bus.id}"
    for name, val in (("shunt_admittance", bus.load.shunt_admittance),
                      ("current", bus.load.current),
                      ("power", bus.load.power)):
        if not _finite(val):
            problems.append(f"{where}: load.{name} is not finite")
    if bus.kind is BusKind.SLACK:
        if bus.slack_voltage is None:
            problems.append(f"{where}: slack bus needs a slack_voltage")
        else:
            if not (_finite(bus.slack_voltage.v_mag)
                    and bus.slack_voltage.v_mag > 0):
                problems.append(f"{where}: slack v_mag must be positive")
            if not _finite(bus.slack_voltage.theta):
                problems.append(f"{where}: slack theta is not finite")
        if bus.pv_setpoint is not None:
            problems.append(f"{where}: slack bus cannot carry a pv_setpoint")
        if not bus.load.is_zero():
            problems.append(f"{where}: slack bus cannot carry a load")
    elif bus.kind is BusKind.PV:
        if bus.slack_voltage is not None:
            problems.append(f"{where}: only the slack bus has slack_voltage")
        if bus.pv_setpoint is None:
            problems.append(f"{where}: pv bus needs a pv_setpoint")
        else:
            if not (_finite(bus.pv_setpoint.v_mag)
                    and bus.pv_setpoint.v_mag > 0):
                problems.append(f"{where}: pv v_mag must be positive")
            if not _finite(bus.pv_setpoint.p):
                problems.append(f"{where}: pv p is not finite")
        if bus.load.power != 0:
            # The active injection of a pv bus is its setpoint; a separate
            # constant-power load term would be ambiguous.
            problems.append(
                f"{where}: pv bus cannot carry a constant-power load")
    else:
        if bus.slack_voltage is not None:
            problems.append(f"{where}: only the slack bus has slack_voltage")
        if bus.pv_setpoint is not None:
            problems.append(f"{where}: only pv buses have pv_setpoint")


@dataclass(frozen=True)
class NetworkCase:
    """A validated network: N+1 buses, branches, MVA base.

    Construction validates the whole case and raises
    :class:`CaseValidationError` listing every violation.  Buses are stored
    sorted by id; ids must be contiguous 1..N+1 with the slack bus at N+1.
    """

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_mva: float = 100.0

    def __post_init__(self):
        buses = tuple(sorted(self.buses, key=lambda b: b.id))
        object.__setattr__(self, "buses", buses)
        object.__setattr__(self, "branches", tuple(self.branches))
        problems: list[str] = []
        if not (_finite(self.base_mva) and self.base_mva > 0):
            problems.append("base_mva must be a positive finite number")
        if len(buses) < 2:
            problems.append("a case needs at least two buses")
        ids = [b.id for b in buses]
        if ids != list(range(1, len(buses) + 1)):
            problems.append(
                f"bus ids must be contiguous 1..{len(buses)}, got {ids}")
        slack_ids = [b.id for b in buses if b.kind is BusKind.SLACK]
        if len(slack_ids) != 1:
            problems.append(
                f"exactly one slack bus required, found {len(slack_ids)}")
        elif buses and slack_ids[0] != buses[-1].id:
            problems.append(
                f"slack bus must have the highest id {buses[-1].id}, "
                f"got {slack_ids[0]}")
        for bus in buses:
            _validate_bus(bus, problems)
        id_set = set(ids)
        for i, br in enumerate(self.branches):
            where = f"branch[{i}] ({br.from_bus}-{br.to_bus})"
            if br.from_bus not in id_set or br.to_bus not in id_set:
                problems.append(f"{where}: endpoint is not a known bus id")
            if br.from_bus == br.to_bus:
                problems.append(f"{where}: endpoints must differ")
            if not _finite(br.series_admittance):
                problems.append(f"{where}: series admittance is not finite")
            elif br.series_admittance == 0:
                problems.append(f"{where}: series admittance must be nonzero")
            if not _finite(br.shunt_admittance_total):
                problems.append(f"{where}: shunt admittance is not finite")
        if not problems:
            edges = [(br.from_bus - 1, br.to_bus - 1) for br in self.branches]
            if not _connected(len(buses), edges):
                problems.append("network graph is not connected")
        if problems:
            raise CaseValidationError(problems)

    # -- accessors ---------------------------------------------------------

    @property
    def n(self) -> int:
        """Number of non-slack buses."""
        return len(self.buses) - 1

    @property
    def slack(self) -> Bus:
        return self.buses[-1]

    @property
    def non_slack(self) -> tuple[Bus, ...]:
        return self.buses[:-1]

    @property
    def v_slack(self) -> complex:
        return self.slack.slack_voltage.phasor

    @property
    def has_pv(self) -> bool:
        return any(b.kind is BusKind.PV for b in self.non_slack)

    def i_load_vector(self) -> np.ndarray:
        """Constant-current injections at non-slack buses, (N,) complex."""
        return np.array([b.load.current for b in self.non_slack],
                        dtype=complex)

    def injection_targets(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-bus complex power targets and a Q-known mask.

        PV buses contribute their active setpoint with a zero imaginary
        placeholder and ``q_known`` False: their reactive injection is free,
        so the imaginary part of any mismatch against this target is not
        meaningful and callers must mask it.
        """
        s = np.empty(self.n, dtype=complex)
        q_known = np.empty(self.n, dtype=bool)
        for i, b in enumerate(self.non_slack):
            if b.kind is BusKind.PV:
                s[i] = complex(b.pv_setpoint.p, 0.0)
                q_known[i] = False
            else:
                s[i] = b.load.power
                q_known[i] = True
        return s, q_known

    def p_vector(self) -> np.ndarray:
        """Active-power injections at non-slack buses, (N,) real."""
        return self.injection_targets()[0].real


def scale_power_injections(case: NetworkCase, alpha: float) -> NetworkCase:
    """Scale every constant-power injection (and PV setpoint P) by ``alpha``.

    Constant-impedance and constant-current load parts are left untouched,
    so the no-load voltage profile of the scaled case is unchanged.
    """
    buses = []
    for b in case.buses:
        load = ZipLoad(b.load.shunt_admittance, b.load.current,
                       b.load.power * alpha)
        setpoint = b.pv_setpoint
        if setpoint is not None:
            setpoint = PvSetpoint(setpoint.p * alpha, setpoint.v_mag)
        buses.append(Bus(b.id, b.kind, load, setpoint, b.slack_voltage))
    return NetworkCase(tuple(buses), case.branches, case.base_mva)


def _connected(n_nodes: int, edges) -> bool:
    """True when the undirected graph on 0..n_nodes-1 is connected."""
    if n_nodes <= 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n_nodes)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == n_nodes


@dataclass(frozen=True, eq=False)
class AdmittancePartition:
    """Slack-partitioned admittance data.

    ``Y`` is the N x N block over non-slack buses, ``Ybar`` the (N,) coupling
    column to the slack and ``y_slack`` the slack self-admittance.  The shunt
    vector obeys ``Ysh = Y @ 1 + Ybar`` by construction: series terms cancel
    in the row sum, leaving exactly the lumped shunts (line halves plus the
    constant-impedance load parts).
    """

    Y: np.ndarray
    Ybar: np.ndarray
    y_slack: complex

    def __post_init__(self):
        y = np.array(self.Y, dtype=complex)
        ybar = np.array(self.Ybar, dtype=complex)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValueError("Y must be a square matrix")
        if ybar.shape != (y.shape[0],):
            raise ValueError("Ybar must be a vector matching Y")
        y.flags.writeable = False
        ybar.flags.writeable = False
        object.__setattr__(self, "Y", y)
        object.__setattr__(self, "Ybar", ybar)
        object.__setattr__(self, "y_slack", complex(self.y_slack))

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def G(self) -> np.ndarray:
        return self.Y.real

    @property
    def B(self) -> np.ndarray:
        return self.Y.imag

    @cached_property
    def Ysh(self) -> np.ndarray:
        ysh = self.Y.sum(axis=1) + self.Ybar
        ysh.flags.writeable = False
        return ysh

    @property
    def Gsh(self) -> np.ndarray:
        return self.Ysh.real

    @property
    def Bsh(self) -> np.ndarray:
        return self.Ysh.imag

    def slack_adjacent_ids(self) -> tuple[int, ...]:
        """1-based ids of buses directly coupled to the slack."""
        return tuple(int(i) + 1 for i in np.flatnonzero(self.Ybar != 0))

    def full_matrix(self) -> np.ndarray:
        """Reassembled (N+1) x (N+1) nodal admittance matrix."""
        n = self.n
        full = np.zeros((n + 1, n + 1), dtype=complex)
        full[:n, :n] = self.Y
        full[:n, n] = self.Ybar
        full[n, :n] = self.Ybar
        full[n, n] = self.y_slack
        return full


def build_admittance(case: NetworkCase) -> AdmittancePartition:
    """Stamp branches and shunt loads into the partitioned admittance.

    The case is already validated (references, connectivity), so this is a
    straight accumulation pass.  Branch stamping is symmetric, hence the
    reassembled full matrix is symmetric exactly.
    """
    m = len(case.buses)
    full = np.zeros((m, m), dtype=complex)
    for br in case.branches:
        f, t = br.from_bus - 1, br.to_bus - 1
        ys = br.series_admittance
        half = br.shunt_admittance_total / 2.0
        full[f, f] += ys + half
        full[t, t] += ys + half
        full[f, t] -= ys
        full[t, f] -= ys
    for bus in case.buses:
        full[bus.id - 1, bus.id - 1] += bus.load.shunt_admittance
    n = m - 1
    return AdmittancePartition(full[:n, :n], full[:n, n], full[n, n])


def extract_shunts(partition: AdmittancePartition) -> np.ndarray:
    """Per-bus shunt admittances recovered from the partition row sums."""
    return partition.Ysh


@dataclass(frozen=True, eq=False)
class StructureDiagnosis:
    """Structural conditions for a nonsingular no-load linearization.

    The no-load closed form needs ``diag(conj(V)) Y`` nonsingular.  That is
    guaranteed when (i) the non-slack graph is connected and Y is diagonally
    dominant row-wise, strictly at the slack-adjacent buses, and (ii) the
    no-load source ``I_L - Ybar * V_slack`` is not the zero vector (else the
    no-load voltage itself vanishes).
    """

    connected: bool
    dominance_margins: np.ndarray    # |y_ll| - sum_{m != l} |y_lm|, per bus
    weak_rows: np.ndarray            # margin >= -tol, per bus
    strict_rows: np.ndarray          # margin > +tol, per bus
    slack_adjacent: tuple[int, ...]  # 1-based ids coupled to the slack
    strict_at_slack_adjacent: bool
    source_nonzero: bool
    verdict: bool
    reasons: tuple[str, ...]


def check_noload_structure(partition: AdmittancePartition,
                           i_load: np.ndarray,
                           v_slack: complex) -> StructureDiagnosis:
    """Evaluate the structural no-load solvability conditions.

    Dominance comparisons use a relative tolerance of 1e-12 on the row
    scale, so exact ties count as weak but not strict.
    """
    y = partition.Y
    n = partition.n
    diag = np.abs(np.diag(y))
    offsum = np.abs(y).sum(axis=1) - diag
    margins = diag - offsum
    tol = 1e-12 * (diag + offsum)
    weak = margins >= -tol
    strict = margins > tol

    off_edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if y[i, j] != 0 or y[j, i] != 0]
    connected = _connected(n, off_edges)

    slack_adjacent = partition.slack_adjacent_ids()
    strict_at_adjacent = bool(slack_adjacent) and all(
        strict[k - 1] for k in slack_adjacent)

    source = np.asarray(i_load, dtype=complex) - partition.Ybar * v_slack
    scale = max(1.0, float(np.abs(partition.Ybar * v_slack).max(initial=0.0)))
    source_nonzero = bool(np.abs(source).max(initial=0.0) > 1e-12 * scale)

    reasons = []
    if not connected:
        reasons.append("DISCONNECTED")
    if not weak.all():
        reasons.append("NOT_DIAGONALLY_DOMINANT")
    if not strict_at_adjacent:
        reasons.append("NO_STRICT_DOMINANCE")
    if not source_nonzero:
        reasons.append("NO_LOAD_VOLTAGE_ZERO")
    verdict = not reasons
    return StructureDiagnosis(
        connected=connected, dominance_margins=margins, weak_rows=weak,
        strict_rows=strict, slack_adjacent=slack_adjacent,
        strict_at_slack_adjacent=strict_at_adjacent,
        source_nonzero=source_nonzero, verdict=verdict,
        reasons=tuple(reasons))
