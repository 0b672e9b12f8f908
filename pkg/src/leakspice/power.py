"""Static leakage reports, dynamic power and power-gating comparisons.

Circuit-level leakage is the total DC power drawn from the independent
sources with every listed input held at a static logic level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from leakspice.engine.dc import SolverOptions, solve_operating_point
from leakspice.engine.mna import MnaSystem, SolverError
from leakspice.netlist.gating import GatingOptions, SleepState, power_gate_transform
from leakspice.netlist.model import GROUND, DeviceKind, Netlist, supply_source

MAX_INPUTS = 10


class PowerDomainError(ValueError):
    pass


class StateSolveError(SolverError):
    def __init__(self, assignment, cause):
        self.assignment = dict(assignment)
        label = ", ".join(f"{k}={v:g}" for k, v in assignment.items()) or "no inputs"
        super().__init__(f"state [{label}]: {cause}")


@dataclass(frozen=True)
class StateLeakage:
    """One static input state.

    ``supply_current`` is the current delivered by the non-input voltage
    sources.  ``per_device`` maps every non-source element touching ground
    to the current it returns into ground; those values sum to the total
    current delivered by all sources.
    """

    input_assignment: dict[str, float]
    supply_current: float
    static_power: float
    per_device: dict[str, float]


@dataclass(frozen=True)
class LeakageReport:
    states: list[StateLeakage]
    temp_k: float
    worst_state: int
    mean_power: float
    vdd: float

    @property
    def powers(self) -> np.ndarray:
        return np.array([s.static_power for s in self.states])


@dataclass(frozen=True)
class GatingComparison:
    baseline: LeakageReport
    gated_active: LeakageReport
    gated_standby: LeakageReport
    standby_reduction_factor: float
    active_penalty_factor: float


def _input_names(netlist: Netlist, input_sources) -> list[str]:
    names = []
    for name in input_sources:
        if not netlist.has_device(name) or netlist.device(name).kind is not DeviceKind.VSOURCE:
            raise PowerDomainError(f"input {name} is not a voltage source in the netlist")
        names.append(netlist.device(name).name)
    if len({n.lower() for n in names}) != len(names):
        raise PowerDomainError("input sources listed more than once")
    if len(names) > MAX_INPUTS:
        raise PowerDomainError(f"at most {MAX_INPUTS} inputs are supported, got {len(names)}")
    return names


def _ground_returns(system: MnaSystem, x) -> dict[str, float]:
    sources = {src.name for src, *_ in system.vsources} | {src.name for src, *_ in system.isources}
    out = {}
    for name, terms in system.terminal_currents(x).items():
        if name in sources or GROUND not in terms:
            continue
        # terminal_currents gives current into the element from each node
        out[name] = -float(terms[GROUND])
    return out


def leakage_report(netlist: Netlist, input_sources=(), temp_k: float = 300.0, vdd: float | None = None,
                   options: SolverOptions = SolverOptions()) -> LeakageReport:
    """Solve every static input state and collect supply current and power.

    Each input source is driven to 0 or ``vdd``; states are enumerated with
    the first listed input as the most significant bit.  ``vdd`` defaults to
    the largest grounded non-input DC source.  Every state is solved from a
    cold start so the report does not depend on state order.
    """
    inputs = _input_names(netlist, input_sources)
    if vdd is None:
        supply = supply_source(netlist, exclude=inputs)
        if supply is None:
            raise PowerDomainError("no supply source found; pass vdd explicitly")
        vdd = supply.dc
    input_keys = {n.lower() for n in inputs}
    system = MnaSystem(netlist, temp_k)
    states = []
    for levels in itertools.product((0.0, vdd), repeat=len(inputs)):
        assignment = dict(zip(inputs, levels))
        for name, level in assignment.items():
            system.set_source(name, level)
        try:
            op = solve_operating_point(system, None, options)
        except SolverError as exc:
            raise StateSolveError(assignment, exc) from exc
        supply_current = 0.0
        power = 0.0
        for src, p, m, k in system.vsources:
            delivered = -float(op.x[k])
            power += system.source_value(src) * delivered
            if src.name.lower() not in input_keys:
                supply_current += delivered
        for src, p, m in system.isources:
            v_across = system.voltage(op.x, p) - system.voltage(op.x, m)
            power -= system.source_value(src) * v_across
        states.append(StateLeakage(assignment, supply_current, power, _ground_returns(system, op.x)))
    powers = [s.static_power for s in states]
    worst = int(np.argmax(powers))
    return LeakageReport(states, float(temp_k), worst, float(np.mean(powers)), float(vdd))


def compare_gating(netlist: Netlist, options: GatingOptions = GatingOptions(), temp_k: float = 300.0,
                   input_sources=(), vdd: float | None = None,
                   solver: SolverOptions = SolverOptions()) -> GatingComparison:
    """Leakage before gating and after gating in the ACTIVE and STANDBY states."""
    inputs = _input_names(netlist, input_sources)
    if vdd is None:
        supply = supply_source(netlist, exclude=inputs)
        vdd = None if supply is None else supply.dc
    baseline = leakage_report(netlist, inputs, temp_k, vdd, solver)
    active = power_gate_transform(netlist, replace(options, sleep_state=SleepState.ACTIVE))
    standby = power_gate_transform(netlist, replace(options, sleep_state=SleepState.STANDBY))
    gated_active = leakage_report(active, inputs, temp_k, baseline.vdd, solver)
    gated_standby = leakage_report(standby, inputs, temp_k, baseline.vdd, solver)
    return GatingComparison(
        baseline=baseline,
        gated_active=gated_active,
        gated_standby=gated_standby,
        standby_reduction_factor=_ratio(baseline.mean_power, gated_standby.mean_power),
        active_penalty_factor=_ratio(gated_active.mean_power, baseline.mean_power),
    )


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return float("inf") if num > 0 else float("nan")
    return num / den


def dynamic_power_estimate(c_load: float, vdd: float, freq: float, activity: float) -> float:
    """Switching power ``activity * c_load * vdd**2 * freq`` in watts."""
    for what, val in (("c_load", c_load), ("vdd", vdd), ("freq", freq), ("activity", activity)):
        if not np.isfinite(val) or val < 0:
            raise PowerDomainError(f"{what} must be finite and non-negative, got {val}")
    if activity > 1:
        raise PowerDomainError(f"activity must not exceed 1, got {activity}")
    return activity * c_load * vdd * vdd * freq


def static_vs_dynamic_share(leakage: LeakageReport | float, dynamic: float) -> float:
    """Fraction of total power that is static: ``static / (static + dynamic)``."""
    static = leakage.mean_power if isinstance(leakage, LeakageReport) else float(leakage)
    if not (np.isfinite(dynamic) and dynamic >= 0):
        raise PowerDomainError(f"dynamic power must be finite and non-negative, got {dynamic}")
    if not (np.isfinite(static) and static >= 0):
        raise PowerDomainError(f"static power must be finite and non-negative, got {static}")
    total = static + dynamic
    if total == 0:
        raise PowerDomainError("share is undefined when static and dynamic power are both zero")
    return static / total
