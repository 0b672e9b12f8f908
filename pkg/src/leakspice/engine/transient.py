"""Fixed-step transient analysis with capacitor companion models."""

from __future__ import annotations

import math

import numpy as np

from leakspice.engine.dc import SolverOptions, _record, newton, solve_system
from leakspice.engine.mna import MnaSystem, SolverError
from leakspice.engine.results import Waveform
from leakspice.netlist.model import Netlist, TranDirective


class TransientError(SolverError):
    def __init__(self, message, time):
        self.time = time
        super().__init__(f"t = {time:.6e} s: {message}")


def _step_count(tstop: float, dt: float) -> int:
    if not (tstop > 0 and dt > 0):
        raise TransientError("tstop and dt must be positive", 0.0)
    ratio = tstop / dt
    count = round(ratio)
    if count < 1 or abs(ratio - count) > 1e-9 * max(1.0, ratio):
        raise TransientError(f"dt = {dt:g} does not divide tstop = {tstop:g}", 0.0)
    return count


def _cap_voltages(system: MnaSystem, x) -> np.ndarray:
    return np.array([system.voltage(x, a) - system.voltage(x, b) for _, a, b, _c in system.capacitors])


def transient(netlist: Netlist, directive: TranDirective | None = None,
              temp_k: float | None = None, options: SolverOptions = SolverOptions()) -> Waveform:
    """Integrate from the t = 0 operating point to ``tstop`` in steps of ``dt``.

    The first step uses backward Euler (the initial capacitor current is
    not known from the DC point), later steps the trapezoidal rule.  Rows
    are recorded at every step including t = 0.
    """
    if directive is None:
        trans = [d for d in netlist.directives if isinstance(d, TranDirective)]
        if not trans:
            raise SolverError("netlist has no .tran directive")
        directive = trans[0]
    steps = _step_count(directive.tstop, directive.dt)
    temp = directive.temp_k if temp_k is None else float(temp_k)
    system = MnaSystem(netlist, temp)
    dt = directive.dt

    try:
        res, _ = solve_system(system, None, options, time=0.0)
    except SolverError as exc:
        raise TransientError(f"initial operating point: {exc}", 0.0) from exc
    x = res.x
    caps = np.array([c for *_, c in system.capacitors], dtype=float)
    v_prev = _cap_voltages(system, x)
    i_prev = np.zeros_like(v_prev)

    times = [0.0]
    columns: dict[str, list] = {}
    _record(system, x, columns)
    for k in range(1, steps + 1):
        t = k * dt
        if k == 1:
            geq = caps / dt
            ieq = -geq * v_prev
        else:
            geq = 2.0 * caps / dt
            ieq = -geq * v_prev - i_prev
        companions = list(zip(geq, ieq))
        res = newton(system, system.pin_sources(x, t), options, time=t, companions=companions)
        if not res.converged:
            raise TransientError(f"Newton did not converge (residual {res.residual:.3e} A)", t)
        x = res.x
        v_now = _cap_voltages(system, x)
        i_prev = geq * v_now + ieq
        v_prev = v_now
        times.append(t)
        _record(system, x, columns)
    if not all(math.isfinite(v) for col in columns.values() for v in col):
        raise TransientError("non-finite solution", times[-1])
    return Waveform("time", times, columns)
