"""Damped Newton DC solution, continuation fallbacks and DC sweeps."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from leakspice.devmodel import thermal_voltage
from leakspice.engine.mna import MnaSystem, SingularCircuitError, SolverError
from leakspice.engine.results import OperatingPoint, Waveform
from leakspice.netlist.model import DcSweepDirective, Netlist, OpDirective, TranDirective

log = logging.getLogger(__name__)

GMIN_STEPS = tuple(10.0 ** -k for k in range(3, 13))
SOURCE_STEPS = tuple(k / 10 for k in range(1, 11))


class ConvergenceError(SolverError):
    def __init__(self, message, best_residual=float("nan")):
        self.best_residual = best_residual
        super().__init__(f"{message} (best KCL residual {best_residual:.3e} A)")


@dataclass(frozen=True)
class SolverOptions:
    abstol_i: float = 1e-12
    abstol_v: float = 1e-9
    reltol: float = 1e-6
    max_iterations: int = 200
    # per-iteration cap on MOSFET terminal voltage changes, in thermal voltages
    step_limit_vt: float = 2.0


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual: float
    last_update: float


def newton(system: MnaSystem, x0, options=SolverOptions(), *, time=None, scale=1.0,
           gmin=0.0, companions=None) -> NewtonResult:
    """Run damped Newton from ``x0``.

    A point is accepted when its KCL residual is below ``abstol_i``, the
    source constraints hold to ``abstol_v``, and the Newton update computed
    there moves no node by more than ``abstol_v`` (branch currents by more
    than ``reltol*|i| + abstol_i``).  ``iterations`` counts applied updates.
    """
    x = np.array(x0, dtype=float)
    n = system.n_nodes
    limit = options.step_limit_vt * thermal_voltage(system.temp_k)
    lim_idx = system.limited_nodes
    best = np.inf
    dv = np.inf
    for it in range(options.max_iterations + 1):
        J, f = system.assemble(x, time=time, scale=scale, gmin=gmin, companions=companions)
        kcl = float(np.max(np.abs(f[:n]))) if n else 0.0
        branch = float(np.max(np.abs(f[n:]))) if f.size > n else 0.0
        best = min(best, kcl)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            raise SingularCircuitError(_singular_node(system, J), "matrix is singular") from None
        if not np.all(np.isfinite(dx)):
            raise SingularCircuitError(_singular_node(system, J), "non-finite Newton update")
        dv = float(np.max(np.abs(dx[:n]))) if n else 0.0
        di_ok = np.all(np.abs(dx[n:]) <= options.reltol * np.abs(x[n:]) + options.abstol_i)
        if kcl <= options.abstol_i and branch <= options.abstol_v and dv <= options.abstol_v and di_ok:
            return NewtonResult(x, True, it, kcl, dv)
        if it == options.max_iterations:
            break
        if lim_idx.size:
            dx[lim_idx] = np.clip(dx[lim_idx], -limit, limit)
        x = x + dx
    return NewtonResult(x, False, options.max_iterations, best, dv)


def _singular_node(system: MnaSystem, J) -> str:
    floating = system.floating_nodes()
    if floating:
        return floating[0]
    for i in range(system.n_nodes):
        if not np.any(J[i]) or not np.any(J[:, i]):
            return system.node_names[i + 1]
    return "?"


def _temperature(netlist: Netlist, temp_k):
    if temp_k is not None:
        return float(temp_k)
    for d in netlist.directives:
        if isinstance(d, (OpDirective, DcSweepDirective, TranDirective)):
            return d.temp_k
    return 300.0


def solve_system(system: MnaSystem, x0=None, options=SolverOptions(), time=None) -> tuple[NewtonResult, str]:
    """Solve a compiled system, falling back to gmin and then source stepping."""
    floating = system.floating_nodes()
    if floating:
        raise SingularCircuitError(floating[0])
    x0 = system.initial_vector(time) if x0 is None else system.pin_sources(x0, time)
    res = newton(system, x0, options, time=time)
    if res.converged:
        return res, "newton"
    best = res.residual
    log.debug("plain Newton failed (residual %.3e); trying gmin stepping", res.residual)

    x = system.initial_vector(time)
    ok = True
    for g in GMIN_STEPS:
        step = newton(system, x, options, time=time, gmin=g)
        if not step.converged:
            ok = False
            break
        x = step.x
    if ok:
        res = newton(system, x, options, time=time)
        if res.converged:
            return res, "gmin"
        best = min(best, res.residual)

    log.debug("gmin stepping failed; trying source stepping")
    x = np.zeros(system.size)
    for s in SOURCE_STEPS:
        step = newton(system, x, options, time=time, scale=s)
        if not step.converged:
            step = _gmin_ramp(system, x, options, time, s)
        if step is None or not step.converged:
            best = min(best, np.inf if step is None else step.residual)
            raise ConvergenceError(f"no convergence at source scale {s:.1f}", best)
        x = step.x
    return step, "source"


def _gmin_ramp(system, x, options, time, scale):
    for g in GMIN_STEPS:
        step = newton(system, x, options, time=time, scale=scale, gmin=g)
        if not step.converged:
            return step
        x = step.x
    return newton(system, x, options, time=time, scale=scale)


def _to_op(system: MnaSystem, res: NewtonResult, strategy: str) -> OperatingPoint:
    return OperatingPoint(
        node_voltages=system.node_voltages(res.x),
        source_currents=system.source_currents(res.x),
        iterations=res.iterations,
        residual_norm=res.residual,
        converged=res.converged,
        last_update=res.last_update,
        strategy=strategy,
        temp_k=system.temp_k,
        x=res.x.copy(),
    )


def dc_operating_point(netlist: Netlist, temp_k: float | None = None, initial_guess=None,
                       options: SolverOptions = SolverOptions()) -> OperatingPoint:
    """DC operating point of ``netlist`` with capacitors open and PWL sources at t = 0.

    ``initial_guess`` may map node names to voltages.  Temperature defaults
    to the netlist's first analysis directive, else 300 K.
    """
    system = MnaSystem(netlist, _temperature(netlist, temp_k))
    x0 = None if initial_guess is None else system.initial_vector(guess=initial_guess)
    return solve_operating_point(system, x0, options)


def solve_operating_point(system: MnaSystem, x0=None, options: SolverOptions = SolverOptions()) -> OperatingPoint:
    """Operating point of an already compiled system (honours ``set_source`` overrides)."""
    res, strategy = solve_system(system, x0, options)
    return _to_op(system, res, strategy)


def sweep_values(start: float, stop: float, step: float) -> np.ndarray:
    count = int(np.floor((stop - start) / step * (1 + 1e-12) + 1e-9)) + 1
    return start + step * np.arange(count)


def _record(system, x, columns):
    for name, i in system.index.items():
        if i >= 0:
            columns.setdefault(f"v({name})", []).append(x[i])
    for src, _p, _m, k in system.vsources:
        columns.setdefault(f"i({src.name.lower()})", []).append(0.0 - x[k])


def dc_sweep(netlist: Netlist, directive: DcSweepDirective | None = None,
             temp_k: float | None = None, options: SolverOptions = SolverOptions(),
             reverse: bool = False) -> Waveform:
    """Sweep one independent source, warm-starting each point from the last.

    ``reverse`` walks the values from ``stop`` down to ``start``; the
    returned waveform is always in ascending order.
    """
    if directive is None:
        sweeps = [d for d in netlist.directives if isinstance(d, DcSweepDirective)]
        if not sweeps:
            raise SolverError("netlist has no .dc directive")
        directive = sweeps[0]
    temp = directive.temp_k if temp_k is None else temp_k
    system = MnaSystem(netlist, temp)
    values = sweep_values(directive.start, directive.stop, directive.step)
    order = values[::-1] if reverse else values
    x = None
    rows = []
    for val in order:
        system.set_source(directive.source, val)
        x0 = None if x is None else x
        try:
            res, _ = solve_system(system, x0, options)
        except SolverError as exc:
            raise SolverError(f"{directive.source} = {val:g}: {exc}") from exc
        x = res.x
        rows.append((val, x.copy()))
    rows.sort(key=lambda r: r[0])
    columns: dict[str, list] = {}
    for _val, xs in rows:
        _record(system, xs, columns)
    return Waveform(directive.source.lower(), [r[0] for r in rows], columns)
