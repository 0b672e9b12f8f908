"""Circuit solver: MNA assembly, DC operating point and sweeps, transient."""

from leakspice.engine.dc import (
    ConvergenceError, SolverOptions, dc_operating_point, dc_sweep, solve_operating_point, solve_system,
    sweep_values,
)
from leakspice.engine.measure import MeasurementError, measure_slew_rate
from leakspice.engine.mna import MnaSystem, SingularCircuitError, SolverError
from leakspice.engine.results import OperatingPoint, Waveform
from leakspice.engine.transient import TransientError, transient

__all__ = [
    "ConvergenceError", "MeasurementError", "MnaSystem", "OperatingPoint", "SingularCircuitError",
    "SolverError", "SolverOptions", "TransientError", "Waveform", "dc_operating_point", "dc_sweep",
    "measure_slew_rate", "solve_operating_point", "solve_system", "sweep_values", "transient",
]
