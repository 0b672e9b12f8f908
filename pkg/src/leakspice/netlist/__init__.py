"""SPICE-subset netlists: data model, parser/serializer, builders and gating."""

from leakspice.netlist.builders import build_class_ab_buffer, build_inverter, default_models
from leakspice.netlist.gating import (
    GatingError, GatingOptions, GatingStyle, SleepState, is_gated, power_gate_transform,
    set_sleep_state,
)
from leakspice.netlist.model import (
    GROUND, Capacitor, CurrentSource, DcSweepDirective, DeviceKind, Diagnostic, Mosfet,
    Netlist, NetlistError, OpDirective, Resistor, TranDirective, VoltageSource,
    supply_source, validate,
)
from leakspice.netlist.parser import format_value, parse, parse_file, parse_value, serialize

__all__ = [
    "GROUND", "Capacitor", "CurrentSource", "DcSweepDirective", "DeviceKind", "Diagnostic",
    "GatingError", "GatingOptions", "GatingStyle", "Mosfet", "Netlist", "NetlistError",
    "OpDirective", "Resistor", "SleepState", "TranDirective", "VoltageSource",
    "build_class_ab_buffer", "build_inverter", "default_models", "format_value", "is_gated",
    "parse", "parse_file", "parse_value", "power_gate_transform", "serialize",
    "set_sleep_state", "supply_source", "validate",
]
