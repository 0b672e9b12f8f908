"""Netlist data types and structural validation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Union

from leakspice.devmodel import MosModelCard

GROUND = "0"


class NetlistError(Exception):
    """Raised when a netlist cannot be parsed or fails validation.

    ``diagnostics`` holds every problem found, not just the first.
    """

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    message: str
    line: int | None = None
    column: int | None = None

    def __str__(self):
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, col {self.column}: {self.message}"


class DeviceKind(enum.Enum):
    MOSFET = "M"
    RESISTOR = "R"
    CAPACITOR = "C"
    VSOURCE = "V"
    ISOURCE = "I"


@dataclass(frozen=True)
class Mosfet:
    name: str
    drain: str
    gate: str
    source: str
    body: str
    model: str
    w: float
    l: float
    kind = DeviceKind.MOSFET

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.drain, self.gate, self.source, self.body)


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    value: float
    kind = DeviceKind.RESISTOR

    @property
    def nodes(self):
        return (self.n1, self.n2)


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    value: float
    kind = DeviceKind.CAPACITOR

    @property
    def nodes(self):
        return (self.n1, self.n2)


@dataclass(frozen=True)
class _Source:
    name: str
    pos: str
    neg: str
    dc: float = 0.0
    # (time, value) breakpoints; when present it overrides ``dc``
    pwl: tuple[tuple[float, float], ...] | None = None

    @property
    def nodes(self):
        return (self.pos, self.neg)

    def value_at(self, t: float | None) -> float:
        """Source value at time ``t``; ``None`` means the DC value (PWL at t=0)."""
        if self.pwl is None:
            return self.dc
        if t is None:
            t = 0.0
        pts = self.pwl
        if t <= pts[0][0]:
            return pts[0][1]
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t <= t1:
                if t1 == t0:
                    return v1
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return pts[-1][1]


@dataclass(frozen=True)
class VoltageSource(_Source):
    kind = DeviceKind.VSOURCE


@dataclass(frozen=True)
class CurrentSource(_Source):
    """Current flows from ``pos`` through the source to ``neg``."""

    kind = DeviceKind.ISOURCE


Device = Union[Mosfet, Resistor, Capacitor, VoltageSource, CurrentSource]


@dataclass(frozen=True)
class OpDirective:
    temp_k: float = 300.0


@dataclass(frozen=True)
class DcSweepDirective:
    source: str
    start: float
    stop: float
    step: float
    temp_k: float = 300.0


@dataclass(frozen=True)
class TranDirective:
    tstop: float
    dt: float
    temp_k: float = 300.0


Directive = Union[OpDirective, DcSweepDirective, TranDirective]


@dataclass(frozen=True)
class Netlist:
    title: str
    devices: tuple[Device, ...]
    models: Mapping[str, MosModelCard] = field(default_factory=dict)
    directives: tuple[Directive, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "directives", tuple(self.directives))
        object.__setattr__(self, "models", dict(self.models))

    def __hash__(self):
        return hash((self.title, self.devices, tuple(sorted(self.models.items())), self.directives))

    @property
    def nodes(self) -> tuple[str, ...]:
        """Node names, ground first, then in order of first appearance."""
        seen = {GROUND: None}
        for dev in self.devices:
            for node in dev.nodes:
                seen.setdefault(node, None)
        return tuple(seen)

    def device(self, name: str) -> Device:
        key = name.lower()
        for dev in self.devices:
            if dev.name.lower() == key:
                return dev
        raise KeyError(name)

    def has_device(self, name: str) -> bool:
        key = name.lower()
        return any(dev.name.lower() == key for dev in self.devices)

    def of_kind(self, *kinds: DeviceKind) -> list[Device]:
        return [dev for dev in self.devices if dev.kind in kinds]

    @property
    def mosfets(self) -> list[Mosfet]:
        return self.of_kind(DeviceKind.MOSFET)

    @property
    def voltage_sources(self) -> list[VoltageSource]:
        return self.of_kind(DeviceKind.VSOURCE)

    def replace_devices(self, devices: Iterable[Device]) -> "Netlist":
        return replace(self, devices=tuple(devices))

    def with_source(self, name: str, dc: float | None = None, pwl=None) -> "Netlist":
        """Copy with one independent source set to a DC value or a PWL waveform."""
        target = self.device(name)
        if target.kind not in (DeviceKind.VSOURCE, DeviceKind.ISOURCE):
            raise KeyError(f"{name} is not an independent source")
        new = replace(target, dc=target.dc if dc is None else float(dc),
                      pwl=None if pwl is None else tuple((float(t), float(v)) for t, v in pwl))
        return self.replace_devices(new if dev is target else dev for dev in self.devices)

    def with_models(self, *cards: MosModelCard) -> "Netlist":
        models = dict(self.models)
        for card in cards:
            models[card.name.lower()] = card
        return replace(self, models=models)


def supply_source(netlist: Netlist, exclude: Iterable[str] = ()) -> VoltageSource | None:
    """The grounded voltage source with the largest positive DC value."""
    skip = {name.lower() for name in exclude}
    best = None
    for src in netlist.voltage_sources:
        if src.name.lower() in skip or src.neg != GROUND or src.pwl is not None:
            continue
        if src.dc > 0 and (best is None or src.dc > best.dc):
            best = src
    return best


def validate(netlist: Netlist) -> list[Diagnostic]:
    """Return every structural problem with ``netlist`` (empty list if valid)."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for dev in netlist.devices:
        key = dev.name.lower()
        if key in seen:
            diags.append(Diagnostic(f"duplicate device name {dev.name}"))
        seen.add(key)
        if not dev.name or dev.name[0].upper() != dev.kind.value:
            diags.append(Diagnostic(f"device name {dev.name!r} does not start with {dev.kind.value}"))
        if dev.kind is DeviceKind.MOSFET:
            if dev.model not in netlist.models:
                diags.append(Diagnostic(f"unknown model {dev.model}"))
            if not (dev.w > 0 and dev.l > 0):
                diags.append(Diagnostic(f"{dev.name}: W and L must be positive"))
        elif dev.kind in (DeviceKind.RESISTOR, DeviceKind.CAPACITOR):
            if not dev.value > 0:
                diags.append(Diagnostic(f"{dev.name}: value must be positive"))
        elif dev.pwl is not None:
            times = [t for t, _ in dev.pwl]
            if not times or any(b < a for a, b in zip(times, times[1:])) or times[0] < 0:
                diags.append(Diagnostic(f"{dev.name}: PWL times must be non-negative and non-decreasing"))
    if GROUND not in {n for dev in netlist.devices for n in dev.nodes}:
        diags.append(Diagnostic("missing ground node 0"))
    for d in netlist.directives:
        if isinstance(d, DcSweepDirective):
            if not netlist.has_device(d.source) or d.source[0].upper() not in "VI":
                diags.append(Diagnostic(f"unknown sweep source {d.source}"))
            if not (d.step > 0 and d.start <= d.stop):
                diags.append(Diagnostic(".dc requires step > 0 and start <= stop"))
        elif isinstance(d, TranDirective):
            if not (d.dt > 0 and d.tstop >= d.dt):
                diags.append(Diagnostic(".tran requires dt > 0 and tstop >= dt"))
        if not d.temp_k > 0:
            diags.append(Diagnostic("temperature must be positive"))
    return diags


def checked(netlist: Netlist) -> Netlist:
    diags = validate(netlist)
    if diags:
        raise NetlistError(diags)
    return netlist
