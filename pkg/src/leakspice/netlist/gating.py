"""Sleep-transistor insertion (power gating) on a supply or ground rail."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from leakspice.devmodel import MosModelCard
from leakspice.netlist.model import (
    GROUND, DeviceKind, Mosfet, Netlist, NetlistError, Diagnostic, VoltageSource,
    checked, supply_source,
)

SLEEP_DEVICE = "MSLEEP"
SLEEP_SOURCE = "VSLEEP"
SLEEP_NODE = "sleep"
VIRTUAL_GROUND = "vgnd"
VIRTUAL_SUPPLY = "vvdd"

# elements that move onto the virtual rail; sources and load capacitors stay put
_GATED_KINDS = (DeviceKind.MOSFET, DeviceKind.RESISTOR, DeviceKind.ISOURCE)


class GatingError(NetlistError):
    def __init__(self, message):
        super().__init__([Diagnostic(message)])


class GatingStyle(enum.Enum):
    FOOTER = "footer"
    HEADER = "header"


class SleepState(enum.Enum):
    ACTIVE = "active"
    STANDBY = "standby"


@dataclass(frozen=True)
class GatingOptions:
    """How to gate a netlist.

    ``w``/``l`` default to ten times the widest rail device and the shortest
    channel length in the netlist.  ``sleep_card``, when given, is added to the
    netlist's models (replacing any card of the same name) and used for the
    sleep device.  ``regate`` controls what happens to an already gated
    netlist: ``"error"`` raises, ``"ignore"`` only re-applies ``sleep_state``.
    """

    style: GatingStyle = GatingStyle.FOOTER
    sleep_model: str | None = None
    w: float | None = None
    l: float | None = None
    sleep_state: SleepState = SleepState.STANDBY
    sleep_card: MosModelCard | None = None
    regate: str = "error"

    def __post_init__(self):
        if isinstance(self.style, str):
            object.__setattr__(self, "style", GatingStyle(self.style.lower()))
        if isinstance(self.sleep_state, str):
            object.__setattr__(self, "sleep_state", SleepState(self.sleep_state.lower()))
        if self.regate not in ("error", "ignore"):
            raise ValueError("regate must be 'error' or 'ignore'")

    @property
    def model_name(self) -> str:
        if self.sleep_card is not None:
            return self.sleep_card.name
        if self.sleep_model is not None:
            return self.sleep_model.lower()
        return "nch_hvt" if self.style is GatingStyle.FOOTER else "pch_hvt"


def is_gated(netlist: Netlist) -> bool:
    return netlist.has_device(SLEEP_DEVICE)


def _rail_and_supply(netlist: Netlist, style: GatingStyle):
    supply = supply_source(netlist)
    if supply is None:
        raise GatingError("no supply source (grounded voltage source with positive DC value)")
    rail = GROUND if style is GatingStyle.FOOTER else supply.pos
    return rail, supply


def _control_voltage(style: GatingStyle, state: SleepState, vdd: float) -> float:
    on = state is SleepState.ACTIVE
    if style is GatingStyle.FOOTER:
        return vdd if on else 0.0
    return 0.0 if on else vdd


def set_sleep_state(netlist: Netlist, state: SleepState | str) -> Netlist:
    """Drive the sleep-control source of a gated netlist to ``state``."""
    state = SleepState(state.lower()) if isinstance(state, str) else state
    if not is_gated(netlist):
        raise GatingError("netlist is not gated")
    sleep = netlist.device(SLEEP_DEVICE)
    style = GatingStyle.HEADER if sleep.drain == VIRTUAL_SUPPLY else GatingStyle.FOOTER
    _, supply = _rail_and_supply(netlist.replace_devices(
        d for d in netlist.devices if d.name != SLEEP_SOURCE), style)
    return netlist.with_source(SLEEP_SOURCE, dc=_control_voltage(style, state, supply.dc))


def power_gate_transform(netlist: Netlist, options: GatingOptions = GatingOptions()) -> Netlist:
    """Insert one sleep transistor between the chosen rail and a new virtual rail.

    Every MOSFET drain/source, resistor and current-source terminal on the rail
    is moved to the virtual rail (``vgnd`` for a footer, ``vvdd`` for a
    header).  MOSFET bodies, voltage sources and capacitors stay on the real
    rail.  A control source ``VSLEEP`` drives the sleep gate (node ``sleep``)
    so the sleep device is on in ACTIVE and off in STANDBY.  The input netlist
    is not modified.
    """
    if is_gated(netlist):
        if options.regate == "ignore":
            return set_sleep_state(netlist, options.sleep_state)
        raise GatingError("already gated")
    style = options.style
    rail, supply = _rail_and_supply(netlist, style)
    virtual = VIRTUAL_GROUND if style is GatingStyle.FOOTER else VIRTUAL_SUPPLY
    taken = set(netlist.nodes)
    for node in (virtual, SLEEP_NODE):
        if node in taken:
            raise GatingError(f"node name {node} already in use")
    if netlist.has_device(SLEEP_SOURCE):
        raise GatingError(f"device name {SLEEP_SOURCE} already in use")

    if options.sleep_card is not None:
        netlist = netlist.with_models(options.sleep_card)
    model_name = options.model_name
    card = netlist.models.get(model_name)
    if card is None:
        raise GatingError(f"unknown sleep model {model_name}")
    want = "NMOS" if style is GatingStyle.FOOTER else "PMOS"
    if card.polarity.value != want:
        raise GatingError(f"{style.value} sleep device needs a {want} model, {model_name} is {card.polarity.value}")

    def move(node):
        return virtual if node == rail else node

    devices = []
    rail_widths = []
    for dev in netlist.devices:
        if dev.kind not in _GATED_KINDS or rail not in dev.nodes:
            devices.append(dev)
            continue
        if dev.kind is DeviceKind.MOSFET:
            if rail not in (dev.drain, dev.source):
                devices.append(dev)
                continue
            rail_widths.append(dev.w)
            devices.append(replace(dev, drain=move(dev.drain), source=move(dev.source)))
        elif dev.kind is DeviceKind.RESISTOR:
            devices.append(replace(dev, n1=move(dev.n1), n2=move(dev.n2)))
        else:
            devices.append(replace(dev, pos=move(dev.pos), neg=move(dev.neg)))
    if not rail_widths:
        raise GatingError(f"no rail devices found on node {rail}")

    mosfets = netlist.mosfets
    w = options.w if options.w is not None else float(f"{10.0 * max(rail_widths):.12g}")
    l = options.l if options.l is not None else min(m.l for m in mosfets)
    if style is GatingStyle.FOOTER:
        sleep = Mosfet(SLEEP_DEVICE, virtual, SLEEP_NODE, GROUND, GROUND, model_name, w, l)
    else:
        sleep = Mosfet(SLEEP_DEVICE, virtual, SLEEP_NODE, rail, rail, model_name, w, l)
    control = VoltageSource(SLEEP_SOURCE, SLEEP_NODE, GROUND,
                            _control_voltage(style, options.sleep_state, supply.dc))
    devices.extend([sleep, control])
    return checked(netlist.replace_devices(devices))
