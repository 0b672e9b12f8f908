"""Programmatic construction of the reference circuits."""

from __future__ import annotations

from typing import Mapping

from leakspice.devmodel import BiasPoint, ModelDomainError, MosModelCard, Polarity, ids_unified
from leakspice.netlist.model import (
    Capacitor, Mosfet, Netlist, OpDirective, Resistor, VoltageSource, checked,
)

DEFAULT_VDD = 3.3
DEFAULT_IB = 10e-6
DEFAULT_W = 1e-6
DEFAULT_L = 45e-9


def default_models() -> dict[str, MosModelCard]:
    """Generic low-Vt and high-Vt cards for a 45 nm-like process.

    The numbers are illustrative: a 0.35 V threshold, slope factor 1.5 and a
    modest drain-induced barrier lowering coefficient.
    """
    common = dict(eta=1.5, tox=2e-9, wdm=12e-9, lam=0.05, sigma_dibl=0.05)
    cards = [
        MosModelCard("nch", Polarity.NMOS, vth0=0.35, u0cox=3.5e-4, kp=2e-4, **common),
        MosModelCard("pch", Polarity.PMOS, vth0=0.35, u0cox=1.5e-4, kp=8e-5, **common),
        MosModelCard("nch_hvt", Polarity.NMOS, vth0=0.55, u0cox=3.5e-4, kp=2e-4, **common),
        MosModelCard("pch_hvt", Polarity.PMOS, vth0=0.55, u0cox=1.5e-4, kp=8e-5, **common),
    ]
    return {card.name: card for card in cards}


def _models_for(models, *names):
    models = dict(default_models() if models is None else models)
    for name in names:
        if name not in models:
            raise ModelDomainError(f"unknown model {name}")
    return models


def build_inverter(
    vdd: float = DEFAULT_VDD,
    model_n: str = "nch",
    model_p: str = "pch",
    w_n: float = DEFAULT_W,
    l_n: float = DEFAULT_L,
    w_p: float = 2 * DEFAULT_W,
    l_p: float = DEFAULT_L,
    vin: float = 0.0,
    models: Mapping[str, MosModelCard] | None = None,
) -> Netlist:
    """Static CMOS inverter: ``Vdd``, ``Vin``, PMOS ``MP1`` and NMOS ``MN1`` driving node ``out``."""
    if not vdd > 0:
        raise ModelDomainError(f"vdd must be positive, got {vdd}")
    for what, val in (("w_n", w_n), ("l_n", l_n), ("w_p", w_p), ("l_p", l_p)):
        if not val > 0:
            raise ModelDomainError(f"{what} must be positive, got {val}")
    models = _models_for(models, model_n, model_p)
    devices = [
        VoltageSource("Vdd", "vdd", "0", vdd),
        VoltageSource("Vin", "in", "0", vin),
        Mosfet("MP1", "out", "in", "vdd", "vdd", model_p, w_p, l_p),
        Mosfet("MN1", "out", "in", "0", "0", model_n, w_n, l_n),
    ]
    return checked(Netlist("cmos inverter", devices, models, (OpDirective(),)))


def _diode_vgs(card: MosModelCard, w: float, l: float, current: float, temp_k: float) -> float:
    """Gate-source voltage of a diode-connected device carrying ``current`` (bisection)."""
    lo, hi = -1.0, 10.0
    sign = -1.0 if card.polarity is Polarity.PMOS else 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        i = sign * ids_unified(card, w, l, BiasPoint(sign * mid, sign * mid, temp_k)).ids
        if i < current:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_class_ab_buffer(
    vdd: float = DEFAULT_VDD,
    ib: float = DEFAULT_IB,
    model_n: str = "nch",
    model_p: str = "pch",
    w: float = DEFAULT_W,
    l: float = DEFAULT_L,
    c_load: float = 10e-12,
    vin: float | None = None,
    temp_k: float = 300.0,
    models: Mapping[str, MosModelCard] | None = None,
) -> Netlist:
    """Twenty-transistor class-AB unity-gain buffer (``MPQ1``-``MPQ9``, ``MNQ1``-``MNQ11``).

    All transistors share one size.  The interconnect is a conventional
    stand-in, not a reproduction of any published schematic:

    * bias: diode ``MPQ8``, resistor ``RB`` and diode ``MNQ1`` in series
      carry the reference current ``ib`` and produce ``nbp``/``nbn`` (the
      resistor is sized from the device model at ``temp_k``);
    * input stage: NMOS pair ``MNQ3`` (gate ``out``) / ``MNQ4`` (gate ``in``)
      with parallel tail ``MNQ2``/``MNQ11`` and PMOS mirror load ``MPQ1``/``MPQ2``; high-impedance
      output ``n2``;
    * floating class-AB control: ``MPQ4``/``MNQ6`` between ``n2`` and ``n3``,
      their gates biased by the diode stacks ``MPQ5``/``MPQ6`` (fed by ``MNQ10``)
      and ``MNQ7``/``MNQ8`` (fed by ``MPQ7``); ``MPQ9`` sources and ``MNQ9`` sinks
      the floating branch current;
    * output: common-source ``MPQ3`` (gate ``n2``) and ``MNQ5`` (gate ``n3``)
      driving ``out``, loaded by ``CL``.

    ``vin`` defaults to mid-supply.
    """
    if not vdd > 0 or not ib > 0:
        raise ModelDomainError("vdd and ib must be positive")
    if not (w > 0 and l > 0) or c_load < 0:
        raise ModelDomainError("device size must be positive and c_load non-negative")
    models = _models_for(models, model_n, model_p)
    headroom = vdd - _diode_vgs(models[model_n], w, l, ib, temp_k) - _diode_vgs(models[model_p], w, l, ib, temp_k)
    if headroom <= 0:
        raise ModelDomainError(f"supply {vdd} V cannot bias the reference at {ib} A")
    rb = headroom / ib
    if vin is None:
        vin = vdd / 2

    def n(name, d, g, s):
        return Mosfet(name, d, g, s, "0", model_n, w, l)

    def p(name, d, g, s):
        return Mosfet(name, d, g, s, "vdd", model_p, w, l)

    devices = [
        VoltageSource("Vdd", "vdd", "0", vdd),
        VoltageSource("Vin", "in", "0", vin),
        # bias
        p("MPQ8", "nbp", "nbp", "vdd"),
        Resistor("RB", "nbp", "nbn", rb),
        n("MNQ1", "nbn", "nbn", "0"),
        # input pair, tail and mirror load
        n("MNQ2", "tail", "nbn", "0"),
        n("MNQ11", "tail", "nbn", "0"),
        n("MNQ3", "n1", "out", "tail"),
        n("MNQ4", "n2", "in", "tail"),
        p("MPQ1", "n1", "n1", "vdd"),
        p("MPQ2", "n2", "n1", "vdd"),
        # floating class-AB control
        p("MPQ9", "n2", "nbp", "vdd"),
        p("MPQ4", "n3", "nbp2", "n2"),
        n("MNQ6", "n2", "nbn2", "n3"),
        n("MNQ9", "n3", "nbn", "0"),
        p("MPQ5", "pm", "pm", "vdd"),
        p("MPQ6", "nbp2", "nbp2", "pm"),
        n("MNQ10", "nbp2", "nbn", "0"),
        p("MPQ7", "nbn2", "nbp", "vdd"),
        n("MNQ7", "nbn2", "nbn2", "nm"),
        n("MNQ8", "nm", "nm", "0"),
        # class-AB output
        p("MPQ3", "out", "n2", "vdd"),
        n("MNQ5", "out", "n3", "0"),
    ]
    if c_load > 0:
        devices.append(Capacitor("CL", "out", "0", c_load))
    title = f"class-AB buffer vdd={vdd:g} ib={ib:g}"
    return checked(Netlist(title, devices, models, (OpDirective(temp_k),)))

