"""Subthreshold-aware MOSFET current model.

Two families of equations live here:

* the empirical "threshold current" law, ``Ids = 100 nA * W/L * exp((Vgs - Vt) / (eta*vT))``,
  together with the off-current and subthreshold swing that follow from it;
* the physical weak-inversion expression
  ``Ids = u0*Cox * W/L * (m - 1) * vT**2 * exp((Vgs - Vth) / (m*vT)) * (1 - exp(-Vds/vT))``,
  stitched to a square-law strong-inversion model so that a Newton solver
  can bias ON devices.

All functions are pure.  Voltages are in volts, currents in amperes,
temperatures in kelvin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

# CODATA 2018 (exact SI definitions)
BOLTZMANN = 1.380649e-23
ELECTRON_CHARGE = 1.602176634e-19

#: current per square at V_gs = V_t in the empirical threshold definition
I_THRESHOLD = 100e-9

#: exponent arguments are clamped to this magnitude before exp()
EXP_LIMIT = 120.0

_LN10 = math.log(10.0)


class ModelDomainError(ValueError):
    """A model parameter or bias lies outside the model's domain."""


class Polarity(enum.Enum):
    NMOS = "NMOS"
    PMOS = "PMOS"


class Region(enum.Enum):
    OFF_WEAK = "OFF_WEAK"
    TRIODE = "TRIODE"
    SATURATION = "SATURATION"


def _require_finite(**values: float) -> None:
    for key, val in values.items():
        if not math.isfinite(val):
            raise ModelDomainError(f"{key} must be finite, got {val!r}")


def _clamped_exp(arg: float) -> tuple[float, bool]:
    if arg > EXP_LIMIT:
        return math.exp(EXP_LIMIT), True
    if arg < -EXP_LIMIT:
        return math.exp(-EXP_LIMIT), True
    return math.exp(arg), False


def thermal_voltage(temp_k: float) -> float:
    """Return kT/q in volts."""
    _require_finite(temp_k=temp_k)
    if temp_k <= 0:
        raise ModelDomainError(f"temperature must be positive, got {temp_k} K")
    return BOLTZMANN * temp_k / ELECTRON_CHARGE


def body_coefficient(tox: float, wdm: float) -> float:
    """Subthreshold slope factor from oxide thickness and max depletion width: 1 + 3*tox/wdm."""
    _require_finite(tox=tox, wdm=wdm)
    if tox <= 0 or wdm <= 0:
        raise ModelDomainError(f"tox and wdm must be positive (tox={tox}, wdm={wdm})")
    return 1.0 + 3.0 * tox / wdm


def eta_from_caps(c_dep: float, c_oxe: float) -> float:
    """Slope factor 1 + Cdep/Coxe; also the reciprocal of d(phi_s)/d(Vgs)."""
    _require_finite(c_dep=c_dep, c_oxe=c_oxe)
    if c_oxe <= 0:
        raise ModelDomainError(f"c_oxe must be positive, got {c_oxe}")
    if c_dep < 0:
        raise ModelDomainError(f"c_dep must be non-negative, got {c_dep}")
    return 1.0 + c_dep / c_oxe


def _check_eta_temp(eta: float, temp_k: float) -> None:
    _require_finite(eta=eta, temp_k=temp_k)
    if eta < 1:
        raise ModelDomainError(f"eta must be >= 1, got {eta}")
    if temp_k <= 0:
        raise ModelDomainError(f"temperature must be positive, got {temp_k} K")


def subthreshold_swing_nominal(eta: float, temp_k: float) -> float:
    """Swing in mV/decade using the rounded 60 mV/decade room-temperature figure."""
    _check_eta_temp(eta, temp_k)
    return eta * 60.0 * temp_k / 300.0


def subthreshold_swing_exact(eta: float, temp_k: float) -> float:
    """Swing in mV/decade implied by the exponential itself: eta * vT * ln(10)."""
    _check_eta_temp(eta, temp_k)
    return eta * thermal_voltage(temp_k) * _LN10 * 1e3


def ids_empirical(w_over_l: float, vgs: float, vt: float, eta: float, temp_k: float) -> float:
    """Empirical subthreshold current, 100 nA * W/L at Vgs = Vt, one decade per swing."""
    _check_eta_temp(eta, temp_k)
    _require_finite(w_over_l=w_over_l, vgs=vgs, vt=vt)
    if w_over_l <= 0:
        raise ModelDomainError(f"W/L must be positive, got {w_over_l}")
    arg = (vgs - vt) / (eta * thermal_voltage(temp_k))
    return I_THRESHOLD * w_over_l * _clamped_exp(arg)[0]


def ioff_empirical(w_over_l: float, vt: float, eta: float, temp_k: float) -> float:
    """Off current: the empirical law evaluated at Vgs = 0."""
    return ids_empirical(w_over_l, 0.0, vt, eta, temp_k)


@dataclass(frozen=True)
class MosModelCard:
    """Parameter set for one transistor flavour.

    ``vth0`` is a magnitude for both polarities; PMOS evaluation mirrors the
    NMOS equations.  Pass ``eta=None`` with ``eta_derived=True`` to compute
    the slope factor from ``tox``/``wdm``.
    """

    name: str
    polarity: Polarity
    vth0: float
    eta: float | None
    tox: float
    wdm: float
    u0cox: float
    kp: float
    lam: float = 0.0
    sigma_dibl: float = 0.0
    is_junction: float = 0.0
    eta_derived: bool = False

    def __post_init__(self):
        if isinstance(self.polarity, str):
            object.__setattr__(self, "polarity", Polarity(self.polarity.upper()))
        _require_finite(
            vth0=self.vth0, tox=self.tox, wdm=self.wdm, u0cox=self.u0cox, kp=self.kp,
            lam=self.lam, sigma_dibl=self.sigma_dibl, is_junction=self.is_junction,
        )
        if self.tox <= 0 or self.wdm <= 0:
            raise ModelDomainError(f"model {self.name}: tox and wdm must be positive")
        if self.u0cox < 0 or self.kp < 0 or self.is_junction < 0:
            raise ModelDomainError(f"model {self.name}: u0cox, kp and is must be non-negative")
        if self.lam < 0:
            raise ModelDomainError(f"model {self.name}: lambda must be non-negative")
        if self.eta_derived:
            derived = body_coefficient(self.tox, self.wdm)
            if self.eta is not None and self.eta != derived:
                raise ModelDomainError(
                    f"model {self.name}: eta={self.eta} contradicts derived value {derived}"
                )
            object.__setattr__(self, "eta", derived)
        if self.eta is None:
            raise ModelDomainError(f"model {self.name}: eta is required")
        _require_finite(eta=self.eta)
        if self.eta < 1:
            raise ModelDomainError(f"model {self.name}: eta must be >= 1, got {self.eta}")


@dataclass(frozen=True)
class BiasPoint:
    vgs: float
    vds: float
    temp_k: float = 300.0

    def __post_init__(self):
        _require_finite(vgs=self.vgs, vds=self.vds, temp_k=self.temp_k)
        if self.temp_k <= 0:
            raise ModelDomainError(f"temperature must be positive, got {self.temp_k} K")


@dataclass(frozen=True)
class DeviceEval:
    ids: float
    d_ids_d_vgs: float
    d_ids_d_vds: float
    region: Region
    clamped: bool = field(default=False, compare=False)


def _check_geometry(w: float, l: float) -> float:
    _require_finite(w=w, l=l)
    if w <= 0 or l <= 0:
        raise ModelDomainError(f"W and L must be positive (W={w}, L={l})")
    return w / l


def _weak_core(card, wl, vgs, vds, vt):
    """NMOS-frame weak-inversion current and partials (no blending)."""
    m = card.eta
    mvt = m * vt
    pre = card.u0cox * wl * (m - 1.0) * vt * vt
    vth = card.vth0 - card.sigma_dibl * vds
    e_gate, c1 = _clamped_exp((vgs - vth) / mvt)
    e_drain, c2 = _clamped_exp(-vds / vt)
    drain = -math.expm1(-vds / vt) if not c2 else 1.0 - e_drain
    ids = pre * e_gate * drain
    dgate = 0.0 if c1 else pre * e_gate / mvt
    gm = dgate * drain
    gds = dgate * card.sigma_dibl * drain + (0.0 if c2 else pre * e_gate * e_drain / vt)
    return ids, gm, gds, c1 or c2


def ids_weak_inversion(card: MosModelCard, w: float, l: float, bias: BiasPoint) -> float:
    """Weak-inversion drain current in the NMOS orientation.

    The threshold is lowered linearly with drain bias by ``card.sigma_dibl``.
    """
    wl = _check_geometry(w, l)
    return _weak_core(card, wl, bias.vgs, bias.vds, thermal_voltage(bias.temp_k))[0]


def _strong_core(card, wl, vov, vds):
    """Square law with channel-length modulation; returns (ids, dI/dVov, dI/dVds at fixed Vov)."""
    beta = card.kp * wl
    clm = 1.0 + card.lam * vds
    if vds < vov:
        core = vov * vds - 0.5 * vds * vds
        return (beta * core * clm, beta * vds * clm,
                beta * (vov - vds) * clm + beta * core * card.lam)
    core = 0.5 * vov * vov
    return beta * core * clm, beta * vov * clm, beta * core * card.lam


def ids_strong_inversion(card: MosModelCard, w: float, l: float, bias: BiasPoint) -> float:
    """Square-law current above threshold (zero at or below threshold)."""
    wl = _check_geometry(w, l)
    vov = bias.vgs - (card.vth0 - card.sigma_dibl * bias.vds)
    if vov <= 0:
        return 0.0
    return _strong_core(card, wl, vov, bias.vds)[0]


def _forward(card, wl, vgs, vds, vt):
    # NMOS frame, vds >= 0
    m = card.eta
    mvt = m * vt
    vov = vgs - (card.vth0 - card.sigma_dibl * vds)
    if vov <= 0:
        ids, gm, gds, clamped = _weak_core(card, wl, vgs, vds, vt)
        return ids, gm, gds, Region.OFF_WEAK, clamped

    # Above threshold the exponential is frozen at its threshold value and
    # continued as w0*(1 + log1p(vov/mvt)), which matches value and slope.
    pre = card.u0cox * wl * (m - 1.0) * vt * vt
    e_drain, clamped = _clamped_exp(-vds / vt)
    drain = -math.expm1(-vds / vt) if not clamped else 1.0 - e_drain
    w0 = pre * drain
    dw0_dvds = 0.0 if clamped else pre * e_drain / vt
    growth = 1.0 + math.log1p(vov / mvt)
    floor = w0 * growth
    dfloor_dvov = w0 / (mvt + vov)
    dfloor_dvds = dw0_dvds * growth

    strong, dstrong_dvov, dstrong_dvds = _strong_core(card, wl, vov, vds)
    dvov = dfloor_dvov + dstrong_dvov
    ids = floor + strong
    gm = dvov
    gds = dfloor_dvds + dstrong_dvds + dvov * card.sigma_dibl
    region = Region.TRIODE if vds < vov else Region.SATURATION
    return ids, gm, gds, region, clamped


def _nmos_eval(card, wl, vgs, vds, vt):
    if vds >= 0:
        return _forward(card, wl, vgs, vds, vt)
    # source/drain exchange
    ids, g1, g2, region, clamped = _forward(card, wl, vgs - vds, -vds, vt)
    return -ids, -g1, g1 + g2, region, clamped


def ids_unified(card: MosModelCard, w: float, l: float, bias: BiasPoint) -> DeviceEval:
    """Drain current (drain to source) and its partials for any bias and polarity.

    PMOS devices are evaluated as ``-ids_nmos(-vgs, -vds)``.
    """
    wl = _check_geometry(w, l)
    vt = thermal_voltage(bias.temp_k)
    if card.polarity is Polarity.PMOS:
        ids, gm, gds, region, clamped = _nmos_eval(card, wl, -bias.vgs, -bias.vds, vt)
        return DeviceEval(-ids, gm, gds, region, clamped)
    ids, gm, gds, region, clamped = _nmos_eval(card, wl, bias.vgs, bias.vds, vt)
    return DeviceEval(ids, gm, gds, region, clamped)


def junction_eval(is_junction: float, v_reverse: float, temp_k: float) -> tuple[float, float]:
    """Reverse-diode leakage ``Is*(1 - exp(-Vr/vT))`` and its derivative w.r.t. Vr.

    Negative ``v_reverse`` (forward bias) yields the usual exponential forward
    current with a negative sign.
    """
    _require_finite(is_junction=is_junction, v_reverse=v_reverse)
    if is_junction < 0:
        raise ModelDomainError(f"junction saturation current must be >= 0, got {is_junction}")
    vt = thermal_voltage(temp_k)
    if is_junction == 0:
        return 0.0, 0.0
    e, clamped = _clamped_exp(-v_reverse / vt)
    current = -is_junction * math.expm1(-v_reverse / vt) if not clamped else is_junction * (1.0 - e)
    return current, 0.0 if clamped else is_junction * e / vt


def junction_reverse_current(is_junction: float, v_reverse: float, temp_k: float) -> float:
    return junction_eval(is_junction, v_reverse, temp_k)[0]
