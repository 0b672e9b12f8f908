"""Waveform measurements."""

from __future__ import annotations

import numpy as np

from leakspice.engine.results import Waveform


class MeasurementError(ValueError):
    pass


def _first_crossing(t: np.ndarray, y: np.ndarray, level: float, rising: bool) -> float:
    s = (y - level) if rising else (level - y)
    if s[0] >= 0:
        return float(t[0])
    hits = np.nonzero((s[:-1] < 0) & (s[1:] >= 0))[0]
    if hits.size == 0:
        raise MeasurementError(f"signal never crosses {level:.6g}")
    i = hits[0]
    frac = -s[i] / (s[i + 1] - s[i])
    return float(t[i] + frac * (t[i + 1] - t[i]))


def measure_slew_rate(waveform: Waveform, signal: str, lo_frac: float = 0.1, hi_frac: float = 0.9,
                      v_initial: float | None = None, v_final: float | None = None) -> float:
    """Slew rate (V/s, always positive) between the ``lo_frac`` and ``hi_frac`` crossings.

    The swing runs from ``v_initial`` (default: first sample) to ``v_final``
    (default: last sample); falling edges are handled symmetrically.
    Crossing times are linearly interpolated between samples.
    """
    if not 0 <= lo_frac < hi_frac <= 1:
        raise MeasurementError("need 0 <= lo_frac < hi_frac <= 1")
    t = waveform.abscissa
    y = waveform[signal]
    if t.size < 2:
        raise MeasurementError("waveform has fewer than two samples")
    v0 = float(y[0]) if v_initial is None else float(v_initial)
    v1 = float(y[-1]) if v_final is None else float(v_final)
    swing = v1 - v0
    if swing == 0:
        raise MeasurementError(f"{signal} has no swing, so no crossing exists")
    rising = swing > 0
    t_lo = _first_crossing(t, y, v0 + lo_frac * swing, rising)
    t_hi = _first_crossing(t, y, v0 + hi_frac * swing, rising)
    if t_hi <= t_lo:
        raise MeasurementError("upper crossing does not follow the lower crossing")
    return abs((hi_frac - lo_frac) * swing) / (t_hi - t_lo)
