import math
from dataclasses import replace

import numpy as np
import pytest

import oracles
from leakspice.devmodel import subthreshold_swing_exact
from leakspice.engine import (
    ConvergenceError, MeasurementError, MnaSystem, SingularCircuitError, SolverError, SolverOptions,
    TransientError, Waveform, dc_operating_point, dc_sweep, measure_slew_rate, transient,
)
from leakspice.engine.dc import _gmin_ramp, newton, sweep_values
from leakspice.netlist import (
    Capacitor, DcSweepDirective, TranDirective, build_class_ab_buffer, build_inverter, parse,
)

DIVIDER = "divider\nV1 a 0 3.3\nR1 a m 1k\nR2 m 0 1k\n.op\n.end\n"
DIODE = ("diode-connected nmos\n"
         ".model nch NMOS vth0=0.35 eta=1.5 tox=2n wdm=12n u0cox=3.5e-4 kp=2e-4 lambda=0.05 sigma=0.05\n"
         "V1 vdd 0 3.3\nI1 vdd d 10u\nM1 d d 0 0 nch W=1u L=45n\n.op\n.end\n")
RC = "rc\nV1 in 0 PWL(0 0 1f 1)\nR1 in out 1k\nC1 out 0 1n\n.tran {dt} {tstop}\n.end\n"
TAU = 1e-6

trapz = getattr(np, "trapezoid", None) or np.trapz


def nmos_fixture(sigma=0.0, vds=0.05):
    return parse(
        "nmos fixture\n"
        f".model n1 NMOS vth0=0.2 eta=1.5 tox=2n wdm=12n u0cox=3.5e-4 kp=2e-4 sigma={sigma}\n"
        f"VGS g 0 0\nVDS d 0 {vds}\nM1 d g 0 0 n1 W=1u L=1u\n.dc VGS 0 1 0.01\n.end\n"
    )


def kcl_residual(netlist, op):
    system = MnaSystem(netlist, op.temp_k)
    _, f = system.assemble(op.x)
    return float(np.max(np.abs(f[:system.n_nodes])))


# -- DC operating point ---------------------------------------------------------

def test_divider_exact_in_one_iteration():
    op = dc_operating_point(parse(DIVIDER))
    assert op.v("m") == pytest.approx(1.65, rel=4 * np.finfo(float).eps)
    assert op.iterations == 1
    assert op.converged and op.strategy == "newton"
    assert op.i("V1") == pytest.approx(3.3 / 2000, rel=1e-14)


def test_diode_matches_bisection():
    nl = parse(DIODE)
    op = dc_operating_point(nl)
    ref = oracles.diode_voltage(nl.models["nch"], 1e-6, 45e-9, 10e-6)
    assert abs(op.v("d") - ref) < 1e-6
    assert kcl_residual(nl, op) <= 1e-12


@pytest.mark.parametrize("vin", [0.0, 3.3])
def test_inverter_supply_current_is_off_device_leakage(vin):
    nl = build_inverter(vin=vin)
    op = dc_operating_point(nl)
    vout = op.v("out")
    if vin == 0.0:
        off = oracles.channel_current(nl.models["nch"], 1e-6, 45e-9, 0.0, vout)
    else:
        off = oracles.channel_current(nl.models["pch"], 2e-6, 45e-9, 0.0, vout - 3.3)
    assert op.i("Vdd") == pytest.approx(off, rel=0.01)
    assert kcl_residual(nl, op) <= 1e-12


@pytest.mark.parametrize("vin", [0.0, 1.65, 3.3])
def test_buffer_converges_and_follows(vin):
    nl = build_class_ab_buffer(vin=vin)
    op = dc_operating_point(nl)
    assert op.converged
    assert kcl_residual(nl, op) <= 1e-12
    if 0.5 < vin < 2.8:
        assert op.v("out") == pytest.approx(vin, abs=0.1)


def test_initial_guess_does_not_change_answer():
    nl = build_inverter(vin=0.0)
    cold = dc_operating_point(nl)
    warm = dc_operating_point(nl, initial_guess={"out": 1.0})
    assert warm.v("out") == pytest.approx(cold.v("out"), abs=1e-9)


def test_floating_node_is_named():
    nl = parse("t\nV1 a 0 1\nR1 a 0 1k\nC1 a b 1p\nR2 b c 1k\n.end\n")
    with pytest.raises(SingularCircuitError) as info:
        dc_operating_point(nl)
    assert info.value.node == "b"


def test_non_convergence_reports_best_residual():
    with pytest.raises(ConvergenceError) as info:
        dc_operating_point(build_inverter(), options=SolverOptions(max_iterations=2))
    assert math.isfinite(info.value.best_residual) or info.value.best_residual == math.inf


def test_gmin_ramp_lands_on_plain_solution():
    nl = build_inverter(vin=0.0)
    system = MnaSystem(nl)
    plain = newton(system, system.initial_vector())
    ramped = _gmin_ramp(system, system.initial_vector(), SolverOptions(), None, 1.0)
    assert plain.converged and ramped.converged
    np.testing.assert_allclose(ramped.x, plain.x, rtol=0, atol=1e-9)


def test_temperature_override():
    nl = build_inverter(vin=0.0)
    hot = dc_operating_point(nl, temp_k=400.0)
    cold = dc_operating_point(nl, temp_k=300.0)
    assert hot.temp_k == 400.0
    assert hot.i("Vdd") > cold.i("Vdd")


# -- DC sweep --------------------------------------------------------------------

def test_sweep_values_inclusive():
    np.testing.assert_allclose(sweep_values(0, 1, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert sweep_values(0.3, 0.3, 0.1).tolist() == [0.3]


def test_degenerate_sweep_equals_op():
    nl = nmos_fixture()
    wave = dc_sweep(nl, DcSweepDirective("VGS", 0.4, 0.4, 0.1))
    op = dc_operating_point(nl.with_source("VGS", dc=0.4))
    assert len(wave) == 1
    assert wave["i(vds)"][0] == pytest.approx(op.i("VDS"), rel=1e-12)


@pytest.mark.parametrize("vds", [0.05, 2.7])
@pytest.mark.parametrize("sigma", [0.0, 0.05])
def test_subthreshold_slope_matches_swing(vds, sigma):
    wave = dc_sweep(nmos_fixture(sigma, vds))
    vgs = wave.abscissa
    ids = wave["i(vds)"]
    vth_eff = 0.2 - sigma * vds
    mask = vgs <= vth_eff - 0.05
    slope = np.polyfit(vgs[mask], np.log10(ids[mask]), 1)[0]
    swing = 1000.0 / slope
    assert swing == pytest.approx(subthreshold_swing_exact(1.5, 300.0), rel=0.005)
    assert np.all(np.diff(ids) > 0)


def test_sweep_is_path_independent():
    nl = build_inverter()
    directive = DcSweepDirective("Vin", 0.0, 3.3, 0.05)
    up = dc_sweep(nl, directive)
    down = dc_sweep(nl, directive, reverse=True)
    np.testing.assert_allclose(up["v(out)"], down["v(out)"], rtol=0, atol=1e-9)
    np.testing.assert_array_equal(up.abscissa, down.abscissa)


def test_sweep_is_deterministic():
    nl = build_inverter()
    directive = DcSweepDirective("Vin", 0.0, 3.3, 0.1)
    a, b = dc_sweep(nl, directive), dc_sweep(nl, directive)
    for name in a.columns:
        assert a[name].tobytes() == b[name].tobytes()


def test_sweep_errors_carry_value():
    with pytest.raises(SolverError, match=r"VGS = 0:"):
        dc_sweep(nmos_fixture(), options=SolverOptions(max_iterations=0))


def test_sweep_without_directive():
    with pytest.raises(SolverError, match="no .dc"):
        dc_sweep(parse(DIVIDER))


# -- transient --------------------------------------------------------------------

def rc_wave(dt, tstop=5e-6):
    return transient(parse(RC.format(dt=dt, tstop=tstop)))


def rc_error(dt):
    wave = rc_wave(dt)
    t = wave.abscissa
    return np.max(np.abs(wave["v(out)"][1:] - (1 - np.exp(-t[1:] / TAU))))


def test_rc_step_value_at_tau():
    wave = rc_wave(1e-9, 1e-6)
    assert wave["v(out)"][-1] == pytest.approx(1 - math.exp(-1), rel=0.01)
    assert wave["v(out)"][-1] == pytest.approx(0.6321, rel=0.01)


def test_rc_second_order_convergence():
    coarse, fine = rc_error(2e-9), rc_error(1e-9)
    assert coarse / fine >= 3.5


def test_rc_energy_balance():
    wave = rc_wave(TAU / 1000)
    t, vin, vout = wave.abscissa, wave["v(in)"], wave["v(out)"]
    i_src = wave["i(v1)"]
    e_source = trapz(vin * i_src, t)
    i_r = (vin - vout) / 1e3
    e_res = trapz(i_r ** 2 * 1e3, t)
    e_cap = 0.5 * 1e-9 * vout[-1] ** 2
    assert e_cap + e_res == pytest.approx(e_source, rel=0.005)


def test_constant_sources_give_flat_waveform():
    nl = parse("rc\nV1 in 0 1.5\nR1 in out 1k\nR2 out 0 2k\nC1 out 0 1n\n.tran 10n 1u\n.end\n")
    wave = transient(nl)
    op = dc_operating_point(nl)
    np.testing.assert_allclose(wave["v(out)"], op.v("out"), rtol=0, atol=1e-12)


def test_resistive_only_transient():
    nl = parse("r\nV1 in 0 PWL(0 0 1u 2)\nR1 in out 1k\nR2 out 0 1k\n.tran 0.1u 1u\n.end\n")
    wave = transient(nl)
    np.testing.assert_allclose(wave["v(out)"], wave["v(in)"] / 2, atol=1e-12)


def test_transient_rejects_non_dividing_step():
    with pytest.raises(TransientError):
        transient(parse(RC.format(dt=3e-9, tstop=1e-8)))
    with pytest.raises(TransientError):
        transient(parse(RC.format(dt=1e-9, tstop=1e-8)), TranDirective(1e-8, 0.0))


def test_inverter_transient_switches():
    nl = build_inverter().with_source("Vin", pwl=[(0, 0), (1e-9, 0), (1.1e-9, 3.3)])
    nl = replace(nl.replace_devices([*nl.devices, Capacitor("C1", "out", "0", 10e-15)]),
                 directives=(TranDirective(3e-9, 1e-11),))
    wave = transient(nl)
    assert wave["v(out)"][0] == pytest.approx(3.3, abs=1e-3)
    assert wave["v(out)"][-1] < 0.05


# -- slew measurement -----------------------------------------------------------------

def test_slew_on_ideal_ramp():
    t = np.linspace(0, 1e-6, 101)
    wave = Waveform("time", t, {"v(out)": 3.3 * t / 1e-6})
    assert measure_slew_rate(wave, "v(out)") == pytest.approx(3.3e6, rel=1e-3)


def test_slew_on_falling_ramp():
    t = np.linspace(0, 1e-6, 101)
    wave = Waveform("time", t, {"v(out)": 3.3 - 3.3 * t / 1e-6})
    assert measure_slew_rate(wave, "v(out)") == pytest.approx(3.3e6, rel=1e-3)


def test_slew_on_rc_step():
    wave = rc_wave(1e-9, 10e-6)
    rate = measure_slew_rate(wave, "v(out)", v_initial=0.0, v_final=1.0)
    assert rate == pytest.approx(0.8 / (TAU * math.log(9)), rel=0.01)
    assert rate == pytest.approx(0.364e6, rel=0.01)


def test_slew_flat_signal_has_no_crossing():
    t = np.linspace(0, 1, 11)
    with pytest.raises(MeasurementError):
        measure_slew_rate(Waveform("time", t, {"v(x)": np.ones_like(t)}), "v(x)")
    with pytest.raises(MeasurementError):
        measure_slew_rate(Waveform("time", t, {"v(x)": np.ones_like(t)}), "v(x)", v_final=2.0)


def test_waveform_requires_increasing_abscissa():
    with pytest.raises(ValueError):
        Waveform("time", [0, 1, 1], {"v(a)": [0, 0, 0]})
