"""Command-line front end.

Every subcommand emits either CSV (comment lines starting with ``#`` carry
provenance, then one header row) or JSON (sorted keys, a ``meta`` block).
Exit status: 0 success, 1 usage error or missing file, 2 parse or
computation failure.  Nothing is written to the data stream on error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

from leakspice import __version__
from leakspice import devmodel
from leakspice.devmodel import BiasPoint, ModelDomainError, MosModelCard, Polarity
from leakspice.engine import (
    MeasurementError, SolverError, dc_operating_point, dc_sweep, measure_slew_rate, transient,
)
from leakspice.engine.dc import _temperature
from leakspice.netlist import (
    DcSweepDirective, GatingOptions, NetlistError, TranDirective, parse, power_gate_transform,
    serialize,
)
from leakspice.power import PowerDomainError, compare_gating, leakage_report

TOOL = "leakspice"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _num(value) -> str:
    return f"{float(value):.8e}"


class Report:
    """Tabular rows plus a JSON payload, rendered on demand."""

    def __init__(self, meta: dict, header: list[str], rows: list[list], payload: dict, notes=()):
        self.meta = meta
        self.header = header
        self.rows = rows
        self.payload = payload
        self.notes = list(notes)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = dict(self.payload)
            doc["meta"] = self.meta
            return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}: {self.meta[key]}\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([_num(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"netlist file not found: {path}")
    data = p.read_bytes()
    return parse(data.decode("utf-8", errors="replace")), hashlib.sha256(data).hexdigest()


def _meta(command: str, digest: str | None, temp_k: float | None) -> dict:
    meta = {"tool": TOOL, "version": __version__, "command": command}
    if digest is not None:
        meta["netlist_sha256"] = digest
    if temp_k is not None:
        meta["temp_k"] = float(temp_k)
    return meta


def _split(text: str | None) -> list[str]:
    return [t.strip() for t in (text or "").split(",") if t.strip()]


# -- subcommands -----------------------------------------------------------

def cmd_op(args) -> Report:
    netlist, digest = _load(args.netlist)
    op = dc_operating_point(netlist, args.temp)
    rows = [["v", k, v] for k, v in op.node_voltages.items()]
    rows += [["i", k, v] for k, v in op.source_currents.items()]
    payload = {
        "node_voltages": op.node_voltages,
        "source_currents": op.source_currents,
        "iterations": op.iterations,
        "residual_norm": op.residual_norm,
        "converged": op.converged,
        "strategy": op.strategy,
    }
    return Report(_meta("op", digest, op.temp_k), ["kind", "name", "value"], rows, payload)


def _sweep_directive(netlist) -> DcSweepDirective:
    sweeps = [d for d in netlist.directives if isinstance(d, DcSweepDirective)]
    if not sweeps:
        raise SolverError("netlist has no .dc directive")
    return sweeps[0]


def cmd_sweep(args) -> Report:
    netlist, digest = _load(args.netlist)
    directive = _sweep_directive(netlist)
    temp = directive.temp_k if args.temp is None else args.temp
    xname = directive.source.lower()
    if not args.step_source:
        wave = dc_sweep(netlist, directive, temp)
        names = list(wave.columns)
        rows = [[float(x), *(float(wave[n][i]) for n in names)] for i, x in enumerate(wave.abscissa)]
        payload = {"abscissa": xname, "values": wave.abscissa.tolist(),
                   "columns": {n: wave[n].tolist() for n in names}}
        return Report(_meta("sweep", digest, temp), [xname, *names], rows, payload)

    step_src = args.step_source
    if not netlist.has_device(step_src):
        raise UsageError(f"--step-source {step_src} is not in the netlist")
    try:
        step_values = [float(v) for v in _split(args.step_values)]
    except ValueError as exc:
        raise UsageError(f"--step-values: {exc}") from None
    if not step_values:
        raise UsageError("--step-values is required with --step-source")
    measure = args.measure or "ids"
    column = f"i({step_src.lower()})" if measure == "ids" else measure.lower()
    label = measure if measure == "ids" else measure.lower().replace("(", "_").replace(")", "")
    names, curves, wave = [], [], None
    for value in step_values:
        wave = dc_sweep(netlist.with_source(step_src, dc=value), directive, temp)
        if column not in wave.columns:
            raise UsageError(f"--measure {measure}: no column {column}")
        names.append(f"{label}_{step_src.lower()}_{value:g}")
        curves.append(wave[column])
    rows = [[float(x), *(float(c[i]) for c in curves)] for i, x in enumerate(wave.abscissa)]
    payload = {"abscissa": xname, "values": wave.abscissa.tolist(),
               "columns": {n: c.tolist() for n, c in zip(names, curves)}}
    return Report(_meta("sweep", digest, temp), [xname, *names], rows, payload)


def cmd_tran(args) -> Report:
    netlist, digest = _load(args.netlist)
    trans = [d for d in netlist.directives if isinstance(d, TranDirective)]
    if not trans:
        raise SolverError("netlist has no .tran directive")
    temp = trans[0].temp_k if args.temp is None else args.temp
    wave = transient(netlist, trans[0], temp)
    names = list(wave.columns)
    rows = [[float(t), *(float(wave[n][i]) for n in names)] for i, t in enumerate(wave.abscissa)]
    payload = {"abscissa": "time", "values": wave.abscissa.tolist(),
               "columns": {n: wave[n].tolist() for n in names}}
    notes = []
    if args.slew:
        rate = measure_slew_rate(wave, args.slew)
        payload["slew_rate"] = {"signal": args.slew.lower(), "value": rate, "unit": "V/s"}
        notes.append(f"slew_rate {args.slew.lower()}: {_num(rate)} V/s")
    return Report(_meta("tran", digest, temp), ["time", *names], rows, payload, notes)


def _report_payload(report) -> dict:
    return {
        "temp_k": report.temp_k,
        "vdd": report.vdd,
        "worst_state": report.worst_state,
        "mean_power": report.mean_power,
        "states": [
            {"input_assignment": s.input_assignment, "supply_current": s.supply_current,
             "static_power": s.static_power, "per_device": s.per_device}
            for s in report.states
        ],
    }


def cmd_leakage(args) -> Report:
    netlist, digest = _load(args.netlist)
    temp = _temperature(netlist, args.temp)
    inputs = _split(args.inputs)
    report = leakage_report(netlist, inputs, temp, args.vdd)
    names = [netlist.device(n).name for n in inputs]
    header = ["state", *names, "supply_current", "static_power"]
    rows = [[str(i), *(float(s.input_assignment[n]) for n in names), s.supply_current, s.static_power]
            for i, s in enumerate(report.states)]
    notes = [f"worst_state: {report.worst_state}", f"mean_power: {_num(report.mean_power)} W"]
    return Report(_meta("leakage", digest, temp), header, rows, _report_payload(report), notes)


def cmd_gate(args) -> Report:
    netlist, digest = _load(args.netlist)
    temp = _temperature(netlist, args.temp)
    options = GatingOptions(style=args.style, sleep_model=args.sleep_model, sleep_state=args.state,
                            w=args.sleep_w, l=args.sleep_l)
    gated = power_gate_transform(netlist, options)
    comparison = compare_gating(netlist, options, temp, _split(args.inputs), args.vdd)
    variants = (("baseline", comparison.baseline), ("gated_active", comparison.gated_active),
                ("gated_standby", comparison.gated_standby))
    rows = [[name, rep.mean_power, float(rep.powers.max())] for name, rep in variants]
    payload = {name: _report_payload(rep) for name, rep in variants}
    payload["standby_reduction_factor"] = comparison.standby_reduction_factor
    payload["active_penalty_factor"] = comparison.active_penalty_factor
    payload["options"] = {"style": options.style.value, "sleep_model": options.model_name,
                          "state": options.sleep_state.value}
    notes = [f"standby_reduction_factor: {_num(comparison.standby_reduction_factor)}",
             f"active_penalty_factor: {_num(comparison.active_penalty_factor)}"]
    if args.netlist_out:
        Path(args.netlist_out).write_text(serialize(gated))
    return Report(_meta("gate", digest, temp), ["variant", "mean_power", "worst_power"], rows, payload, notes)


def cmd_model_eval(args) -> Report:
    q = args.quantity
    temp = args.temp if args.temp is not None else 300.0
    if q == "ioff":
        value, unit = devmodel.ioff_empirical(args.wl, args.vt, args.eta, temp), "A"
    elif q == "ids":
        value, unit = devmodel.ids_empirical(args.wl, args.vgs, args.vt, args.eta, temp), "A"
    elif q == "swing":
        value, unit = devmodel.subthreshold_swing_nominal(args.eta, temp), "mV/dec"
    elif q == "swing-exact":
        value, unit = devmodel.subthreshold_swing_exact(args.eta, temp), "mV/dec"
    elif q == "vt":
        value, unit = devmodel.thermal_voltage(temp), "V"
    else:
        card = MosModelCard("cli", Polarity(args.polarity.upper()), vth0=args.vt, eta=args.eta,
                            tox=args.tox, wdm=args.wdm, u0cox=args.u0cox, kp=args.kp,
                            lam=args.lam, sigma_dibl=args.sigma)
        ev = devmodel.ids_unified(card, args.w, args.l, BiasPoint(args.vgs, args.vds, temp))
        value, unit = ev.ids, "A"
    payload = {"quantity": q, "value": value, "unit": unit}
    if q == "unified":
        payload.update(d_ids_d_vgs=ev.d_ids_d_vgs, d_ids_d_vds=ev.d_ids_d_vds, region=ev.region.value)
    return Report(_meta("model-eval", None, temp), ["quantity", "value", "unit"], [[q, value, unit]], payload)


# -- argument parsing ------------------------------------------------------

def _positive(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None
    if not (math.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return val


def _finite(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"must be finite: {text}")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--temp", type=_positive, default=None, help="temperature in kelvin")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default: standard output)")

    parser = _Parser(prog=TOOL, description="Leakage-aware SPICE-subset circuit simulator.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("op", parents=[common], help="DC operating point")
    p.add_argument("netlist")
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("sweep", parents=[common], help="DC sweep from the netlist's .dc line")
    p.add_argument("netlist")
    p.add_argument("--step-source", default=None, help="re-run the sweep for several values of this source")
    p.add_argument("--step-values", default=None, help="comma-separated values for --step-source")
    p.add_argument("--measure", default=None,
                   help="column recorded per step, e.g. v(out); 'ids' is the current of the step source")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tran", parents=[common], help="transient from the netlist's .tran line")
    p.add_argument("netlist")
    p.add_argument("--slew", default=None, help="also report the 10-90%% slew rate of this signal")
    p.set_defaults(func=cmd_tran)

    p = sub.add_parser("leakage", parents=[common], help="static leakage over all input states")
    p.add_argument("netlist")
    p.add_argument("--inputs", default="", help="comma-separated input voltage sources")
    p.add_argument("--vdd", type=_positive, default=None)
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("gate", parents=[common], help="insert a sleep transistor and compare leakage")
    p.add_argument("netlist")
    p.add_argument("--style", choices=("footer", "header"), default="footer")
    p.add_argument("--sleep-model", default=None)
    p.add_argument("--state", choices=("active", "standby"), default="standby",
                   help="sleep state of the netlist written by --netlist-out")
    p.add_argument("--sleep-w", type=_positive, default=None)
    p.add_argument("--sleep-l", type=_positive, default=None)
    p.add_argument("--inputs", default="")
    p.add_argument("--vdd", type=_positive, default=None)
    p.add_argument("--netlist-out", default=None, help="write the gated netlist here")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("model-eval", parents=[common], help="evaluate the device model directly")
    p.add_argument("quantity", choices=("ids", "ioff", "swing", "swing-exact", "vt", "unified"))
    p.add_argument("--wl", type=_positive, default=1.0, help="W/L ratio (empirical law)")
    p.add_argument("--vt", type=_finite, default=0.2, help="threshold voltage")
    p.add_argument("--eta", type=_finite, default=1.5)
    p.add_argument("--vgs", type=_finite, default=0.0)
    p.add_argument("--vds", type=_finite, default=0.05)
    p.add_argument("--polarity", choices=("nmos", "pmos"), default="nmos")
    p.add_argument("--w", type=_positive, default=1e-6)
    p.add_argument("--l", type=_positive, default=1e-6)
    p.add_argument("--u0cox", type=_finite, default=3.5e-4)
    p.add_argument("--kp", type=_finite, default=2e-4)
    p.add_argument("--lam", type=_finite, default=0.0)
    p.add_argument("--sigma", type=_finite, default=0.0)
    p.add_argument("--tox", type=_positive, default=2e-9)
    p.add_argument("--wdm", type=_positive, default=12e-9)
    p.set_defaults(func=cmd_model_eval)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    """Execute one CLI invocation and return its exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 1
    except SystemExit as exc:
        # --help and --version exit through argparse
        return int(exc.code or 0)
    try:
        report = args.func(args)
        text = report.render(args.format)
    except (UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"{TOOL}: error: {exc}", file=stderr)
        return 1
    except NetlistError as exc:
        print(f"{TOOL}: netlist error:\n{exc}", file=stderr)
        return 2
    except (SolverError, ModelDomainError, PowerDomainError, MeasurementError) as exc:
        print(f"{TOOL}: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"{TOOL}: error: cannot write {args.out}: {exc}", file=stderr)
            return 1
    else:
        stdout.write(text)
    return 0


def main() -> None:
    try:
        status = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        status = 0
    sys.exit(status)


if __name__ == "__main__":
    main()
