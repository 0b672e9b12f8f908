"""Reader and writer for the SPICE-subset netlist format.

Grammar (one statement per line, first line is the title, ``*`` starts a
comment line, ``;`` an inline comment, ``+`` continues the previous line)::

    Mname drain gate source body model W=<val> L=<val>
    Rname n1 n2 <ohms>
    Cname n1 n2 <farads>
    Vname n+ n- [DC] <val>      |  Vname n+ n- PWL(t1 v1 t2 v2 ...)
    Iname n+ n- [DC] <val>      |  Iname n+ n- PWL(...)
    .model <name> NMOS|PMOS vth0=.. eta=..|derived tox=.. wdm=.. u0cox=.. kp=.. [lambda=..] [sigma=..] [is=..]
    .op [temp=<K>]
    .dc <source> <start> <stop> <step> [temp=<K>]
    .tran <dt> <tstop> [temp=<K>]
    .end

Node and model names are case-insensitive and stored lower-case.
"""

from __future__ import annotations

import math
import re

from leakspice.devmodel import ModelDomainError, MosModelCard, Polarity
from leakspice.netlist.model import (
    Capacitor, CurrentSource, DcSweepDirective, Diagnostic, DeviceKind, Mosfet,
    Netlist, NetlistError, OpDirective, Resistor, TranDirective, VoltageSource, validate,
)

_SCALE = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3,
          "k": 1e3, "meg": 1e6, "g": 1e9, "t": 1e12}

_NUMBER = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[fpnumkgt])?([a-z]*)$", re.IGNORECASE
)
_TOKEN = re.compile(r"[^\s()=,]+|[()=,]")

_MODEL_KEYS = {
    "vth0": "vth0", "eta": "eta", "tox": "tox", "wdm": "wdm", "u0cox": "u0cox",
    "kp": "kp", "lambda": "lam", "sigma": "sigma_dibl", "is": "is_junction",
}
_MODEL_REQUIRED = ("vth0", "eta", "tox", "wdm", "u0cox", "kp")


def parse_value(text: str) -> float:
    """Decode a number with an optional SPICE scale suffix (``45n``, ``1meg``, ``3.3V``)."""
    match = _NUMBER.match(text)
    if not match:
        raise ValueError(f"invalid number {text!r}")
    mantissa, scale, _unit = match.groups()
    value = float(mantissa) * (_SCALE[scale.lower()] if scale else 1.0)
    if not math.isfinite(value):
        raise ValueError(f"number out of range {text!r}")
    return value


class _LineError(Exception):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class _Line:
    """Tokens of one logical line with 1-based source columns."""

    def __init__(self, lineno, text):
        self.lineno = lineno
        self.tokens = []
        self.columns = []
        for m in _TOKEN.finditer(text):
            self.tokens.append(m.group())
            self.columns.append(m.start() + 1)

    def error(self, message, index=None):
        col = self.columns[index] if index is not None and index < len(self.columns) else None
        return _LineError(message, col)

    def value(self, index, what):
        try:
            return parse_value(self.tokens[index])
        except IndexError:
            raise self.error(f"missing {what}") from None
        except ValueError as exc:
            raise self.error(f"{what}: {exc}", index) from None

    def node(self, index, what):
        try:
            tok = self.tokens[index]
        except IndexError:
            raise self.error(f"missing {what}") from None
        if tok in "()=,":
            raise self.error(f"invalid {what} {tok!r}", index)
        return tok.lower()


def _keyword_args(line: _Line, start: int) -> dict[str, tuple[str, int]]:
    """Collect ``key=value`` pairs from ``start`` onward; values stay as raw text."""
    out = {}
    toks = line.tokens
    i = start
    while i < len(toks):
        if (i + 2 >= len(toks) or toks[i + 1] != "="
                or toks[i] in "()=," or toks[i + 2] in "()=,"):
            raise line.error(f"expected key=value, got {toks[i]!r}", i)
        key = toks[i].lower()
        if key in out:
            raise line.error(f"duplicate parameter {key}", i)
        out[key] = (toks[i + 2], i + 2)
        i += 3
    return out


def _parse_kw_value(line, raw):
    text, index = raw
    try:
        return parse_value(text)
    except ValueError as exc:
        raise line.error(str(exc), index) from None


def _parse_temp(line, start):
    kw = _keyword_args(line, start)
    temp = 300.0
    for key, raw in kw.items():
        if key != "temp":
            raise line.error(f"unknown parameter {key}", raw[1] - 2)
        temp = _parse_kw_value(line, raw)
    if temp <= 0:
        raise line.error("temperature must be positive")
    return temp


def _parse_mosfet(line):
    toks = line.tokens
    if len(toks) < 6:
        raise line.error("MOSFET needs drain gate source body model")
    nodes = [line.node(i, ("drain", "gate", "source", "body")[i - 1]) for i in range(1, 5)]
    model = line.node(5, "model name")
    kw = _keyword_args(line, 6)
    params = {}
    for key, raw in kw.items():
        if key not in ("w", "l"):
            raise line.error(f"unknown MOSFET parameter {key}", raw[1] - 2)
        params[key] = _parse_kw_value(line, raw)
        if params[key] <= 0:
            raise line.error(f"{key.upper()} must be positive", raw[1])
    for key in ("w", "l"):
        if key not in params:
            raise line.error(f"missing {key.upper()}=")
    return Mosfet(toks[0], *nodes, model, params["w"], params["l"])


def _parse_two_terminal(line, cls, what):
    if len(line.tokens) != 4:
        raise line.error(f"{what} needs two nodes and a value")
    value = line.value(3, "value")
    if value <= 0:
        raise line.error(f"{what} value must be positive", 3)
    return cls(line.tokens[0], line.node(1, "node"), line.node(2, "node"), value)


def _parse_source(line, cls):
    toks = line.tokens
    pos, neg = line.node(1, "positive node"), line.node(2, "negative node")
    rest = toks[3:]
    if not rest:
        raise line.error("missing source value")
    head = rest[0].lower()
    if head == "pwl":
        if len(rest) < 3 or rest[1] != "(" or rest[-1] != ")":
            raise line.error("PWL expects PWL(t1 v1 t2 v2 ...)", 3)
        body = [(tok, 5 + i) for i, tok in enumerate(rest[2:-1]) if tok != ","]
        if not body or len(body) % 2:
            raise line.error("PWL needs an even, non-zero count of values", 3)
        values = []
        for tok, index in body:
            try:
                values.append(parse_value(tok))
            except ValueError as exc:
                raise line.error(str(exc), index) from None
        pairs = tuple(zip(values[::2], values[1::2]))
        times = [t for t, _ in pairs]
        if times[0] < 0 or any(b < a for a, b in zip(times, times[1:])):
            raise line.error("PWL times must be non-negative and non-decreasing", 3)
        return cls(toks[0], pos, neg, 0.0, pairs)
    index = 3
    if head == "dc":
        index = 4
    if len(toks) != index + 1:
        raise line.error("expected a single DC value", index)
    return cls(toks[0], pos, neg, line.value(index, "DC value"))


def _parse_model(line):
    toks = line.tokens
    if len(toks) < 3:
        raise line.error(".model needs a name and a type")
    name = line.node(1, "model name")
    kind = toks[2].upper()
    if kind not in ("NMOS", "PMOS"):
        raise line.error(f"unknown model type {toks[2]}", 2)
    kw = _keyword_args(line, 3)
    params = {}
    derived = False
    for key, raw in kw.items():
        if key not in _MODEL_KEYS:
            raise line.error(f"unknown model parameter {key}", raw[1] - 2)
        if key == "eta" and raw[0].lower() == "derived":
            derived = True
            continue
        params[_MODEL_KEYS[key]] = _parse_kw_value(line, raw)
    missing = [k for k in _MODEL_REQUIRED if _MODEL_KEYS[k] not in params and not (k == "eta" and derived)]
    if missing:
        raise line.error(f"model {name} missing parameters: {', '.join(missing)}")
    params.setdefault("eta", None)
    try:
        return MosModelCard(name=name, polarity=Polarity(kind), eta_derived=derived, **params)
    except ModelDomainError as exc:
        raise line.error(str(exc)) from None


def _parse_directive(line):
    word = line.tokens[0].lower()
    toks = line.tokens
    if word == ".op":
        return OpDirective(_parse_temp(line, 1))
    if word == ".dc":
        if len(toks) < 5:
            raise line.error(".dc needs source start stop step")
        start, stop, step = (line.value(i, w) for i, w in ((2, "start"), (3, "stop"), (4, "step")))
        if step <= 0 or start > stop:
            raise line.error(".dc requires step > 0 and start <= stop", 4)
        return DcSweepDirective(toks[1], start, stop, step, _parse_temp(line, 5))
    if word == ".tran":
        if len(toks) < 3:
            raise line.error(".tran needs dt and tstop")
        dt, tstop = line.value(1, "dt"), line.value(2, "tstop")
        if dt <= 0 or tstop < dt:
            raise line.error(".tran requires dt > 0 and tstop >= dt", 1)
        return TranDirective(tstop, dt, _parse_temp(line, 3))
    raise line.error(f"unknown directive {toks[0]}", 0)


def _logical_lines(text):
    """Yield (lineno, text) after comment stripping and '+' continuation joining."""
    lines = text.splitlines()
    pending = None
    for lineno, raw in enumerate(lines[1:], start=2):
        body = raw.split(";", 1)[0].rstrip()
        stripped = body.lstrip()
        if not stripped or stripped.startswith("*"):
            continue
        if stripped.startswith("+"):
            if pending is None:
                yield lineno, body  # reported as an error downstream
                continue
            # continuation keeps the first line's number; columns become approximate
            pending = (pending[0], pending[1] + " " + stripped[1:])
            continue
        if pending is not None:
            yield pending
        pending = (lineno, body)
    if pending is not None:
        yield pending


def parse(text: str) -> Netlist:
    """Parse netlist text.

    Raises :class:`NetlistError` carrying every diagnostic found; never any
    other exception for string input.
    """
    if not isinstance(text, str):
        raise TypeError("netlist text must be str")
    lines = text.splitlines()
    title = lines[0].rstrip() if lines else ""
    devices, models, directives = [], {}, []
    diags: list[Diagnostic] = []
    model_lines = {}
    device_lines = {}
    sweep_lines = {}

    for lineno, body in _logical_lines(text):
        line = _Line(lineno, body)
        if not line.tokens:
            continue
        head = line.tokens[0]
        try:
            if head.startswith("+"):
                raise line.error("continuation line without a preceding statement", 0)
            if head.lower() == ".end":
                break
            if head.startswith("."):
                if head.lower() == ".model":
                    card = _parse_model(line)
                    if card.name in models:
                        raise line.error(f"duplicate model {card.name}", 1)
                    models[card.name] = card
                    model_lines[card.name] = line
                else:
                    directive = _parse_directive(line)
                    if isinstance(directive, DcSweepDirective):
                        sweep_lines[len(directives)] = line
                    directives.append(directive)
                continue
            letter = head[0].upper()
            if letter == "M":
                dev = _parse_mosfet(line)
            elif letter == "R":
                dev = _parse_two_terminal(line, Resistor, "resistor")
            elif letter == "C":
                dev = _parse_two_terminal(line, Capacitor, "capacitor")
            elif letter == "V":
                dev = _parse_source(line, VoltageSource)
            elif letter == "I":
                dev = _parse_source(line, CurrentSource)
            else:
                raise line.error(f"unknown element type {head!r}", 0)
            key = dev.name.lower()
            if key in device_lines:
                raise line.error(f"duplicate device name {dev.name}", 0)
            device_lines[key] = line
            devices.append(dev)
        except _LineError as exc:
            diags.append(Diagnostic(str(exc), lineno, exc.column))

    for dev in devices:
        if dev.kind is DeviceKind.MOSFET and dev.model not in models:
            line = device_lines[dev.name.lower()]
            diags.append(Diagnostic(f"unknown model {dev.model}", line.lineno, line.columns[5]))
    names = set(device_lines)
    for index, d in enumerate(directives):
        if isinstance(d, DcSweepDirective):
            if d.source.lower() not in names or d.source[0].upper() not in "VI":
                line = sweep_lines[index]
                diags.append(Diagnostic(f"unknown sweep source {d.source}", line.lineno, line.columns[1]))
    if not diags and not any("0" in dev.nodes for dev in devices):
        diags.append(Diagnostic("missing ground node 0", 1, 1))

    if diags:
        raise NetlistError(diags)
    netlist = Netlist(title, tuple(devices), models, tuple(directives))
    leftover = validate(netlist)
    if leftover:
        raise NetlistError(leftover)
    return netlist


def parse_file(path) -> Netlist:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def format_value(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    return repr(float(value))


def _format_card(card: MosModelCard) -> str:
    fields = [
        f"vth0={format_value(card.vth0)}",
        "eta=derived" if card.eta_derived else f"eta={format_value(card.eta)}",
        f"tox={format_value(card.tox)}",
        f"wdm={format_value(card.wdm)}",
        f"u0cox={format_value(card.u0cox)}",
        f"kp={format_value(card.kp)}",
        f"lambda={format_value(card.lam)}",
        f"sigma={format_value(card.sigma_dibl)}",
        f"is={format_value(card.is_junction)}",
    ]
    return f".model {card.name} {card.polarity.value} " + " ".join(fields)


def _format_device(dev) -> str:
    kind = dev.kind
    if kind is DeviceKind.MOSFET:
        return (f"{dev.name} {dev.drain} {dev.gate} {dev.source} {dev.body} {dev.model} "
                f"W={format_value(dev.w)} L={format_value(dev.l)}")
    if kind in (DeviceKind.RESISTOR, DeviceKind.CAPACITOR):
        return f"{dev.name} {dev.n1} {dev.n2} {format_value(dev.value)}"
    if dev.pwl is not None:
        pts = " ".join(f"{format_value(t)} {format_value(v)}" for t, v in dev.pwl)
        return f"{dev.name} {dev.pos} {dev.neg} PWL({pts})"
    return f"{dev.name} {dev.pos} {dev.neg} {format_value(dev.dc)}"


def _format_directive(d) -> str:
    temp = f" temp={format_value(d.temp_k)}"
    if isinstance(d, OpDirective):
        return ".op" + temp
    if isinstance(d, DcSweepDirective):
        return (f".dc {d.source} {format_value(d.start)} {format_value(d.stop)} "
                f"{format_value(d.step)}" + temp)
    return f".tran {format_value(d.dt)} {format_value(d.tstop)}" + temp


def serialize(netlist: Netlist) -> str:
    """Canonical text: title, model cards (sorted), devices in order, directives, ``.end``."""
    title = netlist.title.splitlines()[0] if netlist.title else ""
    out = [title]
    out.extend(_format_card(netlist.models[name]) for name in sorted(netlist.models))
    out.extend(_format_device(dev) for dev in netlist.devices)
    out.extend(_format_directive(d) for d in netlist.directives)
    out.append(".end")
    return "\n".join(out) + "\n"
