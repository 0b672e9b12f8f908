"""Modified nodal analysis: unknown layout, Jacobian/residual assembly.

Unknowns are the non-ground node voltages followed by one branch current per
voltage source (SPICE sign: positive current enters the ``+`` terminal).
The residual row of a node is the sum of currents flowing out of that node
into the attached elements, so a solution has every node row at zero.
"""

from __future__ import annotations

import numpy as np

from leakspice.devmodel import BiasPoint, junction_eval, ids_unified
from leakspice.netlist.model import GROUND, DeviceKind, Netlist


class SolverError(Exception):
    """Base class for circuit solve failures."""


class SingularCircuitError(SolverError):
    def __init__(self, node, detail="no DC path to ground"):
        self.node = node
        super().__init__(f"singular circuit matrix at node {node!r}: {detail}")


class MnaSystem:
    """Compiled form of a netlist at a fixed temperature.

    Source values can be overridden in place with :meth:`set_source`, which is
    how sweeps and per-state leakage runs reuse one compiled system.
    """

    def __init__(self, netlist: Netlist, temp_k: float = 300.0):
        self.netlist = netlist
        self.temp_k = float(temp_k)
        self.node_names = netlist.nodes
        self.index = {name: i - 1 for i, name in enumerate(self.node_names)}
        self.n_nodes = len(self.node_names) - 1

        self.resistors, self.capacitors, self.isources, self.vsources, self.mosfets = [], [], [], [], []
        limited = set()
        ix = self.index
        for dev in netlist.devices:
            kind = dev.kind
            if kind is DeviceKind.RESISTOR:
                self.resistors.append((dev.name, ix[dev.n1], ix[dev.n2], 1.0 / dev.value))
            elif kind is DeviceKind.CAPACITOR:
                self.capacitors.append((dev.name, ix[dev.n1], ix[dev.n2], dev.value))
            elif kind is DeviceKind.ISOURCE:
                self.isources.append((dev, ix[dev.pos], ix[dev.neg]))
            elif kind is DeviceKind.VSOURCE:
                branch = self.n_nodes + len(self.vsources)
                self.vsources.append((dev, ix[dev.pos], ix[dev.neg], branch))
            else:
                card = netlist.models[dev.model]
                terms = (ix[dev.drain], ix[dev.gate], ix[dev.source], ix[dev.body])
                self.mosfets.append((dev.name, *terms, card, dev.w, dev.l))
                limited.update(t for t in terms[:3] if t >= 0)
        self.size = self.n_nodes + len(self.vsources)
        self.limited_nodes = np.array(sorted(limited), dtype=int)
        self.source_values: dict[str, float] = {}

    # -- source control -------------------------------------------------
    def set_source(self, name: str, value: float | None) -> None:
        """Override an independent source's DC value (``None`` restores it)."""
        key = name.lower()
        if not any(src.name.lower() == key for src, *_ in self.vsources + self.isources):
            raise KeyError(f"no independent source named {name}")
        if value is None:
            self.source_values.pop(key, None)
        else:
            self.source_values[key] = float(value)

    def source_value(self, src, time=None) -> float:
        override = self.source_values.get(src.name.lower())
        if override is not None:
            return override
        return src.value_at(time)

    # -- helpers ----------------------------------------------------------
    def voltage(self, x, node_index):
        return 0.0 if node_index < 0 else x[node_index]

    def initial_vector(self, time=None, scale=1.0, guess=None) -> np.ndarray:
        """Start vector: grounded voltage sources pinned, everything else from ``guess`` or 0."""
        x = np.zeros(self.size)
        if guess is not None:
            for node, val in guess.items():
                i = self.index.get(node)
                if i is not None and i >= 0:
                    x[i] = val
        for src, p, m, _ in self.vsources:
            if m < 0 and p >= 0 and (guess is None or src.pos not in guess):
                x[p] = scale * self.source_value(src, time)
        return x

    def pin_sources(self, x, time=None, scale=1.0) -> np.ndarray:
        """Copy of ``x`` with nodes driven by grounded voltage sources set exactly."""
        x = np.array(x, dtype=float)
        for src, p, m, _ in self.vsources:
            if m < 0 and p >= 0:
                x[p] = scale * self.source_value(src, time)
        return x

    def floating_nodes(self, with_capacitors=False) -> list[str]:
        """Nodes with no conductive path to ground (these make the matrix singular)."""
        parent = list(range(self.n_nodes + 1))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def join(a, b):
            parent[find(a + 1)] = find(b + 1)

        for _, a, b, _g in self.resistors:
            join(a, b)
        for src, p, m, _ in self.vsources:
            join(p, m)
        if with_capacitors:
            for _, a, b, _c in self.capacitors:
                join(a, b)
        for _, d, g, s, b, card, *_rest in self.mosfets:
            if (card.u0cox > 0 and card.eta > 1) or card.kp > 0:
                join(d, s)
            if card.is_junction > 0:
                join(d, b)
                join(s, b)
        root = find(0)
        return [self.node_names[i + 1] for i in range(self.n_nodes) if find(i + 1) != root]

    # -- assembly -------------------------------------------------------
    def assemble(self, x, time=None, scale=1.0, gmin=0.0, companions=None):
        """Return ``(J, f)`` at ``x``.

        ``companions`` holds one ``(geq, ieq)`` pair per capacitor for
        transient steps (branch current ``geq*v + ieq``); ``None`` leaves
        capacitors open.
        """
        n = self.size
        J = np.zeros((n, n))
        f = np.zeros(n)
        T = self.temp_k

        def stamp2(a, b, i, g):
            # element current i flows a -> b with di/d(va - vb) = g
            if a >= 0:
                f[a] += i
                J[a, a] += g
                if b >= 0:
                    J[a, b] -= g
            if b >= 0:
                f[b] -= i
                J[b, b] += g
                if a >= 0:
                    J[b, a] -= g

        for _, a, b, g in self.resistors:
            stamp2(a, b, g * (self.voltage(x, a) - self.voltage(x, b)), g)

        if companions is not None:
            for (_, a, b, _c), (geq, ieq) in zip(self.capacitors, companions):
                stamp2(a, b, geq * (self.voltage(x, a) - self.voltage(x, b)) + ieq, geq)

        for src, p, m in self.isources:
            val = scale * self.source_value(src, time)
            if p >= 0:
                f[p] += val
            if m >= 0:
                f[m] -= val

        for src, p, m, k in self.vsources:
            ik = x[k]
            if p >= 0:
                f[p] += ik
                J[p, k] += 1.0
                J[k, p] += 1.0
            if m >= 0:
                f[m] -= ik
                J[m, k] -= 1.0
                J[k, m] -= 1.0
            f[k] = self.voltage(x, p) - self.voltage(x, m) - scale * self.source_value(src, time)

        for _, d, g, s, b, card, w, l in self.mosfets:
            vd, vg, vs, vb = (self.voltage(x, t) for t in (d, g, s, b))
            ev = ids_unified(card, w, l, BiasPoint(vg - vs, vd - vs, T))
            ids, gm, gds = ev.ids, ev.d_ids_d_vgs, ev.d_ids_d_vds
            # ids leaves the drain node and enters the source node
            for row, sign in ((d, 1.0), (s, -1.0)):
                if row < 0:
                    continue
                f[row] += sign * ids
                if d >= 0:
                    J[row, d] += sign * gds
                if g >= 0:
                    J[row, g] += sign * gm
                if s >= 0:
                    J[row, s] -= sign * (gm + gds)
            if card.is_junction > 0:
                for t in (d, s):
                    i_j, g_j = self._junction(card, self.voltage(x, t), vb)
                    stamp2(t, b, i_j, g_j)

        if gmin > 0:
            for i in range(self.n_nodes):
                f[i] += gmin * x[i]
                J[i, i] += gmin
        return J, f

    def _junction(self, card, v_term, v_body):
        # current from the terminal into the body through the drain/source junction
        if card.polarity.value == "NMOS":
            i, g = junction_eval(card.is_junction, v_term - v_body, self.temp_k)
            return i, g
        i, g = junction_eval(card.is_junction, v_body - v_term, self.temp_k)
        return -i, g

    # -- post-processing ------------------------------------------------
    def node_voltages(self, x) -> dict[str, float]:
        out = {GROUND: 0.0}
        for name, i in self.index.items():
            if i >= 0:
                out[name] = float(x[i])
        return out

    def source_currents(self, x) -> dict[str, float]:
        """Current delivered by each voltage source out of its ``+`` terminal."""
        return {src.name: 0.0 - float(x[k]) for src, _p, _m, k in self.vsources}

    def terminal_currents(self, x, time=None, scale=1.0, companions=None) -> dict[str, dict[str, float]]:
        """Per element, current flowing from each terminal node into the element."""
        out: dict[str, dict[str, float]] = {}
        names = self.node_names

        def put(dev, idx, cur):
            node = names[idx + 1]
            slot = out.setdefault(dev, {})
            slot[node] = slot.get(node, 0.0) + cur

        for name, a, b, g in self.resistors:
            i = g * (self.voltage(x, a) - self.voltage(x, b))
            put(name, a, i)
            put(name, b, -i)
        for k, (name, a, b, _c) in enumerate(self.capacitors):
            i = 0.0
            if companions is not None:
                geq, ieq = companions[k]
                i = geq * (self.voltage(x, a) - self.voltage(x, b)) + ieq
            put(name, a, i)
            put(name, b, -i)
        for src, p, m in self.isources:
            val = scale * self.source_value(src, time)
            put(src.name, p, val)
            put(src.name, m, -val)
        for src, p, m, k in self.vsources:
            put(src.name, p, float(x[k]))
            put(src.name, m, -float(x[k]))
        for name, d, g, s, b, card, w, l in self.mosfets:
            vd, vg, vs, vb = (self.voltage(x, t) for t in (d, g, s, b))
            ids = ids_unified(card, w, l, BiasPoint(vg - vs, vd - vs, self.temp_k)).ids
            put(name, d, ids)
            put(name, g, 0.0)
            put(name, s, -ids)
            put(name, b, 0.0)
            if card.is_junction > 0:
                for t in (d, s):
                    i_j, _ = self._junction(card, self.voltage(x, t), vb)
                    put(name, t, i_j)
                    put(name, b, -i_j)
        return out
