"""Gate-level netlist model, textual format, and cycle-accurate simulation.

The model is deliberately small: primary inputs, constants, nine combinational
gate kinds, and D-flip-flops with optional reset/enable pins.  Every net has
exactly one driver.  A netlist is immutable after construction; analyses cache
derived indexes on the instance but never mutate the structure.

Textual format (one statement per line, ``#`` starts a comment)::

    input <net>
    output <net>
    const <net> <0|1>
    gate <KIND> <name> <out> <in1> [in2 ...]
    dff <name> q=<net> d=<net> clk=<net> [rst=<net> rstval=<0|1>] [en=<net>]

Serialization is canonical: inputs, constants, gates, flip-flops, outputs, in
that order, each block sorted by name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

GATE_KINDS = ("NOT", "BUF", "AND", "OR", "NAND", "NOR", "XOR", "XNOR", "MUX")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\]]*\Z")


class NetlistError(Exception):
    """Base class for structural netlist errors."""


class ParseError(NetlistError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class MultipleDriverError(NetlistError):
    def __init__(self, net: str):
        super().__init__(f"net {net} has multiple drivers")
        self.net = net


class UndrivenNetError(NetlistError):
    def __init__(self, net: str, where: str = ""):
        suffix = f" (used by {where})" if where else ""
        super().__init__(f"net {net} is not driven{suffix}")
        self.net = net


class CombinationalCycleError(NetlistError):
    def __init__(self, gates: list[str]):
        super().__init__("combinational cycle through gates: " + " -> ".join(gates))
        self.gates = gates


class MissingAssignmentError(NetlistError):
    def __init__(self, net: str):
        super().__init__(f"no value assigned for net {net}")
        self.net = net


@dataclass(frozen=True)
class Gate:
    name: str
    kind: str
    out: str
    ins: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise NetlistError(f"unknown gate kind {self.kind}")
        n = len(self.ins)
        if self.kind in ("NOT", "BUF") and n != 1:
            raise NetlistError(f"{self.kind} gate {self.name} needs exactly 1 input")
        if self.kind == "MUX" and n != 3:
            raise NetlistError(f"MUX gate {self.name} needs exactly 3 inputs (select, a, b)")
        if self.kind not in ("NOT", "BUF", "MUX") and n < 2:
            raise NetlistError(f"{self.kind} gate {self.name} needs at least 2 inputs")


@dataclass(frozen=True)
class FlipFlop:
    name: str
    q: str
    d: str
    clk: str
    rst: Optional[str] = None
    rst_val: int = 0
    en: Optional[str] = None


# A register state assigns one bit per flip-flop name.
BitState = dict


@dataclass(eq=False)
class Netlist:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    constants: dict[str, int]
    gates: tuple[Gate, ...]
    ffs: tuple[FlipFlop, ...]
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.inputs = tuple(self.inputs)
        self.outputs = tuple(self.outputs)
        self.gates = tuple(self.gates)
        self.ffs = tuple(self.ffs)
        self._validate()

    # -- structure ---------------------------------------------------------

    def _validate(self):
        driver: dict[str, object] = {}

        def claim(net, who):
            if net in driver:
                raise MultipleDriverError(net)
            driver[net] = who

        for n in self.inputs:
            claim(n, "input")
        for n in self.constants:
            claim(n, "const")
        for g in self.gates:
            claim(g.out, g)
        for f in self.ffs:
            claim(f.q, f)

        seen_names: set[str] = set()
        for g in self.gates:
            if g.name in seen_names:
                raise NetlistError(f"duplicate gate/ff name {g.name}")
            seen_names.add(g.name)
            for n in g.ins:
                if n not in driver:
                    raise UndrivenNetError(n, f"gate {g.name}")
        for f in self.ffs:
            if f.name in seen_names:
                raise NetlistError(f"duplicate gate/ff name {f.name}")
            seen_names.add(f.name)
            for n in (f.d, f.clk) + ((f.rst,) if f.rst else ()) + ((f.en,) if f.en else ()):
                if n not in driver:
                    raise UndrivenNetError(n, f"dff {f.name}")
        for n in self.outputs:
            if n not in driver:
                raise UndrivenNetError(n, "output")
        self._cache["driver"] = driver

    @property
    def driver(self) -> Mapping[str, object]:
        return self._cache["driver"]

    def gate_by_name(self, name: str) -> Gate:
        idx = self._cache.get("gate_idx")
        if idx is None:
            idx = {g.name: g for g in self.gates}
            self._cache["gate_idx"] = idx
        return idx[name]

    def ff_by_name(self, name: str) -> FlipFlop:
        idx = self._cache.get("ff_idx")
        if idx is None:
            idx = {f.name: f for f in self.ffs}
            self._cache["ff_idx"] = idx
        return idx[name]

    def ff_by_q(self, q: str) -> FlipFlop:
        idx = self._cache.get("ffq_idx")
        if idx is None:
            idx = {f.q: f for f in self.ffs}
            self._cache["ffq_idx"] = idx
        return idx[q]

    def structural_key(self):
        # Declaration order of blocks is presentational; compare canonically.
        return (
            self.name,
            tuple(sorted(self.inputs)),
            tuple(sorted(self.outputs)),
            tuple(sorted(self.constants.items())),
            tuple(sorted(self.gates, key=lambda g: g.name)),
            tuple(sorted(self.ffs, key=lambda f: f.name)),
        )

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return self.structural_key() == other.structural_key()

    def __hash__(self):
        return hash(self.structural_key())


# -- parsing / serialization ------------------------------------------------


def _check_token(tok: str, lineno: int) -> str:
    if not _NAME_RE.match(tok):
        raise ParseError(lineno, f"bad identifier {tok!r}")
    return tok


def parse(text: str, name: str = "netlist") -> Netlist:
    """Parse the line format into a Netlist, validating all invariants."""
    inputs: list[str] = []
    outputs: list[str] = []
    constants: dict[str, int] = {}
    gates: list[Gate] = []
    ffs: list[FlipFlop] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        stmt = toks[0]
        try:
            if stmt == "input":
                if len(toks) != 2:
                    raise ParseError(lineno, "input takes one net")
                inputs.append(_check_token(toks[1], lineno))
            elif stmt == "output":
                if len(toks) != 2:
                    raise ParseError(lineno, "output takes one net")
                outputs.append(_check_token(toks[1], lineno))
            elif stmt == "const":
                if len(toks) != 3 or toks[2] not in ("0", "1"):
                    raise ParseError(lineno, "const takes a net and 0|1")
                net = _check_token(toks[1], lineno)
                if net in constants:
                    raise MultipleDriverError(net)
                constants[net] = int(toks[2])
            elif stmt == "gate":
                if len(toks) < 5:
                    raise ParseError(lineno, "gate takes KIND name out in...")
                kind = toks[1]
                if kind not in GATE_KINDS:
                    raise ParseError(lineno, f"unknown gate kind {kind}")
                gname = _check_token(toks[2], lineno)
                out = _check_token(toks[3], lineno)
                ins = tuple(_check_token(t, lineno) for t in toks[4:])
                gates.append(Gate(gname, kind, out, ins))
            elif stmt == "dff":
                if len(toks) < 2:
                    raise ParseError(lineno, "dff takes a name and pin assignments")
                fname = _check_token(toks[1], lineno)
                pins: dict[str, str] = {}
                for t in toks[2:]:
                    if "=" not in t:
                        raise ParseError(lineno, f"bad dff pin {t!r}")
                    key, val = t.split("=", 1)
                    if key not in ("q", "d", "clk", "rst", "rstval", "en"):
                        raise ParseError(lineno, f"unknown dff pin {key}")
                    if key in pins:
                        raise ParseError(lineno, f"duplicate dff pin {key}")
                    pins[key] = val
                for req in ("q", "d", "clk"):
                    if req not in pins:
                        raise ParseError(lineno, f"dff missing {req}=")
                rst = pins.get("rst")
                if "rstval" in pins and rst is None:
                    raise ParseError(lineno, "rstval given without rst")
                rst_val = 0
                if "rstval" in pins:
                    if pins["rstval"] not in ("0", "1"):
                        raise ParseError(lineno, "rstval must be 0|1")
                    rst_val = int(pins["rstval"])
                for key in ("q", "d", "clk", "rst", "en"):
                    if key in pins:
                        _check_token(pins[key], lineno)
                ffs.append(
                    FlipFlop(
                        fname,
                        q=pins["q"],
                        d=pins["d"],
                        clk=pins["clk"],
                        rst=rst,
                        rst_val=rst_val,
                        en=pins.get("en"),
                    )
                )
            else:
                raise ParseError(lineno, f"unknown statement {stmt!r}")
        except NetlistError:
            raise
    return Netlist(name, tuple(inputs), tuple(outputs), constants, tuple(gates), tuple(ffs))


def serialize(nl: Netlist) -> str:
    """Canonical text form: blocks in fixed order, each sorted by name."""
    lines: list[str] = []
    for n in sorted(nl.inputs):
        lines.append(f"input {n}")
    for n in sorted(nl.constants):
        lines.append(f"const {n} {nl.constants[n]}")
    for g in sorted(nl.gates, key=lambda g: g.name):
        lines.append(f"gate {g.kind} {g.name} {g.out} " + " ".join(g.ins))
    for f in sorted(nl.ffs, key=lambda f: f.name):
        parts = [f"dff {f.name}", f"q={f.q}", f"d={f.d}", f"clk={f.clk}"]
        if f.rst is not None:
            parts.append(f"rst={f.rst}")
            parts.append(f"rstval={f.rst_val}")
        if f.en is not None:
            parts.append(f"en={f.en}")
        lines.append(" ".join(parts))
    for n in sorted(nl.outputs):
        lines.append(f"output {n}")
    return "\n".join(lines) + "\n"


# -- simulation --------------------------------------------------------------


def _gate_fn(kind: str, vals: list[int]) -> int:
    if kind == "NOT":
        return 1 - vals[0]
    if kind == "BUF":
        return vals[0]
    if kind == "AND":
        return 1 if all(vals) else 0
    if kind == "OR":
        return 1 if any(vals) else 0
    if kind == "NAND":
        return 0 if all(vals) else 1
    if kind == "NOR":
        return 0 if any(vals) else 1
    if kind == "XOR":
        acc = 0
        for v in vals:
            acc ^= v
        return acc
    if kind == "XNOR":
        acc = 0
        for v in vals:
            acc ^= v
        return 1 - acc
    if kind == "MUX":
        return vals[1] if vals[0] == 0 else vals[2]
    raise NetlistError(f"unknown gate kind {kind}")


def topo_gates(nl: Netlist) -> list[Gate]:
    """Gates in a topological order; raises on combinational cycles."""
    cached = nl._cache.get("topo")
    if cached is not None:
        return cached

    produced_by = {g.out: g for g in nl.gates}
    indeg = {}
    consumers: dict[str, list[Gate]] = {}
    for g in nl.gates:
        deg = 0
        for n in g.ins:
            if n in produced_by:
                deg += 1
                consumers.setdefault(n, []).append(g)
        indeg[g.name] = deg
    ready = [g for g in nl.gates if indeg[g.name] == 0]
    order: list[Gate] = []
    i = 0
    while i < len(ready):
        g = ready[i]
        i += 1
        order.append(g)
        for h in consumers.get(g.out, ()):
            indeg[h.name] -= 1
            if indeg[h.name] == 0:
                ready.append(h)
    if len(order) != len(nl.gates):
        leftover = {g.name: g for g in nl.gates if indeg[g.name] > 0}
        cycle = _find_cycle(leftover, produced_by)
        raise CombinationalCycleError(cycle)
    nl._cache["topo"] = order
    return order


def _find_cycle(leftover: dict[str, Gate], produced_by: dict[str, Gate]) -> list[str]:
    # Walk within the leftover gates until a gate repeats; return the loop.
    start = next(iter(leftover.values()))
    path: list[str] = []
    seen: dict[str, int] = {}
    g = start
    while g.name not in seen:
        seen[g.name] = len(path)
        path.append(g.name)
        nxt = None
        for n in g.ins:
            src = produced_by.get(n)
            if src is not None and src.name in leftover:
                nxt = src
                break
        if nxt is None:
            return path
        g = nxt
    return path[seen[g.name]:]


def eval_comb(nl: Netlist, assignment: Mapping[str, int]) -> dict[str, int]:
    """Evaluate all nets given values for primary inputs and FF q-nets.

    Returns a complete net -> bit map.  Evaluation follows one topological
    order; any other order yields identical values.
    """
    values: dict[str, int] = dict(nl.constants)
    for n in nl.inputs:
        if n not in assignment:
            raise MissingAssignmentError(n)
        values[n] = assignment[n] & 1
    for f in nl.ffs:
        if f.q not in assignment:
            raise MissingAssignmentError(f.q)
        values[f.q] = assignment[f.q] & 1
    for g in topo_gates(nl):
        try:
            vals = [values[n] for n in g.ins]
        except KeyError as e:  # pragma: no cover - guarded by validation
            raise MissingAssignmentError(str(e.args[0]))
        values[g.out] = _gate_fn(g.kind, vals)
    return values


def reset_state(nl: Netlist) -> BitState:
    """State after an asserted reset: rst_val for resettable FFs, 0 otherwise."""
    return {f.name: (f.rst_val if f.rst is not None else 0) for f in nl.ffs}


def step(
    nl: Netlist,
    state: Mapping[str, int],
    inputs: Mapping[str, int],
    reset_asserted: bool = False,
) -> BitState:
    """One synchronous step: returns the next flip-flop state.

    Reset dominates for resettable FFs; an enable evaluating to 0 holds the
    previous bit; otherwise the FF captures its d input.
    """
    assignment = dict(inputs)
    for f in nl.ffs:
        assignment[f.q] = state[f.name] & 1
    values = eval_comb(nl, assignment)
    nxt: BitState = {}
    for f in nl.ffs:
        if reset_asserted and f.rst is not None:
            nxt[f.name] = f.rst_val
        elif f.en is not None and values[f.en] == 0:
            nxt[f.name] = state[f.name] & 1
        else:
            nxt[f.name] = values[f.d]
    return nxt


def run_trace(
    nl: Netlist,
    input_trace: Iterable[Mapping[str, int]],
    start: Optional[BitState] = None,
) -> list[BitState]:
    """Apply a trace of input vectors; returns the state sequence incl. start."""
    state = dict(start) if start is not None else reset_state(nl)
    states = [dict(state)]
    for vec in input_trace:
        state = step(nl, state, vec)
        states.append(dict(state))
    return states
