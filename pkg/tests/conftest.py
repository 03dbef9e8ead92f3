"""Shared generators for oracle-based tests: random acyclic netlists, random
digraphs, and random FSM specs, all seeded."""

from __future__ import annotations

import random

from fsmtrap.netlist import FlipFlop, Gate, Netlist
from fsmtrap.synth import make_fsm

KINDS_BY_ARITY = {
    1: ["NOT", "BUF"],
    2: ["AND", "OR", "NAND", "NOR", "XOR", "XNOR"],
}


def random_comb_netlist(seed: int, n_inputs: int = 5, n_gates: int = 50) -> Netlist:
    rng = random.Random(seed)
    inputs = [f"i{k}" for k in range(n_inputs)]
    nets = list(inputs)
    gates = []
    for k in range(n_gates):
        arity = rng.choice((1, 2, 2, 3))
        if arity == 1:
            kind = rng.choice(KINDS_BY_ARITY[1])
            ins = (rng.choice(nets),)
        elif arity == 3 and len(nets) >= 3 and rng.random() < 0.3:
            kind = "MUX"
            ins = tuple(rng.choice(nets) for _ in range(3))
        else:
            kind = rng.choice(KINDS_BY_ARITY[2])
            ins = tuple(rng.choice(nets) for _ in range(rng.choice((2, 2, 3))))
        out = f"n{k}"
        gates.append(Gate(f"g{k}", kind, out, ins))
        nets.append(out)
    outputs = [nets[-1]]
    return Netlist("rand", tuple(inputs), tuple(outputs), {}, tuple(gates), ())


def random_seq_netlist(seed: int, n_ffs: int = 6, n_gates: int = 30) -> Netlist:
    """Random netlist with flip-flops whose d nets tap the gate cloud."""
    rng = random.Random(seed)
    inputs = ["clk", "rst", "a", "b"]
    nets = ["a", "b"] + [f"f{k}_q" for k in range(n_ffs)]
    gates = []
    for k in range(n_gates):
        if rng.random() < 0.25:
            kind = rng.choice(KINDS_BY_ARITY[1])
            ins = (rng.choice(nets),)
        else:
            kind = rng.choice(KINDS_BY_ARITY[2])
            ins = tuple(rng.choice(nets) for _ in range(2))
        out = f"n{k}"
        gates.append(Gate(f"g{k}", kind, out, ins))
        nets.append(out)
    ffs = []
    for k in range(n_ffs):
        d = rng.choice(nets)
        ffs.append(FlipFlop(f"f{k}", q=f"f{k}_q", d=d, clk="clk", rst="rst", rst_val=0))
    return Netlist("randseq", tuple(inputs), (), {}, tuple(gates), tuple(ffs))


def random_fsm(seed: int, max_states: int = 8, max_inputs: int = 4):
    rng = random.Random(seed)
    k = rng.randint(2, max_states)
    m = rng.randint(1, max_inputs)
    states = [f"S{i}" for i in range(k)]
    inputs = [f"x{i}" for i in range(m)]
    transitions = []
    for s in states:
        var = rng.choice(inputs)
        n_out = rng.randint(0, 2)
        if n_out >= 1:
            transitions.append((s, {var: 1}, rng.choice(states)))
        if n_out == 2 and m > 1:
            other = rng.choice([x for x in inputs if x != var])
            transitions.append((s, {var: 0, other: 1}, rng.choice(states)))
    return make_fsm(f"r{seed}", states, inputs, states[0], transitions, encoding="binary")
