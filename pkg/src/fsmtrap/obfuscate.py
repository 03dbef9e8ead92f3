"""Defensive transforms: state/counter bit replication, feedback-path removal
for one-hot and binary encodings, and decoy-FSM derivation, integration, and
tuning.

Every transform preserves behavior at its declared interface: replication up
to projection onto the original bits, one-hot rewiring exactly, dummy
transitions with the obfuscation input frozen to 0, and decoy integration on
all original outputs (the decoy only reaches them through a
constant-0-gated path).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .graph import FeedbackClass, classify_feedback, control_signals, has_high_fp
from .netlist import FlipFlop, Gate, Netlist
from .relic import RelicParams, select_scc_by_z, zscores
from .synth import (
    Counter,
    DatapathSpec,
    FsmSpec,
    GroundTruth,
    ONE_HOT,
    SpecError,
    SynthOptions,
    Transition,
    _bit_covers,
    _droppable_bits,
    _effective_covers,
    encode,
    synthesize,
    validate_fsm,
)


class ObfuscationError(Exception):
    pass


class ReplicationError(ObfuscationError):
    pass


class RewriteError(ObfuscationError):
    pass


class HoneypotError(ObfuscationError):
    pass


class IntegrationError(ObfuscationError):
    pass


# -- dissimilarity approach ----------------------------------------------------


@dataclass(frozen=True)
class ReplicationPlan:
    replicas_per_bit: int  # each original bit becomes (1 + r) flip-flops
    targets: tuple = ("state",)  # 'state' and/or counter names
    allow_one_hot: bool = False


def replicate_state_bits(fsm: FsmSpec, plan) -> FsmSpec:
    """Repeat every state bit (1 + r) times in place, as explicit codes.

    Transitions are untouched; synthesized without re-encoding or sharing,
    each replica gets a structurally identical private cone.
    """
    r = plan.replicas_per_bit if isinstance(plan, ReplicationPlan) else int(plan)
    allow_one_hot = plan.allow_one_hot if isinstance(plan, ReplicationPlan) else False
    if r < 1:
        raise ReplicationError("replica count must be >= 1")
    if fsm.encoding == ONE_HOT and not allow_one_hot:
        raise ReplicationError(
            "replicating a one-hot encoding must be explicitly allowed"
        )
    codes = encode(fsm)
    new_codes = {
        s: "".join(ch * (1 + r) for ch in code) for s, code in codes.items()
    }
    return replace(fsm, encoding=tuple((s, new_codes[s]) for s in fsm.states))


def replicate_counter(dp: DatapathSpec, counter: str, plan) -> DatapathSpec:
    """Mark a counter for replicated synthesis: the register widens to
    width*(1+r) and each step increments the widened value, then rewrites any
    replica group left in the broken-carry pattern to a uniform value.

    Valid while the counter does not wrap (callers bound cycle counts or
    request a saturation guard at the benchmark level).
    """
    r = plan.replicas_per_bit if isinstance(plan, ReplicationPlan) else int(plan)
    if r < 1:
        raise ReplicationError("replica count must be >= 1")
    found = False
    counters = []
    for c in dp.counters:
        if c.name == counter:
            if c.direction not in ("up", "down"):
                raise ReplicationError(f"counter {counter} has no direction")
            counters.append(replace(c, replicas=r))
            found = True
        else:
            counters.append(c)
    if not found:
        raise ReplicationError(f"no counter named {counter}")
    return replace(dp, counters=tuple(counters))


# -- feedback-path approach ------------------------------------------------------


@dataclass
class RewriteReport:
    treated_ff: str
    removed_edges: tuple = ()  # (gate name or 'd-pin', input position) use sites
    replacement_net: Optional[str] = None
    added_transitions: int = 0
    extended_encoding: bool = False
    noop: bool = False
    fp_before: Optional[FeedbackClass] = None
    fp_after: Optional[FeedbackClass] = None


def _cone_gates(nl: Netlist, net: str) -> set:
    """Names of gates in the combinational fan-in of a net."""
    seen: set = set()
    stack = [net]
    while stack:
        n = stack.pop()
        drv = nl.driver[n]
        if drv in ("input", "const") or hasattr(drv, "q"):
            continue
        if drv.name in seen:
            continue
        seen.add(drv.name)
        stack.extend(drv.ins)
    return seen


def rewrite_ra(nl: Netlist, sffs, target: str) -> tuple[Netlist, RewriteReport]:
    """Remove the high-strength feedback path of a one-hot state flip-flop.

    Inside the target's own input cone, every use of its Q is rewired to an
    indicator that is 1 exactly when all other state flip-flops are 0 -- in
    reachable one-hot states the two signals agree, so the state transition
    graph is unchanged.
    """
    sffs = sorted(set(sffs))
    if target not in sffs:
        raise RewriteError(f"target {target} is not among the given state FFs")
    for s in sffs:
        try:
            nl.ff_by_name(s)
        except KeyError:
            raise RewriteError(f"unknown state flip-flop {s}")
    one_hot_bits = sum(nl.ff_by_name(s).rst_val for s in sffs if nl.ff_by_name(s).rst is not None)
    if one_hot_bits != 1:
        raise RewriteError("reset state is not one-hot over the given state FFs")
    if not has_high_fp(nl, target):
        raise RewriteError(f"{target} has no high-strength feedback path to remove")

    ff = nl.ff_by_name(target)
    cone = _cone_gates(nl, ff.d)

    existing = {g.name for g in nl.gates} | {f.name for f in nl.ffs}

    def fresh(base: str) -> str:
        name = base
        i = 0
        while name in existing:
            name = f"{base}_{i}"
            i += 1
        existing.add(name)
        return name

    new_gates: list[Gate] = []
    not_nets = []
    for other in sffs:
        if other == target:
            continue
        gname = fresh(f"ra_{target}_not_{other}")
        net = fresh(f"{gname}_o")
        new_gates.append(Gate(gname, "NOT", net, (nl.ff_by_name(other).q,)))
        not_nets.append(net)
    ind_name = fresh(f"ra_{target}_ind")
    ind_net = fresh(f"{ind_name}_o")
    if len(not_nets) == 1:
        new_gates.append(Gate(ind_name, "BUF", ind_net, (not_nets[0],)))
    else:
        new_gates.append(Gate(ind_name, "AND", ind_net, tuple(not_nets)))

    removed = []
    rebuilt: list[Gate] = []
    for g in nl.gates:
        if g.name in cone and ff.q in g.ins:
            ins = tuple(ind_net if n == ff.q else n for n in g.ins)
            for pos, n in enumerate(g.ins):
                if n == ff.q:
                    removed.append((g.name, pos))
            rebuilt.append(Gate(g.name, g.kind, g.out, ins))
        else:
            rebuilt.append(g)
    ffs = []
    for f in nl.ffs:
        if f.name == target and f.d == ff.q:
            removed.append(("d-pin", 0))
            ffs.append(replace(f, d=ind_net))
        else:
            ffs.append(f)
    if not removed:
        raise RewriteError(f"{target} has no uses of its own Q inside its cone")

    out = Netlist(
        name=nl.name,
        inputs=nl.inputs,
        outputs=nl.outputs,
        constants=dict(nl.constants),
        gates=tuple(rebuilt) + tuple(new_gates),
        ffs=tuple(ffs),
    )
    report = RewriteReport(
        treated_ff=target,
        removed_edges=tuple(removed),
        replacement_net=ind_net,
        fp_before=FeedbackClass.HIGH,
        fp_after=classify_feedback(out, target, set(sffs)),
    )
    return out, report


def _fresh_input_name(fsm: FsmSpec, base: str = "o") -> str:
    name = base
    i = 0
    while name in fsm.inputs:
        name = f"{base}{i}"
        i += 1
    return name


def rewrite_rb(fsm: FsmSpec, target_bit: int) -> tuple[FsmSpec, RewriteReport]:
    """Make one state bit's next value independent of its current value by
    adding dummy transitions under a new obfuscation input.

    Every used code gets a partner state differing only in the target bit;
    partners mirror the original transitions (and fall back to the partnered
    state where the original would hold), and the obfuscation input jumps
    between partners.  If two used codes differ only in the target bit, one
    extra encoding bit (a copy of the target bit) is appended first.
    """
    validate_fsm(fsm)
    if fsm.encoding == ONE_HOT:
        raise RewriteError("dummy-transition rewrite applies to binary/explicit encodings")
    codes = encode(fsm)
    width = len(next(iter(codes.values())))
    if not 0 <= target_bit < width:
        raise RewriteError(f"target bit {target_bit} out of range for width {width}")

    eff, unmatched = _effective_covers(fsm)
    pos = _bit_covers(fsm, codes, eff, unmatched)
    if _droppable_bits(fsm, codes, pos)[target_bit]:
        report = RewriteReport(treated_ff=f"st{target_bit}", noop=True)
        report.fp_before = _fsm_bit_fp(fsm, None, target_bit)
        report.fp_after = report.fp_before
        return fsm, report

    extended = False
    if any(
        codes[a] == codes[b][:target_bit] + _flip(codes[b][target_bit]) + codes[b][target_bit + 1:]
        for a in fsm.states
        for b in fsm.states
        if a != b
    ):
        # Restore the partner precondition: append a copy of the target bit.
        codes = {s: c + c[target_bit] for s, c in codes.items()}
        extended = True

    def partner_code(code: str) -> str:
        return code[:target_bit] + _flip(code[target_bit]) + code[target_bit + 1:]

    by_code = {c: s for s, c in codes.items()}
    for s in fsm.states:
        if partner_code(codes[s]) in by_code:
            raise RewriteError(
                "partner codes collide even after extending the encoding"
            )

    o = _fresh_input_name(fsm)
    inputs = fsm.inputs + (o,)
    dummy_of = {s: f"{s}__rb" for s in fsm.states}
    new_codes = dict(codes)
    for s in fsm.states:
        new_codes[dummy_of[s]] = partner_code(codes[s])

    moore = fsm.moore_dict()
    new_moore = dict(moore) if moore is not None else None
    if new_moore is not None:
        for s in fsm.states:
            new_moore[dummy_of[s]] = moore[s]

    transitions: list[Transition] = []
    added = 0
    by_state: dict[str, list[Transition]] = {s: [] for s in fsm.states}
    for t in fsm.transitions:
        by_state[t.src].append(t)
    for s in fsm.states:
        for t in by_state[s]:
            g = t.guard_dict()
            g[o] = 0
            transitions.append(Transition.make(s, g, t.dst, inputs))
        transitions.append(Transition.make(s, {o: 1}, dummy_of[s], inputs))
        added += 1
        d = dummy_of[s]
        for cube, dst in eff[s]:
            g = dict(cube)
            g[o] = 0
            transitions.append(Transition.make(d, g, dst, inputs))
            added += 1
        for cube in unmatched[s]:
            g = dict(cube)
            g[o] = 0
            transitions.append(Transition.make(d, g, s, inputs))
            added += 1
        transitions.append(Transition.make(d, {o: 1}, d, inputs))
        added += 1

    states = fsm.states + tuple(dummy_of[s] for s in fsm.states)
    out = FsmSpec(
        name=fsm.name,
        states=states,
        encoding=tuple((s, new_codes[s]) for s in states),
        inputs=inputs,
        reset_state=fsm.reset_state,
        transitions=tuple(transitions),
        moore_outputs=tuple((s, new_moore[s]) for s in states) if new_moore else None,
    )
    validate_fsm(out)
    report = RewriteReport(
        treated_ff=f"st{target_bit}",
        added_transitions=added,
        extended_encoding=extended,
        fp_before=_fsm_bit_fp(fsm, None, target_bit),
        fp_after=_fsm_bit_fp(out, None, target_bit),
    )
    return out, report


def _flip(ch: str) -> str:
    return "1" if ch == "0" else "0"


def _fsm_bit_fp(fsm: FsmSpec, dp, bit: int) -> FeedbackClass:
    """Feedback class of one state bit after a bare synthesis of the FSM."""
    nl, gt = synthesize(fsm, dp, SynthOptions(name_prefix="chk"))
    return classify_feedback(nl, f"chk_st{bit}", gt.sffs)


# -- honeypots -------------------------------------------------------------------


@dataclass(frozen=True)
class HoneypotParams:
    mutation_seed: int = 0
    n_transition_mutations: int = 2
    n_output_mutations: int = 0
    input_map: tuple = ()  # ordered (honeypot input, design input) pairs; empty -> auto
    attach_mode: str = "never-activated-or"  # or standalone-marker
    prefix: str = "hp"


def derive_honeypot(fsm: FsmSpec, p: HoneypotParams) -> FsmSpec:
    """Seeded copy-and-mutate: redirect transition destinations and flip
    output bits; candidates with unreachable states or conflicting guards are
    re-rolled deterministically."""
    validate_fsm(fsm)
    if p.n_transition_mutations > len(fsm.transitions):
        raise HoneypotError("mutation budget exceeds the transition count")
    if p.n_output_mutations and fsm.moore_outputs is None:
        raise HoneypotError("output mutations need declared outputs")
    for attempt in range(100):
        rng = random.Random(p.mutation_seed * 1009 + attempt)
        trans = [Transition(t.src, t.guard, t.dst) for t in fsm.transitions]
        if p.n_transition_mutations:
            for idx in sorted(rng.sample(range(len(trans)), p.n_transition_mutations)):
                t = trans[idx]
                choices = [s for s in fsm.states if s != t.dst]
                if not choices:
                    continue
                trans[idx] = Transition(t.src, t.guard, rng.choice(choices))
        moore = fsm.moore_dict()
        if p.n_output_mutations and moore is not None:
            width = len(next(iter(moore.values())))
            cells = [(s, j) for s in fsm.states for j in range(width)]
            for s, j in rng.sample(cells, min(p.n_output_mutations, len(cells))):
                bits = list(moore[s])
                bits[j] = _flip(bits[j])
                moore[s] = "".join(bits)
        candidate = replace(
            fsm,
            transitions=tuple(trans),
            moore_outputs=tuple((s, moore[s]) for s in fsm.states) if moore else None,
        )
        try:
            validate_fsm(candidate)
            _effective_covers(candidate)  # rejects newly ambiguous guards
        except SpecError:
            continue
        if _all_states_reachable(candidate):
            return candidate
    raise HoneypotError("no valid honeypot variant found after 100 re-rolls")


def _all_states_reachable(fsm: FsmSpec) -> bool:
    succ: dict[str, set] = {s: set() for s in fsm.states}
    for t in fsm.transitions:
        succ[t.src].add(t.dst)
    seen = {fsm.reset_state}
    queue = [fsm.reset_state]
    while queue:
        s = queue.pop(0)
        for d in succ[s]:
            if d not in seen:
                seen.add(d)
                queue.append(d)
    return seen == set(fsm.states)


def default_input_map(design: Netlist, hp: Netlist) -> tuple:
    """clk->clk, rst->rst, remaining decoy inputs cycle through design inputs."""
    pool = [n for n in design.inputs if n not in ("clk", "rst")]
    mapping = []
    i = 0
    for n in hp.inputs:
        if n == "clk" or n == "rst":
            mapping.append((n, n))
        else:
            if not pool:
                raise IntegrationError("design has no inputs to feed the decoy")
            mapping.append((n, pool[i % len(pool)]))
            i += 1
    return tuple(mapping)


def integrate_honeypot(
    nl: Netlist, hp: Netlist, p: HoneypotParams
) -> tuple[Netlist, frozenset]:
    """Instantiate a decoy netlist inside a design.

    Decoy inputs are fed from existing design inputs (clock and reset from the
    design's own).  In never-activated-or mode each decoy output is ORed into
    a control-adjacent site (flip-flop enable, MUX select, or an output port)
    gated by a constant-0 net built from a two-gate chain, so the design
    function is unchanged while the decoy acquires live-looking fanout.
    """
    if not hp.ffs:
        raise IntegrationError("decoy netlist has no flip-flops")
    if p.attach_mode not in ("never-activated-or", "standalone-marker"):
        raise IntegrationError(f"unknown attach mode {p.attach_mode}")
    input_map = dict(p.input_map) if p.input_map else dict(default_input_map(nl, hp))
    for n in hp.inputs:
        if n not in input_map:
            raise IntegrationError(f"input map misses decoy input {n}")
        if input_map[n] not in nl.inputs:
            raise IntegrationError(
                f"decoy input {n} maps to {input_map[n]}, not a design input"
            )

    pref = p.prefix

    def rename(net: str) -> str:
        if net in input_map:
            return input_map[net]
        return f"{pref}_{net}"

    taken = (
        set(nl.inputs)
        | set(nl.constants)
        | {g.out for g in nl.gates}
        | {f.q for f in nl.ffs}
        | {g.name for g in nl.gates}
        | {f.name for f in nl.ffs}
    )
    gates = list(nl.gates)
    ffs = list(nl.ffs)
    constants = dict(nl.constants)
    hp_ffs = []
    for net, val in hp.constants.items():
        new = rename(net)
        if new in taken:
            raise IntegrationError(f"name collision on {new}")
        constants[new] = val
    for g in hp.gates:
        name = f"{pref}_{g.name}"
        out = rename(g.out)
        if name in taken or out in taken:
            raise IntegrationError(f"name collision on {name}/{out}")
        gates.append(Gate(name, g.kind, out, tuple(rename(n) for n in g.ins)))
    for f in hp.ffs:
        name = f"{pref}_{f.name}"
        q = rename(f.q)
        if name in taken or q in taken:
            raise IntegrationError(f"name collision on {name}/{q}")
        ffs.append(
            FlipFlop(
                name,
                q=q,
                d=rename(f.d),
                clk=rename(f.clk),
                rst=rename(f.rst) if f.rst is not None else None,
                rst_val=f.rst_val,
                en=rename(f.en) if f.en is not None else None,
            )
        )
        hp_ffs.append(name)

    outputs = list(nl.outputs)
    hp_outs = [rename(n) for n in hp.outputs]

    if p.attach_mode == "standalone-marker":
        for i, h in enumerate(hp_outs):
            gates.append(Gate(f"{pref}_marker_{i}", "BUF", f"{pref}_dummy_contact_{i}", (h,)))
    elif hp_outs:
        # Constant-0 through a two-gate chain, so the gating fan-in looks live.
        zsrc = next((n for n in nl.inputs if n not in ("clk", "rst")), nl.inputs[0])
        zn = Gate(f"{pref}_zn", "NOT", f"{pref}_zn_o", (zsrc,))
        zero = Gate(f"{pref}_zero", "AND", f"{pref}_zero_o", (zsrc, zn.out))
        gates.extend([zn, zero])

        # Control-adjacent sites first; output ports as a fallback.
        sites: list[tuple] = []
        for fi, f in enumerate(ffs):
            if f.en is not None and not f.name.startswith(f"{pref}_"):
                sites.append(("en", fi))
        for gi, g in enumerate(gates):
            if g.kind == "MUX" and not g.name.startswith(f"{pref}_"):
                sites.append(("mux", gi))
        if not sites:
            sites = [("out", i) for i in range(len(outputs))]
        if not sites:
            raise IntegrationError("no attachment site available")

        for i, h in enumerate(hp_outs):
            gated = Gate(f"{pref}_gate_{i}", "AND", f"{pref}_gate_{i}_o", (h, zero.out))
            gates.append(gated)
            kind, idx = sites[i % len(sites)]
            if kind == "en":
                f = ffs[idx]
                mix = Gate(f"{pref}_mix_{i}", "OR", f"{pref}_mix_{i}_o", (f.en, gated.out))
                gates.append(mix)
                ffs[idx] = replace(f, en=mix.out)
            elif kind == "mux":
                g = gates[idx]
                mix = Gate(f"{pref}_mix_{i}", "OR", f"{pref}_mix_{i}_o", (g.ins[0], gated.out))
                gates.append(mix)
                gates[idx] = Gate(g.name, g.kind, g.out, (mix.out,) + g.ins[1:])
            else:
                mix = Gate(f"{pref}_mix_{i}", "OR", f"{pref}_mix_{i}_o", (outputs[idx], gated.out))
                gates.append(mix)
                outputs[idx] = mix.out

    merged = Netlist(
        name=nl.name,
        inputs=nl.inputs,
        outputs=tuple(outputs),
        constants=constants,
        gates=tuple(gates),
        ffs=tuple(ffs),
    )
    return merged, frozenset(hp_ffs)


def gt_with_honeypots(gt: GroundTruth, hp_ffs) -> GroundTruth:
    return replace(gt, honeypots=frozenset(hp_ffs))


@dataclass
class TuneIteration:
    seed: int
    hp_scc_max: float
    fsm_scc_max: float
    selected_is_hp: bool
    success: bool


@dataclass
class TuneReport:
    found: bool
    iterations: list
    params: HoneypotParams
    hp_fsm: Optional[FsmSpec] = None
    hp_netlist: Optional[Netlist] = None
    integrated: Optional[Netlist] = None
    hp_ffs: frozenset = frozenset()


def tune_honeypot(
    design_nl: Netlist,
    design_sffs,
    base_hp: FsmSpec,
    p: HoneypotParams,
    relic_params: RelicParams = RelicParams(),
    max_iters: int = 10,
    require_selection: bool = False,
) -> TuneReport:
    """Iterate seeded decoy mutations until the decoy component out-scores the
    design's state component (optionally: wins the selection rule outright).

    Returns the first success, else the best candidate with found=False.
    """
    if max_iters < 1:
        raise HoneypotError("max_iters must be >= 1")
    from .graph import build_ff_graph, tarjan_scc

    hp_opts = SynthOptions(name_prefix="fsm")
    iterations: list[TuneIteration] = []
    best: Optional[TuneReport] = None
    best_margin = float("-inf")
    for i in range(max_iters):
        params_i = replace(p, mutation_seed=p.mutation_seed + i)
        hp_fsm = derive_honeypot(base_hp, params_i)
        hp_nl, _ = synthesize(hp_fsm, None, hp_opts)
        integrated, hp_ffs = integrate_honeypot(design_nl, hp_nl, params_i)
        table = zscores(integrated, relic_params)
        report = tarjan_scc(build_ff_graph(integrated))

        def scc_max(members_of) -> float:
            best_i, overlap = None, 0
            for j, members in enumerate(report.sccs):
                c = len(set(members) & set(members_of))
                if c > overlap:
                    best_i, overlap = j, c
            if best_i is None:
                return max((table.scores[f] for f in members_of), default=float("-inf"))
            return max(table.scores[f] for f in report.sccs[best_i])

        hp_max = scc_max(hp_ffs)
        fsm_max = scc_max(design_sffs)
        _, selected, _, _ = select_scc_by_z(table.scores, report.sccs)
        selected_is_hp = bool(selected & hp_ffs)
        success = hp_max > fsm_max and (selected_is_hp or not require_selection)
        iterations.append(
            TuneIteration(params_i.mutation_seed, hp_max, fsm_max, selected_is_hp, success)
        )
        candidate = TuneReport(
            found=success,
            iterations=iterations,
            params=params_i,
            hp_fsm=hp_fsm,
            hp_netlist=hp_nl,
            integrated=integrated,
            hp_ffs=hp_ffs,
        )
        if success:
            return candidate
        margin = hp_max - fsm_max
        if margin > best_margin:
            best_margin = margin
            best = candidate
    assert best is not None
    best.found = False
    return best


def tune_honeypot_for_design(
    fsm: FsmSpec,
    dp: Optional[DatapathSpec],
    opts: SynthOptions,
    base_hp: FsmSpec,
    p: HoneypotParams,
    relic_params: RelicParams = RelicParams(),
    max_iters: int = 10,
    require_selection: bool = False,
) -> TuneReport:
    """Tune against a design given as specs; synthesizes once, then delegates."""
    design_nl, gt = synthesize(fsm, dp, opts)
    return tune_honeypot(
        design_nl,
        gt.sffs,
        base_hp,
        p,
        relic_params=relic_params,
        max_iters=max_iters,
        require_selection=require_selection,
    )
