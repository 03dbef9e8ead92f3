"""Structural analyses over netlists: flip-flop dependency graphs, strongly
connected components, fan-in cones, feedback-path strength, and control-signal
influence.  Everything here is pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .netlist import Netlist

from itertools import product as _product


class FeedbackClass(Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"
    NONE = "none"


class AnalysisError(Exception):
    pass


def _net_support(nl: Netlist) -> dict:
    """For every net: (frozenset of FF names, frozenset of PIs) in its
    combinational fan-in; flip-flop q-nets terminate the traversal."""
    cached = nl._cache.get("support")
    if cached is not None:
        return cached
    from .netlist import topo_gates

    support: dict[str, tuple] = {}
    for n in nl.inputs:
        support[n] = (frozenset(), frozenset([n]))
    for n in nl.constants:
        support[n] = (frozenset(), frozenset())
    for f in nl.ffs:
        support[f.q] = (frozenset([f.name]), frozenset())
    for g in topo_gates(nl):
        ffs: set = set()
        pis: set = set()
        for src in g.ins:
            a, b = support[src]
            ffs |= a
            pis |= b
        support[g.out] = (frozenset(ffs), frozenset(pis))
    nl._cache["support"] = support
    return support


@dataclass
class FfGraph:
    """Flip-flop level dependency graph.

    ``comb[a]`` holds FFs b with a purely combinational path Q_a -> D_b;
    ``through[a]`` holds FFs reachable only by crossing other flip-flops.
    """

    nodes: tuple
    comb: dict
    through: dict

    def successors(self, ff: str, kinds: Sequence[str] = ("comb",)):
        out: set = set()
        if "comb" in kinds:
            out |= self.comb.get(ff, frozenset())
        if "through" in kinds:
            out |= self.through.get(ff, frozenset())
        return out


def build_ff_graph(nl: Netlist) -> FfGraph:
    cached = nl._cache.get("ff_graph")
    if cached is not None:
        return cached
    support = _net_support(nl)
    nodes = tuple(f.name for f in nl.ffs)
    comb: dict[str, frozenset] = {n: set() for n in nodes}
    for f in nl.ffs:
        srcs, _ = support[f.d]
        for s in srcs:
            comb[s].add(f.name)
    comb = {n: frozenset(v) for n, v in comb.items()}

    # through-ff edge a->b: a comb-path chain of length >= 2 (crosses a FF).
    through: dict[str, frozenset] = {}
    for a in nodes:
        frontier = set(comb[a])
        seen = set(frontier)
        reach2: set = set()
        while frontier:
            nxt: set = set()
            for m in frontier:
                for b in comb[m]:
                    reach2.add(b)
                    if b not in seen:
                        seen.add(b)
                        nxt.add(b)
            frontier = nxt
        through[a] = frozenset(reach2)
    g = FfGraph(nodes=nodes, comb=comb, through=through)
    nl._cache["ff_graph"] = g
    return g


@dataclass
class SccReport:
    sccs: list  # list of tuples of FF names, each sorted
    labels: dict = field(default_factory=dict)  # index -> fsm | fsm_hp | data
    ambiguous: bool = False

    def scc_of(self, ff: str) -> Optional[int]:
        for i, members in enumerate(self.sccs):
            if ff in members:
                return i
        return None

    def to_text(self) -> str:
        lines = []
        for i, members in enumerate(self.sccs):
            label = self.labels.get(i, "")
            head = f"scc {i}" + (f" {label}" if label else "")
            lines.append(head + " " + " ".join(members))
        return "\n".join(lines) + ("\n" if lines else "")


def tarjan_scc(
    g: FfGraph,
    edge_kinds: Sequence[str] = ("comb",),
    include_singletons: bool = False,
) -> SccReport:
    """Tarjan's algorithm, iterative; components ordered by smallest member."""
    index_of: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set = set()
    stack: list[str] = []
    counter = [0]
    comps: list[tuple] = []

    adj = {n: sorted(g.successors(n, edge_kinds)) for n in g.nodes}

    for root in g.nodes:
        if root in index_of:
            continue
        work = [(root, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                index_of[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            succs = adj[node]
            while pi < len(succs):
                nxt = succs[pi]
                pi += 1
                if nxt not in index_of:
                    work[-1] = (node, pi)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index_of[nxt])
            if advanced:
                continue
            work.pop()
            if low[node] == index_of[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                comps.append(tuple(sorted(comp)))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    if not include_singletons:
        comps = [c for c in comps if len(c) > 1]
    comps.sort(key=lambda c: c[0])
    return SccReport(sccs=comps)


def label_sccs(report: SccReport, sffs, honeypots=frozenset()) -> SccReport:
    """Label the component holding the most true SFFs as fsm, likewise fsm_hp;
    remaining multi-element components are data."""
    labels: dict[int, str] = {}
    ambiguous = False

    def pick(target) -> Optional[int]:
        nonlocal ambiguous
        best, best_count = None, 0
        counts = []
        for i, members in enumerate(report.sccs):
            c = len(set(members) & set(target))
            counts.append(c)
            if c > best_count:
                best, best_count = i, c
        if best is not None and counts.count(best_count) > 1:
            ambiguous = True
        return best

    fsm_i = pick(sffs) if sffs else None
    hp_i = pick(honeypots) if honeypots else None
    for i, members in enumerate(report.sccs):
        if i == fsm_i:
            labels[i] = "fsm"
        elif i == hp_i:
            labels[i] = "fsm_hp"
        elif len(members) > 1:
            labels[i] = "data"
    return SccReport(sccs=report.sccs, labels=labels, ambiguous=ambiguous)


def classify_feedback(
    nl: Netlist, ff: str, candidate_sffs=None
) -> FeedbackClass:
    """Strength of the strongest feedback path from a flip-flop to itself.

    High: a purely combinational Q->D self-path.  Medium: a self-path whose
    intermediate flip-flops all belong to ``candidate_sffs``.  Low: any
    self-path.  Distinguishing medium from low requires the candidate set.
    """
    g = build_ff_graph(nl)
    if ff not in g.comb:
        raise AnalysisError(f"unknown flip-flop {ff}")
    if ff in g.comb[ff]:
        return FeedbackClass.HIGH
    # Any cycle through ff at all?
    has_any = ff in g.through.get(ff, frozenset())
    if not has_any:
        return FeedbackClass.NONE
    if candidate_sffs is None:
        raise AnalysisError("medium/low classification requires a candidate SFF set")
    allowed = set(candidate_sffs)
    frontier = {m for m in g.comb[ff] if m in allowed}
    seen = set(frontier)
    while frontier:
        nxt = set()
        for m in frontier:
            if ff in g.comb[m]:
                return FeedbackClass.MEDIUM
            for b in g.comb[m]:
                if b in allowed and b not in seen:
                    seen.add(b)
                    nxt.add(b)
        frontier = nxt
    return FeedbackClass.LOW


def has_high_fp(nl: Netlist, ff: str) -> bool:
    g = build_ff_graph(nl)
    return ff in g.comb.get(ff, frozenset())


def has_any_fp(nl: Netlist, ff: str) -> bool:
    g = build_ff_graph(nl)
    return ff in g.comb.get(ff, frozenset()) or ff in g.through.get(ff, frozenset())


# -- fan-in cones -------------------------------------------------------------


@dataclass(frozen=True)
class ConeNode:
    kind: str  # gate kind, or PI / FF / CONST leaf
    net: str
    children: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class ConeTree:
    root: ConeNode
    depth_limit: int


def input_cone(nl: Netlist, root: str, depth_limit: int) -> ConeTree:
    """Depth-limited combinational fan-in tree.

    Expansion stops at primary inputs, FF q-nets, constants, or the depth
    limit; buffers are transparent and consume no depth.  Children are ordered
    by (kind, net) so structurally equal cones serialize identically.
    """

    def expand(net: str, depth: int) -> ConeNode:
        drv = nl.driver[net]
        if drv == "input":
            return ConeNode("PI", net)
        if drv == "const":
            return ConeNode("CONST", net)
        if hasattr(drv, "q"):
            return ConeNode("FF", net)
        if drv.kind == "BUF":
            return expand(drv.ins[0], depth)
        if depth <= 0:
            return ConeNode(drv.kind, net)
        children = [expand(n, depth - 1) for n in drv.ins]
        children.sort(key=lambda c: (c.kind, c.net))
        return ConeNode(drv.kind, net, tuple(children))

    if root not in nl.driver:
        raise AnalysisError(f"net {root} is not driven")
    return ConeTree(expand(root, depth_limit), depth_limit)


def control_signals(nl: Netlist) -> set:
    """MUX select nets plus flip-flop enable nets."""
    nets: set = set()
    for g in nl.gates:
        if g.kind == "MUX":
            nets.add(g.ins[0])
    for f in nl.ffs:
        if f.en is not None:
            nets.add(f.en)
    return nets


def influences(nl: Netlist, src_ff: str, dst_net: str) -> bool:
    """True iff Q of src_ff lies in the combinational fan-in of dst_net."""
    nl.ff_by_name(src_ff)  # raises KeyError for unknown FFs
    if dst_net not in nl.driver:
        raise AnalysisError(f"net {dst_net} is not driven")
    support = _net_support(nl)
    return src_ff in support[dst_net][0]


def influences_functional(nl: Netlist, src_ff: str, dst_net: str, max_vars: int = 10):
    """Exhaustive sensitivity check: does toggling Q_src ever change dst_net?

    Returns True/False, or None when the cone has more than ``max_vars`` free
    variables (callers fall back to the structural test).
    """
    from .netlist import eval_comb

    support = _net_support(nl)
    ffs, pis = support[dst_net]
    if src_ff not in ffs:
        return False
    others = sorted(ffs - {src_ff})
    free = others + sorted(pis)
    if len(free) > max_vars:
        return None
    q_of = {f.name: f.q for f in nl.ffs}
    base = {n: 0 for n in nl.inputs}
    base.update({f.q: 0 for f in nl.ffs})
    for bits in _product((0, 1), repeat=len(free)):
        assign = dict(base)
        for var, val in zip(free, bits):
            assign[q_of.get(var, var)] = val
        assign[q_of[src_ff]] = 0
        v0 = eval_comb(nl, assign)[dst_net]
        assign[q_of[src_ff]] = 1
        v1 = eval_comb(nl, assign)[dst_net]
        if v0 != v1:
            return True
    return False
