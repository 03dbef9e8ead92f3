"""State transition graph extraction and behavior-preservation checking.

Extraction is exhaustive: starting from the reset state it enumerates every
combination of the free inputs per reachable state, stepping the full
register file but projecting states onto the chosen state flip-flops.
Non-state registers ride along; if two runs reach the same projected state
with diverging projected successors, the offending registers are pulled into
the tracked set and extraction restarts (with a warning).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .batchsim import batch_step, compile_netlist
from .netlist import BitState, Netlist, reset_state


class StgError(Exception):
    pass


class InputBudgetError(StgError):
    pass


class ReplicaDisagreementError(StgError):
    pass


@dataclass
class Stg:
    sff_names: tuple
    input_names: tuple
    reset: str
    states: tuple  # discovery order; reset first
    edges: dict  # (src code, input bits string) -> dst code
    warnings: tuple = ()

    def successors(self, code: str) -> dict:
        n = len(self.input_names)
        return {
            vec: self.edges[(code, vec)]
            for vec in (format(i, f"0{n}b") for i in range(1 << n))
        } if n else {"": self.edges[(code, "")]}

    def to_text(self) -> str:
        lines = [f"state {s}" for s in self.states]
        for (src, vec), dst in sorted(self.edges.items()):
            lines.append(f"edge {src} {vec if vec else '-'} {dst}")
        return "\n".join(lines) + "\n"

    def to_dot(self) -> str:
        lines = ["digraph stg {"]
        for s in self.states:
            shape = "doublecircle" if s == self.reset else "circle"
            lines.append(f'  "{s}" [shape={shape}];')
        for (src, vec), dst in sorted(self.edges.items()):
            label = vec if vec else ""
            lines.append(f'  "{src}" -> "{dst}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def extract_stg(
    nl: Netlist,
    sffs: Sequence[str],
    reset: Optional[BitState] = None,
    free_inputs: Optional[Sequence[str]] = None,
    max_inputs: int = 12,
    frozen: Optional[Mapping[str, int]] = None,
) -> Stg:
    """Exhaustive reachable-state enumeration projected onto ``sffs``.

    ``free_inputs`` are enumerated exhaustively; all other primary inputs are
    held at ``frozen`` values (default 0).  Exact for a correct SFF set and
    reset state.
    """
    if free_inputs is None:
        free_inputs = [n for n in nl.inputs if n not in ("clk", "rst")]
    free_inputs = list(free_inputs)
    if len(free_inputs) > max_inputs:
        raise InputBudgetError(
            f"{len(free_inputs)} free inputs exceed the budget of {max_inputs}"
        )
    for n in free_inputs:
        if n not in nl.inputs:
            raise StgError(f"free input {n} is not a primary input")
    frozen = dict(frozen or {})

    if reset is None:
        reset = reset_state(nl)
    ff_names = [f.name for f in nl.ffs]
    if set(reset) != set(ff_names):
        raise StgError("reset state must cover exactly the netlist flip-flops")
    for f in nl.ffs:
        if f.rst is not None and reset[f.name] != f.rst_val:
            raise StgError(
                f"reset state for {f.name} contradicts its declared reset value"
            )
    for name in sffs:
        if name not in set(ff_names):
            raise StgError(f"unknown state flip-flop {name}")

    cn = compile_netlist(nl)
    n_free = len(free_inputs)
    n_vec = 1 << n_free
    pi_matrix = np.zeros((len(nl.inputs), n_vec), dtype=np.uint8)
    pi_pos = {n: i for i, n in enumerate(nl.inputs)}
    for n, val in frozen.items():
        if n not in pi_pos:
            raise StgError(f"frozen input {n} is not a primary input")
        pi_matrix[pi_pos[n], :] = val & 1
    vec_strings = [format(v, f"0{n_free}b") if n_free else "" for v in range(n_vec)]
    for v in range(n_vec):
        for i, n in enumerate(free_inputs):
            pi_matrix[pi_pos[n], v] = int(vec_strings[v][i])

    ff_pos = {n: i for i, n in enumerate(ff_names)}
    warnings: list[str] = []
    tracked = list(sffs)

    from .graph import _net_support

    support = _net_support(nl)

    for _round in range(5):
        proj_idx = [ff_pos[n] for n in tracked]
        reset_full = tuple(reset[n] & 1 for n in ff_names)
        # FFs that can influence the tracked next-state cones; others cannot
        # cause projected divergence and are ignored by the revisit check.
        influencers: set = set()
        for name in tracked:
            influencers |= support[nl.ff_by_name(name).d][0]
            en = nl.ff_by_name(name).en
            if en is not None:
                influencers |= support[en][0]

        def project(full: tuple) -> str:
            return "".join(str(full[i]) for i in proj_idx)

        def successors(full: tuple) -> list:
            nxt = batch_step(cn, np.array(full, dtype=np.uint8), pi_matrix)
            return [tuple(int(x) for x in nxt[:, v]) for v in range(n_vec)]

        rep: dict[str, tuple] = {}
        succ_of: dict[str, list] = {}
        order: list[str] = []
        edges: dict = {}
        offenders: set = set()

        queue = [reset_full]
        rep[project(reset_full)] = reset_full
        while queue:
            full = queue.pop(0)
            code = project(full)
            if code in succ_of:
                continue
            order.append(code)
            succs = successors(full)
            succ_of[code] = [project(s) for s in succs]
            for v, s_full in enumerate(succs):
                s_code = project(s_full)
                if s_code not in rep:
                    rep[s_code] = s_full
                    queue.append(s_full)
                elif rep[s_code] != s_full:
                    diff = {
                        n
                        for i, n in enumerate(ff_names)
                        if s_full[i] != rep[s_code][i] and n not in tracked
                    }
                    if diff & influencers:
                        # Same projected state via a different full state that
                        # feeds a tracked cone: compare one successor level.
                        alt = [project(s) for s in successors(s_full)]
                        canon = succ_of.get(s_code)
                        if canon is None:
                            canon = [project(s) for s in successors(rep[s_code])]
                        if alt != canon:
                            offenders |= diff & influencers
                edges[(code, vec_strings[v])] = s_code

        if not offenders:
            return Stg(
                sff_names=tuple(tracked),
                input_names=tuple(free_inputs),
                reset=project(reset_full),
                states=tuple(order),
                edges=edges,
                warnings=tuple(warnings),
            )
        extra = sorted(offenders)
        warnings.append(
            "projected nondeterminism; enlarging tracked set with " + ",".join(extra)
        )
        tracked = tracked + extra
    raise StgError("extraction failed to stabilize after enlarging the tracked set")


def stg_equivalent(
    a: Stg,
    b: Stg,
    bit_map: Mapping[str, str],
    frozen_inputs: Optional[Mapping[str, int]] = None,
) -> bool:
    """Reachable-subgraph equality of ``b`` projected onto ``a``'s state bits.

    ``bit_map`` sends every state FF of ``b`` to the FF of ``a`` it mirrors
    (replicas map to their original).  Inputs private to ``b`` must appear in
    ``frozen_inputs``; only edges agreeing with the frozen values are kept.
    Raises ReplicaDisagreementError if replicas disagree in a reachable state.
    """
    frozen_inputs = dict(frozen_inputs or {})
    if set(bit_map) != set(b.sff_names):
        raise StgError("bit_map must cover exactly b's state flip-flops")
    if set(bit_map.values()) != set(a.sff_names):
        raise StgError("bit_map must cover all of a's state flip-flops")
    extra = [n for n in b.input_names if n not in a.input_names]
    missing = [n for n in a.input_names if n not in b.input_names]
    if missing:
        raise StgError(f"b lacks inputs of a: {missing}")
    for n in extra:
        if n not in frozen_inputs:
            raise StgError(f"input {n} private to b must be frozen")

    b_pos = {n: i for i, n in enumerate(b.sff_names)}
    groups = {a_ff: [b_pos[x] for x in b.sff_names if bit_map[x] == a_ff] for a_ff in a.sff_names}

    def project(code: str) -> str:
        out = []
        for a_ff in a.sff_names:
            vals = {code[i] for i in groups[a_ff]}
            if len(vals) != 1:
                raise ReplicaDisagreementError(
                    f"replicas of {a_ff} disagree in reachable state {code}"
                )
            out.append(vals.pop())
        return "".join(out)

    b_in_pos = {n: i for i, n in enumerate(b.input_names)}

    def vec_ok(vec: str) -> bool:
        return all(int(vec[b_in_pos[n]]) == (frozen_inputs[n] & 1) for n in extra)

    def shared_vec(vec: str) -> str:
        return "".join(vec[b_in_pos[n]] for n in a.input_names)

    by_src: dict[str, list] = {}
    for (src, vec), dst in b.edges.items():
        by_src.setdefault(src, []).append((vec, dst))

    # BFS over b restricted to frozen-consistent edges.
    proj_edges: dict = {}
    seen = {b.reset}
    queue = [b.reset]
    proj_states: set = set()
    while queue:
        code = queue.pop(0)
        proj_states.add(project(code))
        for vec, dst in by_src.get(code, ()):
            if not vec_ok(vec):
                continue
            key = (project(code), shared_vec(vec))
            pdst = project(dst)
            if key in proj_edges and proj_edges[key] != pdst:
                return False
            proj_edges[key] = pdst
            if dst not in seen:
                seen.add(dst)
                queue.append(dst)

    if project(b.reset) != a.reset:
        return False
    if proj_states != set(a.states):
        return False
    if proj_edges != a.edges:
        return False
    return True
