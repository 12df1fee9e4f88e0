"""Random control-system block diagrams and Mason's gain formula.

A diagram is a signal-flow graph: one input node, one output node, signal
taps, and summing junctions, connected by directed edges.  An edge carries a
transfer-function gain (or unity for plain wires) and a port sign; the sign is
part of the loop/path gain.  The main path runs left to right with recorded
layout coordinates; feedback paths close from later taps onto earlier
junctions, feedforward paths jump ahead from earlier taps to later junctions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .symexpr import (
    RationalFunc,
    eval_numeric,
    format_canonical,
    parse_rational,
    simplify,
)

INPUT_ID = "R"
OUTPUT_ID = "C"


class BlockdiagError(Exception):
    pass


class InvalidParams(BlockdiagError):
    pass


class ZeroDeterminant(BlockdiagError):
    """Mason determinant vanishes identically; the diagram is degenerate."""


class ExhaustedRetries(BlockdiagError):
    pass


@dataclass(frozen=True)
class TFBlock:
    label: str
    tf: RationalFunc


@dataclass(frozen=True)
class SfgNode:
    id: str
    kind: str  # input | output | signal | junction
    x: float
    y: float


@dataclass(frozen=True)
class SfgEdge:
    src: str
    dst: str
    gain: RationalFunc  # block transfer function, or 1 for a wire
    sign: int  # +1 or -1; junction port sign (always +1 into non-junctions)
    label: str | None  # block label when the edge carries a block
    role: str  # main | feedback | feedforward

    def effective_gain(self) -> RationalFunc:
        return self.gain if self.sign > 0 else -self.gain


@dataclass(frozen=True)
class SignalFlowGraph:
    nodes: tuple
    edges: tuple
    input_id: str = INPUT_ID
    output_id: str = OUTPUT_ID

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise BlockdiagError("duplicate node id")
        known = set(ids)
        seen = set()
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise BlockdiagError(f"edge {e.src}->{e.dst} references unknown node")
            key = (e.src, e.dst, e.role)
            if key in seen:
                raise BlockdiagError(f"duplicate edge {key}")
            seen.add(key)

    def node(self, node_id: str) -> SfgNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def out_edges(self, node_id: str) -> list:
        return sorted(
            (e for e in self.edges if e.src == node_id), key=lambda e: (e.dst, e.role)
        )

    def in_edges(self, node_id: str) -> list:
        return sorted(
            (e for e in self.edges if e.dst == node_id), key=lambda e: (e.src, e.role)
        )

    def junctions(self) -> list:
        return [n for n in self.nodes if n.kind == "junction"]

    def blocks(self) -> list:
        """TFBlocks in deterministic label order."""
        out = []
        for e in sorted(self.edges, key=lambda e: (e.label or "", e.src, e.dst)):
            if e.label is not None:
                out.append(TFBlock(e.label, e.gain))
        return out


@dataclass(frozen=True)
class GenParams:
    main_min: int = 2  # shortest main path (number of components)
    main_max: int = 5
    fb_max: int = 3  # feedback path count upper bound
    ff_max: int = 2  # feedforward path count upper bound
    fb_min: int = 0
    ff_min: int = 0
    block_junction_ratio: tuple = (3, 2)
    p_block: float = 0.5
    max_retries: int = 200

    def __post_init__(self):
        a, b = self.block_junction_ratio
        if self.main_min < 1 or self.main_max < self.main_min:
            raise InvalidParams("main path bounds must satisfy 1 <= min <= max")
        if self.fb_max < 0 or self.ff_max < 0:
            raise InvalidParams("path count bounds must be non-negative")
        if not (0 <= self.fb_min <= self.fb_max and 0 <= self.ff_min <= self.ff_max):
            raise InvalidParams("path count lower bounds out of range")
        if a < 0 or b < 0 or (a == 0 and b == 0):
            raise InvalidParams("block:junction ratio needs a positive entry")
        if not 0.0 <= self.p_block <= 1.0:
            raise InvalidParams("p_block must lie in [0, 1]")


# ---------------------------------------------------------------------------
# Transfer-function library
# ---------------------------------------------------------------------------


def _library_tf(rng: random.Random) -> RationalFunc:
    """Small-integer standard shapes: gains, first/second order, integrator, lead."""
    shape = rng.choice(["gain", "first", "second", "integrator", "lead"])
    if shape == "gain":
        return parse_rational(str(rng.randint(1, 10)))
    if shape == "first":
        return parse_rational(f"{rng.randint(1, 10)}/(s + {rng.randint(1, 9)})")
    if shape == "integrator":
        return parse_rational(f"{rng.randint(1, 5)}/s")
    if shape == "second":
        w = rng.randint(1, 4)
        b = rng.randint(0, 2 * w)
        k = rng.randint(1, 10)
        return parse_rational(f"{k}/(s**2 + {b}*s + {w * w})")
    z = rng.randint(1, 9)
    p = rng.randint(1, 9)
    while p == z:
        p = rng.randint(1, 9)
    return parse_rational(f"(s + {z})/(s + {p})")


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def generate_diagram(rng: random.Random, params: GenParams) -> SignalFlowGraph:
    """Two-phase construction: main path first, then auxiliary paths."""
    for _ in range(params.max_retries):
        g = _try_generate(rng, params)
        if g is not None:
            return g
    raise ExhaustedRetries(f"no viable diagram after {params.max_retries} attempts")


def _try_generate(rng: random.Random, params: GenParams) -> SignalFlowGraph | None:
    n = rng.randint(params.main_min, params.main_max)
    a, b = params.block_junction_ratio
    kinds = [
        "block" if rng.random() < a / (a + b) else "junction" for _ in range(n)
    ]
    n_fb = rng.randint(params.fb_min, params.fb_max)
    n_ff = rng.randint(params.ff_min, params.ff_max)
    n_junc = sum(1 for k in kinds if k == "junction")
    # every junction needs a second input; every auxiliary path needs a junction
    if n_fb + n_ff < n_junc:
        return None
    if n_fb + n_ff > 0 and n_junc == 0:
        return None

    nodes = [SfgNode(INPUT_ID, "input", 0.0, 0.0)]
    edges: list = []
    position = {INPUT_ID: 0}
    block_count = 0
    junction_count = 0
    prev = INPUT_ID
    junction_ids: list = []
    for i, kind in enumerate(kinds, start=1):
        if kind == "block":
            block_count += 1
            node_id = f"n{block_count}"
            label = f"G{block_count}"
            nodes.append(SfgNode(node_id, "signal", float(i), 0.0))
            edges.append(
                SfgEdge(prev, node_id, _library_tf(rng), 1, label, "main")
            )
        else:
            junction_count += 1
            node_id = f"J{junction_count}"
            nodes.append(SfgNode(node_id, "junction", float(i), 0.0))
            sign = rng.choice([1, -1])
            edges.append(
                SfgEdge(prev, node_id, RationalFunc.one(), sign, None, "main")
            )
            junction_ids.append(node_id)
        position[node_id] = i
        prev = node_id
    nodes.append(SfgNode(OUTPUT_ID, "output", float(n + 1), 0.0))
    position[OUTPUT_ID] = n + 1
    edges.append(SfgEdge(prev, OUTPUT_ID, RationalFunc.one(), 1, None, "main"))

    main_ids = [nd.id for nd in nodes]

    # Serve junctions lacking a second input first, then spread the rest.
    roles = ["feedback"] * n_fb + ["feedforward"] * n_ff
    rng.shuffle(roles)
    need = list(junction_ids)
    used: set = set()
    fb_lane = 0
    ff_lane = 0
    aux_block = 0

    for role in roles:
        target_pool = need if need else junction_ids
        placed = False
        for _ in range(40):
            junction = rng.choice(sorted(target_pool))
            pj = position[junction]
            if role == "feedback":
                taps = [m for m in main_ids if position[m] > pj]
            else:
                taps = [m for m in main_ids if position[m] < pj]
            taps = [t for t in taps if (t, junction, role) not in used]
            if not taps:
                continue
            tap = rng.choice(sorted(taps, key=lambda t: position[t]))
            used.add((tap, junction, role))
            sign = rng.choice([1, -1])
            if rng.random() < params.p_block:
                aux_block += 1
                if role == "feedback":
                    fb_lane += 1
                    lane_y = -float(fb_lane)
                    label = f"H{fb_lane}"
                else:
                    ff_lane += 1
                    lane_y = float(ff_lane)
                    block_count += 1
                    label = f"G{block_count}"
                mid = f"a{aux_block}"
                mx = (position[tap] + pj) / 2.0
                nodes.append(SfgNode(mid, "signal", mx, lane_y))
                edges.append(SfgEdge(tap, mid, _library_tf(rng), 1, label, role))
                edges.append(SfgEdge(mid, junction, RationalFunc.one(), sign, None, role))
            else:
                edges.append(
                    SfgEdge(tap, junction, RationalFunc.one(), sign, None, role)
                )
            if junction in need:
                need.remove(junction)
            placed = True
            break
        if not placed:
            return None
    if need:
        return None
    g = SignalFlowGraph(tuple(nodes), tuple(edges))
    # An all-wire loop with net positive sign makes the determinant vanish;
    # such degenerate algebraic loops are resampled away.
    if _delta(enumerate_loops(g)).is_zero():
        return None
    return g


# ---------------------------------------------------------------------------
# Path and loop enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForwardPath:
    gain: RationalFunc
    nodes: tuple


@dataclass(frozen=True)
class Loop:
    gain: RationalFunc
    nodes: frozenset

    def touches(self, other_nodes) -> bool:
        return bool(self.nodes & set(other_nodes))


def enumerate_forward_paths(g: SignalFlowGraph) -> list:
    """All simple input-to-output paths, deterministic order."""
    paths: list = []
    stack: list = [(g.input_id, (g.input_id,), RationalFunc.one())]
    while stack:
        node, visited, gain = stack.pop()
        if node == g.output_id:
            paths.append(ForwardPath(gain, visited))
            continue
        for e in reversed(g.out_edges(node)):
            if e.dst in visited:
                continue
            stack.append((e.dst, visited + (e.dst,), gain * e.effective_gain()))
    paths.sort(key=lambda p: p.nodes)
    return paths


def enumerate_loops(g: SignalFlowGraph) -> list:
    """All simple directed cycles with their gains and touched-node sets."""
    order = sorted(n.id for n in g.nodes)
    rank = {nid: i for i, nid in enumerate(order)}
    loops: list = []

    def walk(start, node, visited, gain):
        for e in g.out_edges(node):
            if e.dst == start:
                loops.append(Loop(gain * e.effective_gain(), frozenset(visited)))
            elif e.dst not in visited and rank[e.dst] > rank[start]:
                walk(start, e.dst, visited | {e.dst}, gain * e.effective_gain())

    for start in order:
        walk(start, start, {start}, RationalFunc.one())
    loops.sort(key=lambda l: sorted(l.nodes))
    return loops


def _delta(loops: list) -> RationalFunc:
    """Graph determinant: alternating sum over non-touching loop subsets."""
    total = RationalFunc.one()

    def extend(start: int, chosen_nodes: frozenset, product: RationalFunc, size: int):
        nonlocal total
        for i in range(start, len(loops)):
            loop = loops[i]
            if loop.nodes & chosen_nodes:
                continue
            term = product * loop.gain
            if (size + 1) % 2 == 1:
                total = total - term
            else:
                total = total + term
            extend(i + 1, chosen_nodes | loop.nodes, term, size + 1)

    extend(0, frozenset(), RationalFunc.one(), 0)
    return total


def mason(g: SignalFlowGraph) -> RationalFunc:
    """Overall input-to-output transfer function via Mason's gain formula."""
    paths = enumerate_forward_paths(g)
    loops = enumerate_loops(g)
    delta = _delta(loops)
    if delta.is_zero():
        raise ZeroDeterminant("system determinant is identically zero")
    total = RationalFunc.zero()
    for path in paths:
        untouched = [l for l in loops if not l.touches(path.nodes)]
        total = total + path.gain * _delta(untouched)
    return simplify(total / delta)


# ---------------------------------------------------------------------------
# Labeling modes and serialization
# ---------------------------------------------------------------------------


def with_symbolic_blocks(g: SignalFlowGraph) -> SignalFlowGraph:
    """Replace each block's transfer function by its label symbol."""
    new_edges = tuple(
        replace(e, gain=RationalFunc.symbol(e.label)) if e.label else e
        for e in g.edges
    )
    return SignalFlowGraph(g.nodes, new_edges, g.input_id, g.output_id)


def render_labels(g: SignalFlowGraph, mode: str) -> tuple:
    """(serialized description, ground truth) under the chosen labeling.

    ``highlevel`` shows bare block symbols and expresses the ground truth in
    them; ``exact`` prints the concrete transfer functions.  The topology is
    identical either way.
    """
    if mode not in ("exact", "highlevel"):
        raise BlockdiagError(f"unknown labeling mode {mode!r}")
    if mode == "highlevel":
        sym = with_symbolic_blocks(g)
        return serialize_diagram(sym, show_tf=False), mason(sym)
    return serialize_diagram(g, show_tf=True), mason(g)


def serialize_diagram(g: SignalFlowGraph, show_tf: bool = True) -> str:
    """Line-oriented description: one node or edge per line."""
    lines = ["diagram v1"]
    for nd in g.nodes:
        lines.append(f"node {nd.id} {nd.kind} {nd.x:.2f} {nd.y:.2f}")
    for e in g.edges:
        sign = "+" if e.sign > 0 else "-"
        if e.label is None:
            lines.append(f"edge {e.src} {e.dst} {e.role} {sign} wire")
        elif show_tf:
            lines.append(
                f"edge {e.src} {e.dst} {e.role} {sign} {e.label} {format_canonical(e.gain)}"
            )
        else:
            lines.append(f"edge {e.src} {e.dst} {e.role} {sign} {e.label}")
    return "\n".join(lines) + "\n"


def parse_diagram(text: str) -> SignalFlowGraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "diagram v1":
        raise BlockdiagError("missing diagram header")
    nodes: list = []
    edges: list = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "node" and len(parts) == 5:
            nodes.append(SfgNode(parts[1], parts[2], float(parts[3]), float(parts[4])))
        elif parts[0] == "edge" and len(parts) >= 6:
            sign = 1 if parts[4] == "+" else -1
            if parts[5] == "wire":
                gain: RationalFunc = RationalFunc.one()
                label = None
            else:
                label = parts[5]
                rest = ln.split(None, 6)
                gain = (
                    parse_rational(rest[6])
                    if len(rest) > 6
                    else RationalFunc.symbol(label)
                )
            edges.append(SfgEdge(parts[1], parts[2], gain, sign, label, parts[3]))
        else:
            raise BlockdiagError(f"bad diagram line: {ln}")
    input_id = next((n.id for n in nodes if n.kind == "input"), INPUT_ID)
    output_id = next((n.id for n in nodes if n.kind == "output"), OUTPUT_ID)
    return SignalFlowGraph(tuple(nodes), tuple(edges), input_id, output_id)


# ---------------------------------------------------------------------------
# Numeric oracle: direct solve of the linear signal equations
# ---------------------------------------------------------------------------


def numeric_response(
    g: SignalFlowGraph, assignment: dict, s: complex
) -> complex:
    """Output value with input 1, solving node equations in floating point."""
    order = sorted(n.id for n in g.nodes)
    index = {nid: i for i, nid in enumerate(order)}
    size = len(order)
    A = np.eye(size, dtype=complex)
    rhs = np.zeros(size, dtype=complex)
    rhs[index[g.input_id]] = 1.0
    point = dict(assignment)
    point["s"] = s
    for e in g.edges:
        gain = eval_numeric(e.effective_gain(), point, pole_guard=1e-12)
        A[index[e.dst], index[e.src]] -= gain
    x = np.linalg.solve(A, rhs)
    if not np.all(np.isfinite(x)):
        raise BlockdiagError("non-finite signal solution")
    return complex(x[index[g.output_id]])


# ---------------------------------------------------------------------------
# Convenience constructors used by tests and the harness
# ---------------------------------------------------------------------------


def single_block_diagram(tf: RationalFunc) -> SignalFlowGraph:
    nodes = (
        SfgNode(INPUT_ID, "input", 0.0, 0.0),
        SfgNode("n1", "signal", 1.0, 0.0),
        SfgNode(OUTPUT_ID, "output", 2.0, 0.0),
    )
    edges = (
        SfgEdge(INPUT_ID, "n1", tf, 1, "G1", "main"),
        SfgEdge("n1", OUTPUT_ID, RationalFunc.one(), 1, None, "main"),
    )
    return SignalFlowGraph(nodes, edges)


def feedback_diagram(
    forward: RationalFunc,
    feedback: RationalFunc | None,
    main_sign: int = 1,
    fb_sign: int = -1,
) -> SignalFlowGraph:
    """R ->(main_sign) J1 -> G1 -> C with feedback C (-> H1) ->(fb_sign) J1."""
    nodes = [
        SfgNode(INPUT_ID, "input", 0.0, 0.0),
        SfgNode("J1", "junction", 1.0, 0.0),
        SfgNode("n1", "signal", 2.0, 0.0),
        SfgNode(OUTPUT_ID, "output", 3.0, 0.0),
    ]
    edges = [
        SfgEdge(INPUT_ID, "J1", RationalFunc.one(), main_sign, None, "main"),
        SfgEdge("J1", "n1", forward, 1, "G1", "main"),
        SfgEdge("n1", OUTPUT_ID, RationalFunc.one(), 1, None, "main"),
    ]
    if feedback is None:
        edges.append(SfgEdge(OUTPUT_ID, "J1", RationalFunc.one(), fb_sign, None, "feedback"))
    else:
        nodes.append(SfgNode("a1", "signal", 2.0, -1.0))
        edges.append(SfgEdge(OUTPUT_ID, "a1", feedback, 1, "H1", "feedback"))
        edges.append(SfgEdge("a1", "J1", RationalFunc.one(), fb_sign, None, "feedback"))
    return SignalFlowGraph(tuple(nodes), tuple(edges))
