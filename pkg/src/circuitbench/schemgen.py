"""Grid-based random schematic generation.

Circuits are built on an m x n node grid: a connected subset of grid edges is
selected with every retained node keeping degree >= 2, one component is placed
per selected edge using separate weight tables for perimeter and interior
edges, and exactly one independent voltage source is enforced.  Level 4 may
replace an edge with an ideal op-amp template (input resistor, feedback
network, high-gain VCVS to ground) which is expanded into primitive parts with
``int``-suffixed names before the netlist is assembled.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace

from .netlist import GROUND, Component, ComponentKind, Netlist, validate

LEVELS = (0, 1, 2, 4)

_DEFAULT_GRID_SIZES = {(2, 2): 1.0, (2, 3): 1.0, (3, 3): 1.0, (3, 4): 1.0}

_ALLOWED_KINDS = {
    0: {ComponentKind.R, ComponentKind.VSOURCE},
    1: {ComponentKind.R, ComponentKind.VSOURCE, ComponentKind.L, ComponentKind.C},
}
_ALLOWED_KINDS[2] = _ALLOWED_KINDS[1] | {
    ComponentKind.VCVS,
    ComponentKind.VCCS,
    ComponentKind.CCVS,
    ComponentKind.CCCS,
    ComponentKind.ISOURCE,
}
_ALLOWED_KINDS[4] = _ALLOWED_KINDS[2] | {ComponentKind.OPAMP}


def _default_outer_weights(level: int) -> dict:
    w = {ComponentKind.R: 4.0, ComponentKind.VSOURCE: 1.0}
    if level >= 1:
        w[ComponentKind.L] = 1.0
        w[ComponentKind.C] = 1.0
    if level == 2:
        w[ComponentKind.ISOURCE] = 1.0
    return w


def _default_inner_weights(level: int) -> dict:
    if level == 0:
        return {ComponentKind.R: 1.0}
    w = {ComponentKind.R: 3.0, ComponentKind.L: 2.0, ComponentKind.C: 2.0}
    if level == 2:
        for kind in (
            ComponentKind.VCVS,
            ComponentKind.VCCS,
            ComponentKind.CCVS,
            ComponentKind.CCCS,
        ):
            w[kind] = 1.0
    return w


class ExhaustedRetries(Exception):
    """Bounded rejection sampling gave up; the configuration is too tight."""


class ConfigError(Exception):
    """Invalid placement configuration."""


@dataclass(frozen=True)
class PlacementConfig:
    level: int
    grid_sizes: dict = field(default_factory=lambda: dict(_DEFAULT_GRID_SIZES))
    edge_keep_prob: float = 0.75
    inner_weights: dict | None = None
    outer_weights: dict | None = None
    opamp_prob: float = 0.3  # level 4 only
    max_opamps: int = 2
    max_components: int = 13  # symbolic analysis gets impractical beyond this
    nodal_question_prob: float = 0.5
    max_retries: int = 200

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ConfigError(f"unsupported level {self.level}")
        if not self.grid_sizes:
            raise ConfigError("empty grid size distribution")
        for (m, n), w in self.grid_sizes.items():
            if m < 1 or n < 1 or w < 0:
                raise ConfigError(f"bad grid size entry {(m, n)}: {w}")
        if not any(w > 0 for w in self.grid_sizes.values()):
            raise ConfigError("grid size weights are all zero")
        if not 0.0 < self.edge_keep_prob <= 1.0:
            raise ConfigError("edge_keep_prob must be in (0, 1]")
        allowed = _ALLOWED_KINDS[self.level]
        for table in (self.inner_weights, self.outer_weights):
            if table is None:
                continue
            if not any(w > 0 for w in table.values()):
                raise ConfigError("weight table has no positive entry")
            for kind, w in table.items():
                if w < 0:
                    raise ConfigError(f"negative weight for {kind}")
                if kind not in allowed:
                    raise ConfigError(f"kind {kind} not allowed at level {self.level}")

    def outer_table(self) -> dict:
        return self.outer_weights or _default_outer_weights(self.level)

    def inner_table(self) -> dict:
        return self.inner_weights or _default_inner_weights(self.level)

    @classmethod
    def for_level(cls, level: int, **overrides) -> "PlacementConfig":
        return cls(level=level, **overrides)


def sample_rng(master_seed: int, index: int) -> random.Random:
    """Independent per-sample stream derived from (master seed, sample index)."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


# ---------------------------------------------------------------------------
# Grid topology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridTopology:
    rows: int
    cols: int
    edges: tuple  # ((r1,c1),(r2,c2)) pairs in canonical order

    def nodes(self) -> list:
        seen = set()
        for a, b in self.edges:
            seen.add(a)
            seen.add(b)
        return sorted(seen)

    def is_outer(self, edge) -> bool:
        (r1, c1), (r2, c2) = edge
        if r1 == r2:  # horizontal edge
            return r1 == 0 or r1 == self.rows - 1
        return c1 == 0 or c1 == self.cols - 1  # vertical edge


def _all_grid_edges(m: int, n: int) -> list:
    edges = []
    for r in range(m):
        for c in range(n):
            if c + 1 < n:
                edges.append(((r, c), (r, c + 1)))
            if r + 1 < m:
                edges.append(((r, c), (r + 1, c)))
    return sorted(edges)


def _edges_valid(edges: list) -> bool:
    if not edges:
        return False
    degree: dict = {}
    adj: dict = {}
    for a, b in edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    if any(d < 2 for d in degree.values()):
        return False
    start = next(iter(adj))
    reached = {start}
    frontier = [start]
    while frontier:
        for nxt in adj[frontier.pop()]:
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    return len(reached) == len(adj)


def sample_grid(rng: random.Random, cfg: PlacementConfig) -> GridTopology:
    """Sample a connected degree->=2 edge subset of a weighted random grid."""
    sizes = sorted(cfg.grid_sizes)
    weights = [cfg.grid_sizes[sz] for sz in sizes]
    for _ in range(cfg.max_retries):
        m, n = rng.choices(sizes, weights=weights, k=1)[0]
        candidates = _all_grid_edges(m, n)
        chosen = [e for e in candidates if rng.random() < cfg.edge_keep_prob]
        if len(chosen) > cfg.max_components:
            continue
        if _edges_valid(chosen):
            return GridTopology(m, n, tuple(chosen))
    raise ExhaustedRetries(
        f"no valid grid topology after {cfg.max_retries} attempts"
    )


# ---------------------------------------------------------------------------
# Component placement
# ---------------------------------------------------------------------------

_PREFIX = {
    ComponentKind.R: "R",
    ComponentKind.L: "L",
    ComponentKind.C: "C",
    ComponentKind.VSOURCE: "V",
    ComponentKind.ISOURCE: "I",
    ComponentKind.VCVS: "E",
    ComponentKind.VCCS: "G",
    ComponentKind.CCVS: "H",
    ComponentKind.CCCS: "F",
}

_PASSIVE = (ComponentKind.R, ComponentKind.L, ComponentKind.C)
_CONTROLLED = (
    ComponentKind.VCVS,
    ComponentKind.VCCS,
    ComponentKind.CCVS,
    ComponentKind.CCCS,
)


@dataclass(frozen=True)
class GeneratedSchematic:
    netlist: Netlist
    grid: GridTopology
    level: int
    question_kind: str  # "nodal" or "transfer"
    target: object  # node id, or (source name, component name)
    layout: dict  # node id -> (x, y) in grid units
    notes: tuple = ()


def _draw_kind(rng, table: dict, exclude: tuple = ()) -> ComponentKind:
    items = sorted(
        ((k, w) for k, w in table.items() if w > 0 and k not in exclude),
        key=lambda kw: kw[0].value,
    )
    if not items:
        return ComponentKind.R
    kinds = [k for k, _ in items]
    weights = [w for _, w in items]
    return rng.choices(kinds, weights=weights, k=1)[0]


def _assemble(rng, grid: GridTopology, cfg: PlacementConfig, allow_isource: bool):
    """One placement attempt; returns (netlist, layout) or None on a dud."""
    nodes_rc = grid.nodes()
    ground_rc = rng.choice(nodes_rc)
    label: dict = {ground_rc: GROUND}
    counter = 1
    for rc in nodes_rc:
        if rc != ground_rc:
            label[rc] = str(counter)
            counter += 1

    edges = list(grid.edges)
    rng.shuffle(edges)

    exclude = () if allow_isource else (ComponentKind.ISOURCE,)
    drawn: list = []  # (edge, kind)
    opamps = 0
    for edge in edges:
        if cfg.level == 4 and opamps < cfg.max_opamps and rng.random() < cfg.opamp_prob:
            drawn.append((edge, ComponentKind.OPAMP))
            opamps += 1
            continue
        table = cfg.outer_table() if grid.is_outer(edge) else cfg.inner_table()
        drawn.append((edge, _draw_kind(rng, table, exclude)))

    # Exactly one independent voltage source.
    v_slots = [i for i, (_, k) in enumerate(drawn) if k is ComponentKind.VSOURCE]
    if not v_slots:
        outer_slots = [
            i
            for i, (e, k) in enumerate(drawn)
            if grid.is_outer(e) and k is not ComponentKind.OPAMP
        ]
        slots = outer_slots or [
            i for i, (_, k) in enumerate(drawn) if k is not ComponentKind.OPAMP
        ]
        if not slots:
            slots = list(range(len(drawn)))  # all templates: one must yield
        pick = rng.choice(slots)
        drawn[pick] = (drawn[pick][0], ComponentKind.VSOURCE)
    elif len(v_slots) > 1:
        keep = rng.choice(v_slots)
        for i in v_slots:
            if i == keep:
                continue
            edge = drawn[i][0]
            table = cfg.outer_table() if grid.is_outer(edge) else cfg.inner_table()
            drawn[i] = (edge, _draw_kind(rng, table, exclude + (ComponentKind.VSOURCE,)))

    # Name components and expand op-amp templates.
    kind_counts: dict = {}
    opamp_count = 0
    components: list = []
    layout: dict = {label[rc]: (float(rc[1]), float(rc[0])) for rc in nodes_rc}
    passive_edges: list = []  # (name, node_a, node_b) of grid R/L/C
    pending_controls: list = []  # indices into components needing controls

    for edge, kind in drawn:
        a, b = label[edge[0]], label[edge[1]]
        if kind is ComponentKind.OPAMP:
            opamp_count += 1
            k = opamp_count
            if b == GROUND or (a != GROUND and rng.random() < 0.5):
                a, b = b, a  # output side must not be ground
            internal = str(10 * k + 21)
            while internal in layout:
                internal = str(int(internal) + 10)
            (xa, ya), (xb, yb) = layout[a], layout[b]
            layout[internal] = ((xa + xb) / 2.0 + 0.18, (ya + yb) / 2.0 + 0.18)
            gain = "Ad" if k == 1 else f"Ad{k}"
            components.append(
                Component(f"Rint{k}", ComponentKind.R, (a, internal), f"Rint{k}")
            )
            feedback = rng.choice(["C", "R", "RC"])
            if "R" in feedback:
                components.append(
                    Component(f"Rfint{k}", ComponentKind.R, (b, internal), f"Rfint{k}")
                )
            if "C" in feedback:
                components.append(
                    Component(f"Cint{k}", ComponentKind.C, (b, internal), f"Cint{k}")
                )
            components.append(
                Component(
                    f"Eint{k}", ComponentKind.VCVS, (b, GROUND, GROUND, internal), gain
                )
            )
            continue

        idx = kind_counts.get(kind, 0) + 1
        kind_counts[kind] = idx
        name = f"{_PREFIX[kind]}{idx}"
        if kind is ComponentKind.VSOURCE:
            components.append(Component(name, kind, (a, b), "step"))
        elif kind is ComponentKind.ISOURCE:
            components.append(Component(name, kind, (a, b), "step"))
        elif kind in _CONTROLLED:
            components.append(Component(name, kind, (a, b), name))
            pending_controls.append(len(components) - 1)
        else:
            components.append(Component(name, kind, (a, b), name))
            passive_edges.append((name, a, b))

    # Wire up control references from already-placed passive terminals.
    for i in pending_controls:
        comp = components[i]
        others = [p for p in passive_edges if p[0] != comp.name]
        if not others:
            return None
        if comp.kind in (ComponentKind.VCVS, ComponentKind.VCCS):
            _, ca, cb = rng.choice(others)
            components[i] = Component(
                comp.name, comp.kind, comp.nodes + (ca, cb), comp.value
            )
        else:
            sensed = rng.choice(others)[0]
            components[i] = Component(
                comp.name, comp.kind, comp.nodes, comp.value, control=sensed
            )

    if len(components) > cfg.max_components:
        return None
    emit_order = list(range(len(components)))
    rng.shuffle(emit_order)
    netlist = Netlist(tuple(components[i] for i in emit_order))
    if validate(netlist):
        return None
    if _has_current_cut(netlist) or _has_voltage_loop(netlist):
        return None
    return netlist, layout


_CURRENT_DEFINED = (ComponentKind.ISOURCE, ComponentKind.VCCS, ComponentKind.CCCS)
_VOLTAGE_DEFINED = (ComponentKind.VSOURCE, ComponentKind.VCVS, ComponentKind.CCVS)


def _has_current_cut(netlist: Netlist) -> bool:
    """True when removing every current-defined branch disconnects the circuit.

    A cut made only of current-defined branches leaves an island whose
    potential is underdetermined, so the nodal system would be singular.
    """
    if not any(c.kind in _CURRENT_DEFINED for c in netlist.components):
        return False
    adj: dict = {}
    nodes = set()
    for c in netlist.components:
        a, b = c.conduction_nodes()
        nodes.update((a, b))
        if c.kind in _CURRENT_DEFINED:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    start = next(iter(sorted(nodes)))
    reached = {start}
    frontier = [start]
    while frontier:
        for nxt in adj.get(frontier.pop(), ()):
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    return len(reached) != len(nodes)


def _has_voltage_loop(netlist: Netlist) -> bool:
    """True when voltage-defined branches close a cycle (KVL conflict)."""
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in netlist.components:
        if c.kind not in _VOLTAGE_DEFINED:
            continue
        a, b = (find(n) for n in c.conduction_nodes())
        if a == b:
            return True
        parent[a] = b
    return False


def place_components(
    rng: random.Random,
    grid: GridTopology,
    cfg: PlacementConfig,
    allow_isource: bool = True,
) -> Netlist:
    """Place one component per selected edge; always validates clean."""
    for _ in range(cfg.max_retries):
        result = _assemble(rng, grid, cfg, allow_isource)
        if result is not None:
            return result[0]
    raise ExhaustedRetries(f"no valid placement after {cfg.max_retries} attempts")


def generate_schematic(
    rng: random.Random, level: int, cfg: PlacementConfig | None = None
) -> GeneratedSchematic:
    """Sample a complete schematic plus its question kind and target."""
    if cfg is None:
        cfg = PlacementConfig.for_level(level)
    elif cfg.level != level:
        cfg = replace(cfg, level=level)

    question_kind = "nodal" if rng.random() < cfg.nodal_question_prob else "transfer"
    grid = sample_grid(rng, cfg)
    for _ in range(cfg.max_retries):
        result = _assemble(rng, grid, cfg, allow_isource=(question_kind == "nodal"))
        if result is not None:
            break
    else:
        raise ExhaustedRetries(f"no valid placement after {cfg.max_retries} attempts")
    netlist, layout = result

    notes: list = []
    if question_kind == "nodal":
        candidates = [n for n in netlist.nodes() if n != GROUND]
        target: object = rng.choice(candidates)
    else:
        source = netlist.voltage_sources()[0]
        src_nodes = set(source.conduction_nodes())
        away = [
            c.name
            for c in netlist.components
            if c.name != source.name and not src_nodes & set(c.conduction_nodes())
        ]
        if not away:
            away = [c.name for c in netlist.components if c.name != source.name]
            notes.append("output-choice: no component clear of the source; any taken")
        else:
            notes.append("output-choice: uniform among components not adjacent to source")
        target = (source.name, rng.choice(sorted(away)))

    return GeneratedSchematic(
        netlist, grid, level, question_kind, target, layout, tuple(notes)
    )
