"""Canonical schematic representation: SPICE-style component lists.

Line formats (whitespace separated, ``*`` comment lines skipped)::

    R/L/C:  name n1 n2 value
    V/I:    name n+ n- (step | ac | amplitude_symbol)
    E/G:    name n+ n- nc+ nc- gain [0]       (trailing 0 tolerated/emitted)
    H/F:    name n+ n- sensed_component gain

Values are symbols (default: the component's own name) or plain numeric
literals.  A voltage/current source whose value token is neither ``step`` nor
``ac`` is a step source with that token as its amplitude symbol.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

GROUND = "0"

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class NetlistError(Exception):
    """Unparseable or structurally inconsistent netlist text."""


class ComponentKind(enum.Enum):
    R = "R"
    L = "L"
    C = "C"
    VSOURCE = "V"
    ISOURCE = "I"
    VCVS = "E"
    VCCS = "G"
    CCVS = "H"
    CCCS = "F"
    OPAMP = "OPAMP"  # pre-expansion template marker, never serialized


_LETTER_TO_KIND = {k.value: k for k in ComponentKind if k is not ComponentKind.OPAMP}

#: Kinds whose branch current can be sensed by CCVS/CCCS.
SENSEABLE_KINDS = frozenset(
    {
        ComponentKind.R,
        ComponentKind.L,
        ComponentKind.C,
        ComponentKind.VSOURCE,
        ComponentKind.VCVS,
        ComponentKind.CCVS,
    }
)


@dataclass(frozen=True)
class SourceWaveform:
    kind: str  # "step" or "ac"
    amplitude: str  # amplitude symbol, e.g. "V1"


@dataclass(frozen=True)
class Component:
    name: str
    kind: ComponentKind
    nodes: tuple  # 2 conduction nodes, or 4 for VCVS/VCCS (out+, out-, c+, c-)
    value: str  # value/gain/amplitude token
    control: str | None = None  # sensed component name for CCVS/CCCS

    def conduction_nodes(self) -> tuple:
        """The pair of terminals that carry branch current."""
        return self.nodes[:2]

    def control_nodes(self) -> tuple:
        return self.nodes[2:4] if self.kind in (ComponentKind.VCVS, ComponentKind.VCCS) else ()

    def waveform(self) -> SourceWaveform | None:
        if self.kind not in (ComponentKind.VSOURCE, ComponentKind.ISOURCE):
            return None
        if self.value == "step":
            return SourceWaveform("step", self.name)
        if self.value == "ac":
            return SourceWaveform("ac", self.name)
        return SourceWaveform("step", self.value)


@dataclass(frozen=True)
class Netlist:
    components: tuple

    def __post_init__(self):
        names = [c.name for c in self.components]
        if len(names) != len(set(names)):
            raise NetlistError("duplicate component name")

    def by_name(self, name: str) -> Component:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def nodes(self) -> list:
        """All conduction nodes, ground included, in a stable order."""
        seen = []
        for c in self.components:
            for n in c.conduction_nodes():
                if n not in seen:
                    seen.append(n)
        return sorted(seen, key=_node_sort_key)

    def voltage_sources(self) -> list:
        return [c for c in self.components if c.kind is ComponentKind.VSOURCE]


def _node_sort_key(node: str):
    return (0, int(node), "") if node.isdigit() else (1, 0, node)


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.detail}"


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------


def _check_value_token(tok: str, where: str) -> str:
    if _NAME_RE.match(tok) or re.fullmatch(r"\d+(\.\d+)?", tok):
        return tok
    raise NetlistError(f"{where}: invalid value token {tok!r}")


def parse_netlist(text: str) -> Netlist:
    """Parse netlist text; raises NetlistError with the offending line."""
    components: list = []
    names: set = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        tokens = line.split()
        name = tokens[0]
        where = f"line {lineno} ({name})"
        if not _NAME_RE.match(name):
            raise NetlistError(f"{where}: invalid component name")
        kind = _LETTER_TO_KIND.get(name[0].upper())
        if kind is None:
            raise NetlistError(f"{where}: unknown component kind letter {name[0]!r}")
        if name in names:
            raise NetlistError(f"{where}: duplicate component name")
        names.add(name)

        if kind in (ComponentKind.VCVS, ComponentKind.VCCS):
            if len(tokens) not in (6, 7):
                raise NetlistError(f"{where}: expected 6 or 7 fields for {kind.value}")
            if len(tokens) == 7 and tokens[6] != "0":
                raise NetlistError(f"{where}: trailing token must be 0")
            comp = Component(
                name, kind, tuple(tokens[1:5]), _check_value_token(tokens[5], where)
            )
        elif kind in (ComponentKind.CCVS, ComponentKind.CCCS):
            if len(tokens) != 5:
                raise NetlistError(f"{where}: expected 5 fields for {kind.value}")
            comp = Component(
                name,
                kind,
                tuple(tokens[1:3]),
                _check_value_token(tokens[4], where),
                control=tokens[3],
            )
        else:
            if len(tokens) != 4:
                raise NetlistError(f"{where}: expected 4 fields for {kind.value}")
            tok = tokens[3]
            if kind in (ComponentKind.VSOURCE, ComponentKind.ISOURCE) and tok in (
                "step",
                "ac",
            ):
                pass
            else:
                _check_value_token(tok, where)
            comp = Component(name, kind, tuple(tokens[1:3]), tok)
        components.append(comp)

    if not components:
        raise NetlistError("empty netlist")
    net = Netlist(tuple(components))
    for c in components:
        if c.control is not None and c.control not in names:
            raise NetlistError(
                f"{c.name}: unresolvable control reference {c.control!r}"
            )
    return net


def serialize(netlist: Netlist) -> str:
    """Inverse of parse_netlist; stable line format, one component per line."""
    lines = []
    for c in netlist.components:
        if c.kind is ComponentKind.OPAMP:
            raise NetlistError(f"{c.name}: op-amp template cannot be serialized")
        if c.kind in (ComponentKind.VCVS, ComponentKind.VCCS):
            lines.append(f"{c.name} {' '.join(c.nodes)} {c.value} 0")
        elif c.kind in (ComponentKind.CCVS, ComponentKind.CCCS):
            lines.append(f"{c.name} {' '.join(c.nodes)} {c.control} {c.value}")
        else:
            lines.append(f"{c.name} {' '.join(c.nodes)} {c.value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(netlist: Netlist) -> list:
    """Topological soundness check; returns an empty list for a clean netlist.

    Control terminals of controlled sources carry no current, so they do not
    count toward the degree-2 requirement nor toward ground connectivity.
    """
    violations: list = []
    names = {c.name for c in netlist.components}

    vsources = netlist.voltage_sources()
    if len(vsources) > 1:
        violations.append(
            Violation(
                "TooManyVoltageSources",
                ",".join(c.name for c in vsources),
                f"{len(vsources)} independent voltage sources, expected exactly 1",
            )
        )
    elif not vsources:
        violations.append(
            Violation("NoVoltageSource", "-", "no independent voltage source")
        )

    degree: dict = {}
    adjacency: dict = {}
    for c in netlist.components:
        a, b = c.conduction_nodes()
        if a == b:
            violations.append(
                Violation("ShortedComponent", c.name, f"both terminals on node {a}")
            )
        for n in (a, b):
            degree[n] = degree.get(n, 0) + 1
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)

    conduction_nodes = set(degree)
    for c in netlist.components:
        cn = c.control_nodes()
        if cn:
            if cn[0] == cn[1]:
                violations.append(
                    Violation(
                        "InvalidControl", c.name, f"control terminals shorted ({cn[0]})"
                    )
                )
            for n in cn:
                if n not in conduction_nodes:
                    violations.append(
                        Violation(
                            "InvalidControl",
                            c.name,
                            f"control node {n} is not part of the circuit",
                        )
                    )
        if c.control is not None:
            if c.control not in names:
                violations.append(
                    Violation(
                        "InvalidControl",
                        c.name,
                        f"sensed component {c.control!r} does not exist",
                    )
                )
            else:
                sensed = netlist.by_name(c.control)
                if sensed.kind not in SENSEABLE_KINDS:
                    violations.append(
                        Violation(
                            "InvalidControl",
                            c.name,
                            f"cannot sense current through {sensed.kind.value} element",
                        )
                    )

    for node in sorted(degree, key=_node_sort_key):
        if degree[node] < 2:
            violations.append(
                Violation("LowDegreeNode", node, f"degree {degree[node]} < 2")
            )

    if GROUND not in conduction_nodes:
        violations.append(Violation("GroundMissing", GROUND, "no ground node"))
    else:
        reached = {GROUND}
        frontier = [GROUND]
        while frontier:
            cur = frontier.pop()
            for nxt in adjacency.get(cur, ()):
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        for node in sorted(conduction_nodes - reached, key=_node_sort_key):
            violations.append(
                Violation(
                    "DisconnectedFromGround", node, "no conduction path to ground"
                )
            )

    return violations
