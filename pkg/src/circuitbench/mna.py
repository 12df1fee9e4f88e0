"""Symbolic modified nodal analysis over exact rational functions.

The stamped system is A x = b with x holding the non-ground node voltages
followed by branch currents (independent voltage sources, VCVS/CCVS outputs,
inductors, and any element whose current is sensed by a CCVS/CCCS).
Inductors are stamped in branch-current form so nothing in the matrix carries
a 1/s singularity; capacitors are stamped as sC admittances.

Solving is fraction-free: rows are scaled to polynomial entries, eliminated
with Bareiss pivoting (every division exact by construction), and the final
back-substitution keeps numerators polynomial so each unknown comes out as a
single polynomial over the shared system determinant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .netlist import GROUND, Component, ComponentKind, Netlist
from .symexpr import (
    Polynomial,
    RationalFunc,
    WorkBudget,
    WorkBudgetExceeded,
    gcd_is_probably_trivial,
    poly_div_exact,
    poly_gcd,
    simplify,
)

# Elimination budget scale, in polynomial term operations.
BASE_WORK_BUDGET = 1_000_000


class MnaError(Exception):
    """Base class for stamping/solving failures."""


class UnsupportedKind(MnaError):
    """The netlist still contains an unexpanded op-amp template."""


class SingularSystem(MnaError):
    """The symbolic matrix is singular over the rational-function field."""


class NumericallySingular(MnaError):
    """The numeric oracle hit a singular or unusable matrix."""


def complexity_score(netlist: Netlist) -> int:
    """Component count + 2 per controlled source + 3 per reactive element."""
    controlled = sum(
        1
        for c in netlist.components
        if c.kind
        in (ComponentKind.VCVS, ComponentKind.VCCS, ComponentKind.CCVS, ComponentKind.CCCS)
    )
    reactive = sum(
        1 for c in netlist.components if c.kind in (ComponentKind.L, ComponentKind.C)
    )
    return len(netlist.components) + 2 * controlled + 3 * reactive


def work_budget_for(netlist: Netlist) -> WorkBudget:
    return WorkBudget(int(BASE_WORK_BUDGET * (1 + complexity_score(netlist) / 10)))


@dataclass
class MnaSystem:
    unknowns: list  # labels, "Vn<k>" then "I_<name>"
    matrix: list  # RationalFunc entries, square
    rhs: list  # RationalFunc entries
    node_index: dict  # node id -> unknown index (ground absent)
    branch_index: dict  # component name -> unknown index
    netlist: Netlist

    @property
    def size(self) -> int:
        return len(self.unknowns)


def _value_rf(token: str) -> RationalFunc:
    if token[0].isdigit():
        return RationalFunc.const(Fraction(token))
    return RationalFunc.symbol(token)


def _source_transform(comp: Component) -> RationalFunc:
    wf = comp.waveform()
    amp = _value_rf(wf.amplitude)
    if wf.kind == "step":
        return amp / RationalFunc.symbol("s")
    return amp


def _needs_branch_current(comp: Component, sensed: set) -> bool:
    if comp.kind in (ComponentKind.VSOURCE, ComponentKind.VCVS, ComponentKind.CCVS):
        return True
    if comp.kind is ComponentKind.L:
        return True
    return comp.name in sensed


def stamp(netlist: Netlist) -> MnaSystem:
    """Build the exact MNA system for a validated netlist."""
    for comp in netlist.components:
        if comp.kind is ComponentKind.OPAMP:
            raise UnsupportedKind(f"{comp.name}: expand op-amp templates before stamping")

    nodes = [n for n in netlist.nodes() if n != GROUND]
    if len(nodes) == len(netlist.nodes()):
        raise MnaError("netlist has no ground node")
    node_index = {n: i for i, n in enumerate(nodes)}

    sensed = {c.control for c in netlist.components if c.control is not None}
    branch_index: dict = {}
    labels = [f"Vn{n}" for n in nodes]
    for comp in netlist.components:
        if _needs_branch_current(comp, sensed):
            branch_index[comp.name] = len(labels)
            labels.append(f"I_{comp.name}")

    n = len(labels)
    zero = RationalFunc.zero()
    A = [[zero] * n for _ in range(n)]
    b = [zero] * n

    def add(i: int | None, j: int | None, val: RationalFunc) -> None:
        if i is None or j is None:
            return
        A[i][j] = A[i][j] + val

    def idx(node: str) -> int | None:
        return node_index.get(node)

    one = RationalFunc.one()
    s = RationalFunc.symbol("s")

    for comp in netlist.components:
        a_node, b_node = comp.conduction_nodes()
        ia, ib = idx(a_node), idx(b_node)
        kind = comp.kind

        if kind in (ComponentKind.R, ComponentKind.C) and comp.name not in sensed:
            if kind is ComponentKind.R:
                g = one / _value_rf(comp.value)
            else:
                g = s * _value_rf(comp.value)
            add(ia, ia, g)
            add(ib, ib, g)
            add(ia, ib, -g)
            add(ib, ia, -g)
            continue

        if kind in (ComponentKind.R, ComponentKind.C, ComponentKind.L):
            # branch-current form: KCL contributions +I at a, -I at b, plus the
            # element's own constitutive row.
            k = branch_index[comp.name]
            add(ia, k, one)
            add(ib, k, -one)
            if kind is ComponentKind.L:
                add(k, ia, one)
                add(k, ib, -one)
                A[k][k] = A[k][k] - s * _value_rf(comp.value)
            elif kind is ComponentKind.R:
                add(k, ia, one)
                add(k, ib, -one)
                A[k][k] = A[k][k] - _value_rf(comp.value)
            else:  # sensed capacitor: sC*Va - sC*Vb - I = 0
                sc = s * _value_rf(comp.value)
                add(k, ia, sc)
                add(k, ib, -sc)
                A[k][k] = A[k][k] - one
            continue

        if kind is ComponentKind.VSOURCE:
            k = branch_index[comp.name]
            add(ia, k, one)
            add(ib, k, -one)
            add(k, ia, one)
            add(k, ib, -one)
            b[k] = b[k] + _source_transform(comp)
            continue

        if kind is ComponentKind.ISOURCE:
            j = _source_transform(comp)
            if ia is not None:
                b[ia] = b[ia] - j
            if ib is not None:
                b[ib] = b[ib] + j
            continue

        if kind is ComponentKind.VCVS:
            k = branch_index[comp.name]
            c_node, d_node = comp.control_nodes()
            ic, idn = idx(c_node), idx(d_node)
            gain = _value_rf(comp.value)
            add(ia, k, one)
            add(ib, k, -one)
            add(k, ia, one)
            add(k, ib, -one)
            add(k, ic, -gain)
            add(k, idn, gain)
            continue

        if kind is ComponentKind.VCCS:
            c_node, d_node = comp.control_nodes()
            ic, idn = idx(c_node), idx(d_node)
            gain = _value_rf(comp.value)
            add(ia, ic, gain)
            add(ia, idn, -gain)
            add(ib, ic, -gain)
            add(ib, idn, gain)
            continue

        if kind is ComponentKind.CCVS:
            k = branch_index[comp.name]
            ks = branch_index[comp.control]
            gain = _value_rf(comp.value)
            add(ia, k, one)
            add(ib, k, -one)
            add(k, ia, one)
            add(k, ib, -one)
            A[k][ks] = A[k][ks] - gain
            continue

        if kind is ComponentKind.CCCS:
            ks = branch_index[comp.control]
            gain = _value_rf(comp.value)
            add(ia, ks, gain)
            add(ib, ks, -gain)
            continue

        raise UnsupportedKind(f"{comp.name}: cannot stamp kind {kind}")

    return MnaSystem(labels, A, b, node_index, branch_index, netlist)


# ---------------------------------------------------------------------------
# Exact solve
# ---------------------------------------------------------------------------


def _clear_row(row: list, rhs: RationalFunc) -> tuple:
    """Scale a row so every entry is a plain polynomial."""
    dens: list = []
    for entry in list(row) + [rhs]:
        if entry.den != Polynomial.one() and all(entry.den != d for d in dens):
            dens.append(entry.den)

    def cleared(entry: RationalFunc) -> Polynomial:
        p = entry.num
        skipped = False
        for d in dens:
            if not skipped and d == entry.den:
                skipped = True
                continue
            p = p * d
        return p

    return [cleared(e) for e in row], cleared(rhs)


def solve(system: MnaSystem, budget: WorkBudget | None = None) -> dict:
    """Exact solution of the stamped system, one simplified value per unknown.

    Raises SingularSystem for symbolically singular matrices and propagates
    WorkBudgetExceeded when the complexity-scaled budget runs out.
    """
    if budget is None:
        budget = work_budget_for(system.netlist)
    n = system.size
    M: list = []
    for i in range(n):
        row, rhs = _clear_row(system.matrix[i], system.rhs[i])
        M.append(row + [rhs])

    # Fraction-free forward elimination.  Pivot choice matters enormously for
    # symbolic fill-in: prefer rows that are sparse and carry small pivots.
    prev = Polynomial.one()
    one = Polynomial.one()
    for k in range(n):
        pivot_row = None
        best = None
        for i in range(k, n):
            p = M[i][k]
            if not p.is_zero():
                row_fill = sum(1 for j in range(k, n) if not M[i][j].is_zero())
                score = (row_fill, len(p.terms))
                if best is None or score < best:
                    best = score
                    pivot_row = i
        if pivot_row is None:
            raise SingularSystem(f"no pivot in column {k} ({system.unknowns[k]})")
        if pivot_row != k:
            M[k], M[pivot_row] = M[pivot_row], M[k]
        pivot = M[k][k]
        trivial_prev = prev == one
        for i in range(k + 1, n):
            head = M[i][k]
            head_zero = head.is_zero()
            for j in range(k + 1, n + 1):
                if head_zero and M[i][j].is_zero():
                    continue
                num = pivot.mul(M[i][j], budget) - head.mul(M[k][j], budget)
                if trivial_prev:
                    M[i][j] = num
                else:
                    q = poly_div_exact(num, prev, budget)
                    assert q is not None, "Bareiss division must be exact"
                    M[i][j] = q
            M[i][k] = Polynomial.zero()
        prev = pivot

    det = M[n - 1][n - 1]
    if det.is_zero():
        raise SingularSystem("zero determinant")

    # Fraction-free back substitution: y_i = x_i * det stays polynomial.
    y: list = [None] * n
    for i in range(n - 1, -1, -1):
        acc = det.mul(M[i][n], budget)
        for j in range(i + 1, n):
            acc = acc - M[i][j].mul(y[j], budget)
        q = poly_div_exact(acc, M[i][i], budget)
        assert q is not None, "back-substitution division must be exact"
        y[i] = q

    out: dict = {}
    for i, label in enumerate(system.unknowns):
        out[label] = _reduced(y[i], det, budget)
    return out


def _reduced(num: Polynomial, den: Polynomial, budget: WorkBudget) -> RationalFunc:
    """GCD-cancel one solution component, screening trivial cases first.

    Exhausting the budget inside the gcd leaves the component unreduced but
    exact, mirroring simplify(); only elimination work aborts the solve.
    """
    if num.is_zero():
        return RationalFunc.zero()
    raw = RationalFunc(num, den)
    if gcd_is_probably_trivial(raw.num, raw.den):
        return raw
    try:
        g = poly_gcd(raw.num, raw.den, budget)
    except WorkBudgetExceeded:
        return RationalFunc(raw.num, raw.den, unsimplified=True)
    if not (g.is_const() and abs(g.const_value()) == 1):
        qn = poly_div_exact(raw.num, g)
        qd = poly_div_exact(raw.den, g)
        assert qn is not None and qd is not None
        return RationalFunc(qn, qd)
    return raw


def solve_nodes(netlist: Netlist, budget: WorkBudget | None = None) -> dict:
    """Node voltages only: map node id -> RationalFunc (ground omitted)."""
    system = stamp(netlist)
    solution = solve(system, budget)
    out = {}
    for node, i in system.node_index.items():
        out[node] = solution[system.unknowns[i]]
    return out


def _independent_sources(netlist: Netlist) -> list:
    return [
        c
        for c in netlist.components
        if c.kind in (ComponentKind.VSOURCE, ComponentKind.ISOURCE)
    ]


def transfer_function(
    netlist: Netlist,
    output: str | tuple,
    budget: WorkBudget | None = None,
) -> RationalFunc:
    """H(s) from the single independent source to the named output.

    ``output`` is a component name or an explicit (node+, node-) pair; for a
    component the polarity is V(first listed node) - V(second listed node).
    The source waveform cancels, so step and ac inputs give the same H.
    """
    sources = _independent_sources(netlist)
    if len(sources) != 1:
        raise MnaError(
            f"transfer function needs exactly one independent source, got {len(sources)}"
        )
    source = sources[0]
    if isinstance(output, str):
        out_nodes = netlist.by_name(output).conduction_nodes()
    else:
        out_nodes = tuple(output)

    voltages = solve_nodes(netlist, budget)
    zero = RationalFunc.zero()
    v_plus = voltages.get(out_nodes[0], zero) if out_nodes[0] != GROUND else zero
    v_minus = voltages.get(out_nodes[1], zero) if out_nodes[1] != GROUND else zero
    v_in = _source_transform(source)
    h = (v_plus - v_minus) / v_in
    return simplify(h, budget)


# ---------------------------------------------------------------------------
# Numeric oracle: an independent floating-point nodal solve
# ---------------------------------------------------------------------------


def _numeric_value(token: str, values: dict) -> complex:
    if token[0].isdigit():
        return complex(float(Fraction(token)))
    try:
        return complex(values[token])
    except KeyError:
        raise MnaError(f"no numeric value supplied for symbol {token!r}") from None


def numeric_solve(netlist: Netlist, values: dict, s: complex) -> dict:
    """Complex nodal solution at one frequency point; map node -> voltage.

    Built directly from the netlist with its own stamping pass so it serves
    as an oracle for the symbolic path.
    """
    for comp in netlist.components:
        if comp.kind is ComponentKind.OPAMP:
            raise UnsupportedKind(f"{comp.name}: expand op-amp templates first")

    nodes = [nd for nd in netlist.nodes() if nd != GROUND]
    index = {nd: i for i, nd in enumerate(nodes)}
    sensed = {c.control for c in netlist.components if c.control is not None}
    branch: dict = {}
    size = len(nodes)
    for comp in netlist.components:
        if _needs_branch_current(comp, sensed):
            branch[comp.name] = size
            size += 1

    A = np.zeros((size, size), dtype=complex)
    rhs = np.zeros(size, dtype=complex)

    def at(node: str) -> int | None:
        return index.get(node)

    def source_value(comp: Component) -> complex:
        wf = comp.waveform()
        amp = _numeric_value(wf.amplitude, values)
        return amp / s if wf.kind == "step" else amp

    for comp in netlist.components:
        a_node, b_node = comp.conduction_nodes()
        ia, ib = at(a_node), at(b_node)
        kind = comp.kind
        if kind in (ComponentKind.R, ComponentKind.C) and comp.name not in sensed:
            val = _numeric_value(comp.value, values)
            g = (1.0 / val) if kind is ComponentKind.R else s * val
            if ia is not None:
                A[ia, ia] += g
            if ib is not None:
                A[ib, ib] += g
            if ia is not None and ib is not None:
                A[ia, ib] -= g
                A[ib, ia] -= g
        elif kind in (ComponentKind.R, ComponentKind.C, ComponentKind.L):
            k = branch[comp.name]
            if ia is not None:
                A[ia, k] += 1
            if ib is not None:
                A[ib, k] -= 1
            val = _numeric_value(comp.value, values)
            if kind is ComponentKind.C:
                if ia is not None:
                    A[k, ia] += s * val
                if ib is not None:
                    A[k, ib] -= s * val
                A[k, k] -= 1
            else:
                if ia is not None:
                    A[k, ia] += 1
                if ib is not None:
                    A[k, ib] -= 1
                A[k, k] -= (s * val) if kind is ComponentKind.L else val
        elif kind is ComponentKind.VSOURCE:
            k = branch[comp.name]
            if ia is not None:
                A[ia, k] += 1
                A[k, ia] += 1
            if ib is not None:
                A[ib, k] -= 1
                A[k, ib] -= 1
            rhs[k] += source_value(comp)
        elif kind is ComponentKind.ISOURCE:
            j = source_value(comp)
            if ia is not None:
                rhs[ia] -= j
            if ib is not None:
                rhs[ib] += j
        elif kind is ComponentKind.VCVS:
            k = branch[comp.name]
            gain = _numeric_value(comp.value, values)
            ic, idn = at(comp.nodes[2]), at(comp.nodes[3])
            if ia is not None:
                A[ia, k] += 1
                A[k, ia] += 1
            if ib is not None:
                A[ib, k] -= 1
                A[k, ib] -= 1
            if ic is not None:
                A[k, ic] -= gain
            if idn is not None:
                A[k, idn] += gain
        elif kind is ComponentKind.VCCS:
            gain = _numeric_value(comp.value, values)
            ic, idn = at(comp.nodes[2]), at(comp.nodes[3])
            for out_i, sgn in ((ia, 1), (ib, -1)):
                if out_i is None:
                    continue
                if ic is not None:
                    A[out_i, ic] += sgn * gain
                if idn is not None:
                    A[out_i, idn] -= sgn * gain
        elif kind is ComponentKind.CCVS:
            k = branch[comp.name]
            ks = branch[comp.control]
            gain = _numeric_value(comp.value, values)
            if ia is not None:
                A[ia, k] += 1
                A[k, ia] += 1
            if ib is not None:
                A[ib, k] -= 1
                A[k, ib] -= 1
            A[k, ks] -= gain
        elif kind is ComponentKind.CCCS:
            ks = branch[comp.control]
            gain = _numeric_value(comp.value, values)
            if ia is not None:
                A[ia, ks] += gain
            if ib is not None:
                A[ib, ks] -= gain
        else:
            raise UnsupportedKind(f"{comp.name}: cannot stamp kind {kind}")

    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericallySingular(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise NumericallySingular("non-finite solution")
    out = {GROUND: 0j}
    for node, i in index.items():
        out[node] = complex(x[i])
    return out
