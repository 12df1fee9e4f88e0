import random

import pytest

from circuitbench.mna import (
    MnaError,
    SingularSystem,
    UnsupportedKind,
    complexity_score,
    numeric_solve,
    solve,
    solve_nodes,
    stamp,
    transfer_function,
    work_budget_for,
)
from circuitbench.netlist import (
    Component,
    ComponentKind,
    Netlist,
    parse_netlist,
)
from circuitbench.symexpr import (
    RationalFunc,
    WorkBudget,
    WorkBudgetExceeded,
    eval_numeric,
    format_canonical,
    parse_rational,
)

from samples import (
    BRIDGE_NETLIST,
    BRIDGE_NODE2,
    OPAMP_NETLIST,
    OPAMP_NODE3,
    VCVS_NETLIST,
    VCVS_TF,
)


def test_stamp_single_loop_is_2x2():
    system = stamp(parse_netlist("V1 1 0 step\nR1 1 0 R1\n"))
    assert system.size == 2
    assert system.unknowns == ["Vn1", "I_V1"]
    sol = solve(system)
    assert sol["Vn1"] == parse_rational("V1/s")


def test_solve_bridge_node2():
    sol = solve_nodes(parse_netlist(BRIDGE_NETLIST))
    assert sol["2"] == parse_rational(BRIDGE_NODE2)


def test_solve_voltage_divider():
    sol = solve_nodes(parse_netlist("V1 1 0 ac\nR1 1 2 R1\nR2 2 0 R2\n"))
    assert sol["2"] == parse_rational("V1*R2/(R1+R2)")


def test_solve_residual_is_zero():
    system = stamp(parse_netlist(BRIDGE_NETLIST))
    sol = solve(system)
    x = [sol[u] for u in system.unknowns]
    for i in range(system.size):
        acc = RationalFunc.zero()
        for j in range(system.size):
            acc = acc + system.matrix[i][j] * x[j]
        assert (acc - system.rhs[i]).is_zero()


def test_opamp_system_contains_gain_symbol():
    system = stamp(parse_netlist(OPAMP_NETLIST))
    assert any("Ad" in entry.symbols() for row in system.matrix for entry in row)


def test_solve_opamp_node3():
    sol = solve_nodes(parse_netlist(OPAMP_NETLIST))
    assert sol["3"].equivalent(parse_rational(OPAMP_NODE3))


def test_transfer_function_vcvs_polarity():
    h = transfer_function(parse_netlist(VCVS_NETLIST), "R1")
    assert h.equivalent(parse_rational(VCVS_TF))


def test_transfer_function_rc_lowpass():
    net = parse_netlist("V1 1 0 step\nR1 1 2 R1\nC1 2 0 C1\n")
    h = transfer_function(net, "C1")
    assert h == parse_rational("1/(R1*C1*s+1)")


def test_transfer_function_at_source_is_unity():
    net = parse_netlist("V1 1 0 step\nR1 1 2 R1\nC1 2 0 C1\n")
    assert transfer_function(net, "V1") == parse_rational("1")


def test_transfer_function_waveform_invariant():
    step = parse_netlist("V1 1 0 step\nR1 1 2 R1\nC1 2 0 C1\nL1 2 0 L1\n")
    ac = parse_netlist("V1 1 0 ac\nR1 1 2 R1\nC1 2 0 C1\nL1 2 0 L1\n")
    assert transfer_function(step, "C1") == transfer_function(ac, "C1")


def test_transfer_function_requires_single_source():
    net = parse_netlist("V1 1 0 step\nR1 1 2 R1\nI1 2 0 I1\nR2 2 0 R2\n")
    with pytest.raises(MnaError):
        transfer_function(net, "R2")


def test_stamp_rejects_opamp_macro():
    net = Netlist(
        (
            Component("X1", ComponentKind.OPAMP, ("1", "0"), "X1"),
            Component("V1", ComponentKind.VSOURCE, ("1", "0"), "step"),
        )
    )
    with pytest.raises(UnsupportedKind):
        stamp(net)


def test_singular_system_detected():
    net = parse_netlist("V1 1 0 step\nV2 1 0 step\nR1 1 0 R1\n")
    with pytest.raises(SingularSystem):
        solve(stamp(net))


def test_work_budget_exceeded():
    with pytest.raises(WorkBudgetExceeded):
        solve(stamp(parse_netlist(BRIDGE_NETLIST)), budget=WorkBudget(10))


def test_complexity_score_weights():
    net = parse_netlist(OPAMP_NETLIST)
    # 11 components, 1 controlled source, 4 reactive elements
    assert complexity_score(net) == 11 + 2 * 1 + 3 * 4
    assert work_budget_for(net).limit > 1_000_000


def test_numeric_divider():
    net = parse_netlist("V1 1 0 ac\nR1 1 2 R1\nR2 2 0 R2\n")
    got = numeric_solve(net, {"R1": 1.0, "R2": 1.0, "V1": 1.0}, s=1.0)
    assert abs(got["2"] - 0.5) < 1e-12


def test_numeric_bridge_known_point():
    net = parse_netlist(BRIDGE_NETLIST)
    values = {f"R{i}": 1.0 for i in range(1, 9)}
    values["V1"] = 1.0
    got = numeric_solve(net, values, s=2.0)
    # published closed form: V1*(R5+R6)/(s*(R1+R5+R6)) = 2/(2*3)
    assert abs(got["2"] - 1.0 / 3.0) < 1e-12


def test_numeric_matches_symbolic_rlc():
    net = parse_netlist(
        "V1 1 0 step\nR1 1 2 R1\nL1 2 3 L1\nC1 3 0 C1\nR2 3 0 R2\nC2 2 0 C2\n"
    )
    sol = solve_nodes(net)
    rng = random.Random(77)
    for _ in range(10):
        values = {k: rng.uniform(0.1, 10.0) for k in ("R1", "R2", "L1", "C1", "C2", "V1")}
        s = complex(rng.uniform(0.1, 10), rng.uniform(-10, 10))
        num = numeric_solve(net, values, s)
        assign = dict(values)
        assign["s"] = s
        for node, rf in sol.items():
            sym = eval_numeric(rf, assign)
            assert abs(sym - num[node]) <= 1e-9 * max(1.0, abs(num[node]))


def test_numeric_conjugate_symmetry():
    net = parse_netlist(BRIDGE_NETLIST)
    values = {f"R{i}": float(i) for i in range(1, 9)}
    values["V1"] = 2.0
    s = 1.5 + 2.25j
    up = numeric_solve(net, values, s)
    down = numeric_solve(net, values, s.conjugate())
    for node in up:
        assert abs(up[node].conjugate() - down[node]) < 1e-9


def test_controlled_source_stamps_cross_checked():
    # One of each dependent kind, cross-checked against the numeric oracle.
    net = parse_netlist(
        "V1 1 0 step\n"
        "R1 1 2 R1\n"
        "R2 2 0 R2\n"
        "E1 3 0 2 0 E1 0\n"
        "R3 3 4 R3\n"
        "G1 4 0 2 0 G1 0\n"
        "H1 5 0 R1 H1\n"
        "R4 4 0 R4\n"
        "R5 5 4 R5\n"
        "F1 5 0 R3 F1\n"
    )
    sol = solve_nodes(net)
    rng = random.Random(5)
    for _ in range(10):
        values = {
            k: rng.uniform(0.2, 5.0)
            for k in ("R1", "R2", "R3", "R4", "R5", "E1", "G1", "H1", "F1", "V1")
        }
        s = complex(rng.uniform(0.1, 5), rng.uniform(-5, 5))
        num = numeric_solve(net, values, s)
        assign = dict(values)
        assign["s"] = s
        for node, rf in sol.items():
            sym = eval_numeric(rf, assign)
            assert abs(sym - num[node]) <= 1e-9 * max(1.0, abs(num[node]))
