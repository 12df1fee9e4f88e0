import pytest

from circuitbench.netlist import (
    Component,
    ComponentKind,
    Netlist,
    NetlistError,
    SourceWaveform,
    parse_netlist,
    serialize,
    validate,
)

from samples import BRIDGE_NETLIST, OPAMP_NETLIST, VCVS_NETLIST


def test_parse_resistor_line():
    net = parse_netlist("R5 1 0 R5\nV1 1 0 step\n")
    r5 = net.by_name("R5")
    assert r5.kind is ComponentKind.R
    assert r5.nodes == ("1", "0")
    assert r5.value == "R5"


def test_parse_vcvs_line():
    net = parse_netlist(VCVS_NETLIST)
    e1 = net.by_name("E1")
    assert e1.kind is ComponentKind.VCVS
    assert e1.conduction_nodes() == ("3", "2")
    assert e1.control_nodes() == ("1", "2")
    assert e1.value == "x_1"


def test_parse_empty_is_error():
    with pytest.raises(NetlistError):
        parse_netlist("")
    with pytest.raises(NetlistError):
        parse_netlist("* just a comment\n\n")


def test_parse_unknown_kind():
    with pytest.raises(NetlistError, match="unknown component kind"):
        parse_netlist("Q1 1 0 Q1\n")


def test_parse_wrong_arity():
    with pytest.raises(NetlistError, match="expected 4 fields"):
        parse_netlist("R1 1 0\n")
    with pytest.raises(NetlistError, match="expected 6 or 7"):
        parse_netlist("E1 1 0 2\n")


def test_parse_duplicate_name():
    with pytest.raises(NetlistError, match="duplicate"):
        parse_netlist("R1 1 0 R1\nR1 2 0 R1\n")


def test_parse_unresolvable_control():
    with pytest.raises(NetlistError, match="unresolvable control"):
        parse_netlist("H1 1 0 R9 H1\nV1 1 0 step\n")


def test_step_waveform_semantics():
    net = parse_netlist("V1 2 3 V1\nV2 1 0 step\nV3 1 0 ac\nR1 1 0 R1\n")
    assert net.by_name("V1").waveform() == SourceWaveform("step", "V1")
    assert net.by_name("V2").waveform() == SourceWaveform("step", "V2")
    assert net.by_name("V3").waveform() == SourceWaveform("ac", "V3")
    assert net.by_name("R1").waveform() is None


def test_roundtrip_bridge_byte_exact():
    net = parse_netlist(BRIDGE_NETLIST)
    assert serialize(net) == BRIDGE_NETLIST
    assert parse_netlist(serialize(net)) == net


def test_roundtrip_opamp_expansion_lines():
    net = parse_netlist(OPAMP_NETLIST)
    assert serialize(net) == OPAMP_NETLIST
    assert "Eint1 6 0 0 31 Ad 0" in serialize(net).splitlines()


def test_roundtrip_vcvs_trailing_zero():
    net = parse_netlist(VCVS_NETLIST)
    assert serialize(net) == VCVS_NETLIST


def test_roundtrip_single_component():
    text = "V1 1 0 step\n"
    assert serialize(parse_netlist(text)) == text


def test_validate_bridge_clean():
    assert validate(parse_netlist(BRIDGE_NETLIST)) == []


def test_validate_vcvs_clean():
    assert validate(parse_netlist(VCVS_NETLIST)) == []


def test_validate_opamp_clean():
    assert validate(parse_netlist(OPAMP_NETLIST)) == []


def test_validate_two_voltage_sources():
    net = parse_netlist("V1 1 0 step\nV2 1 0 step\nR1 1 0 R1\n")
    codes = [v.code for v in validate(net)]
    assert "TooManyVoltageSources" in codes


def test_validate_no_voltage_source():
    net = parse_netlist("R1 1 0 R1\nR2 1 0 R2\n")
    codes = [v.code for v in validate(net)]
    assert "NoVoltageSource" in codes


def test_validate_shorted_component():
    net = parse_netlist("R1 1 1 R1\nV1 1 0 step\nR2 1 0 R2\n")
    codes = [v.code for v in validate(net)]
    assert "ShortedComponent" in codes


def test_validate_low_degree_node():
    net = parse_netlist("V1 1 0 step\nR1 1 2 R1\nR2 1 0 R2\n")
    violations = validate(net)
    assert any(v.code == "LowDegreeNode" and v.subject == "2" for v in violations)


def test_validate_disconnected_island():
    net = parse_netlist(
        "V1 1 0 step\nR1 1 0 R1\nR2 5 6 R2\nR3 5 6 R3\n"
    )
    codes = {v.code for v in validate(net)}
    assert "DisconnectedFromGround" in codes


def test_validate_control_nodes_must_exist():
    net = parse_netlist("V1 1 0 step\nR1 1 0 R1\nE1 1 0 8 9 E1 0\n")
    assert any(v.code == "InvalidControl" for v in validate(net))


def test_validate_is_pure():
    net = parse_netlist("R1 1 1 R1\nV1 1 0 step\nR2 1 0 R2\n")
    assert validate(net) == validate(net)


def test_validate_senseable_kinds():
    net = parse_netlist(
        "V1 1 0 step\nR1 1 2 R1\nI1 2 0 I1\nF1 2 0 I1 F1\nR2 2 0 R2\n"
    )
    assert any(
        v.code == "InvalidControl" and v.subject == "F1" for v in validate(net)
    )


def test_opamp_marker_is_not_serializable():
    comp = Component("X1", ComponentKind.OPAMP, ("1", "2"), "X1")
    net = Netlist((comp,))
    with pytest.raises(NetlistError):
        serialize(net)
