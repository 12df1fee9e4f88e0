"""Known-answer test vectors shared by several test modules.

Each entry pairs a netlist (or diagram shape) with an independently verified
closed-form answer, used to pin solver behaviour.
"""

# Resistive bridge driven by a step source between two internal nodes.
# The bridge arm (R2,R3,R4,R7,R8) returns every ampere it takes from the
# source supernode, so the node-2 voltage depends only on R1, R5, R6.
BRIDGE_NETLIST = """\
R5 1 0 R5
R1 0 3 R1
R6 1 2 R6
V1 2 3 V1
R2 3 4 R2
R3 5 2 R3
R4 6 2 R4
R7 5 4 R7
R8 5 6 R8
"""
BRIDGE_NODE2 = "Vn2(s) = V1*(R5 + R6)/(s*(R1 + R5 + R6))"

# RC network with a voltage-controlled voltage source in the forward path.
VCVS_NETLIST = """\
R1 1 2 R1
C1 1 0 C1
E1 3 2 1 2 x_1 0
V1 5 0 step
R2 3 5 R2
"""
# Transfer function from V1 to the voltage across R1 (first-listed node minus
# second-listed node).
VCVS_TF = "H(s) = ((R1*s/(R1*x_1 - R1 - R2))/(s - 1/(C1*R1*x_1 - C1*R1 - C1*R2)))*1"

# RLC front end plus an expanded ideal op-amp block (input resistor Rint1,
# capacitive feedback Cint1, high-gain VCVS Eint1).  The op-amp section hangs
# off ground with no independent drive, so node 3 sees only the RLC part.
OPAMP_NETLIST = """\
R4 1 2 R4
V1 1 0 step
L2 3 2 L2
C1 2 0 C1
R1 3 0 R1
R2 0 5 R2
L1 6 0 L1
R3 6 0 R3
Rint1 5 31 Rint1
Cint1 6 31 Cint1
Eint1 6 0 0 31 Ad 0
"""
OPAMP_NODE3 = "Vn3(s) = R1*V1/(s*(C1*L2*R4*s**2 + C1*R1*R4*s + L2*s + R1 + R4))"

# Feedback block diagram: gain 10/(s^2+2s+1) in the forward path entering the
# summing junction on a minus port, loop closed through 5/(s+2) on a plus port.
FEEDBACK_FORWARD = "10/(s**2 + 2*s + 1)"
FEEDBACK_RETURN = "5/(s + 2)"
FEEDBACK_TF = "(-10/(s^2+2*s+1)) / (1 - 50/((s^2+2*s+1)*(s+2)))"
