"""Tour of the dense statevector simulator.

Builds a few textbook states, reads out Born probabilities and Z
expectations, and checks an analytic parameter-shift gradient against
finite differences.
"""

import math

import numpy as np

from qcbnn.statevector import (
    CircuitTemplate,
    Gate,
    apply_gate,
    born_probabilities,
    expectation_z,
    init_state,
    parameter_shift_grad,
    run_circuit,
)

# |0> -> H -> CNOT gives the Bell state (|00> + |11>) / sqrt(2)
state = init_state(2)
state = apply_gate(state, Gate("H", (0,)), [])
state = apply_gate(state, Gate("CNOT", (0, 1)), [])
print("Bell amplitudes:", np.round(state.amplitudes, 6))
print("Born probabilities:", np.round(born_probabilities(state), 6))
print("<Z_0> =", expectation_z(state, 0), " <Z_1> =", expectation_z(state, 1))

# A one-parameter circuit: <Z> after RX(theta) is cos(theta)
template = CircuitTemplate(1, (Gate("RX", (0,), (("p", 0),)),), 1, 0)
for theta in (0.0, math.pi / 3, math.pi / 2, math.pi):
    out = run_circuit(template, [theta], [])[0]
    print(f"RX({theta:.3f}): <Z> = {out:+.6f}   cos = {math.cos(theta):+.6f}")

# The parameter-shift rule recovers d<Z>/dtheta = -sin(theta) exactly
theta = 0.9
grad = parameter_shift_grad(template, [theta], [])[0, 0]
h = 1e-6
fd = (run_circuit(template, [theta + h], [])[0]
      - run_circuit(template, [theta - h], [])[0]) / (2 * h)
print(f"shift-rule gradient {grad:+.8f}, finite difference {fd:+.8f}, "
      f"analytic {-math.sin(theta):+.8f}")
