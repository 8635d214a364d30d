import math

import numpy as np
import pytest

from qcbnn.circuits import Architecture, assemble_pqc
from qcbnn.statevector import (
    CircuitTemplate,
    Gate,
    StateVector,
    apply_gate,
    born_probabilities,
    expectation_z,
    gate_matrix,
    init_state,
    parameter_shift_grad,
    run_circuit,
    run_circuit_batch,
)

from conftest import finite_difference_grad


def rx_template(n=1):
    gates = tuple(Gate("RX", (q,), (("p", q),)) for q in range(n))
    return CircuitTemplate(n, gates, n, 0)


class TestInitState:
    def test_single_qubit(self):
        np.testing.assert_array_equal(init_state(1).amplitudes, [1, 0])

    def test_two_qubits(self):
        np.testing.assert_array_equal(init_state(2).amplitudes, [1, 0, 0, 0])

    @pytest.mark.parametrize("n", [0, 13, -1])
    def test_budget(self, n):
        with pytest.raises(ValueError, match="qubit budget exceeded"):
            init_state(n)


class TestApplyGate:
    def test_rx_pi_flips(self):
        state = apply_gate(init_state(1), Gate("RX", (0,), (("p", 0),)), [math.pi])
        np.testing.assert_allclose(state.amplitudes, [0, -1j], atol=1e-12)

    def test_hadamard(self):
        state = apply_gate(init_state(1), Gate("H", (0,)), [])
        np.testing.assert_allclose(state.amplitudes, [1, 1] / np.sqrt(2), atol=1e-12)

    def test_cnot_builds_bell_state(self):
        plus = StateVector(2, np.array([1, 0, 1, 0]) / np.sqrt(2))
        state = apply_gate(plus, Gate("CNOT", (0, 1)), [])
        np.testing.assert_allclose(
            state.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-12
        )

    def test_angle_count_mismatch(self):
        with pytest.raises(ValueError, match="angle"):
            apply_gate(init_state(1), Gate("RX", (0,), (("p", 0),)), [0.1, 0.2])

    def test_target_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            apply_gate(init_state(1), Gate("RX", (1,), (("p", 0),)), [0.1])

    def test_gate_validation(self):
        with pytest.raises(ValueError, match="unknown gate kind"):
            Gate("SWAP", (0, 1))
        with pytest.raises(ValueError, match="distinct"):
            Gate("CNOT", (1, 1))
        with pytest.raises(ValueError, match="target"):
            Gate("CNOT", (0,))

    def test_u3_is_phased_zyz_product(self):
        # independent oracle: U3(t,p,l) = e^{i(p+l)/2} RZ(p) RY(t) RZ(l)
        rng = np.random.default_rng(7)
        for _ in range(20):
            t, p, l = rng.uniform(-2 * math.pi, 2 * math.pi, 3)
            rz = lambda a: np.diag([np.exp(-1j * a / 2), np.exp(1j * a / 2)])
            ry = np.array([[math.cos(t / 2), -math.sin(t / 2)],
                           [math.sin(t / 2), math.cos(t / 2)]])
            expected = np.exp(1j * (p + l) / 2) * rz(p) @ ry @ rz(l)
            got = gate_matrix("U3", np.array([t, p, l]))
            np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_zz_is_diagonal_phase(self):
        theta = 0.73
        got = gate_matrix("ZZ", np.array([theta]))
        expected = np.diag(np.exp(-1j * theta / 2 * np.array([1, -1, -1, 1])))
        np.testing.assert_allclose(got, expected, atol=1e-12)


class TestExpectations:
    def test_ground_state(self):
        assert expectation_z(init_state(1), 0) == 1.0

    def test_flipped_state(self):
        state = apply_gate(init_state(1), Gate("RX", (0,), (("p", 0),)), [math.pi])
        assert expectation_z(state, 0) == pytest.approx(-1.0, abs=1e-12)

    def test_equator(self):
        state = apply_gate(init_state(1), Gate("RX", (0,), (("p", 0),)), [math.pi / 2])
        assert expectation_z(state, 0) == pytest.approx(0.0, abs=1e-12)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            expectation_z(init_state(2), 2)


class TestBornProbabilities:
    def test_plus_state(self):
        state = StateVector(1, np.array([1, 1]) / np.sqrt(2))
        np.testing.assert_allclose(born_probabilities(state), [0.5, 0.5], atol=1e-12)

    def test_ground(self):
        np.testing.assert_array_equal(born_probabilities(init_state(2)), [1, 0, 0, 0])

    def test_random_circuits_sum_to_one(self):
        for state in _random_states(np.random.default_rng(11), count=100):
            assert abs(born_probabilities(state).sum() - 1.0) < 1e-10


def _random_states(rng, count, max_qubits=4, max_gates=20):
    kinds_1q = ["H", "RX", "RY", "RZ", "PHASE", "U3"]
    kinds_2q = ["CNOT", "CRX", "CRY", "CRZ", "ZZ"]
    for _ in range(count):
        n = int(rng.integers(2, max_qubits + 1))
        state = init_state(n)
        for _ in range(int(rng.integers(5, max_gates))):
            if rng.random() < 0.5:
                kind = kinds_1q[rng.integers(len(kinds_1q))]
                targets = (int(rng.integers(n)),)
            else:
                kind = kinds_2q[rng.integers(len(kinds_2q))]
                targets = tuple(rng.choice(n, size=2, replace=False).astype(int))
            n_angles = {"H": 0, "CNOT": 0, "U3": 3}.get(kind, 1)
            gate = Gate(kind, targets, tuple(("p", i) for i in range(n_angles)))
            state = apply_gate(state, gate, rng.uniform(0, 2 * math.pi, n_angles))
        yield state


class TestInvariants:
    def test_norm_preserved_by_random_sequences(self):
        for state in _random_states(np.random.default_rng(5), count=60):
            assert abs(state.norm() - 1.0) < 1e-12

    def test_gate_then_inverse_restores_state(self):
        rng = np.random.default_rng(3)
        inverses = {
            "H": lambda a: ("H", a),
            "CNOT": lambda a: ("CNOT", a),
            "RX": lambda a: ("RX", -a),
            "RY": lambda a: ("RY", -a),
            "RZ": lambda a: ("RZ", -a),
            "PHASE": lambda a: ("PHASE", -a),
            "ZZ": lambda a: ("ZZ", -a),
            "CRX": lambda a: ("CRX", -a),
            "CRY": lambda a: ("CRY", -a),
            "CRZ": lambda a: ("CRZ", -a),
            "U3": lambda a: ("U3", np.array([-a[0], -a[2], -a[1]])),
        }
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        amps /= np.linalg.norm(amps)
        base = StateVector(2, amps)
        for kind, inv in inverses.items():
            n_targets, n_angles = (2, 1) if kind in ("CNOT", "CRX", "CRY", "CRZ", "ZZ") else (1, 1)
            if kind in ("H", "CNOT"):
                n_angles = 0
            if kind == "U3":
                n_angles = 3
            targets = (0, 1)[:n_targets]
            gate = Gate(kind, targets, tuple(("p", i) for i in range(n_angles)))
            angles = rng.uniform(-math.pi, math.pi, n_angles)
            inv_kind, inv_angles = inv(angles if kind == "U3" else (angles[0] if n_angles else angles))
            inv_gate = Gate(inv_kind, targets, tuple(("p", i) for i in range(n_angles)))
            mid = apply_gate(base, gate, angles)
            back = apply_gate(mid, inv_gate, np.atleast_1d(inv_angles) if n_angles else [])
            np.testing.assert_allclose(back.amplitudes, base.amplitudes, atol=1e-12)


class TestRunCircuit:
    def test_empty_template(self):
        template = CircuitTemplate(4, (), 0, 0)
        np.testing.assert_array_equal(run_circuit(template, [], []), [1, 1, 1, 1])

    def test_rx_layer(self):
        template = rx_template(4)
        out = run_circuit(template, [math.pi, 0, math.pi, 0], [])
        np.testing.assert_allclose(out, [-1, 1, -1, 1], atol=1e-12)

    def test_romero_outputs_bounded(self):
        template = assemble_pqc(Architecture.ROMERO, 4)
        rng = np.random.default_rng(0)
        params = rng.uniform(0, 2 * math.pi, (1000, template.param_slots))
        inputs = rng.uniform(0, 2 * math.pi, (1000, template.input_slots))
        out = run_circuit_batch(template, params, inputs)
        assert out.min() >= -1.0 and out.max() <= 1.0

    def test_slot_count_mismatch(self):
        template = rx_template(2)
        with pytest.raises(ValueError, match="expected 2 params"):
            run_circuit(template, [0.1], [])

    def test_pure_function(self):
        template = assemble_pqc(Architecture.CIRCUIT_III, 4)
        rng = np.random.default_rng(1)
        params = rng.uniform(0, 2 * math.pi, template.param_slots)
        inputs = rng.uniform(0, 2 * math.pi, template.input_slots)
        first = run_circuit(template, params, inputs)
        second = run_circuit(template, params, inputs)
        np.testing.assert_array_equal(first, second)

    def test_batch_matches_single(self):
        template = assemble_pqc(Architecture.CIRCUIT_II, 4)
        rng = np.random.default_rng(2)
        params = rng.uniform(0, 2 * math.pi, (8, template.param_slots))
        inputs = rng.uniform(0, 2 * math.pi, (8, template.input_slots))
        batch = run_circuit_batch(template, params, inputs)
        for b in range(8):
            np.testing.assert_allclose(
                batch[b], run_circuit(template, params[b], inputs[b]), atol=1e-13
            )


class TestParameterShift:
    def test_rx_at_zero(self):
        grad = parameter_shift_grad(rx_template(), [0.0], [])
        assert grad[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_rx_at_quarter_turn(self):
        grad = parameter_shift_grad(rx_template(), [math.pi / 2], [])
        assert grad[0, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_circuit_iii_matches_finite_differences(self):
        template = assemble_pqc(Architecture.CIRCUIT_III, 4)
        rng = np.random.default_rng(42)
        for _ in range(50):
            params = rng.uniform(0, 2 * math.pi, template.param_slots)
            inputs = rng.uniform(0, 2 * math.pi, template.input_slots)
            grad = parameter_shift_grad(template, params, inputs)
            fd = finite_difference_grad(
                lambda p: run_circuit(template, p, inputs), params
            )
            assert np.abs(grad - fd).max() < 1e-5

    def test_grad_shape(self):
        template = assemble_pqc(Architecture.MATIC_II, 4)
        grad = parameter_shift_grad(
            template, np.zeros(template.param_slots), np.zeros(4)
        )
        assert grad.shape == (4, template.param_slots)
