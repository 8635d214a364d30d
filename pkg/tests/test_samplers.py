import math

import numpy as np
import pytest

from qcbnn import autodiff as ad
from qcbnn.circuits import Architecture, assemble_pqc, build_embedding
from qcbnn.samplers import (
    CHUNK_DIM,
    N_CHUNKS,
    ClassicalWeightSampler,
    Discriminator,
    NoiseLaw,
    PriorSpec,
    QuantumWeightSampler,
    WeightSample,
    discriminate,
    logit,
    prior_sample,
    prior_sample_block,
    sample_noise,
    sample_noise_block,
)
from qcbnn.statevector import CircuitTemplate, parameter_shift_grad

from conftest import finite_difference_grad


def make_quantum_sampler(seed=0, arch=Architecture.CIRCUIT_III):
    template = assemble_pqc(arch, 4)
    theta = np.random.default_rng(seed).uniform(0, 2 * math.pi, template.param_slots)
    return QuantumWeightSampler(template, theta)


class TestNoise:
    def test_same_seed_identical(self):
        law = NoiseLaw()
        a = sample_noise(np.random.default_rng(42), law)
        b = sample_noise(np.random.default_rng(42), law)
        np.testing.assert_array_equal(a, b)

    def test_uniform_mean_near_pi(self):
        draws = sample_noise_block(np.random.default_rng(0), NoiseLaw(), 10_000)
        assert abs(draws.mean() - math.pi) < 0.05

    def test_degenerate_gaussian(self):
        law = NoiseLaw("gaussian", mu=1.25, sigma=0.0)
        draws = sample_noise_block(np.random.default_rng(1), law, 50)
        np.testing.assert_array_equal(draws, np.full((50, 4), 1.25))

    def test_unknown_law(self):
        with pytest.raises(ValueError):
            NoiseLaw("cauchy")


class TestPrior:
    def test_uniform_mean(self):
        draws = prior_sample_block(PriorSpec(), np.random.default_rng(2), 100_000)
        assert np.abs(draws.mean(axis=0)).max() < 0.02

    def test_degenerate_clipped_gaussian(self):
        spec = PriorSpec("clipped-gaussian", mu=0.4, sigma=0.0)
        np.testing.assert_array_equal(
            prior_sample(spec, np.random.default_rng(0)), np.full(4, 0.4)
        )

    def test_always_in_unit_box(self):
        spec = PriorSpec("clipped-gaussian", mu=0.0, sigma=3.0)
        draws = prior_sample_block(spec, np.random.default_rng(3), 10_000)
        assert draws.min() >= -1.0 and draws.max() <= 1.0


class TestWeightSample:
    def test_flat_round_trip(self):
        chunks = np.arange(64.0).reshape(N_CHUNKS, CHUNK_DIM)
        ws = WeightSample(chunks, np.zeros((N_CHUNKS, 4)))
        rebuilt = WeightSample.from_flat(ws.flat, ws.noise)
        np.testing.assert_array_equal(rebuilt.chunks, chunks)

    def test_kernel_geometry(self):
        ws = WeightSample(np.arange(64.0).reshape(16, 4), np.zeros((16, 4)))
        assert ws.kernels.shape == (16, 2, 2)
        np.testing.assert_array_equal(ws.kernels[0].reshape(-1), ws.chunks[0])


class TestQuantumSampler:
    def test_embedding_only_is_deterministic_in_noise(self):
        template = CircuitTemplate(4, build_embedding(4), 0, 4)
        sampler = QuantumWeightSampler(template, np.zeros(0))
        z = np.full((1, 4), 0.3)
        np.testing.assert_array_equal(sampler.expectations(z), sampler.expectations(z))

    def test_all_weights_bounded(self):
        sampler = make_quantum_sampler()
        rng = np.random.default_rng(5)
        for _ in range(1000 // N_CHUNKS + 1):
            ws = sampler.sample(rng)
            assert ws.flat.min() >= -1.0 and ws.flat.max() <= 1.0

    def test_same_stream_position_identical(self):
        sampler = make_quantum_sampler()
        a = sampler.sample(np.random.default_rng(7))
        b = sampler.sample(np.random.default_rng(7))
        np.testing.assert_array_equal(a.chunks, b.chunks)
        np.testing.assert_array_equal(a.noise, b.noise)

    def test_jacobian_matches_shift_rule_rows(self):
        sampler = make_quantum_sampler(seed=1)
        noise = sample_noise_block(np.random.default_rng(8), sampler.noise_law, 3)
        jac = sampler.jacobian(noise)
        for row in range(3):
            reference = parameter_shift_grad(
                sampler.template, sampler.theta.data, noise[row]
            )
            np.testing.assert_allclose(jac[row], reference, atol=1e-12)

    def test_theta_length_validated(self):
        template = assemble_pqc(Architecture.ROMERO, 4)
        with pytest.raises(ValueError, match="theta"):
            QuantumWeightSampler(template, np.zeros(3))


class TestClassicalSampler:
    def test_zero_weights_give_zero_outputs(self):
        sampler = ClassicalWeightSampler(np.random.default_rng(0))
        for p in sampler.parameters():
            p.data = np.zeros_like(p.data)
        ws = sampler.sample(np.random.default_rng(1))
        np.testing.assert_array_equal(ws.chunks, np.zeros((N_CHUNKS, CHUNK_DIM)))

    def test_outputs_bounded_by_tanh(self):
        sampler = ClassicalWeightSampler(np.random.default_rng(2))
        ws = sampler.sample(np.random.default_rng(3))
        assert np.abs(ws.chunks).max() < 1.0

    def test_gradient_matches_finite_differences(self):
        sampler = ClassicalWeightSampler(np.random.default_rng(4))
        noise = sample_noise_block(np.random.default_rng(5), sampler.noise_law, 4)
        target = np.random.default_rng(6).normal(size=(4, CHUNK_DIM))

        def loss_fn():
            diff = ad.add(sampler.forward(noise), -target)
            return ad.summation(ad.mul(diff, diff))

        loss_fn().backward()
        w1_grad = sampler.w1.grad.copy()

        def loss_of_w1(w1_value):
            saved = sampler.w1.data
            sampler.w1.data = w1_value
            value = loss_fn().item()
            sampler.w1.data = saved
            return value

        fd = finite_difference_grad(loss_of_w1, sampler.w1.data)
        np.testing.assert_allclose(w1_grad, fd, rtol=1e-4, atol=1e-7)

    def test_same_geometry_as_quantum(self):
        classical = ClassicalWeightSampler(np.random.default_rng(0))
        quantum = make_quantum_sampler()
        a = classical.sample(np.random.default_rng(1))
        b = quantum.sample(np.random.default_rng(1))
        assert a.chunks.shape == b.chunks.shape == (N_CHUNKS, CHUNK_DIM)
        assert a.kernels.shape == b.kernels.shape == (16, 2, 2)


class TestDiscriminator:
    def test_zero_weights_output_half(self):
        disc = Discriminator(np.random.default_rng(0))
        for p in disc.parameters():
            p.data = np.zeros_like(p.data)
        assert discriminate(disc, np.array([0.3, -0.1, 0.9, 0.0])) == pytest.approx(0.5)

    def test_output_clamped(self):
        disc = Discriminator(np.random.default_rng(1))
        disc.w2.data = np.full_like(disc.w2.data, 1e4)
        disc.b2.data = np.array([1e4])
        p = discriminate(disc, np.ones(4))
        assert p == pytest.approx(1.0 - 1e-7)
        disc.b2.data = np.array([-1e6])
        disc.w2.data = np.zeros_like(disc.w2.data)
        assert discriminate(disc, np.ones(4)) == pytest.approx(1e-7)

    def test_gradient_matches_finite_differences(self):
        disc = Discriminator(np.random.default_rng(2))
        chunks = np.random.default_rng(3).uniform(-1, 1, size=(8, 4))

        def loss_fn():
            return ad.summation(ad.log(disc.forward(chunks)))

        loss_fn().backward()
        got = disc.w1.grad.copy()

        def loss_of_w1(value):
            saved = disc.w1.data
            disc.w1.data = value
            out = loss_fn().item()
            disc.w1.data = saved
            return out

        fd = finite_difference_grad(loss_of_w1, disc.w1.data)
        np.testing.assert_allclose(got, fd, rtol=1e-4, atol=1e-7)


class TestLogit:
    def test_half(self):
        assert logit(0.5) == 0.0

    def test_inverse_sigmoid(self):
        p = 1.0 / (1.0 + math.exp(-1.0))
        assert logit(p) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_boundary(self, p):
        with pytest.raises(ValueError):
            logit(p)
