"""Stochastic-weight generators and their trainer networks.

The convolution weights of the classifier are never trained directly:
each forward pass draws them from a generator.  The quantum generator
feeds a noise vector into a parametrized circuit and reads per-qubit
expectation values; the classical benchmark generator is a minimal MLP
fed with the same kind of noise.  Both emit weight samples in chunks of
4 values (one circuit pass each); 16 chunks assemble the 16 2x2 kernels.

The trainers are a prior over chunks and a discriminator that learns to
tell generated chunks from prior chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .statevector import (
    CircuitTemplate,
    _shift_terms,
    parameter_shift_grad,
    run_circuit_batch,
)

N_CHUNKS = 16
CHUNK_DIM = 4
KERNEL_SHAPE = (16, 2, 2)

_SHIFT_EPS = 1e-7  # discriminator outputs are clamped into (eps, 1-eps)


# --- noise and prior ---------------------------------------------------------


@dataclass(frozen=True)
class NoiseLaw:
    """Distribution of the embedding angles: uniform on [0, 2pi) or
    gaussian(mu, sigma)."""

    kind: str = "uniform"
    dim: int = CHUNK_DIM
    mu: float = math.pi
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise ValueError(f"unknown noise law {self.kind!r}")
        if self.dim < 1:
            raise ValueError("noise dimension must be positive")


def sample_noise(rng: np.random.Generator, law: NoiseLaw) -> np.ndarray:
    """One noise vector of shape (law.dim,)."""
    return sample_noise_block(rng, law, 1)[0]


def sample_noise_block(rng: np.random.Generator, law: NoiseLaw, count: int) -> np.ndarray:
    """``count`` i.i.d. noise vectors as a (count, dim) array."""
    if law.kind == "uniform":
        return rng.uniform(0.0, 2.0 * math.pi, size=(count, law.dim))
    return rng.normal(law.mu, law.sigma, size=(count, law.dim))


@dataclass(frozen=True)
class PriorSpec:
    """Chunk prior: uniform on [-1, 1] or a gaussian clipped into it."""

    law: str = "uniform"
    mu: float = 0.0
    sigma: float = 0.5
    dim: int = CHUNK_DIM

    def __post_init__(self):
        if self.law not in ("uniform", "clipped-gaussian"):
            raise ValueError(f"unknown prior law {self.law!r}")


def prior_sample(spec: PriorSpec, rng: np.random.Generator) -> np.ndarray:
    return prior_sample_block(spec, rng, 1)[0]


def prior_sample_block(spec: PriorSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    if spec.law == "uniform":
        return rng.uniform(-1.0, 1.0, size=(count, spec.dim))
    raw = rng.normal(spec.mu, spec.sigma, size=(count, spec.dim))
    return np.clip(raw, -1.0, 1.0)


# --- weight samples ----------------------------------------------------------


@dataclass
class WeightSample:
    """One draw of all stochastic convolution weights.

    ``chunks`` holds the raw per-pass generator outputs, row k being the
    4 values of pass k; ``noise`` the noise vectors that produced them.
    """

    chunks: np.ndarray
    noise: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return self.chunks.reshape(-1)

    @property
    def kernels(self) -> np.ndarray:
        return self.chunks.reshape(KERNEL_SHAPE)

    @classmethod
    def from_flat(cls, flat: np.ndarray, noise: np.ndarray) -> "WeightSample":
        return cls(np.asarray(flat, dtype=np.float64).reshape(N_CHUNKS, CHUNK_DIM), noise)


# --- generators ---------------------------------------------------------------


class QuantumWeightSampler:
    """Noise -> PQC -> per-qubit expectations, one chunk per circuit pass.

    All stochasticity lives in the noise source: for fixed angles and
    fixed noise the output is deterministic, which is what lets the
    parameter-shift rule differentiate through the sampler.
    """

    def __init__(self, template: CircuitTemplate, theta: np.ndarray,
                 noise_law: NoiseLaw | None = None, n_chunks: int = N_CHUNKS):
        if template.n_qubits != CHUNK_DIM:
            raise ValueError(f"sampler template must have {CHUNK_DIM} outputs")
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (template.param_slots,):
            raise ValueError(
                f"theta must have {template.param_slots} entries, got {theta.shape}"
            )
        self.template = template
        self.theta = ad.Tensor(theta, requires_grad=True)
        self.noise_law = noise_law or NoiseLaw(dim=template.input_slots)
        if self.noise_law.dim != template.input_slots:
            raise ValueError("noise dimension must match the template's input slots")
        self.n_chunks = n_chunks
        self._plan: tuple[np.ndarray, np.ndarray] | None = None

    def expectations(self, noise: np.ndarray) -> np.ndarray:
        """Chunk matrix for given noise rows, shape (rows, 4)."""
        return run_circuit_batch(self.template, self.theta.data, noise)

    def sample(self, rng: np.random.Generator) -> WeightSample:
        noise = sample_noise_block(rng, self.noise_law, self.n_chunks)
        return WeightSample(self.expectations(noise), noise)

    def _shift_plan(self) -> tuple[np.ndarray, np.ndarray]:
        """Shift offsets (R, P) and combination weights (R, P), cached."""
        if self._plan is None:
            slot_kind = {}
            for gate in self.template.gates:
                for ref in gate.angles:
                    if ref[0] == "p":
                        slot_kind[ref[1]] = gate.kind
            offsets, weights = [], []
            p = self.template.param_slots
            for j in range(p):
                for shift, weight in _shift_terms(slot_kind[j]):
                    row = np.zeros(p)
                    row[j] = shift
                    offsets.append(row)
                    wrow = np.zeros(p)
                    wrow[j] = weight
                    weights.append(wrow)
            self._plan = (np.array(offsets), np.array(weights))
        return self._plan

    def jacobian(self, noise: np.ndarray) -> np.ndarray:
        """d(chunk)/d(theta) for every noise row: (rows, 4, param_slots).

        Evaluates all shifted circuits for all rows in one batched run;
        row-wise it agrees with parameter_shift_grad.
        """
        noise = np.asarray(noise, dtype=np.float64)
        offsets, weights = self._shift_plan()
        r = offsets.shape[0]
        if r == 0:
            return np.zeros((noise.shape[0], CHUNK_DIM, 0))
        shifted = self.theta.data[None, :] + offsets  # (R, P)
        params_big = np.tile(shifted, (noise.shape[0], 1))
        inputs_big = np.repeat(noise, r, axis=0)
        evals = run_circuit_batch(self.template, params_big, inputs_big)
        evals = evals.reshape(noise.shape[0], r, CHUNK_DIM)
        return np.einsum("crq,rp->cqp", evals, weights)

    def grad_single(self, noise_row: np.ndarray) -> np.ndarray:
        """Reference (4, P) Jacobian via the unbatched shift-rule path."""
        return parameter_shift_grad(self.template, self.theta.data, noise_row)

    def parameters(self) -> list[ad.Tensor]:
        return [self.theta]

    def named_tensors(self) -> dict[str, ad.Tensor]:
        return {"theta": self.theta}


def _init_dense(rng: np.random.Generator, out_dim: int, in_dim: int,
                scale: float | None = None) -> tuple[ad.Tensor, ad.Tensor]:
    scale = scale if scale is not None else 1.0 / math.sqrt(in_dim)
    w = ad.Tensor(rng.normal(0.0, scale, size=(out_dim, in_dim)), requires_grad=True)
    b = ad.Tensor(np.zeros(out_dim), requires_grad=True)
    return w, b


class ClassicalWeightSampler:
    """Benchmark generator: a 4 -> 8 -> 4 MLP with tanh squashing.

    Mirrors the quantum sampler's geometry exactly (16 chunks of 4) so
    the two are interchangeable behind the same training loop.
    """

    def __init__(self, rng: np.random.Generator, noise_law: NoiseLaw | None = None,
                 hidden: int = 8, n_chunks: int = N_CHUNKS):
        self.noise_law = noise_law or NoiseLaw()
        self.w1, self.b1 = _init_dense(rng, hidden, self.noise_law.dim)
        self.w2, self.b2 = _init_dense(rng, CHUNK_DIM, hidden)
        self.n_chunks = n_chunks

    def forward(self, noise: np.ndarray) -> ad.Tensor:
        """Differentiable chunk matrix for given noise rows."""
        h = ad.tanh(ad.dense(ad.Tensor(noise), self.w1, self.b1))
        return ad.tanh(ad.dense(h, self.w2, self.b2))

    def expectations(self, noise: np.ndarray) -> np.ndarray:
        return self.forward(noise).data

    def sample(self, rng: np.random.Generator) -> WeightSample:
        noise = sample_noise_block(rng, self.noise_law, self.n_chunks)
        return WeightSample(self.expectations(noise), noise)

    def parameters(self) -> list[ad.Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    def named_tensors(self) -> dict[str, ad.Tensor]:
        return {"gen_w1": self.w1, "gen_b1": self.b1,
                "gen_w2": self.w2, "gen_b2": self.b2}


# --- discriminator -------------------------------------------------------------


class Discriminator:
    """Binary classifier on 4-value chunks: 4 -> 16 -> 1, sigmoid output.

    Outputs are clamped into (1e-7, 1 - 1e-7) so the logit transform
    stays finite.
    """

    def __init__(self, rng: np.random.Generator, in_dim: int = CHUNK_DIM, hidden: int = 16):
        self.w1, self.b1 = _init_dense(rng, hidden, in_dim)
        self.w2, self.b2 = _init_dense(rng, 1, hidden)

    def forward(self, chunks) -> ad.Tensor:
        """Probabilities for (B, 4) chunk rows, shape (B, 1)."""
        x = chunks if isinstance(chunks, ad.Tensor) else ad.Tensor(chunks)
        h = ad.leaky_relu(ad.dense(x, self.w1, self.b1), slope=0.01)
        return ad.sigmoid(ad.dense(h, self.w2, self.b2), clamp_eps=_SHIFT_EPS)

    def prob(self, chunk: np.ndarray) -> float:
        """Scalar probability for a single 4-vector."""
        return float(self.forward(np.asarray(chunk)[None, :]).data[0, 0])

    def parameters(self) -> list[ad.Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    def named_tensors(self) -> dict[str, ad.Tensor]:
        return {"disc_w1": self.w1, "disc_b1": self.b1,
                "disc_w2": self.w2, "disc_b2": self.b2}


def discriminate(disc: Discriminator, chunk: np.ndarray) -> float:
    """Probability the discriminator assigns to one chunk; in (eps, 1-eps)."""
    return disc.prob(chunk)


def logit(p: float) -> float:
    """log(p / (1 - p)); rejects arguments outside the open unit interval."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit needs p in (0, 1), got {p}")
    return math.log(p / (1.0 - p))
