"""Adversarial variational-inference training and ensemble prediction.

One training step draws stochastic convolution weights from the
generator, lets the discriminator take a maximization step on its
cross-entropy objective (generated vs prior chunks), then descends the
combined loss

    L = alpha * (-log p(D|w))  +  beta * (logit(d(w)) - log p(D|w)),

where the second bracket is the adversarial estimate of the KL
divergence from the generator distribution to the prior.  Gradients
reach the circuit angles through the parameter-shift Jacobian of the
sampler and reach everything else by backpropagation.

A plain variational-inference baseline (Gaussian weight posterior with
an analytic KL term) shares all the surrounding machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .circuits import Architecture, assemble_pqc
from .samplers import (
    CHUNK_DIM,
    KERNEL_SHAPE,
    N_CHUNKS,
    ClassicalWeightSampler,
    Discriminator,
    NoiseLaw,
    PriorSpec,
    QuantumWeightSampler,
    WeightSample,
    prior_sample_block,
    sample_noise_block,
)
from .seeding import stream


class DivergenceError(RuntimeError):
    """Raised when a loss turns non-finite during training."""


@dataclass
class LossBreakdown:
    """Loss terms of one step; combined = alpha*likelihood + beta*kl."""

    likelihood_term: float
    kl_term: float
    discriminator_loss: float
    alpha: float
    beta: float
    combined: float


@dataclass
class EnsemblePrediction:
    class_probabilities: np.ndarray
    predicted: int
    member_votes: np.ndarray
    ensemble_size: int


@dataclass
class TrainConfig:
    """Everything a seeded training run depends on."""

    epochs: int = 50
    batch_size: int = 10
    alpha: float = 1.0
    beta: float = 1.0
    lr_generator: float = 0.005
    lr_discriminator: float = 0.01
    lr_classifier: float = 0.002
    disc_steps: int = 1
    samples_per_step: int = 1
    n_ensemble: int = 100
    eval_ensemble: int = 8
    seed: int = 0
    sampler: str = "quantum"  # quantum | classical | vi
    arch: Architecture = Architecture.CIRCUIT_III
    layers: int = 1
    reupload: bool = False
    embedding_pairs: str = "adjacent"
    cr_axis: str = "X"
    noise: NoiseLaw = field(default_factory=NoiseLaw)
    prior: PriorSpec = field(default_factory=PriorSpec)
    conv_stride: int = 2
    scale_likelihood: bool = True

    def __post_init__(self):
        positives = dict(
            epochs=self.epochs, batch_size=self.batch_size, alpha_=self.alpha + 1,
            beta_=self.beta + 1, lr_generator=self.lr_generator,
            lr_discriminator=self.lr_discriminator, lr_classifier=self.lr_classifier,
            disc_steps=self.disc_steps, samples_per_step=self.samples_per_step,
            n_ensemble=self.n_ensemble, eval_ensemble=self.eval_ensemble,
            conv_stride=self.conv_stride, layers=self.layers,
        )
        for name, value in positives.items():
            if value <= 0:
                raise ValueError(f"{name.rstrip('_')} must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.sampler not in ("quantum", "classical", "vi"):
            raise ValueError(f"unknown sampler {self.sampler!r}")


# --- plain-VI weight posterior -----------------------------------------------


class GaussianPosterior:
    """Factorized Gaussian over the chunk matrix, trained by
    reparameterization with an analytic KL to a standard normal prior."""

    def __init__(self, rng: np.random.Generator, n_chunks: int = N_CHUNKS):
        self.mu = ad.Tensor(rng.normal(0.0, 0.1, size=(n_chunks, CHUNK_DIM)),
                            requires_grad=True)
        self.log_sigma = ad.Tensor(np.full((n_chunks, CHUNK_DIM), -2.0),
                                   requires_grad=True)
        self.n_chunks = n_chunks

    def forward(self, eps: np.ndarray) -> ad.Tensor:
        sigma = ad.exp(self.log_sigma)
        return ad.add(self.mu, ad.mul(sigma, eps))

    def sample(self, rng: np.random.Generator) -> WeightSample:
        eps = rng.standard_normal((self.n_chunks, CHUNK_DIM))
        chunks = self.mu.data + np.exp(self.log_sigma.data) * eps
        return WeightSample(chunks, eps)

    def kl_to_standard_normal(self) -> ad.Tensor:
        sigma_sq = ad.exp(ad.mul(self.log_sigma, 2.0))
        per_element = ad.add(
            ad.mul(ad.add(sigma_sq, ad.mul(self.mu, self.mu)), 0.5),
            ad.add(ad.mul(self.log_sigma, -1.0), -0.5),
        )
        return ad.summation(per_element)

    def parameters(self) -> list[ad.Tensor]:
        return [self.mu, self.log_sigma]

    def named_tensors(self) -> dict[str, ad.Tensor]:
        return {"vi_mu": self.mu, "vi_log_sigma": self.log_sigma}


def gaussian_kl(mu_q: float, sigma_q: float, mu_p: float = 0.0, sigma_p: float = 1.0) -> float:
    """Closed-form KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2))."""
    if sigma_q <= 0 or sigma_p <= 0:
        raise ValueError("standard deviations must be positive")
    return (
        math.log(sigma_p / sigma_q)
        + (sigma_q**2 + (mu_q - mu_p) ** 2) / (2 * sigma_p**2)
        - 0.5
    )


# --- model assembly -----------------------------------------------------------


@dataclass
class ModelState:
    """Trainable state: weight generator, classifier head, discriminator,
    and one optimizer per learning-rate group."""

    sampler: object
    dense_w: ad.Tensor
    dense_b: ad.Tensor
    disc: Discriminator
    opt_generator: ad.Adam
    opt_classifier: ad.Adam
    opt_discriminator: ad.Adam
    config: TrainConfig
    image_shape: tuple[int, int]

    def named_tensors(self) -> dict[str, ad.Tensor]:
        out = dict(self.sampler.named_tensors())
        out["dense_w"] = self.dense_w
        out["dense_b"] = self.dense_b
        out.update(self.disc.named_tensors())
        return out

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.named_tensors().items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        """Restore parameters from a checkpoint dictionary."""
        for name, tensor in self.named_tensors().items():
            if name not in arrays:
                raise ValueError(f"checkpoint missing tensor {name!r}")
            if arrays[name].shape != tensor.data.shape:
                raise ValueError(f"checkpoint tensor {name!r} has shape "
                                 f"{arrays[name].shape}, expected {tensor.data.shape}")
            tensor.data = arrays[name].astype(np.float64).copy()


def conv_output_shape(image_shape: tuple[int, int], stride: int) -> tuple[int, int]:
    h = (image_shape[0] - KERNEL_SHAPE[1]) // stride + 1
    w = (image_shape[1] - KERNEL_SHAPE[2]) // stride + 1
    return h, w


def build_model(config: TrainConfig, image_shape: tuple[int, int]) -> ModelState:
    """Freshly initialized model for a config; all draws come from
    purpose-tagged streams of config.seed."""
    seed = config.seed
    if config.sampler == "quantum":
        template = assemble_pqc(config.arch, CHUNK_DIM, config.layers,
                                config.reupload, config.embedding_pairs, config.cr_axis)
        theta0 = stream(seed, "init-theta").uniform(0, 2 * math.pi, template.param_slots)
        noise = NoiseLaw(config.noise.kind, template.input_slots,
                         config.noise.mu, config.noise.sigma)
        sampler = QuantumWeightSampler(template, theta0, noise)
    elif config.sampler == "classical":
        sampler = ClassicalWeightSampler(stream(seed, "init-gen"), config.noise)
    else:
        sampler = GaussianPosterior(stream(seed, "init-vi"))
    hp, wp = conv_output_shape(image_shape, config.conv_stride)
    n_features = KERNEL_SHAPE[0] * hp * wp
    rng = stream(seed, "init-dense")
    dense_w = ad.Tensor(rng.normal(0.0, 1.0 / math.sqrt(n_features), size=(2, n_features)),
                        requires_grad=True)
    dense_b = ad.Tensor(np.zeros(2), requires_grad=True)
    disc = Discriminator(stream(seed, "init-disc"))
    return ModelState(
        sampler=sampler,
        dense_w=dense_w,
        dense_b=dense_b,
        disc=disc,
        opt_generator=ad.Adam(sampler.parameters(), lr=config.lr_generator),
        opt_classifier=ad.Adam([dense_w, dense_b], lr=config.lr_classifier),
        opt_discriminator=ad.Adam(disc.parameters(), lr=config.lr_discriminator),
        config=config,
        image_shape=tuple(image_shape),
    )


# --- forward passes ------------------------------------------------------------


def classifier_logits(model: ModelState, images: np.ndarray, kernels: ad.Tensor) -> ad.Tensor:
    """Differentiable conv -> relu -> dense logits for a (B, H, W) batch."""
    feats = ad.relu(ad.conv2d(ad.Tensor(images), kernels, model.config.conv_stride))
    flat = ad.reshape(feats, (images.shape[0], -1))
    return ad.dense(flat, model.dense_w, model.dense_b)


def forward_probs_np(model: ModelState, images: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Graph-free forward pass; returns (B, 2) softmax probabilities."""
    stride = model.config.conv_stride
    windows = np.lib.stride_tricks.sliding_window_view(images, (2, 2), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    feats = np.maximum(np.einsum("bxykl,fkl->bfxy", windows, kernels), 0.0)
    flat = feats.reshape(images.shape[0], -1)
    logits = flat @ model.dense_w.data.T + model.dense_b.data
    return ad.softmax_np(logits)


# --- loss surfaces ---------------------------------------------------------------


def _disc_objective_graph(disc: Discriminator, prior_chunks: np.ndarray,
                          generated_chunks: np.ndarray) -> ad.Tensor:
    d_gen = disc.forward(generated_chunks)
    d_prior = disc.forward(prior_chunks)
    one_minus_prior = ad.add(ad.mul(d_prior, -1.0), 1.0)
    return ad.add(ad.mean(ad.log(d_gen)), ad.mean(ad.log(one_minus_prior)))


def discriminator_loss(disc: Discriminator, prior_chunks, generated_chunks) -> float:
    """Cross-entropy objective the discriminator ascends:
    mean log d(generated) + mean log(1 - d(prior))."""
    prior_chunks = np.atleast_2d(np.asarray(prior_chunks, dtype=np.float64))
    generated_chunks = np.atleast_2d(np.asarray(generated_chunks, dtype=np.float64))
    if prior_chunks.size == 0 or generated_chunks.size == 0:
        raise ValueError("chunk sets must be non-empty")
    return float(_disc_objective_graph(disc, prior_chunks, generated_chunks).data)


def _logit_mean_graph(disc: Discriminator, chunks: ad.Tensor) -> ad.Tensor:
    d = disc.forward(chunks)
    return ad.mean(ad.add(ad.log(d), ad.mul(ad.log(ad.add(ad.mul(d, -1.0), 1.0)), -1.0)))


def _nll_graph(model: ModelState, chunks: ad.Tensor, images, labels,
               data_scale: float) -> ad.Tensor:
    kernels = ad.reshape(chunks, KERNEL_SHAPE)
    logits = classifier_logits(model, images, kernels)
    return ad.mul(ad.summation(ad.softmax_cross_entropy(logits, labels)), data_scale)


def combined_loss_graph(model: ModelState, chunk_tensors: list[ad.Tensor],
                        images, labels, data_scale: float = 1.0,
                        ) -> tuple[ad.Tensor, LossBreakdown]:
    """Full training objective over one or more weight draws.

    ``chunk_tensors`` holds one (16, 4) tensor per draw.  With no data
    (images None) the likelihood term vanishes and only the adversarial
    term remains.
    """
    cfg = model.config
    s = len(chunk_tensors)
    logit_sum = None
    lik_sum = None
    for chunks in chunk_tensors:
        term = _logit_mean_graph(model.disc, chunks)
        logit_sum = term if logit_sum is None else ad.add(logit_sum, term)
        if images is not None:
            nll = _nll_graph(model, chunks, images, labels, data_scale)
            lik_sum = nll if lik_sum is None else ad.add(lik_sum, nll)
    logit_mean = ad.mul(logit_sum, 1.0 / s)
    if lik_sum is not None:
        likelihood = ad.mul(lik_sum, 1.0 / s)
        kl = ad.add(logit_mean, likelihood)
    else:
        likelihood = ad.Tensor(0.0)
        kl = logit_mean
    combined = ad.add(ad.mul(likelihood, cfg.alpha), ad.mul(kl, cfg.beta))
    breakdown = LossBreakdown(
        likelihood_term=float(likelihood.data),
        kl_term=float(kl.data),
        discriminator_loss=float("nan"),
        alpha=cfg.alpha,
        beta=cfg.beta,
        combined=float(combined.data),
    )
    return combined, breakdown


def generator_loss(model: ModelState, weight_samples: list[WeightSample],
                   images, labels, data_scale: float = 1.0) -> float:
    """Value of the adversarial-KL objective for given weight draws:
    mean over draws of [chunk-averaged logit(d) - log p(D|w)]."""
    total = 0.0
    for ws in weight_samples:
        d = model.disc.forward(ws.chunks).data[:, 0]
        logit_mean = float(np.mean(np.log(d) - np.log(1.0 - d)))
        log_p = 0.0
        if images is not None:
            probs = forward_probs_np(model, images, ws.kernels)
            log_p = data_scale * float(
                np.sum(np.log(probs[np.arange(len(labels)), labels]))
            )
        total += logit_mean - log_p
    return total / len(weight_samples)


# --- training loop ----------------------------------------------------------------


def _draw_chunk_tensor(model: ModelState, noise: np.ndarray) -> ad.Tensor:
    """Differentiable chunk tensor for one draw, sampler-appropriate."""
    sampler = model.sampler
    if isinstance(sampler, QuantumWeightSampler):
        return ad.Tensor(sampler.expectations(noise), requires_grad=True)
    if isinstance(sampler, ClassicalWeightSampler):
        return sampler.forward(noise)
    raise TypeError("unsupported sampler for adversarial training")


def _quantum_theta_grad(sampler: QuantumWeightSampler, noise_blocks, chunk_tensors) -> np.ndarray:
    grad = np.zeros_like(sampler.theta.data)
    for noise, chunks in zip(noise_blocks, chunk_tensors):
        if chunks.grad is None:
            continue
        jac = sampler.jacobian(noise)  # (16, 4, P)
        grad += np.einsum("cq,cqp->p", chunks.grad, jac)
    return grad


def train_step(model: ModelState, images, labels, data_scale: float,
               rng_noise: np.random.Generator, rng_prior: np.random.Generator,
               ) -> LossBreakdown:
    """One adversarial step: discriminator ascent, then combined descent."""
    cfg = model.config
    sampler = model.sampler

    if isinstance(sampler, GaussianPosterior):
        return _vi_step(model, images, labels, data_scale, rng_noise)

    noise_blocks = [
        sample_noise_block(rng_noise, sampler.noise_law, sampler.n_chunks)
        for _ in range(cfg.samples_per_step)
    ]
    chunk_values = [
        sampler.expectations(noise) if isinstance(sampler, QuantumWeightSampler)
        else sampler.forward(noise).data
        for noise in noise_blocks
    ]

    disc_value = float("nan")
    for _ in range(cfg.disc_steps):
        prior_chunks = prior_sample_block(cfg.prior, rng_prior,
                                          sampler.n_chunks * cfg.samples_per_step)
        objective = _disc_objective_graph(model.disc, prior_chunks,
                                          np.concatenate(chunk_values))
        disc_value = float(objective.data)
        loss_d = ad.mul(objective, -1.0)
        model.opt_discriminator.zero_grad()
        loss_d.backward()
        model.opt_discriminator.step()

    chunk_tensors = [_draw_chunk_tensor(model, noise) for noise in noise_blocks]
    combined, breakdown = combined_loss_graph(model, chunk_tensors, images, labels, data_scale)
    breakdown.discriminator_loss = disc_value
    if not math.isfinite(breakdown.combined):
        raise DivergenceError("non-finite training loss")

    model.opt_generator.zero_grad()
    model.opt_classifier.zero_grad()
    combined.backward()
    if isinstance(sampler, QuantumWeightSampler):
        sampler.theta.grad = _quantum_theta_grad(sampler, noise_blocks, chunk_tensors)
    model.opt_generator.step()
    if images is not None:
        model.opt_classifier.step()
    return breakdown


def _vi_step(model: ModelState, images, labels, data_scale: float,
             rng_noise: np.random.Generator) -> LossBreakdown:
    cfg = model.config
    posterior: GaussianPosterior = model.sampler
    eps = rng_noise.standard_normal((posterior.n_chunks, CHUNK_DIM))
    chunks = posterior.forward(eps)
    likelihood = _nll_graph(model, chunks, images, labels, data_scale)
    kl = posterior.kl_to_standard_normal()
    combined = ad.add(ad.mul(likelihood, cfg.alpha), ad.mul(kl, cfg.beta))
    breakdown = LossBreakdown(
        likelihood_term=float(likelihood.data),
        kl_term=float(kl.data),
        discriminator_loss=float("nan"),
        alpha=cfg.alpha,
        beta=cfg.beta,
        combined=float(combined.data),
    )
    if not math.isfinite(breakdown.combined):
        raise DivergenceError("non-finite training loss")
    model.opt_generator.zero_grad()
    model.opt_classifier.zero_grad()
    combined.backward()
    model.opt_generator.step()
    model.opt_classifier.step()
    return breakdown


def train_epoch(model: ModelState, images: np.ndarray, labels: np.ndarray,
                epoch: int, n_data: int | None = None) -> list[LossBreakdown]:
    """All batches of one epoch in a deterministic shuffled order."""
    cfg = model.config
    n = len(images)
    n_data = n_data if n_data is not None else n
    order = stream(cfg.seed, "batch-order", epoch).permutation(n)
    rng_noise = stream(cfg.seed, "noise", epoch)
    rng_prior = stream(cfg.seed, "prior", epoch)
    trace = []
    for start in range(0, n, cfg.batch_size):
        idx = order[start : start + cfg.batch_size]
        scale = (n_data / len(idx)) if cfg.scale_likelihood else 1.0
        trace.append(
            train_step(model, images[idx], labels[idx], scale, rng_noise, rng_prior)
        )
    return trace


def train_model(model: ModelState, train_images, train_labels,
                val_images=None, val_labels=None,
                progress: bool = False) -> list[dict]:
    """Run the configured number of epochs; returns one history row per
    epoch with mean loss terms and ensemble train/validation accuracy."""
    cfg = model.config
    history = []
    for epoch in range(cfg.epochs):
        trace = train_epoch(model, train_images, train_labels, epoch)
        row = {
            "epoch": epoch,
            "likelihood": float(np.mean([t.likelihood_term for t in trace])),
            "kl": float(np.mean([t.kl_term for t in trace])),
            "disc": float(np.mean([t.discriminator_loss for t in trace])),
            "combined": float(np.mean([t.combined for t in trace])),
        }
        probs, _ = ensemble_outputs(model, train_images, cfg.eval_ensemble,
                                    stream_tag=("eval-train", epoch))
        row["train_accuracy"] = float((probs.argmax(axis=1) == train_labels).mean())
        if val_images is not None and len(val_images):
            vprobs, _ = ensemble_outputs(model, val_images, cfg.eval_ensemble,
                                         stream_tag=("eval-val", epoch))
            row["val_accuracy"] = float((vprobs.argmax(axis=1) == val_labels).mean())
        history.append(row)
        if progress:
            print(f"epoch {epoch:3d}  combined {row['combined']:10.3f}  "
                  f"train acc {row['train_accuracy']:.3f}")
    return history


# --- ensemble prediction -----------------------------------------------------------


def draw_weight_samples(model: ModelState, count: int,
                        rng: np.random.Generator) -> list[WeightSample]:
    """``count`` independent weight draws; quantum circuits run batched."""
    sampler = model.sampler
    if isinstance(sampler, QuantumWeightSampler):
        noise = sample_noise_block(rng, sampler.noise_law, count * sampler.n_chunks)
        chunks = sampler.expectations(noise).reshape(count, sampler.n_chunks, CHUNK_DIM)
        noise = noise.reshape(count, sampler.n_chunks, -1)
        return [WeightSample(chunks[i], noise[i]) for i in range(count)]
    return [sampler.sample(rng) for _ in range(count)]


def ensemble_outputs(model: ModelState, images: np.ndarray, n_members: int,
                     stream_tag=("eval",), seed: int | None = None,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Averaged probabilities (M, 2) and member votes (N, M) on a batch."""
    rng = stream(model.config.seed if seed is None else seed, *stream_tag)
    samples = draw_weight_samples(model, n_members, rng)
    m = len(images)
    probs_sum = np.zeros((m, 2))
    votes = np.empty((n_members, m), dtype=np.int64)
    for i, ws in enumerate(samples):
        member = forward_probs_np(model, images, ws.kernels)
        probs_sum += member
        votes[i] = member.argmax(axis=1)
    return probs_sum / n_members, votes


def predict_ensemble(model: ModelState, image: np.ndarray, n_members: int,
                     stream_tag=("predict",), seed: int | None = None) -> EnsemblePrediction:
    """Averaged prediction over ``n_members`` independent weight draws."""
    if n_members < 1:
        raise ValueError("ensemble size must be >= 1")
    probs, votes = ensemble_outputs(model, image[None], n_members, stream_tag, seed)
    return EnsemblePrediction(
        class_probabilities=probs[0],
        predicted=int(probs[0].argmax()),
        member_votes=votes[:, 0],
        ensemble_size=n_members,
    )


# --- toy prior-matching run ----------------------------------------------------------


def train_prior_matching(model: ModelState, steps: int,
                         eval_every: int = 0) -> list[dict]:
    """Adversarial distribution matching without data (likelihood off).

    Drives the generator toward the prior; the trace records the
    discriminator objective and generator logit term per step.
    """
    if isinstance(model.sampler, GaussianPosterior):
        raise TypeError("unsupported sampler for adversarial training: the "
                        "plain-VI posterior has no adversarial loop")
    cfg = model.config
    rng_noise = stream(cfg.seed, "toy-noise")
    rng_prior = stream(cfg.seed, "toy-prior")
    trace = []
    for step in range(steps):
        breakdown = train_step(model, None, None, 1.0, rng_noise, rng_prior)
        row = {"step": step, "logit_term": breakdown.kl_term,
               "disc": breakdown.discriminator_loss}
        if eval_every and (step + 1) % eval_every == 0:
            row["ks"] = prior_matching_ks(model, 1000)
        trace.append(row)
    return trace


def prior_matching_ks(model: ModelState, n_draws: int, tag: str = "toy-eval") -> float:
    """Two-sample KS statistic between pooled generated and prior values."""
    from .metrics import ks_statistic

    cfg = model.config
    rng_gen = stream(cfg.seed, tag, 1)
    rng_prior = stream(cfg.seed, tag, 2)
    samples = draw_weight_samples(model, n_draws, rng_gen)
    generated = np.concatenate([ws.chunks.reshape(-1) for ws in samples])
    prior = prior_sample_block(cfg.prior, rng_prior,
                               n_draws * model.sampler.n_chunks).reshape(-1)
    return ks_statistic(generated, prior)
