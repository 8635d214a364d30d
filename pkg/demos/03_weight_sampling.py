"""Stochastic convolution weights from quantum and classical generators.

Both samplers emit 16 chunks of 4 values per draw, reshaped into the 16
2x2 convolution kernels.  A quick pooled-density comparison shows how
architecture choice shapes the weight distribution even before training.
"""

import numpy as np

from qcbnn.circuits import Architecture, assemble_pqc
from qcbnn.metrics import kde_density
from qcbnn.samplers import ClassicalWeightSampler, QuantumWeightSampler
from qcbnn.seeding import stream

rng = stream(7, "demo")


def pooled_weights(sampler, draws=200):
    return np.concatenate([sampler.sample(rng).flat for _ in range(draws)])


def show(name, pooled):
    grid = np.linspace(-1.1, 1.1, 45)
    density = kde_density(pooled, grid).density
    bar = "".join(" .:-=+*#%@"[min(int(d * 4), 9)] for d in density)
    print(f"{name:12s} std {pooled.std():.3f} |{bar}|")


for arch in (Architecture.MATIC_I, Architecture.CIRCUIT_III):
    template = assemble_pqc(arch, 4)
    theta = stream(7, "theta", arch.value).uniform(0, 2 * np.pi, template.param_slots)
    sampler = QuantumWeightSampler(template, theta)
    ws = sampler.sample(rng)
    assert ws.kernels.shape == (16, 2, 2)
    show(arch.value, pooled_weights(sampler))

classical = ClassicalWeightSampler(stream(7, "gen"))
show("classical", pooled_weights(classical))

ws = classical.sample(rng)
print("\none draw: chunks", ws.chunks.shape, "-> kernels", ws.kernels.shape,
      "noise", ws.noise.shape)
print("first kernel:\n", np.round(ws.kernels[0], 4))
