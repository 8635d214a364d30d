"""Adversarial variational inference without data.

With the likelihood term switched off, the generator is trained purely
against the discriminator's logit signal, which should drive its output
distribution toward the uniform prior on [-1, 1].  The two-sample
Kolmogorov-Smirnov statistic tracks how close it gets.
"""

from qcbnn.training import TrainConfig, build_model, prior_matching_ks, train_prior_matching

config = TrainConfig(
    epochs=1, seed=0, sampler="classical",
    alpha=0.0, beta=1.0,                      # likelihood off, adversarial on
    lr_generator=0.002, lr_discriminator=0.01, disc_steps=2,
)
model = build_model(config, (28, 28))

print(f"{'step':>6s} {'KS':>8s}")
print(f"{0:6d} {prior_matching_ks(model, 1000):8.4f}")
for block in range(8):
    train_prior_matching(model, 250)
    ks = prior_matching_ks(model, 1000)
    print(f"{(block + 1) * 250:6d} {ks:8.4f}")

final = prior_matching_ks(model, 1000)
print(f"\nfinal KS over 1000 draws: {final:.4f} "
      f"({'matched' if final < 0.1 else 'not matched'}; target < 0.1)")
