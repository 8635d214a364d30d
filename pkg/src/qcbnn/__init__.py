"""Hybrid quantum-classical Bayesian neural network laboratory.

A simulated parametrized quantum circuit draws continuous stochastic
weights for a small convolutional classifier, trained end to end by
adversarial variational inference, with an uncertainty-metrics and
circuit-architecture study harness on top.
"""

__version__ = "0.1.0"
