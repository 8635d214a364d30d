import numpy as np
import pytest

from qcbnn import data as dio


def finite_difference_grad(fn, x0: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central finite differences of a scalar or vector function of x."""
    x0 = np.asarray(x0, dtype=np.float64)
    probe = np.asarray(fn(x0))
    grad = np.zeros(probe.shape + x0.shape)
    for j in np.ndindex(*x0.shape):
        xp, xm = x0.copy(), x0.copy()
        xp[j] += h
        xm[j] -= h
        grad[(...,) + j] = (np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2 * h)
    return grad


@pytest.fixture(scope="session")
def synth_split():
    """The desk-scale 200/50 dataset used across training tests."""
    dataset = dio.synth_generate(dio.SynthSpec(n_samples=250, imbalance=0.27, seed=7))
    tagged = dio.split(dataset, (0.8, 0.2), seed=7)
    return tagged.subset("train"), tagged.subset("test")


@pytest.fixture(scope="session")
def tiny_split():
    """A very small split for fast CLI and loop tests."""
    dataset = dio.synth_generate(dio.SynthSpec(n_samples=40, imbalance=0.3, seed=3))
    tagged = dio.split(dataset, (0.7, 0.3), seed=3)
    return tagged.subset("train"), tagged.subset("test")
