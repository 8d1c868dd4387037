"""Seeded synthetic generators with known analytic properties.

Every generator draws from numpy's Philox4x64 counter-based bit generator,
so a given ``(seed, parameters)`` pair reproduces the same stream on any
platform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALGORITHM = "philox4x64-10"


@dataclass(frozen=True)
class SeededGenerator:
    seed: int
    algorithm: str = ALGORITHM

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed))


def _rng(seed: int) -> np.random.Generator:
    return SeededGenerator(int(seed)).rng()


def fgn_autocovariance(H: float, k) -> np.ndarray:
    """Unit-variance fGn autocovariance rho(k)."""
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def gen_fgn(H: float, n: int, seed: int) -> np.ndarray:
    """Fractional Gaussian noise by circulant embedding (Davies-Harte / Wood-Chan).

    The embedding of the Toeplitz covariance into a 2n circulant is
    nonnegative definite for every H in (0, 1), so the real part of the
    transformed complex Gaussian vector has exactly the fGn covariance.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst exponent must lie in (0, 1), got {H}")
    n = int(n)
    if n < 2**10 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 1024, got {n}")

    row = fgn_autocovariance(H, np.arange(n + 1))
    circ = np.concatenate([row, row[-2:0:-1]])
    eig = np.fft.fft(circ).real
    if eig.min() < -1e-10 * eig.max():
        raise ArithmeticError("circulant embedding is not nonnegative definite")
    eig = np.clip(eig, 0.0, None)

    rng = _rng(seed)
    m = 2 * n
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(eig / m) * z)
    return w.real[:n].copy()


def cascade_weights(a: float, levels: int) -> np.ndarray:
    levels = int(levels)
    out = np.ones(1)
    for _ in range(levels):
        # each cell splits into (a, 1 - a) of its mass, left to right
        out = np.column_stack([out * a, out * (1.0 - a)]).ravel()
    return out


def gen_binomial_cascade(a: float, levels: int, seed: int | None = None) -> np.ndarray:
    """Deterministic binomial multiplicative measure on 2**levels cells.

    ``seed`` is accepted for a uniform generator signature and ignored:
    the measure is fully determined by ``a`` and ``levels``.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"cascade weight must lie in (0, 1), got {a}")
    if a == 0.5:
        raise ValueError("a = 0.5 gives a uniform (monofractal) measure; use fGn instead")
    if int(levels) < 1:
        raise ValueError("levels must be >= 1")
    return cascade_weights(a, levels)


def analytic_cascade_h(a: float, q) -> np.ndarray | float:
    """Generalized Hurst exponent of the binomial cascade.

    h(q) = 1/q - log2(a**q + (1-a)**q) / q, with q = 0 replaced by the mean
    of the values at q = +/-1e-4.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"cascade weight must lie in (0, 1), got {a}")

    def h(qv):
        return 1.0 / qv - np.log2(a**qv + (1.0 - a) ** qv) / qv

    qa = np.asarray(q, dtype=float)
    safe = np.where(qa == 0.0, 1.0, qa)
    out = np.where(qa == 0.0, 0.5 * (h(1e-4) + h(-1e-4)), h(safe))
    return float(out) if out.ndim == 0 else out


def pareto_from_uniform(u, gamma: float):
    """Inverse CDF of P(X > x) = x**-gamma on x >= 1."""
    return np.asarray(u, dtype=float) ** (-1.0 / gamma)


def weibull_from_uniform(u, beta: float):
    """Inverse CDF of P(X > x) = exp(-x**beta)."""
    return (-np.log(np.asarray(u, dtype=float))) ** (1.0 / beta)


def gen_ar1(phi: float, n: int, seed: int) -> np.ndarray:
    if not abs(phi) < 1.0:
        raise ValueError(f"AR(1) coefficient must satisfy |phi| < 1, got {phi}")
    rng = _rng(seed)
    eps = rng.standard_normal(int(n))
    x = np.empty(int(n))
    prev = eps[0] / np.sqrt(1.0 - phi * phi)  # stationary start
    x[0] = prev
    for i in range(1, len(x)):
        prev = phi * prev + eps[i]
        x[i] = prev
    return x


def gen_inverse_cdf_samples(model: str, n: int, seed: int, **params) -> np.ndarray:
    """Samples from ``pareto`` (gamma), ``weibull`` (beta) or ``ar1`` (phi)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    if model == "pareto":
        gamma = float(params["gamma"])
        if gamma <= 0:
            raise ValueError("pareto requires gamma > 0")
        return pareto_from_uniform(_uniform_open0(seed, n), gamma)
    if model == "weibull":
        beta = float(params["beta"])
        if beta <= 0:
            raise ValueError("weibull requires beta > 0")
        return weibull_from_uniform(_uniform_open0(seed, n), beta)
    if model == "ar1":
        return gen_ar1(float(params["phi"]), n, seed)
    raise ValueError(f"unknown model {model!r}")


def _uniform_open0(seed: int, n: int) -> np.ndarray:
    # (0, 1] so that the inverse CDFs stay finite
    return 1.0 - _rng(seed).random(n)


MODELS = ("fgn", "cascade", "pareto", "weibull", "ar1")


def generate(model: str, seed: int, **params) -> np.ndarray:
    """Dispatch used by the CLI ``synth`` command."""
    if model == "fgn":
        return gen_fgn(float(params["H"]), int(params["n"]), seed)
    if model == "cascade":
        return gen_binomial_cascade(float(params["a"]), int(params["levels"]), seed)
    if model in ("pareto", "weibull", "ar1"):
        n = params.pop("n")
        return gen_inverse_cdf_samples(model, int(n), seed, **params)
    raise ValueError(f"unknown model {model!r}; expected one of {', '.join(MODELS)}")
