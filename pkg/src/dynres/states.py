"""Input-state families supported by the transfer model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ValueError("Fock photon number must be a nonnegative integer")


@dataclass(frozen=True)
class Coherent:
    alpha: complex


@dataclass(frozen=True)
class Cat:
    """Even (+1) or odd (-1) superposition of |alpha> and |-alpha>."""

    alpha: complex
    parity: int

    def __post_init__(self):
        if self.parity not in (+1, -1):
            raise ValueError("cat parity must be +1 or -1")
        if self.parity == -1 and self.alpha == 0:
            raise ValueError("odd cat with alpha = 0 is not normalizable")


@dataclass(frozen=True)
class DisplacedSqueezed:
    """D(alpha) S(eta) |0> with eta = r e^{i phi_eta}, r = |eta| >= 0."""

    alpha: complex
    eta: complex


InputState = Union[Fock, Coherent, Cat, DisplacedSqueezed]


def cat_normalization(alpha: complex, parity: int) -> float:
    """N_pm = 1/sqrt(2(1 pm e^{-2|alpha|^2}))."""
    return 1.0 / math.sqrt(2.0 * (1.0 + parity * math.exp(-2.0 * abs(alpha) ** 2)))


def mean_photon_number(state: InputState) -> float:
    if isinstance(state, Fock):
        return float(state.n)
    if isinstance(state, Coherent):
        return abs(state.alpha) ** 2
    if isinstance(state, Cat):
        x = abs(state.alpha) ** 2
        e = math.exp(-2.0 * x)
        return x * (1.0 - state.parity * e) / (1.0 + state.parity * e)
    if isinstance(state, DisplacedSqueezed):
        return abs(state.alpha) ** 2 + math.sinh(abs(state.eta)) ** 2
    raise TypeError(f"unsupported state: {state!r}")


def number_amplitudes(state: InputState, cutoff: int) -> np.ndarray:
    """Number-basis amplitudes c_0..c_{cutoff-1} (not defined for squeezed states)."""
    c = np.zeros(cutoff, dtype=complex)
    if isinstance(state, Fock):
        if state.n >= cutoff:
            raise ValueError("cutoff too small for requested Fock state")
        c[state.n] = 1.0
        return c
    if isinstance(state, (Coherent, Cat)):
        alpha = state.alpha
        n = np.arange(cutoff)
        # alpha^n / sqrt(n!) with the vacuum factor, via logs for stability
        with np.errstate(divide="ignore"):
            logmag = np.where(n > 0, n * np.log(np.maximum(abs(alpha), 1e-300)), 0.0)
        amp = np.exp(logmag - 0.5 * _log_factorial(n) - 0.5 * abs(alpha) ** 2)
        phase = np.exp(1j * np.angle(alpha) * n) if alpha != 0 else np.ones(cutoff)
        c = amp * phase
        if alpha == 0:
            c = np.zeros(cutoff, dtype=complex)
            c[0] = 1.0
        if isinstance(state, Cat):
            c = c * (1.0 + state.parity * (-1.0) ** n)
            c *= cat_normalization(alpha, state.parity)
        return c.astype(complex)
    raise TypeError(f"number amplitudes not available for {type(state).__name__}")


def _log_factorial(n: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    return gammaln(np.asarray(n, dtype=float) + 1.0)
