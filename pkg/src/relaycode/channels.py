"""Source and channel models: DSBS pairs, BIAWGN/BSC/BEC channels and their LLRs.

Sign convention: LLR = ln P(bit=0)/P(bit=1), BPSK maps bit 0 to +1. Known bits
carry infinite LLRs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("biawgn", "bsc", "bec", "noiseless")


@dataclass(frozen=True)
class ChannelModel:
    kind: str
    param: float = 0.0     # sigma^2 for biawgn, crossover for bsc, erasure prob for bec

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        p = self.param
        if self.kind == "biawgn" and not p > 0:
            raise ValueError("biawgn noise variance must be positive")
        if self.kind == "bsc" and not 0 <= p <= 0.5:
            raise ValueError("bsc crossover must lie in [0, 1/2]")
        if self.kind == "bec" and not 0 <= p <= 1:
            raise ValueError("bec erasure probability must lie in [0, 1]")

    @classmethod
    def biawgn(cls, sigma2: float) -> "ChannelModel":
        return cls("biawgn", sigma2)

    @classmethod
    def bsc(cls, p: float) -> "ChannelModel":
        return cls("bsc", p)

    @classmethod
    def bec(cls, eps: float) -> "ChannelModel":
        return cls("bec", eps)

    @classmethod
    def noiseless(cls) -> "ChannelModel":
        return cls("noiseless")

    def capacity(self) -> float:
        from .info_region import biawgn_capacity, bsc_capacity
        if self.kind == "biawgn":
            return biawgn_capacity(self.param)
        if self.kind == "bsc":
            return bsc_capacity(self.param)
        if self.kind == "bec":
            return 1.0 - self.param
        return 1.0


def bpsk(x) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_dsbs(rho: float, n: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Uniform W1 and W2 = W1 xor Bernoulli(rho) noise."""
    if not 0 < rho < 0.5:
        raise ValueError("rho must lie in (0, 1/2)")
    rng = _rng(seed)
    w1 = rng.integers(0, 2, size=n, dtype=np.uint8)
    z = (rng.random(n) < rho).astype(np.uint8)
    return w1, w1 ^ z


def transmit(ch: ChannelModel, x, seed=None) -> np.ndarray:
    """Channel output for bits ``x``.

    biawgn/noiseless: real BPSK samples; bsc: bits; bec: int8 with -1 for erasures.
    """
    x = np.asarray(x, dtype=np.uint8)
    rng = _rng(seed)
    if ch.kind == "noiseless":
        return bpsk(x)
    if ch.kind == "biawgn":
        return bpsk(x) + rng.normal(0.0, math.sqrt(ch.param), size=x.size)
    if ch.kind == "bsc":
        return x ^ (rng.random(x.size) < ch.param).astype(np.uint8)
    y = x.astype(np.int8)
    y[rng.random(x.size) < ch.param] = -1
    return y


def channel_llr(ch: ChannelModel, y) -> np.ndarray:
    y = np.asarray(y)
    if ch.kind == "biawgn":
        return 2.0 * y.astype(np.float64) / ch.param
    if ch.kind == "noiseless":
        return np.where(y > 0, np.inf, -np.inf)
    if ch.kind == "bsc":
        if ch.param == 0:
            mag = np.inf
        else:
            mag = math.log((1 - ch.param) / ch.param)
        return np.where(y == 0, mag, -mag)
    out = np.where(y == 0, np.inf, -np.inf)
    out[y < 0] = 0.0
    return out


def known_llr(bits) -> np.ndarray:
    """Infinite LLRs pinning known bits."""
    return np.where(np.asarray(bits) == 0, np.inf, -np.inf)


def correlation_llr(rho: float, own_bit) -> np.ndarray | float:
    """Prior LLR on the other node's bit given our own, via a virtual BSC(rho)."""
    if not 0 < rho < 0.5:
        raise ValueError("rho must lie in (0, 1/2)")
    mag = math.log((1 - rho) / rho)
    out = (1.0 - 2.0 * np.asarray(own_bit, dtype=np.float64)) * mag
    return float(out) if out.ndim == 0 else out


def es_n0_db(sigma2: float) -> float:
    """Es/N0 in dB for unit-energy BPSK with noise variance sigma2 per real dimension."""
    return 10.0 * math.log10(1.0 / (2.0 * sigma2))


def sigma2_from_es_n0_db(db: float) -> float:
    return 1.0 / (2.0 * 10.0 ** (db / 10.0))
