"""End-to-end Monte Carlo simulation of the two-way relay system.

Per trial: draw a DSBS pair, compress both sources to bin indices, deliver the
indices to the relay, encode the downlink parity word, pass it through each
node's downlink channel and decode the other node's source at both nodes.
Separate and joint decoders see identical realisations (common random numbers).
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .binary_matrix import SparseBinaryMatrix, mat_vec_syndrome
from .bp_decoding import DECODERS, bp_channel_decode
from .channels import (ChannelModel, channel_llr, es_n0_db, sample_dsbs, sigma2_from_es_n0_db,
                       transmit)
from .code_construction import (RelayCodebook, build_relay_codebook, peg_construct, regular_ensemble,
                                relay_encode)
from .info_region import biawgn_capacity

CSV_HEADER = ["es_n0_db", "sigma2_d", "rho", "decoder", "trials", "word_errors", "wer",
              "wer_ci_lo", "wer_ci_hi", "ber", "avg_iters"]


class ConfigError(ValueError):
    """Malformed or unknown configuration entries."""


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 2000
    rho: float = 0.05
    sigma2_d: float = 0.8
    sigma2_u: float = 0.5
    r1: float = 0.5
    r2: float = 0.5
    ens_down: str = "chan_sep_r12"
    ens_src: str = "source_r12"
    decoder: str = "both"            # separate | joint | both
    trials: int = 100
    seed: int = 0                    # master seed for sources and noise
    code_seed: int = 0               # seed of the code construction
    max_iters: int = 200
    uplink: str = "noiseless"        # noiseless | biawgn
    uplink_rate: float = 0.5         # rate of the uplink code in biawgn mode
    downlink: str = "biawgn"         # biawgn | noiseless
    codebook: str = ""               # directory with saved matrices; empty builds from ensembles
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.n < 10:
            raise ConfigError("block length too small")
        if not 0 < self.rho < 0.5:
            raise ConfigError("rho must lie in (0, 1/2)")
        if self.sigma2_d <= 0 or self.sigma2_u <= 0:
            raise ConfigError("noise variances must be positive")
        if self.decoder not in ("separate", "joint", "both"):
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        if self.uplink not in ("noiseless", "biawgn"):
            raise ConfigError(f"unknown uplink mode {self.uplink!r}")
        if self.downlink not in ("noiseless", "biawgn"):
            raise ConfigError(f"unknown downlink mode {self.downlink!r}")
        if not 0 < self.uplink_rate < 1:
            raise ConfigError("uplink rate must lie in (0, 1)")
        if self.max_iters < 1 or self.workers < 1:
            raise ConfigError("max_iters and workers must be positive")
        if self.uplink == "biawgn" and self.uplink_rate >= biawgn_capacity(self.sigma2_u):
            raise ConfigError("uplink rate must be below the uplink capacity")

    @property
    def decoders(self) -> tuple[str, ...]:
        return ("separate", "joint") if self.decoder == "both" else (self.decoder,)

    def downlink_channel(self) -> ChannelModel:
        return ChannelModel.noiseless() if self.downlink == "noiseless" else ChannelModel.biawgn(self.sigma2_d)


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines with ``#`` comments; unknown keys are rejected."""
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    casts = {"int": int, "float": float, "str": str}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = casts[types[key]](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def config_to_text(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in dataclasses.fields(cfg))


# ---------------------------------------------------------------------------
# codes


@functools.lru_cache(maxsize=8)
def get_codebook(ens_down: str, ens_src: str, n: int, r1: float, r2: float, seed: int,
                 path: str = "") -> RelayCodebook:
    if path:
        return RelayCodebook.load(path)
    return build_relay_codebook(ens_down, ens_src, n, r1, r2, seed)


def codebook_for(cfg: ExperimentConfig) -> RelayCodebook:
    return get_codebook(cfg.ens_down, cfg.ens_src, cfg.n, cfg.r1, cfg.r2, cfg.code_seed, cfg.codebook)


@dataclass(frozen=True)
class UplinkCode:
    """Systematic repeat-accumulate style LDPC code ``[Hi | Hp]`` with a staircase ``Hp``."""

    Hi: SparseBinaryMatrix
    Hp: SparseBinaryMatrix

    @property
    def H(self) -> SparseBinaryMatrix:
        return SparseBinaryMatrix.hstack([self.Hi, self.Hp])

    def encode(self, info) -> np.ndarray:
        s = mat_vec_syndrome(self.Hi, info)
        return np.concatenate([np.asarray(info, dtype=np.uint8), np.bitwise_xor.accumulate(s)])


@functools.lru_cache(maxsize=8)
def uplink_code(k: int, rate: float, seed: int) -> UplinkCode:
    m = int(math.ceil(k * (1.0 / rate - 1.0)))
    Hi = peg_construct(regular_ensemble(3, 6), k, seed, n_checks=m)
    Hp = SparseBinaryMatrix.from_columns(m, m, [[j, j + 1] if j + 1 < m else [j] for j in range(m)])
    return UplinkCode(Hi, Hp)


def _uplink(cfg: ExperimentConfig, bits: np.ndarray, node: int, rng) -> np.ndarray:
    if cfg.uplink == "noiseless":
        return bits
    code = uplink_code(bits.size, cfg.uplink_rate, cfg.code_seed + 1 + node)
    ch = ChannelModel.biawgn(cfg.sigma2_u)
    res = bp_channel_decode(code.H, channel_llr(ch, transmit(ch, code.encode(bits), rng)), cfg.max_iters)
    return res.decisions["all"][: bits.size]


# ---------------------------------------------------------------------------
# trials


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    decoder: str
    word_error: tuple[bool, bool]          # per receiving node
    bit_errors: int
    iterations: tuple[int, int]
    converged: tuple[tuple[bool, ...], tuple[bool, ...]]   # per node, per stage
    uplink_error: bool = False

    @property
    def any_error(self) -> bool:
        return any(self.word_error)


def run_trial(cb: RelayCodebook, cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = np.random.default_rng([cfg.seed, trial])
    w = sample_dsbs(cfg.rho, cb.n, rng)
    b = (cb.compress(0, w[0]), cb.compress(1, w[1]))
    b_relay = tuple(_uplink(cfg, b[i], i, rng) for i in (0, 1))
    uplink_error = any(bool((b_relay[i] != b[i]).any()) for i in (0, 1))
    x = relay_encode(cb, *b_relay)
    ch = cfg.downlink_channel()
    llr = tuple(channel_llr(ch, transmit(ch, x, rng)) for _ in (0, 1))
    records = []
    for name in cfg.decoders:
        errs, bit_errs, iters, conv = [], 0, [], []
        for node in (0, 1):
            r = DECODERS[name](cb, node, w[node], b[node], llr[node], cfg.rho, cfg.max_iters)
            diff = int(np.count_nonzero(r.decisions["w"] != w[1 - node]))
            errs.append(diff > 0)
            bit_errs += diff
            iters.append(r.iterations)
            conv.append(tuple(c for c, _ in r.stages))
        records.append(TrialRecord(trial, name, tuple(errs), bit_errs, tuple(iters), tuple(conv), uplink_error))
    return records


_WORKER: dict = {}


def _init_worker(cb, cfg):
    _WORKER["cb"], _WORKER["cfg"] = cb, cfg


def _worker_trial(trial: int) -> list[TrialRecord]:
    return run_trial(_WORKER["cb"], _WORKER["cfg"], trial)


def run_trials(cfg: ExperimentConfig, cb: RelayCodebook | None = None) -> list[TrialRecord]:
    cb = cb or codebook_for(cfg)
    if cfg.workers == 1:
        return [r for t in range(cfg.trials) for r in run_trial(cb, cfg, t)]
    with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cb, cfg)) as ex:
        chunks = ex.map(_worker_trial, range(cfg.trials), chunksize=max(1, cfg.trials // (4 * cfg.workers)))
        return [r for chunk in chunks for r in chunk]


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class SimResult:
    decoder: str
    sigma2_d: float
    rho: float
    trials: int
    word_errors: int
    wer_ci: tuple[float, float]
    bit_errors: int
    bits: int
    avg_iters: float
    node_word_errors: tuple[int, int]
    uplink_errors: int = 0
    records: tuple[TrialRecord, ...] = field(default=(), repr=False, compare=False)

    @property
    def wer(self) -> float:
        return self.word_errors / self.trials

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def es_n0_db(self) -> float:
        return es_n0_db(self.sigma2_d)

    def csv_row(self) -> list[str]:
        return [f"{self.es_n0_db:.4f}", f"{self.sigma2_d:.6f}", f"{self.rho:.6f}", self.decoder,
                str(self.trials), str(self.word_errors), f"{self.wer:.6e}", f"{self.wer_ci[0]:.6e}",
                f"{self.wer_ci[1]:.6e}", f"{self.ber:.6e}", f"{self.avg_iters:.3f}"]


def wer_confidence(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


def aggregate(records: Sequence[TrialRecord], cfg: ExperimentConfig, n: int) -> dict[str, SimResult]:
    out = {}
    for name in cfg.decoders:
        recs = tuple(r for r in records if r.decoder == name)
        k = sum(r.any_error for r in recs)
        out[name] = SimResult(
            name, cfg.sigma2_d, cfg.rho, len(recs), k, wer_confidence(k, len(recs)),
            sum(r.bit_errors for r in recs), 2 * n * len(recs),
            float(np.mean([it for r in recs for it in r.iterations])),
            tuple(sum(r.word_error[i] for r in recs) for i in (0, 1)),
            sum(r.uplink_error for r in recs), recs)
    return out


def run_pipeline(cfg: ExperimentConfig, cb: RelayCodebook | None = None) -> dict[str, SimResult]:
    """Simulate ``cfg.trials`` trials; results keyed by decoder name."""
    cb = cb or codebook_for(cfg)
    return aggregate(run_trials(cfg, cb), cfg, cb.n)


def sweep_snr(cfg: ExperimentConfig, es_n0_grid_db: Sequence[float],
              cb: RelayCodebook | None = None) -> list[SimResult]:
    """Paired separate/joint runs over an Es/N0 grid (dB); the same seeds at every point."""
    if len(es_n0_grid_db) < 2:
        raise ConfigError("an SNR sweep needs at least two points")
    cb = cb or codebook_for(cfg)
    out = []
    for db in es_n0_grid_db:
        point = dataclasses.replace(cfg, sigma2_d=sigma2_from_es_n0_db(db))
        out.extend(run_pipeline(point, cb).values())
    return out


def results_csv(results: Sequence[SimResult], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text

