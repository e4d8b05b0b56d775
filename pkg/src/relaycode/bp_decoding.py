"""Flooding sum-product decoders for the channel code, the Slepian-Wolf code and
the joint factor graph of both.

Messages are LLRs clamped to +-``LLR_CLAMP``. Known bits enter as infinite
priors; since ``tanh(LLR_CLAMP / 2) == 1.0`` in double precision, a pinned
variable contributes an exact +-1 factor to every check update, so pinning is
exact without a separate flag. Checks may carry a nonzero target parity
(syndrome), which flips the sign of their outgoing messages.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .binary_matrix import SparseBinaryMatrix, mat_vec_syndrome, as_bits
from .channels import correlation_llr
from .code_construction import RelayCodebook

LLR_CLAMP = 50.0


@dataclass
class DecodeResult:
    decisions: dict[str, np.ndarray]
    converged: bool
    iterations: int
    unsatisfied_checks: int
    posterior: np.ndarray | None = field(default=None, repr=False)
    stages: tuple = ()          # per-stage (converged, iterations) for multi-stage decoders

    def __post_init__(self):
        if self.converged and self.unsatisfied_checks:
            raise ValueError("a converged result cannot have unsatisfied checks")


class SumProductDecoder:
    """Flooding sum-product on the Tanner graph of ``H``."""

    def __init__(self, H: SparseBinaryMatrix):
        self.H = H
        self.edge_row = H.edge_row          # CSR edge order
        self.edge_col = H.edge_col.astype(np.intp)
        self.n_rows, self.n_cols = H.shape

    # ---- half-iterations (exposed for testing)
    def var_to_check(self, prior: np.ndarray, c2v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Extrinsic variable messages and the full posterior."""
        total = prior + np.bincount(self.edge_col, weights=c2v, minlength=self.n_cols)
        with np.errstate(invalid="ignore"):
            v2c = total[self.edge_col] - c2v
        return np.clip(v2c, -LLR_CLAMP, LLR_CLAMP), total

    def check_to_var(self, v2c: np.ndarray, syndrome: np.ndarray | None = None) -> np.ndarray:
        """Exclusive tanh-product rule, 2 atanh(prod_{other edges} tanh(m/2))."""
        t = np.tanh(0.5 * v2c)
        mag = np.abs(t)
        zero = mag == 0.0
        logm = np.log(np.where(zero, 1.0, mag))
        neg = t < 0
        rows = self.edge_row
        m = self.n_rows
        sum_log = np.bincount(rows, weights=logm, minlength=m)
        n_zero = np.bincount(rows, weights=zero, minlength=m)
        parity = np.bincount(rows, weights=neg, minlength=m).astype(np.int64)
        if syndrome is not None:
            parity += syndrome
        ex_zero = n_zero[rows] - zero
        ex_parity = (parity[rows] - neg) & 1
        prod = np.exp(sum_log[rows] - logm)
        prod[ex_zero > 0] = 0.0
        prod = np.where(ex_parity == 1, -prod, prod)
        with np.errstate(divide="ignore"):
            out = 2.0 * np.arctanh(prod)
        return np.clip(out, -LLR_CLAMP, LLR_CLAMP)

    def unsatisfied(self, bits: np.ndarray, syndrome: np.ndarray | None) -> int:
        s = mat_vec_syndrome(self.H, bits).astype(np.int64)
        if syndrome is not None:
            s ^= syndrome
        return int(s.sum())

    def decode(self, prior, syndrome=None, max_iters: int = 200, damping: float = 1.0,
               early_stop: bool = True) -> DecodeResult:
        """Run up to ``max_iters`` flooding iterations.

        With ``early_stop`` the decoder halts as soon as the hard decisions
        satisfy every check (checked before the first iteration too). Without
        it, decoding continues until the messages reach a fixed point.
        """
        prior = np.asarray(prior, dtype=np.float64)
        if prior.shape != (self.n_cols,):
            raise ValueError(f"prior length {prior.shape} does not match {self.n_cols} columns")
        if syndrome is not None:
            syndrome = as_bits(syndrome, self.n_rows).astype(np.int64)
        if not 0 < damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        c2v = np.zeros(self.edge_row.size)
        total = prior
        it = 0
        while True:
            bits = (total < 0).astype(np.uint8)
            if early_stop or it == max_iters:
                unsat = self.unsatisfied(bits, syndrome)
                if (early_stop and unsat == 0) or it == max_iters:
                    break
            v2c, _ = self.var_to_check(prior, c2v)
            new = self.check_to_var(v2c, syndrome)
            if damping < 1.0:
                new = damping * new + (1.0 - damping) * c2v
            it += 1
            if not early_stop and np.array_equal(new, c2v):
                c2v = new
                _, total = self.var_to_check(prior, c2v)
                bits = (total < 0).astype(np.uint8)
                unsat = self.unsatisfied(bits, syndrome)
                break
            c2v = new
            _, total = self.var_to_check(prior, c2v)
        return DecodeResult({"all": bits}, unsat == 0, it, unsat, total)


@functools.lru_cache(maxsize=64)
def _decoder(H: SparseBinaryMatrix) -> SumProductDecoder:
    return SumProductDecoder(H)


def bp_channel_decode(H: SparseBinaryMatrix, priors, max_iters: int = 200, damping: float = 1.0,
                      syndrome=None) -> DecodeResult:
    return _decoder(H).decode(priors, syndrome, max_iters, damping)


def sw_source_decode(Hs: SparseBinaryMatrix, syndrome, side_info, rho: float,
                     max_iters: int = 200, damping: float = 1.0) -> DecodeResult:
    """Estimate W from its syndrome ``W Hs^T`` and side information ``W xor BSC(rho)``."""
    side_info = as_bits(side_info, Hs.n_cols)
    res = _decoder(Hs).decode(correlation_llr(rho, side_info), as_bits(syndrome, Hs.n_rows),
                              max_iters, damping)
    res.decisions = {"w": res.decisions["all"]}
    return res


# ---------------------------------------------------------------------------
# relay decoders for node ``node`` (0 or 1) recovering the other node's source


def _split(cb: RelayCodebook, node: int):
    own_H, other_H = cb.index_code(node), cb.index_code(1 - node)
    return own_H, other_H, cb.source_code(1 - node)


@functools.lru_cache(maxsize=16)
def _channel_graph(cb: RelayCodebook, node: int) -> SumProductDecoder:
    # own bin-index columns are known: they fold into the check parities
    _, other_H, _ = _split(cb, node)
    return SumProductDecoder(SparseBinaryMatrix.hstack([other_H, cb.H0]))


@functools.lru_cache(maxsize=16)
def _joint_graph(cb: RelayCodebook, node: int) -> SumProductDecoder:
    """Columns (w_other, b_other, x); rows: source checks then downlink checks."""
    _, other_H, Hs = _split(cb, node)
    n, k = cb.n, other_H.n_cols
    top = SparseBinaryMatrix.hstack([Hs, SparseBinaryMatrix.identity(k),
                                     SparseBinaryMatrix.from_columns(k, n, [[]] * n)])
    bottom = SparseBinaryMatrix.hstack([SparseBinaryMatrix.from_columns(n, n, [[]] * n), other_H, cb.H0])
    return SumProductDecoder(SparseBinaryMatrix.vstack([top, bottom]))


def _check_inputs(cb: RelayCodebook, node: int, own_bits, own_index, x_llr):
    if node not in (0, 1):
        raise ValueError("node must be 0 or 1")
    own_bits = as_bits(own_bits, cb.n)
    own_index = as_bits(own_index, cb.index_code(node).n_cols)
    x_llr = np.asarray(x_llr, dtype=np.float64)
    if x_llr.shape != (cb.n,):
        raise ValueError("one channel LLR per parity bit expected")
    return own_bits, own_index, x_llr


def separate_decode(cb: RelayCodebook, node: int, own_bits, own_index, x_llr, rho: float,
                    max_iters: int = 200) -> DecodeResult:
    """Channel decoding of the other node's bin index, then Slepian-Wolf decoding.

    Stage 1 treats the other index as erased and its own index as known;
    stage 2 works from the hard-decided index alone, with no feedback.
    """
    own_bits, own_index, x_llr = _check_inputs(cb, node, own_bits, own_index, x_llr)
    own_H, other_H, Hs = _split(cb, node)
    k = other_H.n_cols
    dec = _channel_graph(cb, node)
    prior = np.concatenate([np.zeros(k), x_llr])
    s1 = dec.decode(prior, mat_vec_syndrome(own_H, own_index), max_iters)
    b_hat = s1.decisions["all"][:k]
    s2 = sw_source_decode(Hs, b_hat, own_bits, rho, max_iters)
    return DecodeResult({"w": s2.decisions["w"], "b": b_hat, "x": s1.decisions["all"][k:]},
                        s1.converged and s2.converged, s1.iterations + s2.iterations,
                        s1.unsatisfied_checks + s2.unsatisfied_checks, None,
                        ((s1.converged, s1.iterations), (s2.converged, s2.iterations)))


def joint_decode(cb: RelayCodebook, node: int, own_bits, own_index, x_llr, rho: float,
                 max_iters: int = 200) -> DecodeResult:
    """One sum-product run over source checks, correlation priors and downlink checks.

    With a flooding schedule every factor reads the previous half-iteration's
    messages, so the order in which factor classes are visited is immaterial.
    """
    own_bits, own_index, x_llr = _check_inputs(cb, node, own_bits, own_index, x_llr)
    own_H, other_H, Hs = _split(cb, node)
    n, k = cb.n, other_H.n_cols
    dec = _joint_graph(cb, node)
    prior = np.concatenate([correlation_llr(rho, own_bits), np.zeros(k), x_llr])
    syndrome = np.concatenate([np.zeros(k, dtype=np.uint8), mat_vec_syndrome(own_H, own_index)])
    r = dec.decode(prior, syndrome, max_iters)
    bits = r.decisions["all"]
    return DecodeResult({"w": bits[:n], "b": bits[n:n + k], "x": bits[n + k:]}, r.converged,
                        r.iterations, r.unsatisfied_checks, r.posterior,
                        ((r.converged, r.iterations),))


DECODERS = {"separate": separate_decode, "joint": joint_decode}
