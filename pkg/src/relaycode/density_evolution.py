"""Multi-edge density evolution by population dynamics, exact BEC recursion,
threshold searches and achievable-region sweeps.

A :class:`DeGraph` lists variable and check node types with per-edge-type
degrees. Node weights are relative counts (any common scale). Populations hold
variable-to-check and check-to-variable LLR samples per edge type; each
iteration regenerates every population from the previous one by drawing node
types in proportion to their share of that edge type's sockets. All messages
are computed under the all-zero codeword, which is exact for the symmetric
channels used here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .channels import ChannelModel
from .code_construction import MultiEdgeEnsemble, largest_remainder
from .info_region import binary_entropy, biawgn_capacity

LLR_CLAMP = 50.0
TARGET_ERROR = 1e-5
MIN_POPULATION = 10_000
STALL_WINDOW = 50
STALL_RATIO = 0.99

PRIORS = ("channel", "correlation", "zero")
_PRIOR_OF_KIND = {"x": "channel", "w": "correlation", "b": "zero", "punctured": "zero"}


@dataclass(frozen=True)
class DeVariable:
    weight: float
    degrees: tuple[tuple[str, int], ...]
    prior: str                  # channel | correlation | zero
    measured: bool = False      # contributes to the residual error estimate

    def deg(self, t: str) -> int:
        return dict(self.degrees).get(t, 0)


@dataclass(frozen=True)
class DeCheck:
    weight: float
    degrees: tuple[tuple[str, int], ...]

    def deg(self, t: str) -> int:
        return dict(self.degrees).get(t, 0)


@dataclass(frozen=True)
class DeGraph:
    name: str
    edge_types: tuple[str, ...]
    variables: tuple[DeVariable, ...]
    checks: tuple[DeCheck, ...]

    def __post_init__(self):
        if self.variables and not any(v.measured for v in self.variables):
            raise ValueError("at least one variable type must be measured")
        for v in self.variables:
            if v.prior not in PRIORS:
                raise ValueError(f"unknown prior {v.prior!r}")

    def socket_shares(self, t: str, side: str) -> list[tuple[object, float]]:
        """Node types incident to type-t edges with their edge-perspective probability."""
        items = self.variables if side == "variable" else self.checks
        pairs = [(c, c.weight * c.deg(t)) for c in items if c.deg(t) > 0]
        tot = sum(w for _, w in pairs)
        return [(c, w / tot) for c, w in pairs]

    @classmethod
    def from_ensemble(cls, ens: MultiEdgeEnsemble, measured_kinds: Iterable[str] | None = None) -> "DeGraph":
        measured = set(measured_kinds or {v.kind for v in ens.variables})
        variables = tuple(DeVariable(v.fraction, v.degrees, _PRIOR_OF_KIND[v.kind], v.kind in measured)
                          for v in ens.variables)
        checks = tuple(DeCheck(c.fraction * ens.checks_per_variable, c.degrees) for c in ens.checks)
        return cls(ens.name, ens.edge_types, variables, checks)


# ---------------------------------------------------------------------------
# views of the relay system (node 1 recovering the source of node 2)


def _downlink_parts(ens_down: MultiEdgeEnsemble):
    b2 = [v for v in ens_down.variables if v.deg("b2")]
    xs = [v for v in ens_down.variables if v.deg("x")]
    if len(b2) != 1 or not xs:
        raise ValueError("downlink ensemble needs one b2 class and parity classes")
    x_total = sum(v.fraction for v in xs)
    k_over_n = b2[0].fraction / x_total
    n_checks = ens_down.checks_per_variable / x_total       # channel checks per parity bit
    x_vars = tuple(DeVariable(v.fraction / x_total, (("x", v.deg("x")),), "channel") for v in xs)
    checks = tuple(DeCheck(c.fraction * n_checks,
                           tuple((t, d) for t, d in (("b", c.deg("b2")), ("x", c.deg("x"))) if d))
                   for c in ens_down.checks)
    return b2[0].deg("b2"), k_over_n, x_vars, checks


def channel_view(ens_down: MultiEdgeEnsemble) -> DeGraph:
    """Downlink decoding of the other node's bin index with the own index known."""
    db, k, x_vars, checks = _downlink_parts(ens_down)
    b = DeVariable(k, (("b", db),), "zero", measured=True)
    return DeGraph(f"{ens_down.name}:channel", ("b", "x"), (b,) + x_vars, checks)


def source_view(ens_src: MultiEdgeEnsemble) -> DeGraph:
    """Slepian-Wolf decoding with the bin index delivered without error."""
    return DeGraph.from_ensemble(ens_src, measured_kinds={"w"})


def joint_view(ens_down: MultiEdgeEnsemble, ens_src: MultiEdgeEnsemble) -> DeGraph:
    """Joint graph: source checks tie the source bits to the unknown bin bits (s-edges)."""
    db, k, x_vars, chan_checks = _downlink_parts(ens_down)
    (src_check,) = ens_src.checks
    w_vars = tuple(DeVariable(v.fraction, (("w", v.deg("w")),), "correlation", measured=True)
                   for v in ens_src.variables)
    b = DeVariable(k, (("s", 1), ("b", db)), "zero")
    src = DeCheck(k, (("w", src_check.deg("w")), ("s", 1)))
    return DeGraph(f"{ens_down.name}+{ens_src.name}:joint", ("w", "s", "b", "x"),
                   w_vars + (b,) + x_vars, (src,) + chan_checks)


# ---------------------------------------------------------------------------
# exact BEC recursion


def de_bec_exact(graph: DeGraph | MultiEdgeEnsemble, epsilon: float,
                 erasure: dict[str, float] | None = None, tol: float = 1e-12,
                 max_iters: int = 10_000) -> dict[str, float]:
    """Fixed point of the multi-edge BEC recursion.

    ``epsilon`` is the channel erasure probability; ``erasure`` overrides the
    prior erasure probability per prior name (zero priors default to 1,
    correlation priors to 1 as well, i.e. no side information). Returns the
    variable-to-check erasure probability per edge type.
    """
    if isinstance(graph, MultiEdgeEnsemble):
        graph = DeGraph.from_ensemble(graph)
    eps = {"channel": epsilon, "zero": 1.0, "correlation": 1.0}
    eps.update(erasure or {})
    types = graph.edge_types
    var_sh = {t: graph.socket_shares(t, "variable") for t in types}
    chk_sh = {t: graph.socket_shares(t, "check") for t in types}
    if epsilon == 0 and all(v.prior == "channel" for v in graph.variables):
        return {t: 0.0 for t in types}
    x = {t: 1.0 for t in types}
    for _ in range(max_iters):
        y = {}
        for t in types:
            acc = 0.0
            for c, p in chk_sh[t]:
                acc += p * math.prod((1.0 - x[s]) ** (c.deg(s) - (s == t)) for s in types)
            y[t] = 1.0 - acc
        new = {}
        for t in types:
            acc = 0.0
            for v, p in var_sh[t]:
                acc += p * eps[v.prior] * math.prod(y[s] ** (v.deg(s) - (s == t)) for s in types)
            new[t] = acc
        delta = max(abs(new[t] - x[t]) for t in types)
        x = new
        if delta < tol:
            break
    return x


def bec_threshold_exact(graph: DeGraph | MultiEdgeEnsemble, tol: float = 1e-6) -> float:
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if max(de_bec_exact(graph, mid).values()) < 1e-9:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# population dynamics


@dataclass(frozen=True)
class DePoint:
    rho: float | None
    sigma2_d: float | None          # channel parameter (sigma^2, or erasure prob on the BEC)
    converged: bool
    residual_error: float
    iterations: int

    def __post_init__(self):
        if not 0.0 <= self.residual_error <= 1.0:
            raise ValueError("residual error out of range")


def _as_channel(channel) -> ChannelModel:
    if isinstance(channel, ChannelModel):
        return channel
    return ChannelModel.biawgn(float(channel))


def _prior_sampler(channel: ChannelModel, rho: float | None, rng: np.random.Generator) -> Callable:
    def sample(prior: str, size: int) -> np.ndarray:
        if prior == "zero":
            return np.zeros(size)
        if prior == "correlation":
            if rho is None:
                raise ValueError("graph has correlation priors but rho is None")
            mag = math.log((1 - rho) / rho)
            return np.where(rng.random(size) < rho, -mag, mag)
        if channel.kind == "biawgn":
            s2 = channel.param
            return (2.0 / s2) * (1.0 + math.sqrt(s2) * rng.standard_normal(size))
        if channel.kind == "bec":
            return np.where(rng.random(size) < channel.param, 0.0, LLR_CLAMP)
        if channel.kind == "bsc":
            p = channel.param
            mag = LLR_CLAMP if p == 0 else math.log((1 - p) / p)
            return np.where(rng.random(size) < p, -mag, mag)
        return np.full(size, LLR_CLAMP)
    return sample


def _error_fraction(llr: np.ndarray) -> float:
    return float(np.mean(llr < 0) + 0.5 * np.mean(llr == 0))


class PopulationDynamics:
    """Sampled density evolution on a :class:`DeGraph`."""

    def __init__(self, graph: DeGraph, channel, rho: float | None = None,
                 pop_size: int = 100_000, seed: int = 0):
        if pop_size < MIN_POPULATION:
            raise ValueError(f"population size must be at least {MIN_POPULATION}")
        self.graph = graph
        self.channel = _as_channel(channel)
        self.rho = rho
        self.P = pop_size
        self.rng = np.random.default_rng(seed)
        self.prior = _prior_sampler(self.channel, rho, self.rng)
        types = graph.edge_types
        self._var_plan = {t: self._plan(graph.socket_shares(t, "variable")) for t in types}
        self._chk_plan = {t: self._plan(graph.socket_shares(t, "check")) for t in types}
        measured = [v for v in graph.variables if v.measured]
        tot = sum(v.weight for v in measured)
        self._measure_plan = self._plan([(v, v.weight / tot) for v in measured])
        self.v2c = {t: np.zeros(pop_size) for t in types}
        self.c2v = {t: np.zeros(pop_size) for t in types}
        for t in types:
            self.v2c[t] = self._var_messages(t, initial=True)

    def _plan(self, shares):
        counts = largest_remainder([p for _, p in shares], self.P)
        return [(node, k) for (node, _), k in zip(shares, counts) if k]

    def _draw(self, pop: np.ndarray, rows: int, cols: int) -> np.ndarray:
        return pop[self.rng.integers(0, self.P, size=(rows, cols))]

    def _var_messages(self, t: str | None, initial: bool = False) -> np.ndarray:
        plan = self._measure_plan if t is None else self._var_plan[t]
        out = []
        for v, k in plan:
            msg = self.prior(v.prior, k)
            if not initial:
                for s, d in v.degrees:
                    d -= (s == t)
                    if d > 0:
                        msg = msg + self._draw(self.c2v[s], k, d).sum(axis=1)
            out.append(msg)
        return np.clip(np.concatenate(out), -LLR_CLAMP, LLR_CLAMP)

    def _check_messages(self, t: str, tanh_half: dict[str, np.ndarray]) -> np.ndarray:
        out = []
        for c, k in self._chk_plan[t]:
            prod = np.ones(k)
            for s, d in c.degrees:
                d -= (s == t)
                if d > 0:
                    prod *= self._draw(tanh_half[s], k, d).prod(axis=1)
            out.append(prod)
        with np.errstate(divide="ignore"):
            msg = 2.0 * np.arctanh(np.concatenate(out))
        return np.clip(msg, -LLR_CLAMP, LLR_CLAMP)

    def step(self) -> None:
        types = self.graph.edge_types
        tanh_half = {t: np.tanh(0.5 * self.v2c[t]) for t in types}
        self.c2v = {t: self._check_messages(t, tanh_half) for t in types}
        self.v2c = {t: self._var_messages(t) for t in types}

    def residual_error(self) -> float:
        return _error_fraction(self._var_messages(None))

    def progress(self) -> float:
        return sum(_error_fraction(self.v2c[t]) for t in self.graph.edge_types)

    def run(self, max_iters: int = 500) -> tuple[bool, float, int]:
        """Iterate until the measured error drops below the target, stalls, or max_iters."""
        history = []
        err = self.residual_error()
        for it in range(1, max_iters + 1):
            self.step()
            err = self.residual_error()
            if err < TARGET_ERROR:
                return True, err, it
            history.append(self.progress())
            if it > STALL_WINDOW and history[-1] > STALL_RATIO * history[-1 - STALL_WINDOW]:
                return False, err, it
        return False, err, max_iters


def de_run(graph: DeGraph, rho: float | None, channel, pop_size: int = 100_000,
           max_iters: int = 500, seed: int = 0) -> DePoint:
    """One sampled DE run; ``channel`` is a ChannelModel or a BIAWGN noise variance."""
    ch = _as_channel(channel)
    ok, err, it = PopulationDynamics(graph, ch, rho, pop_size, seed).run(max_iters)
    return DePoint(rho, ch.param, ok, min(err, 0.5), it)


def de_run_separate(ens_down: MultiEdgeEnsemble, ens_src: MultiEdgeEnsemble, rho: float, channel,
                    pop_size: int = 100_000, max_iters: int = 500, seed: int = 0) -> DePoint:
    """Channel stage then source stage; the source stage runs only if the index is recovered."""
    ch = _as_channel(channel)
    p1 = de_run(channel_view(ens_down), None, ch, pop_size, max_iters, seed)
    if not p1.converged:
        return DePoint(rho, ch.param, False, p1.residual_error, p1.iterations)
    p2 = de_run(source_view(ens_src), rho, ChannelModel.noiseless(), pop_size, max_iters, seed)
    return DePoint(rho, ch.param, p2.converged, p2.residual_error, p1.iterations + p2.iterations)


# ---------------------------------------------------------------------------
# threshold searches


@dataclass(frozen=True)
class Threshold:
    value: float | None             # None: no converging point in the bracket
    iterations: int                 # DE iterations at the returned point
    probes: int


def bisect_threshold(converges: Callable[[float], DePoint], lo: float, hi: float, tol: float,
                     hi_limit: float | None = None) -> Threshold:
    """Largest parameter in [lo, hi] at which ``converges`` succeeds, assuming monotonicity.

    If ``hi`` already converges the bracket is doubled up to ``hi_limit``.
    """
    probes = 1
    p_lo = converges(lo)
    if not p_lo.converged:
        return Threshold(None, p_lo.iterations, probes)
    while True:
        p_hi = converges(hi)
        probes += 1
        if not p_hi.converged:
            break
        lo, p_lo = hi, p_hi
        if hi_limit is None or hi >= hi_limit:
            return Threshold(hi, p_hi.iterations, probes)
        hi = min(2 * hi, hi_limit)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p = converges(mid)
        probes += 1
        if p.converged:
            lo, p_lo = mid, p
        else:
            hi = mid
    return Threshold(lo, p_lo.iterations, probes)


def de_threshold_sigma(graph: DeGraph, rho: float | None, tol: float = 1e-3, pop_size: int = 100_000,
                       max_iters: int = 500, seed: int = 0, lo: float = 0.05, hi: float = 4.0) -> Threshold:
    """Largest converging BIAWGN noise variance (bisection, common population seed)."""
    if tol < 1e-3:
        raise ValueError("tolerance below 1e-3 is beyond the population accuracy")
    return bisect_threshold(lambda s2: de_run(graph, rho, s2, pop_size, max_iters, seed),
                            lo, hi, tol, hi_limit=64.0)


def de_threshold_sigma_separate(ens_down, ens_src, rho: float, tol: float = 1e-3, pop_size: int = 100_000,
                                max_iters: int = 500, seed: int = 0, lo: float = 0.05,
                                hi: float = 4.0) -> Threshold:
    return bisect_threshold(
        lambda s2: de_run_separate(ens_down, ens_src, rho, s2, pop_size, max_iters, seed),
        lo, hi, tol, hi_limit=64.0)


def de_threshold_bec(graph: DeGraph, tol: float = 1e-3, pop_size: int = 100_000,
                     max_iters: int = 500, seed: int = 0) -> Threshold:
    return bisect_threshold(lambda e: de_run(graph, None, ChannelModel.bec(e), pop_size, max_iters, seed),
                            0.0, 1.0, tol)


def de_source_threshold(ens_src: MultiEdgeEnsemble, tol: float = 5e-4, pop_size: int = 100_000,
                        max_iters: int = 500, seed: int = 0) -> Threshold:
    """Largest DSBS crossover decodable from an error-free syndrome."""
    graph = source_view(ens_src)
    return bisect_threshold(
        lambda rho: de_run(graph, rho, ChannelModel.noiseless(), pop_size, max_iters, seed),
        1e-3, 0.5 - 1e-3, tol)


# ---------------------------------------------------------------------------
# region sweep


@dataclass(frozen=True)
class SweepPoint:
    rho: float
    h_rho: float
    sigma2_threshold: float | None
    capacity_at_threshold: float | None
    converged_iters: int

    def row(self) -> list:
        s2 = "" if self.sigma2_threshold is None else f"{self.sigma2_threshold:.6f}"
        cap = "" if self.capacity_at_threshold is None else f"{self.capacity_at_threshold:.6f}"
        return [f"{self.rho:.6f}", f"{self.h_rho:.6f}", s2, cap, self.converged_iters]


SWEEP_HEADER = ["rho", "h_rho", "sigma2_threshold", "capacity_at_threshold", "converged_iters"]


def de_region_sweep(ens_down: MultiEdgeEnsemble, ens_src: MultiEdgeEnsemble, rho_grid: Sequence[float],
                    mode: str = "joint", tol: float = 1e-3, pop_size: int = 100_000,
                    max_iters: int = 500, seed: int = 0) -> list[SweepPoint]:
    """Threshold noise variance for each rho; ``mode`` is ``joint`` or ``separate``."""
    if any(not 0 < r < 0.5 for r in rho_grid):
        raise ValueError("rho grid must lie in (0, 1/2)")
    if mode not in ("joint", "separate"):
        raise ValueError(f"unknown decoding mode {mode!r}")
    graph = joint_view(ens_down, ens_src) if mode == "joint" else None
    out = []
    for rho in rho_grid:
        if mode == "joint":
            th = de_threshold_sigma(graph, rho, tol, pop_size, max_iters, seed)
        else:
            th = de_threshold_sigma_separate(ens_down, ens_src, rho, tol, pop_size, max_iters, seed)
        cap = None if th.value is None else biawgn_capacity(th.value)
        out.append(SweepPoint(rho, binary_entropy(rho), th.value, cap, th.iterations))
    return out


def write_sweep_csv(points: Sequence[SweepPoint], path: str | Path | None = None) -> str:
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in points:
        w.writerow(p.row())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
