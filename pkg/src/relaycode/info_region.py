"""Entropies, capacities and single-letter region checks for the multi-way relay network.

Nodes are indexed from 0 internally; reports label them 1..L.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, optimize

STRICT_EPS = 1e-9


class Verdict(str, Enum):
    ACHIEVABLE = "achievable"
    NOT_ACHIEVABLE = "not_achievable"
    BOUNDARY = "boundary"


# ---------------------------------------------------------------------------
# scalar information measures


def binary_entropy(p: float) -> float:
    """h(p) in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def bsc_capacity(crossover: float) -> float:
    if not 0.0 <= crossover <= 0.5:
        raise ValueError(f"BSC crossover must lie in [0, 1/2], got {crossover}")
    return 1.0 - binary_entropy(crossover)


def biawgn_capacity(noise_variance: float) -> float:
    """Capacity (bits/use) of BPSK (+-1) over AWGN with variance ``noise_variance``.

    Uniform input is optimal. Evaluated as
    ``1 - E[log2(1 + exp(-2Y/s2))]`` with ``Y ~ N(1, s2)`` by adaptive quadrature.
    """
    s2 = float(noise_variance)
    if not s2 > 0.0 or not math.isfinite(s2):
        raise ValueError(f"noise variance must be positive, got {noise_variance}")
    sigma = math.sqrt(s2)

    def integrand(z: float) -> float:
        y = 1.0 + sigma * z
        pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return pdf * np.logaddexp(0.0, -2.0 * y / s2) / math.log(2.0)

    # z is standardised noise; the integrand is negligible past 12 sigma
    centre = -1.0 / sigma  # where the softplus bends (y = 0)
    pts = [c for c in (centre,) if -12.0 < c < 12.0]
    loss, _ = integrate.quad(integrand, -12.0, 12.0, points=pts or None, limit=200,
                             epsabs=1e-12, epsrel=1e-12)
    return min(1.0, max(0.0, 1.0 - loss))


def biawgn_sigma2_for_capacity(capacity: float) -> float:
    """Inverse of :func:`biawgn_capacity` (noise variance giving ``capacity``)."""
    if not 0.0 < capacity < 1.0:
        raise ValueError("capacity must lie in (0, 1)")
    f = lambda ls2: biawgn_capacity(math.exp(ls2)) - capacity
    return math.exp(optimize.brentq(f, math.log(1e-4), math.log(1e5), xtol=1e-13))


# ---------------------------------------------------------------------------
# sources


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf of L discrete variables; ``probs`` has shape (k1, ..., kL)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim < 1:
            raise ValueError("pmf needs at least one variable")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("pmf entries must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def num_vars(self) -> int:
        return self.probs.ndim

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return self.probs.shape

    def marginal(self, keep: Iterable[int]) -> np.ndarray:
        keep = sorted(set(keep))
        self._check_indices(keep)
        drop = tuple(i for i in range(self.num_vars) if i not in keep)
        return self.probs.sum(axis=drop) if drop else self.probs

    def entropy(self, subset: Iterable[int]) -> float:
        subset = list(subset)
        if not subset:
            return 0.0
        m = self.marginal(subset).ravel()
        m = m[m > 0]
        return float(-(m * np.log2(m)).sum())

    def _check_indices(self, idx: Iterable[int]) -> None:
        for i in idx:
            if not 0 <= i < self.num_vars:
                raise IndexError(f"variable index {i} out of range for L={self.num_vars}")

    # text format: "L k1 .. kL" then one probability per line, row-major
    def to_text(self) -> str:
        head = " ".join(str(v) for v in (self.num_vars, *self.alphabet_sizes))
        body = "\n".join(repr(float(x)) for x in self.probs.ravel())
        return f"{head}\n{body}\n"

    @classmethod
    def from_text(cls, text: str) -> "JointPmf":
        tokens: list[str] = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.append(line)
        if not tokens:
            raise ValueError("empty pmf file")
        head = [int(t) for t in tokens[0].split()]
        L, sizes = head[0], tuple(head[1:])
        if len(sizes) != L:
            raise ValueError(f"header declares L={L} but lists {len(sizes)} alphabet sizes")
        vals = [float(t) for line in tokens[1:] for t in line.split()]
        if len(vals) != math.prod(sizes):
            raise ValueError(f"expected {math.prod(sizes)} probabilities, got {len(vals)}")
        return cls(np.array(vals).reshape(sizes))

    @classmethod
    def load(cls, path: str | Path) -> "JointPmf":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def conditional_entropy(pmf: JointPmf, target: Iterable[int], given: Iterable[int] = ()) -> float:
    """H(W_target | W_given) in bits."""
    target, given = set(target), set(given)
    if not target:
        raise ValueError("target set must be nonempty")
    if target & given:
        raise ValueError("target and given sets must be disjoint")
    pmf._check_indices(target | given)
    return pmf.entropy(target | given) - pmf.entropy(given)


@dataclass(frozen=True)
class DsbsSource:
    """Doubly symmetric binary source: uniform W1, W2 = W1 xor Bern(rho)."""

    rho: float

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 0.5:
            raise ValueError(f"DSBS crossover must lie in (0, 1/2), got {self.rho}")

    def to_pmf(self) -> JointPmf:
        r = self.rho
        return JointPmf(np.array([[0.5 * (1 - r), 0.5 * r], [0.5 * r, 0.5 * (1 - r)]]))

    @property
    def conditional_entropy(self) -> float:
        return binary_entropy(self.rho)


# Bernoulli parameters of the independent bits U_1, U_2, U_3, U_12, U_13, U_23
COUNTEREXAMPLE_PARAMS = {
    (0,): 0.0085,
    (1,): 0.0052,
    (2,): 0.0052,
    (0, 1): 0.0128,
    (0, 2): 0.0128,
    (1, 2): 0.138,
}


def build_appendix_b_source() -> JointPmf:
    """Three-node source W_l = xor of the U bits whose label contains l.

    Built by exhaustive enumeration of the 2^6 outcomes of the independent U bits.
    """
    probs = np.zeros((2, 2, 2))
    items = list(COUNTEREXAMPLE_PARAMS.items())
    for bits in itertools.product((0, 1), repeat=len(items)):
        p = 1.0
        w = [0, 0, 0]
        for b, (members, q) in zip(bits, items):
            p *= q if b else 1.0 - q
            if b:
                for m in members:
                    w[m] ^= 1
        probs[tuple(w)] += p
    return JointPmf(probs)


# ---------------------------------------------------------------------------
# region queries


@dataclass(frozen=True)
class RegionQuery:
    source: JointPmf
    uplink_capacities: tuple[float, ...]
    downlink_mutuals: tuple[float, ...]

    def __post_init__(self) -> None:
        up = tuple(float(c) for c in self.uplink_capacities)
        down = tuple(float(c) for c in self.downlink_mutuals)
        L = self.source.num_vars
        if len(up) != L or len(down) != L:
            raise ValueError(f"need {L} uplink capacities and {L} downlink mutual informations")
        if min(up + down) < 0:
            raise ValueError("capacities must be nonnegative")
        object.__setattr__(self, "uplink_capacities", up)
        object.__setattr__(self, "downlink_mutuals", down)

    @property
    def num_nodes(self) -> int:
        return self.source.num_vars

    @classmethod
    def two_node_dsbs(cls, rho: float, uplink: Sequence[float], downlink: Sequence[float]) -> "RegionQuery":
        return cls(DsbsSource(rho).to_pmf(), tuple(uplink), tuple(downlink))

    @classmethod
    def binary_symmetric_downlink(cls, source: JointPmf, uplink: Sequence[float],
                                  crossovers: Sequence[float]) -> "RegionQuery":
        """Downlink BSCs; the uniform input maximises every I(X0;Y_l) at once."""
        return cls(source, tuple(uplink), tuple(bsc_capacity(p) for p in crossovers))


def strict_subsets(L: int) -> list[tuple[int, ...]]:
    return [s for k in range(1, L) for s in itertools.combinations(range(L), k)]


def _label(subset: Sequence[int]) -> str:
    return ",".join(str(i + 1) for i in subset)


@dataclass(frozen=True)
class Inequality:
    """``lhs < rhs``; slack = rhs - lhs."""

    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class JsccReport:
    verdict: Verdict
    inequalities: tuple[Inequality, ...]

    @property
    def min_slack(self) -> float:
        return min(q.slack for q in self.inequalities)

    def format(self) -> str:
        lines = [f"{q.name:<40s} {q.lhs:10.6f} < {q.rhs:10.6f}   slack {q.slack:+.6f}"
                 for q in self.inequalities]
        lines.append(f"JSCC: {self.verdict.value.upper()}")
        return "\n".join(lines)


def _classify(slacks: Iterable[float], eps: float) -> Verdict:
    slacks = list(slacks)
    if any(s <= -eps for s in slacks):
        return Verdict.NOT_ACHIEVABLE
    if any(abs(s) < eps for s in slacks):
        return Verdict.BOUNDARY
    return Verdict.ACHIEVABLE


def check_jscc_achievable(q: RegionQuery, eps: float = STRICT_EPS) -> JsccReport:
    """Uplink conditions for every nonempty strict subset plus the per-node downlink conditions."""
    L = q.num_nodes
    everyone = set(range(L))
    ineqs = []
    for s in strict_subsets(L):
        h = conditional_entropy(q.source, s, everyone - set(s))
        ineqs.append(Inequality(f"H(W[{_label(s)}]|rest) < sum Cup", h,
                                sum(q.uplink_capacities[i] for i in s)))
    for l in range(L):
        others = tuple(sorted(everyone - {l}))
        h = conditional_entropy(q.source, others, (l,))
        ineqs.append(Inequality(f"H(W[~{l + 1}]|W{l + 1}) < I(X0;Y{l + 1})", h, q.downlink_mutuals[l]))
    return JsccReport(_classify((x.slack for x in ineqs), eps), tuple(ineqs))


@dataclass(frozen=True)
class Certificate:
    """Farkas-style contradiction for the separation rate constraints.

    ``lower_terms`` are (weight, subset, bound) with sum_{subset} r > bound;
    ``upper_terms`` are (weight, subset, bound) with sum_{subset} r < bound.
    The weighted upper form dominates the weighted lower form coefficientwise,
    yet its bound is no larger: no nonnegative rate tuple satisfies both.
    """

    lower_terms: tuple[tuple[float, tuple[int, ...], float], ...]
    upper_terms: tuple[tuple[float, tuple[int, ...], float], ...]
    lower_value: float
    upper_value: float

    @property
    def gap(self) -> float:
        return self.lower_value - self.upper_value

    def max_form(self) -> tuple[list[tuple[int, ...]], float, float]:
        """Rewrite as ``max{sums} > a`` versus ``max{sums} < b``.

        a = lower_value / total upper weight, b = largest upper bound.
        """
        total = sum(w for w, _, _ in self.upper_terms)
        sums = [s for _, s, _ in self.upper_terms]
        return sums, self.lower_value / total, max(b for _, _, b in self.upper_terms)

    def describe(self) -> str:
        def fmt(terms):
            return " + ".join(f"{w:g}*({'+'.join(f'r{i + 1}' for i in s)})" for w, s, _ in terms)

        sums, a, b = self.max_form()
        names = ", ".join("+".join(f"r{i + 1}" for i in s) for s in sums)
        return (f"{fmt(self.lower_terms)} > {self.lower_value:.4f}\n"
                f"{fmt(self.upper_terms)} < {self.upper_value:.4f}\n"
                f"=> max{{{names}}} > {a:.4f} but max{{{names}}} < {b:.4f}")


@dataclass(frozen=True)
class SeparationReport:
    feasible: bool
    rates: tuple[float, ...] | None
    margin: float
    certificate: Certificate | None = field(default=None)

    def format(self) -> str:
        if self.feasible:
            r = ", ".join(f"r{i + 1}={x:.6f}" for i, x in enumerate(self.rates))
            return f"separation: FEASIBLE (margin {self.margin:.3g})\nwitness: {r}"
        return f"separation: INFEASIBLE (best margin {self.margin:.3g})\ncertificate:\n{self.certificate.describe()}"


def _separation_constraints(q: RegionQuery):
    """Rows (kind, subset, coeffs, bound) of the strict rate constraints."""
    L = q.num_nodes
    everyone = set(range(L))
    rows = []
    for s in strict_subsets(L):
        a = np.zeros(L)
        a[list(s)] = 1.0
        h = conditional_entropy(q.source, s, everyone - set(s))
        rows.append(("lower", s, a, h))
        rows.append(("upper", s, a, sum(q.uplink_capacities[i] for i in s)))
    for l in range(L):
        s = tuple(sorted(everyone - {l}))
        a = np.zeros(L)
        a[list(s)] = 1.0
        rows.append(("upper", s, a, q.downlink_mutuals[l]))
    return rows


def check_separation_feasible(q: RegionQuery, eps: float = STRICT_EPS) -> SeparationReport:
    """Is there r >= 0 meeting every separation inequality with slack >= eps?

    Solves max t s.t. each strict inequality holds with slack t. The dual optimum
    supplies the infeasibility certificate.
    """
    L = q.num_nodes
    rows = _separation_constraints(q)
    # as A r + t <= b
    A = np.array([(-a if kind == "lower" else a) for kind, _, a, _ in rows])
    b = np.array([(-h if kind == "lower" else h) for kind, _, _, h in rows])
    m = len(rows)

    c = np.zeros(L + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, np.ones((m, 1))])
    bounds = [(0, None)] * L + [(None, 1.0)]
    res = optimize.linprog(c, A_ub=A_ub, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"separation LP failed: {res.message}")
    t = float(res.x[-1])
    if t >= eps:
        return SeparationReport(True, tuple(float(x) for x in res.x[:L]), t)

    # dual: min b.y  s.t.  A^T y >= 0, sum y = 1, y >= 0
    dual = optimize.linprog(b, A_ub=-A.T, b_ub=np.zeros(L), A_eq=np.ones((1, m)), b_eq=[1.0],
                            bounds=[(0, None)] * m, method="highs")
    if dual.status != 0:
        raise RuntimeError(f"separation dual LP failed: {dual.message}")
    y = dual.x
    keep = y > 1e-9 * y.max()
    scale = 1.0 / y[keep].min()
    lower, upper = [], []
    for yi, k, (kind, s, _, h) in zip(y, keep, rows):
        if not k:
            continue
        w = round(float(yi * scale), 9)
        (lower if kind == "lower" else upper).append((w, tuple(s), float(h)))
    lv = sum(w * h for w, _, h in lower)
    uv = sum(w * h for w, _, h in upper)
    cert = Certificate(tuple(lower), tuple(upper), lv, uv)
    return SeparationReport(False, None, t, cert)


def counterexample_query() -> RegionQuery:
    """The three-node source with C_up = 2 and downlink BSCs (0.0508, 0.184, 0.184)."""
    return RegionQuery.binary_symmetric_downlink(build_appendix_b_source(), (2.0, 2.0, 2.0),
                                                 (0.0508, 0.184, 0.184))


def entropy_table(pmf: JointPmf) -> list[tuple[str, float]]:
    """All H(W_S | W_rest) for nonempty strict subsets S, and each H(W_l)."""
    L = pmf.num_vars
    everyone = set(range(L))
    out = []
    for s in strict_subsets(L):
        rest = sorted(everyone - set(s))
        out.append((f"H(W{_label(s)}|W{_label(rest)})", conditional_entropy(pmf, s, rest)))
    for l in range(L):
        out.append((f"H(W{l + 1})", pmf.entropy([l])))
    return out
