"""Multi-edge LDPC ensembles, PEG construction and the relay downlink codebook.

The downlink parity-check matrix is ``H = [H1 | H2 | H0]``: ``H1``/``H2`` act
on the two nodes' bin indices, ``H0`` (square) on the transmitted parity
word. Source codes ``Hs1``/``Hs2`` map length-n source words to bin indices.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._peg import peg_kernel
from .binary_matrix import (GF2Elimination, SparseBinaryMatrix, mat_vec_syndrome,
                            peel_erasures, as_bits, DimensionError)

VAR_KINDS = ("w", "b", "x", "punctured")


class UnrealizableProfile(ValueError):
    pass


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class VariableClass:
    fraction: float                  # of all variable nodes
    degrees: tuple[tuple[str, int], ...]
    kind: str                        # w (source bit), b (bin bit), x (parity bit), punctured

    def __post_init__(self):
        if self.kind not in VAR_KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        object.__setattr__(self, "degrees", tuple(sorted(dict(self.degrees).items())))

    def deg(self, edge_type: str) -> int:
        return dict(self.degrees).get(edge_type, 0)

    @property
    def total_degree(self) -> int:
        return sum(d for _, d in self.degrees)


@dataclass(frozen=True)
class CheckClass:
    fraction: float                  # of all check nodes
    degrees: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(sorted(dict(self.degrees).items())))

    def deg(self, edge_type: str) -> int:
        return dict(self.degrees).get(edge_type, 0)

    @property
    def total_degree(self) -> int:
        return sum(d for _, d in self.degrees)


@dataclass(frozen=True)
class MultiEdgeEnsemble:
    """Node-perspective multi-edge degree profile.

    ``checks_per_variable`` is implied by edge balance and is checked to agree
    across edge types up to ``balance_tol`` (the tabulated profiles are rounded).
    """

    name: str
    edge_types: tuple[str, ...]
    variables: tuple[VariableClass, ...]
    checks: tuple[CheckClass, ...]
    balance_tol: float = 2e-3

    def __post_init__(self):
        for side, items in (("variable", self.variables), ("check", self.checks)):
            if not items:
                raise ValueError(f"no {side} classes")
            s = sum(c.fraction for c in items)
            if abs(s - 1.0) > 1e-9:
                raise ValueError(f"{side} fractions of {self.name} sum to {s}")
            for c in items:
                if c.fraction < 0 or any(d < 0 for _, d in c.degrees):
                    raise ValueError("negative fraction or degree")
                unknown = {t for t, _ in c.degrees} - set(self.edge_types)
                if unknown:
                    raise ValueError(f"undeclared edge types {unknown}")
        kappa = self.checks_per_variable
        for t in self.edge_types:
            ve, ce = self.var_edges_per_node(t), kappa * self.check_edges_per_node(t)
            if (ve == 0) != (ce == 0) or (ve > 0 and abs(ve - ce) > self.balance_tol * ve):
                raise UnrealizableProfile(
                    f"edge type {t!r} of {self.name} does not balance: {ve:.6f} vs {ce:.6f} per variable")

    def var_edges_per_node(self, t: str) -> float:
        return sum(v.fraction * v.deg(t) for v in self.variables)

    def check_edges_per_node(self, t: str) -> float:
        return sum(c.fraction * c.deg(t) for c in self.checks)

    @property
    def checks_per_variable(self) -> float:
        ve = sum(v.fraction * v.total_degree for v in self.variables)
        ce = sum(c.fraction * c.total_degree for c in self.checks)
        return ve / ce

    def edge_distribution(self, t: str, side: str = "variable") -> dict[int, float]:
        """Edge-perspective degree distribution of type-t edges (lambda or rho)."""
        items = self.variables if side == "variable" else self.checks
        acc: dict[int, float] = {}
        for c in items:
            d = c.deg(t)
            if d:
                acc[d] = acc.get(d, 0.0) + c.fraction * d
        tot = sum(acc.values())
        return {d: w / tot for d, w in sorted(acc.items())}

    def design_rate(self) -> float:
        return 1.0 - self.checks_per_variable

    # ---- text format
    def to_text(self) -> str:
        out = [f"ensemble {self.name}", "edge_types " + " ".join(self.edge_types), "[variables]"]
        for v in self.variables:
            degs = " ".join(f"{t}={d}" for t, d in v.degrees)
            out.append(f"{v.fraction!r} {v.kind} {degs}")
        out.append("[checks]")
        for c in self.checks:
            degs = " ".join(f"{t}={d}" for t, d in c.degrees)
            out.append(f"{c.fraction!r} {degs}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MultiEdgeEnsemble":
        name, edge_types, section = None, None, None
        variables, checks = [], []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("ensemble"):
                name = line.split(None, 1)[1].strip()
            elif line.startswith("edge_types"):
                edge_types = tuple(line.split()[1:])
            elif line in ("[variables]", "[checks]"):
                section = line[1:-1]
            else:
                tok = line.split()
                frac = float(tok[0])
                if section == "variables":
                    degs = tuple((k, int(v)) for k, v in (t.split("=") for t in tok[2:]))
                    variables.append(VariableClass(frac, degs, tok[1]))
                elif section == "checks":
                    degs = tuple((k, int(v)) for k, v in (t.split("=") for t in tok[1:]))
                    checks.append(CheckClass(frac, degs))
                else:
                    raise ValueError(f"line outside a section: {raw!r}")
        if name is None or edge_types is None:
            raise ValueError("ensemble file needs 'ensemble' and 'edge_types' lines")
        return cls(name, edge_types, tuple(variables), tuple(checks))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MultiEdgeEnsemble":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def node_fractions(lam: Mapping[int, float]) -> dict[int, float]:
    """Edge-perspective lambda -> node-perspective fractions (lambda_i / i normalised)."""
    w = {d: f / d for d, f in lam.items()}
    tot = sum(w.values())
    return {d: v / tot for d, v in w.items()}


# Optimised profiles: edge-perspective degree distributions and the fixed check-side degrees.
TABLE_I: dict[str, dict] = {
    "source_r12": {"lambda": {2: 0.1710, 3: 0.2075, 8: 0.0800, 9: 0.2657, 47: 0.1864, 48: 0.0894},
                   "d_w": 10, "rate": 0.5},
    "source_r14": {"lambda": {2: 0.1046, 3: 0.1984, 5: 0.1189, 6: 0.0006, 9: 0.1597, 10: 0.0616,
                              19: 0.0458, 20: 0.0453, 24: 0.1881, 25: 0.0770},
                   "d_w": 22, "rate": 0.25},
    "chan_sep_r12": {"lambda": {2: 0.3657, 3: 0.1203, 12: 0.0963, 13: 0.1797, 45: 0.0162, 46: 0.2218},
                     "d_b": 3, "d_x": 4, "rate": 0.5},
    "chan_sep_r14": {"lambda": {2: 0.3503, 3: 0.0731, 5: 0.0161, 6: 0.2043, 19: 0.0761, 20: 0.0370,
                                33: 0.1991, 34: 0.0440},
                     "d_b": 3, "d_x": 4, "rate": 0.25},
    "chan_joint_r12": {"lambda": {2: 0.5254, 3: 0.1612, 18: 0.1349, 19: 0.1785},
                       "d_b": 3, "d_x": 3, "rate": 0.5},
}


def source_ensemble(name: str, lam: Mapping[int, float], d_w: int) -> MultiEdgeEnsemble:
    nf = node_fractions(lam)
    variables = tuple(VariableClass(f, (("w", d),), "w") for d, f in nf.items())
    return MultiEdgeEnsemble(name, ("w",), variables, (CheckClass(1.0, (("w", d_w),)),))


def channel_ensemble(name: str, lam: Mapping[int, float], d_b: int, d_x: int,
                     rate: float) -> MultiEdgeEnsemble:
    """Downlink ensemble with edge classes b1, b2 (bin bits of node 1/2) and x (parity).

    Each check carries ``d_x`` x-edges and ``d_b`` bin-bit edges. The b-edges
    are split between the two nodes as evenly as integers allow: for odd d_b,
    half the checks take the extra edge from node 1 and half from node 2.
    Bin variables are regular with degree ``d_b / (2 * rate)``.
    """
    nf = node_fractions(lam)
    n_vars = 2 * rate + 1.0                    # per parity bit
    b_deg = d_b / (2 * rate)
    if abs(b_deg - round(b_deg)) > 1e-9:
        raise UnrealizableProfile(f"bin-variable degree {b_deg} is not an integer")
    b_deg = int(round(b_deg))
    variables = [VariableClass(rate / n_vars, (("b1", b_deg),), "b"),
                 VariableClass(rate / n_vars, (("b2", b_deg),), "b")]
    variables += [VariableClass(f / n_vars, (("x", d),), "x") for d, f in nf.items()]
    lo, hi = d_b // 2, d_b - d_b // 2
    if lo == hi:
        checks = (CheckClass(1.0, (("b1", lo), ("b2", hi), ("x", d_x))),)
    else:
        checks = (CheckClass(0.5, (("b1", hi), ("b2", lo), ("x", d_x))),
                  CheckClass(0.5, (("b1", lo), ("b2", hi), ("x", d_x))))
    return MultiEdgeEnsemble(name, ("b1", "b2", "x"), tuple(variables), checks)


def regular_ensemble(dv: int, dc: int, kind: str = "x") -> MultiEdgeEnsemble:
    return MultiEdgeEnsemble(f"regular_{dv}_{dc}", ("x",), (VariableClass(1.0, (("x", dv),), kind),),
                             (CheckClass(1.0, (("x", dc),)),))


@functools.lru_cache(maxsize=None)
def table1_ensemble(which: str) -> MultiEdgeEnsemble:
    if which not in TABLE_I:
        raise KeyError(f"unknown ensemble {which!r}; choose from {sorted(TABLE_I)}")
    e = TABLE_I[which]
    if which.startswith("source"):
        return source_ensemble(which, e["lambda"], e["d_w"])
    return channel_ensemble(which, e["lambda"], e["d_b"], e["d_x"], e["rate"])


def get_ensemble(spec: str) -> MultiEdgeEnsemble:
    """Tabulated profile name, ``regular_DV_DC``, or a path to an ensemble file."""
    if spec in TABLE_I:
        return table1_ensemble(spec)
    if spec.startswith("regular_"):
        dv, dc = spec.split("_")[1:3]
        return regular_ensemble(int(dv), int(dc))
    return MultiEdgeEnsemble.load(spec)


# ---------------------------------------------------------------------------
# PEG


def largest_remainder(fractions: Sequence[float], total: int) -> list[int]:
    raw = [f * total for f in fractions]
    counts = [int(math.floor(r)) for r in raw]
    short = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


@dataclass
class TannerGraph:
    """Mutable adjacency used during construction and repair."""

    n_checks: int
    var_adj: list[list[int]]          # per variable: checks
    var_types: list[list[int]]        # per variable: edge-type index per edge

    def matrix(self) -> SparseBinaryMatrix:
        return SparseBinaryMatrix.from_columns(self.n_checks, len(self.var_adj), self.var_adj)

    def swap_edge(self, v: int, rng: np.random.Generator, partners: Sequence[int]) -> bool:
        """Degree-preserving swap of a random edge of ``v`` with a random same-type edge of a partner."""
        if not self.var_adj[v]:
            return False
        for _ in range(50):
            k = int(rng.integers(len(self.var_adj[v])))
            c, t = self.var_adj[v][k], self.var_types[v][k]
            u = int(partners[rng.integers(len(partners))])
            if u == v:
                continue
            opts = [j for j, tt in enumerate(self.var_types[u]) if tt == t]
            if not opts:
                continue
            j = opts[int(rng.integers(len(opts)))]
            c2 = self.var_adj[u][j]
            if c2 in self.var_adj[v] or c in self.var_adj[u]:
                continue
            self.var_adj[v][k], self.var_adj[u][j] = c2, c
            return True
        return False


def _check_sockets(ensemble: MultiEdgeEnsemble, n_checks: int, edges_needed: dict[str, int],
                   rng: np.random.Generator) -> np.ndarray:
    """Per-check socket counts per edge type, matching ``edges_needed`` exactly."""
    T = len(ensemble.edge_types)
    counts = largest_remainder([c.fraction for c in ensemble.checks], n_checks)
    labels = np.repeat(np.arange(len(ensemble.checks)), counts)
    labels = labels[rng.permutation(n_checks)]
    caps = np.array([[ensemble.checks[l].deg(t) for t in ensemble.edge_types] for l in labels],
                    dtype=np.int64).reshape(n_checks, T)
    for ti, t in enumerate(ensemble.edge_types):
        diff = edges_needed[t] - int(caps[:, ti].sum())
        holders = np.flatnonzero(caps[:, ti] > 0)
        if diff and holders.size == 0:
            raise UnrealizableProfile(f"no check sockets for edge type {t!r}")
        step = 1 if diff > 0 else -1
        i = 0
        guard = 0
        while diff:
            c = holders[i % holders.size]
            if step > 0 or caps[c, ti] > 1:
                caps[c, ti] += step
                diff -= step
                guard = 0
            else:
                guard += 1
                if guard > holders.size:
                    raise UnrealizableProfile(f"cannot remove {abs(diff)} sockets of type {t!r}")
            i += 1
    return caps


def _run_peg(var_deg: np.ndarray, caps: np.ndarray, peg_types: Sequence[int],
             rng: np.random.Generator) -> TannerGraph:
    n_vars, T = var_deg.shape
    m = caps.shape[0]
    # process variables grouped by their first edge type in ``peg_types``, then by ascending degree
    type_rank = {t: i for i, t in enumerate(peg_types)}
    lead = np.array([min((type_rank[t] for t in range(T) if var_deg[v, t] > 0), default=T)
                     for v in range(n_vars)])
    order = np.lexsort((np.arange(n_vars), var_deg.sum(axis=1), lead)).astype(np.int64)
    tie_rank = rng.permutation(m).astype(np.int64)
    max_vdeg = int(var_deg.sum(axis=1).max())
    max_cdeg = int(caps.sum(axis=1).max())
    var_adj, var_cnt, _, _, status = peg_kernel(var_deg.astype(np.int64), caps.astype(np.int64), order,
                                                np.asarray(peg_types, dtype=np.int64), tie_rank,
                                                max_vdeg, max_cdeg)
    if status < 0:
        raise ConstructionError("PEG could not place every edge without parallel edges")
    adj = [var_adj[v, :var_cnt[v]].tolist() for v in range(n_vars)]
    types = [[t for t in peg_types for _ in range(var_deg[v, t])] for v in range(n_vars)]
    # the kernel writes edges in peg_types order, so types line up with adj (swaps keep type slots)
    return TannerGraph(m, adj, types)


def _expand_variables(ensemble: MultiEdgeEnsemble, counts: Sequence[int]) -> np.ndarray:
    rows = []
    for cls, k in zip(ensemble.variables, counts):
        rows.extend([[cls.deg(t) for t in ensemble.edge_types]] * k)
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(ensemble.edge_types))


def peg_construct(ensemble: MultiEdgeEnsemble, n: int, seed: int = 0,
                  n_checks: int | None = None) -> SparseBinaryMatrix:
    """PEG Tanner graph with ``n`` variable nodes (columns) for ``ensemble``.

    Variable class counts use largest-remainder rounding of the node fractions;
    columns are ordered by class as listed in the ensemble. Check sockets are
    adjusted by +-1 where needed so edge counts balance exactly.
    """
    if n < 2:
        raise ValueError("block length too small")
    rng = np.random.default_rng(seed)
    counts = largest_remainder([v.fraction for v in ensemble.variables], n)
    var_deg = _expand_variables(ensemble, counts)
    m = n_checks if n_checks is not None else int(round(n * ensemble.checks_per_variable))
    needed = {t: int(var_deg[:, i].sum()) for i, t in enumerate(ensemble.edge_types)}
    caps = _check_sockets(ensemble, m, needed, rng)
    graph = _run_peg(var_deg, caps, list(range(len(ensemble.edge_types))), rng)
    return graph.matrix()


# ---------------------------------------------------------------------------
# relay codebook


@dataclass(frozen=True)
class RelayCodebook:
    n: int
    r1: float
    r2: float
    H1: SparseBinaryMatrix
    H2: SparseBinaryMatrix
    H0: SparseBinaryMatrix
    Hs1: SparseBinaryMatrix
    Hs2: SparseBinaryMatrix
    repairs: dict = field(default_factory=dict, compare=False)

    @property
    def k1(self) -> int:
        return self.H1.n_cols

    @property
    def k2(self) -> int:
        return self.H2.n_cols

    @functools.cached_property
    def H(self) -> SparseBinaryMatrix:
        return SparseBinaryMatrix.hstack([self.H1, self.H2, self.H0])

    @functools.cached_property
    def h0_elimination(self) -> GF2Elimination:
        return GF2Elimination(self.H0)

    def source_code(self, node: int) -> SparseBinaryMatrix:
        return (self.Hs1, self.Hs2)[node]

    def index_code(self, node: int) -> SparseBinaryMatrix:
        return (self.H1, self.H2)[node]

    def compress(self, node: int, w) -> np.ndarray:
        return mat_vec_syndrome(self.source_code(node), w)

    @property
    def design_rate(self) -> float:
        """Message bits per transmitted parity bit, (k1 + k2) / n."""
        return (self.k1 + self.k2) / self.n

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name in ("H1", "H2", "H0", "Hs1", "Hs2"):
            getattr(self, name).save_alist(d / f"{name}.alist")
        self.H.save_alist(d / "H.alist")

    @classmethod
    def load(cls, directory: str | Path) -> "RelayCodebook":
        d = Path(directory)
        m = {name: SparseBinaryMatrix.load_alist(d / f"{name}.alist") for name in ("H1", "H2", "H0", "Hs1", "Hs2")}
        n = m["H0"].n_rows
        return cls(n, m["H1"].n_cols / n, m["H2"].n_cols / n, **m)


def _rate_count(r: float, n: int) -> int:
    k = r * n
    if not 0 < r < 1 or abs(k - round(k)) > 1e-6:
        raise ValueError(f"rate {r} times n={n} must be a positive integer below n")
    return int(round(k))


def _downlink_graph(ens: MultiEdgeEnsemble, n: int, k1: int, k2: int, rng) -> tuple[TannerGraph, list[int], list[int], list[int]]:
    et = ens.edge_types
    if set(et) != {"b1", "b2", "x"}:
        raise ValueError("downlink ensemble needs edge types b1, b2, x")
    b1 = [v for v in ens.variables if v.deg("b1")]
    b2 = [v for v in ens.variables if v.deg("b2")]
    xs = [v for v in ens.variables if v.deg("x")]
    if len(b1) != 1 or len(b2) != 1:
        raise ValueError("expected one bin-variable class per node")
    x_counts = largest_remainder([v.fraction / sum(u.fraction for u in xs) for v in xs], n)
    rows = [[b1[0].deg(t) for t in et]] * k1 + [[b2[0].deg(t) for t in et]] * k2
    for cls, k in zip(xs, x_counts):
        rows += [[cls.deg(t) for t in et]] * k
    var_deg = np.array(rows, dtype=np.int64)
    needed = {t: int(var_deg[:, i].sum()) for i, t in enumerate(et)}
    caps = _check_sockets(ens, n, needed, rng)
    # parity columns first so the many degree-2 parity columns are placed while
    # unconnected checks remain (PEG then keeps them cycle-free, which H0 rank needs)
    peg_types = [et.index("x"), et.index("b1"), et.index("b2")]
    g = _run_peg(var_deg, caps, peg_types, rng)
    cols1 = list(range(k1))
    cols2 = list(range(k1, k1 + k2))
    colsx = list(range(k1 + k2, k1 + k2 + n))
    return g, cols1, cols2, colsx


class _ParityForest:
    """Checks joined by degree-2 parity columns (a forest when H0 has full rank)."""

    def __init__(self, H0: SparseBinaryMatrix):
        self.adj = defaultdict(list)
        for j in np.flatnonzero(H0.col_degrees() == 2):
            a, b = H0.col(j)
            self.adj[int(a)].append(int(b))
            self.adj[int(b)].append(int(a))

    def ball(self, c: int, radius: int) -> dict[int, int]:
        """Forest distance from check ``c`` to every check within ``radius``."""
        dist, frontier = {c: 0}, [c]
        for d in range(1, radius + 1):
            frontier = [w for u in frontier for w in self.adj[u] if w not in dist]
            for w in frontier:
                dist[w] = d
        return dist


def low_weight_index_codewords(Hb: SparseBinaryMatrix, H0: SparseBinaryMatrix,
                               max_weight: int) -> list[tuple[int, int, int]]:
    """Codewords of ``[Hb | H0]`` with two index bits and few parity bits.

    Two index columns whose checks can be matched one-to-one by paths of
    degree-2 parity columns give a codeword whose parity weight is at most the
    summed path length. The index bits are unobserved, so a small parity weight
    sets the downlink error floor. Returns ``(u, v, weight)`` for every pair
    with weight ``<= max_weight``.
    """
    forest = _ParityForest(H0)
    found = []
    for u in range(Hb.n_cols):
        checks = [int(c) for c in Hb.col(u)]
        reach = defaultdict(dict)   # v -> {(index of u's check, v's check): distance}
        for i, c in enumerate(checks):
            for c2, d in forest.ball(c, max_weight).items():
                for v in Hb.row(c2):
                    if v > u:
                        reach[int(v)][i, c2] = d
        for v, dists in reach.items():
            vchecks = [int(c) for c in Hb.col(v)]
            if len(vchecks) != len(checks) or len({i for i, _ in dists}) < len(checks):
                continue
            best = min((sum(dists.get((i, c2), max_weight + 1) for i, c2 in zip(perm, vchecks))
                        for perm in itertools.permutations(range(len(checks)))))
            if best <= max_weight:
                found.append((u, int(v), int(best)))
    return found


def short_index_loops(Hb: SparseBinaryMatrix, H0: SparseBinaryMatrix,
                      max_length: int) -> list[tuple[int, int]]:
    """Index columns with two checks joined by a short path of degree-2 parity columns.

    Such a column plus the path leaves a single unsatisfied check: a trapping
    set that stalls BP with one wrong index bit. Returns ``(u, length)`` for
    every column whose shortest such path has ``length <= max_length``.
    """
    forest = _ParityForest(H0)
    found = []
    for u in range(Hb.n_cols):
        checks = [int(c) for c in Hb.col(u)]
        lengths = [forest.ball(a, max_length).get(b) for a, b in itertools.combinations(checks, 2)]
        lengths = [d for d in lengths if d is not None]
        if lengths:
            found.append((u, min(lengths)))
    return found


def build_relay_codebook(ens_down: MultiEdgeEnsemble | str, ens_src: MultiEdgeEnsemble | str,
                         n: int, r1: float = 0.5, r2: float = 0.5, seed: int = 0,
                         max_retries: int = 100, min_parity_weight: int = 8) -> RelayCodebook:
    """Construct ``[H1 | H2 | H0]`` and the two source codes, then enforce:

    * H0 (n x n) full rank over GF(2),
    * no two-column index codeword (:func:`low_weight_index_codewords`) and
      no single-column loop (:func:`short_index_loops`) of ``[H1 | H0]`` or
      ``[H2 | H0]`` with parity weight below ``min_parity_weight``,
    * H1 and H2 each fully peelable with all of their columns erased.

    Violations are repaired by degree-preserving edge swaps on the offending
    columns, up to ``max_retries`` rounds per constraint.
    """
    if isinstance(ens_down, str):
        ens_down = get_ensemble(ens_down)
    if isinstance(ens_src, str):
        ens_src = get_ensemble(ens_src)
    k1, k2 = _rate_count(r1, n), _rate_count(r2, n)
    rng = np.random.default_rng(seed)
    g, cols1, cols2, colsx = _downlink_graph(ens_down, n, k1, k2, rng)
    repairs = {"h0_rank": 0, "h1_low_weight": 0, "h2_low_weight": 0, "h1_peel": 0, "h2_peel": 0}

    def block(cols):
        return SparseBinaryMatrix.from_columns(n, len(cols), [g.var_adj[c] for c in cols])

    for attempt in range(max_retries + 1):
        elim = GF2Elimination(block(colsx))
        if elim.rank == n:
            break
        if attempt == max_retries:
            raise ConstructionError(f"H0 rank {elim.rank} < {n} after {max_retries} repair rounds")
        repairs["h0_rank"] += 1
        for c in elim.deficient_free_cols:
            g.swap_edge(colsx[c], rng, colsx)

    for key, cols in (("h1_low_weight", cols1), ("h2_low_weight", cols2)):
        for attempt in range(max_retries + 1):
            Hb, H0 = block(cols), block(colsx)
            bad = ([u for u, _ in short_index_loops(Hb, H0, min_parity_weight - 1)]
                   + [u for u, _, _ in low_weight_index_codewords(Hb, H0, min_parity_weight - 1)])
            if not bad:
                break
            if attempt == max_retries:
                raise ConstructionError(f"{key[:2].upper()} keeps {len(bad)} low-weight index structures")
            repairs[key] += 1
            for u in bad:
                g.swap_edge(cols[u], rng, cols)

    for key, cols in (("h1_peel", cols1), ("h2_peel", cols2)):
        for attempt in range(max_retries + 1):
            Hb = block(cols)
            res = peel_erasures(Hb, np.zeros(len(cols), dtype=bool))
            if res.success:
                break
            if attempt == max_retries:
                raise ConstructionError(f"{key[:2].upper()} keeps a stopping set of size {len(res.residual)}")
            repairs[key] += 1
            for c in res.residual[: max(1, len(res.residual) // 2)]:
                g.swap_edge(cols[c], rng, cols)

    src_seeds = rng.integers(0, 2**63 - 1, size=2)
    Hs1 = peg_construct(ens_src, n, int(src_seeds[0]), n_checks=k1)
    Hs2 = peg_construct(ens_src, n, int(src_seeds[1]), n_checks=k2)
    cb = RelayCodebook(n, r1, r2, block(cols1), block(cols2), block(colsx), Hs1, Hs2, repairs)
    verify_codebook(cb)
    return cb


def verify_codebook(cb: RelayCodebook) -> None:
    """Re-check the encoding and erasure-decoding constraints independently."""
    if cb.h0_elimination.rank != cb.n:
        raise ConstructionError("H0 is rank deficient")
    for name, Hb in (("H1", cb.H1), ("H2", cb.H2)):
        if not peel_erasures(Hb, np.zeros(Hb.n_cols, dtype=bool)).success:
            raise ConstructionError(f"{name} contains a stopping set")
    if not (cb.H1.n_rows == cb.H2.n_rows == cb.H0.n_rows == cb.n):
        raise ConstructionError("row counts differ")


def relay_encode(cb: RelayCodebook, b1, b2) -> np.ndarray:
    """Parity word x0 with ``[b1 b2 x0] H^T = 0``."""
    b1 = as_bits(b1)
    b2 = as_bits(b2)
    if b1.size != cb.k1 or b2.size != cb.k2:
        raise DimensionError(f"bin indices must have lengths {cb.k1} and {cb.k2}")
    rhs = mat_vec_syndrome(cb.H1, b1) ^ mat_vec_syndrome(cb.H2, b2)
    return cb.h0_elimination.solve(rhs)
