"""Sparse GF(2) matrices: syndromes, rank, peeling, approximate triangulation, solving.

Bit vectors are plain ``uint8`` numpy arrays holding 0/1.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


class ParityContradiction(ArithmeticError):
    """A fully known check has odd parity."""

    def __init__(self, row: int):
        super().__init__(f"check {row} has no unknowns but odd parity")
        self.row = row


def as_bits(x: Iterable[int], length: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.uint8)
    if v.ndim != 1:
        raise DimensionError("bit vector must be one-dimensional")
    if length is not None and v.size != length:
        raise DimensionError(f"expected {length} bits, got {v.size}")
    return v & 1


class SparseBinaryMatrix:
    """GF(2) matrix stored as row and column adjacency (CSR + CSC index arrays).

    Immutable once built. ``edge_row``/``edge_col`` list the nonzeros in
    row-major order and are what the message-passing code iterates over.
    """

    __slots__ = ("n_rows", "n_cols", "row_ptr", "col_idx", "col_ptr", "row_idx", "_edge_row", "_hash")

    def __init__(self, n_rows: int, n_cols: int, rows: Sequence[Iterable[int]]):
        if len(rows) != n_rows:
            raise DimensionError(f"got {len(rows)} rows for n_rows={n_rows}")
        lens = np.zeros(n_rows + 1, dtype=np.int64)
        cols = []
        for i, r in enumerate(rows):
            raw = np.asarray(list(r), dtype=np.int64)
            a = np.unique(raw)
            if a.size != raw.size:
                raise ValueError(f"row {i} lists a column twice")
            if a.size and (a[0] < 0 or a[-1] >= n_cols):
                raise IndexError(f"row {i} has a column index outside [0, {n_cols})")
            cols.append(a)
            lens[i + 1] = a.size
        self.n_rows, self.n_cols = int(n_rows), int(n_cols)
        self.row_ptr = np.cumsum(lens)
        self.col_idx = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
        self._build_csc()
        self._hash = None

    def _build_csc(self) -> None:
        er = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))
        self._edge_row = er
        order = np.lexsort((er, self.col_idx))
        self.row_idx = er[order]
        counts = np.bincount(self.col_idx, minlength=self.n_cols)
        self.col_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        for a in (self.row_ptr, self.col_idx, self.col_ptr, self.row_idx, er):
            a.setflags(write=False)

    # ----- constructors
    @classmethod
    def from_dense(cls, dense) -> "SparseBinaryMatrix":
        d = np.asarray(dense) & 1
        if d.ndim != 2:
            raise DimensionError("dense matrix must be 2-D")
        return cls(d.shape[0], d.shape[1], [np.flatnonzero(row) for row in d])

    @classmethod
    def from_edges(cls, n_rows: int, n_cols: int, rows, cols) -> "SparseBinaryMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        split = np.searchsorted(rows, np.arange(n_rows + 1))
        return cls(n_rows, n_cols, [cols[split[i]:split[i + 1]] for i in range(n_rows)])

    @classmethod
    def from_columns(cls, n_rows: int, n_cols: int, columns: Sequence[Iterable[int]]) -> "SparseBinaryMatrix":
        rr, cc = [], []
        for j, col in enumerate(columns):
            for i in col:
                rr.append(i)
                cc.append(j)
        return cls.from_edges(n_rows, n_cols, rr, cc)

    @classmethod
    def identity(cls, n: int) -> "SparseBinaryMatrix":
        return cls(n, n, [[i] for i in range(n)])

    # ----- views
    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def nnz(self) -> int:
        return int(self.col_idx.size)

    @property
    def edge_row(self) -> np.ndarray:
        return self._edge_row

    @property
    def edge_col(self) -> np.ndarray:
        return self.col_idx

    def row(self, i: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[i]:self.row_ptr[i + 1]]

    def col(self, j: int) -> np.ndarray:
        return self.row_idx[self.col_ptr[j]:self.col_ptr[j + 1]]

    def rows(self) -> list[np.ndarray]:
        return [self.row(i) for i in range(self.n_rows)]

    def columns(self) -> list[np.ndarray]:
        return [self.col(j) for j in range(self.n_cols)]

    def row_degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def col_degrees(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    def to_dense(self) -> np.ndarray:
        d = np.zeros(self.shape, dtype=np.uint8)
        d[self.edge_row, self.col_idx] = 1
        return d

    # ----- structural operations
    def select_columns(self, cols: Sequence[int]) -> "SparseBinaryMatrix":
        cols = np.asarray(cols, dtype=np.int64)
        remap = np.full(self.n_cols, -1, dtype=np.int64)
        remap[cols] = np.arange(cols.size)
        keep = remap[self.col_idx] >= 0
        return SparseBinaryMatrix.from_edges(self.n_rows, cols.size, self.edge_row[keep],
                                             remap[self.col_idx[keep]])

    def permute(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "SparseBinaryMatrix":
        """Matrix whose row k is old row ``row_perm[k]`` and column k is old column ``col_perm[k]``."""
        row_perm = np.asarray(row_perm, dtype=np.int64)
        col_perm = np.asarray(col_perm, dtype=np.int64)
        if sorted(row_perm.tolist()) != list(range(self.n_rows)) or \
                sorted(col_perm.tolist()) != list(range(self.n_cols)):
            raise ValueError("not a permutation")
        inv_r = np.argsort(row_perm)
        inv_c = np.argsort(col_perm)
        return SparseBinaryMatrix.from_edges(self.n_rows, self.n_cols, inv_r[self.edge_row],
                                             inv_c[self.col_idx])

    @staticmethod
    def hstack(blocks: Sequence["SparseBinaryMatrix"]) -> "SparseBinaryMatrix":
        n_rows = blocks[0].n_rows
        if any(b.n_rows != n_rows for b in blocks):
            raise DimensionError("hstack blocks need equal row counts")
        rr, cc, off = [], [], 0
        for b in blocks:
            rr.append(b.edge_row)
            cc.append(b.col_idx + off)
            off += b.n_cols
        return SparseBinaryMatrix.from_edges(n_rows, off, np.concatenate(rr), np.concatenate(cc))

    @staticmethod
    def vstack(blocks: Sequence["SparseBinaryMatrix"]) -> "SparseBinaryMatrix":
        n_cols = blocks[0].n_cols
        if any(b.n_cols != n_cols for b in blocks):
            raise DimensionError("vstack blocks need equal column counts")
        rr, cc, off = [], [], 0
        for b in blocks:
            rr.append(b.edge_row + off)
            cc.append(b.col_idx)
            off += b.n_rows
        return SparseBinaryMatrix.from_edges(off, n_cols, np.concatenate(rr), np.concatenate(cc))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseBinaryMatrix):
            return NotImplemented
        return (self.shape == other.shape and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_idx, other.col_idx))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.shape, self.row_ptr.tobytes(), self.col_idx.tobytes()))
        return self._hash

    def __repr__(self) -> str:
        return f"SparseBinaryMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"

    # ----- alist-style IO
    def to_alist(self) -> str:
        cdeg, rdeg = self.col_degrees(), self.row_degrees()
        mc = int(cdeg.max(initial=0))
        mr = int(rdeg.max(initial=0))
        out = [f"{self.n_cols} {self.n_rows}", f"{mc} {mr}",
               " ".join(map(str, cdeg)), " ".join(map(str, rdeg))]
        for j in range(self.n_cols):
            e = (self.col(j) + 1).tolist()
            out.append(" ".join(map(str, e + [0] * (mc - len(e)))))
        for i in range(self.n_rows):
            e = (self.row(i) + 1).tolist()
            out.append(" ".join(map(str, e + [0] * (mr - len(e)))))
        return "\n".join(out) + "\n"

    @classmethod
    def from_alist(cls, text: str) -> "SparseBinaryMatrix":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        n_cols, n_rows = map(int, lines[0])
        cdeg = list(map(int, lines[2]))
        rdeg = list(map(int, lines[3]))
        if len(cdeg) != n_cols or len(rdeg) != n_rows:
            raise ValueError("alist degree lines do not match the declared size")
        col_lines = lines[4:4 + n_cols]
        row_lines = lines[4 + n_cols:4 + n_cols + n_rows]
        columns = []
        for j, ln in enumerate(col_lines):
            idx = [int(t) - 1 for t in ln if int(t) != 0]
            if len(idx) != cdeg[j]:
                raise ValueError(f"column {j} lists {len(idx)} entries, degree says {cdeg[j]}")
            columns.append(idx)
        m = cls.from_columns(n_rows, n_cols, columns)
        if row_lines:
            for i, ln in enumerate(row_lines):
                idx = sorted(int(t) - 1 for t in ln if int(t) != 0)
                if idx != m.row(i).tolist() or len(idx) != rdeg[i]:
                    raise ValueError(f"row {i} disagrees with the column lists")
        return m

    def save_alist(self, path: str | Path) -> None:
        Path(path).write_text(self.to_alist(), encoding="utf-8")

    @classmethod
    def load_alist(cls, path: str | Path) -> "SparseBinaryMatrix":
        return cls.from_alist(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------


def mat_vec_syndrome(H: SparseBinaryMatrix, w) -> np.ndarray:
    """s = w H^T over GF(2)."""
    w = as_bits(w)
    if w.size != H.n_cols:
        raise DimensionError(f"vector length {w.size} != n_cols {H.n_cols}")
    ones = np.bincount(H.edge_row, weights=w[H.col_idx], minlength=H.n_rows)
    return (ones.astype(np.int64) & 1).astype(np.uint8)


@dataclass(frozen=True)
class PeelResult:
    values: np.ndarray          # 0/1, meaningful where resolved
    resolved: np.ndarray        # bool mask
    residual: tuple[int, ...]   # unresolved columns (a stopping set, possibly empty)

    @property
    def success(self) -> bool:
        return not self.residual


def peel_erasures(H: SparseBinaryMatrix, known_mask, known_values=None) -> PeelResult:
    """Resolve unknown columns by repeatedly solving checks with one unknown.

    Stops at the largest stopping set contained in the unknown set. A check
    with no unknowns and odd parity raises :class:`ParityContradiction`.
    """
    known = np.asarray(known_mask, dtype=bool)
    if known.size != H.n_cols:
        raise DimensionError("known mask length must equal n_cols")
    vals = np.zeros(H.n_cols, dtype=np.uint8) if known_values is None else as_bits(known_values, H.n_cols).copy()
    vals[~known] = 0
    resolved = known.copy()

    row_unknown = np.bincount(H.edge_row, weights=(~known)[H.col_idx], minlength=H.n_rows).astype(np.int64)
    row_parity = (np.bincount(H.edge_row, weights=vals[H.col_idx], minlength=H.n_rows).astype(np.int64) & 1)

    for r in np.flatnonzero((row_unknown == 0) & (row_parity == 1)):
        raise ParityContradiction(int(r))

    stack = list(np.flatnonzero(row_unknown == 1)[::-1])
    col_idx, row_ptr = H.col_idx, H.row_ptr
    row_idx, col_ptr = H.row_idx, H.col_ptr
    while stack:
        r = stack.pop()
        if row_unknown[r] != 1:
            if row_unknown[r] == 0 and row_parity[r]:
                raise ParityContradiction(int(r))
            continue
        cols = col_idx[row_ptr[r]:row_ptr[r + 1]]
        c = next(int(c) for c in cols if not resolved[c])
        v = int(row_parity[r])
        vals[c] = v
        resolved[c] = True
        for rr in row_idx[col_ptr[c]:col_ptr[c + 1]]:
            row_unknown[rr] -= 1
            row_parity[rr] ^= v
            if row_unknown[rr] == 1:
                stack.append(rr)
            elif row_unknown[rr] == 0 and row_parity[rr]:
                raise ParityContradiction(int(rr))
    residual = tuple(int(c) for c in np.flatnonzero(~resolved))
    return PeelResult(vals, resolved, residual)


@dataclass(frozen=True)
class Triangulation:
    """Greedy approximate lower-triangular form.

    Row ``pivots[k][0]`` contains column ``pivots[k][1]`` plus only earlier
    pivot columns and ``free_cols``. Reordering rows as ``row_perm`` and
    columns as ``col_perm`` puts the pivots on the leading diagonal.
    ``gap`` counts rows outside the triangular part.
    """

    pivots: tuple[tuple[int, int], ...]
    free_cols: tuple[int, ...]
    leftover_rows: tuple[int, ...]
    row_perm: np.ndarray
    col_perm: np.ndarray

    @property
    def gap(self) -> int:
        return len(self.leftover_rows)


def approximate_triangulate(H: SparseBinaryMatrix) -> Triangulation:
    """Greedy diagonal extension (minimum residual row degree, lowest column first).

    Rows with one undetermined column extend the diagonal. When none exist, the
    row of least residual degree is taken; its lowest undetermined column is
    pivoted and the rest become free columns.
    """
    n_rows, n_cols = H.shape
    deg = H.row_degrees().astype(np.int64).copy()
    col_done = np.zeros(n_cols, dtype=bool)
    row_done = np.zeros(n_rows, dtype=bool)
    heap = [(int(deg[r]), r) for r in range(n_rows)]
    heapq.heapify(heap)
    pivots: list[tuple[int, int]] = []
    free: list[int] = []
    leftover: list[int] = []
    col_idx, row_ptr = H.col_idx, H.row_ptr
    row_idx, col_ptr = H.row_idx, H.col_ptr

    def settle(c: int) -> None:
        col_done[c] = True
        for rr in row_idx[col_ptr[c]:col_ptr[c + 1]]:
            if not row_done[rr]:
                deg[rr] -= 1
                heapq.heappush(heap, (int(deg[rr]), int(rr)))

    while heap:
        d, r = heapq.heappop(heap)
        if row_done[r] or d != deg[r]:
            continue
        row_done[r] = True
        if d == 0:
            leftover.append(r)
            continue
        open_cols = [int(c) for c in col_idx[row_ptr[r]:row_ptr[r + 1]] if not col_done[c]]
        pivot, rest = open_cols[0], open_cols[1:]
        for c in rest:
            free.append(c)
            settle(c)
        pivots.append((r, pivot))
        settle(pivot)

    untouched = [c for c in range(n_cols) if not col_done[c]]
    free.extend(untouched)
    row_perm = np.array([r for r, _ in pivots] + leftover, dtype=np.int64)
    col_perm = np.array([c for _, c in pivots] + free, dtype=np.int64)
    return Triangulation(tuple(pivots), tuple(free), tuple(leftover), row_perm, col_perm)


def _popcount_parity(x: int) -> int:
    return bin(x).count("1") & 1


class GF2Elimination:
    """Block elimination of ``H x = s`` around a greedy triangulation.

    Pivot variables are written as affine functions of the free columns; the
    leftover rows then give a small dense system (the Schur complement)
    reduced once here. Bitsets are Python ints.
    """

    def __init__(self, H: SparseBinaryMatrix, tri: Triangulation | None = None):
        self.H = H
        self.tri = tri if tri is not None else approximate_triangulate(H)
        free = self.tri.free_cols
        self.free_pos = {c: i for i, c in enumerate(free)}
        g = len(free)
        self.n_free = g

        # mask[c]: free-column dependence of column c (pivot or free)
        mask = [0] * H.n_cols
        for i, c in enumerate(free):
            mask[c] = 1 << i
        # pivot k: x_c = s_r ^ xor(x_other for others in row r)
        self._pivot_deps: list[tuple[int, int, list[int]]] = []
        for r, c in self.tri.pivots:
            others = [o for o in H.row(r).tolist() if o != c]
            m = 0
            for o in others:
                m ^= mask[o]
            mask[c] = m
            self._pivot_deps.append((r, c, others))
        self._mask = mask

        # leftover rows: xor over row of (free-dependence) = s_r ^ xor(consts)
        schur = []
        for r in self.tri.leftover_rows:
            m = 0
            for o in H.row(r):
                m ^= mask[o]
            schur.append(m)
        self._schur_rows = schur

        # reduce [schur | I] to find rank, free-variable pivots and the row operations
        m_left = len(schur)
        rows = [(schur[i], 1 << i) for i in range(m_left)]
        pivot_of_var: dict[int, int] = {}
        reduced = []
        for bit in range(g):
            sel = None
            for idx, (a, _) in enumerate(rows):
                if (a >> bit) & 1:
                    sel = idx
                    break
            if sel is None:
                continue
            pa, pc = rows.pop(sel)
            for idx, (a, comb) in enumerate(rows):
                if (a >> bit) & 1:
                    rows[idx] = (a ^ pa, comb ^ pc)
            for idx, (a, comb) in enumerate(reduced):
                if (a >> bit) & 1:
                    reduced[idx] = (a ^ pa, comb ^ pc)
            pivot_of_var[bit] = len(reduced)
            reduced.append((pa, pc))
        self._reduced = reduced        # each row has exactly one pivot free var after back-substitution
        self._pivot_of_var = pivot_of_var
        self._consistency = [comb for _, comb in rows]  # combos that must evaluate to 0
        self.schur_rank = len(reduced)
        self.rank = len(self.tri.pivots) + self.schur_rank
        self.deficient_free_cols = tuple(free[b] for b in range(g) if b not in pivot_of_var)

    @property
    def full_column_rank(self) -> bool:
        return self.rank == self.H.n_cols

    def solve(self, s) -> np.ndarray:
        """One solution x of ``x H^T = s``; free columns left unconstrained are set to 0."""
        H = self.H
        s = as_bits(s, H.n_rows)
        sl = s.tolist()
        const = [0] * H.n_cols
        for r, c, others in self._pivot_deps:
            v = sl[r]
            for o in others:
                v ^= const[o]
            const[c] = v
        # leftover row r: mask.z = s_r ^ xor(const over row)
        rhs_bits = 0
        for i, r in enumerate(self.tri.leftover_rows):
            v = sl[r]
            for o in H.row(r).tolist():
                v ^= const[o]
            rhs_bits |= v << i
        for comb in self._consistency:
            if _popcount_parity(comb & rhs_bits):
                raise SingularMatrixError("right-hand side is not in the column space")
        z = 0
        for bit, k in self._pivot_of_var.items():
            _, comb = self._reduced[k]
            if _popcount_parity(comb & rhs_bits):
                z |= 1 << bit
        x = np.array(const, dtype=np.uint8)
        free = self.tri.free_cols
        for i, c in enumerate(free):
            x[c] = (z >> i) & 1
        for c in [c for _, c in self.tri.pivots]:
            x[c] ^= _popcount_parity(self._mask[c] & z)
        return x


def gf2_rank(H: SparseBinaryMatrix) -> int:
    return GF2Elimination(H).rank


def solve_relay_parity(H0: SparseBinaryMatrix, rhs, elim: GF2Elimination | None = None) -> np.ndarray:
    """X0 with ``X0 H0^T = rhs`` for square full-rank ``H0``."""
    if H0.n_rows != H0.n_cols:
        raise DimensionError("H0 must be square")
    rhs = as_bits(rhs, H0.n_rows)
    elim = elim if elim is not None else GF2Elimination(H0)
    if elim.rank != H0.n_rows:
        raise SingularMatrixError(f"H0 has rank {elim.rank} < {H0.n_rows}")
    return elim.solve(rhs)
