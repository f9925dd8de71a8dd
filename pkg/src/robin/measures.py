"""Partition distances normalized to [0, 1] (0 means identical partitions).

All four measures are computed from the non-zero cells of the contingency
table. :func:`distance` accepts either two membership vectors or two stacks
of them (one membership per row) and then returns one distance per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEASURES = ("vi", "nmi", "split_join", "ari")


@dataclass(frozen=True)
class ConfusionTable:
    counts: np.ndarray  # K1 x K2 co-occurrence counts

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def rows(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def cols(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _dense_labels(x: np.ndarray) -> np.ndarray:
    """Row-wise relabeling to ``0..K-1`` (order of sorted value, not appearance)."""
    order = np.argsort(x, axis=1, kind="stable")
    s = np.take_along_axis(x, order, axis=1)
    new = np.concatenate([np.zeros((x.shape[0], 1), dtype=np.int64),
                          (s[:, 1:] != s[:, :-1]).astype(np.int64)], axis=1)
    out = np.empty_like(order)
    np.put_along_axis(out, order, np.cumsum(new, axis=1), axis=1)
    return out


def _as_rows(a, b) -> tuple[np.ndarray, np.ndarray, bool]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"membership length mismatch: {a.shape} vs {b.shape}")
    single = a.ndim == 1
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if a.ndim != 2 or a.shape[1] == 0:
        raise ValueError("memberships must be non-empty vectors")
    return _dense_labels(a), _dense_labels(b), single


@dataclass
class _Cells:
    """Sparse contingency tables of P membership pairs over n nodes."""

    n: int
    row_of_cell: np.ndarray
    cell_i: np.ndarray
    cell_j: np.ndarray
    count: np.ndarray
    ka: int
    kb: int
    rows: int

    @classmethod
    def build(cls, a: np.ndarray, b: np.ndarray) -> "_Cells":
        p, n = a.shape
        ka, kb = int(a.max()) + 1, int(b.max()) + 1
        code = (np.arange(p, dtype=np.int64)[:, None] * ka + a) * kb + b
        uniq, cnt = np.unique(code.ravel(), return_counts=True)
        row_i, j = np.divmod(uniq, kb)
        row, i = np.divmod(row_i, ka)
        return cls(n, row, i, j, cnt, ka, kb, p)

    def per_row(self, values) -> np.ndarray:
        return np.bincount(self.row_of_cell, weights=values, minlength=self.rows)

    def marginal(self, side: str) -> np.ndarray:
        """Block sizes, shape (P, K) for ``side`` in {'a', 'b'}."""
        k, idx = (self.ka, self.cell_i) if side == "a" else (self.kb, self.cell_j)
        return np.bincount(self.row_of_cell * k + idx, weights=self.count,
                           minlength=self.rows * k).reshape(self.rows, k)

    def max_overlap(self, side: str) -> np.ndarray:
        """Sum over blocks of ``side`` of the largest overlap with a block of the other side."""
        k, idx = (self.ka, self.cell_i) if side == "a" else (self.kb, self.cell_j)
        best = np.zeros(self.rows * k)
        np.maximum.at(best, self.row_of_cell * k + idx, self.count)
        return best.reshape(self.rows, k).sum(axis=1)


def confusion_table(a, b) -> ConfusionTable:
    """Dense co-occurrence counts ``n_ij = |{v : a(v) = i and b(v) = j}|``."""
    ra, rb, single = _as_rows(a, b)
    if not single:
        raise ValueError("confusion_table takes two membership vectors")
    cells = _Cells.build(ra, rb)
    counts = np.zeros((cells.ka, cells.kb), dtype=np.int64)
    counts[cells.cell_i, cells.cell_j] = cells.count
    return ConfusionTable(counts)


def _xlogx(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * np.log(np.where(x > 0, x, 1.0))


def _pairs(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def _entropy_terms(cells: _Cells):
    """(sum a log a, sum b log b, sum n_ij log n_ij) per row."""
    sa = _xlogx(cells.marginal("a")).sum(axis=1)
    sb = _xlogx(cells.marginal("b")).sum(axis=1)
    sab = cells.per_row(_xlogx(cells.count))
    return sa, sb, sab


def _vi(cells: _Cells) -> np.ndarray:
    sa, sb, sab = _entropy_terms(cells)
    n = cells.n
    return np.maximum((sa + sb - 2.0 * sab) / n, 0.0) / np.log(n)


def _nmi(cells: _Cells) -> np.ndarray:
    sa, sb, sab = _entropy_terms(cells)
    n = cells.n
    log_n = np.log(n)
    ha = log_n - sa / n
    hb = log_n - sb / n
    mi = log_n + (sab - sa - sb) / n
    h = ha + hb
    degenerate = h <= 1e-15
    nmi = np.where(degenerate, 1.0, 2.0 * mi / np.where(degenerate, 1.0, h))
    return np.clip(1.0 - nmi, 0.0, 1.0)


def _split_join(cells: _Cells) -> np.ndarray:
    n = cells.n
    return (2 * n - cells.max_overlap("a") - cells.max_overlap("b")) / (2.0 * n)


def _ari(cells: _Cells) -> np.ndarray:
    total = cells.n * (cells.n - 1) / 2.0
    index = cells.per_row(_pairs(cells.count))
    sa = _pairs(cells.marginal("a")).sum(axis=1)
    sb = _pairs(cells.marginal("b")).sum(axis=1)
    expected = sa * sb / total
    top = (sa + sb) / 2.0
    denom = top - expected
    # denom == 0 only when both partitions are the same trivial partition
    same = denom == 0
    ari = np.where(same, 1.0, (index - expected) / np.where(same, 1.0, denom))
    return np.clip(1.0 - ari, 0.0, 1.0)


_KERNELS = {"vi": _vi, "nmi": _nmi, "split_join": _split_join, "ari": _ari}


def distance(a, b, kind: str = "vi"):
    """Normalized distance between memberships ``a`` and ``b``.

    ``vi`` is divided by ``log(n)`` and ``split_join`` by ``2n``; ``nmi`` and
    ``ari`` become distances as ``1 - x``, with ``1 - ari`` clipped to [0, 1].
    Two single-cluster partitions have ``nmi`` distance 0; graphs with one
    node have distance 0 under every measure.

    Returns a float for two vectors, or an array with one value per row when
    given two 2-D stacks of memberships.
    """
    kind = kind.replace("-", "_")
    if kind not in MEASURES:
        raise ValueError(f"unknown measure {kind!r}; choose from {MEASURES}")
    ra, rb, single = _as_rows(a, b)
    if ra.shape[1] == 1:
        out = np.zeros(ra.shape[0])
    else:
        out = _KERNELS[kind](_Cells.build(ra, rb))
    return float(out[0]) if single else out


def variation_of_information(a, b) -> float:
    """Unnormalized VI in nats."""
    ra, rb, _ = _as_rows(a, b)
    cells = _Cells.build(ra[:1], rb[:1])
    sa, sb, sab = _entropy_terms(cells)
    return float(max((sa[0] + sb[0] - 2.0 * sab[0]) / cells.n, 0.0))
