"""Undirected simple graphs: parsing, simplification and degree-preserving rewiring."""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphParseError(ValueError):
    """Malformed graph file. ``lineno`` is 1-based, or None when unknown."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class GraphReferenceError(GraphParseError):
    """An edge refers to a node id that was never declared."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``.

    ``edges`` is a sorted tuple of ``(u, v)`` pairs with ``u < v``.
    Build instances through :func:`simplify` (or the parsers) unless the
    edge tuple is already canonical.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()
    labels: tuple[str, ...] | None = field(default=None, compare=False)
    ground_truth: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise ValueError(f"invalid edge ({u}, {v}) for n={self.n}")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    def degrees(self) -> np.ndarray:
        return degree_sequence(self)

    def fingerprint(self) -> str:
        return hashlib.sha256(write_edgelist(self)).hexdigest()

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Same node set and attributes, new (canonicalized) edge set."""
        return Graph(
            self.n,
            _canonical_edges(edges),
            labels=self.labels,
            ground_truth=self.ground_truth,
        )


def _canonical_edges(pairs: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out = set()
    for u, v in pairs:
        u, v = int(u), int(v)
        if u == v:
            continue
        out.add((u, v) if u < v else (v, u))
    return tuple(sorted(out))


def simplify(
    n: int,
    pairs: Iterable[tuple[int, int]],
    labels: Sequence[str] | None = None,
    ground_truth: Sequence[int] | None = None,
) -> Graph:
    """Drop self-loops and repeated edges from a raw edge multiset."""
    return Graph(
        n,
        _canonical_edges(pairs),
        labels=tuple(labels) if labels is not None else None,
        ground_truth=tuple(ground_truth) if ground_truth is not None else None,
    )


def degree_sequence(g: Graph) -> np.ndarray:
    deg = np.zeros(g.n, dtype=np.int64)
    if g.edges:
        e = np.asarray(g.edges, dtype=np.int64)
        np.add.at(deg, e[:, 0], 1)
        np.add.at(deg, e[:, 1], 1)
    return deg


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------

_GML_TOKEN = re.compile(r'"[^"]*"|\[|\]|[^\s\[\]"]+')


def _gml_tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            continue
        for match in _GML_TOKEN.finditer(line):
            yield match.group(0), lineno


def _gml_tree(text: str) -> list:
    """Parse GML into nested ``[(key, value, lineno), ...]`` lists."""
    stack: list[list] = [[]]
    opened: list[int] = []
    key: tuple[str, int] | None = None
    for tok, lineno in _gml_tokens(text):
        if key is None:
            if tok == "]":
                if not opened:
                    raise GraphParseError("unexpected ']'", lineno)
                opened.pop()
                stack.pop()
                continue
            if tok == "[" or tok.startswith('"'):
                raise GraphParseError(f"expected a key, got {tok!r}", lineno)
            key = (tok, lineno)
            continue
        name, key_line = key
        key = None
        if tok == "[":
            child: list = []
            stack[-1].append((name, child, key_line))
            stack.append(child)
            opened.append(key_line)
        elif tok == "]":
            raise GraphParseError(f"key {name!r} has no value", lineno)
        else:
            stack[-1].append((name, tok, key_line))
    if key is not None:
        raise GraphParseError(f"key {key[0]!r} has no value", key[1])
    if opened:
        raise GraphParseError("unbalanced '[' (never closed)", opened[-1])
    return stack[0]


def _gml_scalar(raw: str):
    if raw.startswith('"'):
        return raw[1:-1]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _attrs(items: list) -> dict:
    out = {}
    for name, value, lineno in items:
        if isinstance(value, list):
            continue
        out.setdefault(name, (_gml_scalar(value), lineno))
    return out


def parse_gml(data: bytes | str) -> Graph:
    """Read the GML subset used by common network datasets.

    Supported: ``graph [ node [ id label value ] edge [ source target ] ]``.
    Other keys are ignored. Node ids need not be contiguous; nodes are
    re-indexed in file order. ``value`` becomes the ground truth when every
    node carries one.
    """
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    tree = _gml_tree(text)
    graphs = [(v, ln) for k, v, ln in tree if k == "graph" and isinstance(v, list)]
    if not graphs:
        raise GraphParseError("no 'graph [ ... ]' block found", 1)
    body, _ = graphs[0]

    index: dict = {}
    labels: list[str] = []
    values: list = []
    raw_edges: list[tuple[int, int]] = []
    for name, value, lineno in body:
        if name == "node" and isinstance(value, list):
            attrs = _attrs(value)
            if "id" not in attrs:
                raise GraphParseError("node without 'id'", lineno)
            node_id = attrs["id"][0]
            if node_id in index:
                raise GraphParseError(f"duplicate node id {node_id!r}", lineno)
            index[node_id] = len(index)
            labels.append(str(attrs["label"][0]) if "label" in attrs else str(node_id))
            values.append(attrs["value"][0] if "value" in attrs else None)
    for name, value, lineno in body:
        if name == "edge" and isinstance(value, list):
            attrs = _attrs(value)
            for end in ("source", "target"):
                if end not in attrs:
                    raise GraphParseError(f"edge without '{end}'", lineno)
            s, t = attrs["source"][0], attrs["target"][0]
            for ref in (s, t):
                if ref not in index:
                    raise GraphReferenceError(f"edge references unknown node id {ref!r}", lineno)
            raw_edges.append((index[s], index[t]))

    truth = None
    if values and all(v is not None for v in values):
        # dense community ids in order of first appearance
        remap: dict = {}
        truth = [remap.setdefault(v, len(remap)) for v in values]
    return simplify(len(index), raw_edges, labels=labels, ground_truth=truth)


def parse_edgelist(data: bytes | str) -> Graph:
    """Whitespace-separated edge list with arbitrary node labels.

    Labels are mapped to dense indices in order of first appearance. Lines
    starting with ``#`` are skipped. A header written by
    :func:`write_edgelist` (``n m`` as the first line) is recognized, so the
    two functions round-trip, including isolated nodes.
    """
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1)]
    lines = [(i, toks) for i, toks in lines if toks and not toks[0].startswith("#")]

    n_declared = None
    if lines and _is_header(lines):
        n_declared = int(lines[0][1][0])
        lines = lines[1:]

    index: dict[str, int] = {}
    if n_declared is not None:
        index = {str(i): i for i in range(n_declared)}
    pairs = []
    for lineno, toks in lines:
        if len(toks) % 2:
            raise GraphParseError(f"odd number of tokens ({len(toks)})", lineno)
        for a, b in zip(toks[::2], toks[1::2]):
            u = index.setdefault(a, len(index))
            v = index.setdefault(b, len(index))
            pairs.append((u, v))
    labels = list(index)
    return simplify(len(index), pairs, labels=labels)


def _is_header(lines) -> bool:
    _, first = lines[0]
    if len(first) != 2 or not all(t.isdigit() for t in first):
        return False
    n, m = int(first[0]), int(first[1])
    body = lines[1:]
    if len(body) != m:
        return False
    for _, toks in body:
        if len(toks) != 2 or not all(t.isdigit() and int(t) < n for t in toks):
            return False
    return True


def write_edgelist(g: Graph) -> bytes:
    """``n m`` header then one sorted ``u v`` line per edge (``u < v``)."""
    parts = [f"{g.n} {g.m}\n"]
    parts.extend(f"{u} {v}\n" for u, v in g.edges)
    return "".join(parts).encode("ascii")


def read_graph(path, fmt: str | None = None) -> Graph:
    """Load ``path`` as GML or edge list (guessed from the suffix when ``fmt`` is None)."""
    from pathlib import Path

    path = Path(path)
    if fmt is None:
        fmt = "gml" if path.suffix.lower() == ".gml" else "edgelist"
    data = path.read_bytes()
    if fmt == "gml":
        return parse_gml(data)
    if fmt == "edgelist":
        return parse_edgelist(data)
    raise ValueError(f"unknown graph format {fmt!r}")


# ---------------------------------------------------------------------------
# Degree-preserving randomization
# ---------------------------------------------------------------------------

def _swap_chain(g: Graph, target: int, rng: np.random.Generator) -> Graph:
    m = g.m
    if target <= 0 or m < 2:
        return g
    edges = list(g.edges)
    present = set(edges)
    budget = 100 * m
    done = 0
    attempts = 0
    chunk = 4096
    while done < target and attempts < budget:
        k = min(chunk, budget - attempts)
        picks = rng.integers(0, m, size=(k, 2))
        flips = rng.random(k) < 0.5
        for (i, j), flip in zip(picks.tolist(), flips.tolist()):
            attempts += 1
            if i == j:
                continue
            a, b = edges[i]
            c, d = edges[j]
            if a == c or a == d or b == c or b == d:
                continue
            if flip:
                e1, e2 = (a, d), (b, c)
            else:
                e1, e2 = (a, c), (b, d)
            e1 = e1 if e1[0] < e1[1] else (e1[1], e1[0])
            e2 = e2 if e2[0] < e2[1] else (e2[1], e2[0])
            if e1 in present or e2 in present:
                continue
            present.discard(edges[i])
            present.discard(edges[j])
            present.add(e1)
            present.add(e2)
            edges[i], edges[j] = e1, e2
            done += 1
            if done >= target:
                break
    return g.with_edges(edges)


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def rewire_fraction(g: Graph, fraction: float, rng) -> Graph:
    """Relocate about ``fraction`` of the edges by double-edge swaps.

    Runs ``ceil(fraction * m / 2)`` successful swaps (each moves two edges),
    giving up after ``100 * m`` draws. Degrees, edge count and simplicity
    are preserved exactly.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    target = math.ceil(fraction * g.m / 2 - 1e-9)
    return _swap_chain(g, target, as_rng(rng))


def null_configuration_model(g: Graph, rng) -> Graph:
    """Degree-preserving null graph: ``10 * m`` successful swaps."""
    return _swap_chain(g, 10 * g.m, as_rng(rng))
