"""Community detection: Louvain, label propagation, fast greedy and external programs."""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, as_rng, write_edgelist

BUILTIN = ("louvain", "label_prop", "fast_greedy")
KINDS = BUILTIN + ("external",)
DEFAULT_TIMEOUT = 300.0


class DetectorError(RuntimeError):
    """External detector failed. ``stderr`` holds whatever the child printed."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message if not stderr else f"{message}\n{stderr}")
        self.stderr = stderr


@dataclass(frozen=True)
class DetectorSpec:
    kind: str
    command: tuple[str, ...] = ()
    seed: int = 0
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown detector {self.kind!r}; choose from {KINDS}")
        if self.kind == "external" and not self.command:
            raise ValueError("external detector needs a command")

    @classmethod
    def external(cls, command: str | Sequence[str], seed: int = 0, timeout: float = DEFAULT_TIMEOUT):
        if isinstance(command, str):
            command = shlex.split(command)
        return cls("external", tuple(command), seed, timeout)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "seed": self.seed}
        if self.command:
            d["command"] = list(self.command)
        return d

    @property
    def name(self) -> str:
        if self.kind == "external":
            return " ".join(self.command)
        return self.kind


def canonicalize(labels) -> np.ndarray:
    """Relabel community ids to ``0..K-1`` in order of first appearance."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return np.zeros(0, dtype=np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()]


def modularity(g: Graph, membership) -> float:
    """Newman-Girvan modularity; 0 for a graph without edges."""
    membership = np.asarray(membership)
    if len(membership) != g.n:
        raise ValueError(f"membership has {len(membership)} entries, graph has {g.n} nodes")
    m = g.m
    if m == 0:
        return 0.0
    comm = canonicalize(membership)
    k = comm.max() + 1
    e = np.asarray(g.edges)
    cu, cv = comm[e[:, 0]], comm[e[:, 1]]
    internal = np.bincount(cu[cu == cv], minlength=k)
    deg = g.degrees()
    dtot = np.bincount(comm, weights=deg, minlength=k)
    return float(np.sum(internal / m - (dtot / (2.0 * m)) ** 2))


# ---------------------------------------------------------------------------
# Louvain
# ---------------------------------------------------------------------------

def _louvain_level(adj, selfw, strength, two_m, rng):
    """One local-moving phase on a weighted graph; returns (community, moved)."""
    n = len(adj)
    comm = list(range(n))
    tot = list(strength)
    moved_any = False
    order = rng.permutation(n).tolist()
    while True:
        moved = False
        for i in order:
            ci = comm[i]
            ki = strength[i]
            links: dict[int, int] = {}
            for j, w in adj[i].items():
                cj = comm[j]
                links[cj] = links.get(cj, 0) + w
            tot[ci] -= ki
            # gains scaled by 2m are exact integers: 2m*k_in - tot*k_i
            best_c = ci
            best = two_m * links.get(ci, 0) - tot[ci] * ki
            for c in sorted(links):
                gain = two_m * links[c] - tot[c] * ki
                if gain > best:
                    best, best_c = gain, c
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                moved = True
                moved_any = True
        if not moved:
            break
    return comm, moved_any


def louvain(g: Graph, seed=0) -> np.ndarray:
    """Multi-level modularity optimization (Blondel et al.).

    Each level sweeps nodes in a seeded random order, moving a node to the
    neighbouring community with the largest strictly positive gain (ties go
    to the lowest community id). Levels aggregate until no node moves.
    """
    rng = as_rng(seed)
    if g.m == 0:
        return np.arange(g.n, dtype=np.int64)
    adj = [dict() for _ in range(g.n)]
    for u, v in g.edges:
        adj[u][v] = 1
        adj[v][u] = 1
    selfw = [0] * g.n
    two_m = 2 * g.m
    node_comm = list(range(g.n))
    while True:
        strength = [sum(a.values()) + 2 * s for a, s in zip(adj, selfw)]
        comm, moved = _louvain_level(adj, selfw, strength, two_m, rng)
        if not moved:
            break
        relabel = canonicalize(comm).tolist()
        node_comm = [relabel[c] for c in node_comm]
        k = max(relabel) + 1
        new_adj: list[dict] = [dict() for _ in range(k)]
        new_self = [0] * k
        for i, nbrs in enumerate(adj):
            ci = relabel[i]
            new_self[ci] += selfw[i]
            for j, w in nbrs.items():
                cj = relabel[j]
                if ci == cj:
                    if i < j:
                        new_self[ci] += w
                else:
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0) + w
        adj, selfw = new_adj, new_self
    return canonicalize(node_comm)


# ---------------------------------------------------------------------------
# Label propagation
# ---------------------------------------------------------------------------

def label_propagation(g: Graph, seed=0, max_sweeps: int = 100) -> np.ndarray:
    """Asynchronous label propagation (Raghavan et al.).

    A node keeps its label while it is one of the most frequent labels among
    its neighbours; otherwise it adopts one of those modes uniformly at random.
    """
    rng = as_rng(seed)
    labels = list(range(g.n))
    adj = g.adjacency
    for _ in range(max_sweeps):
        changed = False
        for i in rng.permutation(g.n).tolist():
            if not adj[i]:
                continue
            counts: dict[int, int] = {}
            for j in adj[i]:
                counts[labels[j]] = counts.get(labels[j], 0) + 1
            top = max(counts.values())
            if counts.get(labels[i], 0) == top:
                continue
            modes = sorted(c for c, v in counts.items() if v == top)
            labels[i] = modes[int(rng.integers(len(modes)))] if len(modes) > 1 else modes[0]
            changed = True
        if not changed:
            break
    return canonicalize(labels)


# ---------------------------------------------------------------------------
# Fast greedy (Clauset-Newman-Moore)
# ---------------------------------------------------------------------------

def fast_greedy(g: Graph) -> np.ndarray:
    """Greedy agglomerative modularity maximization.

    Always merges the adjacent pair with the largest modularity gain (ties to
    the smallest ``(i, j)``) and returns the partition of maximal modularity
    along the merge path. Deterministic; takes no seed.
    """
    n, m = g.n, g.m
    if m == 0:
        return np.arange(n, dtype=np.int64)
    two_m = 2 * m
    links: list[dict[int, int]] = [dict() for _ in range(n)]
    for u, v in g.edges:
        links[u][v] = 1
        links[v][u] = 1
    tot = [len(a) for a in g.adjacency]
    alive = set(range(n))

    # gain scaled by 2m^2 stays integral: A_ij * 2m - K_i * K_j
    q = best_q = 0
    merges: list[tuple[int, int]] = []
    best_len = 0
    while True:
        best = None
        for i in sorted(alive):
            for j in sorted(links[i]):
                if j <= i:
                    continue
                gain = links[i][j] * two_m - tot[i] * tot[j]
                if best is None or gain > best[0]:
                    best = (gain, i, j)
        if best is None:
            break
        gain, i, j = best
        for k, a in links[j].items():
            if k == i:
                continue
            links[i][k] = links[i].get(k, 0) + a
            links[k][i] = links[k].get(i, 0) + a
            del links[k][j]
        links[i].pop(j, None)
        links[j] = {}
        tot[i] += tot[j]
        alive.discard(j)
        merges.append((i, j))
        q += gain
        if q > best_q:
            best_q, best_len = q, len(merges)

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in merges[:best_len]:
        parent[find(j)] = find(i)
    return canonicalize([find(v) for v in range(n)])


# ---------------------------------------------------------------------------
# External programs
# ---------------------------------------------------------------------------

def run_external_detector(g: Graph, command: Sequence[str], seed: int = 0,
                          timeout: float = DEFAULT_TIMEOUT) -> np.ndarray:
    """Run a detector program over the edge-list wire protocol.

    The child gets ``write_edgelist(g)`` on stdin and the seed as its last
    argument; it must print ``n`` community ids (one per line, node order)
    and exit with status 0.
    """
    argv = [*command, str(int(seed))]
    try:
        proc = subprocess.run(argv, input=write_edgelist(g), capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise DetectorError(f"detector timed out after {timeout:g} s: {argv[0]}",
                            _decode(exc.stderr)) from exc
    except OSError as exc:
        raise DetectorError(f"cannot run detector {argv[0]!r}: {exc}") from exc
    stderr = _decode(proc.stderr)
    if proc.returncode != 0:
        raise DetectorError(f"detector exited with status {proc.returncode}", stderr)
    tokens = _decode(proc.stdout).split()
    if len(tokens) != g.n:
        raise DetectorError(f"detector printed {len(tokens)} ids for {g.n} nodes", stderr)
    try:
        ids = [int(t) for t in tokens]
    except ValueError as exc:
        raise DetectorError(f"detector output is not integer community ids: {exc}", stderr) from exc
    return canonicalize(ids)


def _decode(raw) -> str:
    if raw is None:
        return ""
    return raw.decode("utf-8", errors="replace") if isinstance(raw, bytes) else raw


def detect(g: Graph, spec: DetectorSpec) -> np.ndarray:
    """Canonical membership vector of ``g`` under ``spec``."""
    if spec.kind == "louvain":
        return louvain(g, spec.seed)
    if spec.kind == "label_prop":
        return label_propagation(g, spec.seed)
    if spec.kind == "fast_greedy":
        return fast_greedy(g)
    return run_external_detector(g, spec.command, spec.seed, spec.timeout)
