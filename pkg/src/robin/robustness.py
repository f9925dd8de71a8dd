"""Stability curves under degree-preserving perturbation.

Two workflows share the same machinery:

* :func:`robin_robust` compares a detector on the real graph against the same
  detector on a null graph;
* :func:`robin_compare` runs two detectors on one shared (paired) ensemble of
  perturbed copies of the real graph.

Every perturbed graph gets its own random stream derived from
``(plan.seed, level_index, replicate_index)``, so results do not depend on
evaluation order or on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .detect import DetectorSpec, detect
from .graph import Graph, rewire_fraction
from .measures import MEASURES, distance

DEFAULT_LEVELS = tuple(round(0.05 * i, 2) for i in range(1, 13))


@dataclass(frozen=True)
class PerturbationPlan:
    levels: tuple[float, ...] = DEFAULT_LEVELS
    strategy: str = "independent"
    base_reps: int = 10
    derived_reps: int = 9
    derived_extra_fraction: float = 0.01
    seed: int = 0

    def __post_init__(self):
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("at least one perturbation level is required")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if levels[0] < 0 or levels[-1] > 1:
            raise ValueError("levels must lie in [0, 1]")
        if self.strategy not in ("independent", "dependent"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.base_reps < 1 or self.derived_reps < 0:
            raise ValueError("base_reps must be >= 1 and derived_reps >= 0")

    @property
    def group_size(self) -> int:
        return 1 + self.derived_reps

    @property
    def n_graphs(self) -> int:
        return len(self.levels) * self.base_reps * self.group_size

    def rng(self, level_index: int, replicate_index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(level_index, replicate_index))
        return np.random.default_rng(ss)

    def to_dict(self) -> dict:
        return {"levels": list(self.levels), "strategy": self.strategy,
                "base_reps": self.base_reps, "derived_reps": self.derived_reps,
                "derived_extra_fraction": self.derived_extra_fraction, "seed": self.seed}


def parse_levels(spec: str, include_zero: bool = False) -> tuple[float, ...]:
    """``"start:step:stop"`` (inclusive) or a comma-separated list."""
    if ":" in spec:
        start, step, stop = (float(x) for x in spec.split(":"))
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        levels = [round(start + i * step, 10) for i in range(count)]
    else:
        levels = [float(x) for x in spec.split(",") if x.strip()]
    if include_zero and levels[0] != 0.0:
        levels.insert(0, 0.0)
    elif not include_zero:
        levels = [x for x in levels if x > 0]
    return tuple(levels)


def _base_graphs(g: Graph, plan: PerturbationPlan, level_index: int, base: int,
                 chain: Graph | None) -> Graph:
    rep = base * plan.group_size
    if plan.strategy == "independent":
        return rewire_fraction(g, plan.levels[level_index], plan.rng(level_index, rep))
    previous = plan.levels[level_index - 1] if level_index else 0.0
    step = plan.levels[level_index] - previous
    source = g if chain is None else chain
    return rewire_fraction(source, max(step, 0.0), plan.rng(level_index, rep))


def perturbed_ensemble(g: Graph, plan: PerturbationPlan) -> Iterator[tuple[int, int, Graph]]:
    """Yield ``(level_index, replicate_index, graph)`` for the whole plan.

    Replicate ``b * (1 + derived_reps)`` is the b-th base graph of a level;
    the following ``derived_reps`` indices are its derivatives, each a further
    ``derived_extra_fraction`` rewiring of that base.
    """
    chains: list[Graph | None] = [None] * plan.base_reps
    for li in range(len(plan.levels)):
        for b in range(plan.base_reps):
            base = _base_graphs(g, plan, li, b, chains[b])
            chains[b] = base
            rep = b * plan.group_size
            yield li, rep, base
            for d in range(1, plan.group_size):
                derived = rewire_fraction(base, plan.derived_extra_fraction, plan.rng(li, rep + d))
                yield li, rep + d, derived


@dataclass(frozen=True)
class RobustnessCurves:
    levels: tuple[float, ...]
    group_means: np.ndarray  # base_reps x n_levels
    grand_mean: np.ndarray  # n_levels
    raw: np.ndarray | None = field(default=None, repr=False)  # all graphs x n_levels

    @classmethod
    def from_raw(cls, levels, raw: np.ndarray, group_size: int) -> "RobustnessCurves":
        n_rows, n_levels = raw.shape
        groups = raw.reshape(n_rows // group_size, group_size, n_levels).mean(axis=1)
        return cls(tuple(levels), groups, groups.mean(axis=0), raw)

    def to_dict(self, name: str) -> dict:
        return {"name": name, "group_means": self.group_means.tolist(),
                "grand_mean": self.grand_mean.tolist()}

    @classmethod
    def from_dict(cls, levels, d: dict) -> "RobustnessCurves":
        gm = np.asarray(d["group_means"], dtype=np.float64)
        grand = np.asarray(d["grand_mean"], dtype=np.float64)
        return cls(tuple(levels), gm, grand)


@dataclass(frozen=True)
class RobustResult:
    real: RobustnessCurves
    null: RobustnessCurves
    measure: str
    detector: DetectorSpec
    plan: PerturbationPlan
    graph_fingerprint: str = ""
    null_fingerprint: str = ""

    kind = "robust"

    @property
    def series(self) -> dict[str, RobustnessCurves]:
        return {"real": self.real, "null": self.null}

    @property
    def detectors(self) -> list[DetectorSpec]:
        return [self.detector]


@dataclass(frozen=True)
class CompareResult:
    curves1: RobustnessCurves
    curves2: RobustnessCurves
    measure: str
    detector1: DetectorSpec
    detector2: DetectorSpec
    plan: PerturbationPlan
    graph_fingerprint: str = ""

    kind = "compare"

    @property
    def series(self) -> dict[str, RobustnessCurves]:
        n1, n2 = self.detector1.name, self.detector2.name
        if n1 == n2:
            n1, n2 = f"{n1} (1)", f"{n2} (2)"
        return {n1: self.curves1, n2: self.curves2}

    @property
    def detectors(self) -> list[DetectorSpec]:
        return [self.detector1, self.detector2]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _score(args) -> tuple[float, ...]:
    graph, detectors, references, kind = args
    return tuple(distance(detect(graph, det), ref, kind) for det, ref in zip(detectors, references))


def _evaluate(g: Graph, plan: PerturbationPlan, detectors: Sequence[DetectorSpec],
              references: Sequence[np.ndarray], kind: str, workers: int) -> np.ndarray:
    """Distances for every ensemble graph: array (n_detectors, rows, n_levels)."""
    n_rows = plan.base_reps * plan.group_size
    out = np.empty((len(detectors), n_rows, len(plan.levels)))
    cells = []
    jobs = []
    for li, rep, graph in perturbed_ensemble(g, plan):
        cells.append((li, rep))
        jobs.append((graph, tuple(detectors), tuple(references), kind))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(_score, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        scores = [_score(job) for job in jobs]
    for (li, rep), vals in zip(cells, scores):
        out[:, rep, li] = vals
    return out


def _check_measure(kind: str) -> str:
    kind = kind.replace("-", "_")
    if kind not in MEASURES:
        raise ValueError(f"unknown measure {kind!r}")
    return kind


def robin_robust(g: Graph, g_null: Graph, det: DetectorSpec, kind: str = "vi",
                 plan: PerturbationPlan | None = None, workers: int = 1) -> RobustResult:
    """Stability curves of ``det`` on the real graph and on a null graph."""
    plan = plan or PerturbationPlan()
    kind = _check_measure(kind)
    curves = []
    for graph in (g, g_null):
        ref = detect(graph, det)
        raw = _evaluate(graph, plan, [det], [ref], kind, workers)[0]
        curves.append(RobustnessCurves.from_raw(plan.levels, raw, plan.group_size))
    return RobustResult(curves[0], curves[1], kind, det, plan,
                        g.fingerprint(), g_null.fingerprint())


def robin_compare(g: Graph, det1: DetectorSpec, det2: DetectorSpec, kind: str = "vi",
                  plan: PerturbationPlan | None = None, workers: int = 1) -> CompareResult:
    """Stability curves of two detectors on one shared perturbed ensemble."""
    plan = plan or PerturbationPlan()
    kind = _check_measure(kind)
    refs = [detect(g, det1), detect(g, det2)]
    raw = _evaluate(g, plan, [det1, det2], refs, kind, workers)
    c1, c2 = (RobustnessCurves.from_raw(plan.levels, r, plan.group_size) for r in raw)
    return CompareResult(c1, c2, kind, det1, det2, plan, g.fingerprint())


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def to_json_dict(result: RobustResult | CompareResult) -> dict:
    series = result.series
    d = {
        "kind": result.kind,
        "measure": result.measure,
        "strategy": result.plan.strategy,
        "levels": list(result.plan.levels),
        "detectors": [det.to_dict() for det in result.detectors],
        "series": list(series),
        "group_means": [c.group_means.tolist() for c in series.values()],
        "grand_mean": [c.grand_mean.tolist() for c in series.values()],
        "seed": result.plan.seed,
        "plan": result.plan.to_dict(),
        "graph_fingerprint": result.graph_fingerprint,
    }
    if isinstance(result, RobustResult):
        d["null_fingerprint"] = result.null_fingerprint
    return d


def dumps(result: RobustResult | CompareResult) -> str:
    return json.dumps(to_json_dict(result), indent=2, sort_keys=True) + "\n"


def _spec_from_dict(d: dict) -> DetectorSpec:
    return DetectorSpec(d["kind"], tuple(d.get("command", ())), int(d.get("seed", 0)))


def loads(text: str) -> RobustResult | CompareResult:
    """Inverse of :func:`dumps`. Raises ``ValueError`` on malformed documents."""
    try:
        d = json.loads(text)
        plan_d = dict(d["plan"])
        plan_d["levels"] = tuple(plan_d["levels"])
        plan = PerturbationPlan(**plan_d)
        curves = [RobustnessCurves.from_dict(plan.levels, {"group_means": gm, "grand_mean": mean})
                  for gm, mean in zip(d["group_means"], d["grand_mean"])]
        dets = [_spec_from_dict(x) for x in d["detectors"]]
        for c in curves:
            if c.grand_mean.shape != (len(plan.levels),) or c.group_means.shape[1:] != (len(plan.levels),):
                raise ValueError("curve shapes do not match the level grid")
        if d["kind"] == "robust":
            return RobustResult(curves[0], curves[1], d["measure"], dets[0], plan,
                                d.get("graph_fingerprint", ""), d.get("null_fingerprint", ""))
        if d["kind"] == "compare":
            return CompareResult(curves[0], curves[1], d["measure"], dets[0], dets[1], plan,
                                 d.get("graph_fingerprint", ""))
        raise ValueError(f"unknown result kind {d['kind']!r}")
    except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed result document: {exc}") from exc


def to_csv(result: RobustResult | CompareResult) -> str:
    """One row per (series, replicate, level) holding that replicate's group mean."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "replicate", "level", "value"])
    for name, curves in result.series.items():
        for rep, row in enumerate(curves.group_means):
            for level, value in zip(result.plan.levels, row):
                w.writerow([name, rep, repr(float(level)), repr(float(value))])
    return buf.getvalue()
