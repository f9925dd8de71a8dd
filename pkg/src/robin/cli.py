"""Command-line front end: ``robin <prep|null|detect|robust|compare|test|plot>``."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .detect import BUILTIN, DetectorError, DetectorSpec, detect, modularity
from .graph import (Graph, GraphParseError, degree_sequence, null_configuration_model,
                    read_graph, write_edgelist)
from .measures import MEASURES, distance
from .robustness import (CompareResult, PerturbationPlan, RobustResult, dumps, loads,
                         parse_levels, robin_compare, robin_robust, to_csv)
from .stats import NumericalError, robin_auc, robin_fda_test, robin_gp_test

EXIT_INPUT, EXIT_DETECTOR, EXIT_NUMERIC = 2, 3, 4


class InputError(Exception):
    pass


def null_rng(seed: int) -> np.random.Generator:
    """Stream used for null-model generation; disjoint from the perturbation streams."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**32 - 1,)))


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load_graph(args) -> Graph:
    path = Path(args.graph)
    if not path.is_file():
        raise InputError(f"graph file not found: {path}")
    return read_graph(path, args.format)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _detector(method: str, external_cmd: str | None, seed: int) -> DetectorSpec:
    if method == "external":
        if not external_cmd:
            raise InputError("--method external needs --external-cmd")
        return DetectorSpec.external(external_cmd, seed)
    return DetectorSpec(method, seed=seed)


def _plan(args) -> PerturbationPlan:
    return PerturbationPlan(
        levels=parse_levels(args.levels, include_zero=args.include_zero),
        strategy=args.type,
        base_reps=args.reps,
        derived_reps=args.derived_reps,
        seed=args.seed,
    )


def _write_result(result, args, stem: str) -> dict:
    out = _outdir(args)
    written = {"json": str(out / f"{stem}.json")}
    (out / f"{stem}.json").write_text(dumps(result))
    if args.plot in ("csv", "both"):
        (out / f"{stem}.csv").write_text(to_csv(result))
        written["csv"] = str(out / f"{stem}.csv")
    if args.plot in ("svg", "both"):
        path = plotting.plot_curves(result.plan.levels, result.series, result.measure,
                                    out / f"{stem}.svg")
        written["svg"] = str(path)
    return written


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_prep(args) -> int:
    g = _load_graph(args)
    out = _outdir(args)
    target = out / (Path(args.graph).stem + ".edgelist")
    target.write_bytes(write_edgelist(g))
    _emit({"n": g.n, "m": g.m, "ground_truth": g.ground_truth is not None, "path": str(target)})
    return 0


def cmd_null(args) -> int:
    g = _load_graph(args)
    h = null_configuration_model(g, null_rng(args.seed))
    if not np.array_equal(degree_sequence(h), degree_sequence(g)):
        raise NumericalError("null model changed the degree sequence")
    out = _outdir(args)
    target = out / (Path(args.graph).stem + "_null.edgelist")
    target.write_bytes(write_edgelist(h))
    _emit({"n": h.n, "m": h.m, "path": str(target), "fingerprint": h.fingerprint()})
    return 0


def cmd_detect(args) -> int:
    g = _load_graph(args)
    det = _detector(args.method, args.external_cmd, args.seed)
    membership = detect(g, det)
    out = _outdir(args)
    target = out / "membership.txt"
    target.write_text("".join(f"{i} {c}\n" for i, c in enumerate(membership.tolist())))
    summary = {
        "method": det.name,
        "communities": int(membership.max() + 1) if g.n else 0,
        "modularity": modularity(g, membership),
        "path": str(target),
    }
    if g.ground_truth is not None:
        summary["distance_to_ground_truth"] = {
            k: distance(membership, g.ground_truth, k) for k in MEASURES
        }
    _emit(summary)
    return 0


def _null_graph(g: Graph, args) -> Graph:
    source = args.null
    if source == "cm":
        return null_configuration_model(g, null_rng(args.seed))
    if source.startswith("file:"):
        path = Path(source[5:])
        if not path.is_file():
            raise InputError(f"null graph file not found: {path}")
        return read_graph(path, None)
    raise InputError(f"--null must be 'cm' or 'file:PATH', got {source!r}")


def cmd_robust(args) -> int:
    g = _load_graph(args)
    det = _detector(args.method, args.external_cmd, args.seed)
    result = robin_robust(g, _null_graph(g, args), det, args.measure, _plan(args), args.threads)
    written = _write_result(result, args, "robust")
    _emit({"kind": "robust", "grand_mean": {k: c.grand_mean.tolist() for k, c in result.series.items()},
           "files": written})
    return 0


def cmd_compare(args) -> int:
    g = _load_graph(args)
    if not args.method2:
        raise InputError("compare needs --method2")
    det1 = _detector(args.method, args.external_cmd, args.seed)
    det2 = _detector(args.method2, args.external_cmd2 or args.external_cmd, args.seed)
    result = robin_compare(g, det1, det2, args.measure, _plan(args), args.threads)
    written = _write_result(result, args, "compare")
    _emit({"kind": "compare", "grand_mean": {k: c.grand_mean.tolist() for k, c in result.series.items()},
           "files": written})
    return 0


def _load_result(path) -> tuple[RobustResult | CompareResult, bytes]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"result file not found: {path}")
    raw = path.read_bytes()
    try:
        return loads(raw.decode("utf-8")), raw
    except (ValueError, UnicodeDecodeError) as exc:
        raise InputError(str(exc)) from exc


def cmd_test(args) -> int:
    result, raw = _load_result(args.result)
    curves = list(result.series.values())
    levels = result.plan.levels
    out = _outdir(args)
    if args.which == "gp":
        doc = robin_gp_test(curves[0].grand_mean, curves[1].grand_mean, levels).to_dict()
    elif args.which == "auc":
        doc = robin_auc(curves[0].grand_mean, curves[1].grand_mean, levels).to_dict()
    else:
        if args.seed is None:
            raise InputError("the fda test is randomized: pass --seed")
        itp = robin_fda_test(curves[0].group_means, curves[1].group_means, levels,
                             permutations=args.permutations, seed=args.seed)
        doc = itp.to_dict()
        if args.plot in ("svg", "both"):
            doc["svg"] = str(plotting.plot_pvalues(levels, itp, out / "test_fda.svg"))
    doc["inputs_fingerprint"] = hashlib.sha256(raw).hexdigest()
    doc["series"] = list(result.series)
    (out / f"test_{args.which}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _emit(doc)
    return 0


def cmd_plot(args) -> int:
    result, _ = _load_result(args.result)
    out = _outdir(args)
    path = plotting.plot_curves(result.plan.levels, result.series, result.measure,
                                out / f"{result.kind}.svg")
    _emit({"svg": str(path)})
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _measure(value: str) -> str:
    value = value.replace("-", "_")
    if value not in MEASURES:
        raise argparse.ArgumentTypeError(f"choose from {', '.join(m.replace('_', '-') for m in MEASURES)}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robin", description="Robustness of network community structure.")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_flags(p):
        p.add_argument("--graph", required=True, help="input graph file")
        p.add_argument("--format", choices=("gml", "edgelist"), default=None,
                       help="input format (default: from the file suffix)")
        p.add_argument("--out", default=".", help="output directory")

    def seed_flag(p, required=True):
        p.add_argument("--seed", type=int, required=required, default=None)

    def detector_flags(p):
        methods = BUILTIN + ("external",)
        p.add_argument("--method", choices=methods, default="louvain")
        p.add_argument("--external-cmd", default=None, help="command line of an external detector")

    def workflow_flags(p):
        p.add_argument("--measure", type=_measure, default="vi", help="vi, nmi, split-join or ari")
        p.add_argument("--type", choices=("independent", "dependent"), default="independent")
        p.add_argument("--levels", default="0.05:0.05:0.60", help="start:step:stop or a comma list")
        p.add_argument("--include-zero", action="store_true", help="also measure level 0")
        p.add_argument("--reps", type=int, default=10, help="base graphs per level")
        p.add_argument("--derived-reps", type=int, default=9, help="derived graphs per base graph")
        p.add_argument("--plot", choices=("svg", "csv", "both"), default="both")
        p.add_argument("--threads", type=int, default=1, help="worker processes")

    p = sub.add_parser("prep", help="read, simplify and re-export a graph")
    graph_flags(p)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("null", help="degree-preserving null graph")
    graph_flags(p)
    seed_flag(p)
    p.set_defaults(func=cmd_null)

    p = sub.add_parser("detect", help="detect communities once")
    graph_flags(p)
    detector_flags(p)
    seed_flag(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("robust", help="real graph versus null model")
    graph_flags(p)
    detector_flags(p)
    workflow_flags(p)
    seed_flag(p)
    p.add_argument("--null", default="cm", help="'cm' or 'file:PATH'")
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("compare", help="two detectors on the same perturbations")
    graph_flags(p)
    detector_flags(p)
    workflow_flags(p)
    seed_flag(p)
    p.add_argument("--method2", choices=BUILTIN + ("external",), required=True)
    p.add_argument("--external-cmd2", default=None,
                   help="external command for --method2 (default: --external-cmd)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("test", help="GP, ITP (fda) or AUC test on a result file")
    p.add_argument("--result", required=True)
    p.add_argument("--which", choices=("gp", "fda", "auc"), required=True)
    p.add_argument("--permutations", type=int, default=1000)
    p.add_argument("--plot", choices=("svg", "csv", "both"), default="svg")
    p.add_argument("--out", default=".")
    seed_flag(p, required=False)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("plot", help="redraw the curves of a result file")
    p.add_argument("--result", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, GraphParseError, OSError) as exc:
        print(f"robin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DetectorError as exc:
        print(f"robin: detector error: {exc}", file=sys.stderr)
        return EXIT_DETECTOR
    except NumericalError as exc:
        print(f"robin: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"robin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
