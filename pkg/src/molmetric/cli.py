"""Command-line front end for molmetric.

Every successful command prints one JSON document on stdout; progress and
errors go to stderr. Exit codes: 0 success, 1 input error, 2 numerical
failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import harness
from .chemnet import ChemNetModel, CorruptFile, MissingTensor, NonFiniteActivation, ShapeMismatch, load_model, seeded_init
from .fingerprint import internal_diversity
from .frechet import (
    DEFAULT_EPS,
    STATS_FORMAT,
    CorruptStatsFile,
    DimensionMismatch,
    GaussianStats,
    InsufficientSamples,
    NonFiniteInput,
    NotPSD,
    NumericalFailure,
    frechet_distance,
)
from .smiles import check_validity

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("molmetric")

INPUT_ERRORS = (
    harness.HarnessError,
    CorruptStatsFile,
    DimensionMismatch,
    InsufficientSamples,
    NonFiniteInput,
    CorruptFile,
    MissingTensor,
    ShapeMismatch,
    OSError,
)
NUMERIC_ERRORS = (NotPSD, NumericalFailure, NonFiniteActivation, FloatingPointError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _sizes(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--eps", type=_positive_float, default=DEFAULT_EPS)
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: $MOLMETRIC_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    model_opts = argparse.ArgumentParser(add_help=False)
    group = model_opts.add_mutually_exclusive_group()
    group.add_argument("--model", type=Path, help="weight manifest (JSON)")
    group.add_argument("--seeded-model", type=int, metavar="SEED", help="deterministic stand-in weights")

    parser = _Parser(prog="molmetric", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fcd", parents=[common, model_opts], help="Fréchet ChemNet Distance between two sets")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path, help="molecule file or stats file")

    p = sub.add_parser("ffd", parents=[common], help="Fréchet distance over 2048-bit fingerprints")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path, help="molecule file or fingerprint stats file")

    p = sub.add_parser("diversity", parents=[common], help="internal diversity of a set")
    p.add_argument("a", type=Path)
    p.add_argument("--subset-size", type=int, default=5000)
    p.add_argument("--repeats", type=int, default=5)

    p = sub.add_parser("validity", parents=[common], help="fraction of parseable SMILES")
    p.add_argument("a", type=Path)

    p = sub.add_parser("stats", parents=[common, model_opts], help="write reference statistics")
    p.add_argument("a", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--kind", choices=("chemnet", "fingerprint"), default="chemnet")

    p = sub.add_parser("simulate", parents=[common], help="draw a disturbed set from a corpus")
    p.add_argument("kind", choices=tuple(harness.DISTURBANCES))
    p.add_argument("corpus", type=Path)
    p.add_argument("-n", type=int, default=5000)
    p.add_argument("-o", "--output", type=Path, help="write the sampled SMILES (.smi) here")

    p = sub.add_parser("converge", parents=[common, model_opts], help="sample-size convergence table")
    p.add_argument("corpus", type=Path, nargs="?", help="defaults to the bundled corpus")
    p.add_argument("--sizes", type=_sizes, default=[5, 50, 500, 5000, 50000, 300000])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("-o", "--output", type=Path, help="convergence.csv path")

    p = sub.add_parser("score", parents=[common, model_opts], help="repeated-subsample FCD of generated SMILES")
    p.add_argument("candidates", type=Path)
    p.add_argument("--reference", type=Path, required=True, help="stats file or molecule file")
    p.add_argument("--sample-size", type=int, default=10000)
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("baseline", parents=[common], help="random C/N/O strings")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("report", parents=[common, model_opts], help="metric table for named sets")
    p.add_argument("reference", type=Path)
    p.add_argument("sets", nargs="+", metavar="NAME=PATH")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    p.add_argument("--metrics", default=",".join(harness.ALL_METRICS))
    return parser


def _model(args) -> ChemNetModel:
    if args.model is not None:
        return load_model(args.model)
    return seeded_init(seed=args.seeded_model if args.seeded_model is not None else 0)


def _model_id(args) -> str:
    return str(args.model) if args.model is not None else f"seeded:{args.seeded_model or 0}"


def _is_stats_file(path: Path) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(256)
    return head.startswith(b"{") and STATS_FORMAT.encode() in head


def _valid_smiles(path: Path) -> tuple[list[str], int]:
    records = harness.load_dataset(path)
    smiles = [r.smiles for r in records]
    valid = [s for s in smiles if check_validity(s).valid]
    if len(valid) < 2:
        raise harness.HarnessError(f"{path}: fewer than two valid SMILES")
    return valid, len(smiles)


def _side_stats(path: Path, kind: str, args, model=None) -> tuple[GaussianStats, dict]:
    if _is_stats_file(path):
        stats = GaussianStats.load(path)
        return stats, {"path": str(path), "n": stats.n, "from_stats": True}
    valid, total = _valid_smiles(path)
    if kind == "fingerprint":
        stats = harness.fingerprint_stats(harness.fingerprints_of(valid))
    else:
        stats = harness.embedding_stats(model, valid, args.threads)
    return stats, {"path": str(path), "n": total, "n_valid": len(valid), "validity": len(valid) / total}


def cmd_fcd(args) -> dict:
    model = _model(args)
    a, info_a = _side_stats(args.a, "chemnet", args, model)
    b, info_b = _side_stats(args.b, "chemnet", args, model)
    return {"fcd": frechet_distance(a, b, args.eps), "a": info_a, "b": info_b, "model": _model_id(args), "eps": args.eps}


def cmd_ffd(args) -> dict:
    a, info_a = _side_stats(args.a, "fingerprint", args)
    b, info_b = _side_stats(args.b, "fingerprint", args)
    return {"ffd": harness.fingerprint_distance(a, b, args.eps), "a": info_a, "b": info_b, "eps": args.eps}


def cmd_diversity(args) -> dict:
    valid, total = _valid_smiles(args.a)
    fps = harness.fingerprints_of(valid)
    value = internal_diversity(fps, args.subset_size, args.repeats, args.seed)
    return {"internal_diversity": value, "n": total, "n_valid": len(valid), "seed": args.seed}


def cmd_validity(args) -> dict:
    smiles = [r.smiles for r in harness.load_dataset(args.a)]
    if not smiles:
        raise harness.HarnessError(f"{args.a}: no molecules")
    results = [check_validity(s) for s in smiles]
    n_valid = sum(r.valid for r in results)
    reasons = Counter(r.reason for r in results if not r.valid)
    return {"validity": n_valid / len(smiles), "n": len(smiles), "n_valid": n_valid, "reasons": dict(sorted(reasons.items()))}


def cmd_stats(args) -> dict:
    model = _model(args) if args.kind == "chemnet" else None
    stats, info = _side_stats(args.a, args.kind, args, model)
    stats.meta.update({"eps_used": args.eps, "source": str(args.a)})
    if model is not None:
        stats.meta["model"] = _model_id(args)
    stats.save(args.output)
    return {"output": str(args.output), "dim": stats.dim, **info, "kind": args.kind}


def cmd_simulate(args) -> dict:
    records = harness.load_dataset(args.corpus)
    picked = harness.disturbed_set(args.kind, records, args.n, args.seed)
    if args.output:
        args.output.write_text("".join(r.smiles + "\n" for r in picked))
    result = {"kind": args.kind, "n": len(picked), "seed": args.seed, "output": str(args.output) if args.output else None}
    params = harness.DISTURBANCES[args.kind]
    if "percentile" in params:
        result["threshold"] = harness.percentile_threshold(records.column(params["column"]), params["percentile"])
    if not args.output:
        result["smiles"] = [r.smiles for r in picked]
    return result


def cmd_converge(args) -> dict:
    model = _model(args)
    records = harness.load_dataset(args.corpus) if args.corpus else harness.load_bundled_corpus()
    valid = [r.smiles for r in records if check_validity(r.smiles).valid]
    from .chemnet import embed_smiles

    pool = embed_smiles(model, valid, workers=args.threads)
    rows = harness.convergence_experiment(pool, sizes=args.sizes, repeats=args.repeats, seed=args.seed, eps=args.eps)
    if args.output:
        harness.write_convergence_csv(rows, args.output)
    return {"rows": [vars(r) for r in rows], "pool": len(valid), "model": _model_id(args), "seed": args.seed}


def cmd_score(args) -> dict:
    model = _model(args)
    reference, _ = _side_stats(args.reference, "chemnet", args, model)
    candidates = [r.smiles for r in harness.load_dataset(args.candidates)]
    res = harness.score_generator(
        candidates, reference, model, args.sample_size, args.repeats, args.seed, args.eps, args.threads
    )
    return {**vars(res), "model": _model_id(args), "seed": args.seed}


def cmd_baseline(args) -> dict:
    smiles = harness.random_cno_baseline(args.n, args.seed)
    if args.output:
        args.output.write_text("".join(s + "\n" for s in smiles))
    validity = sum(check_validity(s).valid for s in smiles) / len(smiles)
    return {"n": args.n, "seed": args.seed, "validity": validity, "smiles": smiles}


def cmd_report(args) -> dict:
    reference = harness.load_dataset(args.reference)
    sets = {}
    for spec in args.sets:
        name, sep, path = spec.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=PATH, got {spec!r}")
        sets[name] = harness.load_dataset(path)
    metrics = [m for m in args.metrics.split(",") if m]
    model = _model(args) if "fcd" in metrics else None
    report = harness.run_report(
        reference, sets, model, metrics, args.output, args.seed, args.eps, workers=args.threads
    )
    return {"output": str(args.output), **{"metadata": report.metadata, "rows": report.rows}}


COMMANDS = {
    "fcd": cmd_fcd,
    "ffd": cmd_ffd,
    "diversity": cmd_diversity,
    "validity": cmd_validity,
    "stats": cmd_stats,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "score": cmd_score,
    "baseline": cmd_baseline,
    "report": cmd_report,
}


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", None) is None and hasattr(args, "threads"):
            args.threads = int(os.environ.get("MOLMETRIC_THREADS", "1") or 1)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        result = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"molmetric: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"molmetric: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except INPUT_ERRORS as exc:
        print(f"molmetric: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    json.dump(result, sys.stdout, default=_jsonable)
    sys.stdout.write("\n")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
