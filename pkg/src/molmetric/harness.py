"""Datasets, disturbed-set generators and the evaluation protocols.

Every random choice draws from a generator seeded with
``derive_seed(seed, task...)``, so results do not depend on the order in
which tasks are run. Sampling is always without replacement.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ._rng import SplitMix64, task_rng
from .chemnet import ChemNetModel, embed_smiles
from .fingerprint import Fingerprint, fingerprint_matrix, internal_diversity, morgan_fingerprint, single_linkage_clusters
from .frechet import DEFAULT_EPS, GaussianStats, estimate_stats, frechet_distance
from .smiles import check_validity, parse_smiles

logger = logging.getLogger(__name__)

DESCRIPTOR_COLUMNS = ("logp", "qed", "sa_score", "activity")


class HarnessError(ValueError):
    pass


class MissingColumn(HarnessError):
    pass


class UnreadableFile(HarnessError):
    pass


class NotEnoughQualifyingRecords(HarnessError):
    def __init__(self, found: int, requested: int):
        self.found, self.requested = found, requested
        super().__init__(f"only {found} records qualify, {requested} requested")


class NoClusterLargeEnough(HarnessError):
    def __init__(self, largest: int, requested: int):
        self.largest, self.requested = largest, requested
        super().__init__(f"largest cluster has {largest} members, {requested} requested")


class AllInvalid(HarnessError):
    pass


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass
class DatasetRecord:
    smiles: str
    descriptors: dict[str, float] = field(default_factory=dict)


class Dataset(list):
    """A list of :class:`DatasetRecord` plus the rows that failed to load.

    ``rejects`` holds ``(line number, raw text, reason)`` tuples.
    """

    def __init__(self, records=(), rejects=()):
        super().__init__(records)
        self.rejects: list[tuple[int, str, str]] = list(rejects)

    @property
    def smiles(self) -> list[str]:
        return [r.smiles for r in self]

    def column(self, name: str) -> np.ndarray:
        """Values of a descriptor column (records lacking it are skipped)."""
        return np.array([r.descriptors[name] for r in self if name in r.descriptors], dtype=np.float64)


def _format_of(path: Path, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "csv" if path.suffix.lower() == ".csv" else "smi"


def load_dataset(path, fmt: str | None = None) -> Dataset:
    """Read a ``.smi`` (one SMILES per line) or ``.csv`` (``smiles`` column) file.

    Descriptor columns in CSV files are parsed as floats. Rows with a
    non-numeric or non-finite descriptor are rejected, not fatal; an empty
    descriptor cell just leaves that descriptor absent.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    records, rejects = [], []
    if _format_of(path, fmt) == "smi":
        for lineno, line in enumerate(text.splitlines(), start=1):
            fields = line.split()
            if fields:
                records.append(DatasetRecord(fields[0]))
        return Dataset(records, rejects)

    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None:
        raise MissingColumn("smiles")
    names = [h.strip() for h in header]
    lowered = [h.lower() for h in names]
    if "smiles" not in lowered:
        raise MissingColumn("smiles")
    s_col = lowered.index("smiles")
    for lineno, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue
        raw = ",".join(row)
        if len(row) != len(names):
            rejects.append((lineno, raw, f"expected {len(names)} fields, found {len(row)}"))
            continue
        smiles = row[s_col].strip()
        if not smiles:
            rejects.append((lineno, raw, "empty smiles"))
            continue
        descriptors, reason = {}, None
        for col, (name, cell) in enumerate(zip(names, row)):
            cell = cell.strip()
            if col == s_col or not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                reason = f"column {name!r}: cannot parse {cell!r} as a number"
                break
            if not math.isfinite(value):
                reason = f"column {name!r}: non-finite value {cell!r}"
                break
            descriptors[name.lower() if name.lower() in DESCRIPTOR_COLUMNS else name] = value
        if reason:
            rejects.append((lineno, raw, reason))
        else:
            records.append(DatasetRecord(smiles, descriptors))
    return Dataset(records, rejects)


def bundled_corpus_path() -> Path:
    return Path(str(resources.files("molmetric") / "data" / "corpus.csv"))


def load_bundled_corpus() -> Dataset:
    """The ~24k-molecule desk-scale corpus shipped with the package."""
    return load_dataset(bundled_corpus_path())


def _sample(records: Sequence, n: int, seed: int, *task: int) -> list:
    idx = task_rng(seed, *task).choice(len(records), size=n, replace=False)
    return [records[i] for i in idx]


# ---------------------------------------------------------------------------
# Disturbed sets
# ---------------------------------------------------------------------------


def percentile_threshold(values, percentile: float) -> float:
    """Linear-interpolation percentile: position ``p/100 * (n - 1)`` in sorted order."""
    return float(np.percentile(np.asarray(values, dtype=np.float64), percentile, method="linear"))


def percentile_filter(
    records: Sequence[DatasetRecord], column: str, side: str, percentile: float, n: int, seed: int = 0
) -> list[DatasetRecord]:
    """Sample ``n`` records lying strictly below/above a column percentile.

    The threshold is recomputed from all records that carry the column.
    """
    if side not in ("below", "above"):
        raise ValueError("side must be 'below' or 'above'")
    if not 0 < percentile < 100:
        raise ValueError("percentile must be in (0, 100)")
    having = [r for r in records if column in r.descriptors]
    if len(having) < n:
        raise NotEnoughQualifyingRecords(len(having), n)
    threshold = percentile_threshold([r.descriptors[column] for r in having], percentile)
    if side == "below":
        qualifying = [r for r in having if r.descriptors[column] < threshold]
    else:
        qualifying = [r for r in having if r.descriptors[column] > threshold]
    if len(qualifying) < n:
        raise NotEnoughQualifyingRecords(len(qualifying), n)
    return _sample(qualifying, n, seed, 0)


def fingerprints_of(smiles: Sequence[str], radius: int = 2, nbits: int = 2048) -> list[Fingerprint]:
    return [morgan_fingerprint(parse_smiles(s), radius, nbits) for s in smiles]


def mode_collapse_sample(
    records: Sequence[DatasetRecord],
    cutoff: float = 0.65,
    n: int = 5000,
    seed: int = 0,
    fps: Sequence[Fingerprint] | None = None,
) -> list[DatasetRecord]:
    """``n`` random members of the largest single-linkage cluster.

    ``fps`` may pass precomputed fingerprints aligned with ``records``.
    """
    if fps is None:
        fps = fingerprints_of([r.smiles for r in records])
    clusters = single_linkage_clusters(fps, cutoff)
    sizes = clusters.sizes()
    largest = int(np.argmax(sizes))  # argmax returns the lowest label on ties
    if sizes[largest] < n:
        raise NoClusterLargeEnough(int(sizes[largest]), n)
    members = clusters.members(largest)
    return _sample([records[i] for i in members], n, seed, 0)


def target_class_sample(
    records: Sequence[DatasetRecord], column: str = "activity", threshold: float = 0.5, n: int = 5000, seed: int = 0
) -> list[DatasetRecord]:
    """``n`` random records with ``column >= threshold``."""
    if not any(column in r.descriptors for r in records):
        raise MissingColumn(column)
    actives = [r for r in records if r.descriptors.get(column, -math.inf) >= threshold]
    if len(actives) < n:
        raise NotEnoughQualifyingRecords(len(actives), n)
    return _sample(actives, n, seed, 0)


# The five disturbances a-e with their filter parameters.
DISTURBANCES = {
    "druglike": dict(column="qed", side="below", percentile=5.0),
    "logp": dict(column="logp", side="above", percentile=95.0),
    "sa": dict(column="sa_score", side="below", percentile=5.0),
    "modecollapse": dict(cutoff=0.65),
    "target": dict(column="activity", threshold=0.5),
}


def disturbed_set(
    kind: str, records: Sequence[DatasetRecord], n: int, seed: int = 0, fps=None
) -> list[DatasetRecord]:
    params = DISTURBANCES[kind]
    if kind == "modecollapse":
        return mode_collapse_sample(records, n=n, seed=seed, fps=fps, **params)
    if kind == "target":
        return target_class_sample(records, n=n, seed=seed, **params)
    return percentile_filter(records, n=n, seed=seed, **params)


def random_subset(records: Sequence, n: int, seed: int = 0) -> list:
    if len(records) < n:
        raise NotEnoughQualifyingRecords(len(records), n)
    return _sample(records, n, seed, 1)


def random_cno_baseline(n: int, seed: int = 0) -> list[str]:
    """Strings of 1-50 atoms drawn uniformly from C, N and O.

    One splitmix64 stream: per string, a length draw then one draw per
    character. Outputs are not filtered for validity.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = SplitMix64(seed)
    out = []
    for _ in range(n):
        length = 1 + rng.below(50)
        out.append("".join("CNO"[rng.below(3)] for _ in range(length)))
    return out


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


def fingerprint_stats(fps: Sequence[Fingerprint]) -> GaussianStats:
    """Gaussian summary of fingerprints used as 0/1 real vectors (the FFD input)."""
    acc_chunks = (fingerprint_matrix(fps[i : i + 4096], dtype=np.float64) for i in range(0, len(fps), 4096))
    stats = estimate_stats(acc_chunks)
    stats.meta["kind"] = "fingerprint"
    return stats


def fingerprint_distance(a: GaussianStats, b: GaussianStats, eps: float = DEFAULT_EPS) -> float:
    """FFD: the Fréchet distance over fingerprint statistics.

    Bit-vector covariances are rank-deficient, so ``eps * I`` is always
    added to both before the distance is evaluated.
    """
    return frechet_distance(a, b, eps, regularize=True)


def embedding_stats(model: ChemNetModel, smiles: Sequence[str], workers: int | None = None) -> GaussianStats:
    stats = estimate_stats(embed_smiles(model, smiles, workers=workers))
    stats.meta["kind"] = "chemnet"
    return stats


@dataclass
class ConvergenceRow:
    size: int
    mean: float
    std: float
    repeats: int


def convergence_experiment(
    pool: np.ndarray,
    reference: GaussianStats | None = None,
    sizes: Sequence[int] = (5, 50, 500, 5000, 50000, 300000),
    repeats: int = 5,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
) -> list[ConvergenceRow]:
    """Distance between subsamples of ``pool`` and a reference, per sample size.

    ``pool`` is an ``(n, d)`` embedding array; the reference defaults to the
    statistics of the whole pool. Sizes larger than the pool are skipped.
    Standard deviations are population (ddof=0) over the repeats.
    """
    pool = np.asarray(pool, dtype=np.float64)
    if reference is None:
        reference = estimate_stats(pool)
    rows = []
    for si, size in enumerate(sizes):
        if size > len(pool):
            logger.warning("skipping size %d: pool has only %d samples", size, len(pool))
            continue
        values = []
        for r in range(repeats):
            idx = task_rng(seed, si, r).choice(len(pool), size=size, replace=False)
            values.append(frechet_distance(estimate_stats(pool[np.sort(idx)]), reference, eps))
        rows.append(ConvergenceRow(size, float(np.mean(values)), float(np.std(values)), repeats))
    return rows


def write_convergence_csv(rows: Sequence[ConvergenceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["size", "mean", "std", "repeats"])
        for row in rows:
            w.writerow([row.size, repr(row.mean), repr(row.std), row.repeats])


@dataclass
class ScoreResult:
    mean: float
    std: float
    validity: float
    n_valid: int
    n_total: int
    values: list[float] = field(default_factory=list)


def score_generator(
    candidates: Sequence[str],
    reference_stats: GaussianStats,
    model: ChemNetModel,
    sample_size: int = 10000,
    repeats: int = 10,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    workers: int | None = None,
) -> ScoreResult:
    """Repeated-subsample FCD of generated SMILES against reference statistics.

    Invalid strings are dropped first and reported via ``validity``.
    """
    if not candidates:
        raise AllInvalid("no candidates")
    valid = [s for s in candidates if check_validity(s).valid]
    if not valid:
        raise AllInvalid(f"none of {len(candidates)} candidates is a valid SMILES")
    k = min(sample_size, len(valid))
    draws = [np.sort(task_rng(seed, r).choice(len(valid), size=k, replace=False)) for r in range(repeats)]
    needed = np.unique(np.concatenate(draws))
    emb = np.empty((len(valid), model.embedding_dim))
    emb[needed] = embed_smiles(model, [valid[i] for i in needed], workers=workers)
    values = [frechet_distance(estimate_stats(emb[idx]), reference_stats, eps) for idx in draws]
    return ScoreResult(
        float(np.mean(values)), float(np.std(values)), len(valid) / len(candidates), len(valid), len(candidates), values
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _uncell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class MetricReport:
    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            cols.extend(c for c in row if c not in cols)
        return cols

    def row(self, name: str) -> dict:
        return next(r for r in self.rows if r["set"] == name)

    def to_csv(self, path) -> None:
        cols = self.columns
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.rows:
                w.writerow([_cell(row.get(c)) for c in cols])

    @classmethod
    def from_csv(cls, path, metadata: dict | None = None) -> MetricReport:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            cols = next(reader)
            rows = []
            for values in reader:
                row = {c: _uncell(v) for c, v in zip(cols, values)}
                row["set"] = str(values[cols.index("set")])
                rows.append(row)
        return cls(rows, dict(metadata or {}))

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({"metadata": self.metadata, "rows": self.rows}, indent=1))

    @classmethod
    def from_json(cls, path) -> MetricReport:
        data = json.loads(Path(path).read_text())
        return cls(data["rows"], data["metadata"])


def _descriptor_summary(records: Sequence[DatasetRecord], columns: Sequence[str]) -> dict:
    out = {}
    for col in columns:
        vals = np.array([r.descriptors[col] for r in records if col in r.descriptors])
        out[f"{col}_mean"] = float(vals.mean()) if len(vals) else None
        out[f"{col}_std"] = float(vals.std()) if len(vals) else None
    return out


ALL_METRICS = ("validity", "descriptors", "diversity", "ffd", "fcd")


def run_report(
    reference: Sequence[DatasetRecord],
    sets: dict[str, Sequence[DatasetRecord]],
    model: ChemNetModel | None = None,
    metrics: Sequence[str] = ALL_METRICS,
    out: str | Path | None = None,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    reference_stats: GaussianStats | None = None,
    diversity_subset: int = 5000,
    diversity_repeats: int = 5,
    workers: int | None = None,
) -> MetricReport:
    """Evaluate each named set against the reference; the reference itself is row 0.

    Writes ``report.csv`` and ``report.json`` into ``out`` when given.
    Metrics that were not requested, or cannot be computed, are ``None``.
    """
    metrics = set(metrics)
    if "fcd" in metrics and model is None:
        raise ValueError("fcd requested but no model given")
    columns = [c for c in DESCRIPTOR_COLUMNS if any(c in r.descriptors for r in reference)]
    named = {"reference": list(reference), **{k: list(v) for k, v in sets.items()}}
    for name, recs in named.items():
        if not recs:
            raise HarnessError(f"set {name!r} is empty")

    ref_valid = [r.smiles for r in named["reference"] if check_validity(r.smiles).valid]
    ffd_ref = fingerprint_stats(fingerprints_of(ref_valid)) if "ffd" in metrics else None
    if "fcd" in metrics and reference_stats is None:
        reference_stats = embedding_stats(model, ref_valid, workers)

    rows = []
    for si, (name, recs) in enumerate(named.items()):
        valid = [r.smiles for r in recs if check_validity(r.smiles).valid]
        row: dict = {"set": name, "n": len(recs)}
        row["validity"] = len(valid) / len(recs) if "validity" in metrics else None
        if "descriptors" in metrics:
            row.update(_descriptor_summary(recs, columns))
        fps = fingerprints_of(valid) if ({"diversity", "ffd"} & metrics) and valid else None
        row["internal_diversity"] = (
            internal_diversity(fps, diversity_subset, diversity_repeats, seed) if "diversity" in metrics and fps else None
        )
        enough = len(valid) >= 2
        row["ffd"] = fingerprint_distance(fingerprint_stats(fps), ffd_ref, eps) if ffd_ref is not None and enough else None
        row["fcd"] = (
            frechet_distance(embedding_stats(model, valid, workers), reference_stats, eps)
            if "fcd" in metrics and enough
            else None
        )
        rows.append(row)
    report = MetricReport(
        rows,
        {
            "seed": seed,
            "eps": eps,
            "reference_stats_id": reference_stats.meta.get("id") if reference_stats is not None else None,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        },
    )
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        report.to_csv(out / "report.csv")
        report.to_json(out / "report.json")
    return report
