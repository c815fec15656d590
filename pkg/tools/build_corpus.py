"""Rebuild the bundled desk-scale corpus (src/molmetric/data/corpus.csv).

This is a one-off maintenance script, not part of the library. It needs
RDKit (descriptors only) and the MOSES data files shipped in the
``molsets`` wheel:

    pip download molsets --no-deps -d /tmp/moses
    python tools/build_corpus.py /tmp/moses/molsets-0.3.1-py3-none-any.whl

Composition:
  * 22,500 molecules drawn at random from the MOSES test split;
  * one analog series of 1,500 molecules from the MOSES train split:
    breadth-first expansion over RDKit Morgan (radius 2, 2048 bits)
    neighbors with Tanimoto >= 0.6 around a seed gives up to 4,000
    candidates, of which a connected piece of one molmetric
    single-linkage cluster (cutoff 0.65) is kept. Real compound
    collections contain such series; a purely random ZINC draw of this
    size has no single-linkage cluster beyond a handful of members.

Columns: smiles, logp (Crippen), qed, sa_score (Ertl SA score from RDKit
Contrib), activity (1.0 if the molecule contains an aromatic pyrimidine
ring, else 0.0: a synthetic target-class label, not a measured assay).
"""

from __future__ import annotations

import argparse
import csv
import gzip
import io
import os
import random
import sys
import zipfile

import numpy as np
from rdkit import Chem, DataStructs, RDLogger
from rdkit.Chem import QED, Crippen, RDConfig, rdFingerprintGenerator

sys.path.append(os.path.join(RDConfig.RDContribDir, "SA_Score"))
import sascorer  # noqa: E402

from molmetric.fingerprint import fingerprint_matrix, single_linkage_clusters  # noqa: E402
from molmetric.harness import fingerprints_of  # noqa: E402
from molmetric.smiles import check_validity  # noqa: E402

RDLogger.DisableLog("rdApp.*")

N_RANDOM = 22_500
N_SERIES = 1_500
N_CANDIDATES = 4_000
EXPAND_CUTOFF = 0.6
SERIES_CUTOFF = 0.65
ACTIVE_MOTIF = Chem.MolFromSmarts("c1ncncc1")


def read_split(wheel: zipfile.ZipFile, name: str) -> list[str]:
    raw = wheel.read(f"moses/dataset/data/{name}.csv.gz")
    with gzip.open(io.BytesIO(raw), "rt") as fh:
        rows = list(csv.reader(fh))
    col = rows[0].index("SMILES")
    return [r[col] for r in rows[1:]]


def analog_series(pool: list[str], fpgen, rng: random.Random) -> list[str]:
    fps = [fpgen.GetFingerprint(Chem.MolFromSmiles(s)) for s in pool]
    # Seed: the molecule with most close neighbors among a few hundred probes.
    probes = rng.sample(range(len(pool)), 300)
    best = max(
        probes,
        key=lambda i: sum(x >= EXPAND_CUTOFF for x in DataStructs.BulkTanimotoSimilarity(fps[i], fps)),
    )
    # Candidate neighborhood by breadth-first expansion under RDKit similarity.
    taken = {best}
    frontier = [best]
    while frontier and len(taken) < N_CANDIDATES:
        i = frontier.pop(0)
        sims = np.array(DataStructs.BulkTanimotoSimilarity(fps[i], fps))
        for j in np.argsort(-sims):
            if sims[j] < EXPAND_CUTOFF or len(taken) >= N_CANDIDATES:
                break
            if int(j) not in taken:
                taken.add(int(j))
                frontier.append(int(j))
    candidates = [pool[i] for i in sorted(taken) if check_validity(pool[i]).valid]

    # Keep a connected piece of the package's own single-linkage graph.
    ours = fingerprints_of(candidates)
    dense = fingerprint_matrix(ours, dtype=np.float64)
    inter = dense @ dense.T
    pop = dense.sum(axis=1)
    linked = inter / (pop[:, None] + pop[None, :] - inter) >= SERIES_CUTOFF
    labels = single_linkage_clusters(ours, SERIES_CUTOFF).labels
    root = int(np.flatnonzero(labels == np.bincount(labels).argmax())[0])
    order, seen = [root], {root}
    for u in order:
        for v in np.flatnonzero(linked[u]):
            if int(v) not in seen and len(order) < N_SERIES:
                seen.add(int(v))
                order.append(int(v))
    return [candidates[i] for i in sorted(order)]


def describe(smiles: str) -> dict:
    mol = Chem.MolFromSmiles(smiles)
    return {
        "smiles": smiles,
        "logp": round(Crippen.MolLogP(mol), 4),
        "qed": round(QED.qed(mol), 4),
        "sa_score": round(sascorer.calculateScore(mol), 4),
        "activity": 1.0 if mol.HasSubstructMatch(ACTIVE_MOTIF) else 0.0,
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("wheel")
    ap.add_argument("--out", default="src/molmetric/data/corpus.csv")
    ap.add_argument("--seed", type=int, default=20180326)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    wheel = zipfile.ZipFile(args.wheel)
    test = read_split(wheel, "test")
    train = read_split(wheel, "train")
    fpgen = rdFingerprintGenerator.GetMorganGenerator(radius=2, fpSize=2048)

    picked = rng.sample(test, N_RANDOM)
    series = analog_series(train, fpgen, rng)
    print(f"series: {len(series)} molecules", file=sys.stderr)

    seen = set()
    smiles = []
    for s in picked + series:
        if s not in seen and check_validity(s).valid:
            seen.add(s)
            smiles.append(s)
    rng.shuffle(smiles)
    rows = [describe(s) for s in smiles]
    os.makedirs(os.path.dirname(args.out), exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["smiles", "logp", "qed", "sa_score", "activity"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
