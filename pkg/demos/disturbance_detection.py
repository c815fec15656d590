"""Score each disturbed subset of the bundled corpus against the full corpus.

A random subset of the same size is scored too, so every row can be read
as "how much further from the reference than chance". With seeded ChemNet
weights the absolute FCD values are small; only the ratios are meaningful.

    python3 demos/disturbance_detection.py -n 1000 --seeds 3
"""

import argparse
import os

import numpy as np

from molmetric.chemnet import embed_smiles, seeded_init
from molmetric.fingerprint import internal_diversity
from molmetric.frechet import estimate_stats, frechet_distance
from molmetric.harness import (
    DISTURBANCES,
    disturbed_set,
    fingerprint_distance,
    fingerprint_stats,
    fingerprints_of,
    load_bundled_corpus,
    random_subset,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=1000, help="molecules per set")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--model-seed", type=int, default=0)
    args = ap.parse_args()

    corpus = load_bundled_corpus()
    print(f"corpus: {len(corpus)} molecules")
    index = {r.smiles: i for i, r in enumerate(corpus)}
    fps = fingerprints_of(corpus.smiles)
    model = seeded_init(seed=args.model_seed)
    emb = embed_smiles(model, corpus.smiles, workers=min(8, os.cpu_count() or 1))
    fcd_ref, ffd_ref = estimate_stats(emb), fingerprint_stats(fps)

    def scores(records):
        rows = np.sort([index[r.smiles] for r in records])
        subset = [fps[i] for i in rows]
        return (
            frechet_distance(estimate_stats(emb[rows]), fcd_ref),
            fingerprint_distance(fingerprint_stats(subset), ffd_ref),
            internal_diversity(subset),
        )

    sets = {"random": lambda s: random_subset(corpus, args.n, seed=s)}
    for kind in DISTURBANCES:
        sets[kind] = lambda s, kind=kind: disturbed_set(kind, corpus, args.n, seed=s, fps=fps)

    results = {name: np.mean([scores(make(s)) for s in range(args.seeds)], axis=0) for name, make in sets.items()}
    chance = results["random"]
    print(f"\n{'set':<14}{'FCD':>12}{'xrandom':>9}{'FFD':>10}{'xrandom':>9}{'IntDiv':>9}")
    for name, (fcd, ffd, div) in results.items():
        print(f"{name:<14}{fcd:>12.3g}{fcd / chance[0]:>9.1f}{ffd:>10.2f}{ffd / chance[1]:>9.1f}{div:>9.3f}")


if __name__ == "__main__":
    main()
