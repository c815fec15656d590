"""How the FCD of a real subset shrinks as the subset grows.

Every subset is drawn from the same corpus it is compared with, so the
distance it reports is pure finite-sample bias. Scores computed from a
few hundred molecules are therefore not comparable with scores computed
from thousands.

    python3 demos/sample_size.py --sizes 5,50,500,5000 --repeats 5
"""

import argparse
import os

from molmetric.chemnet import embed_smiles, seeded_init
from molmetric.harness import convergence_experiment, load_bundled_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="5,50,500,5000")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    corpus = load_bundled_corpus()
    model = seeded_init(seed=0)
    emb = embed_smiles(model, corpus.smiles, workers=min(8, os.cpu_count() or 1))
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = convergence_experiment(emb, sizes=sizes, repeats=args.repeats, seed=args.seed)

    print(f"{'size':>7}  {'mean FCD':>11}  {'std':>9}  relative to smallest")
    for row in rows:
        print(f"{row.size:>7}  {row.mean:>11.4g}  {row.std:>9.2g}  {row.mean / rows[0].mean:.4f}")


if __name__ == "__main__":
    main()
