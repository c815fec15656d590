"""Walk a few SMILES strings through the parser, writer and fingerprinter.

    python3 demos/parse_and_fingerprint.py "CC(=O)Oc1ccccc1C(=O)O" "C1CC"
"""

import argparse

from molmetric.fingerprint import morgan_fingerprint, tanimoto
from molmetric.smiles import check_validity, parse_smiles, tokenize, write_smiles

DEFAULTS = ["CC(=O)Oc1ccccc1C(=O)O", "OC(=O)c1ccccc1O", "C1CC", "C=O=C", "[NH4+].[Cl-]"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("smiles", nargs="*", default=DEFAULTS)
    args = ap.parse_args()

    fps = {}
    for s in args.smiles:
        print(s)
        print("  tokens:", " ".join(t.text for t in tokenize(s)))
        v = check_validity(s)
        if not v.valid:
            print("  invalid:", v.reason)
            continue
        mol = parse_smiles(s)
        fp = morgan_fingerprint(mol)
        fps[s] = fp
        print(f"  atoms {len(mol.atoms)}, bonds {len(mol.bonds)}, canonical {write_smiles(mol)}")
        print(f"  fingerprint: {fp.popcount()} of {fp.nbits} bits set")

    names = list(fps)
    if len(names) > 1:
        print("\npairwise Tanimoto similarity")
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                print(f"  {tanimoto(fps[a], fps[b]):.3f}  {a}  {b}")


if __name__ == "__main__":
    main()
