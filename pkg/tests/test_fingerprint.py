import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molmetric.fingerprint import (
    Fingerprint,
    WidthMismatch,
    fnv1a_64,
    internal_diversity,
    mean_pairwise_similarity,
    morgan_fingerprint,
    single_linkage_clusters,
    tanimoto,
)
from molmetric.smiles import parse_smiles
from oracles import brute_diversity


def fnv_oracle(values):
    """Byte-by-byte FNV-1a written from the published constants."""
    h = 14695981039346656037
    for v in values:
        for k in range(8):
            h ^= ((v % 2**64) >> (8 * k)) & 0xFF
            h = (h * 1099511628211) % 2**64
    return h


def random_fps(rng, n, nbits=64, density=0.2):
    return [Fingerprint.from_array(rng.random(nbits) < density) for _ in range(n)]


def bfs_components(fps, cutoff):
    n = len(fps)
    adj = [[j for j in range(n) if j != i and tanimoto(fps[i], fps[j]) >= cutoff] for i in range(n)]
    comp = [-1] * n
    label = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = label
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = label
                    queue.append(v)
        label += 1
    return comp


def same_partition(a, b):
    return len(set(zip(a, b))) == len(set(a)) == len(set(b))


# --- hashing ----------------------------------------------------------------


def test_fnv_offset_basis_for_empty_input():
    assert fnv1a_64([]) == 0xCBF29CE484222325


@given(st.lists(st.integers(min_value=-(2**63), max_value=2**64 - 1), max_size=8))
def test_fnv_matches_bytewise_oracle(values):
    assert fnv1a_64(values) == fnv_oracle(values)


# --- fingerprints -----------------------------------------------------------


def test_methane_radius_zero_sets_one_bit():
    assert morgan_fingerprint(parse_smiles("C"), radius=0).popcount() == 1


def test_ethane_bits_bounded_by_radius():
    for radius in range(4):
        assert morgan_fingerprint(parse_smiles("CC"), radius=radius).popcount() <= radius + 1


def test_ethanol_all_atom_orders():
    ref = morgan_fingerprint(parse_smiles("OCC"))
    mol = parse_smiles("OCC")
    for perm in itertools.permutations(range(3)):
        assert morgan_fingerprint(mol.permuted(list(perm))) == ref
    for text in ["CCO", "C(C)O", "C(O)C", "OCC"]:
        assert morgan_fingerprint(parse_smiles(text)) == ref


def test_fingerprint_width_and_nonempty():
    fp = morgan_fingerprint(parse_smiles("c1ccccc1O"), nbits=1024)
    assert fp.nbits == 1024 and fp.popcount() >= 1 and max(fp.on_bits) < 1024


def test_radius_zero_bit_follows_documented_hash():
    # methane: Z=6, degree 0, 4 H, charge 0, not aromatic, not in a ring
    fp = morgan_fingerprint(parse_smiles("C"), radius=0)
    assert fp.on_bits == (fnv_oracle([6, 0, 4, 0, 0, 0]) % 2048,)


def test_fingerprint_rejects_bad_width():
    with pytest.raises(ValueError):
        morgan_fingerprint(parse_smiles("C"), nbits=1000)


def test_to_array_round_trip():
    fp = morgan_fingerprint(parse_smiles("CC(=O)O"))
    assert Fingerprint.from_array(fp.to_array()) == fp


# --- Tanimoto ---------------------------------------------------------------


def test_tanimoto_examples():
    x = Fingerprint((1, 5, 9), 16)
    assert tanimoto(x, x) == 1.0
    assert tanimoto(Fingerprint((0, 1), 16), Fingerprint((2, 3), 16)) == 0.0
    a = Fingerprint(tuple(range(0, 9)), 32)  # 9 bits
    b = Fingerprint(tuple(range(5, 14)), 32)  # 9 bits, 4 shared, union 14
    assert tanimoto(a, b) == 2 / 7
    assert tanimoto(Fingerprint((), 8), Fingerprint((), 8)) == 1.0


def test_tanimoto_width_mismatch():
    with pytest.raises(WidthMismatch):
        tanimoto(Fingerprint((1,), 8), Fingerprint((1,), 16))


@given(st.sets(st.integers(0, 31)), st.sets(st.integers(0, 31)))
def test_tanimoto_symmetric_and_bounded(a, b):
    fa, fb = Fingerprint(tuple(sorted(a)), 32), Fingerprint(tuple(sorted(b)), 32)
    assert tanimoto(fa, fb) == tanimoto(fb, fa)
    assert 0.0 <= tanimoto(fa, fb) <= 1.0


# --- internal diversity -----------------------------------------------------


def test_diversity_identical_and_disjoint():
    same = [Fingerprint((1, 2, 3), 8)] * 10
    assert internal_diversity(same) == 0.0
    assert internal_diversity([Fingerprint((0,), 8), Fingerprint((1,), 8)]) == 1.0
    assert internal_diversity([Fingerprint((0,), 8)]) == 0.0


@pytest.mark.parametrize("n", [2, 3, 17, 100, 200])
def test_diversity_matches_all_pairs_oracle_exactly(n):
    fps = random_fps(np.random.default_rng(n), n)
    fps.append(Fingerprint((), 64))  # exercises the empty/empty convention
    fps.append(Fingerprint((), 64))
    exact = brute_diversity(fps)
    assert 1 - mean_pairwise_similarity(fps) == exact
    assert internal_diversity(fps, subset_size=len(fps), repeats=1) == float(exact)


def test_diversity_block_size_does_not_change_result():
    fps = random_fps(np.random.default_rng(5), 150)
    assert mean_pairwise_similarity(fps, block=7) == mean_pairwise_similarity(fps, block=1024)


def test_diversity_subsets_are_seeded():
    fps = random_fps(np.random.default_rng(9), 60)
    a = internal_diversity(fps, subset_size=20, repeats=3, seed=4)
    assert a == internal_diversity(fps, subset_size=20, repeats=3, seed=4)
    assert a != internal_diversity(fps, subset_size=20, repeats=3, seed=5)


# --- clustering -------------------------------------------------------------


def test_cluster_examples():
    same = [Fingerprint((1, 2), 8)] * 5
    assert single_linkage_clusters(same).n_clusters == 1
    disjoint = [Fingerprint((i,), 8) for i in range(8)]
    assert single_linkage_clusters(disjoint).n_clusters == 8
    # a~b and b~c at exactly 0.7, a~c at 5/11: linked only through b
    a = Fingerprint(tuple(range(0, 8)), 64)
    b = Fingerprint(tuple(range(1, 10)), 64)
    c = Fingerprint(tuple(range(3, 11)), 64)
    assert (tanimoto(a, b), tanimoto(b, c), tanimoto(a, c)) == (0.7, 0.7, 5 / 11)
    chain = single_linkage_clusters([a, b, c], cutoff=0.65)
    assert single_linkage_clusters([a, c], cutoff=0.65).n_clusters == 2
    assert chain.labels.tolist() == [0, 0, 0]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 200), st.floats(0.1, 1.0), st.integers(0, 2**32 - 1))
def test_clusters_match_bfs_oracle(n, cutoff, seed):
    rng = np.random.default_rng(seed)
    fps = random_fps(rng, n, nbits=24, density=0.3)
    got = single_linkage_clusters(fps, cutoff, block=37)
    assert same_partition(got.labels.tolist(), bfs_components(fps, cutoff))


def test_labels_numbered_by_first_appearance():
    fps = [Fingerprint((5,), 8), Fingerprint((1,), 8), Fingerprint((5,), 8), Fingerprint((2,), 8)]
    assert single_linkage_clusters(fps).labels.tolist() == [0, 1, 0, 2]


def test_clusters_independent_of_input_order():
    rng = np.random.default_rng(11)
    fps = random_fps(rng, 120, nbits=32, density=0.3)
    perm = rng.permutation(len(fps))
    base = single_linkage_clusters(fps, 0.4).labels
    moved = single_linkage_clusters([fps[i] for i in perm], 0.4).labels
    assert same_partition(base[perm].tolist(), moved.tolist())


def test_lower_cutoff_never_adds_clusters():
    fps = random_fps(np.random.default_rng(2), 150, nbits=32, density=0.3)
    counts = [single_linkage_clusters(fps, c).n_clusters for c in (0.9, 0.7, 0.5, 0.3, 0.1)]
    assert counts == sorted(counts, reverse=True)
