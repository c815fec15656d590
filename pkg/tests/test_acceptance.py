"""End-to-end acceptance checks at desk scale.

Each test prints one line of the form ``[criterion N] PASS|FAIL <title>: <detail>``
(visible in ``pytest -v`` output) and then asserts the same condition.
"""

import os
import time
import tracemalloc

import numpy as np
import pytest

from conftest import random_psd
from molmetric.chemnet import (
    LSTMWeights,
    conv1d_forward,
    dense_forward,
    embed,
    embed_smiles,
    lstm_step,
    maxpool1d,
    selu,
    smiles_rows,
)
from molmetric.fingerprint import internal_diversity, morgan_fingerprint
from molmetric.frechet import GaussianStats, estimate_stats, frechet_distance
from molmetric.harness import (
    DISTURBANCES,
    convergence_experiment,
    disturbed_set,
    fingerprint_distance,
    fingerprint_stats,
    mode_collapse_sample,
    random_cno_baseline,
    random_subset,
    score_generator,
)
from molmetric.smiles import check_validity, one_hot_encode, parse_smiles, tokenize, write_smiles
from oracles import (
    brute_diversity,
    conv1d_loop,
    dense_loop,
    embed_loop,
    frechet_oracle,
    lstm_loop,
    maxpool_loop,
    selu_loop,
)
from test_smiles import isomorphic

N_DISTURBED = 1000
SEEDS = range(5)


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def timed_embeddings(corpus, seeded_model):
    """Seeded-model corpus embeddings (row-aligned) and the seconds they took."""
    start = time.perf_counter()
    emb = embed_smiles(seeded_model, corpus.smiles, workers=min(8, os.cpu_count() or 1))
    return emb, time.perf_counter() - start


@pytest.fixture(scope="module")
def corpus_index(corpus):
    return {r.smiles: i for i, r in enumerate(corpus)}


def rows_of(records, index):
    return np.array([index[r.smiles] for r in records])


# --- 1 ----------------------------------------------------------------------


def test_criterion_1_distance_against_high_precision_oracle(verdict):
    worst_err = worst_asym = worst_self = 0.0
    negatives = 0
    elapsed = 0.0
    for d in (1, 2, 8, 16, 64):
        for k in range(40):
            rng = np.random.default_rng([d, k])
            m1, m2 = rng.normal(size=d), rng.normal(size=d)
            c1, c2 = random_psd(rng, d), random_psd(rng, d)
            a, b, a_again = GaussianStats(m1, c1, 100), GaussianStats(m2, c2, 100), GaussianStats(m1, c1, 100)
            start = time.perf_counter()
            ab, ba, aa = frechet_distance(a, b), frechet_distance(b, a), frechet_distance(a, a_again)
            elapsed += time.perf_counter() - start
            worst_err = max(worst_err, abs(ab - frechet_oracle(m1, c1, m2, c2)))
            worst_asym = max(worst_asym, abs(ab - ba))
            worst_self = max(worst_self, aa)
            negatives += min(ab, ba, aa) < 0
    ok = worst_err <= 1e-8 and worst_asym == 0 and negatives == 0 and worst_self <= 1e-10 and elapsed < 30
    detail = (
        f"200 pairs, max |err| {worst_err:.2e}, max asymmetry {worst_asym:.1e}, "
        f"{negatives} negative, max self-distance {worst_self:.1e}, library time {elapsed:.2f}s"
    )
    verdict(1, "distance correctness", ok, detail)


# --- 2 ----------------------------------------------------------------------


def test_criterion_2_fcd_decreases_with_sample_size(timed_embeddings, verdict):
    emb, embed_seconds = timed_embeddings
    start = time.perf_counter()
    rows = convergence_experiment(emb, sizes=(5, 50, 500, 5000), repeats=5, seed=0)
    seconds = embed_seconds + time.perf_counter() - start
    means = [r.mean for r in rows]
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    ratio = means[3] / means[1]
    ok = len(rows) == 4 and decreasing and ratio < 0.05 and seconds < 600
    table = ", ".join(f"{r.size}: {r.mean:.3g}±{r.std:.2g}" for r in rows)
    verdict(2, "sample-size convergence", ok, f"{table}; 5000/50 ratio {ratio:.4f}; {seconds:.0f}s")


# --- 3 ----------------------------------------------------------------------


def test_criterion_3_disturbances_are_detected(corpus, corpus_fps, corpus_index, timed_embeddings, verdict):
    emb, _ = timed_embeddings
    fcd_ref = estimate_stats(emb)
    ffd_ref = fingerprint_stats(corpus_fps)

    def distances(records):
        rows = rows_of(records, corpus_index)
        fcd = frechet_distance(estimate_stats(emb[np.sort(rows)]), fcd_ref)
        ffd = fingerprint_distance(fingerprint_stats([corpus_fps[i] for i in rows]), ffd_ref)
        return fcd, ffd

    baseline = np.mean([distances(random_subset(corpus, N_DISTURBED, seed=s)) for s in SEEDS], axis=0)
    worst = np.inf
    parts = []
    for kind in DISTURBANCES:
        values = np.mean(
            [distances(disturbed_set(kind, corpus, N_DISTURBED, seed=s, fps=corpus_fps)) for s in SEEDS], axis=0
        )
        fcd_factor, ffd_factor = values / baseline
        worst = min(worst, fcd_factor, ffd_factor)
        parts.append(f"{kind} FCD x{fcd_factor:.1f} FFD x{ffd_factor:.1f}")
    verdict(3, "disturbance detection", worst >= 2, f"{'; '.join(parts)}; smallest factor {worst:.2f}")


# --- 4 ----------------------------------------------------------------------


def test_criterion_4_mode_collapse_lowers_diversity(corpus, corpus_fps, corpus_index, verdict):
    lower = 0
    gaps = []
    for s in SEEDS:
        collapsed = rows_of(mode_collapse_sample(corpus, n=N_DISTURBED, seed=s, fps=corpus_fps), corpus_index)
        reference = rows_of(random_subset(corpus, N_DISTURBED, seed=s), corpus_index)
        div_c = internal_diversity([corpus_fps[i] for i in collapsed])
        div_r = internal_diversity([corpus_fps[i] for i in reference])
        lower += div_c < div_r
        gaps.append(f"{div_c:.3f}<{div_r:.3f}")
    exact = 0
    sizes = (2, 3, 50, 120, 200)
    for n in sizes:
        fps = [corpus_fps[i] for i in np.random.default_rng(n).choice(len(corpus_fps), size=n, replace=False)]
        exact += internal_diversity(fps, subset_size=n, repeats=1) == float(brute_diversity(fps))
    ok = lower == 5 and exact == len(sizes)
    verdict(4, "mode-collapse diversity", ok, f"lower on {lower}/5 seeds ({', '.join(gaps)}); exact {exact}/{len(sizes)}")


# --- 5 ----------------------------------------------------------------------


def test_criterion_5_random_baseline_scores_worst(corpus, corpus_index, timed_embeddings, seeded_model, verdict):
    emb, _ = timed_embeddings
    wins = 0
    pairs = []
    for s in SEEDS:
        held_out = random_subset(corpus, N_DISTURBED, seed=s)
        keep = np.ones(len(corpus), dtype=bool)
        keep[rows_of(held_out, corpus_index)] = False
        reference = estimate_stats(emb[keep])
        real = score_generator([r.smiles for r in held_out], reference, seeded_model, N_DISTURBED, 1, seed=s)
        base = score_generator(random_cno_baseline(N_DISTURBED, seed=s), reference, seeded_model, N_DISTURBED, 1, seed=s)
        wins += base.mean > real.mean
        pairs.append(f"{base.mean:.3g}>{real.mean:.3g}")
    verdict(5, "baseline ranking", wins == 5, f"baseline above held-out on {wins}/5 seeds ({', '.join(pairs)})")


# --- 6 ----------------------------------------------------------------------

# bytes that SMILES text is made of, so part of the fuzz reaches deep parser states
SMILES_BYTES = np.frombuffer(b"CNOSPFIBrlcnosp()[]=#$:/\\.@+-%0123456789H*", dtype=np.uint8)


def random_byte_strings(count: int, seed: int):
    rng = np.random.default_rng(seed)
    lengths = rng.integers(0, 64, size=count)
    for i, n in enumerate(lengths):
        raw = rng.integers(0, 256, size=n, dtype=np.uint8) if i % 2 else rng.choice(SMILES_BYTES, size=n)
        yield raw.tobytes()


def test_criterion_6_smiles_layer(corpus, verdict):
    start = time.perf_counter()
    smiles = corpus.smiles
    concat = sum("".join(t.text for t in tokenize(s)) == s for s in smiles)
    iso = 0
    for s in smiles:
        mol = parse_smiles(s)
        iso += isomorphic(mol, parse_smiles(write_smiles(mol)))
    panics = 0
    valid = 0
    for raw in random_byte_strings(10**6, seed=6):
        try:
            valid += check_validity(raw.decode("latin-1")).valid
        except Exception:
            panics += 1
    seconds = time.perf_counter() - start
    n = len(smiles)
    ok = concat == n and iso == n and panics == 0 and seconds < 120
    detail = (
        f"tokenize identity {concat}/{n}, round-trip isomorphic {iso}/{n}, "
        f"fuzz 10^6 strings with {panics} exceptions ({valid} valid), {seconds:.0f}s"
    )
    verdict(6, "SMILES layer", ok, detail)


# --- 7 ----------------------------------------------------------------------


def test_criterion_7_fingerprints_ignore_atom_order(corpus, verdict):
    rng = np.random.default_rng(7)
    picks = rng.choice(len(corpus), size=500, replace=False)
    identical = 0
    for i in picks:
        mol = parse_smiles(corpus[i].smiles)
        fp = morgan_fingerprint(mol)
        n = len(mol.atoms)
        identical += all(morgan_fingerprint(mol.permuted(list(rng.permutation(n)))) == fp for _ in range(50))
    verdict(7, "fingerprint permutation invariance", identical == 500, f"{identical}/500 molecules x 50 permutations")


# --- 8 ----------------------------------------------------------------------


def test_criterion_8_chemnet_numerics(small_model, verdict):
    rng = np.random.default_rng(8)
    errors = {}
    x = rng.normal(size=(11, 4))
    errors["selu"] = np.abs(selu(x.ravel() * 3) - [selu_loop(v) for v in x.ravel() * 3]).max()
    kern, bias = rng.normal(size=(5, 4, 3)), rng.normal(size=3)
    errors["conv"] = np.abs(conv1d_forward(x, kern, bias) - conv1d_loop(x, kern, bias)).max()
    errors["maxpool"] = np.abs(maxpool1d(x, 3, 2) - maxpool_loop(x.tolist(), 3, 2)).max()
    units = 5
    w = LSTMWeights(rng.normal(size=(4, 4 * units)), rng.normal(size=(units, 4 * units)), rng.normal(size=4 * units))
    h, c, hs = np.zeros(units), np.zeros(units), []
    for row in x:
        h, c = lstm_step(row, h, c, w)
        hs.append(h)
    errors["lstm"] = np.abs(np.array(hs) - lstm_loop(x, w.kernel, w.recurrent, w.bias)).max()
    dk, db = rng.normal(size=(4, 6)), rng.normal(size=6)
    errors["dense"] = np.abs(dense_forward(x[0], dk, db) - dense_loop(x[0], dk, db)).max()
    molecules = ["CCO", "c1ccccc1", "CC(=O)Nc1ccc(O)cc1", "N#CC(Cl)Br", "O=C(O)C1CCCN1"]
    mats = [one_hot_encode(s) for s in molecules]
    full = embed(small_model, mats, dtype=np.float64)
    errors["network"] = max(
        np.abs(full[i] - embed_loop(small_model, smiles_rows(small_model, s, np.float64))).max()
        for i, s in enumerate(molecules)
    )
    layers_ok = all(e <= 1e-12 for e in errors.values())

    batch = [one_hot_encode(s) for s in molecules * 40]
    whole = embed(small_model, batch)
    split = np.concatenate([embed(small_model, batch[:7]), embed(small_model, batch[7:130]), embed(small_model, batch[130:])])
    singles = np.concatenate([embed(small_model, [m]) for m in batch])
    partition_ok = np.array_equal(whole, split) and np.array_equal(whole, singles)
    short = one_hot_encode("CC(=O)Nc1ccc(O)cc1", max_len=40)
    padded = np.vstack([short, np.zeros((60, short.shape[1]), dtype=short.dtype)])
    padding_ok = np.array_equal(embed(small_model, [short]), embed(small_model, [padded]))

    ok = layers_ok and partition_ok and padding_ok
    worst = ", ".join(f"{k} {v:.1e}" for k, v in errors.items())
    detail = f"max |err| {worst}; partition invariant {partition_ok}; padding invariant {padding_ok}"
    verdict(8, "ChemNet numerics", ok, detail)


# --- 9 ----------------------------------------------------------------------


def test_criterion_9_throughput_and_streaming_memory(corpus, seeded_model, verdict):
    n = 100_000
    smiles = (corpus.smiles * (n // len(corpus) + 1))[:n]
    workers = min(8, os.cpu_count() or 1)
    start = time.perf_counter()
    emb = embed_smiles(seeded_model, smiles, workers=workers)
    stats = estimate_stats(emb)
    seconds = time.perf_counter() - start

    d = stats.dim
    shard_rows = 1000
    shards = [emb[i : i + shard_rows].copy() for i in range(0, 20 * shard_rows, shard_rows)]
    tracemalloc.start()
    estimate_stats(iter(shards))
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    # one working copy of the current shard is allowed on top of the budget
    budget = 8 * (4 * d * d + 64 * d) + shards[0].nbytes
    ok = seconds < 300 and peak < budget
    detail = (
        f"{n} molecules embedded and summarized in {seconds:.0f}s with {workers} worker(s) on "
        f"{os.cpu_count()} core(s); streaming peak {peak / 2**20:.1f} MiB vs budget {budget / 2**20:.1f} MiB"
    )
    verdict(9, "throughput and streaming memory", ok, detail)
