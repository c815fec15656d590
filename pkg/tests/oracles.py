"""Reference implementations used only by the tests.

They deliberately take different routes from the library: the Fréchet
oracle works in 40-digit arithmetic through Cholesky factors, and the
network oracles are plain Python loops over float64 values.
"""

import itertools
import math
from fractions import Fraction

import mpmath as mp
import numpy as np

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772


def frechet_oracle(m1, c1, m2, c2, dps: int = 40) -> float:
    """||m1 - m2||^2 + Tr C1 + Tr C2 - 2 * nuclear_norm(L1^T L2), with C = L L^T.

    The nuclear norm of L1^T L2 equals Tr((C1 C2)^{1/2}); it is obtained
    from the eigenvalues of (L1^T L2)^T (L1^T L2) in extended precision.
    """
    with mp.workdps(dps):
        a = mp.matrix(np.asarray(c1, dtype=float).tolist())
        b = mp.matrix(np.asarray(c2, dtype=float).tolist())
        d = a.rows
        l1, l2 = mp.cholesky(a), mp.cholesky(b)
        m = l1.T * l2
        ev = mp.eigsy(m.T * m, eigvals_only=True)
        nuclear = mp.fsum(mp.sqrt(max(e, 0)) for e in ev)
        diff = mp.fsum((mp.mpf(float(x)) - mp.mpf(float(y))) ** 2 for x, y in zip(m1, m2))
        trace = mp.fsum(a[i, i] + b[i, i] for i in range(d))
        return float(diff + trace - 2 * nuclear)


def brute_diversity(fps) -> Fraction:
    """Exact mean Tanimoto distance over all unordered pairs, via Python sets."""
    pairs = list(itertools.combinations(fps, 2))
    total = Fraction(0)
    for a, b in pairs:
        sa, sb = set(a.on_bits), set(b.on_bits)
        union = len(sa | sb)
        total += 1 - (Fraction(len(sa & sb), union) if union else 1)
    return total / len(pairs)


def selu_loop(x: float) -> float:
    return SELU_LAMBDA * x if x > 0 else SELU_LAMBDA * SELU_ALPHA * (math.exp(x) - 1)


def sigmoid_loop(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def conv1d_loop(x, kernel, bias):
    """'Same' zero padding, stride 1: out[t][o] = b[o] + sum x[t+k-K//2][i] w[k][i][o]."""
    t_len, cin = len(x), len(x[0])
    k_len, _, cout = kernel.shape
    out = [[0.0] * cout for _ in range(t_len)]
    for t in range(t_len):
        for o in range(cout):
            acc = float(bias[o])
            for k in range(k_len):
                src = t + k - k_len // 2
                if 0 <= src < t_len:
                    for i in range(cin):
                        acc += float(x[src][i]) * float(kernel[k, i, o])
            out[t][o] = acc
    return out


def maxpool_loop(x, window, stride):
    n_out = (len(x) - window) // stride + 1
    return [
        [max(x[s * stride + j][c] for j in range(window)) for c in range(len(x[0]))]
        for s in range(n_out)
    ]


def lstm_loop(xs, kernel, recurrent, bias):
    """Full sequence; gate blocks ordered input, forget, cell, output. Returns all h."""
    units = recurrent.shape[0]
    h = [0.0] * units
    c = [0.0] * units
    hs = []
    for x in xs:
        z = []
        for j in range(4 * units):
            acc = float(bias[j])
            for i, xi in enumerate(x):
                acc += float(xi) * float(kernel[i, j])
            for i, hi in enumerate(h):
                acc += hi * float(recurrent[i, j])
            z.append(acc)
        new_c, new_h = [], []
        for u in range(units):
            ig = sigmoid_loop(z[u])
            fg = sigmoid_loop(z[units + u])
            gg = math.tanh(z[2 * units + u])
            og = sigmoid_loop(z[3 * units + u])
            cu = fg * c[u] + ig * gg
            new_c.append(cu)
            new_h.append(og * math.tanh(cu))
        h, c = new_h, new_c
        hs.append(h)
    return hs


def dense_loop(x, kernel, bias):
    return [float(bias[o]) + sum(float(x[i]) * float(kernel[i, o]) for i in range(len(x))) for o in range(len(bias))]


def embed_loop(model, rows):
    """Embedding of one molecule given its unpadded ``(L, vocab)`` rows."""
    w = {k: v.astype(np.float64) for k, v in model.weights.items()}
    arch = model.arch
    x = [list(map(float, r)) for r in rows]
    x = [[selu_loop(v) for v in r] for r in conv1d_loop(x, w["conv1.kernel"], w["conv1.bias"])]
    x = [[selu_loop(v) for v in r] for r in conv1d_loop(x, w["conv2.kernel"], w["conv2.bias"])]
    x = maxpool_loop(x, arch.pool_window, arch.pool_stride)
    h1 = lstm_loop(x, w["lstm1.kernel"], w["lstm1.recurrent"], w["lstm1.bias"])
    h2 = lstm_loop(h1, w["lstm2.kernel"], w["lstm2.recurrent"], w["lstm2.bias"])
    return np.array(h2[-1])


def splitmix64_loop(seed: int, count: int) -> list[int]:
    """Vigna's splitmix64, transcribed from the reference C code."""
    mask = 2**64 - 1
    x = seed & mask
    out = []
    for _ in range(count):
        x = (x + 0x9E3779B97F4A7C15) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out
