"""Forward inference for a ChemNet-style SMILES encoder.

Layer stack: conv1d+SELU, conv1d+SELU, max-pool, LSTM, LSTM, dense. The
embedding of a molecule is the second LSTM's hidden state after its last
real time step; the dense head is stored but never evaluated by
:func:`embed`.

Sequence semantics: the rows of a token matrix up to and including the last
non-zero row (the END marker) form the sequence; trailing all-zero rows are
padding and are stripped. Each convolution zero-pads its own input at both
ends of that sequence, so appending padding never changes an embedding.

Batches are processed in fixed chunks of ``CHUNK`` molecules (short chunks
are topped up with dummy rows). BLAS kernels pick different code paths for
very small matrices, and a fixed chunk height keeps every molecule's result
independent of how the batch was split.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._rng import MASK64, uniform_array
from .smiles import DEFAULT_MAX_LEN, DEFAULT_VOCAB, END, encode_symbols

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772
CHUNK = 64

# Per-layer and per-tensor strides of the init stream seed; (seed, 0, 0)
# maps to the plain splitmix64 stream of ``seed``.
_LAYER_STRIDE = 0xD1B54A32D192ED03
_TENSOR_STRIDE = 0x8CB92BA72F3D8DD7


class ShapeMismatch(ValueError):
    pass


class NonFiniteActivation(FloatingPointError):
    pass


class MissingTensor(KeyError):
    pass


class CorruptFile(ValueError):
    pass


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


def selu(x):
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    with np.errstate(over="ignore"):
        neg = SELU_LAMBDA * SELU_ALPHA * np.expm1(np.minimum(x, 0))
    out = np.where(x > 0, SELU_LAMBDA * x, neg)
    return out if out.ndim else out.item()


def sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def conv1d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """'Same'-padded stride-1 convolution.

    ``x`` is ``(T, Cin)`` or ``(B, T, Cin)``; ``kernel`` is ``(K, Cin, Cout)``.
    ``out[t, o] = bias[o] + sum_{k,i} x[t + k - K//2, i] * kernel[k, i, o]``.
    """
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    if x.ndim != 3 or kernel.ndim != 3 or x.shape[2] != kernel.shape[1] or bias.shape != (kernel.shape[2],):
        raise ShapeMismatch(f"input {x.shape}, kernel {kernel.shape}, bias {bias.shape}")
    b, t, cin = x.shape
    k, _, cout = kernel.shape
    left = k // 2
    padded = np.zeros((b, t + k - 1, cin), dtype=x.dtype)
    padded[:, left : left + t] = x
    cols = np.stack([padded[:, j : j + t] for j in range(k)], axis=2)  # (B, T, K, Cin)
    out = cols.reshape(b * t, k * cin) @ kernel.reshape(k * cin, cout).astype(x.dtype)
    out = out.reshape(b, t, cout) + bias.astype(x.dtype)
    return out[0] if squeeze else out


def maxpool1d(x: np.ndarray, window: int, stride: int) -> np.ndarray:
    """Max over windows along the time axis (axis -2).

    Output length is ``(T - window) // stride + 1``.
    """
    if window < 1 or stride < 1:
        raise ShapeMismatch("window and stride must be >= 1")
    t = x.shape[-2]
    if t < window:
        raise ShapeMismatch(f"sequence length {t} shorter than window {window}")
    n_out = (t - window) // stride + 1
    out = x[..., 0 : (n_out - 1) * stride + 1 : stride, :]
    for j in range(1, window):
        out = np.maximum(out, x[..., j : j + (n_out - 1) * stride + 1 : stride, :])
    return out


@dataclass
class LSTMWeights:
    """Input kernel ``(in, 4H)``, recurrent kernel ``(H, 4H)``, bias ``(4H,)``.

    Gate blocks along the 4H axis are ordered input, forget, cell, output.
    """

    kernel: np.ndarray
    recurrent: np.ndarray
    bias: np.ndarray

    @property
    def units(self) -> int:
        return self.recurrent.shape[0]


def _lstm_gates(z: np.ndarray, c_prev: np.ndarray, units: int) -> tuple[np.ndarray, np.ndarray]:
    i = sigmoid(z[..., :units])
    f = sigmoid(z[..., units : 2 * units])
    g = np.tanh(z[..., 2 * units : 3 * units])
    o = sigmoid(z[..., 3 * units :])
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def lstm_step(x, h_prev, c_prev, weights: LSTMWeights) -> tuple[np.ndarray, np.ndarray]:
    """One LSTM time step; ``x`` may be ``(in,)`` or ``(B, in)``."""
    units = weights.units
    if (
        weights.kernel.shape[1] != 4 * units
        or weights.bias.shape != (4 * units,)
        or x.shape[-1] != weights.kernel.shape[0]
        or h_prev.shape[-1] != units
        or c_prev.shape != h_prev.shape
    ):
        raise ShapeMismatch("inconsistent LSTM shapes")
    dtype = np.result_type(x, np.float32)
    z = x @ weights.kernel.astype(dtype) + h_prev @ weights.recurrent.astype(dtype) + weights.bias.astype(dtype)
    return _lstm_gates(z, c_prev, units)


def dense_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.shape[-1] != kernel.shape[0] or bias.shape != (kernel.shape[1],):
        raise ShapeMismatch(f"input {x.shape}, kernel {kernel.shape}, bias {bias.shape}")
    return x @ kernel.astype(x.dtype) + bias.astype(x.dtype)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Architecture:
    """Layer sizes. The defaults are this package's choice; nothing is known
    about the sizes of the original network."""

    vocab_size: int = len(DEFAULT_VOCAB)
    max_len: int = DEFAULT_MAX_LEN
    conv1_filters: int = 32
    conv1_kernel: int = 9
    conv2_filters: int = 64
    conv2_kernel: int = 9
    pool_window: int = 2
    pool_stride: int = 2
    lstm1_units: int = 256
    lstm2_units: int = 512
    dense_units: int = 64


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv1d, maxpool1d, lstm, dense
    name: str
    params: dict
    tensors: tuple[tuple[str, tuple[int, ...]], ...] = ()


def layer_specs(arch: Architecture) -> list[LayerSpec]:
    a = arch
    h1, h2 = a.lstm1_units, a.lstm2_units
    return [
        LayerSpec("conv1d", "conv1", {"kernel_size": a.conv1_kernel, "filters": a.conv1_filters},
                  (("kernel", (a.conv1_kernel, a.vocab_size, a.conv1_filters)), ("bias", (a.conv1_filters,)))),
        LayerSpec("conv1d", "conv2", {"kernel_size": a.conv2_kernel, "filters": a.conv2_filters},
                  (("kernel", (a.conv2_kernel, a.conv1_filters, a.conv2_filters)), ("bias", (a.conv2_filters,)))),
        LayerSpec("maxpool1d", "pool", {"window": a.pool_window, "stride": a.pool_stride}),
        LayerSpec("lstm", "lstm1", {"units": h1},
                  (("kernel", (a.conv2_filters, 4 * h1)), ("recurrent", (h1, 4 * h1)), ("bias", (4 * h1,)))),
        LayerSpec("lstm", "lstm2", {"units": h2},
                  (("kernel", (h1, 4 * h2)), ("recurrent", (h2, 4 * h2)), ("bias", (4 * h2,)))),
        LayerSpec("dense", "dense", {"units": a.dense_units},
                  (("kernel", (h2, a.dense_units)), ("bias", (a.dense_units,)))),
    ]


@dataclass
class ChemNetModel:
    arch: Architecture
    weights: dict[str, np.ndarray]
    vocab: tuple[str, ...] = DEFAULT_VOCAB
    layers: list[LayerSpec] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            self.layers = layer_specs(self.arch)
        if len(self.vocab) != self.arch.vocab_size:
            raise ShapeMismatch(f"vocab has {len(self.vocab)} symbols, architecture expects {self.arch.vocab_size}")
        for layer in self.layers:
            for tname, shape in layer.tensors:
                name = f"{layer.name}.{tname}"
                if name not in self.weights:
                    raise MissingTensor(name)
                if self.weights[name].shape != shape:
                    raise ShapeMismatch(f"{name}: expected {shape}, found {self.weights[name].shape}")

    @property
    def vocab_size(self) -> int:
        return self.arch.vocab_size

    @property
    def max_len(self) -> int:
        return self.arch.max_len

    @property
    def embedding_dim(self) -> int:
        return self.arch.lstm2_units

    def lstm(self, name: str, dtype) -> LSTMWeights:
        w = self.weights
        return LSTMWeights(
            w[f"{name}.kernel"].astype(dtype), w[f"{name}.recurrent"].astype(dtype), w[f"{name}.bias"].astype(dtype)
        )

    def head(self, embeddings: np.ndarray) -> np.ndarray:
        """Dense output layer applied to embeddings (not used for FCD)."""
        return dense_forward(embeddings, self.weights["dense.kernel"], self.weights["dense.bias"])


def _fan_in(layer: LayerSpec, tname: str, shape: tuple[int, ...]) -> int:
    if layer.kind == "conv1d":
        k, cin, _ = layer.tensors[0][1]
        return k * cin
    if layer.kind == "lstm":
        if tname == "kernel":
            return shape[0]
        return layer.params["units"]  # recurrent and bias
    return layer.tensors[0][1][0]  # dense


def init_stream_seed(seed: int, layer_index: int, tensor_index: int) -> int:
    return (seed + layer_index * _LAYER_STRIDE + tensor_index * _TENSOR_STRIDE) & MASK64


def uniform_weights(stream_seed: int, count: int, fan_in: int) -> np.ndarray:
    """``count`` float32 values uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / np.sqrt(fan_in)
    return ((2.0 * uniform_array(stream_seed, count) - 1.0) * bound).astype(np.float32)


def seeded_init(arch: Architecture | None = None, seed: int = 0, vocab=DEFAULT_VOCAB) -> ChemNetModel:
    """Deterministic stand-in weights.

    Tensor ``t`` of layer ``l`` (layer order conv1, conv2, pool, lstm1,
    lstm2, dense) is filled row-major from the splitmix64 stream seeded with
    ``init_stream_seed(seed, l, t)``. Bias fan-in is the fan-in of the
    layer's input kernel (conv, dense) or the unit count (LSTM).
    """
    arch = arch or Architecture(vocab_size=len(vocab))
    weights = {}
    for li, layer in enumerate(layer_specs(arch)):
        for ti, (tname, shape) in enumerate(layer.tensors):
            count = int(np.prod(shape))
            values = uniform_weights(init_stream_seed(seed, li, ti), count, _fan_in(layer, tname, shape))
            weights[f"{layer.name}.{tname}"] = values.reshape(shape)
    return ChemNetModel(arch, weights, tuple(vocab))


# ---------------------------------------------------------------------------
# Weight files
# ---------------------------------------------------------------------------


def save_model(model: ChemNetModel, manifest_path) -> None:
    """Write ``manifest_path`` (JSON) and a sibling ``.bin`` tensor file."""
    manifest_path = Path(manifest_path)
    bin_name = manifest_path.with_suffix(".bin").name
    entries, chunks, offset = [], [], 0
    for layer in model.layers:
        for tname, shape in layer.tensors:
            name = f"{layer.name}.{tname}"
            data = np.ascontiguousarray(model.weights[name], dtype="<f4").tobytes()
            entries.append({"name": name, "shape": list(shape), "dtype": "f32", "file": bin_name, "byte_offset": offset})
            chunks.append(data)
            offset += len(data)
    manifest = {"architecture": asdict(model.arch), "vocab": list(model.vocab), "tensors": entries}
    manifest_path.write_text(json.dumps(manifest, indent=1))
    (manifest_path.parent / bin_name).write_bytes(b"".join(chunks))


def load_model(manifest_path) -> ChemNetModel:
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{manifest_path}: invalid JSON") from exc
    arch = Architecture(**manifest["architecture"])
    vocab = tuple(manifest.get("vocab", DEFAULT_VOCAB))
    entries = {e["name"]: e for e in manifest["tensors"]}
    files: dict[str, bytes] = {}
    claimed: dict[str, int] = {}
    weights = {}
    for layer in layer_specs(arch):
        for tname, shape in layer.tensors:
            name = f"{layer.name}.{tname}"
            entry = entries.get(name)
            if entry is None:
                raise MissingTensor(name)
            if tuple(entry["shape"]) != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, found {tuple(entry['shape'])}")
            if entry.get("dtype", "f32") != "f32":
                raise CorruptFile(f"{name}: unsupported dtype {entry['dtype']}")
            fname = entry["file"]
            if fname not in files:
                files[fname] = (manifest_path.parent / fname).read_bytes()
            nbytes = 4 * int(np.prod(shape))
            start = int(entry["byte_offset"])
            blob = files[fname][start : start + nbytes]
            if len(blob) != nbytes:
                raise CorruptFile(f"{name}: expected {nbytes} bytes at offset {start} in {fname}")
            weights[name] = np.frombuffer(blob, dtype="<f4").astype(np.float32).reshape(shape)
            claimed[fname] = claimed.get(fname, 0) + nbytes
    for fname, data in files.items():
        if len(data) != claimed[fname]:
            raise CorruptFile(f"{fname}: {len(data)} bytes on disk, {claimed[fname]} declared")
    return ChemNetModel(arch, weights, vocab)


# ---------------------------------------------------------------------------
# Embedding
# ---------------------------------------------------------------------------


def _matrix_rows(matrix: np.ndarray, vocab_size: int) -> np.ndarray:
    if matrix.ndim != 2 or matrix.shape[1] != vocab_size:
        raise ShapeMismatch(f"token matrix has shape {matrix.shape}, expected (*, {vocab_size})")
    nonzero = np.flatnonzero(np.any(matrix != 0, axis=1))
    length = int(nonzero[-1]) + 1 if len(nonzero) else 0
    return matrix[:length]


def _check_finite(x: np.ndarray, where: str) -> None:
    if not np.isfinite(x).all():
        raise NonFiniteActivation(f"non-finite activation after {where}")


def _run_lstm(x: np.ndarray, lengths: np.ndarray, w: LSTMWeights) -> np.ndarray:
    """Run an LSTM over ``(B, P, in)``; returns all hidden states ``(B, P, H)``.

    States of sequence ``b`` are frozen once ``t >= lengths[b]``.
    """
    b, p, _ = x.shape
    units = w.units
    xw = (x.reshape(b * p, -1) @ w.kernel).reshape(b, p, 4 * units)
    h = np.zeros((b, units), dtype=x.dtype)
    c = np.zeros((b, units), dtype=x.dtype)
    out = np.empty((b, p, units), dtype=x.dtype)
    for t in range(p):
        z = xw[:, t] + h @ w.recurrent + w.bias
        h_new, c_new = _lstm_gates(z, c, units)
        live = (t < lengths)[:, None]
        h = np.where(live, h_new, h)
        c = np.where(live, c_new, c)
        out[:, t] = h
    return out


def _embed_chunk(model: ChemNetModel, seqs: Sequence[np.ndarray], dtype) -> np.ndarray:
    """Embed at most CHUNK sequences given as ``(L_i, vocab)`` arrays."""
    arch = model.arch
    n_real = len(seqs)
    lengths = np.array([len(s) for s in seqs] + [arch.pool_window] * (CHUNK - n_real))
    if lengths.min() < arch.pool_window:
        raise ShapeMismatch(f"sequence shorter than the pooling window ({arch.pool_window})")
    t_max = int(lengths.max())
    x = np.zeros((CHUNK, t_max, arch.vocab_size), dtype=dtype)
    for i, s in enumerate(seqs):
        x[i, : len(s)] = s
    time_mask = (np.arange(t_max)[None, :] < lengths[:, None])[..., None]
    # Overflow is reported as NonFiniteActivation, not as a numpy warning.
    with np.errstate(over="ignore", invalid="ignore"):
        w = model.weights
        x = selu(conv1d_forward(x, w["conv1.kernel"].astype(dtype), w["conv1.bias"].astype(dtype))) * time_mask
        _check_finite(x, "conv1")
        x = selu(conv1d_forward(x, w["conv2.kernel"].astype(dtype), w["conv2.bias"].astype(dtype))) * time_mask
        _check_finite(x, "conv2")
        x = maxpool1d(x, arch.pool_window, arch.pool_stride)
        pooled = (lengths - arch.pool_window) // arch.pool_stride + 1
        h1 = _run_lstm(x, pooled, model.lstm("lstm1", dtype))
        _check_finite(h1, "lstm1")
        h2 = _run_lstm(h1, pooled, model.lstm("lstm2", dtype))
        _check_finite(h2, "lstm2")
    return h2[np.arange(n_real), pooled[:n_real] - 1].astype(np.float64)


def _one_hot_rows(cols: list[int], vocab_size: int, dtype) -> np.ndarray:
    out = np.zeros((len(cols), vocab_size), dtype=dtype)
    out[np.arange(len(cols)), cols] = 1
    return out


def _embed_sequences(model: ChemNetModel, seqs: list[np.ndarray], dtype) -> np.ndarray:
    # Chunks are formed from length-sorted sequences to limit padding work;
    # per-molecule results do not depend on chunk composition.
    order = sorted(range(len(seqs)), key=lambda i: (len(seqs[i]), i))
    out = np.empty((len(seqs), model.embedding_dim), dtype=np.float64)
    for start in range(0, len(order), CHUNK):
        idx = order[start : start + CHUNK]
        out[idx] = _embed_chunk(model, [seqs[i] for i in idx], dtype)
    return out


_WORKER_MODEL: ChemNetModel | None = None


def _worker_init(model: ChemNetModel) -> None:
    global _WORKER_MODEL
    _WORKER_MODEL = model


def _worker_embed_smiles(args) -> np.ndarray:
    smiles, dtype = args
    return embed_smiles(_WORKER_MODEL, smiles, dtype=dtype)


def default_workers() -> int:
    return max(1, int(os.environ.get("MOLMETRIC_THREADS", "1")))


def embed(model: ChemNetModel, batch: Sequence[np.ndarray], dtype=np.float32) -> np.ndarray:
    """Embeddings ``(n, embedding_dim)`` for a list of token matrices.

    ``dtype`` is the compute precision (weights are stored as float32);
    results are returned as float64.
    """
    seqs = [_matrix_rows(np.asarray(m), model.vocab_size).astype(dtype) for m in batch]
    if not seqs:
        return np.empty((0, model.embedding_dim))
    return _embed_sequences(model, seqs, dtype)


def smiles_rows(model: ChemNetModel, smiles: str, dtype=np.float32) -> np.ndarray:
    """The non-padding rows of ``one_hot_encode(smiles)`` for this model's vocabulary."""
    cols = encode_symbols(smiles, model.vocab)[: model.max_len - 1]
    cols.append(model.vocab.index(END))
    return _one_hot_rows(cols, model.vocab_size, dtype)


def embed_smiles(
    model: ChemNetModel, smiles: Sequence[str], dtype=np.float32, workers: int | None = None
) -> np.ndarray:
    """Encode and embed SMILES strings without materializing padded matrices.

    With ``workers > 1`` the list is split into contiguous shards embedded
    in separate processes; output order and values are unaffected.
    """
    smiles = list(smiles)
    workers = workers or 1
    if workers > 1 and len(smiles) > CHUNK * workers:
        bounds = np.linspace(0, len(smiles), workers + 1).astype(int)
        shards = [(smiles[a:b], dtype) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(workers, initializer=_worker_init, initargs=(model,)) as pool:
            return np.concatenate(list(pool.map(_worker_embed_smiles, shards)))
    if not smiles:
        return np.empty((0, model.embedding_dim))
    seqs = [smiles_rows(model, s, dtype) for s in smiles]
    return _embed_sequences(model, seqs, dtype)
