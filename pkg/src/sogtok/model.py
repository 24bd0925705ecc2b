"""Quantized graph autoencoder: GCN encoder, codebook lookup, linear
decoder, three-term loss, analytic backward pass, and Adam.

All arrays are float64. The quantized rows are exact (bitwise) copies of
codebook entries; gradients follow the stop-gradient convention: the
reconstruction gradient reaches the encoder straight through the
quantization, the codebook learns only from the update term, and the
commitment term pulls encoder outputs toward their entries.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .attributes import ImportanceStrategy
from .errors import CheckpointError, DimensionMismatch, NoForwardState, ValidationError

CHECKPOINT_MAGIC = b"SOGTOK1"
CHECKPOINT_VERSION = 1


@dataclass
class EncoderParams:
    w1: np.ndarray  # d_s x d_h
    w2: np.ndarray  # d_h x d

    @property
    def d_s(self) -> int:
        return self.w1.shape[0]

    @property
    def d_h(self) -> int:
        return self.w1.shape[1]

    @property
    def d(self) -> int:
        return self.w2.shape[1]


@dataclass
class DecoderParams:
    wd: np.ndarray  # d x d_r

    @property
    def d_r(self) -> int:
        return self.wd.shape[1]


@dataclass
class Codebook:
    entries: np.ndarray  # K x d

    def __post_init__(self):
        if self.entries.ndim != 2 or self.entries.shape[0] < 2:
            raise ValidationError("codebook needs at least 2 entries")
        if not np.isfinite(self.entries).all():
            raise ValidationError("codebook entries must be finite")

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class QuantizedSelection:
    indices: np.ndarray  # (n,)
    quantized: np.ndarray  # n x d, rows are codebook entries


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    update: float
    commitment: float
    beta: float

    @property
    def total(self) -> float:
        return self.reconstruction + self.update + self.beta * self.commitment


def normalized_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetric GCN propagation matrix D^{-1/2} (A + I) D^{-1/2}."""
    n = a.shape[0]
    a_hat = a + np.eye(n)
    inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]


def encode(anorm: np.ndarray, x: np.ndarray, enc: EncoderParams) -> np.ndarray:
    """Two-layer graph convolution: Anorm . relu(Anorm . X . W1) . W2."""
    if x.shape[0] != anorm.shape[0]:
        raise DimensionMismatch(
            f"feature rows {x.shape[0]} != adjacency size {anorm.shape[0]}"
        )
    if x.shape[1] != enc.d_s:
        raise DimensionMismatch(f"feature dim {x.shape[1]} != encoder d_s {enc.d_s}")
    z1 = anorm @ x @ enc.w1
    z2 = np.maximum(z1, 0.0)
    return anorm @ z2 @ enc.w2


def quantize(h: np.ndarray, cb: Codebook, chunk: int = 64) -> QuantizedSelection:
    """Per-row nearest codebook entry by Euclidean distance, lowest index
    winning ties."""
    if h.shape[1] != cb.d:
        raise DimensionMismatch(f"latent dim {h.shape[1]} != codebook dim {cb.d}")
    indices = np.empty(h.shape[0], dtype=np.int64)
    for start in range(0, h.shape[0], chunk):
        block = h[start : start + chunk]
        d2 = ((block[:, None, :] - cb.entries[None, :, :]) ** 2).sum(axis=2)
        indices[start : start + chunk] = d2.argmin(axis=1)
    return QuantizedSelection(indices=indices, quantized=cb.entries[indices].copy())


def decode_and_reconstruct(
    quantized: np.ndarray, dec: DecoderParams
) -> tuple[np.ndarray, np.ndarray]:
    """Reconstructed features Xhat = Q . Wd and adjacency Xhat . Xhat^T."""
    if quantized.shape[1] != dec.wd.shape[0]:
        raise DimensionMismatch(
            f"quantized dim {quantized.shape[1]} != decoder input {dec.wd.shape[0]}"
        )
    xhat = quantized @ dec.wd
    return xhat, xhat @ xhat.T


def compute_loss(
    a_target: np.ndarray,
    a_rec: np.ndarray,
    h: np.ndarray,
    sel: QuantizedSelection,
    beta: float,
) -> LossBreakdown:
    if a_target.shape != a_rec.shape:
        raise DimensionMismatch("adjacency shapes differ")
    recon = float(((a_target - a_rec) ** 2).sum())
    # update and commitment share the forward value; their gradients differ
    gap = float(((h - sel.quantized) ** 2).sum())
    return LossBreakdown(reconstruction=recon, update=gap, commitment=gap, beta=beta)


@dataclass
class ForwardState:
    """Everything backward() needs, captured during the forward pass."""

    a_target: np.ndarray
    anorm: np.ndarray
    x: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    h: np.ndarray
    sel: QuantizedSelection | None  # None during warm-up (no quantization)
    xhat: np.ndarray
    a_rec: np.ndarray
    loss: LossBreakdown


@dataclass
class Gradients:
    w1: np.ndarray
    w2: np.ndarray
    wd: np.ndarray
    codebook: np.ndarray | None  # None when no codebook participates

    def __iadd__(self, other: "Gradients") -> "Gradients":
        self.w1 += other.w1
        self.w2 += other.w2
        self.wd += other.wd
        if self.codebook is not None and other.codebook is not None:
            self.codebook += other.codebook
        return self

    def scale(self, factor: float) -> None:
        self.w1 *= factor
        self.w2 *= factor
        self.wd *= factor
        if self.codebook is not None:
            self.codebook *= factor


def forward(
    a_target: np.ndarray,
    x: np.ndarray,
    enc: EncoderParams,
    dec: DecoderParams,
    cb: Codebook | None,
    beta: float,
) -> ForwardState:
    """Full pass. With cb=None the decoder reads the continuous embeddings
    (warm-up reconstruction pretraining); quantization terms are zero."""
    anorm = normalized_adjacency(a_target)
    z1 = anorm @ x @ enc.w1
    z2 = np.maximum(z1, 0.0)
    h = anorm @ z2 @ enc.w2
    if cb is None:
        xhat, a_rec = decode_and_reconstruct(h, dec)
        recon = float(((a_target - a_rec) ** 2).sum())
        loss = LossBreakdown(reconstruction=recon, update=0.0, commitment=0.0, beta=beta)
        return ForwardState(a_target, anorm, x, z1, z2, h, None, xhat, a_rec, loss)
    sel = quantize(h, cb)
    xhat, a_rec = decode_and_reconstruct(sel.quantized, dec)
    loss = compute_loss(a_target, a_rec, h, sel, beta)
    return ForwardState(a_target, anorm, x, z1, z2, h, sel, xhat, a_rec, loss)


def backward(
    state: ForwardState,
    enc: EncoderParams,
    dec: DecoderParams,
    cb: Codebook | None,
    straight_through: bool = True,
) -> Gradients:
    """Analytic gradients of the three-term loss for one forward state."""
    if state is None:
        raise NoForwardState("forward state required")
    beta = state.loss.beta
    diff = state.a_rec - state.a_target
    dxhat = 4.0 * diff @ state.xhat

    if state.sel is None:
        # warm-up: plain autoencoder, decoder reads h directly
        dwd = state.h.T @ dxhat
        dh = dxhat @ dec.wd.T
        dcb = None if cb is None else np.zeros_like(cb.entries)
    else:
        dwd = state.sel.quantized.T @ dxhat
        dq_recon = dxhat @ dec.wd.T
        dh = 2.0 * beta * (state.h - state.sel.quantized)
        if straight_through:
            dh = dh + dq_recon
        dcb = np.zeros_like(cb.entries)
        np.add.at(dcb, state.sel.indices, 2.0 * (state.sel.quantized - state.h))

    s2 = state.anorm @ state.z2
    dw2 = s2.T @ dh
    dz2 = (state.anorm @ dh) @ enc.w2.T
    dz1 = dz2 * (state.z1 > 0.0)
    s1 = state.anorm @ state.x
    dw1 = s1.T @ dz1
    return Gradients(w1=dw1, w2=dw2, wd=dwd, codebook=dcb)


def zero_gradients(enc: EncoderParams, dec: DecoderParams, cb: Codebook | None) -> Gradients:
    return Gradients(
        w1=np.zeros_like(enc.w1),
        w2=np.zeros_like(enc.w2),
        wd=np.zeros_like(dec.wd),
        codebook=None if cb is None else np.zeros_like(cb.entries),
    )


class Adam:
    """Bias-corrected Adam with one learning rate per parameter group."""

    def __init__(self, lrs: dict[str, float], b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lrs = dict(lrs)
        self.b1 = b1
        self.b2 = b2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update parameter arrays in place."""
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            self.m[name] = self.b1 * self.m[name] + (1.0 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1.0 - self.b2) * g * g
            m_hat = self.m[name] / c1
            v_hat = self.v[name] / c2
            p -= self.lrs[name] * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TokenizerModel:
    """Frozen bundle of everything needed to map a graph to its token."""

    enc: EncoderParams
    dec: DecoderParams
    codebook: Codebook
    beta: float
    strategy: ImportanceStrategy
    seed: int
    manifest: dict = field(default_factory=dict)

    @property
    def d_s(self) -> int:
        return self.enc.d_s

    @property
    def k(self) -> int:
        return self.codebook.k


def init_params(
    d_s: int, d_h: int, d: int, d_r: int, rng: np.random.Generator
) -> tuple[EncoderParams, DecoderParams]:
    """Glorot-style scaled Gaussian initialization."""
    w1 = rng.normal(0.0, np.sqrt(2.0 / (d_s + d_h)), size=(d_s, d_h))
    w2 = rng.normal(0.0, np.sqrt(2.0 / (d_h + d)), size=(d_h, d))
    wd = rng.normal(0.0, np.sqrt(2.0 / (d + d_r)), size=(d, d_r))
    return EncoderParams(w1=w1, w2=w2), DecoderParams(wd=wd)


def save_checkpoint(model: TokenizerModel, path) -> None:
    header = {
        "version": CHECKPOINT_VERSION,
        "d_s": model.enc.d_s,
        "d_h": model.enc.d_h,
        "d": model.enc.d,
        "d_r": model.dec.d_r,
        "K": model.codebook.k,
        "beta": model.beta,
        "strategy": {"kind": model.strategy.kind, "seed": model.strategy.seed},
        "seed": model.seed,
        "manifest": model.manifest,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for arr in (model.enc.w1, model.enc.w2, model.dec.wd, model.codebook.entries):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> TokenizerModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"bad magic {magic!r}; not a tokenizer checkpoint")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")
        d_s, d_h, d, d_r, k = (header[key] for key in ("d_s", "d_h", "d", "d_r", "K"))

        def read_block(rows: int, cols: int) -> np.ndarray:
            raw = fh.read(rows * cols * 8)
            if len(raw) != rows * cols * 8:
                raise CheckpointError("truncated checkpoint")
            return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()

        w1 = read_block(d_s, d_h)
        w2 = read_block(d_h, d)
        wd = read_block(d, d_r)
        entries = read_block(k, d)
    strategy = ImportanceStrategy(
        kind=header["strategy"]["kind"], seed=header["strategy"]["seed"]
    )
    return TokenizerModel(
        enc=EncoderParams(w1=w1, w2=w2),
        dec=DecoderParams(wd=wd),
        codebook=Codebook(entries=entries),
        beta=header["beta"],
        strategy=strategy,
        seed=header["seed"],
        manifest=header.get("manifest", {}),
    )
