"""Convolutional autoencoder on 64x64 shape bitmaps.

Encoder: two stride-2 convolutions (64 -> 32 -> 16, 8 filters) and a dense
map to the latent code. Decoder: dense to 4x4x8 and four stride-2
transposed convolutions (4 -> 8 -> 16 -> 32 -> 64) ending in a logistic
output. Hidden activations are ReLU; training minimizes pixel MSE with Adam.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..geometry import RESOLUTION
from .layers import (Adam, Conv2D, ConvTranspose2D, Dense, ReLU, Reshape, Sequential,
                     Sigmoid)

FILTERS = 8
KERNEL = 3
MAGIC = b"CAE1"
ARCHITECTURE = "conv8s2-conv8s2-dense|dense-4x4x8-tconv8s2x3-tconv1s2-sigmoid"


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


def check_bitmaps(X) -> np.ndarray:
    """Stack of 64x64 bitmaps as float32 in {0, 1}, shape (n, 64, 64)."""
    x = np.asarray(X)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (RESOLUTION, RESOLUTION):
        raise ValueError(f"expected bitmaps of shape (n, {RESOLUTION}, {RESOLUTION}), got {x.shape}")
    return x.astype(np.float32)


class LatentNormalizer(BaseEstimator, TransformerMixin):
    """Per-dimension min-max scaling into [0, 1], clamped.

    A dimension whose training values are all equal maps to 0.5.
    """

    def fit(self, Z, y=None):
        z = np.asarray(Z, dtype=float)
        if z.ndim != 2 or len(z) == 0:
            raise ValueError("expected a non-empty 2-D latent array")
        self.min_ = z.min(axis=0)
        self.max_ = z.max(axis=0)
        return self

    def transform(self, Z):
        check_is_fitted(self, "min_")
        z = np.asarray(Z, dtype=float)
        span = self.max_ - self.min_
        degenerate = span <= 0
        out = (z - self.min_) / np.where(degenerate, 1.0, span)
        out = np.clip(out, 0.0, 1.0)
        out[:, degenerate] = 0.5
        return out


class ConvAutoencoder(BaseEstimator, TransformerMixin):
    """Shape autoencoder with an sklearn transformer interface.

    ``fit`` trains on a bitmap stack; ``transform`` returns normalized latent
    descriptors in [0, 1]; ``encode`` returns raw latents and ``reconstruct``
    the decoded images. With ``warm_start=True`` a second ``fit`` continues
    from the current weights and optimizer state instead of reinitializing.
    """

    def __init__(self, latent_dim=2, epochs=350, learning_rate=1e-3, batch_size=32,
                 warm_start=False, random_state=0):
        self.latent_dim = latent_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.warm_start = warm_start
        self.random_state = random_state

    # model construction

    def _build(self):
        if int(self.latent_dim) < 1:
            raise ValueError("latent_dim must be >= 1")
        rng = np.random.default_rng(self.random_state)
        side = RESOLUTION // 4
        self.encoder_ = Sequential([
            Conv2D(1, FILTERS, rng, KERNEL, input_grad=False), ReLU(),
            Conv2D(FILTERS, FILTERS, rng, KERNEL), ReLU(),
            Reshape((side * side * FILTERS,)),
            Dense(side * side * FILTERS, self.latent_dim, rng),
        ])
        self.decoder_ = Sequential([
            Dense(self.latent_dim, 4 * 4 * FILTERS, rng), ReLU(),
            Reshape((4, 4, FILTERS)),
            ConvTranspose2D(FILTERS, FILTERS, rng, KERNEL), ReLU(),
            ConvTranspose2D(FILTERS, FILTERS, rng, KERNEL), ReLU(),
            ConvTranspose2D(FILTERS, FILTERS, rng, KERNEL), ReLU(),
            ConvTranspose2D(FILTERS, 1, rng, KERNEL),
            Sigmoid(),
        ])
        self.optimizer_ = Adam(self.learning_rate)
        self.loss_history_ = []
        self._shuffle_rng = np.random.default_rng(rng.integers(0, 2**63))

    def _slots(self):
        return self.encoder_.parameters() + self.decoder_.parameters()

    def get_weights(self) -> list[np.ndarray]:
        """Parameter arrays in layer order (encoder first, weights before biases)."""
        return [layer.params[name] for layer, name in self._slots()]

    def set_weights(self, weights) -> None:
        slots = self._slots()
        if len(weights) != len(slots):
            raise ValueError(f"expected {len(slots)} arrays, got {len(weights)}")
        for (layer, name), w in zip(slots, weights):
            if layer.params[name].shape != np.shape(w):
                raise ValueError(f"shape mismatch for {name}: {np.shape(w)}")
            layer.params[name] = np.asarray(w, dtype=np.float32).copy()

    # forward / backward

    def _forward(self, x):
        z = self.encoder_.forward(x[..., None])
        return z, self.decoder_.forward(z)[..., 0]

    def _train_batch(self, x):
        _, recon = self._forward(x)
        diff = recon - x
        loss = float(np.mean(diff * diff, dtype=np.float64))
        grad = (2.0 / diff.size) * diff
        g = self.decoder_.backward(grad[..., None])
        self.encoder_.backward(g)
        self.optimizer_.step(self._slots())
        return loss

    def fit(self, X, y=None):
        x = check_bitmaps(X)
        if len(x) < self.batch_size:
            raise ValueError(f"need at least batch_size={self.batch_size} samples, got {len(x)}")
        if not (self.warm_start and hasattr(self, "encoder_")):
            self._build()
        self.optimizer_.learning_rate = self.learning_rate
        start = len(self.loss_history_)
        for epoch in range(self.epochs):
            order = self._shuffle_rng.permutation(len(x))
            total = 0.0
            for lo in range(0, len(x), self.batch_size):
                idx = order[lo:lo + self.batch_size]
                total += self._train_batch(x[idx]) * len(idx)
            loss = total / len(x)
            if not np.isfinite(loss):
                raise TrainingDivergedError(start + epoch + 1)
            self.loss_history_.append(loss)
        self.normalizer_ = LatentNormalizer().fit(self.encode(x))
        return self

    def _batched(self, x, fn, batch=256):
        return np.concatenate([fn(x[lo:lo + batch]) for lo in range(0, len(x), batch)])

    def encode(self, X) -> np.ndarray:
        """Raw latent codes, shape (n, latent_dim)."""
        check_is_fitted(self, "encoder_")
        x = check_bitmaps(X)
        return self._batched(x, lambda b: self.encoder_.forward(b[..., None]))

    def reconstruct(self, X) -> np.ndarray:
        """Decoded images in (0, 1), shape (n, 64, 64)."""
        check_is_fitted(self, "encoder_")
        x = check_bitmaps(X)
        return self._batched(x, lambda b: self._forward(b)[1])

    def inverse_transform(self, Z) -> np.ndarray:
        """Decode raw latent codes to images."""
        check_is_fitted(self, "decoder_")
        z = np.asarray(Z, dtype=np.float32).reshape(-1, self.latent_dim)
        return self.decoder_.forward(z)[..., 0]

    def transform(self, X) -> np.ndarray:
        """Normalized latent descriptors in [0, 1]^latent_dim."""
        check_is_fitted(self, "normalizer_")
        return self.normalizer_.transform(self.encode(X))

    def refit_normalizer(self, X):
        self.normalizer_ = LatentNormalizer().fit(self.encode(X))
        return self

    def score(self, X, y=None) -> float:
        """Negative mean pixel MSE (higher is better)."""
        x = check_bitmaps(X)
        return -float(np.mean((self.reconstruct(x) - x) ** 2, dtype=np.float64))

    # serialization

    def save(self, path) -> Path:
        """Write ``path`` (weights) and ``path.manifest`` (text description)."""
        check_is_fitted(self, "encoder_")
        path = Path(path)
        flat = np.concatenate([w.ravel() for w in self.get_weights()]).astype("<f4")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", flat.size))
            fh.write(flat.tobytes())
        lines = [
            f"architecture = {ARCHITECTURE}",
            f"latent_dim = {self.latent_dim}",
            f"seed = {self.random_state}",
            f"epochs = {len(self.loss_history_)}",
            f"n_floats = {flat.size}",
        ]
        if hasattr(self, "normalizer_"):
            lines.append("latent_min = " + " ".join(repr(float(v)) for v in self.normalizer_.min_))
            lines.append("latent_max = " + " ".join(repr(float(v)) for v in self.normalizer_.max_))
        Path(str(path) + ".manifest").write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "ConvAutoencoder":
        path = Path(path)
        meta = {}
        for line in Path(str(path) + ".manifest").read_text().splitlines():
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
        if meta.get("architecture") != ARCHITECTURE:
            raise ValueError(f"unsupported architecture {meta.get('architecture')!r}")
        seed = meta.get("seed", "None")
        model = cls(latent_dim=int(meta["latent_dim"]),
                    random_state=None if seed == "None" else int(seed))
        model._build()
        raw = path.read_bytes()
        if raw[:4] != MAGIC:
            raise ValueError(f"{path} is not a weights file")
        (count,) = struct.unpack("<I", raw[4:8])
        flat = np.frombuffer(raw[8:], dtype="<f4")
        if flat.size != count:
            raise ValueError("truncated weights file")
        weights, offset = [], 0
        for w in model.get_weights():
            weights.append(flat[offset:offset + w.size].reshape(w.shape))
            offset += w.size
        if offset != count:
            raise ValueError("weights file does not match the architecture")
        model.set_weights(weights)
        if "latent_min" in meta:
            norm = LatentNormalizer()
            norm.min_ = np.array([float(v) for v in meta["latent_min"].split()])
            norm.max_ = np.array([float(v) for v in meta["latent_max"].split()])
            model.normalizer_ = norm
        return model
