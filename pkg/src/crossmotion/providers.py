"""Pluggable species/text embedding providers.

The pipeline only ever talks to the `EmbeddingProvider` protocol, so the
deterministic hash-based stubs below can be swapped for real encoder outputs
(e.g. via the precomputed-embedding sidecar) without touching any model code.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

DEFAULT_DIM = 64
MAX_WORDS = 32

_SIDECAR_MAGIC = b"EMBS"
_SIDECAR_VERSION = 1


@dataclass
class SpeciesEmbedding:
    """Unit-norm species condition vector."""

    vector: np.ndarray


@dataclass
class TextFeatures:
    """Sentence-level feature plus per-word features for one caption."""

    sentence: np.ndarray
    words: np.ndarray  # (n_words, dim)

    @property
    def num_words(self) -> int:
        return self.words.shape[0]


@runtime_checkable
class EmbeddingProvider(Protocol):
    def species_embed(self, name: str) -> SpeciesEmbedding: ...

    def text_features(self, caption: str) -> TextFeatures: ...


def _hash_seed(*parts: str) -> int:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return struct.unpack("<Q", digest[:8])[0]


def _unit_gaussian(seed: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class HashingProvider:
    """Deterministic stand-in for pretrained text/species encoders.

    Every vector is a pseudo-random unit Gaussian seeded from a hash of the
    (canonicalized) input string and the provider seed, so the provider is a
    pure function of its inputs.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def species_embed(self, name: str) -> SpeciesEmbedding:
        canonical = name.strip().lower()
        if not canonical:
            raise ValueError("species name must be non-empty")
        vec = _unit_gaussian(_hash_seed("species", str(self.seed), canonical), self.dim)
        return SpeciesEmbedding(vector=vec)

    def text_features(self, caption: str) -> TextFeatures:
        tokens = caption.strip().lower().split()
        if not tokens:
            raise ValueError("caption must be non-empty")
        tokens = tokens[:MAX_WORDS]
        words = np.stack(
            [_unit_gaussian(_hash_seed("word", str(self.seed), tok), self.dim) for tok in tokens]
        )
        sentence = words.mean(axis=0)
        sentence = sentence / np.linalg.norm(sentence)
        return TextFeatures(sentence=sentence, words=words)


class PrecomputedProvider:
    """Provider backed by a sidecar of externally computed vectors.

    Looks up exact (canonicalized) strings; anything missing falls back to the
    given provider, or raises KeyError when no fallback is set.
    """

    def __init__(self, species: dict[str, np.ndarray], captions: dict[str, TextFeatures],
                 fallback: EmbeddingProvider | None = None):
        self._species = {k.strip().lower(): np.asarray(v, dtype=np.float64) for k, v in species.items()}
        self._captions = {k.strip().lower(): v for k, v in captions.items()}
        self._fallback = fallback

    def species_embed(self, name: str) -> SpeciesEmbedding:
        key = name.strip().lower()
        if key in self._species:
            vec = self._species[key]
            return SpeciesEmbedding(vector=vec / np.linalg.norm(vec))
        if self._fallback is not None:
            return self._fallback.species_embed(name)
        raise KeyError(f"no precomputed species embedding for {name!r}")

    def text_features(self, caption: str) -> TextFeatures:
        key = caption.strip().lower()
        if key in self._captions:
            return self._captions[key]
        if self._fallback is not None:
            return self._fallback.text_features(caption)
        raise KeyError(f"no precomputed text features for {caption!r}")


def write_embedding_sidecar(path, vectors: dict[int, np.ndarray]) -> None:
    """Write a record-id -> f32 vector sidecar (for real encoder outputs)."""
    with open(path, "wb") as fh:
        fh.write(_SIDECAR_MAGIC)
        fh.write(struct.pack("<II", _SIDECAR_VERSION, len(vectors)))
        for rec_id in sorted(vectors):
            vec = np.asarray(vectors[rec_id], dtype="<f4").ravel()
            fh.write(struct.pack("<II", rec_id, vec.size))
            fh.write(vec.tobytes())


def read_embedding_sidecar(path) -> dict[int, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SIDECAR_MAGIC:
            raise ValueError(f"bad sidecar magic {magic!r}")
        version, count = struct.unpack("<II", fh.read(8))
        if version != _SIDECAR_VERSION:
            raise ValueError(f"unsupported sidecar version {version}")
        out: dict[int, np.ndarray] = {}
        for _ in range(count):
            rec_id, size = struct.unpack("<II", fh.read(8))
            data = fh.read(4 * size)
            if len(data) != 4 * size:
                raise ValueError("truncated sidecar payload")
            out[rec_id] = np.frombuffer(data, dtype="<f4").astype(np.float64)
        return out
