"""Text embedding providers, cosine similarity, and exact knn retrieval.

Near-duplicate candidate proposal and the leak scanner both need vector
similarity, but tests and offline runs cannot depend on a model server.
The builtin provider embeds text as a hashed character-3-gram frequency
vector: deterministic across runs and platforms (gram hashing uses
crc32, not Python's salted hash), cheap, and good enough to rank
whitespace/typo variants far above unrelated prompts. The external
provider speaks a small HTTP protocol for callers who want a real
sentence encoder; everything downstream is provider-agnostic.

knn is exact by contract: whatever acceleration is used must return the
same results as a brute-force scan, ties broken by digest so audits are
replayable.
"""

from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "EmbeddingProvider",
    "cosine",
    "embed_text",
    "embed_texts",
    "knn",
    "report_similarity",
]

DEFAULT_DIMENSION = 256


@dataclass(frozen=True)
class EmbeddingProvider:
    """Where vectors come from: the builtin hasher or an HTTP encoder.

    External endpoints must serve GET {endpoint}/info returning
    {"dimension": D} and POST {endpoint}/embed mapping {"texts": [...]}
    to {"vectors": [[...]]}.
    """

    kind: str = "builtin_ngram"
    dimension: int = DEFAULT_DIMENSION
    endpoint: str | None = None
    batch_size: int = 64

    def __post_init__(self) -> None:
        if self.kind not in ("builtin_ngram", "external_http"):
            raise ValueError(f"unknown provider kind: {self.kind!r}")
        if self.kind == "external_http" and not self.endpoint:
            raise ValueError("external provider needs an endpoint")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")


def _char_ngrams(text: str, n: int = 3) -> list[str]:
    if len(text) < n:
        return [text] if text else []
    return [text[i : i + n] for i in range(len(text) - n + 1)]


def _embed_builtin(text: str, dimension: int) -> np.ndarray:
    vec = np.zeros(dimension, dtype=np.float64)
    for gram in _char_ngrams(text):
        idx = zlib.crc32(gram.encode("utf-8")) % dimension
        vec[idx] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def _handshake_dimension(provider: EmbeddingProvider) -> int:
    import requests

    resp = requests.get(f"{provider.endpoint}/info", timeout=30)
    resp.raise_for_status()
    return int(resp.json()["dimension"])


def _embed_external(
    texts: Sequence[str], provider: EmbeddingProvider
) -> np.ndarray:
    import requests

    declared = _handshake_dimension(provider)
    if declared != provider.dimension:
        raise ValueError(
            f"provider declares dimension {declared}, "
            f"configured {provider.dimension}"
        )
    rows: list[np.ndarray] = []
    for start in range(0, len(texts), provider.batch_size):
        batch = list(texts[start : start + provider.batch_size])
        resp = requests.post(
            f"{provider.endpoint}/embed", json={"texts": batch}, timeout=120
        )
        resp.raise_for_status()
        vectors = resp.json()["vectors"]
        if len(vectors) != len(batch):
            raise ValueError("provider returned wrong vector count")
        for v in vectors:
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != (provider.dimension,):
                raise ValueError(
                    f"provider vector has shape {arr.shape}, "
                    f"expected ({provider.dimension},)"
                )
            norm = float(np.linalg.norm(arr))
            if norm > 0.0:
                arr = arr / norm
            rows.append(arr)
    return np.stack(rows) if rows else np.zeros((0, provider.dimension))


def embed_text(
    text: str, provider: EmbeddingProvider | None = None
) -> np.ndarray:
    """Embed one text as a unit vector (zero vector for empty text)."""
    provider = provider or EmbeddingProvider()
    if provider.kind == "builtin_ngram":
        return _embed_builtin(text, provider.dimension)
    return _embed_external([text], provider)[0]


def embed_texts(
    texts: Sequence[str], provider: EmbeddingProvider | None = None
) -> np.ndarray:
    """Embed many texts into an (n, D) matrix of unit rows."""
    provider = provider or EmbeddingProvider()
    if provider.kind == "builtin_ngram":
        if not texts:
            return np.zeros((0, provider.dimension))
        return np.stack(
            [_embed_builtin(t, provider.dimension) for t in texts]
        )
    return _embed_external(texts, provider)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two normalized vectors, clamped to [-1, 1].

    Stored vectors are already unit (or zero for empty text), so this is
    a plain dot product. The both-zero case is defined as 0 with a
    warning rather than an error because empty prompts do occur in raw
    dumps.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 and nv == 0.0:
        warnings.warn("cosine of two zero vectors defined as 0", stacklevel=2)
        return 0.0
    if nu == 0.0 or nv == 0.0:
        return 0.0
    sim = float(np.dot(u, v))
    return max(-1.0, min(1.0, sim))


def knn(
    query: np.ndarray,
    corpus: np.ndarray,
    digests: Sequence[str],
    k: int,
) -> list[tuple[str, float]]:
    """Top-k most similar corpus rows: similarity desc, digest asc.

    Returns exactly min(k, |corpus|) pairs. The scan is a single
    matrix-vector product over unit rows; results match a brute-force
    per-row scan by construction.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.ndim != 2 or corpus.shape[0] == 0:
        raise ValueError("corpus must be a nonempty (n, D) matrix")
    if corpus.shape[0] != len(digests):
        raise ValueError("one digest per corpus row required")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (corpus.shape[1],):
        raise ValueError(
            f"dimension mismatch: query {query.shape}, corpus row "
            f"({corpus.shape[1]},)"
        )

    sims = np.clip(corpus @ query, -1.0, 1.0)
    order = sorted(
        range(len(digests)), key=lambda i: (-float(sims[i]), digests[i])
    )
    top = order[: min(k, len(digests))]
    return [(digests[i], float(sims[i])) for i in top]


def report_similarity(sim: float) -> float:
    """Similarity as reported to humans: negatives clamp to 0."""
    return max(0.0, sim)
