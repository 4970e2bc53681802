"""Text similarity for the hub registry.

Near-duplicate rejection uses token 3-gram shingles with Jaccard overlap;
query ranking uses a deterministic feature-hashing embedder with cosine
similarity. Both are embedding-model-free and fully reproducible: token
hashing goes through SHA-256, never Python's salted ``hash``.
"""

from __future__ import annotations

import hashlib
import math
import re
from typing import Iterable, Mapping, Protocol

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def shingles(text: str, size: int = 3) -> frozenset[str]:
    """Token n-gram shingles. Texts shorter than one shingle collapse to a
    single shingle so that short strings stay comparable."""
    tokens = tokenize(text)
    if not tokens:
        return frozenset()
    if len(tokens) < size:
        return frozenset({" ".join(tokens)})
    return frozenset(
        " ".join(tokens[i:i + size]) for i in range(len(tokens) - size + 1)
    )


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)


class ShingleIndex:
    """Inverted shingle index for near-duplicate lookups.

    Candidate retrieval walks the buckets of the probe's shingles and
    counts shared shingles per stored document, which yields the exact
    Jaccard similarity in one pass (|A & B| from the counter, sizes known).
    """

    def __init__(self, size: int = 3) -> None:
        self.size = size
        self._buckets: dict[str, list[int]] = {}
        self._sizes: dict[int, int] = {}
        self._keys: dict[int, str] = {}
        self._next = 0

    def __len__(self) -> int:
        return len(self._sizes)

    def add(self, key: str, text: str) -> None:
        doc = self._next
        self._next += 1
        sh = shingles(text, self.size)
        self._sizes[doc] = len(sh)
        self._keys[doc] = key
        for s in sorted(sh):
            self._buckets.setdefault(s, []).append(doc)

    def query(self, text: str, threshold: float = 0.0) -> list[tuple[str, float]]:
        """Stored keys with Jaccard similarity >= threshold, best first.

        With a positive threshold, candidates whose size alone rules them
        out are skipped before scoring (|A & B| <= min sizes bounds Jaccard).
        """
        sh = shingles(text, self.size)
        if not sh:
            return []
        shared: dict[int, int] = {}
        for s in sorted(sh):
            for doc in self._buckets.get(s, ()):
                shared[doc] = shared.get(doc, 0) + 1
        n = len(sh)
        results = []
        for doc, inter in shared.items():
            size = self._sizes[doc]
            if threshold > 0.0 and min(n, size) < threshold * max(n, size):
                continue
            union = n + size - inter
            sim = inter / union if union else 1.0
            if sim >= threshold:
                results.append((doc, sim))
        results.sort(key=lambda pair: (-pair[1], pair[0]))
        return [(self._keys[doc], sim) for doc, sim in results]

    def max_similarity(self, text: str) -> float:
        hits = self.query(text)
        return hits[0][1] if hits else 0.0

    def has_similar(self, text: str, threshold: float) -> bool:
        return bool(self.query(text, threshold))


class EmbeddingProvider(Protocol):
    """Pluggable text embedder; the hub only needs ``embed``.

    Vectors are sparse maps from bucket index to weight.
    """

    def embed(self, text: str) -> Mapping[int, float]: ...


class FeatureHashingEmbedder:
    """Deterministic bag-of-tokens embedder.

    Each token is placed in a SHA-256-derived bucket with a hash-derived
    sign; the sparse vector is L2-normalized. Cosine similarity over these
    vectors behaves like (signed) token overlap.
    """

    def __init__(self, dim: int = 2 ** 20) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._token_cache: dict[str, tuple[int, float]] = {}

    def _bucket(self, token: str) -> tuple[int, float]:
        cached = self._token_cache.get(token)
        if cached is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            index = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            cached = (index, sign)
            if len(self._token_cache) < 1_000_000:
                self._token_cache[token] = cached
        return cached

    def embed(self, text: str) -> dict[int, float]:
        vec: dict[int, float] = {}
        for token in tokenize(text):
            index, sign = self._bucket(token)
            vec[index] = vec.get(index, 0.0) + sign
        norm = math.sqrt(sum(v * v for v in vec.values()))
        if norm > 0:
            vec = {k: v / norm for k, v in vec.items()}
        return vec


def cosine(u: Mapping[int, float], v: Mapping[int, float]) -> float:
    if len(u) > len(v):
        u, v = v, u
    dot = sum(weight * v.get(index, 0.0) for index, weight in u.items())
    nu = math.sqrt(sum(a * a for a in u.values()))
    nv = math.sqrt(sum(b * b for b in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def keyword_overlap(keywords: Iterable[str], text: str) -> float:
    """Fraction of keywords present in the text's token set, in [0, 1]."""
    wanted = [k for k in (kw.lower().strip() for kw in keywords) if k]
    if not wanted:
        return 0.0
    have = set(tokenize(text))
    hits = sum(1 for k in wanted if k in have)
    return hits / len(wanted)
