"""Dense mention vectors: storage, token averaging, cosine similarity.

On disk vectors are float32 for compactness; in memory everything is float64
so similarity thresholds compare stably.

File formats (little-endian throughout):

* ``MWE1`` mention vectors: magic (4 bytes), count (u64), dim (u32), then
  count*dim float32 values, row-major by mention_id.
* ``MWT1`` token vectors: magic, count (u64, mentions), dim (u32), count u32
  token counts, then the concatenated token rows (float32), grouped by
  mention.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError

MENTION_MAGIC = b"MWE1"
TOKEN_MAGIC = b"MWT1"


class EmbeddingMatrix:
    """One float64 row per mention, aligned to corpus mention order."""

    def __init__(self, vectors):
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValidationError(f"expected a 2-D matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("embedding matrix contains NaN or Inf")
        norms = np.linalg.norm(arr, axis=1)
        if (norms == 0).any():
            bad = int(np.flatnonzero(norms == 0)[0])
            raise ValidationError(f"row {bad} is all-zero")
        self.vectors = arr
        self._unit = None

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def row(self, mention_id):
        return self.vectors[mention_id]

    def unit(self):
        """Row-normalized copy (cached); rows then have unit L2 norm."""
        if self._unit is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            self._unit = self.vectors / norms
        return self._unit

    def subset(self, mention_ids):
        return EmbeddingMatrix(self.vectors[np.asarray(mention_ids)])


@dataclass
class TokenGroup:
    mention_id: int
    token_vectors: list


def average_tokens(group):
    """Unweighted elementwise mean of a mention's token vectors."""
    if not group.token_vectors:
        raise ValidationError(f"mention {group.mention_id}: empty token group")
    arr = np.asarray(group.token_vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(
            f"mention {group.mention_id}: token vectors have mixed dimensions"
        )
    return arr.mean(axis=0)


def cosine_similarity(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


def cosine_distance(a, b):
    return 1.0 - cosine_similarity(a, b)


def _read_exact(fh, n, path, what):
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated {what} (wanted {n} bytes, got {len(data)})")
    return data


def save_embeddings(matrix, path):
    vectors = matrix.vectors if isinstance(matrix, EmbeddingMatrix) else np.asarray(matrix)
    count, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(MENTION_MAGIC)
        fh.write(struct.pack("<QI", count, dim))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())


def save_token_groups(groups, path):
    dim = len(groups[0].token_vectors[0]) if groups else 0
    with open(path, "wb") as fh:
        fh.write(TOKEN_MAGIC)
        fh.write(struct.pack("<QI", len(groups), dim))
        counts = np.asarray([len(g.token_vectors) for g in groups], dtype="<u4")
        fh.write(counts.tobytes())
        for g in groups:
            fh.write(np.ascontiguousarray(g.token_vectors, dtype="<f4").tobytes())


def load_token_groups(path):
    """Read an MWT1 file into per-mention token groups."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, path, "magic")
        if magic != TOKEN_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {TOKEN_MAGIC!r}")
        count, dim = struct.unpack("<QI", _read_exact(fh, 12, path, "header"))
        counts = np.frombuffer(
            _read_exact(fh, 4 * count, path, "token-count table"), dtype="<u4"
        )
        total = int(counts.sum())
        payload = fh.read()
    if len(payload) != total * dim * 4:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {total * dim * 4}"
        )
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(total, dim)
    if not np.isfinite(flat).all():
        raise FormatError(f"{path}: token vectors contain NaN or Inf")
    groups = []
    offset = 0
    for mention_id, c in enumerate(counts):
        c = int(c)
        if c == 0:
            raise FormatError(f"{path}: mention {mention_id} has zero tokens")
        groups.append(TokenGroup(mention_id, list(flat[offset : offset + c])))
        offset += c
    return groups


def load_embeddings(path):
    """Read mention vectors; MWT1 token files are averaged per mention."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic == TOKEN_MAGIC:
            fh.close()
            groups = load_token_groups(path)
            rows = np.asarray([average_tokens(g) for g in groups])
            try:
                return EmbeddingMatrix(rows)
            except ValidationError as exc:
                raise FormatError(f"{path}: {exc}") from exc
        if magic != MENTION_MAGIC:
            raise FormatError(
                f"{path}: bad magic {magic!r}, expected {MENTION_MAGIC!r} or {TOKEN_MAGIC!r}"
            )
        count, dim = struct.unpack("<QI", _read_exact(fh, 12, path, "header"))
        payload = fh.read()
    if len(payload) != count * dim * 4:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {count * dim * 4}"
        )
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(count, dim)
    if not np.isfinite(arr).all():
        raise FormatError(f"{path}: vectors contain NaN or Inf")
    try:
        return EmbeddingMatrix(arr)
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc
