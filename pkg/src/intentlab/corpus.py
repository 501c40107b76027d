"""Utterance corpora and their embedding matrices.

Owns the dataset bookkeeping: JSON-lines corpus files, the EMB1 binary
embedding format, train/valid/test splits, and the known/unseen class
mask drawn per run seed.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

SPLITS = ("train", "valid", "test")
EMB_MAGIC = b"EMB1"
_HEADER = struct.Struct("<II")
_CRC = struct.Struct("<I")


def round_half_up(x: float) -> int:
    """Round a non-negative fraction to the nearest integer, halves up."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class UtteranceRecord:
    """One utterance: stable id, text, optional gold intent, split tag."""

    id: int
    text: str
    gold_label: Optional[str]
    split: str


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-aligned dense float matrix of sentence embeddings."""

    data: np.ndarray
    checksum: int

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CorpusConfig:
    """Run-level knobs recorded in every output artifact."""

    labeled_ratio: float
    known_class_ratio: float
    rng_seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.labeled_ratio <= 1.0:
            raise ValueError(f"labeled_ratio {self.labeled_ratio} outside (0, 1]")
        if not 0.0 < self.known_class_ratio <= 1.0:
            raise ValueError(
                f"known_class_ratio {self.known_class_ratio} outside (0, 1]"
            )


@dataclass(frozen=True)
class ClassMask:
    """Partition of the gold label set into known and unseen classes."""

    known_classes: frozenset[str]
    unseen_classes: frozenset[str]


def matrix_checksum(data: np.ndarray) -> int:
    """CRC32 of the float32 little-endian payload, as stored in EMB1."""
    return zlib.crc32(np.ascontiguousarray(data, dtype="<f4").tobytes())


def _record_to_obj(rec: UtteranceRecord, extra: Optional[dict] = None) -> dict:
    obj: dict = {"id": rec.id, "text": rec.text}
    if rec.gold_label is not None:
        obj["label"] = rec.gold_label
    obj["split"] = rec.split
    if extra:
        obj.update(extra)
    return obj


def record_line(rec: UtteranceRecord, extra: Optional[dict] = None) -> str:
    """Canonical JSON line for one record (key order id, text, label, split)."""
    return json.dumps(_record_to_obj(rec, extra), ensure_ascii=False)


def _parse_record(obj: dict, lineno: int) -> UtteranceRecord:
    where = f"line {lineno}"
    if not isinstance(obj, dict):
        raise ValueError(f"malformed record at {where}: not an object")
    rid = obj.get("id")
    if not isinstance(rid, int) or isinstance(rid, bool):
        raise ValueError(f"malformed record at {where}: id must be an integer")
    text = obj.get("text")
    if not isinstance(text, str) or not text:
        raise ValueError(f"malformed record at {where}: text must be non-empty")
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise ValueError(f"malformed record at {where}: label must be a string")
    split = obj.get("split")
    if split not in SPLITS:
        raise ValueError(f"malformed record at {where}: split must be one of {SPLITS}")
    return UtteranceRecord(id=rid, text=text, gold_label=label, split=split)


def iter_corpus_lines(path: str | Path) -> Iterator[tuple[UtteranceRecord, dict]]:
    """Yield (record, raw object) per non-empty line, validating as it goes."""
    seen: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed record at line {lineno}: {exc}") from exc
            rec = _parse_record(obj, lineno)
            if rec.id in seen:
                raise ValueError(f"duplicate id {rec.id} at line {lineno}")
            seen.add(rec.id)
            yield rec, obj


def read_corpus_file(path: str | Path) -> list[UtteranceRecord]:
    """Read and validate a JSON-lines corpus file."""
    return [rec for rec, _ in iter_corpus_lines(path)]


def write_corpus(
    records: Iterable[UtteranceRecord],
    path: str | Path,
    extras: Optional[dict[int, dict]] = None,
) -> None:
    """Write records as canonical JSON-lines; extras add per-id fields."""
    extras = extras or {}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(record_line(rec, extras.get(rec.id)))
            fh.write("\n")


def write_embeddings(data: np.ndarray, path: str | Path) -> int:
    """Write an EMB1 file; returns the payload CRC32."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("embedding data must be a 2D matrix")
    payload = arr.tobytes()
    crc = zlib.crc32(payload)
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(_HEADER.pack(arr.shape[0], arr.shape[1]))
        fh.write(payload)
        fh.write(_CRC.pack(crc))
    return crc


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read and validate an EMB1 file."""
    raw = Path(path).read_bytes()
    if raw[:4] != EMB_MAGIC:
        raise ValueError(f"{path}: not an EMB1 file")
    if len(raw) < 4 + _HEADER.size + _CRC.size:
        raise ValueError(f"{path}: truncated EMB1 file")
    rows, dim = _HEADER.unpack_from(raw, 4)
    start = 4 + _HEADER.size
    nbytes = rows * dim * 4
    if len(raw) != start + nbytes + _CRC.size:
        raise ValueError(f"{path}: EMB1 size mismatch for {rows}x{dim}")
    payload = raw[start : start + nbytes]
    (crc_stored,) = _CRC.unpack_from(raw, start + nbytes)
    if zlib.crc32(payload) != crc_stored:
        raise ValueError(f"{path}: EMB1 checksum mismatch")
    if dim < 2:
        raise ValueError(f"{path}: embedding dim {dim} < 2")
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, dim).astype(np.float64)
    bad = ~np.isfinite(data)
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise ValueError(f"{path}: non-finite embedding value at row {row}")
    return EmbeddingMatrix(data=data, checksum=crc_stored)


def expected_contiguous_ids(records: Sequence[UtteranceRecord]) -> None:
    """Require ids to be exactly 0..N-1 so id doubles as the matrix row."""
    ids = {r.id for r in records}
    if ids != set(range(len(records))):
        raise ValueError("record ids must form the contiguous range 0..N-1")


def load_corpus(
    path: str | Path, embedding_path: str | Path
) -> tuple[list[UtteranceRecord], EmbeddingMatrix]:
    """Load a corpus file and its row-aligned embedding matrix.

    Record id i owns matrix row i, so ids must be contiguous from 0.
    """
    records = read_corpus_file(path)
    emb = read_embeddings(embedding_path)
    if emb.rows != len(records):
        raise ValueError(
            f"row-count mismatch: corpus has {len(records)} records, "
            f"embeddings have {emb.rows} rows"
        )
    expected_contiguous_ids(records)
    return records, emb


def gold_classes(records: Iterable[UtteranceRecord]) -> list[str]:
    """Sorted gold label set over the train split."""
    return sorted(
        {r.gold_label for r in records if r.split == "train" and r.gold_label}
    )


def mask_classes(
    records: Iterable[UtteranceRecord], known_class_ratio: float, rng_seed: int
) -> ClassMask:
    """Draw the known/unseen class partition for one run seed."""
    classes = gold_classes(records)
    if not classes:
        raise ValueError("corpus has no gold labels on the train split")
    n_known = round_half_up(known_class_ratio * len(classes))
    if n_known == 0:
        raise ValueError(
            f"known_class_ratio {known_class_ratio} selects 0 of "
            f"{len(classes)} classes"
        )
    rng = np.random.default_rng(rng_seed)
    known = rng.choice(classes, size=n_known, replace=False)
    known_set = frozenset(str(c) for c in known)
    return ClassMask(
        known_classes=known_set,
        unseen_classes=frozenset(classes) - known_set,
    )


def labeled_pool(
    records: Iterable[UtteranceRecord], mask: ClassMask
) -> list[UtteranceRecord]:
    """Train records whose gold label is known; the seed-selection pool."""
    pool = [
        r
        for r in records
        if r.split == "train" and r.gold_label in mask.known_classes
    ]
    if not pool:
        raise ValueError("empty labeled pool: no train records in known classes")
    return pool
