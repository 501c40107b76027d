"""Paraphrase-based minority oversampling and whole-set augmentation.

Borderline minority instances are found by majority-vote over their m
nearest labeled neighbors, then paraphrased. The paraphrase model and
the label-consistency classifier live behind provider interfaces:
deterministic stubs ship here, real models are reached over HTTP.
"""

from __future__ import annotations

import importlib.resources
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Union

import numpy as np
import requests

from .corpus import EmbeddingMatrix, UtteranceRecord

CATEGORIES = ("noise", "danger", "safe")
MODES = ("paraphrasing", "paramote")


class ParaphraseError(RuntimeError):
    """Provider failure, annotated with the source record when known."""

    def __init__(self, message: str, source_id: Optional[int] = None):
        super().__init__(message)
        self.source_id = source_id


@dataclass(frozen=True)
class NeighborhoodVerdict:
    """Neighborhood vote for one minority instance."""

    instance_id: int
    m: int
    m_prime: int
    category: str


@dataclass(frozen=True)
class DangerSet:
    """Borderline members of the minority class."""

    members: tuple[int, ...]

    @property
    def d_num(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ParaphraseCandidate:
    """One requested paraphrase and its accept/reject outcome."""

    source_id: int
    text: str
    provider: str
    accepted: bool
    reject_reason: Optional[str] = None


@dataclass(frozen=True)
class OversampleResult:
    """New records plus the full candidate audit trail."""

    records: tuple[UtteranceRecord, ...]
    candidates: tuple[ParaphraseCandidate, ...]
    provenance: dict[int, int]


class ParaphraseProvider(Protocol):
    name: str

    def paraphrase(self, text: str, n: int, seed: int) -> list[str]: ...


class LabelChecker(Protocol):
    def predict(self, text: str, source: UtteranceRecord) -> str: ...


def _emb_rows(emb: Union[EmbeddingMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(emb, EmbeddingMatrix):
        return emb.data
    return np.asarray(emb, dtype=np.float64)


def classify_borderline(
    labeled: Sequence[UtteranceRecord],
    emb: Union[EmbeddingMatrix, np.ndarray],
    minority: str,
    m: int,
) -> list[NeighborhoodVerdict]:
    """Categorize each minority instance by its m nearest neighbors.

    Neighbors come from the whole labeled set, Euclidean in the current
    feature space, self excluded, distance ties to the lower id. With
    m' majority neighbors: noise iff m' = m, danger iff m/2 <= m' < m,
    safe otherwise.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m >= len(labeled):
        raise ValueError(f"m={m} must be smaller than the training set ({len(labeled)})")
    rows = _emb_rows(emb)
    ordered = sorted(labeled, key=lambda r: r.id)
    ids = np.asarray([r.id for r in ordered])
    x = rows[ids]
    is_minority = np.asarray([r.gold_label == minority for r in ordered])
    if not is_minority.any():
        raise ValueError(f"minority class {minority!r} has no labeled instances")
    verdicts = []
    for pos in np.flatnonzero(is_minority):
        d2 = ((x - x[pos]) ** 2).sum(axis=1)
        d2[pos] = np.inf  # exclude self
        order = np.lexsort((ids, d2))[:m]
        m_prime = int((~is_minority[order]).sum())
        if m_prime == m:
            category = "noise"
        elif m_prime >= m / 2.0:
            category = "danger"
        else:
            category = "safe"
        verdicts.append(
            NeighborhoodVerdict(
                instance_id=int(ids[pos]), m=m, m_prime=m_prime, category=category
            )
        )
    return verdicts


def danger_set(verdicts: Sequence[NeighborhoodVerdict]) -> DangerSet:
    return DangerSet(
        members=tuple(v.instance_id for v in verdicts if v.category == "danger")
    )


def _derive_seed(rng_seed: int, source_id: int, salt: int = 0) -> int:
    return int(
        np.random.SeedSequence(entropy=(rng_seed, source_id, salt)).generate_state(1)[0]
    )


def _request_all(
    sources: Sequence[UtteranceRecord],
    provider: ParaphraseProvider,
    n_each: int,
    rng_seed: int,
    salt: int,
    max_workers: int,
) -> list[tuple[UtteranceRecord, list[str]]]:
    """Issue provider calls, possibly concurrently, order-stable by id."""

    def call(rec: UtteranceRecord) -> list[str]:
        try:
            return provider.paraphrase(
                rec.text, n=n_each, seed=_derive_seed(rng_seed, rec.id, salt)
            )
        except ParaphraseError:
            raise
        except Exception as exc:
            raise ParaphraseError(
                f"provider {provider.name!r} failed for id {rec.id}: {exc}",
                source_id=rec.id,
            ) from exc

    ordered = sorted(sources, key=lambda r: r.id)
    if max_workers <= 1 or len(ordered) <= 1:
        return [(rec, call(rec)) for rec in ordered]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        texts = list(pool.map(call, ordered))
    return list(zip(ordered, texts))


def oversample_paraphrase(
    labeled: Sequence[UtteranceRecord],
    emb: Union[EmbeddingMatrix, np.ndarray],
    minority: str,
    m: int,
    provider: ParaphraseProvider,
    mode: str,
    checker: Optional[LabelChecker] = None,
    rng_seed: int = 0,
    next_id: Optional[int] = None,
    max_workers: int = 1,
) -> OversampleResult:
    """One oversampling pass: a paraphrase per danger member.

    Mode "paraphrasing" accepts every non-empty paraphrase; "paramote"
    additionally requires the checker to predict the minority label.
    New records carry the minority label and provenance to their source.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "paramote" and checker is None:
        raise ValueError("paramote mode requires a label checker")
    verdicts = classify_borderline(labeled, emb, minority, m)
    danger = danger_set(verdicts)
    by_id = {r.id: r for r in labeled}
    sources = [by_id[i] for i in danger.members]
    responses = _request_all(sources, provider, 1, rng_seed, 0, max_workers)
    if next_id is None:
        next_id = max(r.id for r in labeled) + 1
    candidates: list[ParaphraseCandidate] = []
    records: list[UtteranceRecord] = []
    provenance: dict[int, int] = {}
    for rec, texts in responses:
        text = texts[0] if texts else ""
        if not text:
            candidates.append(
                ParaphraseCandidate(
                    source_id=rec.id, text=text, provider=provider.name,
                    accepted=False, reject_reason="provider_empty",
                )
            )
            continue
        if mode == "paramote" and checker.predict(text, rec) != minority:
            candidates.append(
                ParaphraseCandidate(
                    source_id=rec.id, text=text, provider=provider.name,
                    accepted=False, reject_reason="label_mismatch",
                )
            )
            continue
        candidates.append(
            ParaphraseCandidate(
                source_id=rec.id, text=text, provider=provider.name, accepted=True
            )
        )
        records.append(
            UtteranceRecord(id=next_id, text=text, gold_label=minority, split="train")
        )
        provenance[next_id] = rec.id
        next_id += 1
    return OversampleResult(
        records=tuple(records), candidates=tuple(candidates), provenance=provenance
    )


def augment(
    labeled: Sequence[UtteranceRecord],
    factor: int,
    provider: ParaphraseProvider,
    checker: LabelChecker,
    rng_seed: int = 0,
    next_id: Optional[int] = None,
    max_workers: int = 1,
) -> OversampleResult:
    """Whole-set augmentation: factor-1 checked paraphrases per record."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return OversampleResult(records=(), candidates=(), provenance={})
    responses = _request_all(labeled, provider, factor - 1, rng_seed, 1, max_workers)
    if next_id is None:
        next_id = max(r.id for r in labeled) + 1
    candidates: list[ParaphraseCandidate] = []
    records: list[UtteranceRecord] = []
    provenance: dict[int, int] = {}
    for rec, texts in responses:
        for text in texts[: factor - 1]:
            if not text:
                candidates.append(
                    ParaphraseCandidate(
                        source_id=rec.id, text=text, provider=provider.name,
                        accepted=False, reject_reason="provider_empty",
                    )
                )
                continue
            if checker.predict(text, rec) != rec.gold_label:
                candidates.append(
                    ParaphraseCandidate(
                        source_id=rec.id, text=text, provider=provider.name,
                        accepted=False, reject_reason="label_mismatch",
                    )
                )
                continue
            candidates.append(
                ParaphraseCandidate(
                    source_id=rec.id, text=text, provider=provider.name, accepted=True
                )
            )
            records.append(
                UtteranceRecord(
                    id=next_id, text=text, gold_label=rec.gold_label, split="train"
                )
            )
            provenance[next_id] = rec.id
            next_id += 1
    return OversampleResult(
        records=tuple(records), candidates=tuple(candidates), provenance=provenance
    )


def balance_dataset(
    labeled: Sequence[UtteranceRecord],
    emb: Union[EmbeddingMatrix, np.ndarray],
    m: int,
    provider: ParaphraseProvider,
    mode: str,
    checker: Optional[LabelChecker] = None,
    rng_seed: int = 0,
    next_id: Optional[int] = None,
    max_passes: int = 5,
    max_workers: int = 1,
) -> tuple[OversampleResult, np.ndarray]:
    """Oversample every minority class toward the median class size.

    A class with labeled count below the median is minority; classes are
    processed largest deficit first, one paraphrase per danger member
    per pass, until the class reaches the median, a pass produces
    nothing, or the pass cap is hit. Returns the combined result and the
    embedding matrix extended with one inherited row per new record
    (no encoder in scope, so a paraphrase reuses its source's vector).
    """
    rows = _emb_rows(emb)
    current = list(labeled)
    counts: dict[str, int] = {}
    for r in current:
        if r.gold_label is not None:
            counts[r.gold_label] = counts.get(r.gold_label, 0) + 1
    median = float(np.median(np.asarray(sorted(counts.values()))))
    minorities = sorted(
        (c for c, k in counts.items() if k < median),
        key=lambda c: (-(median - counts[c]), c),
    )
    if next_id is None:
        next_id = max(r.id for r in current) + 1
    all_records: list[UtteranceRecord] = []
    all_candidates: list[ParaphraseCandidate] = []
    provenance: dict[int, int] = {}
    for cls in minorities:
        for _ in range(max_passes):
            if counts[cls] >= median:
                break
            result = oversample_paraphrase(
                current, rows, cls, m, provider, mode,
                checker=checker, rng_seed=rng_seed, next_id=next_id,
                max_workers=max_workers,
            )
            all_candidates.extend(result.candidates)
            if not result.records:
                break
            budget = int(np.ceil(median - counts[cls]))
            kept = result.records[:budget]
            for rec in kept:
                source = result.provenance[rec.id]
                provenance[rec.id] = source
                rows = np.vstack([rows, rows[source][None, :]])
                current.append(rec)
                all_records.append(rec)
                counts[cls] += 1
                next_id = rec.id + 1
    return (
        OversampleResult(
            records=tuple(all_records),
            candidates=tuple(all_candidates),
            provenance=provenance,
        ),
        rows,
    )


class EchoProvider:
    """Returns the input text unchanged; the identity stub."""

    name = "echo"

    def paraphrase(self, text: str, n: int, seed: int) -> list[str]:
        return [text] * n


class SynonymProvider:
    """Deterministic word-swap against a bundled synonym lexicon."""

    name = "synonym"

    def __init__(self, lexicon_path: Optional[str] = None):
        if lexicon_path is None:
            source = (
                importlib.resources.files("intentlab") / "data" / "synonyms.txt"
            ).read_text(encoding="utf-8")
        else:
            with open(lexicon_path, encoding="utf-8") as fh:
                source = fh.read()
        self.table: dict[str, list[str]] = {}
        for line in source.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, *alts = line.split()
            if alts:
                self.table[word] = alts

    def paraphrase(self, text: str, n: int, seed: int) -> list[str]:
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            words = text.split(" ")
            swapped = []
            for w in words:
                alts = self.table.get(w.lower())
                if alts:
                    swapped.append(str(rng.choice(alts)))
                else:
                    swapped.append(w)
            out.append(" ".join(swapped))
        return out


class HttpParaphraseProvider:
    """Client for an external paraphrase service.

    POST {base_url}/paraphrase with {text, n, seed}; expects a JSON body
    {"paraphrases": [...]}. Retries transient failures.
    """

    name = "http"

    def __init__(self, base_url: str, timeout: float = 10.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def paraphrase(self, text: str, n: int, seed: int) -> list[str]:
        last: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}/paraphrase",
                    json={"text": text, "n": n, "seed": seed},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return list(resp.json()["paraphrases"])
            except Exception as exc:
                last = exc
        raise ParaphraseError(f"paraphrase service unreachable: {last}")


class ConstantChecker:
    """Stub checker that predicts one fixed label for everything."""

    def __init__(self, label: str):
        self.label = label

    def predict(self, text: str, source: UtteranceRecord) -> str:
        return self.label


class SourceLabelChecker:
    """Permissive stub: echoes the source record's own label."""

    def predict(self, text: str, source: UtteranceRecord) -> str:
        return source.gold_label or ""


class NearestNeighborChecker:
    """1-NN over the labeled set in embedding space.

    No encoder is in scope, so a candidate text is judged at its source
    record's embedding row; the nearest other labeled instance votes.
    """

    def __init__(
        self,
        labeled: Sequence[UtteranceRecord],
        emb: Union[EmbeddingMatrix, np.ndarray],
    ):
        rows = _emb_rows(emb)
        ordered = sorted(labeled, key=lambda r: r.id)
        self.ids = np.asarray([r.id for r in ordered])
        self.x = rows[self.ids]
        self.labels = [r.gold_label for r in ordered]

    def predict(self, text: str, source: UtteranceRecord) -> str:
        hits = np.flatnonzero(self.ids == source.id)
        if len(hits) == 0:
            raise ValueError("nearest-neighbor checker requires a known source id")
        pos = int(hits[0])
        d2 = ((self.x - self.x[pos]) ** 2).sum(axis=1)
        d2[pos] = np.inf  # the source itself never votes
        order = np.lexsort((self.ids, d2))
        return self.labels[int(order[0])] or ""
