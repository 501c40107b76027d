"""Persistent human-labeling session state.

A session owns the corpus reference, the 2D coordinates, the current
label assignments with provenance, and an action log whose replay
reproduces the assignments exactly. Bulk labeling selects points by a
boundary-inclusive even-odd polygon test.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .. import corpus as corpus_mod
from .._kernels import polygon_mask
from ..corpus import UtteranceRecord
from ..project2d import ProjectionCoords

PROVENANCES = ("gold", "bulk", "single")
ACTION_KINDS = ("bulk_polygon", "single", "undo", "relabel")
SNAPSHOT_EVERY = 50


@dataclass(frozen=True)
class LabelAction:
    """One labeling mutation; identified by a monotone sequence number."""

    seq: int
    kind: str
    label: Optional[str]
    affected_ids: tuple[int, ...]
    polygon: Optional[tuple[tuple[float, float], ...]] = None
    old_label: Optional[str] = None
    timestamp: float = 0.0

    def to_obj(self) -> dict:
        obj: dict = {
            "seq": self.seq,
            "kind": self.kind,
            "label": self.label,
            "affected_ids": list(self.affected_ids),
            "timestamp": self.timestamp,
        }
        if self.polygon is not None:
            obj["polygon"] = [list(v) for v in self.polygon]
        if self.old_label is not None:
            obj["old_label"] = self.old_label
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "LabelAction":
        polygon = obj.get("polygon")
        return cls(
            seq=obj["seq"],
            kind=obj["kind"],
            label=obj.get("label"),
            affected_ids=tuple(obj.get("affected_ids", ())),
            polygon=tuple((v[0], v[1]) for v in polygon) if polygon else None,
            old_label=obj.get("old_label"),
            timestamp=obj.get("timestamp", 0.0),
        )


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, p3, p4) -> bool:
    """Proper or improper intersection of segments p1p2 and p3p4."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, p3):
        return True
    if o2 == 0 and on_seg(p1, p2, p4):
        return True
    if o3 == 0 and on_seg(p3, p4, p1):
        return True
    if o4 == 0 and on_seg(p3, p4, p2):
        return True
    return False


def validate_polygon(polygon: Sequence[Sequence[float]]) -> np.ndarray:
    """Require a simple polygon with >= 3 vertices and nonzero area."""
    verts = np.asarray(polygon, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
        raise ValueError("polygon needs at least 3 [x, y] vertices")
    if not np.isfinite(verts).all():
        raise ValueError("polygon vertices must be finite")
    if abs(polygon_area(verts)) == 0.0:
        raise ValueError("degenerate polygon: zero area")
    n = len(verts)
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex
            b1, b2 = verts[j], verts[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                raise ValueError("self-intersecting polygon rejected")
    return verts


def points_in_polygon(
    coords: Union[ProjectionCoords, np.ndarray],
    polygon: Sequence[Sequence[float]],
    ids: Optional[Sequence[int]] = None,
) -> list[int]:
    """Ids of points inside the polygon (boundary counts), ascending."""
    verts = validate_polygon(polygon)
    points = coords.points if isinstance(coords, ProjectionCoords) else coords
    mask = polygon_mask(points, verts)
    if ids is None:
        hit = np.flatnonzero(mask)
    else:
        hit = np.asarray(ids)[mask]
    return sorted(int(i) for i in hit)


class SessionStore:
    """Append-only action log plus periodic snapshot on disk."""

    def __init__(self, root: Union[str, Path], session_id: str):
        self.dir = Path(root) / session_id
        self.dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.dir / "actions.log"
        self.snapshot_path = self.dir / "snapshot.json"

    def append(self, obj: dict) -> None:
        with open(self.log_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(obj))
            fh.write("\n")
            fh.flush()

    def write_snapshot(self, seq: int, effective: list[dict]) -> None:
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps({"seq": seq, "actions": effective}), encoding="utf-8"
        )
        tmp.replace(self.snapshot_path)

    def load_effective(self) -> tuple[list[dict], int]:
        """Snapshot plus tail replay; undo records pop the stack."""
        effective: list[dict] = []
        last_seq = 0
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            effective = list(snap["actions"])
            last_seq = snap["seq"]
        if self.log_path.exists():
            with open(self.log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    obj = json.loads(line)
                    if obj["seq"] <= last_seq:
                        continue
                    last_seq = obj["seq"]
                    if obj["kind"] == "undo":
                        if effective:
                            effective.pop()
                    else:
                        effective.append(obj)
        return effective, last_seq


class LabelSession:
    """Labeling state: assignments, action log, optional persistence.

    Mutations are serialized through one lock (single writer). Gold
    labels come from the corpus and are never overwritten. When debug
    is set, every mutation re-verifies that replaying the log from the
    base state reproduces the assignments.
    """

    def __init__(
        self,
        session_id: str,
        records: Sequence[UtteranceRecord],
        coords: ProjectionCoords,
        clusters: Optional[dict[int, int]] = None,
        store: Optional[SessionStore] = None,
        base_assignments: Optional[dict[int, tuple[str, str]]] = None,
        debug: bool = False,
        snapshot_every: int = SNAPSHOT_EVERY,
    ):
        if coords.rows != len(records):
            raise ValueError(
                f"coords rows ({coords.rows}) do not match corpus size ({len(records)})"
            )
        self.session_id = session_id
        self.records = sorted(records, key=lambda r: r.id)
        self.coords = coords
        self.clusters = clusters or {}
        self.store = store
        self.debug = debug
        self.snapshot_every = snapshot_every
        self.dirty = False
        self._lock = threading.Lock()
        self._ids = [r.id for r in self.records]
        self._by_id = {r.id: r for r in self.records}
        self._base: dict[int, tuple[str, str]] = {
            r.id: (r.gold_label, "gold") for r in self.records if r.gold_label
        }
        if base_assignments:
            for rid, (label, prov) in base_assignments.items():
                if prov != "gold":
                    self._base[rid] = (label, prov)
        self.effective_actions: list[LabelAction] = []
        self._seq = 0
        self._mutations_since_snapshot = 0
        if store is not None:
            loaded, seq = store.load_effective()
            self.effective_actions = [LabelAction.from_obj(o) for o in loaded]
            self._seq = seq
        self.assignments = self._replay(self.effective_actions)

    # -- state machine ---------------------------------------------------

    def _replay(self, actions: Sequence[LabelAction]) -> dict[int, tuple[str, str]]:
        state = dict(self._base)
        for action in actions:
            if action.kind == "bulk_polygon":
                for rid in action.affected_ids:
                    state[rid] = (action.label, "bulk")
            elif action.kind == "single":
                for rid in action.affected_ids:
                    state[rid] = (action.label, "single")
            elif action.kind == "relabel":
                for rid in action.affected_ids:
                    prev = state.get(rid)
                    if prev is not None and prev[1] != "gold":
                        state[rid] = (action.label, prev[1])
        return state

    def _verify_replay(self) -> None:
        replayed = self._replay(self.effective_actions)
        if replayed != self.assignments:
            raise AssertionError("action log replay diverged from assignments")

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _commit(self, action: LabelAction) -> None:
        # Persist before mutating so a crash never loses an acked action.
        if self.store is not None:
            self.store.append(action.to_obj())
        self.effective_actions.append(action)
        self.assignments = self._replay(self.effective_actions)
        self.dirty = True
        self._mutations_since_snapshot += 1
        if (
            self.store is not None
            and self._mutations_since_snapshot >= self.snapshot_every
        ):
            self.store.write_snapshot(
                self._seq, [a.to_obj() for a in self.effective_actions]
            )
            self._mutations_since_snapshot = 0
        if self.debug:
            self._verify_replay()

    # -- mutations -------------------------------------------------------

    def apply_bulk_label(
        self, polygon: Sequence[Sequence[float]], label: str
    ) -> int:
        """Label every in-polygon, non-gold point; returns affected count."""
        if not label:
            raise ValueError("label must be non-empty")
        with self._lock:
            inside = points_in_polygon(self.coords, polygon, ids=self._ids)
            affected = tuple(
                rid
                for rid in inside
                if self.assignments.get(rid, (None, None))[1] != "gold"
            )
            if not affected:
                return 0
            self._commit(
                LabelAction(
                    seq=self._next_seq(),
                    kind="bulk_polygon",
                    label=label,
                    affected_ids=affected,
                    polygon=tuple((float(x), float(y)) for x, y in polygon),
                    timestamp=time.time(),
                )
            )
            return len(affected)

    def apply_single_label(self, rid: int, label: str) -> int:
        """Label one point; gold points are left untouched."""
        if not label:
            raise ValueError("label must be non-empty")
        with self._lock:
            if rid not in self._by_id:
                raise KeyError(f"unknown id {rid}")
            if self.assignments.get(rid, (None, None))[1] == "gold":
                return 0
            self._commit(
                LabelAction(
                    seq=self._next_seq(),
                    kind="single",
                    label=label,
                    affected_ids=(rid,),
                    timestamp=time.time(),
                )
            )
            return 1

    def relabel(self, old_label: str, new_label: str) -> int:
        """Rename a non-gold label everywhere it is assigned."""
        if not new_label:
            raise ValueError("label must be non-empty")
        with self._lock:
            affected = tuple(
                rid
                for rid, (label, prov) in sorted(self.assignments.items())
                if label == old_label and prov != "gold"
            )
            if not affected:
                return 0
            self._commit(
                LabelAction(
                    seq=self._next_seq(),
                    kind="relabel",
                    label=new_label,
                    old_label=old_label,
                    affected_ids=affected,
                    timestamp=time.time(),
                )
            )
            return len(affected)

    def undo(self) -> LabelAction:
        """Remove the last effective action; returns the reverted action."""
        with self._lock:
            if not self.effective_actions:
                raise ValueError("empty log: nothing to undo")
            if self.store is not None:
                self.store.append(
                    {"seq": self._next_seq(), "kind": "undo", "timestamp": time.time()}
                )
            else:
                self._next_seq()
            reverted = self.effective_actions.pop()
            self.assignments = self._replay(self.effective_actions)
            self.dirty = True
            if self.debug:
                self._verify_replay()
            return reverted

    # -- views -----------------------------------------------------------

    def stats(self) -> dict[str, int]:
        counts = {"gold": 0, "bulk": 0, "single": 0}
        for label, prov in self.assignments.values():
            counts[prov] += 1
        counts["unlabeled"] = len(self.records) - sum(counts.values())
        counts["total"] = len(self.records)
        counts["actions"] = len(self.effective_actions)
        return counts

    def export_lines(self) -> tuple[str, dict[str, int]]:
        """Labeled corpus as canonical JSON-lines plus summary counts."""
        lines = []
        summary = {"gold": 0, "bulk": 0, "single": 0, "unlabeled": 0}
        for rec in self.records:
            assigned = self.assignments.get(rec.id)
            if assigned is None:
                summary["unlabeled"] += 1
                out = UtteranceRecord(
                    id=rec.id, text=rec.text, gold_label=None, split=rec.split
                )
                lines.append(corpus_mod.record_line(out))
            else:
                label, prov = assigned
                summary[prov] += 1
                out = UtteranceRecord(
                    id=rec.id, text=rec.text, gold_label=label, split=rec.split
                )
                lines.append(corpus_mod.record_line(out, {"provenance": prov}))
        return "\n".join(lines) + "\n", summary

    def export_labeled(self, path: Union[str, Path]) -> dict[str, int]:
        """Write the labeled corpus; summary counts sum to corpus size."""
        text, summary = self.export_lines()
        Path(path).write_text(text, encoding="utf-8", newline="\n")
        return summary


def import_labeled(
    path: Union[str, Path],
    coords: ProjectionCoords,
    session_id: str = "imported",
    store: Optional[SessionStore] = None,
    debug: bool = False,
) -> LabelSession:
    """Rebuild a session from an exported labeled corpus.

    Rows whose provenance is bulk or single enter the session's base
    state (not its action log); gold rows stay gold on the records.
    """
    records: list[UtteranceRecord] = []
    base: dict[int, tuple[str, str]] = {}
    for rec, obj in corpus_mod.iter_corpus_lines(path):
        prov = obj.get("provenance")
        if prov is not None and prov not in PROVENANCES:
            raise ValueError(f"unknown provenance {prov!r} for id {rec.id}")
        if rec.gold_label is not None and prov in ("bulk", "single"):
            base[rec.id] = (rec.gold_label, prov)
            rec = UtteranceRecord(
                id=rec.id, text=rec.text, gold_label=None, split=rec.split
            )
        records.append(rec)
    return LabelSession(
        session_id=session_id,
        records=records,
        coords=coords,
        store=store,
        base_assignments=base,
        debug=debug,
    )
