"""File formats: embedding sets (binary, CSV, JSONL) and dendrogram JSON.

Binary layout (little-endian throughout), extension ``.sfse``:

    magic   4 bytes  b"SFSE"
    version u32      1
    flags   u32      bit0 = ids present, bit1 = labels present
    n       u32      row count
    d       u32      embedding dimension
    data    n*d      IEEE-754 binary32, row-major
    ids     n *      (u32 byte length + UTF-8 bytes)        when bit0
    labels  u8       level count L (1..4), then per level:  when bit1
              n * u32   label id per item
              u32       vocabulary size V
              V *       (u32 byte length + UTF-8 bytes)

CSV rows carry ``id``, optional contiguous label columns ``lv0..lv3``
(most specific first), then ``v0..v{d-1}``. JSONL rows are objects with
``id``, optional ``labels`` (most specific first), and ``vector``.

Loads validate eagerly and report a location (row, line, byte offset) in
every error. Embedding values cross the binary format as float32, so a
write-read round trip is the identity exactly when the in-memory values are
float32-representable; CSV and JSONL carry full float64 reprs.
"""
from __future__ import annotations

import base64
import hashlib
import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import Dendrogram, MergeEvent, SafariConfig
from .errors import DataError
from .subspace import SemanticFieldSubspace, ShiftBreakdown

MAGIC = b"SFSE"
BINARY_VERSION = 1
FLAG_IDS = 0x1
FLAG_LABELS = 0x2
MAX_LEVELS = 4

DENDROGRAM_FORMAT = "safari-dendrogram"
DENDROGRAM_VERSION = 1


@dataclass(frozen=True)
class LabelHierarchy:
    """Per-item label ids at each level, level 0 most specific.

    label_ids has shape (n, level_count); vocab[k][j] is the display name of
    label id j at level k.
    """

    label_ids: np.ndarray
    vocab: list[list[str]]

    def __post_init__(self):
        ids = np.asarray(self.label_ids, dtype=np.int64)
        if ids.ndim != 2:
            raise DataError("label_ids must be 2-D (items x levels)")
        if not 1 <= ids.shape[1] <= MAX_LEVELS:
            raise DataError(f"level count must be 1..{MAX_LEVELS}, got {ids.shape[1]}")
        if len(self.vocab) != ids.shape[1]:
            raise DataError("vocab must have one table per level")
        for k, table in enumerate(self.vocab):
            if ids.shape[0] and not (0 <= ids[:, k].min() and ids[:, k].max() < len(table)):
                raise DataError(f"level {k} contains a label id outside its vocabulary")
        object.__setattr__(self, "label_ids", ids)

    @property
    def level_count(self) -> int:
        return int(self.label_ids.shape[1])

    @property
    def n_items(self) -> int:
        return int(self.label_ids.shape[0])

    def names(self, level: int) -> list[str]:
        """Display names for every item at one level."""
        table = self.vocab[level]
        return [table[i] for i in self.label_ids[:, level]]

    def validate_nesting(self, on_violation: str = "error") -> None:
        """Check that items sharing a level-k label share the level-(k+1) label.

        on_violation: "error" raises, "warn" emits a warning and continues.
        """
        if on_violation not in ("error", "warn"):
            raise ValueError(f"on_violation must be 'error' or 'warn', got {on_violation!r}")
        for k in range(self.level_count - 1):
            fine = self.label_ids[:, k]
            coarse = self.label_ids[:, k + 1]
            seen: dict[int, int] = {}
            for item in range(self.n_items):
                f, c = int(fine[item]), int(coarse[item])
                if f in seen and seen[f] != c:
                    msg = (
                        f"label nesting violated at item {item}: level {k} class "
                        f"{self.vocab[k][f]!r} maps to both level {k + 1} classes "
                        f"{self.vocab[k + 1][seen[f]]!r} and {self.vocab[k + 1][c]!r}"
                    )
                    if on_violation == "error":
                        raise DataError(msg)
                    warnings.warn(msg)
                    seen[f] = c
                else:
                    seen.setdefault(f, c)


@dataclass(frozen=True)
class EmbeddingSet:
    """Validated embedding matrix with row ids and optional labels."""

    rows: np.ndarray
    ids: list[str]
    labels: LabelHierarchy | None = None

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DataError(f"embedding matrix must be non-empty 2-D, got shape {rows.shape}")
        bad = np.flatnonzero(~np.isfinite(rows).all(axis=1))
        if bad.size:
            raise DataError(f"non-finite embedding value at row {int(bad[0])}")
        zero = np.flatnonzero(np.linalg.norm(rows, axis=1) == 0.0)
        if zero.size:
            raise DataError(f"zero-norm embedding at row {int(zero[0])}")
        if len(self.ids) != rows.shape[0]:
            raise DataError(
                f"id count {len(self.ids)} does not match row count {rows.shape[0]}"
            )
        dup = _first_duplicate(self.ids)
        if dup is not None:
            raise DataError(f"duplicate id {dup!r}")
        if self.labels is not None and self.labels.n_items != rows.shape[0]:
            raise DataError(
                f"label count {self.labels.n_items} does not match row count {rows.shape[0]}"
            )
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def d(self) -> int:
        return int(self.rows.shape[1])

    def take(self, indices) -> "EmbeddingSet":
        """Row subset (by position) carrying ids and labels along."""
        idx = np.asarray(indices, dtype=np.int64)
        labels = None
        if self.labels is not None:
            labels = LabelHierarchy(self.labels.label_ids[idx], self.labels.vocab)
        return EmbeddingSet(
            rows=self.rows[idx],
            ids=[self.ids[i] for i in idx],
            labels=labels,
        )


def _first_duplicate(items):
    seen = set()
    for x in items:
        if x in seen:
            return x
        seen.add(x)
    return None


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    table = {".sfse": "binary", ".csv": "csv", ".jsonl": "jsonl"}
    if suffix not in table:
        raise DataError(
            f"cannot infer format from extension {suffix!r} (use .sfse, .csv, or .jsonl)"
        )
    return table[suffix]


def load_embeddings(path, format: str | None = None, nesting: str = "error") -> EmbeddingSet:
    """Read an embedding set; format defaults to the file extension.

    nesting controls what a label-coarsening violation does: "error" (default)
    or "warn".
    """
    fmt = format or infer_format(path)
    if fmt == "binary":
        es = _load_binary(path)
    elif fmt == "csv":
        es = _load_csv(path)
    elif fmt == "jsonl":
        es = _load_jsonl(path)
    else:
        raise DataError(f"unknown format {fmt!r}")
    if es.labels is not None:
        es.labels.validate_nesting(on_violation=nesting)
    return es


def save_embeddings(es: EmbeddingSet, path, format: str | None = None) -> None:
    fmt = format or infer_format(path)
    if fmt == "binary":
        _save_binary(es, path)
    elif fmt == "csv":
        _save_csv(es, path)
    elif fmt == "jsonl":
        _save_jsonl(es, path)
    else:
        raise DataError(f"unknown format {fmt!r}")


# -- binary ------------------------------------------------------------------


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.off = 0
        self.path = path

    def pull(self, count: int, what: str) -> bytes:
        if self.off + count > len(self.blob):
            raise DataError(
                f"{self.path}: truncated while reading {what} at byte offset {self.off}"
            )
        out = self.blob[self.off : self.off + count]
        self.off += count
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.pull(4, what))[0]

    def u8(self, what: str) -> int:
        return self.pull(1, what)[0]

    def string(self, what: str) -> str:
        length = self.u32(f"{what} length")
        raw = self.pull(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{self.path}: invalid UTF-8 in {what} at byte offset {self.off}") from exc


def _load_binary(path) -> EmbeddingSet:
    blob = Path(path).read_bytes()
    r = _Reader(blob, path)
    magic = r.pull(4, "magic")
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32("version")
    if version != BINARY_VERSION:
        raise DataError(f"{path}: unsupported version {version}, expected {BINARY_VERSION}")
    flags = r.u32("flags")
    n = r.u32("row count")
    d = r.u32("dimension")
    if n < 1 or d < 1:
        raise DataError(f"{path}: empty embedding set (n={n}, d={d})")
    raw = r.pull(4 * n * d, "embedding data")
    rows = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(n, d)

    if flags & FLAG_IDS:
        ids = [r.string(f"id {i}") for i in range(n)]
    else:
        ids = [str(i) for i in range(n)]

    labels = None
    if flags & FLAG_LABELS:
        level_count = r.u8("level count")
        if not 1 <= level_count <= MAX_LEVELS:
            raise DataError(f"{path}: level count {level_count} outside 1..{MAX_LEVELS}")
        per_level_ids = []
        vocab = []
        for lv in range(level_count):
            raw_ids = r.pull(4 * n, f"level {lv} label ids")
            per_level_ids.append(np.frombuffer(raw_ids, dtype="<u4").astype(np.int64))
            count = r.u32(f"level {lv} vocabulary size")
            vocab.append([r.string(f"level {lv} vocab entry {j}") for j in range(count)])
        labels = LabelHierarchy(np.stack(per_level_ids, axis=1), vocab)

    if r.off != len(blob):
        raise DataError(f"{path}: {len(blob) - r.off} trailing bytes at offset {r.off}")
    return EmbeddingSet(rows=rows, ids=ids, labels=labels)


def _pack_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _save_binary(es: EmbeddingSet, path) -> None:
    flags = FLAG_IDS | (FLAG_LABELS if es.labels is not None else 0)
    parts = [
        MAGIC,
        struct.pack("<IIII", BINARY_VERSION, flags, es.n, es.d),
        es.rows.astype("<f4").tobytes(order="C"),
    ]
    parts.extend(_pack_string(i) for i in es.ids)
    if es.labels is not None:
        lh = es.labels
        parts.append(struct.pack("<B", lh.level_count))
        for lv in range(lh.level_count):
            parts.append(lh.label_ids[:, lv].astype("<u4").tobytes())
            parts.append(struct.pack("<I", len(lh.vocab[lv])))
            parts.extend(_pack_string(s) for s in lh.vocab[lv])
    Path(path).write_bytes(b"".join(parts))


# -- csv ---------------------------------------------------------------------


def _label_columns(header: list[str]) -> int:
    count = 0
    for col in header[1:]:
        if col == f"lv{count}" and count < MAX_LEVELS:
            count += 1
        else:
            break
    return count


def _load_csv(path) -> EmbeddingSet:
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise DataError(f"{path}: first column must be 'id', got {header[:1]!r}")
        levels = _label_columns(header)
        vec_cols = header[1 + levels :]
        d = len(vec_cols)
        if d < 1 or vec_cols != [f"v{i}" for i in range(d)]:
            raise DataError(f"{path}: vector columns must be v0..v{{d-1}}, got {vec_cols[:3]!r}...")

        ids: list[str] = []
        names: list[list[str]] = []
        rows: list[list[float]] = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(rec)} fields, expected {len(header)}"
                )
            ids.append(rec[0])
            names.append(rec[1 : 1 + levels])
            try:
                rows.append([float(x) for x in rec[1 + levels :]])
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno} has a non-numeric vector value") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    labels = _names_to_hierarchy(names, levels)
    return EmbeddingSet(rows=np.asarray(rows), ids=ids, labels=labels)


def _names_to_hierarchy(names: list[list[str]], levels: int) -> LabelHierarchy | None:
    if levels == 0:
        return None
    vocab: list[list[str]] = [[] for _ in range(levels)]
    index: list[dict[str, int]] = [{} for _ in range(levels)]
    ids = np.empty((len(names), levels), dtype=np.int64)
    for i, row in enumerate(names):
        for k in range(levels):
            table = index[k]
            if row[k] not in table:
                table[row[k]] = len(vocab[k])
                vocab[k].append(row[k])
            ids[i, k] = table[row[k]]
    return LabelHierarchy(ids, vocab)


def _save_csv(es: EmbeddingSet, path) -> None:
    import csv

    levels = es.labels.level_count if es.labels is not None else 0
    header = ["id"] + [f"lv{k}" for k in range(levels)] + [f"v{i}" for i in range(es.d)]
    name_cols = [es.labels.names(k) for k in range(levels)] if es.labels is not None else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(es.n):
            rec = [es.ids[i]]
            rec.extend(col[i] for col in name_cols)
            rec.extend(repr(float(x)) for x in es.rows[i])
            writer.writerow(rec)


# -- jsonl -------------------------------------------------------------------


def _load_jsonl(path) -> EmbeddingSet:
    ids: list[str] = []
    names: list[list[str]] = []
    rows: list[list[float]] = []
    levels: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno} is not valid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
                raise DataError(f"{path}: line {lineno} must be an object with 'id' and 'vector'")
            vec = obj["vector"]
            if not isinstance(vec, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec
            ):
                raise DataError(f"{path}: line {lineno} has a non-numeric vector")
            if rows and len(vec) != len(rows[0]):
                raise DataError(
                    f"{path}: line {lineno} has dimension {len(vec)}, expected {len(rows[0])}"
                )
            row_labels = obj.get("labels", [])
            if not isinstance(row_labels, list) or not all(isinstance(x, str) for x in row_labels):
                raise DataError(f"{path}: line {lineno} labels must be a list of strings")
            if levels is None:
                levels = len(row_labels)
            elif len(row_labels) != levels:
                raise DataError(
                    f"{path}: line {lineno} has {len(row_labels)} labels, expected {levels}"
                )
            ids.append(str(obj["id"]))
            names.append(row_labels)
            rows.append([float(x) for x in vec])
    if not rows:
        raise DataError(f"{path}: no data rows")
    labels = _names_to_hierarchy(names, levels or 0)
    return EmbeddingSet(rows=np.asarray(rows), ids=ids, labels=labels)


def _save_jsonl(es: EmbeddingSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(es.n):
            obj: dict = {"id": es.ids[i]}
            if es.labels is not None:
                obj["labels"] = [
                    es.labels.vocab[k][es.labels.label_ids[i, k]]
                    for k in range(es.labels.level_count)
                ]
            obj["vector"] = [float(x) for x in es.rows[i]]
            fh.write(json.dumps(obj, allow_nan=False) + "\n")


# -- dendrogram --------------------------------------------------------------


def _f32_b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.asarray(arr, dtype="<f4").tobytes(order="C")).decode("ascii")


def _b64_f32(text: str, what: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise DataError(f"invalid base64 in {what}") from exc
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def _canonical(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def save_dendrogram(dendrogram: Dendrogram, path) -> None:
    """Serialize a dendrogram to JSON with a content digest.

    Basis matrices and per-index shift terms travel as base64 float32;
    scalar statistics keep full float64 precision.
    """
    events = []
    for ev in dendrogram.events:
        exact = None
        if ev.shift_exact is not None:
            exact = {
                "total": ev.shift_exact.total,
                "dis_sum": ev.shift_exact.dis_sum,
                "dc_sum": ev.shift_exact.dc_sum,
                "terms_rank": int(ev.shift_exact.dis_terms.shape[0]),
                "dis_terms_b64": _f32_b64(ev.shift_exact.dis_terms),
                "dc_terms_b64": _f32_b64(ev.shift_exact.dc_terms),
            }
        events.append(
            {
                "iteration": ev.iteration,
                "left_id": ev.left_id,
                "right_id": ev.right_id,
                "new_id": ev.new_id,
                "linkage_distance": ev.linkage_distance,
                "exact": exact,
                "approx": ev.shift_approx,
                "mu": ev.threshold_mu,
                "tau": ev.threshold_tau,
                "is_sfs": ev.is_sfs,
            }
        )
    registry = {}
    for iteration, sfs in dendrogram.sfs_registry.items():
        registry[str(iteration)] = {
            "rank": sfs.rank,
            "dim": sfs.ambient_dim,
            "basis_b64": _f32_b64(sfs.basis),
            "singular_values": [float(s) for s in sfs.singular_values],
            "member_count": sfs.member_count,
            "source_cluster_id": sfs.source_cluster_id,
            "iteration_created": sfs.iteration_created,
        }
    cfg = dendrogram.config
    payload = {
        "n_leaves": dendrogram.n_leaves,
        "config": {
            "window_size": cfg.window_size,
            "multiplier": cfg.multiplier,
            "shift_mode": cfg.shift_mode,
            "min_observations": cfg.min_observations,
            "seed": cfg.seed,
            "pair_strategy": cfg.pair_strategy,
        },
        "events": events,
        "sfs_registry": registry,
    }
    doc = {
        "format": DENDROGRAM_FORMAT,
        "version": DENDROGRAM_VERSION,
        "sha256": hashlib.sha256(_canonical(payload)).hexdigest(),
        "payload": payload,
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n", encoding="utf-8"
    )


def load_dendrogram(path) -> Dendrogram:
    """Read a dendrogram JSON, verifying the digest and structural invariants."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("format") != DENDROGRAM_FORMAT:
        raise DataError(f"{path}: not a dendrogram file")
    if doc.get("version") != DENDROGRAM_VERSION:
        raise DataError(f"{path}: unsupported version {doc.get('version')!r}")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise DataError(f"{path}: missing payload")
    digest = hashlib.sha256(_canonical(payload)).hexdigest()
    if digest != doc.get("sha256"):
        raise DataError(f"{path}: content digest mismatch (file corrupted or edited)")

    n_leaves = payload["n_leaves"]
    raw_events = payload["events"]
    if len(raw_events) != n_leaves - 1:
        raise DataError(
            f"{path}: {len(raw_events)} events for {n_leaves} leaves (expected {n_leaves - 1})"
        )
    cfg_d = payload["config"]
    config = SafariConfig(
        window_size=cfg_d["window_size"],
        multiplier=cfg_d["multiplier"],
        shift_mode=cfg_d["shift_mode"],
        min_observations=cfg_d["min_observations"],
        seed=cfg_d["seed"],
        pair_strategy=cfg_d.get("pair_strategy", "heap"),
    )

    events = []
    consumed: set[int] = set()
    for k, rec in enumerate(raw_events):
        if rec["iteration"] != k + 1:
            raise DataError(f"{path}: event {k} has iteration {rec['iteration']}, expected {k + 1}")
        for side in ("left_id", "right_id"):
            cid = rec[side]
            if cid in consumed:
                raise DataError(f"{path}: cluster id {cid} consumed twice (event {k})")
            consumed.add(cid)
        exact = None
        if rec["exact"] is not None:
            e = rec["exact"]
            exact = ShiftBreakdown(
                total=float(e["total"]),
                dis_terms=_b64_f32(e["dis_terms_b64"], "dis_terms"),
                dc_terms=_b64_f32(e["dc_terms_b64"], "dc_terms"),
                dis_sum=float(e["dis_sum"]),
                dc_sum=float(e["dc_sum"]),
            )
        events.append(
            MergeEvent(
                iteration=rec["iteration"],
                left_id=rec["left_id"],
                right_id=rec["right_id"],
                new_id=rec["new_id"],
                linkage_distance=float(rec["linkage_distance"]),
                shift_exact=exact,
                shift_approx=None if rec["approx"] is None else float(rec["approx"]),
                threshold_mu=float(rec["mu"]),
                threshold_tau=float(rec["tau"]),
                is_sfs=bool(rec["is_sfs"]),
            )
        )

    flagged = {ev.iteration for ev in events if ev.is_sfs}
    registry: dict[int, SemanticFieldSubspace] = {}
    for key, rec in payload["sfs_registry"].items():
        iteration = int(key)
        basis = _b64_f32(rec["basis_b64"], f"registry basis at iteration {iteration}")
        rank, dim = rec["rank"], rec["dim"]
        if basis.size != rank * dim:
            raise DataError(
                f"{path}: registry basis at iteration {iteration} has {basis.size} values, "
                f"expected {rank}x{dim}"
            )
        registry[iteration] = SemanticFieldSubspace(
            basis=basis.reshape(rank, dim),
            singular_values=np.asarray(rec["singular_values"], dtype=np.float64),
            member_count=rec["member_count"],
            source_cluster_id=rec["source_cluster_id"],
            iteration_created=rec["iteration_created"],
        )
    if set(registry) != flagged:
        raise DataError(f"{path}: SFS registry keys do not match flagged iterations")

    return Dendrogram(events=events, sfs_registry=registry, n_leaves=n_leaves, config=config)
