"""Corpus loading and header-field statistics.

Two sources are supported: a TREC-style index file mapping labels to
message files, and a directory of labeled emails where each file is
either a single message or an mbox-style concatenation.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import os
from collections import Counter
from dataclasses import dataclass, field

from .headers import EmailHeader, parse_headers, serialize_headers

log = logging.getLogger(__name__)

__all__ = [
    "Label",
    "CorpusRecord",
    "HeaderStats",
    "LoadReport",
    "load_trec_index",
    "load_labeled_dir",
    "header_frequencies",
    "top_k_fields",
    "corpus_digest",
]


class Label(enum.Enum):
    HAM = "ham"
    SPAM = "spam"
    PHISHING = "phishing"

    @property
    def is_anomalous(self) -> bool:
        return self is not Label.HAM


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    header: EmailHeader
    label: Label


@dataclass
class LoadReport:
    entries: int = 0
    loaded: int = 0
    skipped: int = 0


@dataclass
class HeaderStats:
    doc_freq: dict[str, int] = field(default_factory=dict)
    total_emails: int = 0


def _strip_mbox_postmark(raw: bytes) -> bytes:
    """Drop a leading mbox "From " envelope line if one is present."""
    if raw.startswith(b"From "):
        nl = raw.find(b"\n")
        return b"" if nl < 0 else raw[nl + 1 :]
    return raw


def load_trec_index(index_path: str, root: str) -> tuple[list[CorpusRecord], LoadReport]:
    """Load a "<label> <relative-path>" index; paths resolve against root.

    A missing index file is fatal; an individual missing or unreadable
    email file is logged, skipped, and counted in the returned report.
    """
    report = LoadReport()
    records: list[CorpusRecord] = []
    with open(index_path, "r", encoding="latin-1") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            report.entries += 1
            parts = line.split(None, 1)
            if len(parts) != 2 or parts[0].lower() not in ("spam", "ham"):
                raise ValueError(f"bad index line: {line!r}")
            label = Label.SPAM if parts[0].lower() == "spam" else Label.HAM
            rel = parts[1]
            path = os.path.normpath(os.path.join(root, rel))
            try:
                with open(path, "rb") as mail:
                    raw = mail.read()
            except OSError as exc:
                log.warning("skipping %s: %s", rel, exc)
                report.skipped += 1
                continue
            header = parse_headers(_strip_mbox_postmark(raw))
            records.append(CorpusRecord(rel, header, label))
            report.loaded += 1
    records.sort(key=lambda r: r.id)
    return records, report


def _split_mbox(raw: bytes) -> list[bytes]:
    """Split an mbox blob at every line starting "From "."""
    messages: list[bytes] = []
    current: list[bytes] = []
    for line in raw.split(b"\n"):
        if line.startswith(b"From "):
            if current:
                messages.append(b"\n".join(current))
            current = []
            continue
        current.append(line)
    if current:
        messages.append(b"\n".join(current))
    return messages


def load_labeled_dir(dir_path: str, label: Label) -> tuple[list[CorpusRecord], LoadReport]:
    """Load every message under a directory with a fixed label.

    Files beginning with an mbox "From " envelope line are split into
    their member messages; anything else is one message per file.
    """
    report = LoadReport()
    records: list[CorpusRecord] = []
    paths = []
    for base, _dirs, names in os.walk(dir_path):
        for name in names:
            paths.append(os.path.join(base, name))
    paths.sort()
    for path in paths:
        report.entries += 1
        rel = os.path.relpath(path, dir_path)
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            log.warning("skipping %s: %s", rel, exc)
            report.skipped += 1
            continue
        if raw.startswith(b"From "):
            for i, blob in enumerate(_split_mbox(raw)):
                records.append(CorpusRecord(f"{rel}:{i}", parse_headers(blob), label))
        else:
            records.append(CorpusRecord(rel, parse_headers(raw), label))
        report.loaded += 1
    if not records:
        log.warning("no messages found under %s", dir_path)
    records.sort(key=lambda r: r.id)
    return records, report


def header_frequencies(records: list[CorpusRecord]) -> HeaderStats:
    """Document frequency per field name: one count per email, however
    many times the field repeats inside it."""
    counts: Counter[str] = Counter()
    for rec in records:
        counts.update(set(rec.header.names()))
    return HeaderStats(dict(counts), len(records))


def top_k_fields(stats: HeaderStats, k: int) -> list[str]:
    """The k most common field names, ties broken lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ordered = sorted(stats.doc_freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return [name for name, _ in ordered[:k]]


def corpus_digest(records: list[CorpusRecord]) -> str:
    """Content hash of a corpus: ids, labels, and parsed headers."""
    h = hashlib.sha256()
    for rec in sorted(records, key=lambda r: r.id):
        h.update(rec.id.encode("utf-8", "surrogateescape"))
        h.update(b"\x00")
        h.update(rec.label.value.encode())
        h.update(b"\x00")
        h.update(serialize_headers(rec.header))
        h.update(bytes([rec.header.malformed_line_count % 256]))
    return h.hexdigest()
