from __future__ import annotations

import random

import pytest

from headerscan.corpus import (
    CorpusRecord,
    HeaderStats,
    Label,
    corpus_digest,
    header_frequencies,
    load_labeled_dir,
    load_trec_index,
    top_k_fields,
)
from headerscan.headers import parse_headers


def _write(path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def test_trec_index_maps_labels(tmp_path):
    _write(tmp_path / "data" / "inmail.1", b"From: a@b.com\r\n\r\nbody")
    _write(tmp_path / "data" / "inmail.2", b"From: c@d.com\r\n\r\nbody")
    (tmp_path / "index").write_text("spam data/inmail.1\nham data/inmail.2\n")
    records, report = load_trec_index(str(tmp_path / "index"), str(tmp_path))
    assert [r.label for r in records] == [Label.SPAM, Label.HAM]
    assert report.entries == 2 and report.loaded == 2 and report.skipped == 0


def test_trec_missing_file_skipped_and_counted(tmp_path):
    _write(tmp_path / "data" / "inmail.1", b"From: a@b.com\r\n\r\n")
    (tmp_path / "index").write_text("spam data/inmail.1\nham data/gone\n")
    records, report = load_trec_index(str(tmp_path / "index"), str(tmp_path))
    assert len(records) == 1
    assert report.skipped == 1
    assert report.loaded + report.skipped == report.entries


def test_trec_missing_index_fatal(tmp_path):
    with pytest.raises(OSError):
        load_trec_index(str(tmp_path / "nope"), str(tmp_path))


def test_trec_bad_label_rejected(tmp_path):
    (tmp_path / "index").write_text("virus data/inmail.1\n")
    with pytest.raises(ValueError):
        load_trec_index(str(tmp_path / "index"), str(tmp_path))


def test_trec_label_case_insensitive_and_postmark_stripped(tmp_path):
    _write(tmp_path / "m1", b"From spammer@x.com Mon Apr 9 2007\nSubject: hi\n\n")
    (tmp_path / "index").write_text("SPAM m1\n")
    records, _ = load_trec_index(str(tmp_path / "index"), str(tmp_path))
    assert records[0].label is Label.SPAM
    assert records[0].header.names() == ["subject"]
    assert records[0].header.malformed_line_count == 0


def test_labeled_dir_single_files(tmp_path):
    for i in range(3):
        _write(tmp_path / f"mail{i}.eml", b"Subject: x\r\n\r\n")
    records, report = load_labeled_dir(str(tmp_path), Label.PHISHING)
    assert len(records) == 3
    assert all(r.label is Label.PHISHING for r in records)
    assert report.loaded == 3


def test_labeled_dir_mbox_split(tmp_path):
    mbox = (
        b"From a@x.com Mon Jan 1 00:00:00 2007\n"
        b"Subject: first\n\nbody\n"
        b"From b@y.com Mon Jan 1 00:00:01 2007\n"
        b"Subject: second\n\nbody\n"
    )
    _write(tmp_path / "box", mbox)
    records, _ = load_labeled_dir(str(tmp_path), Label.PHISHING)
    assert len(records) == 2
    assert sorted(r.header.get("subject") for r in records) == ["first", "second"]
    assert records[0].id != records[1].id


def test_labeled_dir_empty_warns(tmp_path, caplog):
    records, report = load_labeled_dir(str(tmp_path), Label.HAM)
    assert records == []
    assert report.loaded == 0


def test_records_sorted_by_id(tmp_path):
    for name in ["zz.eml", "aa.eml", "mm.eml"]:
        _write(tmp_path / name, b"Subject: x\r\n\r\n")
    records, _ = load_labeled_dir(str(tmp_path), Label.HAM)
    assert [r.id for r in records] == sorted(r.id for r in records)


def _rec(i, raw, label=Label.HAM):
    return CorpusRecord(f"m{i}", parse_headers(raw), label)


def test_header_frequencies_document_counts():
    records = [
        _rec(0, b"From: a@b.c\r\nX-Mailer: foo\r\n\r\n"),
        _rec(1, b"From: d@e.f\r\n\r\n"),
    ]
    stats = header_frequencies(records)
    assert stats.doc_freq == {"from": 2, "x-mailer": 1}
    assert stats.total_emails == 2


def test_header_frequencies_repeated_field_counts_once():
    records = [_rec(0, b"Received: a\r\nReceived: b\r\nReceived: c\r\n\r\n")]
    assert header_frequencies(records).doc_freq == {"received": 1}


def test_header_frequencies_permutation_invariant():
    rng = random.Random(5)
    records = [
        _rec(i, f"A: 1\r\nB-{i % 3}: x\r\n\r\n".encode()) for i in range(20)
    ]
    base = header_frequencies(records).doc_freq
    for _ in range(5):
        rng.shuffle(records)
        assert header_frequencies(records).doc_freq == base


def test_top_k_tie_broken_lexicographically():
    stats = HeaderStats({"a": 5, "b": 3, "c": 3}, 5)
    assert top_k_fields(stats, 2) == ["a", "b"]
    assert top_k_fields(stats, 3) == ["a", "b", "c"]


def test_top_k_larger_than_field_count():
    stats = HeaderStats({"a": 1}, 1)
    assert top_k_fields(stats, 50) == ["a"]


def test_top_k_matches_brute_force_sort():
    rng = random.Random(11)
    freq = {f"f{i:03d}": rng.randint(0, 30) for i in range(80)}
    stats = HeaderStats(freq, 100)
    oracle = [n for n, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))]
    for k in (1, 10, 50, 80):
        assert top_k_fields(stats, k) == oracle[:k]


def test_corpus_digest_stable_and_content_sensitive():
    a = [_rec(0, b"From: x@y.z\r\n\r\n"), _rec(1, b"To: q@r.s\r\n\r\n")]
    assert corpus_digest(a) == corpus_digest(list(reversed(a)))
    b = [_rec(0, b"From: x@y.z\r\n\r\n"), _rec(1, b"To: q@r.DIFFERENT\r\n\r\n")]
    assert corpus_digest(a) != corpus_digest(b)
