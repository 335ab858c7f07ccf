from __future__ import annotations

import csv
import random

import numpy as np
import pytest

from headerscan.corpus import CorpusRecord, Label
from headerscan.features import (
    CHAIN_BY_THEN_FROM,
    CHAIN_FROM_THEN_BY,
    DOMAIN_MATCH_ONLY,
    FULL,
    apply_scaler,
    export_matrix_csv,
    extract,
    extract_matrix,
    fit_scaler,
    fit_schema,
    load_schema,
    prune_single_valued,
    save_schema,
    schema_from_dict,
    schema_to_dict,
    subset_schema,
)
from headerscan.headers import parse_headers


def _rec(i: int, raw: bytes, label=Label.HAM) -> CorpusRecord:
    return CorpusRecord(f"m{i}", parse_headers(raw), label)


BASIC = [
    _rec(0, b"From: a@x.org\r\nTo: b@y.org\r\nDate: Tue, 1 May 2007 10:00:00 -0400\r\n"
            b"Message-ID: <1@x.org>\r\n\r\n"),
    _rec(1, b"From: c@z.org\r\nTo: d@y.org\r\nDate: Tue, 1 May 2007 11:00:00 -0400\r\n"
            b"Message-ID: <2@z.org>\r\n\r\n"),
    _rec(2, b"From: e@w.org\r\nTo: f@y.org\r\nDate: Tue, 1 May 2007 12:00:00 +0000\r\n\r\n"),
]


def test_domain_match_only_schema_is_six_comparisons():
    schema = fit_schema(BASIC, k=50, feature_set=DOMAIN_MATCH_ONLY)
    assert len(schema.descriptors) == 6
    assert all(d.category == "comparison" for d in schema.descriptors)


def test_full_schema_counts_66_with_50_fields():
    fields = "".join(f"F{i:02d}: v\r\n" for i in range(50)).encode()
    records = [_rec(i, fields + b"\r\n") for i in range(4)]
    schema = fit_schema(records, k=50, feature_set=FULL)
    assert len(schema.top_fields) == 50
    assert len(schema.descriptors) == 50 + 6 + 4 + 6


def test_mode_timezone_majority():
    records = [
        _rec(i, f"Date: Tue, 1 May 2007 10:00:0{i} -0400\r\n\r\n".encode())
        for i in range(7)
    ] + [
        _rec(10 + i, f"Date: Tue, 1 May 2007 10:00:0{i} +0900\r\n\r\n".encode())
        for i in range(3)
    ]
    schema = fit_schema(records, k=5)
    assert schema.mode_timezone == "-0400"


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        fit_schema([], k=50)


def _value(schema, vec, name):
    return vec[schema.names.index(name)]


def test_missing_message_id_coordinate():
    schema = fit_schema(BASIC, k=10)
    assert "missing:message-id" in schema.names
    vec = extract(BASIC[2], schema)
    assert _value(schema, vec, "missing:message-id") == 1.0
    assert _value(schema, extract(BASIC[0], schema), "missing:message-id") == 0.0


def test_hop_count_counts_received_fields():
    schema = fit_schema(BASIC, k=10)
    h = _rec(9, b"Received: by a; 1 May 2007 10:00:00 +0000\r\n"
                b"Received: by b; 1 May 2007 09:00:00 +0000\r\n"
                b"Received: by c; 1 May 2007 08:00:00 +0000\r\n\r\n")
    assert _value(schema, extract(h, schema), "hop_count") == 3.0


def test_received_chain_consistency_paper_direction():
    schema = fit_schema(BASIC, k=10)
    good = _rec(9, b"Received: from relay.b.com by mx.a.com\r\n"
                   b"Received: from mx.a.com by origin.c.com\r\n\r\n")
    assert _value(schema, extract(good, schema), "received_chain_consistent") == 1.0
    bad = _rec(9, b"Received: from relay.b.com by mx.a.com\r\n"
                  b"Received: from mx.b.com by origin.c.com\r\n\r\n")
    assert _value(schema, extract(bad, schema), "received_chain_consistent") == 0.0


def test_received_chain_transpose_direction():
    schema = fit_schema(BASIC, k=10, chain_direction=CHAIN_FROM_THEN_BY)
    good = _rec(9, b"Received: from handoff.example by mx.final\r\n"
                   b"Received: from origin.example by handoff.example\r\n\r\n")
    assert _value(schema, extract(good, schema), "received_chain_consistent") == 1.0


def test_received_chain_vacuous_cases_are_consistent():
    schema = fit_schema(BASIC, k=10)
    for raw in [b"\r\n", b"Received: by only.one\r\n\r\n",
                b"Received: with SMTP\r\nReceived: with SMTP\r\n\r\n"]:
        assert _value(schema, extract(_rec(9, raw), schema),
                      "received_chain_consistent") == 1.0


def test_domain_match_codes():
    schema = fit_schema(BASIC, k=10)
    h = _rec(9, b"From: a@a.org\r\nMessage-ID: <x@a.org>\r\nReturn-Path: <b@b.net>\r\n\r\n")
    vec = extract(h, schema)
    assert _value(schema, vec, "domain_match:from:message-id") == 1.0
    assert _value(schema, vec, "domain_match:from:return-path") == 0.0
    assert _value(schema, vec, "domain_match:from:reply-to") == 2.0


def test_timezone_and_msgid_mode_features():
    schema = fit_schema(BASIC, k=10)
    assert schema.mode_timezone == "-0400"
    vec = extract(BASIC[0], schema)
    assert _value(schema, vec, "timezone_mismatch") == 0.0
    vec = extract(BASIC[2], schema)
    assert _value(schema, vec, "timezone_mismatch") == 1.0
    no_date = extract(_rec(9, b"From: a@x.org\r\n\r\n"), schema)
    assert _value(schema, no_date, "timezone_mismatch") == 1.0
    assert _value(schema, no_date, "date_parses") == 0.0
    assert _value(schema, no_date, "msgid_domain_mismatch") == 2.0


def test_content_type_html_codes():
    schema = fit_schema(BASIC, k=10)
    html = _rec(9, b"Content-Type: text/html; charset=utf-8\r\n\r\n")
    plain = _rec(9, b"Content-Type: text/plain\r\n\r\n")
    absent = _rec(9, b"From: a@x.org\r\n\r\n")
    assert _value(schema, extract(html, schema), "content_type_html") == 1.0
    assert _value(schema, extract(plain, schema), "content_type_html") == 0.0
    assert _value(schema, extract(absent, schema), "content_type_html") == 2.0


def test_recipient_counts():
    schema = fit_schema(BASIC, k=10)
    h = _rec(9, b"From: a@x.org\r\nTo: b@y.org, c@y.org\r\nCc: d@z.org\r\n\r\n")
    vec = extract(h, schema)
    assert _value(schema, vec, "to_count") == 2.0
    assert _value(schema, vec, "cc_count") == 1.0
    assert _value(schema, vec, "recipient_count") == 4.0


def test_field_counts():
    schema = fit_schema(BASIC, k=10)
    h = _rec(9, b"A: 1\r\nA: 2\r\nB: 3\r\n\r\n")
    vec = extract(h, schema)
    assert _value(schema, vec, "field_count") == 3.0
    assert _value(schema, vec, "distinct_field_count") == 2.0


def test_encoding_ranges_property():
    rng = random.Random(17)
    schema = fit_schema(BASIC, k=10)
    binary = {i for i, d in enumerate(schema.descriptors) if d.encoding == "binary01"}
    ordinal3 = {i for i, d in enumerate(schema.descriptors)
                if d.encoding == "ordinal" and d.category in ("comparison", "header_value")}
    counting = {i for i, d in enumerate(schema.descriptors) if d.category == "counting"}
    for _ in range(300):
        raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 200)))
        vec = extract(parse_headers(raw), schema)
        assert np.isfinite(vec).all()
        for i in binary:
            assert vec[i] in (0.0, 1.0)
        for i in ordinal3:
            assert vec[i] in (0.0, 1.0, 2.0)
        for i in counting:
            assert vec[i] >= 0 and vec[i] == int(vec[i])


def test_schema_fit_order_invariant():
    rng = random.Random(3)
    records = list(BASIC)
    base = fit_schema(records, k=10).fingerprint
    for _ in range(4):
        rng.shuffle(records)
        assert fit_schema(records, k=10).fingerprint == base


def test_fingerprint_changes_with_content():
    a = fit_schema(BASIC, k=10)
    b = fit_schema(BASIC, k=3)
    c = fit_schema(BASIC, k=10, chain_direction=CHAIN_FROM_THEN_BY)
    assert len({a.fingerprint, b.fingerprint, c.fingerprint}) == 3


def test_one_hot_expansion():
    plain = fit_schema(BASIC, k=10, feature_set=DOMAIN_MATCH_ONLY)
    hot = fit_schema(BASIC, k=10, feature_set=DOMAIN_MATCH_ONLY, one_hot=True)
    # 5 ordinal pairs expand to 3 binaries each; the chain feature stays
    assert len(hot.descriptors) == 5 * 3 + 1
    h = _rec(9, b"From: a@a.org\r\nMessage-ID: <x@a.org>\r\n\r\n")
    vec = extract(h, hot)
    names = hot.names
    assert vec[names.index("domain_match:from:message-id=1")] == 1.0
    assert vec[names.index("domain_match:from:message-id=0")] == 0.0
    assert vec[names.index("domain_match:from:reply-to=2")] == 1.0
    assert plain.fingerprint != hot.fingerprint


def test_scaler_hand_values():
    params = fit_scaler(np.array([[0.0], [0.0], [2.0], [2.0]]))
    assert params.mean[0] == 1.0
    assert params.stddev[0] == 1.0


def test_scaler_constant_column_degeneracy():
    params = fit_scaler(np.array([[5.0], [5.0], [5.0]]))
    assert params.mean[0] == 5.0
    assert params.stddev[0] == 1.0
    out = apply_scaler(np.array([[5.0], [5.0]]), params)
    assert np.all(out == 0.0)


def test_scaler_random_matrix_moments():
    rng = np.random.default_rng(12)
    m = rng.normal(3.0, 2.5, size=(100, 10))
    params = fit_scaler(m)
    scaled = apply_scaler(m, params)
    assert np.abs(scaled.mean(axis=0)).max() < 1e-9
    assert np.abs(scaled.std(axis=0) - 1.0).max() < 1e-9


def test_apply_scaler_hand_example():
    from headerscan.features import ScalerParams
    params = ScalerParams(np.array([1.0]), np.array([2.0]))
    assert apply_scaler(np.array([3.0]), params)[0] == 1.0


def test_apply_scaler_length_mismatch():
    params = fit_scaler(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        apply_scaler(np.zeros(5), params)


def test_prune_single_valued():
    schema = fit_schema(BASIC, k=10)
    matrix = extract_matrix(BASIC, schema)
    pruned, smaller, dropped = prune_single_valued(schema, matrix)
    assert smaller.shape[1] == len(pruned.descriptors)
    assert len(dropped) == len(schema.descriptors) - len(pruned.descriptors)
    for j in range(smaller.shape[1]):
        assert not np.all(smaller[:, j] == smaller[0, j])
    assert pruned.fingerprint != schema.fingerprint


def test_subset_schema_keeps_order_and_extracts():
    schema = fit_schema(BASIC, k=10)
    names = ["hop_count", "missing:message-id", "domain_match:from:return-path"]
    sub, indices = subset_schema(schema, names)
    assert [schema.descriptors[i].name for i in indices] == sub.names
    full = extract(BASIC[0], schema)
    small = extract(BASIC[0], sub)
    assert np.array_equal(full[indices], small)


def test_subset_schema_unknown_name():
    schema = fit_schema(BASIC, k=10)
    with pytest.raises(KeyError):
        subset_schema(schema, ["nope"])


def test_schema_roundtrip_dict_and_file(tmp_path):
    schema = fit_schema(BASIC, k=10)
    again = schema_from_dict(schema_to_dict(schema))
    assert again == schema
    matrix = extract_matrix(BASIC, schema)
    scaler = fit_scaler(matrix)
    path = str(tmp_path / "schema.json")
    save_schema(path, schema, scaler)
    loaded, loaded_scaler = load_schema(path)
    assert loaded == schema
    assert np.array_equal(loaded_scaler.mean, scaler.mean)
    # train/serve consistency: extraction against the persisted schema
    for rec in BASIC:
        assert np.array_equal(extract(rec, loaded), extract(rec, schema))


def test_matrix_csv_export(tmp_path):
    schema = fit_schema(BASIC, k=10)
    matrix = extract_matrix(BASIC, schema)
    path = str(tmp_path / "m.csv")
    export_matrix_csv(path, matrix, [r.label for r in BASIC], schema)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == schema.names + ["label"]
    assert len(rows) == 1 + len(BASIC)
    assert rows[1][-1] == "ham"
    got = np.array([[float(v) for v in row[:-1]] for row in rows[1:]])
    assert np.array_equal(got, matrix)
