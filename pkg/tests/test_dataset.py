import logging

import pytest
from hypothesis import given, settings, strategies as st

from opvec.dataset import (
    ContractRecord,
    CorpusError,
    SplitSpec,
    load_corpus,
    n_train_for,
    read_labels,
    scan_directory,
    split,
    write_labels,
)


def records(n, labels=None):
    return [ContractRecord(f"c{i:04d}", None, labels(i) if labels else {"a": i % 2}) for i in range(n)]


def profile_labels(i):
    # 58 reentrancy, 37 access control, 15 with both: 80 vulnerable of 500
    return {"reentrancy": int(i < 58), "access_control": int(43 <= i < 80)}


def test_corpus_profile_counts(tmp_path):
    recs = records(500, profile_labels)
    for r in recs:
        (tmp_path / f"{r.source_id}.hex").write_text("0x6001\n")
    write_labels(tmp_path / "labels.csv", recs, ["reentrancy", "access_control"])
    corpus = load_corpus(tmp_path, tmp_path / "labels.csv")
    Y = corpus.label_matrix()
    assert len(corpus.records) == 500
    assert int(Y[:, 0].sum()) == 58 and int(Y[:, 1].sum()) == 37
    assert int((Y.sum(1) > 0).sum()) == 80


def test_split_500():
    recs = records(500)
    train, test = split(recs, SplitSpec(0.7, seed=5))
    assert (len(train), len(test)) == (350, 150)
    ids = {r.source_id for r in train} | {r.source_id for r in test}
    assert len(ids) == 500
    assert not {r.source_id for r in train} & {r.source_id for r in test}
    again = split(list(reversed(recs)), SplitSpec(0.7, seed=5))
    assert again == (train, test)
    assert split(recs, SplitSpec(0.7, seed=6)) != (train, test)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 300), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
def test_split_partition(n, frac, seed):
    train, test = split(records(n), SplitSpec(frac, seed))
    assert len(train) == n_train_for(n, frac)
    assert 1 <= len(train) <= n - 1 and len(train) + len(test) == n
    assert [r.source_id for r in train] == sorted(r.source_id for r in train)


def test_half_up_rounding():
    assert n_train_for(5, 0.7) == 4  # 3.5 rounds up
    assert n_train_for(2, 0.01) == 1 and n_train_for(2, 0.99) == 1


def test_stratified_split_keeps_ratio():
    recs = records(100, lambda i: {"a": int(i < 20)})
    train, test = split(recs, SplitSpec(0.7, 1, stratify_by="a"))
    assert sum(r.labels["a"] for r in train) == 14
    assert sum(r.labels["a"] for r in test) == 6


def test_bad_fraction():
    with pytest.raises(ValueError):
        SplitSpec(1.0)


def test_label_file_errors(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("source_id,a\nx,1\nx,0\n")
    with pytest.raises(CorpusError, match=":3"):
        read_labels(p)
    p.write_text("source_id,a\nx,2\n")
    with pytest.raises(CorpusError, match="0 or 1"):
        read_labels(p)
    p.write_text("id,a\n")
    with pytest.raises(CorpusError):
        read_labels(p)


def test_join_reports_mismatches(tmp_path, caplog):
    (tmp_path / "a.txt").write_text("STOP\n")
    (tmp_path / "a.hex").write_text("0x00\n")
    (tmp_path / "b.hex").write_text("0x00\n")
    (tmp_path / "l.csv").write_text("source_id,x\na,1\nc,0\n")
    assert scan_directory(tmp_path)["a"].suffix == ".txt"
    with caplog.at_level(logging.WARNING):
        corpus = load_corpus(tmp_path, tmp_path / "l.csv")
    assert [r.source_id for r in corpus.records] == ["a"]
    assert corpus.missing_files == ["c"] and corpus.unlabeled == ["b"]
    assert "no file" in caplog.text
