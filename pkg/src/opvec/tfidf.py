"""Bigram counting and TF-IDF vectorization over a fixed bigram universe.

For a contract with bigram counts ``c_t`` and ``D = sum(c_t)`` bigrams in
total, and a training corpus of ``N`` contracts of which ``n_t`` contain
bigram ``t``::

    tf(t)    = c_t / D
    idf(t)   = ln(N / (n_t + 1))
    value(t) = tf(t) * idf(t)

The logarithm is natural. The ``+ 1`` is kept even though it makes the
weight of a bigram present in every training contract slightly negative.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .disasm import OpcodeSequence
from .simplify import SimplifiedTokenSequence, SimplifiedVocabulary

log = logging.getLogger(__name__)

NGRAM_N = 2


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class BigramUniverse:
    tokens: tuple[str, ...]
    bigrams: tuple[str, ...]

    @cached_property
    def index(self) -> dict[str, int]:
        return {b: i for i, b in enumerate(self.bigrams)}

    def __len__(self) -> int:
        return len(self.bigrams)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.bigrams).encode()).hexdigest()


@dataclass(frozen=True)
class BigramCounts:
    counts: dict[str, int]
    total: int
    source_id: str = ""


@dataclass(frozen=True)
class TfidfCorpusModel:
    corpus_size: int
    doc_freq: np.ndarray  # aligned with universe.bigrams
    universe: BigramUniverse
    mode: str = "simplified"

    def idf(self) -> np.ndarray:
        return np.log(self.corpus_size / (self.doc_freq + 1.0))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.mode.encode())
        h.update(self.universe.digest().encode())
        h.update(str(self.corpus_size).encode())
        h.update(",".join(str(int(v)) for v in self.doc_freq).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    source_id: str = ""
    # set when the contract had no bigrams at all
    empty: bool = False

    def __len__(self) -> int:
        return len(self.values)


def build_universe(vocab: Union[SimplifiedVocabulary, Sequence[str]]) -> BigramUniverse:
    """All ordered token pairs, outer loop over the first token."""
    tokens = tuple(vocab)
    if not tokens:
        raise ValueError("vocabulary must be nonempty")
    bigrams = tuple(f"{a} {b}" for a in tokens for b in tokens)
    return BigramUniverse(tokens, bigrams)


def _tokens_of(seq) -> tuple[list[str], str]:
    if isinstance(seq, SimplifiedTokenSequence):
        return list(seq.tokens), seq.source_id
    if isinstance(seq, OpcodeSequence):
        return seq.mnemonics, seq.source_id
    return list(seq), ""


def count_bigrams(seq, source_id: Optional[str] = None) -> BigramCounts:
    """Sliding window of width 2, stride 1."""
    tokens, sid = _tokens_of(seq)
    counts = Counter(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return BigramCounts(dict(counts), max(len(tokens) - 1, 0), sid if source_id is None else source_id)


def fit_corpus(
    training_counts: Iterable[BigramCounts], universe: BigramUniverse, mode: str = "simplified"
) -> TfidfCorpusModel:
    """Document frequencies over the training split (presence, not occurrences)."""
    training_counts = list(training_counts)
    if not training_counts:
        raise FitError("cannot fit TF-IDF on an empty training set")
    index = universe.index
    df = np.zeros(len(universe), dtype=np.int64)
    for c in training_counts:
        for bigram, k in c.counts.items():
            i = index.get(bigram)
            if i is not None and k > 0:
                df[i] += 1
    df.setflags(write=False)
    return TfidfCorpusModel(len(training_counts), df, universe, mode)


def tfidf_vector(counts: BigramCounts, model: TfidfCorpusModel) -> FeatureVector:
    values = np.zeros(len(model.universe), dtype=np.float64)
    if counts.total == 0:
        log.debug("contract %r has no bigrams; emitting zero vector", counts.source_id)
        return FeatureVector(values, counts.source_id, empty=True)
    index = model.universe.index
    n = model.corpus_size
    for bigram, k in counts.counts.items():
        i = index.get(bigram)
        if i is None:
            continue
        values[i] = (k / counts.total) * math.log(n / (int(model.doc_freq[i]) + 1))
    return FeatureVector(values, counts.source_id)


def build_raw_universe(sequences: Iterable[OpcodeSequence]) -> BigramUniverse:
    """Universe over every distinct raw mnemonic seen, sorted alphabetically."""
    seen = set()
    for seq in sequences:
        seen.update(seq.mnemonics)
    if not seen:
        raise FitError("no mnemonics in training corpus")
    return build_universe(sorted(seen))


def raw_mode_vectorize(
    seq: OpcodeSequence, raw_universe: BigramUniverse, model: TfidfCorpusModel
) -> FeatureVector:
    """TF-IDF over unsimplified mnemonics; bigrams outside the universe add nothing."""
    if model.universe.bigrams != raw_universe.bigrams:
        raise ValueError("model was fitted on a different raw universe")
    return tfidf_vector(count_bigrams(seq), model)


def feature_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    if not vectors:
        return np.zeros((0, 0))
    return np.vstack([v.values for v in vectors])


# -- persistence -------------------------------------------------------------


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def write_vectors_csv(vectors: Iterable[FeatureVector], path, universe: BigramUniverse) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("source_id," + ",".join(universe.bigrams) + "\n")
        for v in vectors:
            fh.write(v.source_id + "," + ",".join(fmt_float(x) for x in v.values) + "\n")


def read_vectors_csv(path) -> tuple[list[str], np.ndarray, tuple[str, ...]]:
    """Returns ``(source_ids, matrix, header bigrams)``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        ids, rows = [], []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    mat = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return ids, mat, tuple(header[1:])


def write_vectors_jsonl(vectors: Iterable[FeatureVector], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in vectors:
            vals = ",".join(fmt_float(x) for x in v.values)
            fh.write(f'{{"source_id":{json.dumps(v.source_id)},"empty":{json.dumps(v.empty)},"values":[{vals}]}}\n')


def save_model(model: TfidfCorpusModel, path) -> None:
    doc = {
        "format": "opvec-tfidf/1",
        "mode": model.mode,
        "ngram": NGRAM_N,
        "log": "natural",
        "corpus_size": model.corpus_size,
        "tokens": list(model.universe.tokens),
        "bigrams": list(model.universe.bigrams),
        "doc_freq": [int(v) for v in model.doc_freq],
        "digest": model.digest(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> TfidfCorpusModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    universe = build_universe(doc["tokens"])
    if list(universe.bigrams) != doc["bigrams"]:
        raise ValueError(f"{path}: bigram order does not match token order")
    df = np.array(doc["doc_freq"], dtype=np.int64)
    df.setflags(write=False)
    model = TfidfCorpusModel(int(doc["corpus_size"]), df, universe, doc.get("mode", "simplified"))
    if doc.get("digest") and doc["digest"] != model.digest():
        raise ValueError(f"{path}: digest mismatch, file was edited or corrupted")
    return model
