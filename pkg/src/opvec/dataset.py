"""Contract corpora on disk, label files, and the train/test split.

Layout: one ``<source_id>.txt`` opcode listing per contract, or a
``<source_id>.hex`` bytecode file when no listing exists. Labels come from a
CSV whose header is ``source_id`` followed by one 0/1 column per label.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .disasm import OpcodeSequence, disassemble, parse_opcode_text, read_hex_file

log = logging.getLogger(__name__)

OPCODE_SUFFIX = ".txt"
HEX_SUFFIX = ".hex"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class ContractRecord:
    source_id: str
    path: Path
    labels: dict = field(default_factory=dict, compare=False)

    @property
    def fmt(self) -> str:
        return "hex" if self.path.suffix == HEX_SUFFIX else "opcodes"

    def read(self) -> OpcodeSequence:
        if self.fmt == "hex":
            return disassemble(read_hex_file(self.path, self.source_id))
        return parse_opcode_text(self.path.read_text("utf-8"), self.source_id)


@dataclass
class Corpus:
    records: list[ContractRecord]
    label_names: tuple[str, ...]
    # label rows whose contract file is missing
    missing_files: list[str] = field(default_factory=list)
    # contract files without a label row
    unlabeled: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def label_matrix(self, records: Optional[Sequence[ContractRecord]] = None) -> np.ndarray:
        recs = self.records if records is None else records
        return np.array(
            [[r.labels[name] for name in self.label_names] for r in recs], dtype=np.int64
        ).reshape(len(recs), len(self.label_names))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    stratify_by: Optional[str] = None

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def scan_directory(directory) -> dict[str, Path]:
    """source_id -> artifact path; ``.txt`` wins over ``.hex`` for the same id."""
    d = Path(directory)
    if not d.is_dir():
        raise CorpusError(f"{d} is not a directory")
    found: dict[str, Path] = {}
    for p in sorted(d.iterdir()):
        if not p.is_file() or p.suffix not in (OPCODE_SUFFIX, HEX_SUFFIX):
            continue
        if p.stem in found and found[p.stem].suffix == OPCODE_SUFFIX:
            continue
        found[p.stem] = p
    return found


def read_labels(label_file) -> tuple[tuple[str, ...], dict[str, dict[str, int]]]:
    with open(label_file, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CorpusError(f"{label_file}: empty label file") from None
        if len(header) < 2 or header[0] != "source_id":
            raise CorpusError(f"{label_file}: header must be 'source_id,<label>,...'")
        names = tuple(header[1:])
        if len(set(names)) != len(names):
            raise CorpusError(f"{label_file}: duplicate label columns")
        rows: dict[str, dict[str, int]] = {}
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CorpusError(f"{label_file}:{rowno}: expected {len(header)} fields, got {len(row)}")
            sid = row[0].strip()
            if sid in rows:
                raise CorpusError(f"{label_file}:{rowno}: duplicate source_id {sid!r}")
            vals = {}
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise CorpusError(f"{label_file}:{rowno}: label {name!r} must be 0 or 1, got {cell!r}")
                vals[name] = int(cell)
            rows[sid] = vals
    return names, rows


def write_labels(path, records: Sequence[ContractRecord], label_names: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", *label_names])
        for r in records:
            w.writerow([r.source_id, *(r.labels[n] for n in label_names)])


def load_corpus(directory, label_file) -> Corpus:
    """Join contract files with label rows on source_id.

    Records come back sorted by source_id, so the result does not depend on
    directory listing order. Rows and files that fail to join are reported on
    the returned corpus and logged.
    """
    files = scan_directory(directory)
    names, rows = read_labels(label_file)
    records = [ContractRecord(sid, files[sid], rows[sid]) for sid in sorted(rows) if sid in files]
    missing = sorted(sid for sid in rows if sid not in files)
    unlabeled = sorted(sid for sid in files if sid not in rows)
    if not files:
        log.warning("%s: no contract files found", directory)
    if missing:
        log.warning("%d labeled contracts have no file: %s", len(missing), ", ".join(missing[:10]))
    if unlabeled:
        log.warning("%d contract files have no label row", len(unlabeled))
    return Corpus(records, names, missing, unlabeled)


def n_train_for(n: int, fraction: float) -> int:
    # half-up rounding; keep both sides nonempty
    k = int(math.floor(n * fraction + 0.5))
    return min(max(k, 1), n - 1)


def split(records: Sequence, spec: SplitSpec = SplitSpec()) -> tuple[list, list]:
    """Seeded shuffle, then the first ``round(fraction * n)`` records train.

    Input order does not matter: records are sorted by source_id first.
    With ``stratify_by`` each class of that label is split separately.
    """
    recs = sorted(records, key=lambda r: r.source_id)
    if len(recs) < 2:
        raise ValueError("need at least 2 records to split")
    rng = np.random.default_rng(spec.seed)
    if spec.stratify_by is None:
        perm = rng.permutation(len(recs))
        k = n_train_for(len(recs), spec.train_fraction)
        train = [recs[i] for i in perm[:k]]
        test = [recs[i] for i in perm[k:]]
    else:
        train, test = [], []
        for cls in (0, 1):
            group = [r for r in recs if r.labels[spec.stratify_by] == cls]
            if not group:
                continue
            perm = rng.permutation(len(group))
            k = int(math.floor(len(group) * spec.train_fraction + 0.5))
            train += [group[i] for i in perm[:k]]
            test += [group[i] for i in perm[k:]]
        if not train or not test:
            raise ValueError("stratified split left one side empty")
    train.sort(key=lambda r: r.source_id)
    test.sort(key=lambda r: r.source_id)
    return train, test
