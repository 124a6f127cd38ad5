"""Collapse EVM mnemonics onto the 35-token simplified vocabulary.

Families of equivalent instructions (PUSHk, DUPk, SWAPk, LOGk) fold into one
token, semantic categories (arithmetic, block-predictable values, bitwise
logic, comparisons, address queries) fold into category tokens, a fixed set
of control-flow and call instructions is kept verbatim, and everything else
is dropped.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Sequence, Union

from .disasm import OpcodeSequence


@dataclass(frozen=True)
class SimplifiedVocabulary:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be distinct")

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __contains__(self, token) -> bool:
        return token in self.tokens

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode()).hexdigest()


@dataclass(frozen=True)
class SimplifiedTokenSequence:
    tokens: tuple[str, ...]
    source_id: str = ""
    dropped_count: int = 0

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@lru_cache(maxsize=None)
def _rules() -> dict:
    raw = json.loads(
        resources.files("opvec.data").joinpath("simplification.json").read_text("utf-8")
    )
    group_of = {}
    for token, members in raw["groups"].items():
        for m in members:
            group_of[m] = token
    return {
        "vocabulary": tuple(raw["vocabulary"]),
        "prefix": tuple((p, t) for p, t in raw["prefix_rules"]),
        "group_of": group_of,
        "groups": {k: tuple(v) for k, v in raw["groups"].items()},
        "dropped": frozenset(raw["dropped"]),
    }


def vocabulary() -> SimplifiedVocabulary:
    return SimplifiedVocabulary(_rules()["vocabulary"])


def mapping_table() -> dict:
    """The shipped rule table, in the shape the ``vocab`` command prints."""
    r = _rules()
    return {
        "vocabulary": list(r["vocabulary"]),
        "prefix_rules": [list(p) for p in r["prefix"]],
        "groups": {k: list(v) for k, v in r["groups"].items()},
        "dropped": sorted(r["dropped"]),
    }


@lru_cache(maxsize=1024)
def simplify_opcode(mnemonic: str) -> Optional[str]:
    """Vocabulary token for ``mnemonic``, or None when the opcode is dropped."""
    r = _rules()
    for prefix, token in r["prefix"]:
        if mnemonic.startswith(prefix):
            return token
    token = r["group_of"].get(mnemonic)
    if token is not None:
        return token
    if mnemonic in r["vocabulary"]:
        return mnemonic
    return None


def simplify_sequence(
    seq: Union[OpcodeSequence, Sequence[str], Iterable[str]], source_id: Optional[str] = None
) -> SimplifiedTokenSequence:
    if isinstance(seq, OpcodeSequence):
        names = seq.mnemonics
        sid = seq.source_id if source_id is None else source_id
    elif isinstance(seq, SimplifiedTokenSequence):
        names = list(seq.tokens)
        sid = seq.source_id if source_id is None else source_id
    else:
        names = list(seq)
        sid = source_id or ""
    out = []
    for name in names:
        tok = simplify_opcode(name)
        if tok is not None:
            out.append(tok)
    return SimplifiedTokenSequence(tuple(out), sid, len(names) - len(out))
