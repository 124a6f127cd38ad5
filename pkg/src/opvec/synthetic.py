"""Seeded synthetic contract corpora for demos and tests.

Contracts are random opcode listings drawn from a background pool; positives
for a label additionally carry that label's motif, a short instruction
pattern that survives simplification.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .disasm import Instruction, OpcodeSequence, format_opcode_text, opcode_byte, push_width

BACKGROUND = (
    "PUSH1", "PUSH2", "PUSH4", "PUSH32", "DUP1", "DUP2", "DUP3", "SWAP1", "SWAP2",
    "MSTORE", "MLOAD", "SLOAD", "SSTORE", "ADD", "SUB", "MUL", "AND", "OR", "LT", "GT",
    "ISZERO", "JUMPDEST", "JUMP", "JUMPI", "POP", "CALLVALUE", "CALLDATALOAD",
    "CALLDATASIZE", "SHA3", "RETURN", "REVERT", "STOP", "EQ", "LOG1", "TIMESTAMP",
)
MOTIFS = {
    "reentrancy": ("CALLER", "GAS", "CALL", "ISZERO", "DELEGATECALL", "SSTORE"),
    "access_control": ("ORIGIN", "CALLER", "EQ", "JUMPI", "SELFDESTRUCT"),
}


def _instruction_stream(names: Sequence[str], rng: np.random.Generator) -> OpcodeSequence:
    items, pc = [], 0
    for name in names:
        imm = rng.integers(0, 256, size=push_width(name), dtype=np.uint8).tobytes()
        items.append(Instruction(pc, name, imm, opcode_byte(name)))
        pc += 1 + len(imm)
    return OpcodeSequence(tuple(items))


def make_contract(labels: dict, rng: np.random.Generator, length=(80, 240), motif_repeats=(1, 4)) -> OpcodeSequence:
    n = int(rng.integers(length[0], length[1] + 1))
    names = [str(x) for x in rng.choice(BACKGROUND, size=n)]
    for label, on in labels.items():
        if not on:
            continue
        motif = MOTIFS.get(label, ("ORIGIN", "GAS", "CALLCODE"))
        for _ in range(int(rng.integers(motif_repeats[0], motif_repeats[1] + 1))):
            at = int(rng.integers(0, len(names) + 1))
            names[at:at] = list(motif)
    return _instruction_stream(names, rng)


def make_corpus(
    directory,
    n: int = 60,
    seed: int = 0,
    label_names: Sequence[str] = ("reentrancy", "access_control"),
    positive_rate: Sequence[float] = (0.4, 0.3),
    id_prefix: str = "c",
) -> Path:
    """Write ``n`` listings plus ``labels.csv`` into ``directory``; returns the label file."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    width = len(str(n - 1))
    lines = ["source_id," + ",".join(label_names)]
    for i in range(n):
        sid = f"{id_prefix}{i:0{width}d}"
        labels = {name: int(rng.random() < rate) for name, rate in zip(label_names, positive_rate)}
        seq = make_contract(labels, rng)
        (d / f"{sid}.txt").write_text(format_opcode_text(seq), encoding="utf-8")
        lines.append(sid + "," + ",".join(str(labels[name]) for name in label_names))
    path = d / "labels.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
