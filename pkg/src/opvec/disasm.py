"""EVM bytecode decoding and opcode text parsing."""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

INVALID = "INVALID"
INVALID_BYTE = 0xFE

_HEXDIGITS = frozenset(string.hexdigits)
_PUSH_RE = re.compile(r"^PUSH([0-9]+)$")


class MalformedInputError(ValueError):
    """Hex bytecode that cannot be decoded."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class OpcodeParseError(ValueError):
    """Opcode text containing a token that is neither a mnemonic nor an immediate."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@lru_cache(maxsize=None)
def _table() -> dict:
    raw = json.loads(
        resources.files("opvec.data").joinpath("evm_opcodes.json").read_text("utf-8")
    )
    by_byte = {int(k, 16): v for k, v in raw["opcodes"].items()}
    by_name = {v: k for k, v in by_byte.items()}
    by_name[INVALID] = INVALID_BYTE
    return {
        "version": raw["version"],
        "by_byte": by_byte,
        "by_name": by_name,
        "aliases": dict(raw["aliases"]),
    }


def opcode_table() -> dict[int, str]:
    """Byte value to canonical mnemonic for every defined opcode."""
    return dict(_table()["by_byte"])


def table_version() -> str:
    return _table()["version"]


def mnemonic_for(byte: int) -> str:
    return _table()["by_byte"].get(byte, INVALID)


def opcode_byte(mnemonic: str) -> int:
    """Byte value of a canonical mnemonic (INVALID is 0xfe)."""
    return _table()["by_name"][mnemonic]


def push_width(mnemonic: str) -> int:
    """Immediate length in bytes for ``mnemonic`` (0 for non-PUSH instructions)."""
    m = _PUSH_RE.match(mnemonic)
    if m is None:
        return 0
    return int(m.group(1))


def canonical_mnemonic(token: str) -> Optional[str]:
    """Uppercased canonical mnemonic for ``token``, or None if it isn't one."""
    name = token.upper()
    tbl = _table()
    name = tbl["aliases"].get(name, name)
    if name in tbl["by_name"]:
        return name
    return None


@dataclass(frozen=True)
class Bytecode:
    code: bytes
    source_id: str = ""

    @classmethod
    def from_hex(cls, text: str, source_id: str = "") -> "Bytecode":
        return cls(decode_hex(text), source_id)

    def to_hex(self) -> str:
        return "0x" + self.code.hex()

    def __len__(self) -> int:
        return len(self.code)


def decode_hex(text: str) -> bytes:
    """Decode a hex string with optional ``0x`` prefix.

    Surrounding whitespace is ignored. Positions in errors index into the
    stripped string, prefix included.
    """
    s = text.strip()
    start = 2 if s[:2] in ("0x", "0X") else 0
    for i in range(start, len(s)):
        if s[i] not in _HEXDIGITS:
            raise MalformedInputError(f"non-hex character {s[i]!r}", i)
    if (len(s) - start) % 2:
        raise MalformedInputError("odd number of hex digits", len(s))
    return bytes.fromhex(s[start:])


@dataclass(frozen=True)
class Instruction:
    offset: int
    mnemonic: str
    immediate: bytes = b""
    # raw byte value; differs from the table entry only for undefined bytes
    opcode: int = INVALID_BYTE

    @property
    def size(self) -> int:
        return 1 + len(self.immediate)

    def __str__(self) -> str:
        if self.immediate:
            return f"{self.mnemonic} 0x{self.immediate.hex()}"
        return self.mnemonic


@dataclass(frozen=True)
class OpcodeSequence:
    items: tuple[Instruction, ...] = ()
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def mnemonics(self) -> list[str]:
        return [ins.mnemonic for ins in self.items]

    @property
    def byte_length(self) -> int:
        return sum(ins.size for ins in self.items)


def disassemble(bytecode: Union[Bytecode, bytes, bytearray]) -> OpcodeSequence:
    """Linear sweep over ``bytecode``.

    Total over all inputs: undefined bytes decode as INVALID and a PUSH whose
    immediate runs past the end keeps whatever bytes remain.
    """
    if isinstance(bytecode, Bytecode):
        code, source_id = bytecode.code, bytecode.source_id
    else:
        code, source_id = bytes(bytecode), ""
    by_byte = _table()["by_byte"]
    items = []
    pc = 0
    n = len(code)
    while pc < n:
        op = code[pc]
        name = by_byte.get(op, INVALID)
        width = push_width(name)
        imm = code[pc + 1 : pc + 1 + width]
        items.append(Instruction(pc, name, imm, op))
        pc += 1 + len(imm)
    return OpcodeSequence(tuple(items), source_id)


def assemble(seq: Union[OpcodeSequence, Iterable[Instruction]]) -> bytes:
    """Re-serialize instructions to bytecode (inverse of :func:`disassemble`)."""
    out = bytearray()
    for ins in seq:
        out.append(ins.opcode)
        out += ins.immediate
    return bytes(out)


def _is_hex_token(tok: str) -> bool:
    body = tok[2:] if tok[:2] in ("0x", "0X") else tok
    return bool(body) and all(c in _HEXDIGITS for c in body)


def _hex_immediate(tok: str) -> bytes:
    body = tok[2:] if tok[:2] in ("0x", "0X") else tok
    if len(body) % 2:
        body = "0" + body
    return bytes.fromhex(body)


def parse_opcode_text(text: str, source_id: str = "") -> OpcodeSequence:
    """Parse whitespace-separated ``MNEMONIC [0xIMMEDIATE]`` tokens.

    One instruction per line is the usual layout, but everything on a single
    line is accepted as well. Offsets are synthesized from instruction sizes.
    """
    by_name = _table()["by_name"]
    items: list[Instruction] = []
    pc = 0
    pending: Optional[tuple[str, int]] = None  # PUSH waiting for its immediate

    def flush(imm: bytes = b"") -> None:
        nonlocal pc, pending
        name, _ = pending
        items.append(Instruction(pc, name, imm, by_name[name]))
        pc += 1 + len(imm)
        pending = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            if pending is not None and _is_hex_token(tok) and canonical_mnemonic(tok) is None:
                imm = _hex_immediate(tok)
                width = pending[1]
                if len(imm) > width:
                    raise OpcodeParseError(
                        f"immediate {tok} longer than {width} bytes for {pending[0]}", lineno
                    )
                # a short immediate is a numeric value; widen it to the PUSH width
                flush(imm.rjust(width, b"\x00"))
                continue
            name = canonical_mnemonic(tok)
            if name is None:
                raise OpcodeParseError(f"unknown token {tok!r}", lineno)
            if pending is not None:
                flush()
            width = push_width(name)
            if width:
                pending = (name, width)
            else:
                items.append(Instruction(pc, name, b"", by_name[name]))
                pc += 1
    if pending is not None:
        flush()
    return OpcodeSequence(tuple(items), source_id)


def format_opcode_text(seq: OpcodeSequence) -> str:
    """One instruction per line, the format :func:`parse_opcode_text` reads."""
    return "".join(f"{ins}\n" for ins in seq)


def read_hex_file(path, source_id: Optional[str] = None) -> Bytecode:
    p = Path(path)
    return Bytecode.from_hex(p.read_text("utf-8"), source_id or p.stem)
