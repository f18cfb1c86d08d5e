"""The tinyvm-v1 machine: a fixed toy decompressor in plain and prefix form.

A program is a bitstring.  The plain decoder strips a leading ``0^k 1``
header, chops the remaining payload into 3-bit opcodes (MSB first,
leftover 1-2 bits ignored), and executes on a right-infinite tape of
natural-number cells.  The prefix decoder wraps a plain program in a
self-delimiting length header, which makes its syntactic domain
prefix-free.

Opcode table (bit-exact, versioned as ``tinyvm-v1``)::

    000 INC    001 DEC    010 RIGHT  011 LEFT
    100 LOOPSTART  101 LOOPEND  110 DOUBLE  111 HALT

INC/DEC add/subtract one (floor at 0), RIGHT/LEFT move the head (floor
at cell 0), DOUBLE doubles the current cell, HALT stops.  LOOPSTART
jumps just past its matching LOOPEND when the current cell is zero;
LOOPEND jumps just past its matching LOOPSTART when it is nonzero.
Every executed opcode costs one step; running off the end of the
program halts for free.  Output is cell 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

from .core import validate_bits

MACHINE_VERSION = "tinyvm-v1"


class Opcode(enum.IntEnum):
    INC = 0b000
    DEC = 0b001
    RIGHT = 0b010
    LEFT = 0b011
    LOOPSTART = 0b100
    LOOPEND = 0b101
    DOUBLE = 0b110
    HALT = 0b111


@dataclass(frozen=True)
class ProgramImage:
    """Decoded opcode sequence with matched loop brackets."""

    ops: tuple[Opcode, ...]
    match: dict[int, int]  # LOOPSTART pos <-> LOOPEND pos, both directions

    def __hash__(self):
        return hash(self.ops)


@dataclass(frozen=True)
class RunOutcome:
    """Result of running a program under a step budget."""

    kind: str  # "halt" | "steplimit" | "invalid"
    output: int | None = None
    steps: int | None = None

    @property
    def halted(self) -> bool:
        return self.kind == "halt"


INVALID = RunOutcome("invalid")
STEPLIMIT = RunOutcome("steplimit")


def _match_brackets(ops: tuple[Opcode, ...]) -> dict[int, int] | None:
    match: dict[int, int] = {}
    stack: list[int] = []
    for pos, op in enumerate(ops):
        if op is Opcode.LOOPSTART:
            stack.append(pos)
        elif op is Opcode.LOOPEND:
            if not stack:
                return None
            start = stack.pop()
            match[start] = pos
            match[pos] = start
    if stack:
        return None
    return match


def decode_plain(p: str) -> ProgramImage | None:
    """Decode a plain program; None when the header or brackets fail."""
    validate_bits(p)
    header_end = p.find("1")
    if header_end < 0:
        return None
    payload = p[header_end + 1 :]
    ops = tuple(
        Opcode(int(payload[i : i + 3], 2)) for i in range(0, len(payload) - 2, 3)
    )
    match = _match_brackets(ops)
    if match is None:
        return None
    return ProgramImage(ops, match)


def run_image(image: ProgramImage, t: int) -> RunOutcome:
    """Execute a decoded image under a budget of t steps."""
    ops = image.ops
    match = image.match
    tape: dict[int, int] = {}
    head = 0
    ip = 0
    steps = 0
    n = len(ops)
    while ip < n:
        steps += 1
        if steps > t:
            return STEPLIMIT
        op = ops[ip]
        if op is Opcode.INC:
            tape[head] = tape.get(head, 0) + 1
        elif op is Opcode.DEC:
            v = tape.get(head, 0)
            if v:
                tape[head] = v - 1
        elif op is Opcode.RIGHT:
            head += 1
        elif op is Opcode.LEFT:
            if head:
                head -= 1
        elif op is Opcode.DOUBLE:
            v = tape.get(head, 0)
            if v:
                tape[head] = v << 1
        elif op is Opcode.HALT:
            return RunOutcome("halt", tape.get(0, 0), steps)
        elif op is Opcode.LOOPSTART:
            if not tape.get(head, 0):
                ip = match[ip] + 1
                continue
        else:  # LOOPEND
            if tape.get(head, 0):
                ip = match[ip] + 1
                continue
        ip += 1
    return RunOutcome("halt", tape.get(0, 0), steps)


def run_plain(p: str, t: int) -> RunOutcome:
    """Decode and run a plain program under a step budget."""
    image = decode_plain(p)
    if image is None:
        return INVALID
    return run_image(image, t)


def elias_encode(length: int) -> str:
    """Self-delimiting code for a natural number.

    E(l): with m = l + 1 and k = floor(log2 m), emit k zeros then the
    (k+1)-bit binary form of m.  The codeword set is prefix-free.
    """
    if length < 0:
        raise ValueError("length must be a natural number")
    m = length + 1
    k = m.bit_length() - 1
    return "0" * k + format(m, "b")


def elias_decode(s: str) -> tuple[int, int] | None:
    """Inverse of elias_encode; returns (length, bits consumed) or None."""
    validate_bits(s)
    k = 0
    while k < len(s) and s[k] == "0":
        k += 1
    if k >= len(s):
        return None  # no terminator
    end = k + 1 + k
    if end > len(s):
        return None  # truncated payload
    m = int(s[k:end], 2)
    return m - 1, 2 * k + 1


def split_prefix(p: str) -> str | None:
    """Parse E(l) || body with |body| == l exactly; returns the body."""
    decoded = elias_decode(p)
    if decoded is None:
        return None
    length, consumed = decoded
    if len(p) != consumed + length:
        return None  # short body or trailing bits
    return p[consumed:]


def run_prefix(p: str, t: int) -> RunOutcome:
    """Run a self-delimiting program: length header, then a plain body."""
    body = split_prefix(p)
    if body is None:
        return INVALID
    return run_plain(body, t)


def enumerate_prefix_syntax(max_len: int) -> Iterator[str]:
    """All strings E(l)||body of total length <= max_len.

    Emitted in increasing length then lexicographic order; the output
    set is prefix-free by construction.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    forms = []
    length = 0
    while True:
        header = elias_encode(length)
        total = len(header) + length
        if total > max_len:
            break  # total length is strictly increasing in the body length
        forms.append((total, header, length))
        length += 1
    for _total, header, body_len in forms:
        if body_len == 0:
            yield header
        else:
            for i in range(1 << body_len):
                yield header + format(i, f"0{body_len}b")
