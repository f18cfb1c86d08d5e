"""Semicomputable-sequence machinery.

Monotone pair-approximation streams and their dedup merge, the two
grouping reductions, the computable-minorant construction, and the
interval allocator used by the first game.  Sequences of naturals may
take the value +infinity (math.inf); the weight 2**-inf is zero.

Divergence of sum(2^-a_n) is not decidable from finitely many terms,
so every scanning operation takes an explicit work cap and fails
loudly instead of spinning.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .core import Dyadic, DYADIC_ZERO
from .errors import RuleViolation, UsageError, WorkCapExceeded

INF = math.inf

DEFAULT_SCAN_CAP = 1 << 21


def pow2_weight(a) -> Dyadic:
    """2**-a for a natural a, zero for a = +inf."""
    if a == INF:
        return DYADIC_ZERO
    return Dyadic.pow2(-a)


# -- sequence specs --------------------------------------------------------
#
# The CLI mini-language: "const:c", "list:v0,v1,..." (then +inf), "log"
# (a_n = floor(log2(n+1)), divergent sum 2^-a_n) and "twolog"
# (a_n = 2*floor(log2(n+1)), convergent).  Built-in kinds carry exact
# closed forms for prefix masses so that allocators and game setup can
# jump over astronomically long ranges instead of scanning them.

class SequenceSpec:
    """A computable sequence of naturals (or +inf) with mass helpers."""

    name = "callable"

    def __init__(self, fn: Callable[[int], int | float], scan_cap: int = DEFAULT_SCAN_CAP):
        self._fn = fn
        self.scan_cap = scan_cap

    def value(self, n: int) -> int | float:
        return self._fn(n)

    def mass(self, lo: int, hi: int) -> Dyadic:
        """Exact sum of 2^-a_n for n in [lo, hi]."""
        if hi - lo + 1 > self.scan_cap:
            raise WorkCapExceeded(f"mass scan of {hi - lo + 1} terms exceeds cap")
        acc = DYADIC_ZERO
        for n in range(lo, hi + 1):
            acc = acc + pow2_weight(self.value(n))
        return acc

    def first_exceeding(self, lo: int, target: Dyadic) -> int:
        """Least r >= lo with mass(lo, r) > target."""
        acc = DYADIC_ZERO
        for n in range(lo, lo + self.scan_cap):
            acc = acc + pow2_weight(self.value(n))
            if acc > target:
                return n
        raise WorkCapExceeded(
            f"prefix mass did not exceed {target} within {self.scan_cap} terms"
        )

    def max_n_plus_a(self, lo: int, hi: int) -> int:
        """max(n + a_n) over [lo, hi]; only finite values participate."""
        if hi - lo + 1 > self.scan_cap:
            raise WorkCapExceeded("scan exceeds cap")
        best = None
        for n in range(lo, hi + 1):
            a = self.value(n)
            if a == INF:
                continue
            if best is None or n + a > best:
                best = n + a
        if best is None:
            raise UsageError("no finite terms in range")
        return best

    def min_n_with_gap_at_least(self, gap: int, hi: int) -> int | None:
        """Least n <= hi with n - a_n >= gap, or None."""
        for n in range(0, min(hi, self.scan_cap - 1) + 1):
            a = self.value(n)
            if a != INF and n - a >= gap:
                return n
        if hi >= self.scan_cap:
            raise WorkCapExceeded("witness scan exceeds cap")
        return None

    def max_gap_upto(self, hi: int) -> int | None:
        """max(n - a_n) over n in [0, hi]; None if all terms are +inf."""
        if hi >= self.scan_cap:
            raise WorkCapExceeded("gap scan exceeds cap")
        best = None
        for n in range(hi + 1):
            a = self.value(n)
            if a != INF and (best is None or n - a > best):
                best = n - a
        return best

    def spec_string(self) -> str:
        return self.name


class ConstSeq(SequenceSpec):
    def __init__(self, c: int):
        if c < 0:
            raise UsageError("const sequence value must be a natural")
        self.c = c
        self.name = f"const:{c}"
        super().__init__(lambda n: c)

    def mass(self, lo: int, hi: int) -> Dyadic:
        if hi < lo:
            return DYADIC_ZERO
        return Dyadic(hi - lo + 1, self.c)

    def first_exceeding(self, lo: int, target: Dyadic) -> int:
        scaled = target.shifted(self.c)  # count must be > target * 2^c
        count = (scaled.num >> scaled.exp) + 1
        return lo + count - 1

    def max_n_plus_a(self, lo: int, hi: int) -> int:
        return hi + self.c

    def min_n_with_gap_at_least(self, gap: int, hi: int) -> int | None:
        n = max(0, gap + self.c)
        return n if n <= hi else None

    def max_gap_upto(self, hi: int) -> int | None:
        return hi - self.c if hi >= 0 else None


def _log2floor(x: int) -> int:
    return x.bit_length() - 1


class LogSeq(SequenceSpec):
    """a_n = floor(log2(n+1)); sum 2^-a_n diverges (one unit per octave)."""

    def __init__(self):
        self.name = "log"
        super().__init__(lambda n: _log2floor(n + 1))

    def _prefix(self, x: int) -> Dyadic:
        # sum over n in [0, x]: full octaves contribute 1 apiece
        if x < 0:
            return DYADIC_ZERO
        k = _log2floor(x + 1)
        partial = Dyadic(x - (1 << k) + 2, k)
        return Dyadic.from_int(k) + partial

    def mass(self, lo: int, hi: int) -> Dyadic:
        if hi < lo:
            return DYADIC_ZERO
        return self._prefix(hi) - self._prefix(lo - 1)

    def first_exceeding(self, lo: int, target: Dyadic) -> int:
        base = self._prefix(lo - 1)
        hi = max(lo, 1)
        while self._prefix(hi) - base <= target:
            hi <<= 1
        lo_s = lo
        while lo_s < hi:
            mid = (lo_s + hi) // 2
            if self._prefix(mid) - base > target:
                hi = mid
            else:
                lo_s = mid + 1
        return lo_s

    def max_n_plus_a(self, lo: int, hi: int) -> int:
        return hi + _log2floor(hi + 1)

    def min_n_with_gap_at_least(self, gap: int, hi: int) -> int | None:
        # n - floor(log2(n+1)) is nondecreasing: binary search
        if gap <= 0:
            return 0 if hi >= 0 else None
        lo_s, hi_s = 0, hi
        if hi_s - _log2floor(hi_s + 1) < gap:
            return None
        while lo_s < hi_s:
            mid = (lo_s + hi_s) // 2
            if mid - _log2floor(mid + 1) >= gap:
                hi_s = mid
            else:
                lo_s = mid + 1
        return lo_s

    def max_gap_upto(self, hi: int) -> int | None:
        return hi - _log2floor(hi + 1) if hi >= 0 else None


class TwoLogSeq(SequenceSpec):
    """a_n = 2*floor(log2(n+1)); sum 2^-a_n converges (to 2)."""

    def __init__(self):
        self.name = "twolog"
        super().__init__(lambda n: 2 * _log2floor(n + 1))

    def _prefix(self, x: int) -> Dyadic:
        if x < 0:
            return DYADIC_ZERO
        k = _log2floor(x + 1)
        # full octaves j < k contribute 2^-j; partial octave counts 4^-k each
        full = Dyadic.from_int(2) - Dyadic.pow2(-(k - 1)) if k else DYADIC_ZERO
        partial = Dyadic(x - (1 << k) + 2, 2 * k)
        return full + partial

    def mass(self, lo: int, hi: int) -> Dyadic:
        if hi < lo:
            return DYADIC_ZERO
        return self._prefix(hi) - self._prefix(lo - 1)

    def tail_supremum(self, lo: int) -> Dyadic:
        return Dyadic.from_int(2) - self._prefix(lo - 1)

    def first_exceeding(self, lo: int, target: Dyadic) -> int:
        if self.tail_supremum(lo) <= target:
            raise WorkCapExceeded(
                f"tail mass from {lo} is provably at most {self.tail_supremum(lo)}"
            )
        hi = max(lo, 1)
        base = self._prefix(lo - 1)
        while self._prefix(hi) - base <= target:
            hi <<= 1
        lo_s = lo
        while lo_s < hi:
            mid = (lo_s + hi) // 2
            if self._prefix(mid) - base > target:
                hi = mid
            else:
                lo_s = mid + 1
        return lo_s

    def max_n_plus_a(self, lo: int, hi: int) -> int:
        return hi + 2 * _log2floor(hi + 1)

    def max_gap_upto(self, hi: int) -> int | None:
        # n - 2*floor(log2(n+1)) peaks at the end of each octave
        if hi < 0:
            return None
        top = _log2floor(hi + 1)
        best = hi - 2 * top
        for k in range(top):
            end = (1 << (k + 1)) - 2
            best = max(best, end - 2 * k)
        return best


class ListSeq(SequenceSpec):
    """Finitely many explicit values, then +inf."""

    def __init__(self, values: list[int]):
        if any(v < 0 for v in values):
            raise UsageError("list sequence values must be naturals")
        self.values = list(values)
        self.name = "list:" + ",".join(str(v) for v in values)
        super().__init__(lambda n: self.values[n] if n < len(self.values) else INF)

    def mass(self, lo: int, hi: int) -> Dyadic:
        acc = DYADIC_ZERO
        for n in range(lo, min(hi, len(self.values) - 1) + 1):
            acc = acc + Dyadic.pow2(-self.values[n])
        return acc

    def first_exceeding(self, lo: int, target: Dyadic) -> int:
        acc = DYADIC_ZERO
        for n in range(lo, len(self.values)):
            acc = acc + Dyadic.pow2(-self.values[n])
            if acc > target:
                return n
        raise WorkCapExceeded(
            f"list sequence mass from {lo} is {acc}, never exceeds {target}"
        )


def parse_sequence_spec(spec: str) -> SequenceSpec:
    """Parse the CLI mini-language for upper-approximated sequences."""
    if spec == "log":
        return LogSeq()
    if spec == "twolog":
        return TwoLogSeq()
    if spec.startswith("const:"):
        return ConstSeq(int(spec[len("const:"):]))
    if spec.startswith("list:"):
        parts = spec[len("list:"):]
        return ListSeq([int(v) for v in parts.split(",")] if parts else [])
    raise UsageError(f"unknown sequence spec {spec!r}")


def as_sequence(obj) -> SequenceSpec:
    if isinstance(obj, SequenceSpec):
        return obj
    if isinstance(obj, str):
        return parse_sequence_spec(obj)
    if callable(obj):
        return SequenceSpec(obj)
    raise UsageError(f"not a sequence spec: {obj!r}")


# -- pair approximations and their merge -----------------------------------

@dataclass(frozen=True)
class PairApprox:
    """Total stagewise approximation (n, k) -> (x, y).

    For each row n: x nondecreasing in k, y nonincreasing, x <= y, and
    both stabilize at a finite stage.  y may be +inf at early stages.
    """

    fn: Callable[[int, int], tuple]

    def at(self, n: int, k: int) -> tuple:
        return self.fn(n, k)


class PairList:
    """Finite sequence of distinct integer pairs (x, y) with x <= y."""

    def __init__(self, pairs: Iterable[tuple]):
        seen = set()
        out = []
        for x, y in pairs:
            if x > y:
                raise UsageError(f"pair ({x}, {y}) has x > y")
            if (x, y) in seen:
                raise UsageError(f"duplicate pair ({x}, {y})")
            seen.add((x, y))
            out.append((x, y))
        self.pairs = out

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def exp_sum(self) -> Dyadic:
        """Exact sum of 2^(x - y) over the list."""
        acc = DYADIC_ZERO
        for x, y in self.pairs:
            if y != INF:
                acc = acc + Dyadic.pow2(x - y)
        return acc


def dedup_merge(pa: PairApprox, n_count: int, k_count: int) -> PairList:
    """Interleave all stage pairs diagonally, emitting first appearances.

    Order is by n+k then n, so each row is visited in stage order; row
    monotonicity is checked on the way (RuleViolation otherwise).
    """
    if n_count < 0 or k_count < 0:
        raise UsageError("horizon must be nonnegative")
    last: dict[int, tuple] = {}
    seen: set[tuple] = set()
    emitted: list[tuple] = []
    for diag in range(n_count + k_count - 1):
        for n in range(max(0, diag - k_count + 1), min(diag, n_count - 1) + 1):
            k = diag - n
            x, y = pa.at(n, k)
            if x > y:
                raise RuleViolation(f"row {n} stage {k}: x={x} > y={y}")
            if n in last:
                px, py = last[n]
                if x < px or y > py:
                    raise RuleViolation(
                        f"row {n} stage {k}: approximation not monotone"
                    )
            last[n] = (x, y)
            if (x, y) not in seen:
                seen.add((x, y))
                emitted.append((x, y))
    return PairList(emitted)


def group_min(pl: PairList, axis: str) -> dict[int, int]:
    """Group pairs along one coordinate and take the minimal gap.

    axis "X": a_n = min(y_i - n over pairs with x_i = n); axis "Y":
    a_n = min(n - x_i over pairs with y_i = n).  Missing n means +inf.
    Feeding prefixes of a growing list only ever lowers the values.
    """
    if axis not in ("X", "Y"):
        raise UsageError("axis must be 'X' or 'Y'")
    out: dict[int, int] = {}
    for x, y in pl:
        if y == INF:
            continue
        if axis == "X":
            key, gap = x, y - x
        else:
            key, gap = y, y - x
        if key not in out or gap < out[key]:
            out[key] = gap
    return out


def grouped_weight_sum(grouped: dict[int, int]) -> Dyadic:
    acc = DYADIC_ZERO
    for a in grouped.values():
        acc = acc + pow2_weight(a)
    return acc


# -- computable minorant ----------------------------------------------------

@dataclass(frozen=True)
class MinorantBlock:
    """One frozen block: values for n in [start, start + len(values))."""

    start: int
    values: tuple

    def mass(self) -> Dyadic:
        acc = DYADIC_ZERO
        for v in self.values:
            acc = acc + pow2_weight(v)
        return acc


def minorant_blocks(
    approx: Callable[[int, int], int | float], *, refine_cap: int = 10**4
) -> Iterator[MinorantBlock]:
    """Freeze upper approximations blockwise, each block with mass > 1.

    Within a block starting at s, refinement stage k looks at the
    window [s, s+k] at approximation stage k; once the window's weight
    sum exceeds 1 the current values are frozen and the next block
    starts.  Frozen values dominate the limits because upper
    approximations only ever decrease.
    """
    one = Dyadic.one()
    start = 0
    while True:
        last_seen: dict[int, int | float] = {}
        frozen = None
        for k in range(refine_cap + 1):
            vals = []
            acc = DYADIC_ZERO
            for n in range(start, start + k + 1):
                v = approx(n, k)
                if n in last_seen and v > last_seen[n]:
                    raise RuleViolation(
                        f"upper approximation increased at n={n}, stage {k}"
                    )
                last_seen[n] = v
                vals.append(v)
                acc = acc + pow2_weight(v)
            if acc > one:
                frozen = MinorantBlock(start, tuple(vals))
                break
        if frozen is None:
            raise WorkCapExceeded(
                f"block at {start} did not close within {refine_cap} refinements"
            )
        yield frozen
        start += len(frozen.values)


def computable_minorant(
    approx: Callable[[int, int], int | float], *, refine_cap: int = 10**4
) -> Iterator[int | float]:
    """The frozen minorant sequence itself, streamed value by value."""
    for block in minorant_blocks(approx, refine_cap=refine_cap):
        yield from block.values


# -- interval allocation -----------------------------------------------------

def allocate_intervals(
    seq, d_max: int, *, scan_cap: int | None = None
) -> list[tuple[int, int]]:
    """Disjoint working intervals [l_d, r_d] for d = 0..d_max.

    Frontier rule: l_d = F + d and r_d is the least r whose window mass
    sum(2^-a_n, n in [l_d, r]) exceeds 2^(d+1); then F moves to
    r_d - d + 1, which makes the shifted intervals [l_d - d, r_d - d]
    pairwise disjoint.
    """
    if d_max < 0:
        raise UsageError("d_max must be a natural number")
    spec = as_sequence(seq)
    if scan_cap is not None:
        spec.scan_cap = scan_cap
    out = []
    frontier = 0
    for d in range(d_max + 1):
        l = frontier + d
        r = spec.first_exceeding(l, Dyadic.pow2(d + 1))
        out.append((l, r))
        frontier = r - d + 1
    return out


# -- pair stream CSV ---------------------------------------------------------

def pair_approx_from_csv(text: str) -> tuple[PairApprox, int, int]:
    """Parse "n,k,x,y" rows into a PairApprox plus its (N, K) horizon.

    The grid must be complete: a row for every n < N, k < K.  A y value
    of "inf" means +inf.
    """
    grid: dict[tuple[int, int], tuple] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise UsageError(f"line {lineno}: expected n,k,x,y")
        n, k, x = int(parts[0]), int(parts[1]), int(parts[2])
        y = INF if parts[3] == "inf" else int(parts[3])
        grid[(n, k)] = (x, y)
    if not grid:
        raise UsageError("empty pair stream")
    n_count = max(n for n, _ in grid) + 1
    k_count = max(k for _, k in grid) + 1
    for n in range(n_count):
        for k in range(k_count):
            if (n, k) not in grid:
                raise UsageError(f"pair stream is missing entry ({n}, {k})")
    return PairApprox(lambda n, k: grid[(n, k)]), n_count, k_count
