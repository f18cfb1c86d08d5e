"""Stage-bounded busy-beaver tables and the two constructive reductions.

A stage (L, t) runs every plain program of length <= L and every
self-delimiting program of total length <= L for at most t steps, and
aggregates: the semimeasure snapshot m (sum of 2^-|p| over halting
prefix programs, by output), minimal program lengths per output (plain
and prefix), and per-length maxima of output and halting time.  All
four queries B / BB / BP / BPprime read off one table.

Tables are pure functions of (machine version, L, t); they can be
cached to disk and recomputation reproduces byte-identical files.
"""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .core import Dyadic, WeightMap, weight_tail, DYADIC_ZERO
from .errors import (
    EnumerationCapExceeded,
    InvalidProgram,
    NoConvergence,
    PadError,
    RuleViolation,
    UsageError,
)
from .tinyvm import (
    MACHINE_VERSION,
    RunOutcome,
    decode_plain,
    elias_encode,
    enumerate_prefix_syntax,
    run_image,
    split_prefix,
)

DEFAULT_ENUM_CAP = 1 << 16

QUERY_KINDS = ("B", "BB", "BP", "BPprime")


@dataclass(frozen=True, order=True)
class Stage:
    """A finite approximation regime: program length and step budget."""

    L: int
    t: int

    def __post_init__(self):
        if self.L < 1 or self.t < 1:
            raise UsageError("stage needs L >= 1 and t >= 1")

    def dominates(self, other: "Stage") -> bool:
        return self.L >= other.L and self.t >= other.t


@dataclass(frozen=True)
class StageTable:
    """Snapshot of the machine's behaviour at one stage."""

    stage: Stage
    m: WeightMap                 # output -> semimeasure weight
    ks: dict[int, int]           # output -> minimal plain program length
    kp: dict[int, int]           # output -> minimal prefix program length
    maxout: dict[int, int]       # n -> largest output, plain length <= n
    maxsteps: dict[int, int]     # n -> largest halting time, plain length <= n


class _MemoRunner:
    """Caches run outcomes by decoded image so equal programs run once."""

    def __init__(self, t: int):
        self.t = t
        self._memo: dict[tuple, RunOutcome] = {}

    def run(self, p: str) -> RunOutcome:
        image = decode_plain(p)
        if image is None:
            return RunOutcome("invalid")
        cached = self._memo.get(image.ops)
        if cached is None:
            cached = run_image(image, self.t)
            self._memo[image.ops] = cached
        return cached


def _plain_slice(args: tuple[int, int, int, int]):
    """Aggregate one (length, lo, hi) slice of the plain enumeration."""
    length, lo, hi, t = args
    runner = _MemoRunner(t)
    best_out = None
    best_steps = None
    ks: dict[int, int] = {}
    if length == 0:
        candidates: Iterable[str] = [""] if lo == 0 else []
    else:
        candidates = (format(i, f"0{length}b") for i in range(lo, hi))
    for p in candidates:
        outcome = runner.run(p)
        if not outcome.halted:
            continue
        if best_out is None or outcome.output > best_out:
            best_out = outcome.output
        if best_steps is None or outcome.steps > best_steps:
            best_steps = outcome.steps
        if outcome.output not in ks:
            ks[outcome.output] = length
    return length, best_out, best_steps, ks


def compute_stage(
    stage: Stage,
    *,
    enum_cap: int = DEFAULT_ENUM_CAP,
    cache_dir: Path | str | None = None,
    jobs: int = 1,
) -> StageTable:
    """Run the full enumeration for one stage (or load it from cache)."""
    if 2 ** (stage.L + 1) > enum_cap:
        raise EnumerationCapExceeded(
            f"stage L={stage.L} needs 2^{stage.L + 1} programs, cap is {enum_cap}"
        )
    if cache_dir is not None:
        path = stage_cache_path(cache_dir, stage)
        if path.exists():
            return parse_stage_table(path.read_text(encoding="utf-8"))

    table = _compute_stage_fresh(stage, jobs=jobs)

    if cache_dir is not None:
        path = stage_cache_path(cache_dir, stage)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(serialize_stage_table(table))
        os.replace(tmp, path)
    return table


def _compute_stage_fresh(stage: Stage, *, jobs: int = 1) -> StageTable:
    L, t = stage.L, stage.t
    tasks = []
    for length in range(L + 1):
        count = 1 << length if length else 1
        if jobs > 1 and count >= 4 * jobs:
            chunk = -(-count // jobs)
            for lo in range(0, count, chunk):
                tasks.append((length, lo, min(lo + chunk, count), t))
        else:
            tasks.append((length, 0, count, t))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            partials = list(pool.map(_plain_slice, tasks))
    else:
        partials = [_plain_slice(task) for task in tasks]

    per_len_out: dict[int, int] = {}
    per_len_steps: dict[int, int] = {}
    ks: dict[int, int] = {}
    for length, best_out, best_steps, ks_part in partials:
        if best_out is not None and per_len_out.get(length, -1) < best_out:
            per_len_out[length] = best_out
        if best_steps is not None and per_len_steps.get(length, -1) < best_steps:
            per_len_steps[length] = best_steps
        for k, ell in ks_part.items():
            if k not in ks or ell < ks[k]:
                ks[k] = ell

    runner = _MemoRunner(t)
    m_raw: dict[int, Dyadic] = {}
    kp: dict[int, int] = {}
    for s in enumerate_prefix_syntax(L):
        body = split_prefix(s)
        outcome = runner.run(body)
        if not outcome.halted:
            continue
        k = outcome.output
        m_raw[k] = m_raw.get(k, DYADIC_ZERO) + Dyadic.pow2(-len(s))
        if k not in kp or len(s) < kp[k]:
            kp[k] = len(s)

    maxout: dict[int, int] = {}
    maxsteps: dict[int, int] = {}
    running_out = None
    running_steps = None
    for n in range(L + 1):
        if n in per_len_out and (running_out is None or per_len_out[n] > running_out):
            running_out = per_len_out[n]
        if n in per_len_steps and (
            running_steps is None or per_len_steps[n] > running_steps
        ):
            running_steps = per_len_steps[n]
        if running_out is not None:
            maxout[n] = running_out
        if running_steps is not None:
            maxsteps[n] = running_steps

    return StageTable(stage, WeightMap(m_raw), ks, kp, maxout, maxsteps)


# -- cache file format ---------------------------------------------------
#
# Line 1:  beaverlab-stage-v1 L=<L> t=<t> machine=tinyvm-v1
# Then:    "m <k> <num>/2^<exp>", "ks <k> <len>", "kp <k> <len>" sorted
#          by k, and "bb <n> <steps>" rows carrying the halting-time
#          maxima (which are not derivable from the other rows).
# UTF-8, LF endings.

CACHE_FORMAT = "beaverlab-stage-v1"


def stage_cache_path(cache_dir: Path | str, stage: Stage) -> Path:
    return Path(cache_dir) / f"stage-L{stage.L}-t{stage.t}-{MACHINE_VERSION}.txt"


def serialize_stage_table(table: StageTable) -> str:
    lines = [
        f"{CACHE_FORMAT} L={table.stage.L} t={table.stage.t} machine={MACHINE_VERSION}"
    ]
    for k, w in table.m.items():
        lines.append(f"m {k} {w}")
    for k in sorted(table.ks):
        lines.append(f"ks {k} {table.ks[k]}")
    for k in sorted(table.kp):
        lines.append(f"kp {k} {table.kp[k]}")
    for n in sorted(table.maxsteps):
        lines.append(f"bb {n} {table.maxsteps[n]}")
    return "\n".join(lines) + "\n"


def parse_stage_table(text: str) -> StageTable:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty stage table file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != CACHE_FORMAT or head[3] != f"machine={MACHINE_VERSION}":
        raise ValueError(f"unrecognized stage table header: {lines[0]!r}")
    stage = Stage(int(head[1][2:]), int(head[2][2:]))
    m_raw: dict[int, Dyadic] = {}
    ks: dict[int, int] = {}
    kp: dict[int, int] = {}
    maxsteps: dict[int, int] = {}
    for line in lines[1:]:
        if not line:
            continue
        kind, key, value = line.split()
        if kind == "m":
            m_raw[int(key)] = Dyadic.parse(value)
        elif kind == "ks":
            ks[int(key)] = int(value)
        elif kind == "kp":
            kp[int(key)] = int(value)
        elif kind == "bb":
            maxsteps[int(key)] = int(value)
        else:
            raise ValueError(f"unrecognized stage table row: {line!r}")
    # maxout is recoverable: the best output at length <= n is the largest
    # output whose minimal plain program length is <= n.
    maxout: dict[int, int] = {}
    running = None
    by_len: dict[int, int] = {}
    for k, ell in ks.items():
        if ell not in by_len or k > by_len[ell]:
            by_len[ell] = k
    for n in range(stage.L + 1):
        if n in by_len and (running is None or by_len[n] > running):
            running = by_len[n]
        if running is not None:
            maxout[n] = running
    return StageTable(stage, WeightMap(m_raw), ks, kp, maxout, maxsteps)


# -- queries -------------------------------------------------------------

def stage_query(table: StageTable, kind: str, n: int) -> int | None:
    """One of the four busy-beaver style queries against a stage table.

    B: largest output of a halting plain program of length <= n.
    BB: largest halting time over the same program set.
    BP: largest output k whose minimal prefix program length is <= n.
    BPprime: least N >= 0 whose semimeasure tail beyond N is < 2^-n.
    Returns None when no witnessing program exists (B/BB/BP only).
    """
    if kind == "BP'":
        kind = "BPprime"
    if kind not in QUERY_KINDS:
        raise UsageError(f"unknown query kind {kind!r}")
    if n < 0:
        raise UsageError("query argument must be a natural number")
    if kind != "BPprime" and n > table.stage.L:
        raise UsageError(
            f"{kind}({n}) is undefined at stage L={table.stage.L}"
        )
    if kind == "B":
        return table.maxout.get(n)
    if kind == "BB":
        return table.maxsteps.get(n)
    if kind == "BP":
        candidates = [k for k, ell in table.kp.items() if ell <= n]
        return max(candidates) if candidates else None
    eps = Dyadic.pow2(-n)
    if weight_tail(table.m, 1) < eps:
        return 0
    support = table.m.support()
    suffix: list[Dyadic] = [DYADIC_ZERO] * (len(support) + 1)
    for i in range(len(support) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + table.m.get(support[i])
    for i, k in enumerate(support):
        if suffix[i + 1] < eps:
            return k
    raise AssertionError("unreachable: empty tail is < eps")


# -- modulus of convergence ----------------------------------------------

def modulus_of_convergence(
    series: Iterable[tuple[Dyadic, Dyadic]],
    eps: Dyadic,
    *,
    work_cap: int = 10**6,
) -> int:
    """Least N such that the exact tail of the series beyond N is < eps.

    The stream yields (term, exact tail after this term) pairs; the
    declared tails are trusted and must be exact, which is what makes
    the strict comparison decidable.
    """
    if not eps > DYADIC_ZERO:
        raise UsageError("eps must be positive")
    seen = False
    for index, (_term, tail_after) in enumerate(series):
        seen = True
        if index >= work_cap:
            raise NoConvergence(f"no certificate within {work_cap} terms")
        if tail_after < eps:
            return index
    if not seen:
        return 0
    raise NoConvergence("stream ended before its tail bounds certified the cut")


def geometric_halving_series() -> Iterator[tuple[Dyadic, Dyadic]]:
    """a_k = 2^-(k+1); the exact tail after index k equals a_k."""
    k = 0
    while True:
        term = Dyadic.pow2(-(k + 1))
        yield term, term
        k += 1


def weightmap_series(m: WeightMap) -> Iterator[tuple[Dyadic, Dyadic]]:
    """The series k -> m(k) with exact tails (zero beyond the support)."""
    top = m.max_index()
    if top is None:
        return
    tail = m.total()
    for k in range(top + 1):
        term = m.get(k)
        tail = tail - term
        yield term, tail


# -- the cover enumeration -------------------------------------------------

def bpprime_cover_enumerate(
    n: int, snapshots: Iterable[WeightMap]
) -> list[int]:
    """Process monotone semimeasure snapshots and emit a covering sequence.

    Whenever the current tail starting at the last emitted integer
    reaches 2^-n, a fresh integer beyond the whole current support (and
    beyond all previous emissions) is emitted.  For legal snapshot
    sequences this can fire at most 2^n times, and the final emission
    (or 0) is at least the final snapshot's BPprime value at n.
    """
    if n < 0:
        raise UsageError("n must be a natural number")
    threshold = Dyadic.pow2(-n)
    last = 0
    emitted: list[int] = []
    prev: WeightMap | None = None
    for snap in snapshots:
        if snap.total() > Dyadic.one():
            raise RuleViolation("snapshot total exceeds 1")
        if prev is not None:
            for index, weight in prev.items():
                if snap.get(index) < weight:
                    raise RuleViolation(
                        f"snapshot sequence not pointwise nondecreasing at {index}"
                    )
        prev = snap
        if weight_tail(snap, last) >= threshold:
            top = snap.max_index()
            fresh = max(top if top is not None else -1, last, *(emitted or [-1])) + 1
            emitted.append(fresh)
            last = fresh
            if len(emitted) > 1 << n:
                raise AssertionError(
                    "emission budget exceeded on a legal snapshot sequence"
                )
    return emitted


# -- plain-to-prefix encoding ----------------------------------------------

def encode_plain_as_prefix(q: str, n: int) -> str:
    """Wrap a plain program as a self-delimiting one of padded length n+2.

    Result: E(n+2) || 0^(n+2-|q|) || q.  The zero padding merges into
    the plain header, so running the result through the prefix decoder
    reproduces the plain run exactly.
    """
    if n < 0:
        raise UsageError("n must be a natural number")
    if decode_plain(q) is None:
        raise InvalidProgram(f"not a valid plain program: {q!r}")
    if len(q) > n + 2:
        raise PadError(f"program of length {len(q)} does not fit in {n + 2} symbols")
    return elias_encode(n + 2) + "0" * (n + 2 - len(q)) + q
