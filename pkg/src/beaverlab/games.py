"""Referees, strategies, and adversaries for the two gap games.

Game I: Alice grows description sets D_0, D_1, ... (|D_i| <= 2^i,
every element globally fresh) while Bob grows a measure mu with total
at most 1.  For her parameter d, Alice aims at some n in a precomputed
interval with mu's tail beyond max(D_{n-d}) strictly below 2^-(n+a_n).

Game II: both players grow measures (alpha for Alice under her cap,
beta for Bob under total 1).  Alice aims at a pair (n, u): alpha's
tail beyond u strictly above 2^(-n+a_n+d) while every beta value from
u on stays strictly below 2^-n.

The winning conditions speak about limit values; the referee makes
them decidable as a challenge protocol: whenever a winning witness is
live at the end of Bob's turn, Bob has failed to react and Alice wins.
(A Bob who cannot afford the spoiling move loses the same way.)  All
weights and thresholds are exact dyadics and every win check uses the
strict inequalities of the conditions themselves; slack lives only in
the interval-mass and finite-part thresholds (2^(d+1) and 4).

Referee state is maintained incrementally so million-round runs stay
cheap.  The pure-state checkers win1_check / win2_check exist for
direct testing on desk-scale states and agree with the referees.
"""

from __future__ import annotations

import json
import random
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from typing import Iterable

from .core import Dyadic, WeightMap, weight_tail, DYADIC_ZERO, DYADIC_ONE
from .errors import (
    BudgetExhausted,
    RuleViolation,
    StrategyExhausted,
    UsageError,
)
from .seqkit import INF, SequenceSpec, allocate_intervals, as_sequence

DEFAULT_MAX_ROUNDS = 10**6


@dataclass(frozen=True)
class GameCaps:
    max_rounds: int = DEFAULT_MAX_ROUNDS


@dataclass(frozen=True)
class Outcome:
    kind: str                      # "alice_wins" | "undecided" | "rule_violation"
    witness: object = None         # game1: n; game2: [n, u]
    detail: str = ""

    @property
    def alice_wins(self) -> bool:
        return self.kind == "alice_wins"


# Move rows are compact tuples (round, player, kind, arg1, arg2, totals):
#   game1  ("A", "add", level n, element k)      totals = (mu_num, mu_exp)
#   game1  ("B", "raise", ((i, num, exp), ...))  totals as above
#   game2  ("A", "place", index, sub d or None)  totals = (a_num, a_exp, b_num, b_exp)
#   both   ("B", "pass", None, None)
@dataclass
class GameTranscript:
    game: str
    params: dict
    moves: list
    outcome: Outcome
    rounds: int

    def to_jsonl(self) -> str:
        lines = []
        for round_no, player, kind, arg1, arg2, totals in self.moves:
            if kind == "add":
                move = {"kind": "add", "level": arg1, "element": arg2}
            elif kind == "place":
                move = {"kind": "place", "index": arg1}
                if arg2 is not None:
                    move["sub"] = arg2
            elif kind == "raise":
                move = {
                    "kind": "raise",
                    "raises": [[i, f"{num}/2^{exp}"] for i, num, exp in arg1],
                }
            else:
                move = {"kind": "pass"}
            row = {"round": round_no, "player": player, "move": move}
            if self.game == "game1":
                row["mu_total"] = f"{totals[0]}/2^{totals[1]}"
            else:
                row["alpha_total"] = f"{totals[0]}/2^{totals[1]}"
                row["beta_total"] = f"{totals[2]}/2^{totals[3]}"
            lines.append(json.dumps(row, separators=(",", ":")))
        final = {"outcome": self.outcome.kind}
        if self.outcome.witness is not None:
            final["witness"] = self.outcome.witness
        if self.outcome.detail:
            final["detail"] = self.outcome.detail
        final["rounds"] = self.rounds
        lines.append(json.dumps(final, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        parts = [f"game={self.game}", f"a={self.params['a']}",
                 f"d={self.params['d']}", f"bob={self.params['bob']}",
                 f"outcome={self.outcome.kind}"]
        if self.outcome.witness is not None:
            parts.append(f"witness={self.outcome.witness}")
        parts.append(f"rounds={self.rounds}")
        for key, value in self.params.get("final", {}).items():
            parts.append(f"{key}={value}")
        return " ".join(parts)


# -- exact helpers on canonical dyadics -------------------------------------

def least_exp_strictly_below(value: Dyadic) -> int:
    """Minimal integer G with 2^-G < value (value must be positive)."""
    if value.is_zero():
        raise UsageError("value must be positive")
    if value.num == 1:  # canonical numerators are odd: 1 means a power of two
        return value.exp + 1
    return value.exp - value.num.bit_length() + 1


def max_n_with_pow2_above(value: Dyadic) -> int:
    """Largest n with 2^-n > value (value must be positive); may be < 0."""
    if value.is_zero():
        raise UsageError("value must be positive")
    if value.num == 1:
        return value.exp - 1
    return value.exp - value.num.bit_length()


def weight_bucket(w: Dyadic) -> int:
    """Least j >= 0 with 2^-j <= w (for positive w)."""
    return max(0, w.exp - w.num.bit_length() + 1)


def at_least_pow2(count: int, e: int) -> bool:
    """count >= 2^e, without materializing 2^e."""
    return count > 0 and count.bit_length() > e


def exceeds_pow2(count: int, e: int) -> bool:
    """count > 2^e, without materializing 2^e."""
    bl = count.bit_length()
    return bl > e + 1 or (bl == e + 1 and count & (count - 1) != 0)


def lemma_weight(beta: WeightMap) -> Dyadic:
    """Exact value of sum over j >= 0 of 2^-j * #{i : beta(i) >= 2^-j}.

    Each entry w contributes the geometric tail starting at its first
    qualifying j, which is 2^(1 - bucket(w)) exactly; summed over the
    support this never exceeds twice the total weight.
    """
    acc = DYADIC_ZERO
    for _i, w in beta.items():
        acc = acc + Dyadic.pow2(1 - weight_bucket(w))
    return acc


# -- bob adversaries ---------------------------------------------------------

class BobBot:
    """Adversary interface: emit a batch of raises (index, delta) or pass.

    Every emitted move goes through the referee's legality checks
    regardless of what the bot promises; user-supplied bots only need
    this method.
    """

    name = "bob"

    def move(self, view) -> list[tuple[int, Dyadic]]:
        raise NotImplementedError


class PassiveBob(BobBot):
    """Never moves."""

    name = "passive"

    def move(self, view):
        return []


class GreedyBob(BobBot):
    """Spoils every live challenge with the minimal legal spend at the
    minimal legal index, while the budget lasts."""

    name = "greedy"

    def move(self, view):
        options = view.spoil_options()
        if not options:
            return []
        raises = []
        remaining = view.remaining_budget()
        for index, need in options:
            if need.is_zero() or remaining < need:
                continue
            raises.append((index, need))
            remaining = remaining - need
        return raises


class RandomBob(BobBot):
    """Legal random raises from a seeded generator."""

    def __init__(self, seed: int):
        self.seed = seed
        self.name = f"random({seed})"
        self._rng = random.Random(seed)

    def move(self, view):
        remaining = view.remaining_budget()
        if remaining.is_zero():
            return []
        raises = []
        for _ in range(self._rng.randint(1, 2)):
            delta = Dyadic.pow2(-self._rng.randint(1, 12))
            if remaining < delta:
                delta = remaining
            if delta.is_zero():
                break
            index = self._rng.randrange(0, view.action_span())
            raises.append((index, delta))
            remaining = remaining - delta
        return raises


class BlindBob(BobBot):
    """Replays a fixed monotone schedule of weight maps as its measure."""

    def __init__(self, schedule: Iterable[WeightMap], label: str = "blind"):
        self.name = label
        self._snapshots = list(schedule)
        prev: WeightMap | None = None
        for snap in self._snapshots:
            if prev is not None:
                for i, w in prev.items():
                    if snap.get(i) < w:
                        raise UsageError("blind schedule must be pointwise monotone")
            prev = snap
        if self._snapshots and self._snapshots[-1].total() > DYADIC_ONE:
            raise UsageError("blind schedule exceeds the unit budget")
        self._pos = 0
        self._current: dict[int, Dyadic] = {}

    def move(self, view):
        if self._pos >= len(self._snapshots):
            return []
        target = self._snapshots[self._pos]
        self._pos += 1
        raises = []
        for i, w in target.items():
            delta = w - self._current.get(i, DYADIC_ZERO)
            if not delta.is_zero():
                raises.append((i, delta))
                self._current[i] = w
        return raises


def make_bob(kind: str, *, seed: int = 0, schedule=None) -> BobBot:
    if kind == "passive":
        return PassiveBob()
    if kind == "greedy":
        return GreedyBob()
    if kind == "random":
        return RandomBob(seed)
    if kind == "blind":
        if schedule is None:
            raise UsageError("blind bob needs a stage schedule")
        return BlindBob(schedule)
    raise UsageError(f"unknown bob kind {kind!r}")


# -- game I -------------------------------------------------------------------

@dataclass
class Game1State:
    """Desk-scale snapshot of a Game I position (for the pure checkers)."""

    level_sets: dict[int, list[int]]
    mu: WeightMap
    seq: SequenceSpec
    d: int
    interval: tuple[int, int]
    cursor: int = 0
    round: int = 0


def win1_check(state: Game1State) -> int | None:
    """Some n in the interval whose win condition holds, else None.

    Empty D[n-d] cannot witness (its max is undefined); the comparison
    is strict exactly as in the condition.  Intended for desk-scale
    states; the referee keeps the equivalent check incremental.
    """
    lo, hi = state.interval
    for n in range(lo, hi + 1):
        elems = state.level_sets.get(n - state.d)
        if not elems:
            continue
        a = state.seq.value(n)
        if a == INF:
            continue
        if weight_tail(state.mu, max(elems)) < Dyadic.pow2(-(n + a)):
            return n
    return None


def alice1_strategy(state: Game1State):
    """("add", n, k) with a globally fresh k, or ("pass",) while winning.

    The fresh element exceeds every nonzero mu index and every element
    of every level set, so the new tail is exactly zero.  A full level
    whose condition is violated pushes the cursor to the next level.
    """
    lo, hi = state.interval
    n = max(state.cursor, lo)
    top = state.mu.max_index()
    fresh = (top if top is not None else -1) + 1
    for elems in state.level_sets.values():
        if elems:
            fresh = max(fresh, max(elems) + 1)
    while n <= hi:
        a = state.seq.value(n)
        if a == INF:
            n += 1
            continue
        level = n - state.d
        elems = state.level_sets.get(level, [])
        threshold = Dyadic.pow2(-(n + a))
        if elems and weight_tail(state.mu, max(elems)) < threshold:
            return ("pass",)
        if not at_least_pow2(len(elems), level):  # room left
            return ("add", n, fresh)
        n += 1
    raise StrategyExhausted(
        f"cursor passed r_d={hi}; the interval's mass hypothesis failed"
    )


class _Game1Referee:
    """Incremental Game I engine; drives both live play and replay."""

    def __init__(self, seq: SequenceSpec, d: int, interval: tuple[int, int],
                 caps: GameCaps, record_moves: bool = True):
        self.seq = seq
        self.d = d
        self.lo, self.hi = interval
        self.caps = caps
        self.record_moves = record_moves
        self.cursor = self.lo
        self.cursor_threshold = DYADIC_ONE
        self.level_count = 0        # |D| at the cursor level
        self.current_k: int | None = None
        self.tail = DYADIC_ZERO     # mu mass at indices >= current_k
        self.mu_total = DYADIC_ZERO
        self.mu_max_index = -1
        self.max_element = -1
        self.rounds = 0
        self.moves: list = []
        self.level_events: dict[int, list[Dyadic]] = {}  # completed restorations
        self.exhausted_levels: list[int] = []
        self.level_counts: dict[int, int] = {}
        self._set_cursor(self.lo)

    # -- cursor bookkeeping

    def _set_cursor(self, n: int):
        while n <= self.hi and self.seq.value(n) == INF:
            n += 1
        if n > self.hi:
            raise StrategyExhausted(
                f"cursor passed r_d={self.hi}; interval mass hypothesis failed"
            )
        self.cursor = n
        self.cursor_threshold = Dyadic.pow2(-(n + self.seq.value(n)))
        self.level_count = 0
        self.current_k = None
        self.tail = DYADIC_ZERO

    def _level_full(self) -> bool:
        return at_least_pow2(self.level_count, self.cursor - self.d)

    # -- turns

    def _strategy_add(self) -> tuple[int, int]:
        """The deterministic next add: (cursor level n, fresh element)."""
        n = self.cursor
        count = self.level_count
        while True:
            if n > self.hi:
                raise StrategyExhausted(
                    f"cursor passed r_d={self.hi}; interval mass hypothesis failed"
                )
            a = self.seq.value(n)
            if a == INF:
                n += 1
                count = 0
                continue
            if at_least_pow2(count, n - self.d):  # level full
                n += 1
                count = 0
                continue
            return n, max(self.max_element, self.mu_max_index) + 1

    def alice_turn(self, scripted: tuple[int, int] | None = None):
        self.rounds += 1
        expected = self._strategy_add()
        if scripted is not None and scripted != expected:
            raise RuleViolation(
                f"transcript alice move {scripted} diverges from strategy {expected}"
            )
        level_n, k = expected
        # close the episode at the level we are leaving or re-arming
        if self.current_k is not None:
            self.level_events.setdefault(self.cursor, []).append(self.tail)
        if level_n != self.cursor:
            if self._level_full() and self.tail >= self.cursor_threshold:
                self.exhausted_levels.append(self.cursor)
            self._set_cursor(self.cursor + 1)
            if self.cursor != level_n:
                raise RuleViolation("strategy add skipped a playable level")
        if k <= self.max_element or k <= self.mu_max_index:
            raise RuleViolation("alice element is not fresh")
        self.level_count += 1
        level = self.cursor - self.d
        if exceeds_pow2(self.level_count, level):
            raise RuleViolation(f"|D_{level}| exceeded 2^{level}")
        self.level_counts[level] = self.level_count
        self.max_element = k
        self.current_k = k
        self.tail = DYADIC_ZERO
        if self.record_moves:
            self.moves.append(
                (self.rounds, "A", "add", level_n, k,
                 (self.mu_total.num, self.mu_total.exp))
            )

    def bob_turn(self, raises: list[tuple[int, Dyadic]]) -> Outcome | None:
        violation = None
        if raises:
            new_total = self.mu_total
            for entry in raises:
                if len(entry) != 2:
                    violation = Outcome("rule_violation", detail="B: malformed raise")
                    break
                index, delta = entry
                if not isinstance(index, int) or index < 0:
                    violation = Outcome("rule_violation", detail="B: bad index")
                    break
                if not isinstance(delta, Dyadic) or delta.is_zero():
                    violation = Outcome(
                        "rule_violation", detail="B: raise must be positive"
                    )
                    break
                new_total = new_total + delta
            if violation is None and new_total > DYADIC_ONE:
                violation = Outcome("rule_violation", detail="B: total measure above 1")
        if violation is None and raises:
            self.mu_total = new_total
            for index, delta in raises:
                if index > self.mu_max_index:
                    self.mu_max_index = index
                if self.current_k is not None and index >= self.current_k:
                    self.tail = self.tail + delta
        if self.record_moves:
            totals = (self.mu_total.num, self.mu_total.exp)
            if raises:
                packed = tuple((i, d.num, d.exp) for i, d in raises)
                self.moves.append((self.rounds, "B", "raise", packed, None, totals))
            else:
                self.moves.append((self.rounds, "B", "pass", None, None, totals))
        return violation

    @staticmethod
    def _validate_raises(raises, current_total) -> Outcome | None:
        total_delta = DYADIC_ZERO
        for entry in raises:
            if len(entry) != 2:
                return Outcome("rule_violation", detail="B: malformed raise")
            index, delta = entry
            if not isinstance(index, int) or index < 0:
                return Outcome("rule_violation", detail="B: bad index")
            if not isinstance(delta, Dyadic) or delta.is_zero():
                return Outcome("rule_violation", detail="B: raise must be positive")
            total_delta = total_delta + delta
        if current_total + total_delta > DYADIC_ONE:
            return Outcome("rule_violation", detail="B: total measure above 1")
        return None

    def live_witness(self) -> int | None:
        if self.current_k is not None and self.tail < self.cursor_threshold:
            return self.cursor
        return None

    # -- views for bots

    def remaining_budget(self) -> Dyadic:
        return DYADIC_ONE - self.mu_total

    def spoil_options(self) -> list[tuple[int, Dyadic]]:
        if self.live_witness() is None:
            return []
        return [(self.current_k, self.cursor_threshold - self.tail)]

    def action_span(self) -> int:
        return max(self.max_element, self.mu_max_index, 6) + 2


def game1_run(seq, d: int, bob: BobBot, caps: GameCaps = GameCaps()) -> GameTranscript:
    """Alternate Alice's interval strategy against a Bob adversary.

    Outcomes: alice_wins(n) as soon as a live witness survives Bob's
    reply (he is obliged to react); rule_violation when Bob breaks the
    budget; undecided at the round cap.  StrategyExhausted and
    WorkCapExceeded escape as exceptions: they mean the divergence
    hypothesis behind the interval failed.
    """
    spec = as_sequence(seq)
    interval = allocate_intervals(spec, d)[d]
    referee = _Game1Referee(spec, d, interval, caps)
    outcome = None
    while referee.rounds < caps.max_rounds:
        referee.alice_turn()
        bad = referee.bob_turn(bob.move(referee))
        if bad is not None:
            outcome = bad
            break
        witness = referee.live_witness()
        if witness is not None:
            outcome = Outcome("alice_wins", witness)
            break
    if outcome is None:
        outcome = Outcome("undecided", detail=f"round cap {caps.max_rounds}")
    params = {
        "a": spec.name,
        "d": d,
        "bob": bob.name,
        "interval": list(interval),
        "max_rounds": caps.max_rounds,
        "final": {"mu_total": str(referee.mu_total)},
    }
    return GameTranscript("game1", params, referee.moves, outcome, referee.rounds)


def replay_game1(transcript: GameTranscript) -> _Game1Referee:
    """Re-run a Game I transcript through the referee, verifying every
    move and the recorded outcome; returns the replayed referee with
    its accounting fields populated."""
    spec = as_sequence(transcript.params["a"])
    referee = _Game1Referee(
        spec,
        transcript.params["d"],
        tuple(transcript.params["interval"]),
        GameCaps(transcript.params["max_rounds"]),
        record_moves=False,
    )
    outcome = None
    moves = transcript.moves
    idx = 0
    while idx < len(moves):
        row = moves[idx]
        if row[1] != "A" or row[2] != "add":
            raise RuleViolation("transcript must alternate starting with Alice adds")
        referee.alice_turn(scripted=(row[3], row[4]))
        if (referee.mu_total.num, referee.mu_total.exp) != row[5]:
            raise RuleViolation("mu_total mismatch on an Alice row")
        idx += 1
        if idx >= len(moves):
            raise RuleViolation("transcript ends without Bob's reply")
        row = moves[idx]
        if row[1] != "B":
            raise RuleViolation("missing Bob reply")
        raises = (
            [(i, Dyadic(num, exp)) for i, num, exp in row[3]]
            if row[2] == "raise"
            else []
        )
        bad = referee.bob_turn(raises)
        if bad is not None:
            outcome = bad
            break
        if (referee.mu_total.num, referee.mu_total.exp) != row[5]:
            raise RuleViolation("mu_total mismatch on a Bob row")
        idx += 1
        witness = referee.live_witness()
        if witness is not None:
            outcome = Outcome("alice_wins", witness)
            break
    if outcome is None:
        outcome = Outcome(
            "undecided", detail=f"round cap {transcript.params['max_rounds']}"
        )
    if (outcome.kind, outcome.witness) != (
        transcript.outcome.kind,
        transcript.outcome.witness,
    ):
        raise RuleViolation(
            f"replayed outcome {outcome} does not match recorded {transcript.outcome}"
        )
    return referee


# -- game II ------------------------------------------------------------------

@dataclass
class Game2State:
    """Desk-scale snapshot of a Game II position (for the pure checkers)."""

    alpha: WeightMap
    beta: WeightMap
    seq: SequenceSpec
    d: int
    unit_exp: int
    finite_part_end: int
    frontier: int = 0
    alpha_cap: Dyadic = DYADIC_ONE
    round: int = 0

    def __post_init__(self):
        limit = self.d + self.seq.max_n_plus_a(0, self.finite_part_end)
        if self.unit_exp <= limit:
            raise UsageError(
                f"unit exponent {self.unit_exp} must exceed max(n + a_n + d) = {limit}"
            )


def finite_part_end(seq: SequenceSpec, d: int) -> int:
    """Least m with sum over n <= m of 2^(-a_n - d) strictly above 4."""
    return seq.first_exceeding(0, Dyadic.pow2(d + 2))


def win2_check(state: Game2State) -> tuple[int, int] | None:
    """A witnessing (n, u) with the smallest such n, or None.

    u ranges over the recorded frontier positions: 0, one past each
    beta support point, and the current frontier; n over the finite
    part selected by the strategy.
    """
    candidates = {0, state.frontier}
    for i in state.beta.support():
        candidates.add(i + 1)
    best = None
    for u in sorted(candidates):
        tail = weight_tail(state.alpha, u)
        if tail.is_zero():
            continue
        beyond = [w for i, w in state.beta.items() if i >= u]
        if beyond:
            n_allowed = min(state.finite_part_end, max_n_with_pow2_above(max(beyond)))
        else:
            n_allowed = state.finite_part_end
        if n_allowed < 0:
            continue
        gap_needed = least_exp_strictly_below(tail) + state.d
        n = state.seq.min_n_with_gap_at_least(gap_needed, n_allowed)
        if n is not None and (best is None or n < best[0]):
            best = (n, u)
    return best


def alice2_strategy(state: Game2State):
    """("place", index) at a fresh index beyond the frontier and beyond
    all of Bob's support, or ("pass",) while a witness is pending."""
    if win2_check(state) is not None:
        return ("pass",)
    unit = Dyadic.pow2(-state.unit_exp)
    if state.alpha.total() + unit > state.alpha_cap:
        raise BudgetExhausted("alice cap reached before a decision")
    top_beta = state.beta.max_index()
    top_alpha = state.alpha.max_index()
    index = max(
        state.frontier,
        (top_beta + 1) if top_beta is not None else 0,
        (top_alpha + 1) if top_alpha is not None else 0,
    )
    return ("place", index)


@dataclass
class _Sub:
    """One strategy instance inside the Game II referee."""

    check_d: int           # d used by the win condition
    param_d: int           # d used to select the finite part
    scale_exp: int         # weights scaled by 2^-scale_exp
    m: int                 # finite part is {0..m}
    unit_exp: int          # unit weight is 2^-unit_exp (scale included)
    unit: Dyadic
    cap: Dyadic
    outcome: Outcome | None = None
    placements: list[int] = field(default_factory=list)
    capped: bool = False
    shift: int = 0         # unit_exp deficit against the finest unit

    def spent(self) -> Dyadic:
        return self.unit * len(self.placements)


@dataclass
class _Segment:
    """A run of frontier candidates sharing one suffix maximum of beta.

    Within the run the alpha prefix is smallest at the leftmost
    recorded frontier position, so that leader dominates the group for
    every sub-strategy: tracking leaders keeps the win check a single
    integer comparison per round, with a rebuild only when beta moves.
    """

    u: int                    # leader: least frontier position in the run
    prefix_int: int           # alpha mass strictly below u, in fine units
    maxbeta: Dyadic           # max beta value at indices >= u
    maxbeta_pos: int | None   # a position realizing that maximum


class _Game2Referee:
    """Incremental Game II engine shared by single and combined runs.

    Alpha-side accounting is integer arithmetic in multiples of the
    finest placement unit; triggers are pre-scaled into the same unit,
    so the per-round fire check costs one int comparison.
    """

    def __init__(self, seq: SequenceSpec, subs: list[_Sub], caps: GameCaps,
                 record_moves: bool = True):
        self.seq = seq
        self.subs = subs
        self.caps = caps
        self.record_moves = record_moves
        self.fine_exp = max(sub.unit_exp for sub in subs)
        for sub in subs:
            sub.shift = self.fine_exp - sub.unit_exp
        self.alpha_int = 0          # total alpha in units of 2^-fine_exp
        self.beta: dict[int, Dyadic] = {}
        self.beta_total = DYADIC_ZERO
        self.lemma_sum = DYADIC_ZERO
        self.next_index = 0
        self.rounds = 0
        self.moves: list = []
        # suffix maxima of beta: positions ascending, values strictly descending
        self.records: list[tuple[int, Dyadic]] = []
        self.frontiers: list[int] = [0]   # recorded candidate positions
        self.segments: list[_Segment] = []
        self.triggers: list[tuple[int, _Segment, _Sub]] = []
        self.min_trigger_int: int | None = None
        self.fired_events: list[tuple[int, int, int]] = []  # (round, n, u)
        self._rebuild_segments()

    # -- alpha bookkeeping

    def alpha_total(self) -> Dyadic:
        return Dyadic(self.alpha_int, self.fine_exp)

    def _prefix_int(self, u: int) -> int:
        acc = 0
        for sub in self.subs:
            count = bisect_left(sub.placements, u)
            if count:
                acc += count << sub.shift
        return acc

    # -- beta suffix maxima and candidate segments

    def _update_records(self, i: int, new_value: Dyadic):
        recs = self.records
        j = 0
        while j < len(recs) and recs[j][0] <= i:
            j += 1
        right_value = recs[j][1] if j < len(recs) else DYADIC_ZERO
        if new_value <= right_value:
            return  # dominated from the right; no suffix maximum changes
        k = j
        while k > 0 and recs[k - 1][1] <= new_value:
            k -= 1
        del recs[k:j]
        recs.insert(k, (i, new_value))

    def _rebuild_segments(self):
        segs: list[_Segment] = []
        start = 0
        for pos, value in self.records:
            f = bisect_left(self.frontiers, start)
            if f < len(self.frontiers) and self.frontiers[f] <= pos:
                u = self.frontiers[f]
                segs.append(_Segment(u, self._prefix_int(u), value, pos))
            start = pos + 1
        f = bisect_left(self.frontiers, start)
        if f < len(self.frontiers):
            u = self.frontiers[f]
            segs.append(_Segment(u, self._prefix_int(u), DYADIC_ZERO, None))
        self.segments = segs
        self.triggers = []
        best = None
        for seg in segs:
            for sub in self.subs:
                if sub.outcome is not None:
                    continue
                trig = self._trigger_int(seg, sub)
                if trig is None:
                    continue
                self.triggers.append((trig, seg, sub))
                if best is None or trig < best:
                    best = trig
        self.min_trigger_int = best

    def _n_allowed(self, maxbeta: Dyadic, sub: _Sub) -> int:
        if maxbeta.is_zero():
            return sub.m
        return min(sub.m, max_n_with_pow2_above(maxbeta))

    def _trigger_int(self, seg: _Segment, sub: _Sub) -> int | None:
        """Least alpha (in fine units) that makes some level fire here."""
        hi = self._n_allowed(seg.maxbeta, sub)
        if hi < 0:
            return None
        gap = self.seq.max_gap_upto(hi)
        if gap is None:
            return None
        # threshold 2^-(gap - check_d), expressed in units of 2^-fine_exp
        return seg.prefix_int + (1 << (self.fine_exp - gap + sub.check_d))

    def _fired(self) -> list[tuple[_Segment, _Sub]]:
        """All (segment, sub) pairs whose trigger is strictly exceeded."""
        if self.min_trigger_int is None or self.alpha_int <= self.min_trigger_int:
            return []
        return [
            (seg, sub)
            for trig, seg, sub in self.triggers
            if sub.outcome is None and self.alpha_int > trig
        ]

    def witness_for(self, seg: _Segment, sub: _Sub) -> tuple[int, int]:
        """Smallest witnessing level for a fired segment, with its u."""
        tail = Dyadic(self.alpha_int - seg.prefix_int, self.fine_exp)
        gap_needed = least_exp_strictly_below(tail) + sub.check_d
        hi = self._n_allowed(seg.maxbeta, sub)
        n = self.seq.min_n_with_gap_at_least(gap_needed, hi)
        if n is None:
            raise AssertionError("fired segment has no witness")
        return n, seg.u

    # -- turns

    def alice_turn(self, sub: _Sub, scripted_index: int | None = None):
        self.rounds += 1
        if exceeds_pow2(len(sub.placements) + 1, sub.unit_exp - sub.scale_exp):
            raise BudgetExhausted(
                f"alice cap {sub.cap} reached in sub d={sub.check_d}"
            )
        index = self.next_index
        if scripted_index is not None and scripted_index != index:
            raise RuleViolation(
                f"transcript placement at {scripted_index}, strategy says {index}"
            )
        sub.placements.append(index)
        self.alpha_int += 1 << sub.shift
        self.next_index = index + 1
        if self.record_moves:
            sub_tag = sub.check_d if len(self.subs) > 1 else None
            self.moves.append(
                (self.rounds, "A", "place", index, sub_tag, self._totals())
            )

    def bob_turn(self, raises: list[tuple[int, Dyadic]]) -> Outcome | None:
        violation = (
            _Game1Referee._validate_raises(raises, self.beta_total)
            if raises
            else None
        )
        if violation is None and raises:
            for index, delta in raises:
                old = self.beta.get(index)
                new = delta if old is None else old + delta
                self.beta[index] = new
                self.beta_total = self.beta_total + delta
                self.lemma_sum = self.lemma_sum + Dyadic.pow2(1 - weight_bucket(new))
                if old is not None:
                    self.lemma_sum = self.lemma_sum - Dyadic.pow2(
                        1 - weight_bucket(old)
                    )
                if index >= self.next_index:
                    self.next_index = index + 1
                self._update_records(index, new)
                f = bisect_left(self.frontiers, index + 1)
                if f == len(self.frontiers) or self.frontiers[f] != index + 1:
                    self.frontiers.insert(f, index + 1)
            self._rebuild_segments()
        if self.record_moves:
            totals = self._totals()
            if raises:
                packed = tuple((i, d.num, d.exp) for i, d in raises)
                self.moves.append((self.rounds, "B", "raise", packed, None, totals))
            else:
                self.moves.append((self.rounds, "B", "pass", None, None, totals))
        return violation

    def _totals(self):
        return (
            self.alpha_int,
            self.fine_exp,
            self.beta_total.num,
            self.beta_total.exp,
        )

    # -- views for bots

    def remaining_budget(self) -> Dyadic:
        return DYADIC_ONE - self.beta_total

    def spoil_options(self) -> list[tuple[int, Dyadic]]:
        """One raise at the right edge of the placements, big enough to
        kill every fired witness: lower positions would leave the tail
        beyond the raise immediately re-armable."""
        fired = self._fired()
        if not fired:
            return []
        needed = DYADIC_ZERO
        for seg, sub in fired:
            n, _u = self.witness_for(seg, sub)
            value = Dyadic.pow2(-n)
            if value > needed:
                needed = value
        pos = self.next_index - 1
        have = self.beta.get(pos, DYADIC_ZERO)
        if have >= needed:
            return []
        return [(pos, needed - have)]

    def action_span(self) -> int:
        return max(self.next_index, 8) + 2


def _make_sub(seq: SequenceSpec, check_d: int, param_d: int, scale_exp: int) -> _Sub:
    m = finite_part_end(seq, param_d)
    s = 1 + param_d + seq.max_n_plus_a(0, m)
    return _Sub(
        check_d=check_d,
        param_d=param_d,
        scale_exp=scale_exp,
        m=m,
        unit_exp=s + scale_exp,
        unit=Dyadic.pow2(-(s + scale_exp)),
        cap=Dyadic.pow2(-scale_exp),
    )


def _run_game2(
    seq: SequenceSpec, subs: list[_Sub], bob: BobBot, caps: GameCaps
) -> tuple[_Game2Referee, list[Outcome]]:
    referee = _Game2Referee(seq, subs, caps)
    rr = 0
    active = [s for s in subs if s.outcome is None and not s.capped]
    while referee.rounds < caps.max_rounds:
        if not active:
            break
        sub = active[rr % len(active)]
        rr += 1
        try:
            referee.alice_turn(sub)
        except BudgetExhausted:
            if len(subs) == 1:
                raise
            sub.capped = True  # the other parallel strategies keep playing
            active = [s for s in subs if s.outcome is None and not s.capped]
            continue
        bad = referee.bob_turn(bob.move(referee))
        if bad is not None:
            for s in subs:
                if s.outcome is None:
                    s.outcome = bad
            break
        decided = False
        for seg, sub_fired in referee._fired():
            if sub_fired.outcome is None:
                witness = referee.witness_for(seg, sub_fired)
                sub_fired.outcome = Outcome("alice_wins", list(witness))
                referee.fired_events.append((referee.rounds, *witness))
                decided = True
        if decided:
            referee._rebuild_segments()
            active = [s for s in subs if s.outcome is None and not s.capped]
    for s in subs:
        if s.outcome is None:
            s.outcome = Outcome("undecided", detail=f"round cap {caps.max_rounds}")
    return referee, [s.outcome for s in subs]


def _game2_params(seq, sub: _Sub, bob, caps, referee) -> dict:
    return {
        "a": seq.name,
        "d": sub.check_d,
        "param_d": sub.param_d,
        "scale_exp": sub.scale_exp,
        "bob": bob.name,
        "finite_part_end": sub.m,
        "unit": str(sub.unit),
        "alpha_cap": str(sub.cap),
        "max_rounds": caps.max_rounds,
        "final": {
            "alpha_total": str(referee.alpha_total()),
            "beta_total": str(referee.beta_total),
        },
    }


def game2_run(seq, d: int, bob: BobBot, caps: GameCaps = GameCaps()) -> GameTranscript:
    """The d-parameter Game II against a Bob adversary."""
    spec = as_sequence(seq)
    sub = _make_sub(spec, check_d=d, param_d=d, scale_exp=0)
    referee, outcomes = _run_game2(spec, [sub], bob, caps)
    params = _game2_params(spec, sub, bob, caps, referee)
    return GameTranscript("game2", params, referee.moves, outcomes[0], referee.rounds)


def combined_alice2(
    d_max: int, seq, bob: BobBot, caps: GameCaps = GameCaps()
) -> list[GameTranscript]:
    """All sub-strategies d = 0..d_max in parallel against one Bob.

    Sub-game d plays the (2d)-parameter strategy scaled by 2^-(d+1),
    so the per-sub caps sum to strictly below 1; every sub's winning
    condition is checked with its own d over the combined measure.
    Returns one transcript per sub, all sharing the global move log.
    """
    if d_max < 0:
        raise UsageError("d_max must be a natural number")
    spec = as_sequence(seq)
    subs = [
        _make_sub(spec, check_d=d, param_d=2 * d, scale_exp=d + 1)
        for d in range(d_max + 1)
    ]
    referee, outcomes = _run_game2(spec, subs, bob, caps)
    out = []
    for sub, outcome in zip(subs, outcomes):
        params = _game2_params(spec, sub, bob, caps, referee)
        out.append(
            GameTranscript("game2", params, referee.moves, outcome, referee.rounds)
        )
    return out


def replay_game2(transcript: GameTranscript) -> _Game2Referee:
    """Re-run a single Game II transcript, verifying every move, the
    per-round technical-lemma bound, and the recorded outcome."""
    spec = as_sequence(transcript.params["a"])
    sub = _make_sub(
        spec,
        check_d=transcript.params["d"],
        param_d=transcript.params["param_d"],
        scale_exp=transcript.params["scale_exp"],
    )
    if str(sub.unit) != transcript.params["unit"]:
        raise RuleViolation("transcript unit mismatch")
    caps = GameCaps(transcript.params["max_rounds"])
    referee = _Game2Referee(spec, [sub], caps, record_moves=False)
    outcome = None
    moves = transcript.moves
    idx = 0
    while idx < len(moves):
        row = moves[idx]
        if row[1] != "A" or row[2] != "place":
            raise RuleViolation("expected an Alice placement")
        referee.alice_turn(sub, scripted_index=row[3])
        if referee._totals() != row[5]:
            raise RuleViolation("alpha/beta totals mismatch on an Alice row")
        idx += 1
        if idx >= len(moves):
            raise RuleViolation("transcript ends without Bob's reply")
        row = moves[idx]
        if row[1] != "B":
            raise RuleViolation("missing Bob reply")
        raises = (
            [(i, Dyadic(num, exp)) for i, num, exp in row[3]]
            if row[2] == "raise"
            else []
        )
        bad = referee.bob_turn(raises)
        if bad is not None:
            outcome = bad
            break
        if referee._totals() != row[5]:
            raise RuleViolation("alpha/beta totals mismatch on a Bob row")
        if referee.lemma_sum > referee.beta_total + referee.beta_total:
            raise RuleViolation("technical lemma bound violated in replay")
        idx += 1
        fired = referee._fired()
        if fired:
            seg, sub_fired = fired[0]
            outcome = Outcome(
                "alice_wins", list(referee.witness_for(seg, sub_fired))
            )
            break
    if outcome is None:
        outcome = Outcome(
            "undecided", detail=f"round cap {transcript.params['max_rounds']}"
        )
    if (outcome.kind, outcome.witness) != (
        transcript.outcome.kind,
        transcript.outcome.witness,
    ):
        raise RuleViolation(
            f"replayed outcome {outcome} does not match recorded {transcript.outcome}"
        )
    return referee
