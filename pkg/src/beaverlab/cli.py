"""Command-line front end.

Subcommands: tabulate (stage tables to CSV), game1 / game2 /
game2-combined (adversarial runs with optional JSONL transcripts),
encode (plain-to-prefix wrapping with a round-trip check), and verify
(invariant suites).  Standard output stays machine-parseable; progress
and the resolved configuration go to standard error.

Exit codes: 0 success / all-pass, 1 property violation or a failed
strategy, 2 usage error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from .beaver import (
    Stage,
    bpprime_cover_enumerate,
    compute_stage,
    encode_plain_as_prefix,
    stage_query,
)
from .core import Dyadic, WeightMap, weight_tail
from .errors import CapExceeded, InvalidProgram, PadError, UsageError
from .games import (
    GameCaps,
    combined_alice2,
    game1_run,
    game2_run,
    lemma_weight,
    make_bob,
    replay_game1,
    replay_game2,
)
from .seqkit import (
    PairApprox,
    PairList,
    allocate_intervals,
    dedup_merge,
    group_min,
    grouped_weight_sum,
    minorant_blocks,
)
from .tinyvm import enumerate_prefix_syntax, run_plain, run_prefix

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_CAP = 3


def _log(msg: str):
    print(msg, file=sys.stderr)


def _load_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve_config(args: argparse.Namespace) -> argparse.Namespace:
    """Config file values fill in unset flags; flags win."""
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config)
        for key, value in file_values.items():
            attr = key.replace("-", "_")
            if getattr(args, attr, None) is None:
                setattr(args, attr, value)
    if getattr(args, "cache_dir", None) is None:
        args.cache_dir = os.environ.get("BEAVERLAB_CACHE")
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    _log(f"config: {resolved}")
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-")
            raise UsageError(f"{flag} is required (flag or config file)")


def _stage_for(length: int, steps: int, args) -> "StageTable":
    return compute_stage(
        Stage(length, steps),
        cache_dir=args.cache_dir,
        jobs=int(args.jobs or 1),
    )


def cmd_tabulate(args) -> int:
    _require(args, "max_len", "max_steps")
    max_len = int(args.max_len)
    max_steps = int(args.max_steps)
    rows = ["stage_L,stage_t,n,B,BB,BP,BPprime"]
    for length in range(1, max_len + 1):
        _log(f"stage ({length}, {max_steps})")
        table = _stage_for(length, max_steps, args)
        for n in range(length + 1):
            cells = [
                stage_query(table, kind, n) for kind in ("B", "BB", "BP", "BPprime")
            ]
            rendered = ",".join("" if c is None else str(c) for c in cells)
            rows.append(f"{length},{max_steps},{n},{rendered}")
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _build_bob(args):
    if args.bob == "blind":
        schedule = [
            _stage_for(length, int(args.blind_max_steps), args).m
            for length in range(1, int(args.blind_max_len) + 1)
        ]
        return make_bob("blind", schedule=schedule)
    return make_bob(args.bob, seed=int(args.seed or 0))


def _report_game(transcript, args) -> int:
    print(transcript.summary())
    if args.transcript:
        Path(args.transcript).write_text(
            transcript.to_jsonl(), encoding="utf-8", newline=""
        )
    return EXIT_OK if transcript.outcome.alice_wins else EXIT_FAIL


def cmd_game1(args) -> int:
    _require(args, "a_seq", "d", "bob")
    bob = _build_bob(args)
    caps = GameCaps(int(args.max_rounds))
    transcript = game1_run(args.a_seq, int(args.d), bob, caps)
    if transcript.outcome.alice_wins:
        replay_game1(transcript)
    return _report_game(transcript, args)


def cmd_game2(args) -> int:
    _require(args, "a_seq", "d", "bob")
    bob = _build_bob(args)
    caps = GameCaps(int(args.max_rounds))
    transcript = game2_run(args.a_seq, int(args.d), bob, caps)
    if transcript.outcome.alice_wins:
        replay_game2(transcript)
    return _report_game(transcript, args)


def cmd_game2_combined(args) -> int:
    _require(args, "a_seq", "d_max", "bob")
    bob = _build_bob(args)
    caps = GameCaps(int(args.max_rounds))
    transcripts = combined_alice2(int(args.d_max), args.a_seq, bob, caps)
    for transcript in transcripts:
        print(transcript.summary())
    if args.transcript:
        Path(args.transcript).write_text(
            transcripts[-1].to_jsonl(), encoding="utf-8", newline=""
        )
    ok = all(t.outcome.alice_wins for t in transcripts)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_encode(args) -> int:
    _require(args, "program", "n")
    program = args.program
    n = int(args.n)
    encoded = encode_plain_as_prefix(program, n)
    budget = 1 << 10
    direct = run_plain(program, budget)
    wrapped = run_prefix(encoded, budget)
    print(encoded)
    if wrapped == direct and direct.halted:
        print(f"roundtrip OK, output {direct.output}")
        return EXIT_OK
    if wrapped == direct:
        print(f"roundtrip OK, outcome {direct.kind}")
        return EXIT_OK
    print(f"roundtrip FAILED: plain {direct.kind} vs prefix {wrapped.kind}")
    return EXIT_FAIL


# -- verify suites -----------------------------------------------------------

def _suite_kraft(args, failures: list[str]):
    max_len = int(args.max_len)
    one = Dyadic.one()
    for length in range(1, max_len + 1):
        for steps in (16, 256, 1024):
            table = _stage_for(length, steps, args)
            if table.m.total() > one:
                failures.append(f"kraft: sum m > 1 at stage ({length},{steps})")
    for length in range(1, min(max_len, 16) + 1):
        total = Dyadic.zero()
        words = list(enumerate_prefix_syntax(length))
        for w in words:
            total = total + Dyadic.pow2(-len(w))
        if total > one:
            failures.append(f"kraft: syntactic sum > 1 at L={length}")
        for i, w in enumerate(words):
            for v in words[i + 1 :]:
                if v.startswith(w):
                    failures.append(f"kraft: {w} is a prefix of {v}")
    _log(f"kraft: sum m <= 1 at all {max_len} stage lengths x 3 budgets")


def _suite_monotone(args, failures: list[str]):
    max_len = int(args.max_len)
    steps = 1024
    prev = None
    for length in range(1, max_len + 1):
        table = _stage_for(length, steps, args)
        if prev is not None:
            for k, w in prev.m.items():
                if table.m.get(k) < w:
                    failures.append(f"monotone: m({k}) shrank at L={length}")
            for kind in ("B", "BB", "BP", "BPprime"):
                for n in range(prev.stage.L + 1):
                    lo = stage_query(prev, kind, n)
                    hi = stage_query(table, kind, n)
                    if lo is not None and (hi is None or hi < lo):
                        failures.append(
                            f"monotone: {kind}({n}) shrank from L={prev.stage.L}"
                        )
        for kind in ("B", "BB", "BP", "BPprime"):
            values = [stage_query(table, kind, n) for n in range(length + 1)]
            defined = [v for v in values if v is not None]
            if defined != sorted(defined):
                failures.append(f"monotone: {kind} not nondecreasing at L={length}")
        bp_ord = [
            (stage_query(table, "BP", n), stage_query(table, "BPprime", n))
            for n in range(length + 1)
        ]
        for n, (bp, bpp) in enumerate(bp_ord):
            if bp is not None and bpp < bp:
                failures.append(f"monotone: BPprime({n}) < BP({n}) at L={length}")
        prev = table
    _log(f"monotone: stage chain L=1..{max_len} at t={steps} ordered")


def _suite_cover(args, failures: list[str]):
    max_len = int(args.max_len)
    steps = 1024
    schedule = [_stage_for(length, steps, args).m for length in range(1, max_len + 1)]
    final = schedule[-1]
    for n in range(min(max_len, 12) + 1):
        emitted = bpprime_cover_enumerate(n, schedule)
        if len(emitted) > 1 << n:
            failures.append(f"cover: {len(emitted)} emissions at n={n}")
        last = emitted[-1] if emitted else 0
        bpp = stage_query(_stage_for(max_len, steps, args), "BPprime", n)
        if last < bpp:
            failures.append(f"cover: final emission {last} < BPprime({n}) = {bpp}")
        if weight_tail(final, last) >= Dyadic.pow2(-n):
            failures.append(f"cover: tail not settled at n={n}")
    rng = random.Random(int(args.seed or 0))
    for trial in range(100):
        n = rng.randrange(0, 7)
        snaps = _random_monotone_snapshots(rng)
        emitted = bpprime_cover_enumerate(n, snaps)
        if len(emitted) > 1 << n:
            failures.append(f"cover: random trial {trial} emitted {len(emitted)}")
    _log("cover: emission budgets hold on stage and random schedules")


def _random_monotone_snapshots(rng: random.Random) -> list[WeightMap]:
    entries: dict[int, Dyadic] = {}
    snaps = []
    budget = Dyadic.one()
    total = Dyadic.zero()
    for _ in range(rng.randrange(1, 6)):
        for _ in range(rng.randrange(0, 4)):
            delta = Dyadic.pow2(-rng.randrange(2, 10))
            if total + delta > budget:
                continue
            index = rng.randrange(0, 40)
            entries[index] = entries.get(index, Dyadic.zero()) + delta
            total = total + delta
        snaps.append(WeightMap(dict(entries)))
    return snaps


def _suite_encode(args, failures: list[str]):
    from .tinyvm import decode_plain

    budget = 1 << 10
    checked = 0
    for length in range(1, 9):
        for value in range(1 << length):
            q = format(value, f"0{length}b")
            if decode_plain(q) is None:
                continue
            for n in range(max(0, length - 2), length + 3):
                if length > n + 2:
                    continue
                encoded = encode_plain_as_prefix(q, n)
                if len(encoded) != 2 * ((n + 3).bit_length() - 1) + 1 + n + 2:
                    failures.append(f"encode: length formula failed for {q}, n={n}")
                if run_prefix(encoded, budget) != run_plain(q, budget):
                    failures.append(f"encode: roundtrip failed for {q}, n={n}")
                checked += 1
    _log(f"encode: {checked} roundtrips verified")


def _suite_games(args, failures: list[str]):
    seed = int(args.seed or 0)
    matrix = []
    for d in (0, 1, 2):
        matrix.append(("game1", "const:0", d, "passive", 0))
        matrix.append(("game1", "const:0", d, "greedy", 0))
        matrix.append(("game1", "const:0", d, "random", seed))
        matrix.append(("game2", "const:0", d, "passive", 0))
        matrix.append(("game2", "const:0", d, "greedy", 0))
        matrix.append(("game2", "const:0", d, "random", seed))
    matrix.append(("game1", "log", 0, "greedy", 0))
    matrix.append(("game2", "log", 0, "passive", 0))
    for game, a, d, bob_kind, bob_seed in matrix:
        bob = make_bob(bob_kind, seed=bob_seed)
        runner = game1_run if game == "game1" else game2_run
        transcript = runner(a, d, bob)
        if not transcript.outcome.alice_wins:
            failures.append(
                f"games: {game} a={a} d={d} bob={bob_kind}: {transcript.outcome.kind}"
            )
            continue
        if game == "game1":
            replay_game1(transcript)
        else:
            referee = replay_game2(transcript)
            beta = WeightMap(referee.beta)
            if lemma_weight(beta) > referee.beta_total + referee.beta_total:
                failures.append(f"games: lemma bound broken ({a}, d={d}, {bob_kind})")
    _log(f"games: {len(matrix)} feasible cells all AliceWins with clean replays")


def _suite_seqkit(args, failures: list[str]):
    rng = random.Random(int(args.seed or 0))
    for trial in range(200):
        rows = rng.randrange(1, 6)
        stages = rng.randrange(1, 6)
        grid = _random_pair_grid(rng, rows, stages)
        pa = PairApprox(lambda n, k, g=grid: g[(n, k)])
        merged = dedup_merge(pa, rows, stages)
        final = PairList(
            sorted({grid[(n, stages - 1)] for n in range(rows)})
        )
        if merged.exp_sum() > final.exp_sum() + final.exp_sum():
            failures.append(f"seqkit: dedup inflation above 2x in trial {trial}")
        grouped = group_min(merged, "X")
        half = merged.exp_sum()
        if grouped_weight_sum(grouped) + grouped_weight_sum(grouped) < half:
            failures.append(f"seqkit: grouping bound broken in trial {trial}")
    intervals = allocate_intervals("const:0", 3)
    shifted = [(l - d, r - d) for d, (l, r) in enumerate(intervals)]
    for (l1, r1), (l2, r2) in zip(shifted, shifted[1:]):
        if l2 <= r1:
            failures.append("seqkit: shifted intervals overlap")
    blocks = minorant_blocks(lambda n, k: (n + 1).bit_length() - 1)
    for _ in range(5):
        block = next(blocks)
        if not block.mass() > Dyadic.one():
            failures.append("seqkit: minorant block mass <= 1")
    _log("seqkit: dedup, grouping, allocation, minorant checks passed")


def _random_pair_grid(rng: random.Random, rows: int, stages: int) -> dict:
    """Rows with x nondecreasing, y nonincreasing, x <= y throughout."""
    grid = {}
    for n in range(rows):
        x = rng.randrange(-5, 5)
        y = x + rng.randrange(0, 8)
        for k in range(stages):
            grid[(n, k)] = (x, y)
            if rng.random() < 0.5:
                x = min(y, x + rng.randrange(0, 3))
            if rng.random() < 0.5:
                y = max(x, y - rng.randrange(0, 3))
    return grid


SUITES = {
    "kraft": _suite_kraft,
    "monotone": _suite_monotone,
    "cover": _suite_cover,
    "encode": _suite_encode,
    "games": _suite_games,
    "seqkit": _suite_seqkit,
}


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    failures: list[str] = []
    for name in names:
        _log(f"suite: {name}")
        SUITES[name](args, failures)
    if failures:
        for failure in failures:
            print(f"FAIL {failure}")
        return EXIT_FAIL
    print(f"PASS {'+'.join(names)}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beaverlab",
        description="resource-bounded busy-beaver workbench (machine tinyvm-v1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--cache-dir", dest="cache_dir")
        p.add_argument("--jobs", default=None, help="parallel workers for stages")
        p.add_argument("--seed", default=None)

    p = sub.add_parser("tabulate", help="stage tables to CSV")
    p.add_argument("--max-len", dest="max_len")
    p.add_argument("--max-steps", dest="max_steps")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_tabulate)

    for name, fn in (("game1", cmd_game1), ("game2", cmd_game2)):
        p = sub.add_parser(name, help=f"run {name} against a bob adversary")
        p.add_argument("--a-seq", dest="a_seq")
        p.add_argument("--d")
        p.add_argument("--bob", choices=["greedy", "passive", "random", "blind"])
        p.add_argument("--max-rounds", dest="max_rounds", default=10**6)
        p.add_argument("--transcript")
        p.add_argument("--blind-max-len", dest="blind_max_len", default=10)
        p.add_argument("--blind-max-steps", dest="blind_max_steps", default=1024)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("game2-combined", help="parallel sub-strategies, one bob")
    p.add_argument("--d-max", dest="d_max")
    p.add_argument("--a-seq", dest="a_seq")
    p.add_argument("--bob", choices=["greedy", "passive", "random", "blind"])
    p.add_argument("--max-rounds", dest="max_rounds", default=10**6)
    p.add_argument("--transcript")
    p.add_argument("--blind-max-len", dest="blind_max_len", default=10)
    p.add_argument("--blind-max-steps", dest="blind_max_steps", default=1024)
    common(p)
    p.set_defaults(func=cmd_game2_combined)

    p = sub.add_parser("encode", help="wrap a plain program as a prefix one")
    p.add_argument("--program")
    p.add_argument("--n")
    common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("verify", help="invariant suites")
    p.add_argument("--suite", required=True, choices=[*SUITES, "all"])
    p.add_argument("--max-len", dest="max_len", default=12)
    common(p)
    p.set_defaults(func=cmd_verify)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _resolve_config(args)
        return args.func(args)
    except (UsageError, InvalidProgram, PadError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
