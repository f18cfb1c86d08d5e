"""Stage tables, the four queries, cover enumeration, and the encoding."""

import random

import pytest
from fractions import Fraction

from beaverlab.beaver import (
    Stage,
    StageTable,
    bpprime_cover_enumerate,
    compute_stage,
    encode_plain_as_prefix,
    geometric_halving_series,
    modulus_of_convergence,
    parse_stage_table,
    serialize_stage_table,
    stage_query,
    weightmap_series,
)
from beaverlab.core import Dyadic, WeightMap, weight_tail
from beaverlab.errors import (
    EnumerationCapExceeded,
    InvalidProgram,
    NoConvergence,
    PadError,
    RuleViolation,
    UsageError,
)
from beaverlab.tinyvm import decode_plain, run_plain, run_prefix

from bruteforce import (
    all_plain_strings,
    oracle_B,
    oracle_BB,
    oracle_BP,
    oracle_BPprime,
    oracle_m,
)


@pytest.fixture(scope="module")
def small_stage():
    return compute_stage(Stage(4, 8))


@pytest.fixture(scope="module")
def mid_stage():
    return compute_stage(Stage(8, 256))


class TestComputeStage:
    def test_small_semimeasure(self, small_stage):
        # the single halting prefix program of length <= 4 is "0101"
        assert small_stage.m == WeightMap({0: Dyadic(1, 4)})

    def test_small_maxout(self, small_stage):
        assert small_stage.maxout[4] == 1
        assert 0 not in small_stage.maxout  # the empty string is invalid

    def test_empty_stage(self):
        table = compute_stage(Stage(1, 1))
        assert table.m == WeightMap()

    def test_matches_oracle_semimeasure(self, mid_stage):
        expect = oracle_m(8, 256)
        got = {k: Fraction(w.num, 2**w.exp) for k, w in mid_stage.m.items()}
        assert got == expect

    def test_kraft(self, mid_stage):
        assert mid_stage.m.total() <= Dyadic.one()

    def test_enumeration_cap(self):
        with pytest.raises(EnumerationCapExceeded):
            compute_stage(Stage(10, 8), enum_cap=512)

    def test_jobs_deterministic(self):
        serial = compute_stage(Stage(7, 64), jobs=1)
        parallel = compute_stage(Stage(7, 64), jobs=3)
        assert serialize_stage_table(serial) == serialize_stage_table(parallel)


class TestStageQuery:
    def test_b(self, small_stage):
        assert stage_query(small_stage, "B", 4) == 1
        assert stage_query(small_stage, "B", 1) == 0

    def test_bb(self, small_stage):
        assert stage_query(small_stage, "BB", 4) == 1

    def test_bp(self, small_stage):
        assert stage_query(small_stage, "BP", 3) is None
        assert stage_query(small_stage, "BP", 4) == 0

    def test_bpprime(self, small_stage):
        assert stage_query(small_stage, "BPprime", 1) == 0

    def test_bpprime_alias(self, small_stage):
        assert stage_query(small_stage, "BP'", 1) == 0

    def test_argument_bounds(self, small_stage):
        with pytest.raises(UsageError):
            stage_query(small_stage, "B", 5)
        with pytest.raises(UsageError):
            stage_query(small_stage, "B", -1)
        with pytest.raises(UsageError):
            stage_query(small_stage, "beaver", 1)
        # BPprime is defined for every n
        assert stage_query(small_stage, "BPprime", 30) == 0

    @pytest.mark.parametrize("kind", ["B", "BB", "BP"])
    def test_oracle_equivalence_small(self, mid_stage, kind):
        oracle = {"B": oracle_B, "BB": oracle_BB, "BP": oracle_BP}[kind]
        for n in range(9):
            assert stage_query(mid_stage, kind, n) == oracle(n, 256), (kind, n)

    def test_oracle_equivalence_bpprime(self, mid_stage):
        for n in range(9):
            assert stage_query(mid_stage, "BPprime", n) == oracle_BPprime(n, 8, 256)

    def test_bp_below_bpprime(self, mid_stage):
        for n in range(9):
            bp = stage_query(mid_stage, "BP", n)
            if bp is not None:
                assert stage_query(mid_stage, "BPprime", n) >= bp

    def test_monotone_in_argument(self, mid_stage):
        for kind in ("B", "BB", "BP", "BPprime"):
            values = [stage_query(mid_stage, kind, n) for n in range(9)]
            defined = [v for v in values if v is not None]
            assert defined == sorted(defined)

    def test_stage_monotonicity(self):
        small = compute_stage(Stage(6, 64))
        bigger = compute_stage(Stage(8, 256))
        assert bigger.stage.dominates(small.stage)
        for k, w in small.m.items():
            assert bigger.m.get(k) >= w
        for kind in ("B", "BB", "BP", "BPprime"):
            for n in range(7):
                lo = stage_query(small, kind, n)
                hi = stage_query(bigger, kind, n)
                if lo is not None:
                    assert hi is not None and hi >= lo


class TestStageCache:
    def test_roundtrip_byte_identical(self, tmp_path):
        table = compute_stage(Stage(6, 64), cache_dir=tmp_path)
        path = tmp_path / "stage-L6-t64-tinyvm-v1.txt"
        first = path.read_bytes()
        assert first.startswith(b"beaverlab-stage-v1 L=6 t=64 machine=tinyvm-v1\n")
        loaded = parse_stage_table(path.read_text())
        assert serialize_stage_table(loaded) == first.decode()
        assert loaded == table

    def test_warm_load_equals_fresh(self, tmp_path):
        fresh = compute_stage(Stage(6, 64), cache_dir=tmp_path)
        warm = compute_stage(Stage(6, 64), cache_dir=tmp_path)
        assert warm == fresh

    def test_rejects_foreign_header(self):
        with pytest.raises(ValueError):
            parse_stage_table("someother-format L=1 t=1 machine=tinyvm-v1\n")


class TestModulus:
    def test_geometric(self):
        # tail beyond 1 is exactly 1/4, not < 1/4; beyond 2 it is 1/8
        assert modulus_of_convergence(geometric_halving_series(), Dyadic(1, 2)) == 2

    def test_front_loaded(self):
        series = iter([(Dyadic(1, 1), Dyadic.zero())])
        assert modulus_of_convergence(series, Dyadic.one()) == 0

    def test_huge_epsilon(self):
        assert modulus_of_convergence(geometric_halving_series(), Dyadic.from_int(2)) == 0

    def test_rejects_zero_epsilon(self):
        with pytest.raises(UsageError):
            modulus_of_convergence(geometric_halving_series(), Dyadic.zero())

    def test_work_cap(self):
        constant = ((Dyadic(1, 1), Dyadic.one()) for _ in iter(int, 1))
        with pytest.raises(NoConvergence):
            modulus_of_convergence(constant, Dyadic(1, 4), work_cap=100)

    def test_stage_series_equals_bpprime(self, mid_stage):
        for n in range(9):
            got = modulus_of_convergence(weightmap_series(mid_stage.m), Dyadic.pow2(-n))
            assert got == stage_query(mid_stage, "BPprime", n)


class TestCoverEnumerate:
    def test_two_snapshot_example(self):
        snaps = [
            WeightMap({0: Dyadic(1, 2)}),
            WeightMap({0: Dyadic(1, 2), 5: Dyadic(1, 1)}),
        ]
        assert bpprime_cover_enumerate(1, snaps) == [6]

    def test_single_emission_budget(self):
        assert bpprime_cover_enumerate(0, [WeightMap({3: Dyadic.one()})]) == [4]

    def test_empty(self):
        assert bpprime_cover_enumerate(3, [WeightMap()]) == []

    def test_rejects_nonmonotone(self):
        snaps = [WeightMap({0: Dyadic(1, 1)}), WeightMap({0: Dyadic(1, 2)})]
        with pytest.raises(RuleViolation):
            bpprime_cover_enumerate(1, snaps)

    def test_rejects_overweight(self):
        with pytest.raises(RuleViolation):
            bpprime_cover_enumerate(1, [WeightMap({0: Dyadic(3, 1)})])

    def test_randomized_budget_and_cover(self):
        rng = random.Random(7)
        for _ in range(300):
            n = rng.randrange(0, 8)
            snaps = self._random_snapshots(rng)
            emitted = bpprime_cover_enumerate(n, snaps)
            assert len(emitted) <= 1 << n
            assert emitted == sorted(set(emitted))
            if snaps:
                final = snaps[-1]
                last = emitted[-1] if emitted else 0
                # remaining tail is settled below the threshold
                assert weight_tail(final, last) < Dyadic.pow2(-n) or not emitted

    @staticmethod
    def _random_snapshots(rng):
        entries = {}
        total = Dyadic.zero()
        snaps = []
        for _ in range(rng.randrange(0, 6)):
            for _ in range(rng.randrange(0, 4)):
                delta = Dyadic.pow2(-rng.randrange(1, 9))
                if total + delta > Dyadic.one():
                    continue
                i = rng.randrange(0, 30)
                entries[i] = entries.get(i, Dyadic.zero()) + delta
                total = total + delta
            snaps.append(WeightMap(dict(entries)))
        return snaps


class TestEncodePlainAsPrefix:
    @pytest.mark.parametrize(
        "q,n,expect",
        [
            ("1111", 4, "00111001111"),
            ("1000", 4, "00111001000"),
            ("1", 0, "01101"),
        ],
    )
    def test_examples(self, q, n, expect):
        assert encode_plain_as_prefix(q, n) == expect

    def test_rejects_invalid_program(self):
        with pytest.raises(InvalidProgram):
            encode_plain_as_prefix("0000", 4)

    def test_rejects_overlong(self):
        with pytest.raises(PadError):
            encode_plain_as_prefix("101010", 2)

    def test_exhaustive_roundtrip_short(self):
        budget = 1 << 8
        for length in range(1, 8):
            for q in all_plain_strings(length):
                if len(q) != length or decode_plain(q) is None:
                    continue
                for n in range(max(0, length - 2), length + 3):
                    if length > n + 2:
                        continue
                    encoded = encode_plain_as_prefix(q, n)
                    k = (n + 3).bit_length() - 1
                    assert len(encoded) == 2 * k + 1 + n + 2
                    assert run_prefix(encoded, budget) == run_plain(q, budget)
