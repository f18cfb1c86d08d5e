"""Sequence specs, reductions, the minorant, and interval allocation."""

import random

import pytest

from beaverlab.core import Dyadic
from beaverlab.errors import RuleViolation, UsageError, WorkCapExceeded
from beaverlab.seqkit import (
    INF,
    ConstSeq,
    ListSeq,
    LogSeq,
    PairApprox,
    PairList,
    SequenceSpec,
    TwoLogSeq,
    allocate_intervals,
    computable_minorant,
    dedup_merge,
    group_min,
    grouped_weight_sum,
    minorant_blocks,
    pair_approx_from_csv,
    parse_sequence_spec,
    pow2_weight,
)


class TestSequenceSpecs:
    def test_parse(self):
        assert parse_sequence_spec("const:3").value(9) == 3
        assert parse_sequence_spec("log").value(7) == 3
        assert parse_sequence_spec("twolog").value(7) == 6
        seq = parse_sequence_spec("list:2,0,1")
        assert [seq.value(n) for n in range(4)] == [2, 0, 1, INF]
        with pytest.raises(UsageError):
            parse_sequence_spec("fibonacci")

    @pytest.mark.parametrize("spec,generic", [
        (LogSeq(), lambda n: (n + 1).bit_length() - 1),
        (TwoLogSeq(), lambda n: 2 * ((n + 1).bit_length() - 1)),
        (ConstSeq(2), lambda n: 2),
    ])
    def test_mass_closed_forms(self, spec, generic):
        scan = SequenceSpec(generic)
        rng = random.Random(1)
        for _ in range(200):
            lo = rng.randrange(0, 100)
            hi = lo + rng.randrange(0, 200)
            assert spec.mass(lo, hi) == scan.mass(lo, hi)

    def test_first_exceeding_closed_forms(self):
        rng = random.Random(2)
        for spec, generic in [
            (LogSeq(), lambda n: (n + 1).bit_length() - 1),
            (ConstSeq(1), lambda n: 1),
        ]:
            scan = SequenceSpec(generic)
            for _ in range(60):
                lo = rng.randrange(0, 30)
                target = Dyadic(rng.randrange(1, 40), rng.randrange(2, 5))
                assert spec.first_exceeding(lo, target) == scan.first_exceeding(
                    lo, target
                )

    def test_twolog_tail_is_provably_bounded(self):
        with pytest.raises(WorkCapExceeded):
            TwoLogSeq().first_exceeding(0, Dyadic.from_int(2))

    def test_gap_helpers_match_scan(self):
        for spec, generic in [
            (LogSeq(), lambda n: (n + 1).bit_length() - 1),
            (TwoLogSeq(), lambda n: 2 * ((n + 1).bit_length() - 1)),
            (ConstSeq(3), lambda n: 3),
        ]:
            scan = SequenceSpec(generic)
            for hi in [0, 1, 2, 3, 7, 20, 63, 64, 200]:
                assert spec.max_gap_upto(hi) == scan.max_gap_upto(hi)
        for gap in range(0, 30):
            assert LogSeq().min_n_with_gap_at_least(gap, 10**6) == SequenceSpec(
                lambda n: (n + 1).bit_length() - 1
            ).min_n_with_gap_at_least(gap, 10**6)


class TestDedupMerge:
    def test_doubling_chain(self):
        stages = [(0, 5), (2, 5), (2, 3)]
        pa = PairApprox(lambda n, k: stages[min(k, 2)])
        merged = dedup_merge(pa, 1, 3)
        assert merged.pairs == [(0, 5), (2, 5), (2, 3)]
        assert merged.exp_sum() == Dyadic(21, 5)
        # chain sum stays within twice the final term
        assert merged.exp_sum() <= Dyadic.pow2(2 - 3) + Dyadic.pow2(2 - 3)

    def test_constant_row_deduped(self):
        pa = PairApprox(lambda n, k: (1, 2))
        assert dedup_merge(pa, 1, 5).pairs == [(1, 2)]

    def test_shared_limit_emitted_once(self):
        pa = PairApprox(lambda n, k: (0, 1))
        assert dedup_merge(pa, 2, 4).pairs == [(0, 1)]

    def test_rejects_nonmonotone_rows(self):
        stages = [(3, 5), (2, 5)]  # x decreased
        pa = PairApprox(lambda n, k: stages[min(k, 1)])
        with pytest.raises(RuleViolation):
            dedup_merge(pa, 1, 2)

    def test_rejects_crossed_pair(self):
        pa = PairApprox(lambda n, k: (4, 2))
        with pytest.raises(RuleViolation):
            dedup_merge(pa, 1, 1)

    def test_inflation_bound_randomized(self):
        # emitted sum <= 2 * sum over rows (with multiplicity) of the limits
        rng = random.Random(5)
        for _ in range(300):
            rows, stages = rng.randrange(1, 6), rng.randrange(1, 7)
            grid = self._grid(rng, rows, stages)
            merged = dedup_merge(PairApprox(lambda n, k: grid[(n, k)]), rows, stages)
            final_sum = Dyadic.zero()
            for n in range(rows):
                x, y = grid[(n, stages - 1)]
                final_sum = final_sum + Dyadic.pow2(x - y)
            assert merged.exp_sum() <= final_sum + final_sum

    def test_stabilized_rows_survive(self):
        rng = random.Random(6)
        for _ in range(100):
            rows, stages = rng.randrange(1, 5), rng.randrange(1, 6)
            grid = self._grid(rng, rows, stages)
            merged = set(map(tuple, dedup_merge(
                PairApprox(lambda n, k: grid[(n, k)]), rows, stages
            )))
            for n in range(rows):
                assert grid[(n, stages - 1)] in merged

    @staticmethod
    def _grid(rng, rows, stages):
        grid = {}
        for n in range(rows):
            x = rng.randrange(-4, 4)
            y = x + rng.randrange(0, 6)
            for k in range(stages):
                grid[(n, k)] = (x, y)
                if rng.random() < 0.6:
                    x = min(y, x + rng.randrange(0, 3))
                if rng.random() < 0.6:
                    y = max(x, y - rng.randrange(0, 3))
        return grid


class TestGroupMin:
    def test_axis_x(self):
        grouped = group_min(PairList([(3, 7), (3, 5), (4, 9)]), "X")
        assert grouped == {3: 2, 4: 5}
        assert grouped_weight_sum(grouped) == Dyadic(9, 5)

    def test_axis_y(self):
        assert group_min(PairList([(1, 4), (2, 4)]), "Y") == {4: 2}

    def test_grouping_bound_example(self):
        pl = PairList([(3, 7), (3, 5), (4, 9)])
        grouped = group_min(pl, "X")
        lhs = grouped_weight_sum(grouped)
        assert lhs + lhs >= pl.exp_sum()
        assert pl.exp_sum() == Dyadic(11, 5)

    def test_grouping_bound_randomized(self):
        rng = random.Random(9)
        for _ in range(300):
            pairs = set()
            while len(pairs) < rng.randrange(1, 10):
                x = rng.randrange(-6, 6)
                pairs.add((x, x + rng.randrange(0, 7)))
            pl = PairList(sorted(pairs))
            for axis in "XY":
                lhs = grouped_weight_sum(group_min(pl, axis))
                assert lhs + lhs >= pl.exp_sum()

    def test_streaming_only_decreases(self):
        pairs = [(3, 9), (3, 6), (5, 7), (3, 4)]
        previous = None
        for cut in range(1, len(pairs) + 1):
            grouped = group_min(PairList(pairs[:cut]), "X")
            if previous is not None:
                for key, value in previous.items():
                    assert grouped.get(key, INF) <= value
            previous = grouped

    def test_bad_axis(self):
        with pytest.raises(UsageError):
            group_min(PairList([(0, 0)]), "Z")


class TestMinorant:
    def test_constant_one_blocks(self):
        blocks = minorant_blocks(lambda n, k: 1)
        first = next(blocks)
        assert (first.start, first.values) == (0, (1, 1, 1))
        assert first.mass() == Dyadic(3, 1)
        assert next(blocks).start == 3

    def test_frozen_value_dominates_late_limit(self):
        def approx(n, k):
            if n == 0:
                return 5 if k < 10 else 2
            return 0

        block = next(minorant_blocks(approx))
        assert block.values[0] == 5

    def test_log_blocks_all_close(self):
        stream = computable_minorant(lambda n, k: (n + 1).bit_length() - 1)
        values = [next(stream) for _ in range(64)]
        for n, v in enumerate(values):
            assert v >= (n + 1).bit_length() - 1

    def test_convergent_input_fails_loudly(self):
        two_log = TwoLogSeq()
        blocks = minorant_blocks(lambda n, k: two_log.value(n), refine_cap=300)
        next(blocks)  # the head of the series still exceeds 1
        with pytest.raises(WorkCapExceeded):
            next(blocks)

    def test_rejects_increasing_approximations(self):
        def approx(n, k):
            return 5 + k  # upper approximations may never go up

        with pytest.raises(RuleViolation):
            next(minorant_blocks(approx))

    def test_delayed_blocks_have_mass_above_one(self):
        rng = random.Random(11)
        delays = {}

        def approx(n, k, c=3):
            delay = delays.setdefault(n, rng.randrange(0, 12))
            return c + max(0, delay - k)

        blocks = minorant_blocks(approx)
        for _ in range(4):
            block = next(blocks)
            assert block.mass() > Dyadic.one()
            for offset, v in enumerate(block.values):
                assert v >= 3


class TestAllocateIntervals:
    def test_constant_zero(self):
        assert allocate_intervals("const:0", 2) == [(0, 2), (4, 8), (10, 18)]

    def test_shifted_disjoint(self):
        intervals = allocate_intervals("const:0", 6)
        shifted = [(l - d, r - d) for d, (l, r) in enumerate(intervals)]
        for (a, b), (c, e) in zip(shifted, shifted[1:]):
            assert c > b

    def test_mass_exceeds_threshold(self):
        seq = parse_sequence_spec("log")
        for d, (l, r) in enumerate(allocate_intervals(seq, 4)):
            assert seq.mass(l, r) > Dyadic.pow2(d + 1)
            if r > l:
                assert not seq.mass(l, r - 1) > Dyadic.pow2(d + 1)

    def test_convergent_raises(self):
        with pytest.raises(WorkCapExceeded):
            allocate_intervals("twolog", 0)
        with pytest.raises(WorkCapExceeded):
            allocate_intervals(lambda n: n, 0, scan_cap=2000)

    def test_list_sequence(self):
        assert allocate_intervals(ListSeq([0] * 20), 1) == [(0, 2), (4, 8)]
        # past the list everything is +inf, so the next interval cannot close
        with pytest.raises(WorkCapExceeded):
            allocate_intervals(ListSeq([0, 0, 0]), 1)


class TestPairCsv:
    def test_roundtrip(self):
        text = "\n".join(
            ["# stage pairs", "0,0,1,9", "0,1,1,5", "1,0,0,inf", "1,1,0,4"]
        )
        pa, n_count, k_count = pair_approx_from_csv(text)
        assert (n_count, k_count) == (2, 2)
        assert pa.at(0, 1) == (1, 5)
        assert pa.at(1, 0) == (0, INF)
        merged = dedup_merge(pa, n_count, k_count)
        assert (0, 4) in set(map(tuple, merged))

    def test_rejects_holes(self):
        with pytest.raises(UsageError):
            pair_approx_from_csv("0,0,1,2\n1,1,1,2\n")

    def test_rejects_garbage(self):
        with pytest.raises(UsageError):
            pair_approx_from_csv("1,2,3\n")
        with pytest.raises(UsageError):
            pair_approx_from_csv("")


def test_pow2_weight_handles_infinity():
    assert pow2_weight(INF) == Dyadic.zero()
    assert pow2_weight(3) == Dyadic(1, 3)
