import math
from fractions import Fraction

import numpy as np
import pytest

import oraclelab as ol
from oraclelab import akrule
from oraclelab.akrule import AkConfig, cells_spec, linear_spec
from oraclelab.qstate import ATOL, BitString

from reference_tables import plain_minimax_cost

LOG2_3 = math.log2(3.0)


def bits(text):
    return BitString.from_text(text)


def texts(subset):
    return frozenset(b.text for b in subset)


def reference_problem_tables(problem):
    tables = {st.id.text: tuple(e.value for e in st.table) for st in problem.settings}
    solutions = {st.id.text: st.solution for st in problem.settings}
    return tables, solutions


class TestConfig:
    def test_only_half_retroaction(self):
        AkConfig()  # fine
        AkConfig(retroaction=Fraction(1, 2))
        for bad in (Fraction(1, 3), Fraction(0), Fraction(1), Fraction(2, 3)):
            with pytest.raises(ValueError):
                AkConfig(retroaction=bad)

    def test_family_validated(self):
        with pytest.raises(ValueError):
            AkConfig(family="diagonal")


class TestSpecs:
    def test_linear_spec_canonicalizes_to_echelon_basis(self):
        spec = linear_spec([bits("11"), bits("01")])
        assert tuple(m.text for m in spec.masks) == ("10", "01")
        same = linear_spec([bits("10"), bits("11")])
        assert spec == same

    def test_trivial_specs(self):
        assert cells_spec([]).cells == frozenset()
        assert linear_spec([]).masks == ()

    def test_describe(self):
        assert cells_spec([0, 1]).describe(2) == "cells{00,01}"
        assert linear_spec([bits("11")]).describe() == "masks{11}"


class TestRealizedSubset:
    def test_cells_half_table(self, dj2):
        got = akrule.realized_subset(dj2, cells_spec([0, 1]), bits("0011"))
        assert texts(got) == {"0011", "0000"}

    def test_linear_parity_mask(self, grover2):
        got = akrule.realized_subset(grover2, linear_spec([bits("11")]), bits("01"))
        assert texts(got) == {"01", "10"}

    def test_single_bit_masks(self, grover2):
        left = akrule.realized_subset(grover2, linear_spec([bits("10")]), bits("01"))
        right = akrule.realized_subset(grover2, linear_spec([bits("01")]), bits("01"))
        assert texts(left) == {"00", "01"}
        assert texts(right) == {"01", "11"}

    def test_empty_spec_realizes_everything(self, grover2, dj2):
        assert akrule.realized_subset(grover2, linear_spec([]), bits("01")) == frozenset(
            grover2.setting_ids()
        )
        assert akrule.realized_subset(dj2, cells_spec([]), bits("0011")) == frozenset(
            dj2.setting_ids()
        )

    def test_unknown_setting(self, grover2):
        with pytest.raises(ValueError):
            akrule.realized_subset(grover2, linear_spec([]), bits("0011"))


class TestDeltaEntropy:
    def test_half_table_drop_is_one_bit(self, dj2):
        got = akrule.delta_entropy(dj2, [bits("0011"), bits("0000")])
        assert abs(got - 1.0) <= ATOL

    def test_period_drop(self, simon2):
        got = akrule.delta_entropy(simon2, [bits("0011"), bits("0110")])
        assert abs(got - (LOG2_3 - 1.0)) <= ATOL

    def test_full_set_drops_nothing(self, grover2):
        assert abs(akrule.delta_entropy(grover2, grover2.setting_ids())) <= ATOL

    def test_singleton_drops_everything(self, grover2):
        got = akrule.delta_entropy(grover2, [bits("01")])
        assert abs(got - 2.0) <= ATOL

    def test_empty_subset(self, grover2):
        with pytest.raises(ValueError):
            akrule.delta_entropy(grover2, [])

    def test_bounds_on_random_subsets(self, dj2, simon2, grover2):
        rng = np.random.default_rng(23)
        for problem in (grover2, dj2, simon2):
            ids = problem.setting_ids()
            whole = akrule.delta_entropy(problem, [ids[0]])
            for _ in range(60):
                size = int(rng.integers(1, len(ids) + 1))
                subset = [ids[int(i)] for i in rng.choice(len(ids), size=size, replace=False)]
                drop = akrule.delta_entropy(problem, subset)
                assert -ATOL <= drop <= whole + ATOL

    def test_state_route_matches_counting_route(self, grover2, dj2, simon2):
        rng = np.random.default_rng(29)
        for problem in (grover2, dj2, simon2):
            ids = problem.setting_ids()
            for _ in range(40):
                size = int(rng.integers(1, len(ids) + 1))
                subset = [ids[int(i)] for i in rng.choice(len(ids), size=size, replace=False)]
                a = akrule.delta_entropy(problem, subset)
                b = akrule.delta_entropy_via_states(problem, subset)
                assert abs(a - b) <= ATOL


class TestEnumeratePairs:
    def test_search_pairs(self, grover2):
        pairs = akrule.enumerate_occam_pairs(grover2, bits("01"))
        assert len(pairs) == 3
        singles = [frozenset({"01", "00"}), frozenset({"01", "10"}), frozenset({"01", "11"})]
        got = {frozenset((texts(p.subset_i), texts(p.subset_j))) for p in pairs}
        assert got == {frozenset((a, b)) for i, a in enumerate(singles) for b in singles[i + 1 :]}
        for p in pairs:
            assert abs(p.epsilon - 1.0) <= ATOL

    def test_balanced_tables_have_one_pair(self, dj2):
        for st in dj2.settings:
            pairs = akrule.enumerate_occam_pairs(dj2, st.id)
            if st.solution != "balanced":
                continue
            assert len(pairs) == 1
            got = {texts(pairs[0].subset_i), texts(pairs[0].subset_j)}
            assert got == {
                frozenset({st.id.text, "0000"}),
                frozenset({st.id.text, "1111"}),
            }

    def test_constant_tables_have_three_pairs(self, dj2):
        for text in ("0000", "1111"):
            pairs = akrule.enumerate_occam_pairs(dj2, bits(text))
            assert len(pairs) == 3
            for p in pairs:
                assert abs(p.epsilon - 1.0) <= ATOL

    def test_period_pairs_match_good_halves(self, simon2):
        pairs = akrule.enumerate_occam_pairs(simon2, bits("0011"))
        got = {frozenset((texts(p.subset_i), texts(p.subset_j))) for p in pairs}
        assert got == {
            frozenset((frozenset({"0011", "0110"}), frozenset({"0011", "1001"}))),
            frozenset((frozenset({"0011", "0101"}), frozenset({"0011", "1010"}))),
        }

    def test_enumeration_is_deterministic(self, simon2):
        first = akrule.enumerate_occam_pairs(simon2, bits("0011"))
        second = akrule.enumerate_occam_pairs(simon2, bits("0011"))
        assert [(texts(p.subset_i), texts(p.subset_j)) for p in first] == [
            (texts(p.subset_i), texts(p.subset_j)) for p in second
        ]

    def test_research_mode_exposes_zero_epsilon_pairs(self, simon2):
        config = AkConfig(complementary=False)
        pairs = akrule.enumerate_occam_pairs(simon2, bits("0011"), config)
        assert len(pairs) > 2
        assert any(abs(p.epsilon) <= ATOL for p in pairs)

    def test_search_non_complementary_matches_complementary_at_n2(self, grover2):
        on = akrule.enumerate_occam_pairs(grover2, bits("01"))
        off = akrule.enumerate_occam_pairs(grover2, bits("01"), AkConfig(complementary=False))
        key = lambda p: (tuple(sorted(b.value for b in p.subset_i)),
                         tuple(sorted(b.value for b in p.subset_j)))
        assert sorted(map(key, on)) == sorted(map(key, off))


class TestInstances:
    def test_search_instances(self, grover2):
        instances = akrule.ak_instances(akrule.enumerate_occam_pairs(grover2, bits("01")))
        assert {texts(i.subset) for i in instances} == {
            frozenset({"01", "00"}),
            frozenset({"01", "10"}),
            frozenset({"01", "11"}),
        }

    def test_constant_table_has_six_instances(self, dj2):
        instances = akrule.ak_instances(akrule.enumerate_occam_pairs(dj2, bits("0000")))
        assert len(instances) == 6
        for partner in ("0011", "1100", "0101", "1010", "0110", "1001"):
            assert frozenset({"0000", partner}) in {texts(i.subset) for i in instances}

    def test_streaming_path_matches_pairs_path(self, grover2, dj2, simon2):
        for problem in (grover2, dj2, simon2):
            for b in problem.setting_ids():
                via_pairs = akrule.ak_instances(akrule.enumerate_occam_pairs(problem, b))
                streamed = akrule.setting_instances(problem, b)
                assert [(texts(i.subset), round(i.epsilon, 12)) for i in via_pairs] == [
                    (texts(i.subset), round(i.epsilon, 12)) for i in streamed
                ]


class TestDecisionTree:
    def test_full_set_costs(self, grover2, dj2, simon2):
        for problem, expected in ((grover2, 3), (dj2, 3), (simon2, 3)):
            assert akrule.decision_tree_cost(problem, problem.setting_ids()) == expected
            tables, solutions = reference_problem_tables(problem)
            assert plain_minimax_cost(tables, solutions, tables.keys()) == expected

    def test_pair_costs_one(self, grover2):
        assert akrule.decision_tree_cost(grover2, [bits("01"), bits("11")]) == 1

    def test_constant_answer_costs_zero(self, dj2):
        assert akrule.decision_tree_cost(dj2, [bits("0011"), bits("0101")]) == 0

    def test_affine_flat_costs_size_minus_one(self):
        problem = ol.build_grover(4)
        flat = akrule.realized_subset(
            problem, linear_spec([bits("1000"), bits("0100")]), BitString(0, 4)
        )
        assert len(flat) == 4
        assert akrule.decision_tree_cost(problem, flat) == 3
        tables, solutions = reference_problem_tables(problem)
        assert plain_minimax_cost(tables, solutions, [b.text for b in flat]) == 3

    def test_matches_plain_recursion_on_random_subsets(self, grover2, dj2, simon2):
        rng = np.random.default_rng(31)
        for problem in (grover2, dj2, simon2):
            tables, solutions = reference_problem_tables(problem)
            ids = problem.setting_ids()
            for _ in range(40):
                size = int(rng.integers(1, len(ids) + 1))
                subset = [ids[int(i)] for i in rng.choice(len(ids), size=size, replace=False)]
                expected = plain_minimax_cost(tables, solutions, [b.text for b in subset])
                assert akrule.decision_tree_cost(problem, subset) == expected

    def test_monotonicity(self, dj2):
        rng = np.random.default_rng(37)
        ids = dj2.setting_ids()
        for _ in range(100):
            big = int(rng.integers(1, len(ids) + 1))
            outer = [ids[int(i)] for i in rng.choice(len(ids), size=big, replace=False)]
            small = int(rng.integers(1, big + 1))
            inner = [outer[int(i)] for i in rng.choice(big, size=small, replace=False)]
            assert akrule.decision_tree_cost(dj2, inner) <= akrule.decision_tree_cost(dj2, outer)

    def test_indistinguishable_settings_rejected(self):
        settings = (
            ol.Setting(bits("0"), (bits("0"), bits("0")), "left", bits("0")),
            ol.Setting(bits("1"), (bits("0"), bits("0")), "right", bits("1")),
        )
        problem = ol.OracleProblem("stuck", 1, 1, settings, "cells")
        with pytest.raises(ValueError, match="indistinguishable"):
            akrule.decision_tree_cost(problem, problem.setting_ids())

    def test_empty_candidates_rejected(self, grover2):
        with pytest.raises(ValueError):
            akrule.decision_tree_cost(grover2, [])


class TestPredict:
    def test_small_problems(self, grover2, dj2, simon2):
        for problem in (grover2, dj2, simon2):
            report = akrule.predict_queries(problem)
            assert report.baseline_queries == 3
            assert report.predicted_queries == 1

    def test_search_reference_counts(self, grover2):
        report = akrule.predict_queries(grover2)
        assert report.grover_formula_queries == 1
        assert report.grover_reference_queries == 2

    def test_scaling_n4(self):
        report = akrule.predict_queries(ol.build_grover(4))
        assert report.baseline_queries == 15
        assert report.predicted_queries == 3
        assert report.grover_formula_queries == 3
        assert report.grover_reference_queries == 4
        for rep in report.per_setting:
            assert rep.instance_sizes == ((4, 35),)
            assert rep.instance_costs == ((3, 35),)
            assert rep.epsilons == (2.0,)

    def test_odd_width_is_flagged(self):
        report = akrule.predict_queries(ol.build_grover(3))
        assert report.predicted_queries is None
        assert all(rep.no_instance for rep in report.per_setting)
        assert any("no R=1/2 instance" in note for note in report.notes)
        assert any("no exact R=1/2 split" in note for note in report.notes)
        assert report.grover_formula_queries is None

    def test_prediction_never_beats_baseline(self, grover2, dj2, simon2):
        for problem in (grover2, dj2, simon2, ol.build_simon(3)):
            report = akrule.predict_queries(problem)
            if report.predicted_queries is not None:
                assert report.predicted_queries <= report.baseline_queries

    def test_report_round_trips_to_dict(self, simon2):
        report = akrule.predict_queries(simon2)
        payload = report.as_dict()
        assert payload["baseline_queries"] == 3
        assert payload["predicted_queries"] == 1
        assert payload["per_setting"][0]["epsilons"] == [round(LOG2_3 - 1.0, 6)]


class TestOccamAudit:
    def test_emitted_pairs_pass_all_conditions_definitionally(self, grover2, dj2, simon2):
        for problem in (grover2, dj2, simon2):
            n_positions = 1 << problem.arg_bits
            for b_star in problem.setting_ids():
                pairs = akrule.enumerate_occam_pairs(problem, b_star)
                seen = set()
                for pair in pairs:
                    key = (tuple(sorted(b.value for b in pair.subset_i)),
                           tuple(sorted(b.value for b in pair.subset_j)))
                    assert key not in seen, "duplicate subset pair"
                    seen.add(key)
                    assert pair.subset_i & pair.subset_j == {b_star}
                    for spec, subset in ((pair.spec_i, pair.subset_i), (pair.spec_j, pair.subset_j)):
                        assert akrule.realized_subset(problem, spec, b_star) == subset
                        assert len({problem.setting(x).solution for x in subset}) >= 2
                    d_i = akrule.delta_entropy(problem, pair.subset_i)
                    d_j = akrule.delta_entropy(problem, pair.subset_j)
                    assert abs(d_i - d_j) <= ATOL
                    assert abs(pair.epsilon - d_i) <= ATOL
                    # complementarity structure
                    if pair.spec_i.family == "cells":
                        assert pair.spec_j.cells == frozenset(range(n_positions)) - pair.spec_i.cells
                    else:
                        masks = [m.value for m in pair.spec_i.masks + pair.spec_j.masks]
                        assert len(masks) == problem.setting_width
                        assert akrule._rank(tuple(masks)) == problem.setting_width


class TestFamilyGuards:
    def test_linear_on_wide_settings_rejected(self):
        problem = ol.build_simon(3)  # 16-bit setting strings
        with pytest.raises(ValueError, match="linear"):
            akrule.enumerate_occam_pairs(problem, problem.setting_ids()[0], AkConfig(family="linear"))

    def test_search_analysis_capped_at_six_bits(self):
        problem = ol.build_grover(8)  # builds fine, analysis is the capped part
        with pytest.raises(ValueError, match="width"):
            akrule.predict_queries(problem)
