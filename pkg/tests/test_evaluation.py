import time

import pytest

from qcomp.corpus import char_length
from qcomp.evaluation import (
    compare_reports, compression_ratio, evaluate_suite, latency_bench,
    linearity_probe, paired_bootstrap, token_f1,
)
from qcomp.lm import train_lm
from qcomp.systems import OracleSystem, VertexSystem

from conftest import ConstantModel, chain_graph, desk_corpus, toy_graph

# Frozen synthetic paired scores and the p-value of an independent
# 1,000,000-resample bootstrap on them (legacy RNG, chunked loop):
ORACLE_P = 0.11563688436311563
SCORES_A = [0.4657224171, 0.4018915263, 0.5382315816, 0.4215948536, 0.7131431597,
            0.6879226116, 0.6986897329, 0.3117370986, 0.2345599857, 0.7304408323,
            0.6480657019, 0.8911289626, 0.4115156582, 0.2974427348, 0.4361558491,
            0.4494027398, 0.3280183507, 0.4708893662, 0.7146617068, 0.5977073674,
            0.3009933727, 0.6733921247, 0.6320963646, 0.4669526326, 0.5670460549,
            0.2722939109, 0.9962865277, 0.6322360168, 0.4935028999, 0.5537867284,
            0.722942769, 0.5605269215, 0.4697142096, 0.6074554851, 0.7014103521,
            0.2741028411, 0.4993148335, 0.8640014878, 0.4286369963, 0.6559122213,
            0.8747854235, 0.9201250469, 0.8118247029, 0.5250858954, 0.6117169389,
            0.4190286733, 0.297289702, 0.3266899855, 0.47017321, 0.5414814708]
SCORES_B = [0.6463831848, 0.4826245332, 0.4611697788, 0.4020288048, 0.1451572575,
            0.5694616328, 0.4504504197, 0.5037104106, 0.5621546469, 0.4008714093,
            0.4616872301, 0.724465954, 0.538370396, 0.7214684558, 0.7477638039,
            0.3573532883, 0.6442273314, 0.4539081657, 0.3208082309, 0.3162305714,
            0.5911097376, 0.5835733472, 0.2526825268, 0.693136898, 0.4952812676,
            0.4408946819, 0.4671194686, 0.5115819512, 0.6036843089, 0.582666814,
            0.4376792085, 0.3844958524, 0.6262768909, 0.4604040348, 0.4417421477,
            0.8642463028, 0.5464494496, 0.5770855092, 0.6866422759, 0.6425632178,
            0.7640341445, 0.4872268096, 0.6095683215, 0.3632035225, 0.6069664533,
            0.1107969062, 0.3468674069, 0.2468175212, 0.3880383219, 0.7841046845]


class TestTokenF1:
    def test_perfect_match(self):
        assert token_f1({1, 2}, {1, 2}) == (1.0, 1.0, 1.0)

    def test_partial_overlap(self):
        p, r, f1 = token_f1({1, 2}, {1, 2, 3})
        assert (p, r) == (1.0, 2 / 3)
        assert f1 == pytest.approx(0.8)

    def test_disjoint(self):
        assert token_f1({1}, {2}) == (0.0, 0.0, 0.0)

    def test_empty_pred(self):
        assert token_f1(set(), {1}) == (0.0, 0.0, 0.0)

    def test_empty_gold_rejected(self):
        with pytest.raises(ValueError):
            token_f1({1}, set())

    def test_symmetry_swaps_p_and_r(self):
        for pred, gold in (({1, 2}, {2, 3}), ({1}, {1, 2, 3}), ({4, 5, 6}, {5})):
            p1, r1, f1 = token_f1(pred, gold)
            p2, r2, f2 = token_f1(gold, pred)
            assert (p1, r1) == (r2, p2)
            assert f1 == pytest.approx(f2)


class TestCompressionRatio:
    def test_full_sentence_is_one(self):
        g = toy_graph()
        assert compression_ratio(set(g.positions), g) == 1.0

    def test_fraction(self):
        g = chain_graph(["aaaa", "bbbb"])  # total 9 chars
        assert compression_ratio({1}, g) == pytest.approx(4 / 9)

    def test_empty_pred_rejected(self):
        with pytest.raises(ValueError):
            compression_ratio(set(), toy_graph())


class TestPairedBootstrap:
    def test_identical_systems_not_significant(self):
        scores = [0.5, 0.7, 0.2, 0.9, 0.4]
        res = paired_bootstrap(scores, scores, resamples=2000, seed=1)
        assert res.p_value == 1.0

    def test_uniform_dominance_is_maximally_significant(self):
        a = [s + 0.1 for s in SCORES_B]
        res = paired_bootstrap(a, SCORES_B, resamples=10_000, seed=1)
        assert res.p_value <= 1 / 10_000
        assert res.p_value > 0

    def test_matches_high_resolution_oracle(self):
        res = paired_bootstrap(SCORES_A, SCORES_B, resamples=10_000, seed=7)
        assert res.p_value == pytest.approx(ORACLE_P, abs=0.02)

    def test_orientation_is_automatic(self):
        res_ab = paired_bootstrap(SCORES_A, SCORES_B, resamples=2000, seed=3)
        res_ba = paired_bootstrap(SCORES_B, SCORES_A, resamples=2000, seed=3)
        assert res_ab.p_value == res_ba.p_value

    def test_two_sided_is_twice_one_sided_capped(self):
        res = paired_bootstrap(SCORES_A, SCORES_B, resamples=2000, seed=5)
        assert res.p_two_sided == min(1.0, 2 * res.p_value)

    def test_deterministic_under_seed(self):
        r1 = paired_bootstrap(SCORES_A, SCORES_B, resamples=3000, seed=11)
        r2 = paired_bootstrap(SCORES_A, SCORES_B, resamples=3000, seed=11)
        assert r1.p_value == r2.p_value

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            paired_bootstrap([1.0, 2.0], [1.0])


class TestLatencyBench:
    def test_constant_time_stub_calibration(self):
        class Sleeper:
            name = "sleeper"

            def compress(self, inst):
                t_end = time.perf_counter() + 0.003
                while time.perf_counter() < t_end:
                    pass
                return frozenset()

        instances = desk_corpus(1, 3)
        res = latency_bench(Sleeper(), instances, n=40, seed=0, warmup=2)
        assert res.mean_ms == pytest.approx(3.0, rel=0.2)

    def test_single_draw(self):
        instances = desk_corpus(2, 2)
        system = VertexSystem("probe", ConstantModel(1.0))
        res = latency_bench(system, instances, n=1, seed=0, warmup=0)
        assert res.n == 1 and res.mean_ms > 0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            latency_bench(None, [], n=1)

    def test_mean_stable_across_seeded_runs(self):
        class Spinner:
            name = "spinner"

            def compress(self, inst):
                t_end = time.perf_counter() + 0.001
                while time.perf_counter() < t_end:
                    pass
                return frozenset()

        instances = desk_corpus(15, 3)
        means = [latency_bench(Spinner(), instances, n=30, seed=s, warmup=2).mean_ms
                 for s in (0, 1, 2)]
        cv = (max(means) - min(means)) / (sum(means) / 3)
        assert cv < 0.10


class TestLinearityProbe:
    def test_vertex_addition_scales_linearly(self):
        system = VertexSystem("probe", ConstantModel(1.0))
        sizes, times, r2 = linearity_probe(system, sizes=(10, 20, 40, 80),
                                           repeats=20, batches=3)
        assert len(times) == len(sizes)
        assert 0.0 <= r2 <= 1.0


class TestEvaluateSuite:
    def test_oracle_system_scores_one(self):
        instances = desk_corpus(3, 25)
        report = evaluate_suite(OracleSystem(), instances)
        assert report.aggregates["mean_f1"] == 1.0
        assert report.aggregates["n_failed"] == 0

    def test_random_baseline_beats_zero(self):
        from qcomp.learn import RandomPolicy
        instances = desk_corpus(4, 40)
        system = VertexSystem("random", RandomPolicy(accept_prob=0.5, rng_seed=2))
        report = evaluate_suite(system, instances)
        assert report.aggregates["mean_f1"] > 0.0

    def test_empty_instances_rejected(self):
        with pytest.raises(ValueError):
            evaluate_suite(OracleSystem(), [])

    def test_slor_column_with_lm(self):
        instances = desk_corpus(5, 10)
        lm = train_lm([[t.form for t in inst.graph.tokens] for inst in instances])
        report = evaluate_suite(OracleSystem(), instances, lm=lm)
        assert all(row.get("slor") is not None for row in report.rows)
        assert report.aggregates["mean_slor"] is not None

    def test_per_instance_failures_recorded_not_fatal(self):
        class Flaky:
            name = "flaky"

            def compress(self, inst):
                raise RuntimeError("boom")

        instances = desk_corpus(6, 4)
        report = evaluate_suite(Flaky(), instances)
        assert report.aggregates["n_failed"] == 4
        assert all("error" in row for row in report.rows)

    def test_ratio_bounded_by_budget(self):
        instances = desk_corpus(7, 30)
        report = evaluate_suite(OracleSystem(), instances)
        for inst, row in zip(instances, report.rows):
            limit = inst.budget_chars / char_length(inst.graph, inst.graph.positions)
            assert row["ratio"] <= limit + 1e-9

    def test_tsv_dump_shape(self):
        instances = desk_corpus(8, 5)
        report = evaluate_suite(OracleSystem(), instances)
        lines = report.to_tsv().strip().split("\n")
        assert lines[0].startswith("instance_id\t")
        assert len(lines) == 6


class TestCompareReports:
    def test_oracle_beats_random_significantly(self):
        from qcomp.learn import RandomPolicy
        instances = desk_corpus(9, 60)
        oracle_report = evaluate_suite(OracleSystem(), instances)
        random_report = evaluate_suite(
            VertexSystem("random", RandomPolicy(accept_prob=0.5, rng_seed=3)),
            instances)
        [entry] = compare_reports(oracle_report, random_report, metrics=("f1",),
                                  resamples=2000, seed=0)
        assert entry["system_a"] == "oracle"
        assert entry["p_value"] < 0.01
