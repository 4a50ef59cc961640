import math
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from arsrg.enums import Matcher
from arsrg.graph.rag import region_filter_mask
from arsrg.exceptions import DimensionMismatch, EmptyGraph, EmptyInput
from arsrg.features.keypoints import normalize_descriptor
from arsrg.matching import match
from test_arsrg import fixtures


def unit(index: int, length: float = 1.0) -> np.ndarray:
    vector = np.zeros(128)
    vector[index] = length
    return vector


def descriptors(rng: np.random.Generator, n: int) -> list:
    return [fixtures.random_descriptor(rng) for _ in range(n)]


def perturbed(rng: np.random.Generator, base: list, radius: float) -> list:
    return [normalize_descriptor(np.abs(d + rng.normal(0, radius, 128))) for d in base]


def brute_force_ratio_test(q: np.ndarray, t: np.ndarray, rho: float) -> list:
    pairs = []
    for i in range(len(q)):
        distances = [math.sqrt(sum((q[i][k] - t[j][k]) ** 2 for k in range(128))) for j in range(len(t))]
        order = sorted(range(len(t)), key=lambda j: (distances[j], j))
        d1, d2 = distances[order[0]], distances[order[1]]
        if d1 < rho * d2:
            pairs.append((i, order[0]))
    return pairs


class TestDescriptorDistance(unittest.TestCase):
    def test_examples(self):
        a = fixtures.random_descriptor(np.random.default_rng(0))
        self.assertEqual(0.0, match.descriptor_distance(a, a))
        self.assertAlmostEqual(math.sqrt(2), match.descriptor_distance(unit(0), unit(1)))

    def test_oracle(self):
        rng = np.random.default_rng(1)
        a, b = rng.random(128), rng.random(128)
        expected = math.sqrt(sum((x - y) ** 2 for x, y in zip(a.tolist(), b.tolist())))
        self.assertAlmostEqual(expected, match.descriptor_distance(a, b), delta=1e-9)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            match.descriptor_distance(np.zeros(127), np.zeros(128))


class TestRatioTestMatch(unittest.TestCase):
    def test_accepted(self):
        target = np.stack([unit(0, 0.5), unit(1, 1.0)])
        pairs = match.ratio_test_match(np.zeros((1, 128)), target, 0.7)
        self.assertEqual([(0, 0)], [(p.query, p.target) for p in pairs])
        self.assertAlmostEqual(0.5, pairs[0].distance)

    def test_rejected(self):
        target = np.stack([unit(0, 0.9), unit(1, 1.0)])
        self.assertEqual([], match.ratio_test_match(np.zeros((1, 128)), target, 0.8))

    def test_single_target(self):
        self.assertEqual([], match.ratio_test_match(np.zeros((3, 128)), np.ones((1, 128)), 1.0))

    def test_oracle(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            t = np.stack(descriptors(rng, 20))
            q = np.stack(perturbed(rng, list(t[rng.permutation(20)]), 0.02 * (trial + 1)))
            found = [(p.query, p.target) for p in match.ratio_test_match(q, t, 0.8)]
            self.assertEqual(brute_force_ratio_test(q, t, 0.8), found, f'trial {trial}')

    def test_monotonic_in_rho(self):
        """Test that raising rho only ever adds accepted pairs."""
        rng = np.random.default_rng(3)
        grid = (0.3, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
        for trial in range(50):
            t = np.stack(descriptors(rng, 15))
            q = np.stack(perturbed(rng, list(t[:10]), float(rng.uniform(0.0, 0.1))))
            accepted = [{(p.query, p.target) for p in match.ratio_test_match(q, t, rho)} for rho in grid]
            for smaller, larger in zip(accepted, accepted[1:]):
                self.assertLessEqual(smaller, larger, f'trial {trial}')


class TestMatchArsrg(unittest.TestCase):
    def test_self_match(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            graph = fixtures.make_graph('a', [descriptors(rng, int(rng.integers(2, 6))) for _ in range(3)])
            report = match.match_arsrg(graph, graph, match.MatchParams(rho=0.7, min_region_px=50))
            self.assertEqual(1.0, report.score)
            self.assertTrue(all(p.query == p.target for p in report.pairs))

    def test_orthogonal_descriptors(self):
        query = fixtures.make_graph('q', [[unit(i) for i in range(4)]])
        target = fixtures.make_graph('t', [[unit(i) for i in range(4, 8)]])
        report = match.match_arsrg(query, target, match.MatchParams(rho=0.9, min_region_px=50))
        self.assertEqual(0.0, report.score)
        self.assertEqual((), report.pairs)

    def test_region_correspondence(self):
        """Test that per region counts land on the planted region pairs."""
        rng = np.random.default_rng(5)
        first, second = descriptors(rng, 5), descriptors(rng, 5)
        query = fixtures.make_graph('q', [first, second])
        target = fixtures.make_graph('t', [perturbed(rng, second, 0.005), perturbed(rng, first, 0.005)])
        report = match.match_arsrg(query, target, match.MatchParams(rho=0.7, min_region_px=50))
        self.assertEqual({(0, 1): 5, (1, 0): 5}, report.per_region)
        self.assertEqual(1.0, report.score)

    def test_one_pair_per_query_leaf(self):
        rng = np.random.default_rng(6)
        for trial in range(20):
            query = fixtures.make_graph('q', [descriptors(rng, 4) for _ in range(3)])
            rows = [kp.descriptor for kp in query.leaves]
            target = fixtures.make_graph('t', [perturbed(rng, rows[::2], 0.05), perturbed(rng, rows[1::3], 0.05)])
            report = match.match_arsrg(query, target, match.MatchParams(rho=0.8, min_region_px=50))
            queries = [p.query for p in report.pairs]
            self.assertEqual(len(queries), len(set(queries)))
            self.assertTrue(0.0 <= report.score <= 1.0)

    def test_small_regions_filtered(self):
        rng = np.random.default_rng(7)
        shared = descriptors(rng, 4)
        query = fixtures.make_graph('q', [shared, descriptors(rng, 4)], region_sizes=[10, 100])
        target = fixtures.make_graph('t', [shared])
        report = match.match_arsrg(query, target, match.MatchParams(rho=0.7, min_region_px=50))
        # Only the large query region survives and it has no counterpart
        self.assertEqual(0.0, report.score)
        self.assertEqual(0.5, match.match_arsrg(query, target, match.MatchParams(rho=0.7, min_region_px=5)).score)

    def test_empty_graph(self):
        rng = np.random.default_rng(8)
        query = fixtures.make_graph('q', [descriptors(rng, 3)], region_sizes=[10])
        with self.assertRaises(EmptyGraph):
            match.match_arsrg(query, query, match.MatchParams(rho=0.7, min_region_px=50))

    def test_target_without_leaves(self):
        rng = np.random.default_rng(9)
        query = fixtures.make_graph('q', [descriptors(rng, 3)])
        target = fixtures.make_graph('t', [[]])
        self.assertEqual(0.0, match.match_arsrg(query, target, match.MatchParams()).score)

    def test_report_document(self):
        rng = np.random.default_rng(10)
        graph = fixtures.make_graph('a', [descriptors(rng, 3), descriptors(rng, 3)])
        report = match.match_arsrg(graph, graph, match.MatchParams(rho=0.7, min_region_px=50))
        decoded = match.MatchReport.from_bytes(report.as_json_bytes())
        self.assertEqual(report.pairs, decoded.pairs)
        self.assertEqual(report.per_region, decoded.per_region)
        self.assertEqual(report.params, decoded.params)
        self.assertEqual(report.as_json_bytes(), decoded.as_json_bytes())

    def test_params_validated(self):
        for kwargs in ({'rho': 0.0}, {'rho': 1.5}, {'min_region_px': -1}, {'region_pairing': 'greedy'}):
            with self.assertRaises(ValueError):
                match.MatchParams(**kwargs)


class TestMatchProperties(unittest.TestCase):
    @given(seed=st.integers(0, 10000), rho=st.floats(0.05, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_score_bounds(self, seed, rho):
        rng = np.random.default_rng(seed)
        query = fixtures.make_graph('q', [descriptors(rng, int(rng.integers(1, 6))) for _ in range(3)])
        base = [kp.descriptor for kp in query.leaves]
        target = fixtures.make_graph('t', [perturbed(rng, base, 0.05), descriptors(rng, 4)])
        report = match.match_arsrg(query, target, match.MatchParams(rho=rho, min_region_px=50))
        self.assertTrue(0.0 <= report.score <= 1.0)
        self.assertEqual(len(report.pairs), sum(report.per_region.values()))

    @given(sizes=st.lists(st.integers(1, 500), min_size=1, max_size=8), low=st.integers(0, 600),
           step=st.integers(0, 600))
    @settings(max_examples=100, deadline=None)
    def test_filtering_monotonic(self, sizes, low, step):
        """Test that raising min_region_px never increases the surviving leaf count."""
        graph = fixtures.make_graph('g', [[unit(i)] * (i + 1) for i in range(len(sizes))], region_sizes=sizes)
        leaves = np.bincount(graph.leaf_region, minlength=len(sizes))
        surviving = [int(leaves[region_filter_mask(graph.regions, m)].sum()) for m in (low, low + step)]
        self.assertGreaterEqual(surviving[0], surviving[1])


class TestMatchGlobal(unittest.TestCase):
    def test_self(self):
        rng = np.random.default_rng(11)
        graph = fixtures.make_graph('a', [descriptors(rng, 3), descriptors(rng, 4)], region_sizes=[5, 5])
        params = match.MatchParams(rho=0.7, min_region_px=50, matcher=Matcher.GLOBAL)
        report = match.match(graph, graph, params)
        self.assertEqual(1.0, report.score)
        self.assertEqual({}, report.per_region)

    def test_no_leaves(self):
        with self.assertRaises(EmptyGraph):
            match.match_global(fixtures.make_graph('q', [[]]), fixtures.make_graph('t', [[]]))


class TestRankDatabase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(12)
        self.base = descriptors(self.rng, 8)
        self.query = fixtures.make_graph('query', [self.base])
        self.params = match.MatchParams(rho=0.7, min_region_px=50)

    def shared(self, image_id: str, count: int):
        return fixtures.make_graph(image_id, [self.base[:count] + descriptors(self.rng, 8 - count)])

    def test_self_first(self):
        db = [self.shared('b', 2), self.query, self.shared('c', 5)]
        ranked = match.rank_database(self.query, db, self.params)
        self.assertEqual('query', ranked.entries[0].image_id)
        self.assertEqual(1.0, ranked.entries[0].score)
        self.assertEqual([1, 2, 3], [e.rank for e in ranked])

    def test_zero_scores_keep_order(self):
        db = [fixtures.make_graph(f'z{i}', [[unit(10 * i + j) for j in range(3)]]) for i in range(1, 5)]
        query = fixtures.make_graph('q', [[unit(j) for j in range(3)]])
        ranked = match.rank_database(query, db, self.params)
        self.assertEqual(['z1', 'z2', 'z3', 'z4'], ranked.ids())
        self.assertTrue(all(e.score == 0.0 for e in ranked))

    def test_planted_gradient(self):
        db = [self.shared('low', 2), self.shared('high', 8), self.shared('mid', 5)]
        ranked = match.rank_database(self.query, db, self.params)
        self.assertEqual(['high', 'mid', 'low'], ranked.ids())
        self.assertEqual(2, ranked.rank_of('mid'))
        self.assertEqual(0, ranked.rank_of('absent'))

    def test_workers_do_not_change_result(self):
        db = [self.shared(f'g{i}', i % 9) for i in range(12)]
        self.assertEqual(match.rank_database(self.query, db, self.params),
                         match.rank_database(self.query, db, self.params, workers=4))

    def test_empty_db(self):
        with self.assertRaises(EmptyInput):
            match.rank_database(self.query, [], self.params)


if __name__ == '__main__':
    unittest.main()
