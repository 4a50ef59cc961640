import unittest

import numpy as np

from arsrg.graph import rag
from arsrg.segmentation.label_map import LabelMap, relabel_in_scan_order
from test_arsrg import fixtures


def brute_force_edges(lm: LabelMap) -> set:
    h, w = lm.labels.shape
    edges = set()
    for r in range(h):
        for c in range(w):
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < h and 0 <= cc < w:
                        a, b = int(lm.labels[r, c]) - 1, int(lm.labels[rr, cc]) - 1
                        if a != b:
                            edges.add((min(a, b), max(a, b)))
    return edges


class TestBuildRag(unittest.TestCase):
    def test_quadrants_complete_graph(self):
        """Test that quadrants are all adjacent, the diagonal pairs through the shared corner."""
        rg = rag.build_rag(fixtures.quadrant_label_map(64))
        self.assertEqual(6, rg.num_edges)
        self.assertEqual([1024] * 4, rg.region_sizes.tolist())
        np.testing.assert_allclose(rg.region_centroids[0], (15.5, 15.5))
        np.testing.assert_allclose(rg.region_centroids[3], (47.5, 47.5))

    def test_stripes(self):
        rg = rag.build_rag(fixtures.stripes_label_map(10, 4, 6))
        self.assertEqual([(0, 1)], rg.edges())
        self.assertEqual([40, 60], rg.region_sizes.tolist())

    def test_single_region(self):
        rg = rag.build_rag(LabelMap(np.ones((5, 5))))
        self.assertEqual(1, rg.num_regions)
        self.assertEqual(0, rg.num_edges)

    def test_brute_force(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            lm = fixtures.blocky_label_map(rng, 24, 20, int(rng.integers(2, 7)))
            self.assertEqual(brute_force_edges(lm), set(rag.build_rag(lm).edges()), f'trial {trial}')

    def test_rotation_invariant(self):
        """Test that rotating a label map by 90 degrees yields an isomorphic RAG under the pixel mapping.

        """
        rng = np.random.default_rng(12)
        for trial in range(50):
            lm = fixtures.blocky_label_map(rng, 20, 28, int(rng.integers(2, 8)))
            rotated_raw = np.rot90(lm.labels)
            rotated = LabelMap(relabel_in_scan_order(rotated_raw))
            mapping = dict(zip(rotated_raw.ravel().tolist(), rotated.labels.ravel().tolist()))
            original = {tuple(sorted((mapping[i + 1] - 1, mapping[j + 1] - 1)))
                        for i, j in rag.build_rag(lm).edges()}
            self.assertEqual(original, set(rag.build_rag(rotated).edges()), f'trial {trial}')

    def test_border_padding(self):
        """Test that a fresh border region only adds edges to the regions touching the old border.

        """
        rng = np.random.default_rng(13)
        for trial in range(50):
            lm = fixtures.blocky_label_map(rng, int(rng.integers(8, 30)), int(rng.integers(8, 30)),
                                           int(rng.integers(1, 8)))
            top, bottom, left, right = (int(v) for v in rng.integers(1, 5, size=4))
            border = lm.num_regions + 1
            padded = LabelMap(np.pad(lm.labels, ((top, bottom), (left, right)), constant_values=border))
            before, after = rag.build_rag(lm), rag.build_rag(padded)

            new = border - 1
            edges = set(after.edges())
            self.assertEqual(set(before.edges()), {e for e in edges if new not in e}, f'trial {trial}')
            rim = np.concatenate([lm.labels[0], lm.labels[-1], lm.labels[:, 0], lm.labels[:, -1]])
            self.assertEqual({(int(label) - 1, new) for label in np.unique(rim)},
                             {e for e in edges if new in e}, f'trial {trial}')
            self.assertEqual(before.region_sizes.tolist(), after.region_sizes[:new].tolist())
            np.testing.assert_allclose(before.region_centroids + [left, top], after.region_centroids[:new])

    def test_invalid_graph(self):
        with self.assertRaises(ValueError):
            rag.RegionGraph(np.array([[0, 1], [0, 0]]), [1, 1], [(0, 0), (1, 1)])
        with self.assertRaises(ValueError):
            rag.RegionGraph.from_edges([1, 1], [(0, 0), (1, 1)], [(0, 0)])


class TestRegionFilterMask(unittest.TestCase):
    def test_mask(self):
        rg = rag.build_rag(fixtures.stripes_label_map(10, 4, 6))
        self.assertEqual([False, True], rag.region_filter_mask(rg, 50).tolist())
        self.assertEqual([True, True], rag.region_filter_mask(rg, 0).tolist())
        self.assertEqual([True, True], rag.region_filter_mask(rg, 40).tolist())

    def test_negative(self):
        rg = rag.build_rag(fixtures.quadrant_label_map(8))
        with self.assertRaises(ValueError):
            rag.region_filter_mask(rg, -1)


class TestOrderedNeighbors(unittest.TestCase):
    def test_quadrants(self):
        rg = rag.build_rag(fixtures.quadrant_label_map(64))
        neighbours = rag.ordered_neighbors(rg, 0)
        self.assertEqual([1, 2, 3], [nb.region for nb in neighbours])
        self.assertEqual(['right', 'bottom', 'right'], [nb.direction for nb in neighbours])
        self.assertAlmostEqual(32.0, neighbours[0].distance)

    def test_direction_of(self):
        self.assertEqual('left', rag.direction_of(-3, 1))
        self.assertEqual('top', rag.direction_of(0, -2))
        self.assertEqual('bottom', rag.direction_of(1, 2))

    def test_out_of_range(self):
        rg = rag.build_rag(fixtures.quadrant_label_map(8))
        with self.assertRaises(IndexError):
            rag.ordered_neighbors(rg, 4)

    def test_networkx(self):
        graph = rag.to_networkx(rag.build_rag(fixtures.quadrant_label_map(8)))
        self.assertEqual(4, graph.number_of_nodes())
        self.assertEqual(6, graph.number_of_edges())
        self.assertEqual(16, graph.nodes[2]['size'])


if __name__ == '__main__':
    unittest.main()
