import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
from click.testing import CliRunner

from arsrg import cli, constants
from arsrg.embedding.bag_of_words import Codebook
from arsrg.features.keypoints import save_keypoints
from arsrg.graph.arsrg_graph import Arsrg
from arsrg.imaging.raster import save_image
from arsrg.matching.match import MatchReport
from arsrg.utils import yaml_cache
from test_arsrg import fixtures


def random_graph(image_id: str, seed: int) -> Arsrg:
    rng = np.random.default_rng(seed)
    return fixtures.make_graph(image_id, [[fixtures.random_descriptor(rng) for _ in range(4)] for _ in range(2)])


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.runner = CliRunner()

    def tearDown(self):
        self.tmp.cleanup()

    def invoke(self, *args):
        return self.runner.invoke(cli.main, [str(a) for a in args])

    def image(self, name: str, seed: int) -> Path:
        return save_image(fixtures.shape_image(seed, 96), self.root / name)

    def graphs(self, count: int) -> list:
        return [random_graph(f'g{i}', i).write(self.root / f'g{i}.arsrg.json') for i in range(count)]

    def manifest(self, *rows: str) -> Path:
        path = self.root / 'manifest.csv'
        path.write_text('\n'.join(('path,id,label,role',) + rows) + '\n')
        return path


class TestBuild(CliTestCase):
    def test_defaults(self):
        image = self.image('one.png', 1)
        result = self.invoke('build', image, '--out-dir', self.root / 'out')
        self.assertEqual(0, result.exit_code, result.output)
        graph = Arsrg.read(self.root / 'out' / 'one.arsrg.json')
        self.assertEqual('one', graph.image_id)
        self.assertEqual('region', graph.config)

    def test_region_graph_flags(self):
        image = self.image('one.png', 1)
        result = self.invoke('build', image, '-o', self.root, '--leaf-config', 'region-graph', '--tau', 25)
        self.assertEqual(0, result.exit_code, result.output)
        document = json.loads((self.root / 'one.arsrg.json').read_bytes())
        self.assertEqual(('region-graph', 25.0), (document['config'], document['tau']))

    def test_deterministic(self):
        image = self.image('one.png', 2)
        for out in ('a', 'b'):
            self.assertEqual(0, self.invoke('build', image, '-o', self.root / out, '--seed', 5).exit_code)
        self.assertEqual((self.root / 'a' / 'one.arsrg.json').read_bytes(),
                         (self.root / 'b' / 'one.arsrg.json').read_bytes())

    def test_filtered_away(self):
        image = self.image('one.png', 1)
        result = self.invoke('build', image, '-o', self.root, '--min-region-size', 96 * 96 + 1)
        self.assertEqual(3, result.exit_code)
        self.assertIn('EmptyGraph', result.output)

    def test_keypoints_from(self):
        image = self.image('one.png', 3)
        kp_path = self.root / 'one.kp'
        save_keypoints([fixtures.make_keypoint(5.0, 5.0), fixtures.make_keypoint(90.0, 90.0)], kp_path)
        result = self.invoke('build', image, '-o', self.root, '--keypoints-from', kp_path)
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual(2, Arsrg.read(self.root / 'one.arsrg.json').num_leaves)

    def test_usage_errors(self):
        image = self.image('one.png', 1)
        self.assertEqual(2, self.invoke('build', image, '--connectivity', 6).exit_code)
        self.assertEqual(2, self.invoke('build', image, '--resize', '10by10').exit_code)
        self.assertEqual(2, self.invoke('build', image, image, '--keypoints-from', image).exit_code)

    def test_bad_image(self):
        bad = self.root / 'bad.png'
        bad.write_bytes(b'not an image')
        self.assertEqual(3, self.invoke('build', bad, '-o', self.root).exit_code)


class TestMatch(CliTestCase):
    def test_self(self):
        path, = self.graphs(1)
        out = self.root / 'report.json'
        result = self.invoke('match', path, path, '--out', out)
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn('score=1.000000', result.output)
        self.assertEqual(1.0, MatchReport.read(out).score)

    def test_global(self):
        first, second = self.graphs(2)
        result = self.invoke('match', first, second, '--matcher', 'global', '--rho', 0.8)
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn('g0 g1', result.output)


class TestRetrieve(CliTestCase):
    def test_self_retrieval_grid(self):
        paths = self.graphs(3)
        rows = [f'{p.name},q{i},,query' for i, p in enumerate(paths)]
        rows += [f'{p.name},d{i},,database' for i, p in enumerate(paths)]
        out = self.root / 'results'
        result = self.invoke('retrieve', self.manifest(*rows), '-o', out, '--rho-grid', '0.6,0.7,0.8', '--cutoff', 1)
        self.assertEqual(0, result.exit_code, result.output)
        summary = (out / 'summary.csv').read_text().splitlines()
        self.assertEqual(['rho,mrr,precision,recall,cutoff', '0.6,1.000000,1.000000,1.000000,1',
                          '0.7,1.000000,1.000000,1.000000,1', '0.8,1.000000,1.000000,1.000000,1'], summary)
        rankings = (out / 'rankings.csv').read_text().splitlines()
        self.assertEqual(1 + 3 * 3, len(rankings))
        self.assertEqual('q0,1,d0,1.000000', rankings[1])

    def test_sweep_uses_configured_grid(self):
        paths = self.graphs(2)
        rows = [f'{p.name},q{i},,query' for i, p in enumerate(paths)]
        rows += [f'{p.name},d{i},,database' for i, p in enumerate(paths)]
        out = self.root / 'sweep'
        result = self.invoke('retrieve', self.manifest(*rows), '-o', out, '--sweep', '--cutoff', 1)
        self.assertEqual(0, result.exit_code, result.output)
        summary = (out / 'summary.csv').read_text().splitlines()
        self.assertEqual(['0.6', '0.7', '0.8'], [row.split(',')[0] for row in summary[1:]])

        out = self.root / 'explicit'
        result = self.invoke('retrieve', self.manifest(*rows), '-o', out, '--sweep', '--rho-grid', '0.5')
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual(2, len((out / 'summary.csv').read_text().splitlines()))

    def test_empty_database(self):
        path, = self.graphs(1)
        result = self.invoke('retrieve', self.manifest(f'{path.name},q0,,query'), '-o', self.root)
        self.assertEqual(3, result.exit_code)

    def test_manifest_line_number(self):
        path, = self.graphs(1)
        result = self.invoke('retrieve', self.manifest(f'{path.name},q0,,query', f'{path.name},q0,,database'))
        self.assertEqual(3, result.exit_code)
        self.assertIn('line 3', result.output)

    def test_bad_grid(self):
        path, = self.graphs(1)
        manifest = self.manifest(f'{path.name},q0,,query', f'{path.name},d0,,database')
        self.assertEqual(2, self.invoke('retrieve', manifest, '--rho-grid', '0.5,1.5').exit_code)


class TestCodebookAndEmbed(CliTestCase):
    def test_codebook_then_embed(self):
        paths = self.graphs(3)
        manifest = self.manifest(*[f'{p.name},g{i},,train' for i, p in enumerate(paths)])
        codebook = self.root / 'cb.json'
        result = self.invoke('codebook', manifest, '-o', codebook, '--k', 4, '--seed', 1)
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual(4, Codebook.read(codebook).k)

        out = self.root / 'emb.csv'
        result = self.invoke('embed', manifest, '--codebook', codebook, '-o', out, '--no-normalize')
        self.assertEqual(0, result.exit_code, result.output)
        lines = out.read_text().splitlines()
        self.assertEqual('image_id,c0,c1,c2,c3', lines[0])
        self.assertEqual(4, len(lines))
        for line in lines[1:]:
            self.assertEqual(8.0, sum(float(v) for v in line.split(',')[1:]))

    def test_insufficient_data(self):
        paths = self.graphs(1)
        manifest = self.manifest(f'{paths[0].name},g0,,train')
        result = self.invoke('codebook', manifest, '-o', self.root / 'cb.json', '--k', 100)
        self.assertEqual(3, result.exit_code)
        self.assertIn('InsufficientData', result.output)


class TestInspect(CliTestCase):
    def test_summary(self):
        path, = self.graphs(1)
        result = self.invoke('inspect', path)
        self.assertEqual(0, result.exit_code, result.output)
        info = json.loads(result.stdout)
        self.assertEqual(('g0', 2, 8), (info['image_id'], info['regions'], info['leaves']))

    def test_version(self):
        result = self.invoke('--version')
        self.assertEqual(0, result.exit_code)
        self.assertIn('arsrg', result.output)
        self.assertIn(str(yaml_cache.get_project_yml()['version']), result.output)
        self.assertFalse(hasattr(constants, 'VERSION'))


if __name__ == '__main__':
    unittest.main()
