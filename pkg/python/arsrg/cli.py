"""Command line interface: build graphs, match, run retrieval experiments, train codebooks and embed datasets."""
import sys
import json
import functools
from pathlib import Path
from concurrent.futures import ThreadPoolExecutor

import click

from arsrg.enums import LeafConfig, Matcher, Role
from arsrg.exceptions import ArsrgError, ArsrgIoError, EmptyGraph, InvariantViolation, ManifestError
from arsrg.features.keypoints import FeatureParams
from arsrg.graph.arsrg_graph import Arsrg, summary
from arsrg.imaging.raster import parse_size
from arsrg.manifest import load_manifest
from arsrg.matching import evaluation
from arsrg.matching.match import MatchParams, match, rank_database
from arsrg.embedding.bag_of_words import Codebook, build_codebook, embed, embeddings_csv
from arsrg.pipeline import GRAPH_SUFFIX, BuildParams, graph_stem, load_or_build
from arsrg.segmentation.segmentation import SegmentationParams
from arsrg.utils import yaml_cache
from arsrg.utils.arsrg_utils import atomic_write
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()


class ArsrgGroup(click.Group):
    """Click group mapping package errors to exit codes: 3 for data errors, 4 for internal failures."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ArsrgError as e:
            logger.error('%s: %s', type(e).__name__, e)
            click.echo(f'Error: {type(e).__name__}: {e}', err=True)
            ctx.exit(e.exit_code)
        except (click.exceptions.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except Exception:
            logger.exception('Unhandled Exception in arsrg')
            ctx.exit(InvariantViolation.exit_code)


def _size(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_size(value)
    except ValueError as e:
        raise click.BadParameter(str(e))


def _rho_grid(ctx, param, value):
    if value is None:
        return None
    try:
        grid = [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f'Expected comma separated numbers, got "{value}"')
    if not grid or any(not 0 < rho <= 1 for rho in grid):
        raise click.BadParameter('Every rho must be in (0, 1]')
    return grid


def _configured_rho_grid():
    values = config.setting('matching', 'rho_grid', [0.6, 0.7, 0.8])
    return _rho_grid(None, None, ','.join(str(v) for v in values))


def build_options(func):
    """Options controlling graph construction, shared by every command that builds graphs from images."""
    options = [
        click.option('--colors', type=click.IntRange(min=2), default=lambda: config.setting('segmentation', 'num_colors', 16),
                     show_default='16', help='Quantization palette size.'),
        click.option('--connectivity', type=click.Choice(['4', '8']),
                     default=lambda: str(config.setting('segmentation', 'connectivity', 8)),
                     show_default='8', help='Pixel connectivity of regions.'),
        click.option('--min-region-size', type=click.IntRange(min=1),
                     default=lambda: config.setting('segmentation', 'min_region_px', 50), show_default='50',
                     help='Smaller regions are merged into a neighbour and filtered before matching.'),
        click.option('--leaf-config', type=click.Choice([c.value for c in LeafConfig]),
                     default=lambda: config.setting('graph', 'leaf_config', 'region'), show_default='region',
                     help='Leaf level configuration.'),
        click.option('--tau', type=click.FloatRange(min=0, min_open=True), default=None,
                     help='SNNG distance threshold in pixels, default 0.1 x image diagonal.'),
        click.option('--resize', callback=_size, default=None, metavar='WxH',
                     help='Rescale images before processing, eg 150x150.'),
        click.option('--seed', type=int, default=lambda: config.setting('segmentation', 'seed', 0),
                     show_default='0', help='Seed of every randomized step.'),
        click.option('--workers', type=click.IntRange(min=1),
                     default=lambda: config.setting('general', 'workers', 4), show_default='4',
                     help='Images processed concurrently.'),
    ]
    return functools.reduce(lambda f, option: option(f), reversed(options), func)


def make_build_params(colors, connectivity, min_region_size, leaf_config, tau, resize, seed) -> BuildParams:
    segmentation = SegmentationParams(num_colors=colors, connectivity=int(connectivity),
                                      min_region_px=min_region_size, seed=seed)
    return BuildParams(segmentation, FeatureParams(), LeafConfig.parse(leaf_config), tau, resize)


def _load_all(paths, ids, params: BuildParams, workers: int, keypoints_from=None):
    keypoint_paths = [keypoints_from] * len(paths)

    def _one(args):
        path, image_id, keypoints_path = args
        return load_or_build(path, image_id, params, keypoints_path)
    jobs = list(zip(paths, ids, keypoint_paths))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one, jobs))
    return [_one(job) for job in jobs]


def _write_text(path: Path, text: str) -> None:
    try:
        atomic_write(path, text)
    except OSError as e:
        raise ArsrgIoError(f"Could not write {path}: {e}") from e


@click.group(cls=ArsrgGroup)
@click.version_option(str(yaml_cache.get_project_yml().get('version', '')), prog_name='arsrg')
def main():
    """Attributed Relational SIFT-based Regions Graphs for image matching and retrieval."""


@main.command('build')
@click.argument('images', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--out-dir', '-o', type=click.Path(file_okay=False, path_type=Path), default=Path('.'),
              show_default=True, help='Directory receiving one <id>.arsrg.json per image.')
@click.option('--keypoints-from', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help='ARSRG-KP file replacing the built-in detector, single image only.')
@build_options
def cmd_build(images, out_dir, keypoints_from, colors, connectivity, min_region_size, leaf_config, tau, resize,
              seed, workers):
    """Build and serialize the ARSRG of each image."""
    if keypoints_from is not None and len(images) != 1:
        raise click.UsageError('--keypoints-from needs exactly one image')
    if keypoints_from is not None and resize is not None:
        raise click.UsageError('--keypoints-from cannot be combined with --resize')
    params = make_build_params(colors, connectivity, min_region_size, leaf_config, tau, resize, seed)
    graphs = _load_all(list(images), [graph_stem(p) for p in images], params, workers, keypoints_from)
    for graph in graphs:
        path = graph.write(out_dir / f'{graph.image_id}{GRAPH_SUFFIX}')
        click.echo(str(path))
        logger.info('Wrote %s', path)


@main.command('match')
@click.argument('query', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument('target', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--out', '-o', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Write the match report JSON here.')
@click.option('--rho', type=click.FloatRange(0, 1, min_open=True), default=None, help='Ratio test threshold.')
@click.option('--matcher', type=click.Choice([m.value for m in Matcher]), default=None,
              help='region (default) or the global whole image baseline.')
@build_options
def cmd_match(query, target, out, rho, matcher, colors, connectivity, min_region_size, leaf_config, tau, resize,
              seed, workers):
    """Match two graphs (or images) and report their similarity."""
    params = make_build_params(colors, connectivity, min_region_size, leaf_config, tau, resize, seed)
    q_graph, t_graph = _load_all([query, target], [None, None], params, workers)
    match_params = _match_params(rho, min_region_size, matcher)
    report = match(q_graph, t_graph, match_params)
    if out is not None:
        report.write(out)
    click.echo(f'{report.query_id} {report.target_id} score={report.score:.6f} pairs={len(report.pairs)}')


def _match_params(rho, min_region_size, matcher) -> MatchParams:
    kwargs = {'min_region_px': min_region_size}
    if rho is not None:
        kwargs['rho'] = rho
    if matcher is not None:
        kwargs['matcher'] = Matcher.parse(matcher)
    return MatchParams(**kwargs)


@main.command('retrieve')
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--out-dir', '-o', type=click.Path(file_okay=False, path_type=Path), default=Path('.'),
              show_default=True, help='Directory receiving rankings.csv and summary.csv.')
@click.option('--rho', type=click.FloatRange(0, 1, min_open=True), default=None, help='Ratio test threshold.')
@click.option('--rho-grid', callback=_rho_grid, default=None, metavar='R1,R2,...',
              help='Sweep several rho values, one summary row each, eg 0.6,0.7,0.8.')
@click.option('--sweep', is_flag=True, help='Sweep the matching.rho_grid values from arsrg_cfg.yml.')
@click.option('--cutoff', type=click.IntRange(min=1), default=lambda: config.setting('matching', 'cutoff', 10),
              show_default='10', help='k for precision and recall.')
@click.option('--matcher', type=click.Choice([m.value for m in Matcher]), default=None,
              help='region (default) or the global whole image baseline.')
@build_options
def cmd_retrieve(manifest, out_dir, rho, rho_grid, sweep, cutoff, matcher, colors, connectivity, min_region_size,
                 leaf_config, tau, resize, seed, workers):
    """Rank the database entries of a manifest for each query entry and report MRR, precision and recall."""
    dataset = load_manifest(manifest)
    queries, database = dataset.with_role(Role.QUERY), dataset.with_role(Role.DATABASE)
    if not queries:
        raise ManifestError('Manifest has no query entries')
    if not database:
        raise ManifestError('Manifest has no database entries')
    params = make_build_params(colors, connectivity, min_region_size, leaf_config, tau, resize, seed)
    entries = queries + database
    graphs = _load_all([e.path for e in entries], [e.image_id for e in entries], params, workers)
    q_graphs, db_graphs = graphs[:len(queries)], graphs[len(queries):]
    relevant = {q.image_id: dataset.relevant_ids(q, database) for q in queries}

    if not rho_grid and sweep:
        rho_grid = _configured_rho_grid()
    grid = rho_grid if rho_grid else [rho if rho is not None else MatchParams().rho]
    rows, first_rankings = [], None
    for value in grid:
        match_params = _match_params(value, min_region_size, matcher)
        rankings = {}
        for q_graph in q_graphs:
            try:
                rankings[q_graph.image_id] = rank_database(q_graph, db_graphs, match_params, workers)
            except EmptyGraph as e:
                logger.warning('Skipping query %s: %s', q_graph.image_id, e)
        summary_row = evaluation.evaluate_retrieval(rankings, relevant, cutoff)
        rows.append((value, summary_row))
        click.echo(f'rho={value:g} mrr={summary_row.mrr:.4f} precision@{cutoff}={summary_row.precision:.4f} '
                   f'recall@{cutoff}={summary_row.recall:.4f} queries={summary_row.queries}')
        if first_rankings is None:
            first_rankings = rankings
    _write_text(out_dir / 'rankings.csv', evaluation.rankings_csv(first_rankings.values()))
    _write_text(out_dir / 'summary.csv', evaluation.summaries_csv(rows))


def _training_entries(dataset):
    train = dataset.with_role(Role.TRAIN)
    return train if train else list(dataset.entries)


@main.command('codebook')
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--out', '-o', type=click.Path(dir_okay=False, path_type=Path), default=Path('codebook.json'),
              show_default=True, help='Codebook JSON destination.')
@click.option('--k', 'k', type=click.IntRange(min=1), default=lambda: config.setting('embedding', 'k', 64),
              show_default='64', help='Number of words.')
@build_options
def cmd_codebook(manifest, out, k, colors, connectivity, min_region_size, leaf_config, tau, resize, seed, workers):
    """Train a Bag of ARSRG Words codebook on the train entries of a manifest (all entries when none)."""
    dataset = load_manifest(manifest)
    entries = _training_entries(dataset)
    params = make_build_params(colors, connectivity, min_region_size, leaf_config, tau, resize, seed)
    graphs = _load_all([e.path for e in entries], [e.image_id for e in entries], params, workers)
    codebook = build_codebook(graphs, k, seed)
    codebook.write(out)
    click.echo(str(out))


@main.command('embed')
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--codebook', 'codebook_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help='Codebook JSON from the codebook command.')
@click.option('--out', '-o', type=click.Path(dir_okay=False, path_type=Path), default=Path('embeddings.csv'),
              show_default=True, help='Embedding CSV destination.')
@click.option('--normalize/--no-normalize', default=True, show_default=True, help='L1 normalize histograms.')
@build_options
def cmd_embed(manifest, codebook_path, out, normalize, colors, connectivity, min_region_size, leaf_config, tau,
              resize, seed, workers):
    """Embed every manifest entry as a word histogram, one CSV row per image."""
    dataset = load_manifest(manifest)
    codebook = Codebook.read(codebook_path)
    params = make_build_params(colors, connectivity, min_region_size, leaf_config, tau, resize, seed)
    entries = list(dataset.entries)
    graphs = _load_all([e.path for e in entries], [e.image_id for e in entries], params, workers)
    rows = [(e.image_id, embed(g, codebook, normalize)) for e, g in zip(entries, graphs)]
    _write_text(out, embeddings_csv(rows))
    click.echo(str(out))


@main.command('inspect')
@click.argument('graph', type=click.Path(exists=True, dir_okay=False, path_type=Path))
def cmd_inspect(graph):
    """Print a summary of a serialized graph."""
    click.echo(json.dumps(summary(Arsrg.read(graph)), indent=2))


if __name__ == '__main__':
    sys.exit(main())
