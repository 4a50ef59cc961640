"""Image to ARSRG: resize, segment, detect keypoints, build the RAG and assemble the graph."""
from __future__ import annotations
from pathlib import Path
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

from arsrg.enums import LeafConfig
from arsrg.exceptions import EmptyGraph
from arsrg.features.keypoints import FeatureParams, Keypoint, detect_and_describe, load_keypoints
from arsrg.graph.arsrg_graph import Arsrg, build_arsrg
from arsrg.graph.rag import build_rag, region_filter_mask
from arsrg.imaging.raster import RasterImage, load_image, resize_image
from arsrg.segmentation.segmentation import SegmentationParams, segment
from arsrg.utils import yaml_cache
from arsrg.utils.arsrg_utils import Timer
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()

GRAPH_SUFFIX = '.arsrg.json'


@dataclass(frozen=True)
class BuildParams(object):
    """Everything needed to turn an image into an ARSRG."""
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    features: FeatureParams = field(default_factory=FeatureParams)
    leaf_config: LeafConfig = field(default_factory=lambda: LeafConfig.parse(
        config.setting('graph', 'leaf_config', 'region')))
    tau: Optional[float] = None
    resize: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, 'leaf_config', LeafConfig.parse(self.leaf_config))
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f'tau must be > 0, got {self.tau}')


def build_graph(img: RasterImage, image_id: str, params: BuildParams = None,
                keypoints: Sequence[Keypoint] = None) -> Arsrg:
    """Run the full construction pipeline on an image.

    Args:
        img (RasterImage): Input image.
        image_id (str): Identifier stored on the root node.
        params (BuildParams): Pipeline settings.
        keypoints (Sequence[Keypoint]): Externally computed keypoints, replacing the built-in detector. They
            must be in the coordinates of the image after any resize.

    Returns:
        Arsrg: The graph.

    Raises:
        EmptyGraph: If every region is smaller than the segmentation's min_region_px.

    """
    params = params if params is not None else BuildParams()
    with Timer(f'build_graph {image_id}', logger):
        if params.resize is not None:
            img = resize_image(img, *params.resize)
        lm = segment(img, params.segmentation)
        rg = build_rag(lm)
        if not region_filter_mask(rg, params.segmentation.min_region_px).any():
            raise EmptyGraph(f'{image_id}: no region of {img.width}x{img.height} reaches '
                             f'{params.segmentation.min_region_px}px')
        if keypoints is None:
            keypoints = detect_and_describe(img, params.features)
        if not keypoints:
            logger.warning('%s has no keypoints, the graph has no leaves', image_id)
        return build_arsrg(image_id, lm, rg, keypoints, params.leaf_config, params.tau)


def is_graph_file(path: Union[str, Path]) -> bool:
    return str(path).lower().endswith(GRAPH_SUFFIX) or Path(path).suffix.lower() == '.json'


def load_or_build(path: Union[str, Path], image_id: str = None, params: BuildParams = None,
                  keypoints_path: Union[str, Path] = None) -> Arsrg:
    """Read a serialized graph, or build one from an image file.

    Args:
        path (str, Path): .arsrg.json graph or PNG/PPM/PGM image.
        image_id (str): Root identifier. Built graphs default to the file stem, read graphs keep their stored id.
        params (BuildParams): Pipeline settings for built graphs.
        keypoints_path (str, Path): Optional ARSRG-KP file used instead of the built-in detector.

    Returns:
        Arsrg: The graph.

    """
    path = Path(path)
    if is_graph_file(path):
        graph = Arsrg.read(path)
        return graph if image_id is None or image_id == graph.image_id else replace(graph, image_id=image_id)
    image_id = image_id if image_id is not None else graph_stem(path)
    keypoints = load_keypoints(keypoints_path) if keypoints_path is not None else None
    return build_graph(load_image(path), image_id, params, keypoints)


def graph_stem(path: Union[str, Path]) -> str:
    """File name without the image or graph suffix."""
    name = Path(path).name
    if name.lower().endswith(GRAPH_SUFFIX):
        return name[:-len(GRAPH_SUFFIX)]
    return Path(name).stem
