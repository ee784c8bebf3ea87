"""Full-frame segmentation: pad, split into tiles, segment each tile, stitch
the probability maps, threshold once.

Tiles are independent, so per-tile inference fans out over a thread pool;
results are placed by tile index, which makes the output identical for any
worker count.  Thresholding happens on the stitched full-frame probability
map so tile boundaries cannot shift the decision.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import metrics, ops, tiling, unet
from .data import to_unit
from .errors import ShapeError
from .ops import ConvParams


def predict_frame(params: list[ConvParams], frame: np.ndarray,
                  tile_size: int = 256, threshold: float = 0.5,
                  threads: int | None = None):
    """Segment one grayscale frame; returns (binary mask, probability map),
    both with exactly the frame's dimensions."""
    cfg = unet.config_from_params(params)
    divisor = 1 << cfg.depth
    if tile_size % divisor:
        raise ShapeError(f"tile size {tile_size} must be divisible by {divisor} "
                         f"(2^depth for depth {cfg.depth})")
    if frame.ndim != 2:
        raise ShapeError(f"frame must be a 2-D grayscale image, got shape {frame.shape}")
    height, width = frame.shape
    grid = tiling.compute_grid(width, height, tile_size)
    tiles = tiling.split_image(tiling.pad_image(frame, grid), grid)

    def segment(tile: np.ndarray) -> np.ndarray:
        logits, _ = unet.forward(params, to_unit(tile)[None, None])
        return ops.sigmoid(logits)[0, 0]

    if threads == 1:
        prob_tiles = [segment(t) for t in tiles]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            prob_tiles = list(pool.map(segment, tiles))
    probs = tiling.stitch(np.stack(prob_tiles), grid)
    return metrics.binarize(probs, threshold), probs
