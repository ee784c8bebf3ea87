"""Frame geometry: pad a full frame, split it into fixed-size tiles, and
stitch per-tile maps back together.

Images and maps are 2-D numpy arrays indexed (row, column); any dtype works,
so the same functions carry uint8 frames out and float32 probability maps
back.  Tiles are non-overlapping and ordered row-major; stitch is the exact
inverse of split on the original pixel region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class TileGrid:
    """Padding and tile-coordinate plan for one frame size."""

    width: int
    height: int
    tile_size: int
    cols: int
    rows: int

    @property
    def padded_width(self) -> int:
        return self.cols * self.tile_size

    @property
    def padded_height(self) -> int:
        return self.rows * self.tile_size

    @property
    def tile_count(self) -> int:
        return self.cols * self.rows


def compute_grid(width: int, height: int, tile_size: int) -> TileGrid:
    """Smallest grid of tile_size squares covering a width x height frame."""
    if width < 1 or height < 1 or tile_size < 1:
        raise DomainError(f"frame {width}x{height} and tile size {tile_size} "
                          f"must all be positive")
    return TileGrid(width, height, tile_size,
                    cols=math.ceil(width / tile_size),
                    rows=math.ceil(height / tile_size))


def pad_image(img: np.ndarray, grid: TileGrid) -> np.ndarray:
    """Reflect-pad the right and bottom edges out to the grid's padded size.

    Reflection mirrors without repeating the border pixel, so a row
    [a, b, c] padded by 2 becomes [a, b, c, b, a]; the original region is
    returned unchanged.
    """
    if img.shape != (grid.height, grid.width):
        raise ShapeError(f"image {img.shape} does not match grid frame "
                         f"{(grid.height, grid.width)}")
    pad_h = grid.padded_height - grid.height
    pad_w = grid.padded_width - grid.width
    if pad_h == 0 and pad_w == 0:
        return img
    if pad_h >= grid.height or pad_w >= grid.width:
        raise DomainError(f"padding {(pad_h, pad_w)} meets or exceeds the image "
                          f"size {(grid.height, grid.width)}; the tile is larger "
                          f"than twice the image")
    return np.pad(img, ((0, pad_h), (0, pad_w)), mode="reflect")


def split_image(img: np.ndarray, grid: TileGrid) -> np.ndarray:
    """Cut a padded frame into (rows*cols, tile, tile), row-major order."""
    if img.shape != (grid.padded_height, grid.padded_width):
        raise ShapeError(f"image {img.shape} does not match padded size "
                         f"{(grid.padded_height, grid.padded_width)}; pad first")
    t = grid.tile_size
    tiles = img.reshape(grid.rows, t, grid.cols, t).transpose(0, 2, 1, 3)
    return tiles.reshape(grid.tile_count, t, t)


def stitch(tiles, grid: TileGrid) -> np.ndarray:
    """Place row-major tiles back on the padded canvas and crop to the
    original frame size.  Exact inverse of pad+split on the original region."""
    tiles = np.asarray(tiles)
    t = grid.tile_size
    if tiles.shape != (grid.tile_count, t, t):
        raise ShapeError(f"expected {grid.tile_count} tiles of {t}x{t}, got "
                         f"array of shape {tiles.shape}")
    canvas = tiles.reshape(grid.rows, grid.cols, t, t).transpose(0, 2, 1, 3)
    canvas = canvas.reshape(grid.padded_height, grid.padded_width)
    return canvas[:grid.height, :grid.width].copy()
