"""Grayscale image and mask I/O, paired-dataset loading, and a synthetic
cord-image generator.

Images are 2-D uint8 numpy arrays (row, column); masks are 2-D uint8 arrays
with values in {0, 1}.  Two file formats are supported: binary PGM (ASCII
"P5", whitespace, width, height, maxval 255, single whitespace, raw bytes)
as the canonical dependency-free format, and 8-bit grayscale non-interlaced
PNG for interoperability with microscope exports.

A dataset directory holds filename-matched pairs:

    <root>/images/<name>.(pgm|png)
    <root>/masks/<name>.(pgm|png)

Mask files are binarized at >= 128 on load, since hand-drawn masks are
anti-aliased at the edges.
"""

from __future__ import annotations

import math
import struct
import zlib
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import CordsegError, DomainError, ShapeError
from .rng import SplitMix64, derive


class ImageFormatError(CordsegError):
    """File is not in a format this package reads."""


class UnknownImageFormatError(ImageFormatError):
    """Leading magic bytes match neither PGM nor PNG."""


class UnsupportedPixelFormatError(ImageFormatError):
    """Recognized container, but not 8-bit single-channel pixels."""


class ImageDataError(ImageFormatError):
    """Pixel payload is inconsistent with the declared header."""


class PairingError(CordsegError):
    """images/ and masks/ entries do not match one-to-one."""


class EmptyDatasetError(CordsegError):
    """Dataset directory yields no samples."""


class Sample(NamedTuple):
    name: str
    image: np.ndarray
    mask: np.ndarray


# --- PGM ----------------------------------------------------------------------

def decode_pgm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise UnknownImageFormatError(f"not a binary PGM: magic {data[:2]!r}")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":  # comment runs to end of line
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise ImageDataError("malformed PGM header")
        fields.append(int(data[start:pos]))
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedPixelFormatError(f"PGM maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise ImageDataError(f"bad PGM dimensions {width}x{height}")
    pos += 1  # exactly one whitespace byte before the raster
    raster = data[pos:]
    if len(raster) != width * height:
        raise ImageDataError(f"PGM raster holds {len(raster)} bytes, expected "
                             f"{width * height} for {width}x{height}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def encode_pgm(img: np.ndarray) -> bytes:
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ShapeError(f"expected a 2-D uint8 image, got {img.dtype} {img.shape}")
    height, width = img.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + img.tobytes()


# --- PNG (8-bit grayscale, non-interlaced) ------------------------------------

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def decode_png(data: bytes) -> np.ndarray:
    if not data.startswith(_PNG_SIGNATURE):
        raise UnknownImageFormatError("not a PNG: bad signature")
    pos = len(_PNG_SIGNATURE)
    header = None
    idat = bytearray()
    while pos < len(data):
        if pos + 8 > len(data):
            raise ImageDataError("truncated PNG chunk header")
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + length]
        if len(body) != length or pos + 12 + length > len(data):
            raise ImageDataError(f"truncated PNG chunk {ctype!r}")
        crc = struct.unpack(">I", data[pos + 8 + length:pos + 12 + length])[0]
        if crc != zlib.crc32(ctype + body):
            raise ImageDataError(f"PNG chunk {ctype!r} fails its checksum")
        pos += 12 + length
        if ctype == b"IHDR":
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat += body
        elif ctype == b"IEND":
            break
    if header is None:
        raise ImageDataError("PNG has no IHDR chunk")
    width, height, bitdepth, color, compression, filt, interlace = header
    if (bitdepth, color) != (8, 0):
        raise UnsupportedPixelFormatError(f"only 8-bit grayscale PNG is supported, "
                                          f"got bit depth {bitdepth}, color type {color}")
    if compression or filt or interlace:
        raise UnsupportedPixelFormatError("compressed/interlace variants beyond "
                                          "the baseline are not supported")
    if not idat:
        raise ImageDataError("PNG has no IDAT data")
    raw = np.frombuffer(zlib.decompress(bytes(idat)), dtype=np.uint8)
    if raw.size != height * (width + 1):
        raise ImageDataError(f"PNG scanline data holds {raw.size} bytes, expected "
                             f"{height * (width + 1)}")
    rows = raw.reshape(height, width + 1)
    out = np.zeros((height, width), dtype=np.uint8)
    prev = np.zeros(width, dtype=np.int32)
    for y in range(height):
        ftype = rows[y, 0]
        cur = rows[y, 1:].astype(np.int32)
        if ftype == 0:
            line = cur
        elif ftype == 1:  # Sub: cumulative along the row
            line = np.cumsum(cur, dtype=np.int64) & 255
        elif ftype == 2:  # Up
            line = (cur + prev) & 255
        elif ftype == 3:  # Average
            line = np.empty(width, dtype=np.int32)
            left = 0
            for x in range(width):
                left = (cur[x] + ((left + prev[x]) >> 1)) & 255
                line[x] = left
        elif ftype == 4:  # Paeth
            line = np.empty(width, dtype=np.int32)
            left = 0
            for x in range(width):
                up = int(prev[x])
                ul = int(prev[x - 1]) if x else 0
                p = left + up - ul
                pa, pb, pc = abs(p - left), abs(p - up), abs(p - ul)
                if pa <= pb and pa <= pc:
                    pred = left
                elif pb <= pc:
                    pred = up
                else:
                    pred = ul
                left = (cur[x] + pred) & 255
                line[x] = left
        else:
            raise ImageDataError(f"PNG row {y} uses unknown filter {ftype}")
        out[y] = line
        prev = line.astype(np.int32)
    return out


def encode_png(img: np.ndarray) -> bytes:
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ShapeError(f"expected a 2-D uint8 image, got {img.dtype} {img.shape}")
    height, width = img.shape

    def chunk(ctype: bytes, body: bytes) -> bytes:
        crc = struct.pack(">I", zlib.crc32(ctype + body))
        return struct.pack(">I", len(body)) + ctype + body + crc

    scanlines = np.zeros((height, width + 1), dtype=np.uint8)
    scanlines[:, 1:] = img
    return (_PNG_SIGNATURE
            + chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(scanlines.tobytes()))
            + chunk(b"IEND", b""))


# --- files and datasets --------------------------------------------------------

def load_grayscale(path) -> np.ndarray:
    """Decode a PGM or 8-bit grayscale PNG file to a 2-D uint8 array."""
    data = Path(path).read_bytes()
    if data.startswith(b"P5"):
        return decode_pgm(data)
    if data.startswith(_PNG_SIGNATURE):
        return decode_png(data)
    raise UnknownImageFormatError(f"{path}: unknown magic {data[:8]!r}")


def save_mask(path, mask: np.ndarray) -> None:
    """Write a binary mask as PGM with 0 -> 0 and 1 -> 255."""
    mask = np.asarray(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise DomainError("mask values must be exactly 0 or 1")
    Path(path).write_bytes(encode_pgm((mask * np.uint8(255)).astype(np.uint8)))


def load_mask(path) -> np.ndarray:
    """Load a mask file, binarizing grayscale values at >= 128."""
    return (load_grayscale(path) >= 128).astype(np.uint8)


def to_unit(img: np.ndarray) -> np.ndarray:
    """Map uint8 pixels to float32 in [0, 1] for the network."""
    return img.astype(np.float32) / np.float32(255.0)


_IMAGE_SUFFIXES = (".pgm", ".png")


def _stems(directory: Path) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        if path.stem in found:
            raise PairingError(f"duplicate stem {path.stem!r}: {found[path.stem].name} "
                               f"and {path.name}")
        found[path.stem] = path
    return found


def load_dataset(root) -> list[Sample]:
    """Load name-matched (image, mask) pairs, sorted by name."""
    root = Path(root)
    images_dir = root / "images"
    masks_dir = root / "masks"
    if not images_dir.is_dir() or not masks_dir.is_dir():
        raise EmptyDatasetError(f"{root} must contain images/ and masks/ directories")
    images = _stems(images_dir)
    masks = _stems(masks_dir)
    orphans = sorted(set(images) ^ set(masks))
    if orphans:
        raise PairingError(f"unpaired entries: {', '.join(orphans)}")
    if not images:
        raise EmptyDatasetError(f"{root} holds no image/mask pairs")
    samples = []
    for name in sorted(images):
        image = load_grayscale(images[name])
        mask = load_mask(masks[name])
        if image.shape != mask.shape:
            raise ShapeError(f"sample {name!r}: image {image.shape} vs mask {mask.shape}")
        samples.append(Sample(name, image, mask))
    return samples


def save_dataset(root, samples: list[Sample]) -> None:
    """Write samples in the dataset directory layout as PGM files."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    for s in samples:
        (root / "images" / f"{s.name}.pgm").write_bytes(encode_pgm(s.image))
        save_mask(root / "masks" / f"{s.name}.pgm", s.mask)


# --- synthetic cords -----------------------------------------------------------

_MIN_FOREGROUND = 0.01
_MAX_FOREGROUND = 0.30


def _disk_offsets(thickness: int) -> np.ndarray:
    r = thickness / 2.0
    span = np.arange(-int(math.ceil(r)), int(math.ceil(r)) + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1)


def _draw_sample(size: int, rng: SplitMix64) -> tuple[np.ndarray, np.ndarray]:
    margin = 2
    support = np.zeros((size, size), dtype=bool)
    for _ in range(1 + rng.randbelow(4)):
        y = margin + rng.f64() * (size - 1 - 2 * margin)
        x = margin + rng.f64() * (size - 1 - 2 * margin)
        heading = rng.f64() * 2.0 * math.pi
        steps = size // 2 + rng.randbelow(size)
        turns = rng.normal_array(steps, std=0.25)
        points = np.empty((steps, 2), dtype=np.int64)
        for i in range(steps):
            heading += turns[i]
            ny = y + math.sin(heading)
            nx = x + math.cos(heading)
            if not margin <= ny <= size - 1 - margin:
                heading = -heading
                ny = y + math.sin(heading)
            if not margin <= nx <= size - 1 - margin:
                heading = math.pi - heading
                nx = x + math.cos(heading)
            y = min(max(ny, margin), size - 1 - margin)
            x = min(max(nx, margin), size - 1 - margin)
            points[i] = (int(round(y)), int(round(x)))
        offsets = _disk_offsets(2 + rng.randbelow(3))
        dots = points[:, None, :] + offsets[None, :, :]
        np.clip(dots, 0, size - 1, out=dots)
        support[dots[:, :, 0].ravel(), dots[:, :, 1].ravel()] = True

    background = rng.normal_array(size * size, mean=60.0, std=15.0).reshape(size, size)
    foreground = rng.normal_array(size * size, mean=200.0, std=20.0).reshape(size, size)
    image = np.where(support, foreground, background)
    image = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    return image, support.astype(np.uint8)


def gen_synthetic(count: int, size: int, seed: int) -> list[Sample]:
    """Deterministic synthetic dataset of bright curved cords on a noisy
    dark background; the mask is exactly the rendered stroke support.

    Each sample redraws until its foreground fraction lands in
    [0.01, 0.30], so the benchmark stays stable across seeds.
    """
    if size < 32:
        raise DomainError(f"size must be at least 32, got {size}")
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    samples = []
    for i in range(count):
        rng = SplitMix64(derive(seed, 0x5A31, i))
        for _ in range(100):
            image, mask = _draw_sample(size, rng)
            fraction = mask.mean()
            if _MIN_FOREGROUND <= fraction <= _MAX_FOREGROUND:
                break
        else:
            raise RuntimeError("synthetic generator failed to land in the "
                               "foreground-fraction window")
        samples.append(Sample(f"cord_{i:04d}", image, mask))
    return samples
