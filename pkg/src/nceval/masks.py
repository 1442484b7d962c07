"""Binary character masks: PNG loading, boundary extraction and overlap scores."""

from __future__ import annotations

import io
import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import png

from .errors import DecodeError, DimensionMismatch, EmptyInput, UnsupportedFormat, ValidationError

__all__ = [
    "BinaryMask",
    "ContourPointSet",
    "OverlapResult",
    "load_mask",
    "extract_contour",
    "overlap",
    "mean_overlap",
]

FOREGROUND_THRESHOLD = 127


class BinaryMask:
    """Immutable 2-D boolean grid, indexed ``data[row, col]``."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=bool, copy=True)
        if arr.ndim != 2:
            raise ValidationError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"mask dimensions must be positive, got {arr.shape}")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_flat(cls, width: int, height: int, values: Sequence[bool]) -> "BinaryMask":
        if len(values) != width * height:
            raise ValidationError(
                f"data length {len(values)} != width*height = {width * height}"
            )
        return cls(np.asarray(values, dtype=bool).reshape(height, width))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def foreground_count(self) -> int:
        return int(np.count_nonzero(self._data))

    def flat(self) -> np.ndarray:
        """Row-major flattening, i.e. pixel index ``p = y * width + x``."""
        return self._data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, foreground={self.foreground_count()})"


class ContourPointSet:
    """Unique integer boundary points ``(x, y)`` of a mask of known size.

    Points are held as an ``(k, 2)`` int64 array with columns ``x`` (column
    index) and ``y`` (row index).
    """

    __slots__ = ("_points", "source_width", "source_height")

    def __init__(self, points, source_width: int, source_height: int):
        arr = np.asarray(points, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValidationError(f"points must have shape (k, 2), got {arr.shape}")
        if source_width < 1 or source_height < 1:
            raise ValidationError("source dimensions must be positive")
        if len(arr):
            xs, ys = arr[:, 0], arr[:, 1]
            if xs.min() < 0 or ys.min() < 0 or xs.max() >= source_width or ys.max() >= source_height:
                raise ValidationError("contour point outside source bounds")
            if len(np.unique(arr, axis=0)) != len(arr):
                raise ValidationError("contour points must be unique")
        arr = arr.copy()
        arr.setflags(write=False)
        self._points = arr
        self.source_width = int(source_width)
        self.source_height = int(source_height)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self):
        return len(self._points)

    def __iter__(self):
        return (tuple(map(int, p)) for p in self._points)

    def as_set(self) -> set[tuple[int, int]]:
        return set(iter(self))

    def is_empty(self) -> bool:
        return len(self._points) == 0

    def translated(self, dx: int, dy: int, width: int | None = None, height: int | None = None):
        """Shift every point by ``(dx, dy)``, optionally onto a new canvas size."""
        return ContourPointSet(
            self._points + np.array([dx, dy], dtype=np.int64),
            width if width is not None else self.source_width,
            height if height is not None else self.source_height,
        )

    def __repr__(self):
        return f"ContourPointSet({len(self)} points, {self.source_width}x{self.source_height})"


@dataclass(frozen=True)
class OverlapResult:
    intersection: int
    union: int
    size_a: int
    size_b: int
    dice: float
    iou: float


def _png_rows_to_gray(rows: Iterable, width: int, info: dict) -> np.ndarray:
    planes = info["planes"]
    bitdepth = info["bitdepth"]
    arr = np.array([np.asarray(r) for r in rows], dtype=np.uint32)
    arr = arr.reshape(-1, width, planes)
    if bitdepth == 16:
        arr = arr >> 8
    if info["greyscale"]:
        return arr[:, :, 0]
    rgb = arr[:, :, :3]
    return (rgb[:, :, 0] + rgb[:, :, 1] + rgb[:, :, 2]) // 3


def load_mask(png_bytes: bytes) -> BinaryMask:
    """Decode a PNG into a mask.

    A pixel is foreground when its 8-bit luminance exceeds 127. Colour pixels
    use the integer mean of R, G and B; 16-bit samples are reduced to their
    high byte first. Alpha is ignored.

    Raises:
        DecodeError: the bytes are not a well-formed PNG.
        UnsupportedFormat: palette images or bit depths other than 8 and 16.
    """
    try:
        reader = png.Reader(bytes=bytes(png_bytes))
        width, height, rows, info = reader.read()
    except (png.Error, zlib.error, ValueError, EOFError) as exc:
        raise DecodeError(f"malformed PNG: {exc}") from exc
    if "palette" in info:
        raise UnsupportedFormat("palette PNGs are not supported")
    if info["bitdepth"] not in (8, 16):
        raise UnsupportedFormat(f"unsupported bit depth {info['bitdepth']}")
    try:
        gray = _png_rows_to_gray(rows, width, info)
    except (png.Error, zlib.error, ValueError, EOFError) as exc:
        raise DecodeError(f"malformed PNG data: {exc}") from exc
    if gray.shape != (height, width):
        raise DecodeError(f"decoded {gray.shape}, header says {(height, width)}")
    return BinaryMask(gray > FOREGROUND_THRESHOLD)


def load_mask_file(path) -> BinaryMask:
    with open(path, "rb") as fh:
        return load_mask(fh.read())


def encode_mask_png(mask: BinaryMask) -> bytes:
    """8-bit grayscale PNG with foreground 255, background 0."""
    buf = io.BytesIO()
    writer = png.Writer(mask.width, mask.height, greyscale=True, bitdepth=8)
    writer.write(buf, (mask.data.astype(np.uint8) * 255).tolist())
    return buf.getvalue()


def extract_contour(mask: BinaryMask) -> ContourPointSet:
    """Inner boundary under 4-connectivity.

    A foreground pixel is on the contour when any of its up/down/left/right
    neighbours is background or lies outside the image. Points come back in
    row-major order.
    """
    m = mask.data
    padded = np.pad(m, 1, mode="constant", constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    boundary = m & ~interior
    ys, xs = np.nonzero(boundary)  # row-major already
    return ContourPointSet(np.column_stack([xs, ys]), mask.width, mask.height)


def overlap(a: BinaryMask, b: BinaryMask) -> OverlapResult:
    """Exact pixel-count overlap of two equally sized masks.

    Two empty masks count as perfect agreement (dice = iou = 1).
    """
    if a.shape != b.shape:
        raise DimensionMismatch(
            f"mask sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    inter = int(np.count_nonzero(a.data & b.data))
    size_a = a.foreground_count()
    size_b = b.foreground_count()
    union = size_a + size_b - inter
    if union == 0:
        return OverlapResult(0, 0, 0, 0, 1.0, 1.0)
    return OverlapResult(
        intersection=inter,
        union=union,
        size_a=size_a,
        size_b=size_b,
        dice=2.0 * inter / (size_a + size_b),
        iou=inter / union,
    )


def mean_overlap(pairs: Sequence[tuple[BinaryMask, BinaryMask]]) -> tuple[float, float]:
    """Per-pair mean Dice and mean IoU, summed left to right."""
    if len(pairs) == 0:
        raise EmptyInput("mean_overlap needs at least one pair")
    dice_sum = 0.0
    iou_sum = 0.0
    for i, (a, b) in enumerate(pairs):
        try:
            res = overlap(a, b)
        except DimensionMismatch as exc:
            raise DimensionMismatch(f"pair {i}: {exc}") from exc
        dice_sum += res.dice
        iou_sum += res.iou
    return dice_sum / len(pairs), iou_sum / len(pairs)
