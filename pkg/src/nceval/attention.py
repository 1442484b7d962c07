"""Mask-guided cross-attention arithmetic on dense pixel-by-word arrays.

Reference (non-neural) implementations of the region loss that compares a
cross-attention map against character masks, and of the constant target map
built from a zero map by addition and multiplication only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, ShapeMismatch, ValidationError

__all__ = [
    "DEFAULT_LAMBDA",
    "AttentionMap",
    "RegionSpec",
    "ConstantMapParams",
    "mask_attention_loss",
    "build_constant_map",
]

DEFAULT_LAMBDA = 0.5


class AttentionMap:
    """``P x W`` nonnegative map; row ``p`` is a pixel, column ``w`` a prompt word."""

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"attention map must be a non-empty P x W matrix, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("attention map contains NaN or infinity")
        if (arr < 0).any():
            raise ValidationError("attention map entries must be >= 0")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def pixels(self) -> int:
        return self._values.shape[0]

    @property
    def words(self) -> int:
        return self._values.shape[1]

    def __add__(self, other):
        return AttentionMap(self._values + other._values)

    def __mul__(self, c):
        return AttentionMap(self._values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class RegionSpec:
    """Per character ``i``: its word indices ``C_i`` and target pixels ``S_i``.

    The complement pixels are implied by the map's pixel count.
    """

    character_word_indices: tuple[tuple[int, ...], ...]
    target_pixels: tuple[frozenset[int], ...]

    def __post_init__(self):
        words = tuple(tuple(sorted(set(int(w) for w in c))) for c in self.character_word_indices)
        pixels = tuple(frozenset(int(p) for p in s) for s in self.target_pixels)
        if len(words) != len(pixels):
            raise ValidationError(
                f"{len(words)} word sets but {len(pixels)} pixel sets; need one of each per character"
            )
        object.__setattr__(self, "character_word_indices", words)
        object.__setattr__(self, "target_pixels", pixels)

    @classmethod
    def from_masks(cls, word_indices: Sequence[Sequence[int]], masks: Sequence) -> "RegionSpec":
        """Build from per-character binary masks flattened row-major."""
        pixel_sets = [frozenset(np.flatnonzero(m.flat()).tolist()) for m in masks]
        return cls(tuple(tuple(w) for w in word_indices), tuple(pixel_sets))

    def validate(self, pixels: int, words: int) -> None:
        for i, (c, s) in enumerate(zip(self.character_word_indices, self.target_pixels)):
            bad_w = [w for w in c if not 0 <= w < words]
            if bad_w:
                raise IndexOutOfRange(f"character {i}: word index {bad_w[0]} outside [0, {words})")
            bad_p = [p for p in s if not 0 <= p < pixels]
            if bad_p:
                raise IndexOutOfRange(f"character {i}: pixel index {min(bad_p)} outside [0, {pixels})")


def mask_attention_loss(m: AttentionMap, r: RegionSpec, lam: float = DEFAULT_LAMBDA) -> float:
    """Region loss of an attention map.

    ``sum_i sum_{w in C_i} sum_{p in S_i} M[p, w]``
    ``+ lam * sum_i sum_{w in C_i} sum_{p not in S_i} M[p, w]``

    The loss is left unnormalised by region size. Overlapping characters
    contribute additively. Both sums are correctly rounded (``math.fsum``),
    so the result is independent of summation order and linear in ``m`` to
    within a few ulps even for large maps.
    """
    if not isinstance(m, AttentionMap):
        m = AttentionMap(m)
    lam = float(lam)
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")
    r.validate(m.pixels, m.words)
    vals = m.values
    inside = []
    outside = []
    for words, target in zip(r.character_word_indices, r.target_pixels):
        if not words:
            continue
        sel = np.zeros(m.pixels, dtype=bool)
        sel[list(target)] = True
        block = vals[:, list(words)]
        inside.append(block[sel].ravel())
        outside.append(block[~sel].ravel())
    total_in = math.fsum(np.concatenate(inside)) if inside else 0.0
    total_out = math.fsum(np.concatenate(outside)) if outside else 0.0
    return total_in + lam * total_out


@dataclass(frozen=True)
class ConstantMapParams:
    word_count_sum: int
    mask: object  # BinaryMask, or a real-valued array with entries in [0, 1]

    def __post_init__(self):
        if int(self.word_count_sum) != self.word_count_sum or self.word_count_sum < 1:
            raise ValidationError(f"word_count_sum must be a positive integer, got {self.word_count_sum}")

    def mask_vector(self) -> np.ndarray:
        mask = self.mask
        if hasattr(mask, "flat") and callable(mask.flat):
            vec = mask.flat().astype(np.float64)
        else:
            vec = np.asarray(mask, dtype=np.float64).reshape(-1)
        if not np.isfinite(vec).all() or (vec < 0).any() or (vec > 1).any():
            raise ValidationError("relaxed mask values must lie in [0, 1]")
        return vec


def build_constant_map(zero_base, params: ConstantMapParams, word_indices) -> AttentionMap:
    """Target map ``Z + mask * (1 / sum)`` restricted to ``word_indices``.

    Built purely from addition and multiplication (no indexed assignment), so
    the same expression is differentiable in a relaxed real-valued mask.
    """
    z = np.asarray(zero_base, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeMismatch(f"zero base must be P x W, got shape {z.shape}")
    if np.any(z != 0):
        raise ValidationError("zero base map must be all zeros")
    n_pixels, n_words = z.shape
    mask = params.mask_vector()
    if mask.shape[0] != n_pixels:
        raise ShapeMismatch(f"mask has {mask.shape[0]} pixels, map has {n_pixels}")
    word_sel = np.zeros(n_words)
    for w in word_indices:
        if not 0 <= int(w) < n_words:
            raise IndexOutOfRange(f"word index {w} outside [0, {n_words})")
        word_sel = word_sel + (np.arange(n_words) == int(w))
    word_sel = np.minimum(word_sel, 1.0)
    scale = 1.0 / params.word_count_sum
    return AttentionMap(z + mask[:, None] * word_sel[None, :] * scale)
