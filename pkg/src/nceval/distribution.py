"""Fréchet distance between Gaussian fits of embedding sets, and cosine scores.

Feature extraction is not done here. Embeddings arrive precomputed (CSV or the
``EMB1`` binary format); :func:`naive_embed` exists only so pipelines can be
exercised without a neural network and its values are not comparable with
Inception-based FID numbers.
"""

from __future__ import annotations

import csv
import io
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DecodeError,
    DimensionMismatch,
    EmptyInput,
    FileError,
    IndefiniteMatrix,
    NonFiniteInput,
    NotSymmetric,
    NumericalError,
    ValidationError,
    ZeroVector,
)

__all__ = [
    "MetricWarning",
    "EmbeddingSet",
    "GaussianStats",
    "FrechetResult",
    "fit_gaussian",
    "sqrtm_psd",
    "frechet_distance",
    "cvc_result",
    "cvc_score",
    "mean_cosine_similarity",
    "load_embeddings",
    "read_embeddings",
    "encode_embeddings_binary",
    "naive_embed",
]

EMB_MAGIC = b"EMB1"
SYMMETRY_TOL = 1e-8
NEGATIVE_EIG_TOL = 1e-8
NEGATIVE_FID_TOL = 1e-8


class MetricWarning(UserWarning):
    """Recoverable condition worth surfacing in a report."""


class EmbeddingSet:
    """``n x d`` matrix of finite feature vectors, stored as float64."""

    __slots__ = ("_rows",)

    def __init__(self, rows):
        arr = np.array(rows, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"embeddings must be a non-empty n x d matrix, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteInput("embeddings contain NaN or infinity")
        arr.setflags(write=False)
        self._rows = arr

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def n(self) -> int:
        return self._rows.shape[0]

    @property
    def d(self) -> int:
        return self._rows.shape[1]

    def __repr__(self):
        return f"EmbeddingSet(n={self.n}, d={self.d})"


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n_samples: int = 0

    @property
    def d(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class FrechetResult:
    fid: float
    mean_term: float
    trace_term: float
    regularization_applied: bool


def fit_gaussian(e: EmbeddingSet) -> GaussianStats:
    """Column means and unbiased (n - 1) covariance, symmetrised.

    A single sample gives a zero covariance and a :class:`MetricWarning`.
    """
    if not isinstance(e, EmbeddingSet):
        e = EmbeddingSet(e)
    x = e.rows
    mean = x.mean(axis=0)
    if e.n < 2:
        warnings.warn("one sample only; covariance set to zero", MetricWarning, stacklevel=2)
        cov = np.zeros((e.d, e.d))
    else:
        centered = x - mean
        cov = centered.T @ centered / (e.n - 1)
        cov = (cov + cov.T) / 2.0
    return GaussianStats(mean, cov, e.n)


def sqrtm_psd(m, tol: float = NEGATIVE_EIG_TOL) -> np.ndarray:
    """Principal square root of a symmetric positive semidefinite matrix.

    Uses ``V diag(sqrt(lam)) V^T`` from a symmetric eigendecomposition.
    Eigenvalues in ``[-tol, 0)`` are treated as zero.

    Raises:
        NotSymmetric: ``max |m - m^T| > 1e-8``.
        IndefiniteMatrix: an eigenvalue is below ``-tol``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NonFiniteInput("matrix contains NaN or infinity")
    asym = np.abs(m - m.T).max() if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"matrix asymmetry {asym:.3g} exceeds {SYMMETRY_TOL}")
    lam, vec = np.linalg.eigh((m + m.T) / 2.0)
    if lam.size and lam.min() < -tol:
        raise IndefiniteMatrix(f"eigenvalue {lam.min():.3g} < -{tol:g}")
    root = np.sqrt(np.clip(lam, 0.0, None))
    return (vec * root) @ vec.T


def _min_eig(c: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(c).min())


def frechet_distance(g1: GaussianStats, g2: GaussianStats, epsilon: float = 1e-6) -> FrechetResult:
    """Squared Fréchet (2-Wasserstein) distance between two Gaussians.

    ``||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2))``, with the cross term
    evaluated as ``Tr(sqrt(S1^(1/2) S2 S1^(1/2)))`` so only symmetric square
    roots are needed. When either covariance has an eigenvalue below
    ``epsilon``, ``epsilon * I`` is added to both.
    """
    if g1.d != g2.d:
        raise DimensionMismatch(f"feature dimensions differ: {g1.d} vs {g2.d}")
    s1 = np.asarray(g1.cov, dtype=np.float64)
    s2 = np.asarray(g2.cov, dtype=np.float64)
    regularized = False
    if _min_eig(s1) < epsilon or _min_eig(s2) < epsilon:
        eye = np.eye(g1.d)
        s1 = s1 + epsilon * eye
        s2 = s2 + epsilon * eye
        regularized = True

    diff = np.asarray(g1.mean, dtype=np.float64) - np.asarray(g2.mean, dtype=np.float64)
    mean_term = float(diff @ diff)

    root1 = sqrtm_psd(s1, tol=NEGATIVE_EIG_TOL * max(1.0, float(np.abs(s1).max())))
    inner = root1 @ s2 @ root1
    inner = (inner + inner.T) / 2.0
    scale = max(1.0, float(np.abs(inner).max()))
    cross = float(np.trace(sqrtm_psd(inner, tol=NEGATIVE_EIG_TOL * scale)))
    trace_term = float(np.trace(s1) + np.trace(s2) - 2.0 * cross)

    if trace_term < 0.0:
        if trace_term < -NEGATIVE_FID_TOL * max(1.0, float(np.trace(s1) + np.trace(s2))):
            raise NumericalError(f"negative covariance term {trace_term:.3g}")
        trace_term = 0.0
    return FrechetResult(mean_term + trace_term, mean_term, trace_term, regularized)


def _as_set(e) -> EmbeddingSet:
    return e if isinstance(e, EmbeddingSet) else EmbeddingSet(e)


def cvc_result(gen, ref, epsilon: float = 1e-6) -> FrechetResult:
    """Fréchet result for generated vs reference character embeddings."""
    gen = _as_set(gen)
    ref = _as_set(ref)
    if gen.d != ref.d:
        raise DimensionMismatch(f"feature dimensions differ: {gen.d} vs {ref.d}")
    for label, e in (("generated", gen), ("reference", ref)):
        if e.n < e.d:
            warnings.warn(
                f"{label} embeddings have n={e.n} < d={e.d}; covariance is rank-deficient "
                "and will be regularized",
                MetricWarning,
                stacklevel=2,
            )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MetricWarning)
        g1, g2 = fit_gaussian(gen), fit_gaussian(ref)
    res = frechet_distance(g1, g2, epsilon)
    if res.regularization_applied:
        warnings.warn(
            f"near-singular covariance; added {epsilon:g}*I to both", MetricWarning, stacklevel=2
        )
    return res


def cvc_score(gen, ref, epsilon: float = 1e-6) -> float:
    return cvc_result(gen, ref, epsilon).fid


def mean_cosine_similarity(pairs: Sequence[tuple[Sequence[float], Sequence[float]]]) -> float:
    """Average cosine similarity over vector pairs (CLIP-I / CLIP-T style scores)."""
    if len(pairs) == 0:
        raise EmptyInput("no pairs given")
    total = 0.0
    for i, (a, b) in enumerate(pairs):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1:
            raise DimensionMismatch(f"pair {i}: shapes {a.shape} and {b.shape}")
        na = float(np.linalg.norm(a))
        nb = float(np.linalg.norm(b))
        if na == 0.0 or nb == 0.0:
            raise ZeroVector(f"pair {i} contains a zero vector", index=i)
        total += float(a @ b) / (na * nb)
    return total / len(pairs)


def _parse_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DecodeError("embedding CSV is empty")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]  # header line
    if not rows:
        raise DecodeError("embedding CSV has a header but no data")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=np.float64)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DecodeError(f"CSV row {i} has {len(r)} fields, expected {width}")
        try:
            out[i] = [float(c) for c in r]
        except ValueError as exc:
            raise DecodeError(f"CSV row {i}: {exc}") from exc
    return out


def _parse_binary(data: bytes) -> np.ndarray:
    if len(data) < 12:
        raise DecodeError("binary embedding file shorter than its header")
    n, d = struct.unpack_from("<II", data, 4)
    expected = 12 + 4 * n * d
    if len(data) != expected:
        raise DecodeError(f"binary embedding file is {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype="<f4", offset=12).astype(np.float64).reshape(n, d)


def read_embeddings(data: bytes) -> EmbeddingSet:
    """Parse ``EMB1`` binary (sniffed by magic bytes) or CSV embedding data."""
    if data[:4] == EMB_MAGIC:
        return EmbeddingSet(_parse_binary(data))
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DecodeError("embedding file is neither EMB1 binary nor UTF-8 CSV") from exc
    return EmbeddingSet(_parse_csv(text))


def load_embeddings(path) -> EmbeddingSet:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FileError(f"cannot read embeddings: {exc.strerror}", path=str(path)) from exc
    return read_embeddings(data)


def encode_embeddings_binary(rows) -> bytes:
    arr = np.asarray(rows, dtype="<f4")
    if arr.ndim != 2:
        raise ValidationError("expected an n x d matrix")
    n, d = arr.shape
    return EMB_MAGIC + struct.pack("<II", n, d) + arr.tobytes(order="C")


def _bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape
    # half-pixel centres, edges clamped
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def naive_embed(image, mask, size: int = 8) -> np.ndarray:
    """Deterministic stand-in embedder for hermetic tests.

    Converts ``image`` to grayscale, zeroes pixels outside ``mask``, crops to
    the mask's bounding box and bilinearly downsamples to ``size x size``,
    returning the flattened vector (length 64 by default).
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3:
        img = img[:, :, :3].mean(axis=2)
    m = mask.data if hasattr(mask, "data") else np.asarray(mask, dtype=bool)
    if img.shape != m.shape:
        raise DimensionMismatch(f"image {img.shape} and mask {m.shape} differ")
    ys, xs = np.nonzero(m)
    if len(ys) == 0:
        raise EmptyInput("mask has no foreground to embed")
    crop = (img * m)[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
    return _bilinear_resize(crop, size, size).reshape(-1)
