"""Manifest-driven evaluation of one model's generated characters."""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .distribution import MetricWarning, cvc_result, load_embeddings
from .errors import (
    DimensionMismatch,
    EmptyInput,
    EvaluationError,
    FileError,
    ManifestParseError,
    MetricError,
    ValidationError,
)
from .masks import BinaryMask, extract_contour, load_mask, overlap
from .scoring import OverallScore, RawMetricVector, aggregate_overall
from .surface import surface_distances

__all__ = [
    "PairSpec",
    "EvaluationManifest",
    "EvalOptions",
    "PairResult",
    "MetricReport",
    "parse_manifest",
    "load_manifest",
    "run_evaluation",
    "report_from_raw",
    "compare_models",
]

FLAG_EMPTY_CONTOUR = "empty_contour"
FLAG_BOTH_EMPTY = "both_masks_empty"


@dataclass(frozen=True)
class PairSpec:
    id: str
    generated_mask: Path
    reference_mask: Path


@dataclass(frozen=True)
class CvcSpec:
    generated_embeddings: Path
    reference_embeddings: Path


@dataclass(frozen=True)
class EvaluationManifest:
    model_name: str
    pairs: tuple[PairSpec, ...] = ()
    cvc: CvcSpec | None = None
    human_scores: Any = None


@dataclass(frozen=True)
class EvalOptions:
    skip_empty: bool = False
    epsilon: float = 1e-6
    normalize_distances: bool = False
    jobs: int = 1  # not echoed: output must not depend on parallelism

    def echo(self) -> dict:
        return {
            "skip_empty": self.skip_empty,
            "epsilon": self.epsilon,
            "normalize_distances": self.normalize_distances,
        }


@dataclass
class PairResult:
    id: str
    dice: float | None = None
    iou: float | None = None
    hausdorff: float | None = None
    modified_hausdorff: float | None = None
    asd: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def excluded(self) -> bool:
        return FLAG_EMPTY_CONTOUR in self.flags

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "dice": self.dice,
            "iou": self.iou,
            "hausdorff": self.hausdorff,
            "modified_hausdorff": self.modified_hausdorff,
            "asd": self.asd,
            "flags": list(self.flags),
        }


@dataclass
class MetricReport:
    model_name: str
    per_pair: list[PairResult]
    dataset: RawMetricVector
    overall: OverallScore | None
    warnings: list[str]
    tool_version: str = __version__
    config_echo: dict = field(default_factory=dict)
    human_scores: Any = None
    cvc_regularized: bool | None = None

    def to_dict(self) -> dict:
        out = {
            "model_name": self.model_name,
            "tool_version": self.tool_version,
            "config_echo": dict(self.config_echo),
            "dataset": self.dataset.to_dict(),
            "overall": None if self.overall is None else self.overall.to_dict(),
            "cvc_regularized": self.cvc_regularized,
            "per_pair": [p.to_dict() for p in self.per_pair],
            "warnings": list(self.warnings),
        }
        if self.human_scores is not None:
            out["human_scores"] = self.human_scores
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        try:
            dataset = RawMetricVector(**d["dataset"])
            overall = None
            if d.get("overall") is not None:
                o = d["overall"]
                overall = OverallScore(dict(o["transformed"]), dict(o["retained"]), float(o["overall"]))
            per_pair = [PairResult(**p) for p in d.get("per_pair", [])]
            return cls(
                model_name=d["model_name"],
                per_pair=per_pair,
                dataset=dataset,
                overall=overall,
                warnings=list(d.get("warnings", [])),
                tool_version=d.get("tool_version", ""),
                config_echo=dict(d.get("config_echo", {})),
                human_scores=d.get("human_scores"),
                cvc_regularized=d.get("cvc_regularized"),
            )
        except (KeyError, TypeError) as exc:
            raise ManifestParseError(f"not a metric report: {exc}") from exc


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise ManifestParseError(f"{where}: missing '{key}'")
    if not isinstance(obj[key], kind):
        raise ManifestParseError(f"{where}: '{key}' must be {getattr(kind, '__name__', kind)}")
    return obj[key]


def parse_manifest(obj: Any, base_dir: Path | str = ".") -> EvaluationManifest:
    """Validate a decoded manifest. Relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    if not isinstance(obj, dict):
        raise ManifestParseError("manifest must be a JSON object")
    name = _require(obj, "model_name", str, "manifest")

    cvc = None
    if obj.get("cvc") is not None:
        c = obj["cvc"]
        if not isinstance(c, dict):
            raise ManifestParseError("manifest: 'cvc' must be an object")
        cvc = CvcSpec(
            base / _require(c, "generated_embeddings", str, "cvc"),
            base / _require(c, "reference_embeddings", str, "cvc"),
        )

    raw_pairs = obj.get("pairs", [])
    if not isinstance(raw_pairs, list):
        raise ManifestParseError("manifest: 'pairs' must be a list")
    pairs = []
    seen = set()
    for i, p in enumerate(raw_pairs):
        where = f"pairs[{i}]"
        if not isinstance(p, dict):
            raise ManifestParseError(f"{where} must be an object")
        pid = _require(p, "id", str, where)
        if pid in seen:
            raise ManifestParseError(f"duplicate pair id {pid!r}")
        seen.add(pid)
        pairs.append(PairSpec(
            pid,
            base / _require(p, "generated_mask", str, where),
            base / _require(p, "reference_mask", str, where),
        ))
    if cvc is None and not pairs:
        raise ManifestParseError("manifest needs 'cvc', 'pairs', or both")
    return EvaluationManifest(name, tuple(pairs), cvc, obj.get("human_scores"))


def load_manifest(path) -> EvaluationManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot read manifest: {exc.strerror}", path=str(path)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"{path}: invalid JSON: {exc}") from exc
    return parse_manifest(obj, path.parent)


def _read_mask(path: Path) -> BinaryMask:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FileError(f"cannot read mask: {exc.strerror}", path=str(path)) from exc
    return load_mask(data)


def _evaluate_pair(spec: PairSpec, opts: EvalOptions) -> PairResult:
    gen = _read_mask(spec.generated_mask)
    ref = _read_mask(spec.reference_mask)
    if gen.shape != ref.shape:
        raise DimensionMismatch(
            f"generated mask is {gen.width}x{gen.height}, reference is {ref.width}x{ref.height}"
        )
    res = PairResult(spec.id)
    ov = overlap(gen, ref)
    if ov.union == 0:
        res.flags.append(FLAG_BOTH_EMPTY)
    ca, cb = extract_contour(gen), extract_contour(ref)
    if ca.is_empty() or cb.is_empty():
        res.flags.append(FLAG_EMPTY_CONTOUR)
        return res
    res.dice, res.iou = ov.dice, ov.iou
    sd = surface_distances(ca, cb)
    scale = 1.0
    if opts.normalize_distances:
        scale = 1.0 / math.hypot(gen.width, gen.height)
    res.hausdorff = sd.hausdorff * scale
    res.modified_hausdorff = sd.modified_hausdorff * scale
    res.asd = sd.average_surface_distance * scale
    return res


def _safe_pair(spec: PairSpec, opts: EvalOptions):
    try:
        return _evaluate_pair(spec, opts), None
    except MetricError as exc:
        return None, exc


def _sequential_mean(values: list[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def run_evaluation(manifest: EvaluationManifest, options: EvalOptions | None = None) -> MetricReport:
    """Compute per-pair and dataset metrics for one manifest.

    Per-pair work may run on ``options.jobs`` threads; every reduction runs
    afterwards in manifest order, so the report does not depend on ``jobs``.
    Pairs whose masks produce an empty contour abort the run unless
    ``skip_empty`` is set, in which case they are flagged and excluded from
    all dataset means.
    """
    opts = options or EvalOptions()
    notes: list[str] = []

    if opts.jobs > 1 and len(manifest.pairs) > 1:
        with ThreadPoolExecutor(max_workers=opts.jobs) as pool:
            outcomes = list(pool.map(lambda s: _safe_pair(s, opts), manifest.pairs))
    else:
        outcomes = [_safe_pair(s, opts) for s in manifest.pairs]

    io_failures = {}
    failures = {}
    results: list[PairResult] = []
    for spec, (res, exc) in zip(manifest.pairs, outcomes):
        if exc is not None:
            (io_failures if isinstance(exc, FileError) else failures)[spec.id] = str(exc)
            continue
        if res.excluded and not opts.skip_empty:
            failures[spec.id] = "empty contour (rerun with skip_empty to exclude such pairs)"
            continue
        results.append(res)
    if io_failures:
        first = next(iter(io_failures.items()))
        raise FileError(
            f"{len(io_failures)} pair(s) had unreadable files; first: pair {first[0]}: {first[1]}"
        )
    if failures:
        raise EvaluationError(failures)

    for res in results:
        if FLAG_BOTH_EMPTY in res.flags:
            notes.append(f"pair {res.id}: both masks empty (dice = iou = 1 by convention)")
        if res.excluded:
            notes.append(f"pair {res.id}: empty contour; excluded from dataset means")

    cn = None
    regularized = None
    if manifest.cvc is not None:
        gen = load_embeddings(manifest.cvc.generated_embeddings)
        ref = load_embeddings(manifest.cvc.reference_embeddings)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", MetricWarning)
            fr = cvc_result(gen, ref, opts.epsilon)
        notes.extend(f"cvc: {w.message}" for w in caught if issubclass(w.category, MetricWarning))
        cn = fr.fid
        regularized = fr.regularization_applied
    else:
        notes.append("WARNING: no CVC embeddings given; CN absent and Overall omitted")

    kept = [r for r in results if not r.excluded]
    if manifest.pairs and not kept:
        notes.append("WARNING: no usable mask pairs; SNC/CFC absent and Overall omitted")
    if kept:
        dataset = RawMetricVector(
            cn=cn,
            sr=_sequential_mean([r.dice for r in kept]),
            la=_sequential_mean([r.iou for r in kept]),
            bdp=_sequential_mean([r.hausdorff for r in kept]),
            mc=_sequential_mean([r.modified_hausdorff for r in kept]),
            ads=_sequential_mean([r.asd for r in kept]),
        )
    else:
        dataset = RawMetricVector(cn=cn)
    overall = aggregate_overall(dataset) if dataset.complete else None
    return MetricReport(
        model_name=manifest.model_name,
        per_pair=results,
        dataset=dataset,
        overall=overall,
        warnings=notes,
        config_echo=opts.echo(),
        human_scores=manifest.human_scores,
        cvc_regularized=regularized,
    )


def report_from_raw(raw: dict, model_name: str | None = None) -> MetricReport:
    """Report built straight from dataset-level metric values (no masks needed)."""
    if not isinstance(raw, dict):
        raise ManifestParseError("raw metrics must be a JSON object")
    name = model_name or raw.get("model_name") or "unnamed"
    try:
        vec = RawMetricVector(**{k: raw.get(k) for k in RawMetricVector.FIELDS})
    except TypeError as exc:
        raise ValidationError(f"bad raw metrics: {exc}") from exc
    notes = []
    if vec.cn is None:
        notes.append("WARNING: CN absent; Overall omitted")
    overall = aggregate_overall(vec) if vec.complete else None
    if overall is None and vec.cn is not None:
        notes.append(f"WARNING: missing {', '.join(vec.missing())}; Overall omitted")
    return MetricReport(
        model_name=name,
        per_pair=[],
        dataset=vec,
        overall=overall,
        warnings=notes,
        config_echo={"from_raw": True},
        human_scores=raw.get("human_scores"),
    )


@dataclass(frozen=True)
class RankingRow:
    rank: int
    model_name: str
    overall: float | None
    dataset: RawMetricVector


def compare_models(reports: list[MetricReport]) -> list[RankingRow]:
    """Rank reports by Overall (descending), ties by model name.

    Reports without an Overall score are listed last.
    """
    if not reports:
        raise EmptyInput("compare_models needs at least one report")

    def key(r: MetricReport):
        if r.overall is None:
            return (1, 0.0, r.model_name)
        return (0, -r.overall.overall, r.model_name)

    ordered = sorted(reports, key=key)
    return [
        RankingRow(i + 1, r.model_name, None if r.overall is None else r.overall.overall, r.dataset)
        for i, r in enumerate(ordered)
    ]
