"""Find extractor-metric pairs whose quality responds predictably to downscaling.

A candidate pair is swept over a factor set to get its mean quality curve,
then scored by how well an ordinary least-squares line explains that
curve.  The most predictable pair is the one with the highest R squared;
ties fall back to the larger absolute Spearman rank correlation, then to
the lexicographically smallest pair name.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .errors import DomainError
from .extractors import ExtractorKind, extractor_label
from .generation import GenerationBackend, ServiceSpec, reconstruct_and_score
from .image import SemanticMap
from .metrics import MetricKind, metric_label


@dataclass(frozen=True)
class ResponseCurve:
    """Mean quality at each admissible downscaling factor."""

    factors: tuple[int, ...]
    qualities: tuple[float, ...]
    extractor: ExtractorKind | None = None
    metric: MetricKind | None = None

    def __post_init__(self):
        if len(self.factors) != len(self.qualities) or len(self.factors) < 3:
            raise DomainError("curve needs matching factor/quality lists of length >= 3")
        if any(b <= a for a, b in zip(self.factors, self.factors[1:])):
            raise DomainError(f"factors must be strictly increasing, got {self.factors}")
        if any(not 0.0 <= q <= 1.0 for q in self.qualities):
            raise DomainError("qualities must lie in [0, 1]")


@dataclass(frozen=True)
class PredictabilityReport:
    extractor: ExtractorKind | None
    metric: MetricKind | None
    r_squared: float
    slope: float
    spearman: float

    @property
    def pair_label(self) -> str:
        ext = extractor_label(self.extractor) if self.extractor is not None else "?"
        met = metric_label(self.metric) if self.metric is not None else "?"
        return f"{ext}+{met}"


@dataclass(frozen=True)
class MetricFixed:
    metric: MetricKind


@dataclass(frozen=True)
class ExtractorFixed:
    extractor: ExtractorKind


@dataclass(frozen=True)
class BothFixed:
    extractor: ExtractorKind
    metric: MetricKind


@dataclass(frozen=True)
class Free:
    pass


SelectionMode = MetricFixed | ExtractorFixed | BothFixed | Free


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares (slope, r_squared) of y on x; r_squared is 0 when y is flat."""
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.sum(xc * xc))
    slope = float(np.sum(xc * yc)) / sxx
    intercept = float(y.mean()) - slope * float(x.mean())
    residuals = y - (intercept + slope * x)
    ss_res = float(np.sum(residuals * residuals))
    ss_tot = float(np.sum(yc * yc))
    if ss_tot == 0.0:
        return slope, 0.0
    return slope, min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)


def _ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties given their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Rank correlation; 0 by convention when either side is constant."""
    rx = _ranks(x)
    ry = _ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = float(np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    if denom == 0.0:
        return 0.0
    return min(max(float(np.sum(dx * dy)) / denom, -1.0), 1.0)


def sweep_curve(
    extractor: ExtractorKind,
    metric: MetricKind,
    images: Sequence[SemanticMap],
    factors: Sequence[int],
    backend: GenerationBackend,
    rng: np.random.Generator,
    sigma_gen: float = 0.0,
    image_ids: Sequence[str] | None = None,
) -> ResponseCurve:
    """Mean quality over the corpus at every factor for one candidate pair."""
    if not images:
        raise DomainError("corpus must be non-empty")
    if len(factors) < 3:
        raise DomainError(f"need at least 3 factors, got {list(factors)}")
    ids = list(image_ids) if image_ids is not None else [f"img{i}" for i in range(len(images))]
    streams = rng.spawn(len(images))
    qualities = []
    for d in sorted(factors):
        total = 0.0
        for img, img_id, sub in zip(images, ids, streams):
            svc = ServiceSpec(id=img_id, extractor=extractor, metric=metric, sigma_gen=sigma_gen)
            total += reconstruct_and_score(svc, img, d, backend, sub, image_id=img_id)
        qualities.append(total / len(images))
    return ResponseCurve(
        factors=tuple(sorted(factors)),
        qualities=tuple(qualities),
        extractor=extractor,
        metric=metric,
    )


def fit_predictability(curve: ResponseCurve) -> PredictabilityReport:
    """Score a quality curve by the linearity of its response to the factor."""
    x = np.asarray(curve.factors, dtype=float)
    y = np.asarray(curve.qualities, dtype=float)
    slope, r_squared = _ols(x, y)
    return PredictabilityReport(
        extractor=curve.extractor,
        metric=curve.metric,
        r_squared=r_squared,
        slope=slope,
        spearman=_spearman(x, y),
    )


def candidate_pairs(
    mode: SelectionMode,
    extractors: Sequence[ExtractorKind],
    metrics: Sequence[MetricKind],
) -> list[tuple[ExtractorKind, MetricKind]]:
    """Admissible (extractor, metric) pairs for a selection mode."""
    if isinstance(mode, BothFixed):
        return [(mode.extractor, mode.metric)]
    if isinstance(mode, MetricFixed):
        pairs = [(e, mode.metric) for e in extractors]
    elif isinstance(mode, ExtractorFixed):
        pairs = [(mode.extractor, m) for m in metrics]
    elif isinstance(mode, Free):
        pairs = list(product(extractors, metrics))
    else:
        raise DomainError(f"unknown selection mode {mode!r}")
    if not pairs:
        raise DomainError("candidate set is empty for the free dimension")
    return pairs


def evaluate_candidates(
    pairs: Sequence[tuple[ExtractorKind, MetricKind]],
    images: Sequence[SemanticMap],
    factors: Sequence[int],
    backend: GenerationBackend,
    rng: np.random.Generator,
    sigma_gen: float = 0.0,
    image_ids: Sequence[str] | None = None,
) -> list[PredictabilityReport]:
    """Fit every candidate pair; each gets its own derived random stream."""
    streams = rng.spawn(len(pairs))
    reports = []
    for (extractor, metric), sub in zip(pairs, streams):
        curve = sweep_curve(extractor, metric, images, factors, backend, sub, sigma_gen, image_ids)
        reports.append(fit_predictability(curve))
    return reports


def select_pair(
    mode: SelectionMode,
    extractors: Sequence[ExtractorKind],
    metrics: Sequence[MetricKind],
    images: Sequence[SemanticMap],
    factors: Sequence[int],
    backend: GenerationBackend,
    rng: np.random.Generator,
    sigma_gen: float = 0.0,
    image_ids: Sequence[str] | None = None,
) -> PredictabilityReport:
    """Most predictable admissible pair for the mode's service archetype."""
    pairs = candidate_pairs(mode, extractors, metrics)
    reports = evaluate_candidates(pairs, images, factors, backend, rng, sigma_gen, image_ids)
    return min(reports, key=lambda r: (-r.r_squared, -abs(r.spearman), r.pair_label))
