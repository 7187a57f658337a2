"""Stand-in for the content generation stage.

The receiver-side generator is replaced by the codec round trip: quality
compares what is reconstructible from full-resolution semantics against
what is reconstructible from downscaled semantics, optionally perturbed
by seeded generation noise.  When real generated images are available
offline, the ExternalPairs backend scores those instead, loading
"{image-id}_d{factor}.pgm" files from a directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import decode, encode
from .errors import DomainError, MissingMapError, ValidationFailedError
from .extractors import ExtractorKind, extract
from .image import SemanticMap, read_pgm, restore_kind
from .metrics import MetricKind, score


@dataclass(frozen=True)
class ServiceSpec:
    """One content service: what it extracts, how it scores, what it requires."""

    id: str
    extractor: ExtractorKind
    metric: MetricKind
    threshold: float = 0.0
    weight: float = 1.0
    sigma_gen: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.weight <= 0.0:
            raise DomainError(f"weight must be positive, got {self.weight}")
        if self.sigma_gen < 0.0:
            raise DomainError(f"generation noise must be >= 0, got {self.sigma_gen}")


@dataclass(frozen=True)
class Surrogate:
    """Reconstruct through the downscale codec round trip."""


@dataclass(frozen=True)
class ExternalPairs:
    """Score externally generated image pairs from ``directory``."""

    directory: str


GenerationBackend = Surrogate | ExternalPairs


def _external_pair(directory: str, image_id: str, d: int) -> tuple[SemanticMap, SemanticMap]:
    ref_path = os.path.join(directory, f"{image_id}_d1.pgm")
    rec_path = os.path.join(directory, f"{image_id}_d{d}.pgm")
    for path in (ref_path, rec_path):
        if not os.path.exists(path):
            raise MissingMapError(f"external generation pair file not found: {path}")
    return read_pgm(ref_path), read_pgm(rec_path)


def score_semantic(svc: ServiceSpec, semantic: SemanticMap, d: int, rng: np.random.Generator) -> float:
    """Codec round trip on an already-extracted map, plus generation noise.

    The reference is the factor-1 round trip of the same map, mirroring
    the external-pairs convention where "{id}_d1.pgm" is the baseline:
    quality compares content deliverable from original semantics against
    content deliverable from downscaled semantics, so without generation
    noise the factor-1 score is exactly 1 for every metric.
    """
    reference = decode(encode(semantic, 1))
    recon = reference if d == 1 else decode(encode(semantic, d))
    if svc.sigma_gen > 0.0:
        noisy = np.clip(recon.pixels + rng.normal(0.0, svc.sigma_gen, recon.pixels.shape), 0.0, 1.0)
        recon = restore_kind(noisy, recon.kind, recon.levels)
    return score(svc.metric, reference, recon)


def reconstruct_and_score(
    svc: ServiceSpec,
    source: SemanticMap,
    d: int,
    backend: GenerationBackend,
    rng: np.random.Generator,
    image_id: str | None = None,
) -> float:
    """Quality of the service's content when its semantics travel at factor d."""
    if d < 1:
        raise DomainError(f"downscale factor must be >= 1, got {d}")
    if isinstance(backend, ExternalPairs):
        ref, rec = _external_pair(backend.directory, image_id or svc.id, d)
        return score(svc.metric, ref, rec)
    semantic = extract(svc.extractor, source, image_id=image_id or svc.id)
    return score_semantic(svc, semantic, d, rng)


@dataclass(frozen=True)
class ValidationResult:
    accepted_d: int
    quality: float


def validate_and_adjust(
    svc: ServiceSpec,
    source: SemanticMap,
    d_requested: int,
    factors: Sequence[int],
    backend: GenerationBackend,
    rng: np.random.Generator,
    image_id: str | None = None,
) -> ValidationResult:
    """Step the factor down until the service's quality threshold is met.

    Starts at d_requested and retries at the next smaller admissible
    factor whenever quality falls below the threshold.  Raises
    ValidationFailedError (carrying the last score) when even the
    smallest factor cannot satisfy the service.
    """
    ordered = sorted(factors)
    if d_requested not in ordered:
        raise DomainError(f"requested factor {d_requested} not in admissible set {ordered}")
    quality = None
    for d in reversed(ordered[: ordered.index(d_requested) + 1]):
        quality = reconstruct_and_score(svc, source, d, backend, rng, image_id=image_id)
        if quality >= svc.threshold:
            return ValidationResult(accepted_d=d, quality=quality)
    raise ValidationFailedError(
        f"service {svc.id}: even factor {ordered[0]} scores {quality:.6f} < threshold {svc.threshold}",
        quality=quality,
    )


def min_representation_search(
    svc: ServiceSpec,
    source: SemanticMap,
    factors: Sequence[int],
    backend: GenerationBackend,
    rng: np.random.Generator,
    image_id: str | None = None,
) -> int:
    """Largest admissible factor whose quality still meets the threshold.

    Scans descending because quality need not be monotone in the factor;
    the first qualifying factor in the scan is by construction the
    maximum one.
    """
    if not factors:
        raise DomainError("factor set must be non-empty")
    best_quality = None
    for d in sorted(factors, reverse=True):
        quality = reconstruct_and_score(svc, source, d, backend, rng, image_id=image_id)
        if quality >= svc.threshold:
            return d
        best_quality = quality if best_quality is None else max(best_quality, quality)
    raise ValidationFailedError(
        f"service {svc.id}: no factor in {sorted(factors)} reaches threshold {svc.threshold}",
        quality=best_quality,
    )
