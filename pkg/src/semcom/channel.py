"""Budgeted, optionally noisy transport of encoded payloads.

The physical link is modeled as an i.i.d. binary symmetric channel on
payload bits plus a hard byte budget per allocation round.  Headers are
assumed error-free so a corrupted frame never turns into a parse failure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .codec import CostModel, EncodedPayload, cost_bytes
from .errors import DomainError


@dataclass(frozen=True)
class ChannelConfig:
    budget_bytes: int
    bit_flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.budget_bytes < 0:
            raise DomainError(f"budget must be >= 0, got {self.budget_bytes}")
        if not 0.0 <= self.bit_flip_prob <= 1.0:
            raise DomainError(f"bit flip probability must lie in [0, 1], got {self.bit_flip_prob}")


@dataclass(frozen=True, eq=False)
class TransmitResult:
    delivered: EncodedPayload
    bytes_used: int
    flipped_bits: int


@dataclass(frozen=True)
class BudgetCheck:
    feasible: bool
    total: int


def transmit(payload: EncodedPayload, cfg: ChannelConfig, rng: np.random.Generator) -> TransmitResult:
    """Flip each payload bit independently with probability cfg.bit_flip_prob.

    Bytes are accounted whether or not noise corrupted them.  A single rng
    stream must not be shared across concurrent transmissions.
    """
    used = cost_bytes(payload, CostModel())
    p = cfg.bit_flip_prob
    if p == 0.0:
        return TransmitResult(delivered=payload, bytes_used=used, flipped_bits=0)
    raw = np.frombuffer(payload.payload, dtype=np.uint8)
    flips = rng.random((raw.size, 8)) < p
    mask = np.packbits(flips, axis=1).ravel()
    delivered = replace(payload, payload=(raw ^ mask).tobytes())
    return TransmitResult(delivered=delivered, bytes_used=used, flipped_bits=int(flips.sum()))


def budget_check(costs: Sequence[int], cfg: ChannelConfig) -> BudgetCheck:
    """Total cost of one allocation round and whether it fits the budget."""
    total = int(sum(costs))
    return BudgetCheck(feasible=total <= cfg.budget_bytes, total=total)
