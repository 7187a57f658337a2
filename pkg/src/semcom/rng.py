"""Deterministic random-stream fan-out.

Experiments carry one shared seed; each consumer derives its own stream
from that seed plus a fixed label, so adding a consumer never shifts the
draws seen by existing ones.
"""

import numpy as np


def stream(seed: int, label: str) -> np.random.Generator:
    """Return the generator for (seed, label); same pair, same stream."""
    return np.random.default_rng([seed, int.from_bytes(label.encode("utf-8"), "big")])
