"""Downscale codec and byte accounting for semantic map transmission.

Wire format (16-byte header, then payload bytes row-major):

    bytes 0..3   magic "SMAP"
    bytes 4..7   original width, height   (16-bit big-endian each)
    bytes 8..11  encoded width, height    (16-bit big-endian each)
    byte  12     downscaling factor d
    byte  13     kind tag: 0 soft, 1 binary, 2 labels
    byte  14     label count K (0 when unused)
    byte  15     reserved, zero

One payload byte per encoded pixel; no entropy coding or bit packing.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptPayloadError, DomainError
from .image import (
    LABELS,
    Resolution,
    SemanticMap,
    bilinear_upscale,
    box_downscale,
    downscaled_resolution,
    restore_kind,
)

HEADER_BYTES = 16
_MAGIC = b"SMAP"
_KIND_TAGS = {"soft": 0, "binary": 1, "labels": 2}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


@dataclass(frozen=True)
class CostModel:
    header_bytes: int = HEADER_BYTES
    bytes_per_pixel: int = 1


@dataclass(frozen=True, eq=False)
class EncodedPayload:
    orig_width: int
    orig_height: int
    enc_width: int
    enc_height: int
    factor: int
    kind: str
    levels: int | None
    payload: bytes

    def __post_init__(self):
        if self.factor < 1:
            raise DomainError(f"factor must be >= 1, got {self.factor}")
        expected = downscaled_resolution(self.orig_width, self.orig_height, self.factor)
        if (self.enc_width, self.enc_height) != (expected.width, expected.height):
            raise CorruptPayloadError(
                f"encoded dims {self.enc_width}x{self.enc_height} inconsistent with "
                f"{self.orig_width}x{self.orig_height} at d={self.factor}"
            )
        if len(self.payload) != self.enc_width * self.enc_height:
            raise CorruptPayloadError(
                f"payload has {len(self.payload)} bytes, header needs {self.enc_width * self.enc_height}"
            )


def encode(map: SemanticMap, d: int) -> EncodedPayload:
    """Box-downscale by d and quantize to one byte per pixel."""
    if d < 1:
        raise DomainError(f"downscale factor must be >= 1, got {d}")
    if d > 255:
        raise DomainError(f"factor {d} exceeds the wire format limit of 255")
    if map.width > 65535 or map.height > 65535:
        raise DomainError("resolution exceeds the wire format limit of 65535")
    small = box_downscale(map, d)
    payload = np.rint(small.pixels * 255.0).astype(np.uint8).tobytes()
    return EncodedPayload(
        orig_width=map.width,
        orig_height=map.height,
        enc_width=small.width,
        enc_height=small.height,
        factor=d,
        kind=map.kind,
        levels=map.levels,
        payload=payload,
    )


def decode(payload: EncodedPayload) -> SemanticMap:
    """Dequantize, upscale back to the original resolution, restore the kind."""
    raw = np.frombuffer(payload.payload, dtype=np.uint8).astype(np.float64) / 255.0
    small = SemanticMap(raw.reshape(payload.enc_height, payload.enc_width))
    full = bilinear_upscale(small, Resolution(payload.orig_width, payload.orig_height))
    return restore_kind(full.pixels, payload.kind, payload.levels)


def cost_bytes(payload: EncodedPayload, model: CostModel = CostModel()) -> int:
    """Total transmission cost: fixed header plus one byte per encoded pixel."""
    return model.header_bytes + len(payload.payload) * model.bytes_per_pixel


def encoded_cost(width: int, height: int, d: int, model: CostModel = CostModel()) -> int:
    """cost_bytes of encoding a width x height map at factor d, without encoding it."""
    res = downscaled_resolution(width, height, d)
    return model.header_bytes + res.width * res.height * model.bytes_per_pixel


def serialize_payload(payload: EncodedPayload) -> bytes:
    header = struct.pack(
        ">4sHHHHBBBB",
        _MAGIC,
        payload.orig_width,
        payload.orig_height,
        payload.enc_width,
        payload.enc_height,
        payload.factor,
        _KIND_TAGS[payload.kind],
        payload.levels or 0,
        0,
    )
    return header + payload.payload


def parse_payload(data: bytes) -> EncodedPayload:
    if len(data) < HEADER_BYTES:
        raise CorruptPayloadError(f"need at least {HEADER_BYTES} header bytes, got {len(data)}")
    magic, ow, oh, ew, eh, d, tag, k, _ = struct.unpack(">4sHHHHBBBB", data[:HEADER_BYTES])
    if magic != _MAGIC:
        raise CorruptPayloadError(f"bad magic {magic!r}")
    if tag not in _TAG_KINDS:
        raise CorruptPayloadError(f"unknown kind tag {tag}")
    body = data[HEADER_BYTES:]
    if len(body) != ew * eh:
        raise CorruptPayloadError(f"payload has {len(body)} bytes, header needs {ew * eh}")
    kind = _TAG_KINDS[tag]
    return EncodedPayload(
        orig_width=ow,
        orig_height=oh,
        enc_width=ew,
        enc_height=eh,
        factor=d,
        kind=kind,
        levels=k if kind == LABELS else None,
        payload=body,
    )
