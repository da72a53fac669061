"""Dense flow blob format.

Layout, all little endian:

    bytes 0..3    magic "PFLW"
    bytes 4..7    width  (u32)
    bytes 8..11   height (u32)
    then          validity bitmap, row-major pixels, LSB-first within each
                  byte, padded up to a whole byte
    then          width*height (dx, dy) float32 pairs, row major

Invalid pixels always carry zero vectors, so writing what was read gives the
same bytes back.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import FlowFormatError
from .motion import InverseMotionField, MotionField

MAGIC = b"PFLW"


def flow_byte_length(width, height):
    return 12 + (width * height + 7) // 8 + 8 * width * height


def write_flow(field):
    h, w = field.valid.shape
    head = MAGIC + struct.pack("<II", w, h)
    bits = np.packbits(field.valid.ravel().astype(np.uint8), bitorder="little")
    vec = np.where(field.valid[:, :, None], field.vectors, 0.0)
    body = vec.astype("<f4").tobytes()
    return head + bits.tobytes() + body


def read_flow(data, inverse=False):
    if len(data) < 12:
        raise FlowFormatError(f"blob too short for a header: {len(data)} bytes")
    if data[:4] != MAGIC:
        raise FlowFormatError(f"bad magic {data[:4]!r}")
    w, h = struct.unpack("<II", data[4:12])
    if w < 1 or h < 1:
        raise FlowFormatError(f"bad dimensions {w}x{h}")
    expect = flow_byte_length(w, h)
    if len(data) != expect:
        raise FlowFormatError(f"expected {expect} bytes for {w}x{h}, got {len(data)}")
    nbits = (w * h + 7) // 8
    bits = np.frombuffer(data[12 : 12 + nbits], dtype=np.uint8)
    valid = np.unpackbits(bits, bitorder="little", count=w * h).astype(bool).reshape(h, w)
    vec = (
        np.frombuffer(data[12 + nbits :], dtype="<f4")
        .astype(np.float64)
        .reshape(h, w, 2)
    )
    cls = InverseMotionField if inverse else MotionField
    return cls(vec, valid)
