"""Masked multi-scale backward warping of a texture by an inverse motion field.

The source image is decomposed into a binomial-kernel pyramid.  The coarsest
level is warped outright; walking back up, each level is warped and its low
band replaced by the upsampled coarser result, so coarse structure follows the
coarse warp while fine detail comes from the fine warp.  The motion mask
gates the recombination at every level: pixels the mask leaves untouched keep
the original level content bit for bit.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import convolve1d

from .errors import ContractError, DomainError
from .motion import InverseMotionField, MotionMask

_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _as_image(img):
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ContractError(f"image must be 2-d or 3-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("image contains non-finite values")
    return arr


def _blur(img, kernel):
    out = convolve1d(img, kernel, axis=0, mode="nearest")
    return convolve1d(out, kernel, axis=1, mode="nearest")


def downsample_image(img):
    """Binomial blur then stride-2 decimation."""
    arr = _as_image(img)
    if arr.shape[0] % 2 or arr.shape[1] % 2:
        raise ContractError("image dimensions must be even to downsample")
    return _blur(arr, _KERNEL)[::2, ::2]


def upsample_image(img):
    """Zero insertion then doubled binomial blur; inverse of the decimation grid.

    The data is edge-padded before insertion so the border sees replicated
    samples rather than the inserted zeros; constants come back exactly.
    """
    arr = _as_image(img)
    pad = ((1, 1), (1, 1)) + ((0, 0),) * (arr.ndim - 2)
    padded = np.pad(arr, pad, mode="edge")
    shape = (padded.shape[0] * 2, padded.shape[1] * 2) + padded.shape[2:]
    up = np.zeros(shape, dtype=np.float64)
    up[::2, ::2] = padded
    out = convolve1d(up, 2.0 * _KERNEL, axis=0, mode="constant")
    out = convolve1d(out, 2.0 * _KERNEL, axis=1, mode="constant")
    return out[2:-2, 2:-2]


def gaussian_pyramid(img, depth):
    """Levels 0..depth, level 0 being the input itself."""
    arr = _as_image(img)
    if depth < 1:
        raise DomainError("pyramid depth must be >= 1")
    div = 1 << depth
    if arr.shape[0] % div or arr.shape[1] % div:
        raise ContractError(
            f"image dimensions {arr.shape[:2]} not divisible by 2^{depth}"
        )
    levels = [arr]
    for _ in range(depth):
        levels.append(downsample_image(levels[-1]))
    return levels


def backward_warp(img, inv):
    """Sample img at q + inv(q) with bilinear weights and edge clamping.

    Pixels where the inverse field is invalid copy the source pixel.
    """
    arr = _as_image(img)
    h, w = arr.shape[:2]
    if inv.vectors.shape[:2] != (h, w):
        raise ContractError("inverse field size does not match image")
    ys, xs = np.indices((h, w), dtype=np.float64)
    sx = np.clip(xs + inv.vectors[:, :, 0], 0.0, w - 1.0)
    sy = np.clip(ys + inv.vectors[:, :, 1], 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    if arr.ndim == 3:
        fx = fx[:, :, None]
        fy = fy[:, :, None]
    out = (
        arr[y0, x0] * (1.0 - fx) * (1.0 - fy)
        + arr[y0, x1] * fx * (1.0 - fy)
        + arr[y1, x0] * (1.0 - fx) * fy
        + arr[y1, x1] * fx * fy
    )
    invalid = ~inv.valid
    if arr.ndim == 3:
        out = np.where(invalid[:, :, None], arr, out)
    else:
        out = np.where(invalid, arr, out)
    return out


def downsample_mask(mask, factor):
    """A coarse cell is set when any covered fine cell is set."""
    if factor < 1 or (factor & (factor - 1)):
        raise DomainError("factor must be a positive power of two")
    arr = mask.values
    if factor == 1:
        return MotionMask(arr.copy())
    h, w = arr.shape
    if h % factor or w % factor:
        raise ContractError("mask dimensions not divisible by factor")
    coarse = arr.reshape(h // factor, factor, w // factor, factor).max(axis=(1, 3))
    return MotionMask(coarse)


def downsample_flow(inv, factor):
    """Mean of the valid vectors per window, rescaled to coarse pixel units."""
    if factor < 1 or (factor & (factor - 1)):
        raise DomainError("factor must be a positive power of two")
    vec = inv.vectors
    val = inv.valid
    if factor == 1:
        return InverseMotionField(vec.copy(), val.copy())
    h, w = val.shape
    if h % factor or w % factor:
        raise ContractError("field dimensions not divisible by factor")
    hh, ww = h // factor, w // factor
    cnt = val.reshape(hh, factor, ww, factor).sum(axis=(1, 3))
    # invalid pixels already carry zero vectors, so a plain window sum works
    sums = vec.reshape(hh, factor, ww, factor, 2).sum(axis=(1, 3))
    cval = cnt > 0
    coarse = sums / (np.maximum(cnt, 1)[:, :, None] * factor)
    coarse[~cval] = 0.0
    return InverseMotionField(coarse, cval)


def synthesize(src, inv, mask, depth=3):
    """Warp a texture through the pyramid, gated by the motion mask.

    With a zero mask the source comes back bit for bit; with an all-one mask
    the result is a blend of per-level warps whose low bands follow the
    coarser levels.
    """
    arr = _as_image(src)
    h, w = arr.shape[:2]
    if inv.vectors.shape[:2] != (h, w):
        raise ContractError("inverse field size does not match image")
    if mask.values.shape != (h, w):
        raise ContractError("mask size does not match image")
    levels = gaussian_pyramid(arr, depth)
    invs = [inv]
    masks = [mask]
    for _ in range(depth):
        invs.append(downsample_flow(invs[-1], 2))
        masks.append(downsample_mask(masks[-1], 2))
    out = backward_warp(levels[depth], invs[depth])
    for n in range(depth, 0, -1):
        level = levels[n - 1]
        warped = backward_warp(level, invs[n - 1])
        blend = upsample_image(out) + warped - upsample_image(downsample_image(warped))
        m = masks[n - 1].values == 1
        if arr.ndim == 3:
            m = m[:, :, None]
        out = np.where(m, blend, level)
    return np.clip(out, 0.0, 1.0)
