"""Grayscale conversion, Canny edge detection and contour tracing."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

# 8-neighbour offsets (dx, dy) in clockwise order on screen (y grows down)
NEIGHBOURS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


class EmptyImage(ValueError):
    pass


class InvalidThresholds(ValueError):
    pass


def to_gray(image):
    """Luminance in [0, 1] from an 8-bit RGB(A) or grayscale raster."""
    img = np.asarray(image)
    if img.size == 0:
        raise EmptyImage("image has no pixels")
    scale = 255.0 if img.dtype == np.uint8 else 1.0
    img = img.astype(float) / scale
    if img.ndim == 2:
        return np.clip(img, 0.0, 1.0)
    if img.ndim == 3 and img.shape[2] in (3, 4):
        r, g, b = img[..., 0], img[..., 1], img[..., 2]
        return np.clip(0.299 * r + 0.587 * g + 0.114 * b, 0.0, 1.0)
    raise ValueError(f"unsupported image shape {img.shape}")


def gaussian_kernel(sigma):
    radius = math.ceil(4 * sigma)
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gradients(gray, sigma):
    k = gaussian_kernel(sigma)
    smooth = ndimage.correlate1d(gray, k, axis=0, mode="reflect")
    smooth = ndimage.correlate1d(smooth, k, axis=1, mode="reflect")
    gx = ndimage.sobel(smooth, axis=1, mode="reflect")
    gy = ndimage.sobel(smooth, axis=0, mode="reflect")
    return gx, gy, np.hypot(gx, gy)


def _non_max_suppression(gx, gy, mag, floor):
    h, w = mag.shape
    keep = np.zeros_like(mag, dtype=bool)
    ys, xs = np.nonzero(mag > floor)
    inner = (ys > 0) & (ys < h - 1) & (xs > 0) & (xs < w - 1)
    ys, xs = ys[inner], xs[inner]
    if len(ys) == 0:
        return keep
    m = mag[ys, xs]
    ux, uy = gx[ys, xs] / m, gy[ys, xs] / m
    ahead = ndimage.map_coordinates(mag, [ys + uy, xs + ux], order=1, mode="nearest")
    behind = ndimage.map_coordinates(mag, [ys - uy, xs - ux], order=1, mode="nearest")
    # strict on one side so flat-topped ridges do not come out two pixels wide
    ok = (m > ahead) & (m >= behind)
    keep[ys[ok], xs[ok]] = True
    return keep


def canny(gray, sigma=2.5, low=None, high=None, low_quantile=0.7, high_quantile=0.9):
    """Canny edge map.

    Gaussian smoothing (kernel radius ``ceil(4 sigma)``, reflected borders),
    Sobel gradients, interpolated non-maximum suppression and hysteresis.
    When ``low``/``high`` are omitted they are taken as quantiles of the
    nonzero gradient magnitudes.
    """
    gray = np.asarray(gray, dtype=float)
    if gray.size == 0:
        raise EmptyImage("image has no pixels")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    gx, gy, mag = gradients(gray, sigma)
    nonzero = mag[mag > 0]
    if nonzero.size == 0:
        return np.zeros(gray.shape, dtype=bool)
    if low is None:
        low = float(np.quantile(nonzero, low_quantile))
    if high is None:
        high = float(np.quantile(nonzero, high_quantile))
    if low < 0 or low > high:
        raise InvalidThresholds(f"need 0 <= low <= high, got low={low}, high={high}")
    candidates = _non_max_suppression(gx, gy, mag, 0.0) & (mag >= low)
    strong = candidates & (mag >= high)
    labels, n = ndimage.label(candidates, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return candidates
    good = np.zeros(n + 1, dtype=bool)
    good[np.unique(labels[strong])] = True
    good[0] = False
    return good[labels]


def _turn(i, j):
    d = abs(i - j) % 8
    return min(d, 8 - d)


def trace_contours(edges):
    """Split an edge map into ordered 8-connected pixel chains.

    Chains start at end points (one neighbour) before anything else, so open
    curves are traced end to end. A walk prefers the neighbour needing the
    smallest turn, ties broken clockwise from the current heading; branches
    left behind at junctions start new chains later. Every edge pixel ends
    up in exactly one chain. Returns a list of ``(n, 2)`` int arrays of (x, y).
    """
    edges = np.asarray(edges, dtype=bool)
    h, w = edges.shape
    padded = np.pad(edges, 1)
    unvisited = padded.copy()

    counts = ndimage.convolve(padded.astype(int), np.ones((3, 3), dtype=int), mode="constant") - padded
    ys, xs = np.nonzero(padded)
    order = np.lexsort((xs, ys))
    ys, xs = ys[order], xs[order]
    ends = counts[ys, xs] == 1
    starts = [(int(x), int(y)) for x, y in zip(xs[ends], ys[ends])]
    starts += [(int(x), int(y)) for x, y in zip(xs[~ends], ys[~ends])]

    def walk(x, y, heading):
        path = []
        while True:
            best = None
            for k in range(8):
                j = k if heading is None else (heading + k) % 8
                dx, dy = NEIGHBOURS[j]
                if unvisited[y + dy, x + dx]:
                    cost = 0 if heading is None else _turn(heading, j)
                    if best is None or cost < best[0]:
                        best = (cost, j)
            if best is None:
                return path
            heading = best[1]
            dx, dy = NEIGHBOURS[heading]
            x, y = x + dx, y + dy
            unvisited[y, x] = False
            path.append((x, y))

    contours = []
    for x, y in starts:
        if not unvisited[y, x]:
            continue
        unvisited[y, x] = False
        forward = walk(x, y, None)
        heading = None
        if forward:
            # head back the way opposite to where the forward walk left
            fx, fy = forward[0]
            heading = (NEIGHBOURS.index((fx - x, fy - y)) + 4) % 8
        backward = walk(x, y, heading) if forward else []
        chain = backward[::-1] + [(x, y)] + forward
        contours.append(np.array(chain, dtype=int) - 1)
    return contours
