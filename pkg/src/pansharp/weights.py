"""Windowed nonlocal weights computed on a panchromatic image.

For every pixel ``p`` and every ``q`` in the ``(2*search_radius+1)^2``
search window, the unnormalized weight is

    exp(-(1/h^2) * sum_t |P(p+t) - P(q+t)|^2),  ||t||_inf <= patch_radius.

The self weight is replaced by the largest of the other weights and each
row is normalized to sum to one. Rows are not symmetric, so the induced
graph operator uses both ``w(p, q)`` and ``w(q, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from pansharp.raster import check_band
from pansharp.sampling import mirror_index


@dataclass(frozen=True)
class NonlocalConfig:
    """Search window radius, patch (comparison window) radius and filtering parameter.

    With ``self_weight_first=True`` (default) the self weight is set to the
    row maximum before normalization so rows sum to one. With ``False`` the
    row is normalized with ``exp(0)`` in the denominator and the self weight
    is overwritten afterwards, so rows no longer sum to one.
    """

    search_radius: int = 3
    patch_radius: int = 1
    h: float = 1.25
    self_weight_first: bool = True

    def __post_init__(self):
        if self.search_radius < 1:
            raise ValueError(f"search_radius must be >= 1, got {self.search_radius}")
        if self.patch_radius < 0:
            raise ValueError(f"patch_radius must be >= 0, got {self.patch_radius}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")


def window_offsets(radius):
    """All ``(drow, dcol)`` offsets with ``||o||_inf <= radius``, row-major."""
    r = np.arange(-radius, radius + 1)
    dr, dc = np.meshgrid(r, r, indexing="ij")
    return np.stack([dr.ravel(), dc.ravel()], axis=1)


class WeightField:
    """Dense per-pixel window of nonlocal weights.

    ``weights[k, p1, p2]`` is the weight from pixel ``(p1, p2)`` towards the
    pixel at offset ``offsets[k]``; neighbors falling outside the grid are
    folded back by symmetric extension.
    """

    def __init__(self, weights, offsets):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        if self.weights.ndim != 3 or self.weights.shape[0] != len(self.offsets):
            raise ValueError("weights must be (n_offsets, H, W) matching offsets")
        self.weights.setflags(write=False)

    @property
    def shape(self):
        return self.weights.shape[1:]

    @property
    def radius(self):
        return int(np.abs(self.offsets).max())

    @cached_property
    def neighbors(self):
        """Linear index of the neighbor for every ``(offset, pixel)``."""
        h, w = self.shape
        rows = np.arange(h)[None, :, None] + self.offsets[:, 0, None, None]
        cols = np.arange(w)[None, None, :] + self.offsets[:, 1, None, None]
        return mirror_index(rows, h) * w + mirror_index(cols, w)

    @cached_property
    def matrix(self):
        """Row-stochastic sparse matrix ``W[p, q] = w(p, q)``, duplicates summed."""
        h, w = self.shape
        n = h * w
        rows = np.broadcast_to(np.arange(n).reshape(1, h, w), self.neighbors.shape)
        mat = sp.coo_matrix(
            (self.weights.ravel(), (rows.ravel(), self.neighbors.ravel())), shape=(n, n)
        )
        return mat.tocsr()

    @cached_property
    def _symmetrized(self):
        sym = (self.matrix + self.matrix.T).tocsr()
        sym.sort_indices()
        degree = np.asarray(sym.sum(axis=1)).ravel()
        return sym, degree

    def column_sums(self):
        return np.asarray(self.matrix.sum(axis=0)).ravel().reshape(self.shape)

    def pixel_window(self, row, col):
        """``(offset_x, offset_y, weight)`` triples of one pixel's window."""
        return [
            (int(o[1]), int(o[0]), float(self.weights[k, row, col]))
            for k, o in enumerate(self.offsets)
        ]


def _extended(pan, pad):
    h, w = pan.shape
    rows = mirror_index(np.arange(-pad, h + pad), h)
    cols = mirror_index(np.arange(-pad, w + pad), w)
    return pan[np.ix_(rows, cols)]


def patch_distances(pan, search_radius, patch_radius):
    """Squared patch distance to every window offset, shape ``(n_offsets, H, W)``."""
    h, w = pan.shape
    r, c = search_radius, patch_radius
    ext = _extended(pan, r + c)
    offsets = window_offsets(r)
    dist = np.zeros((len(offsets), h, w))
    for k, (a, b) in enumerate(offsets):
        # squared differences on the grid grown by the patch radius
        ref = ext[r:r + h + 2 * c, r:r + w + 2 * c]
        moved = ext[r + a:r + a + h + 2 * c, r + b:r + b + w + 2 * c]
        sq = (ref - moved) ** 2
        acc = np.zeros((h, w))
        for ta in range(2 * c + 1):
            for tb in range(2 * c + 1):
                acc += sq[ta:ta + h, tb:tb + w]
        dist[k] = acc
    return offsets, dist


def compute_weights(pan, cfg: NonlocalConfig | None = None) -> WeightField:
    """Build the weight field of ``pan`` (see module docstring)."""
    cfg = cfg or NonlocalConfig()
    pan = check_band(pan, "pan")
    offsets, dist = patch_distances(pan, cfg.search_radius, cfg.patch_radius)
    center = len(offsets) // 2
    logw = -dist / (cfg.h * cfg.h)
    others = np.delete(logw, center, axis=0)
    row_max = others.max(axis=0)
    if cfg.self_weight_first:
        logw[center] = row_max
        # exponentials are taken relative to the row maximum to avoid underflow
        w = np.exp(logw - row_max)
        w /= w.sum(axis=0)
    else:
        w = np.exp(logw)
        w /= w.sum(axis=0)
        w[center] = np.delete(w, center, axis=0).max(axis=0)
    return WeightField(w, offsets)


def apply_nonlocal_operator(field: WeightField, band) -> np.ndarray:
    """``out(p) = sum_q (u(p) - u(q)) (w(p, q) + w(q, p))``."""
    u = np.asarray(band, dtype=np.float64)
    if u.shape != field.shape:
        raise ValueError(f"band shape {u.shape} does not match weight field {field.shape}")
    sym, degree = field._symmetrized
    flat = u.ravel()
    return (degree * flat - sym @ flat).reshape(u.shape)


def nonlocal_energy(field: WeightField, band) -> float:
    """``(1/2) sum_{p,q} (u(q) - u(p))^2 w(p, q)``."""
    u = np.asarray(band, dtype=np.float64)
    if u.shape != field.shape:
        raise ValueError(f"band shape {u.shape} does not match weight field {field.shape}")
    flat = u.ravel()
    diff = flat[field.neighbors] - u[np.newaxis]
    return 0.5 * float(np.sum(field.weights * diff * diff))
