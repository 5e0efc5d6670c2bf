"""Estimator front end.

``fit`` receives the panchromatic (one image, or a ``(C, H, W)`` stack with
the panchromatic warped into every band's geometry) and precomputes what
only depends on it. ``transform`` receives the low-resolution bands and
returns the fused image.

    >>> est = NLVDPansharpener(mu=50, delta=6.21, h=1.25).fit(pan)
    >>> fused = est.transform(lowres)
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from pansharp import baselines
from pansharp.raster import check_band, check_image
from pansharp.sampling import BlurSpec, SamplingSpec
from pansharp.solver import BandProblem, SolverConfig, solve_nlv, solve_nlvd_band
from pansharp.weights import NonlocalConfig, compute_weights


class _PanFusionBase(BaseEstimator):
    """Shared pan handling: ``fit(pan)``, ``transform(lowres)``."""

    def fit(self, X, y=None):
        pan = np.asarray(X, dtype=np.float64)
        self.pans_ = [check_band(pan, "pan")] if pan.ndim == 2 else list(check_image(pan, "pan"))
        shape = self.pans_[0].shape
        if any(p.shape != shape for p in self.pans_):
            raise ValueError("all panchromatic images must share one grid")
        s = self.factor
        if shape[0] % s or shape[1] % s:
            raise ValueError(f"pan size {shape} is not divisible by factor {s}")
        self.pan_shape_ = shape
        self._fit_pans()
        return self

    def _fit_pans(self):
        pass

    def fit_transform(self, X, y=None):
        """Fit on the panchromatic ``X`` and fuse the low-resolution bands ``y``."""
        if y is None:
            raise ValueError("fit_transform needs the low-resolution bands as y")
        return self.fit(X).transform(y)

    def _check_lowres(self, X):
        check_is_fitted(self, "pans_")
        low = check_image(X, "lowres")
        s = self.factor
        if (low.shape[1] * s, low.shape[2] * s) != self.pan_shape_:
            raise ValueError(f"lowres {low.shape[1:]} does not match pan {self.pan_shape_} at factor {s}")
        if len(self.pans_) not in (1, low.shape[0]):
            raise ValueError(f"fitted {len(self.pans_)} panchromatic images for {low.shape[0]} bands")
        return low

    def _pan(self, k):
        return self.pans_[k] if len(self.pans_) > 1 else self.pans_[0]

    @property
    def sampling_(self):
        return SamplingSpec(self.factor)

    def _map_bands(self, fn, n_bands):
        n_jobs = getattr(self, "n_jobs", 1) or 1
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                return list(pool.map(fn, range(n_bands)))
        return [fn(k) for k in range(n_bands)]


class NLVDPansharpener(_PanFusionBase):
    """Nonlocal band-decoupled variational fusion.

    Parameters mirror :class:`~pansharp.solver.SolverConfig`; ``tau=None``
    picks the certified automatic step. After ``transform`` the per-band
    :class:`~pansharp.solver.SolveReport` objects are in ``reports_``.
    """

    def __init__(self, mu=50.0, delta=6.21, h=1.25, search_radius=3, patch_radius=1,
                 sigma=1.3, factor=4, tau=None, max_iter=500, tol=1e-6, n_jobs=1):
        self.mu = mu
        self.delta = delta
        self.h = h
        self.search_radius = search_radius
        self.patch_radius = patch_radius
        self.sigma = sigma
        self.factor = factor
        self.tau = tau
        self.max_iter = max_iter
        self.tol = tol
        self.n_jobs = n_jobs

    def solver_config(self):
        return SolverConfig(
            mu=self.mu,
            delta=self.delta,
            nonlocal_cfg=NonlocalConfig(self.search_radius, self.patch_radius, self.h),
            blur=BlurSpec(self.sigma),
            sampling=SamplingSpec(self.factor),
            tau=self.tau,
            max_iter=self.max_iter,
            tol=self.tol,
        )

    def _fit_pans(self):
        cfg = self.solver_config()
        self.weights_ = self._map_bands(lambda k: compute_weights(self.pans_[k], cfg.nonlocal_cfg), len(self.pans_))

    def transform(self, X):
        low = self._check_lowres(X)
        cfg = self.solver_config()

        def run(k):
            prob = BandProblem.from_data(self._pan(k), low[k], cfg.blur, cfg.sampling)
            w = self.weights_[k] if len(self.weights_) > 1 else self.weights_[0]
            return solve_nlvd_band(prob, cfg, w)

        results = self._map_bands(run, low.shape[0])
        self.reports_ = [r for _, r in results]
        return np.stack([u for u, _ in results])


class NLVPansharpener(_PanFusionBase):
    """Coupled nonlocal fusion with a linear panchromatic model.

    Only valid for co-registered bands, so ``fit`` accepts a single
    panchromatic image. ``alphas=None`` uses equal weights.
    """

    def __init__(self, alphas=None, lam=1.0, mu=50.0, h=1.25, search_radius=3, patch_radius=1,
                 sigma=1.3, factor=4, tau=None, max_iter=500, tol=1e-6):
        self.alphas = alphas
        self.lam = lam
        self.mu = mu
        self.h = h
        self.search_radius = search_radius
        self.patch_radius = patch_radius
        self.sigma = sigma
        self.factor = factor
        self.tau = tau
        self.max_iter = max_iter
        self.tol = tol

    def _fit_pans(self):
        if len(self.pans_) != 1:
            raise ValueError("NLV requires co-registered bands and a single panchromatic image")

    def transform(self, X):
        low = self._check_lowres(X)
        c = low.shape[0]
        alphas = np.full(c, 1.0 / c) if self.alphas is None else np.asarray(self.alphas, dtype=np.float64)
        cfg = SolverConfig(
            mu=self.mu,
            nonlocal_cfg=NonlocalConfig(self.search_radius, self.patch_radius, self.h),
            blur=BlurSpec(self.sigma),
            sampling=SamplingSpec(self.factor),
            tau=self.tau,
            max_iter=self.max_iter,
            tol=self.tol,
        )
        fused, report = solve_nlv(self.pans_[0], low, alphas, cfg, lam=self.lam, return_report=True)
        self.reports_ = [report]
        return fused


class BicubicPansharpener(_PanFusionBase):
    """Ignores the panchromatic; bicubic upsampling of each band."""

    def __init__(self, factor=4):
        self.factor = factor

    def transform(self, X):
        return baselines.fuse_bicubic(self._check_lowres(X), self.factor)


class HPFPansharpener(_PanFusionBase):
    def __init__(self, hpf_box=5, factor=4, n_jobs=1):
        self.hpf_box = hpf_box
        self.factor = factor
        self.n_jobs = n_jobs

    def transform(self, X):
        low = self._check_lowres(X)
        cfg = baselines.BaselineConfig(hpf_box=self.hpf_box)
        bands = self._map_bands(lambda k: baselines.fuse_hpf(self._pan(k), low[k], cfg, self.sampling_), low.shape[0])
        return np.stack(bands)


class SFIMPansharpener(_PanFusionBase):
    def __init__(self, hpf_box=5, ratio_epsilon=1e-6, factor=4, n_jobs=1):
        self.hpf_box = hpf_box
        self.ratio_epsilon = ratio_epsilon
        self.factor = factor
        self.n_jobs = n_jobs

    def transform(self, X):
        low = self._check_lowres(X)
        cfg = baselines.BaselineConfig(hpf_box=self.hpf_box, ratio_epsilon=self.ratio_epsilon)
        bands = self._map_bands(lambda k: baselines.fuse_sfim(self._pan(k), low[k], cfg, self.sampling_), low.shape[0])
        return np.stack(bands)


class LMVMPansharpener(_PanFusionBase):
    def __init__(self, lmvm_window=9, ratio_epsilon=1e-6, factor=4, n_jobs=1):
        self.lmvm_window = lmvm_window
        self.ratio_epsilon = ratio_epsilon
        self.factor = factor
        self.n_jobs = n_jobs

    def transform(self, X):
        low = self._check_lowres(X)
        cfg = baselines.BaselineConfig(lmvm_window=self.lmvm_window, ratio_epsilon=self.ratio_epsilon)
        bands = self._map_bands(lambda k: baselines.fuse_lmvm(self._pan(k), low[k], cfg, self.sampling_), low.shape[0])
        return np.stack(bands)


class LBFPansharpener(_PanFusionBase):
    def __init__(self, sigma=1.3, ratio_epsilon=1e-6, factor=4, n_jobs=1):
        self.sigma = sigma
        self.ratio_epsilon = ratio_epsilon
        self.factor = factor
        self.n_jobs = n_jobs

    def transform(self, X):
        low = self._check_lowres(X)
        cfg = baselines.BaselineConfig(ratio_epsilon=self.ratio_epsilon)
        blur = BlurSpec(self.sigma)
        bands = self._map_bands(
            lambda k: baselines.fuse_lbf(self._pan(k), low[k], blur, self.sampling_, cfg), low.shape[0]
        )
        return np.stack(bands)


METHODS = {
    "nlvd": NLVDPansharpener,
    "nlv": NLVPansharpener,
    "hpf": HPFPansharpener,
    "sfim": SFIMPansharpener,
    "lmvm": LMVMPansharpener,
    "lbf": LBFPansharpener,
    "bicubic": BicubicPansharpener,
}
