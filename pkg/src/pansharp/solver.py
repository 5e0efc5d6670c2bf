"""Nonlocal band-decoupled variational pansharpening.

Each band ``u`` minimizes

    F(u) = (1/2) sum_{p,q} (u(q) - u(p))^2 w(p, q)
         + (mu s^2 / 2) sum_{p in S} ((K u)(p) - u_low(p))^2
         + (delta / (2 |P|^2)) sum_p (u(p) Pt(p) - ut(p) P(p))^2

where ``w`` is the nonlocal weight field of the band-aligned panchromatic
``P``, ``K`` the band blur, ``S`` the decimation lattice, ``Pt`` and ``ut``
the bicubic upsamplings of the decimated panchromatic and of the
low-resolution band, and ``|P|`` the root mean square of ``P``. ``F`` is a
strictly convex quadratic minimized by explicit gradient descent.

:func:`solve_nlv` minimizes the older coupled energy in which all bands
share one panchromatic tied to them by a linear mixing constraint.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pansharp.raster import check_band, check_image
from pansharp.sampling import (
    BlurSpec,
    SamplingSpec,
    adjoint_upsample_blur,
    bicubic_upsample,
    blur_downsample,
    convolve,
    convolve_adjoint,
    gaussian_kernel,
    replicate_upsample,
    sampling_mask,
)
from pansharp.weights import NonlocalConfig, WeightField, apply_nonlocal_operator, compute_weights, nonlocal_energy

logger = logging.getLogger(__name__)


class StepSizeError(RuntimeError):
    """Gradient descent diverged under the automatic step size."""


@dataclass(frozen=True)
class SolverConfig:
    mu: float = 50.0
    delta: float = 6.21
    nonlocal_cfg: NonlocalConfig = field(default_factory=NonlocalConfig)
    blur: BlurSpec = field(default_factory=BlurSpec)
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    tau: float | None = None
    max_iter: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        if self.mu < 0 or self.delta < 0:
            raise ValueError("mu and delta must be nonnegative")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class SolveReport:
    iterations: int
    final_relative_change: float
    energy_trace: list[float]
    tau: float
    converged: bool

    def summary(self):
        return {
            "iterations": self.iterations,
            "final_relative_change": self.final_relative_change,
            "final_energy": self.energy_trace[-1],
            "tau": self.tau,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class BandProblem:
    """Data of one band expressed in that band's geometry."""

    pan: np.ndarray
    lowres: np.ndarray
    pan_low: np.ndarray
    lowres_up: np.ndarray
    lowres_rep: np.ndarray
    pan_norm: float
    sampling: SamplingSpec

    @classmethod
    def from_data(cls, pan, lowres, blur: BlurSpec, sampling: SamplingSpec):
        pan = check_band(pan, "pan")
        lowres = check_band(lowres, "lowres")
        s = sampling.factor
        if pan.shape != (lowres.shape[0] * s, lowres.shape[1] * s):
            raise ValueError(
                f"pan {pan.shape} does not match lowres {lowres.shape} at factor {s}"
            )
        pan_low = bicubic_upsample(blur_downsample(pan, blur, sampling), s, sampling.phase)
        lowres_up = bicubic_upsample(lowres, s, sampling.phase)
        rep = replicate_upsample(lowres, s)
        pan_norm = float(np.sqrt(np.mean(pan * pan)))
        if not pan_norm > 0:
            raise ValueError("panchromatic image is identically zero")
        return cls(pan, lowres, pan_low, lowres_up, rep, pan_norm, sampling)


def radiometric_residual(u, prob: BandProblem):
    """``u * Pt - ut * P``, the violation of the ratio constraint."""
    return u * prob.pan_low - prob.lowres_up * prob.pan


def nlvd_energy(u, prob: BandProblem, cfg: SolverConfig, w: WeightField) -> float:
    s = cfg.sampling.factor
    mask = sampling_mask(u.shape, cfg.sampling)
    fit = convolve(u, gaussian_kernel(cfg.blur)) - prob.lowres_rep
    radio = radiometric_residual(u, prob)
    return (
        nonlocal_energy(w, u)
        + 0.5 * cfg.mu * s * s * float(np.sum(mask * fit * fit))
        + 0.5 * cfg.delta / prob.pan_norm**2 * float(np.sum(radio * radio))
    )


def nlvd_gradient(u, prob: BandProblem, cfg: SolverConfig, w: WeightField) -> np.ndarray:
    s = cfg.sampling.factor
    grad = apply_nonlocal_operator(w, u)
    if cfg.mu:
        resid = blur_downsample(u, cfg.blur, cfg.sampling) - prob.lowres
        grad += cfg.mu * s * s * adjoint_upsample_blur(resid, cfg.blur, cfg.sampling)
    if cfg.delta:
        grad += cfg.delta / prob.pan_norm**2 * prob.pan_low * radiometric_residual(u, prob)
    return grad


def nonlocal_lipschitz(w: WeightField) -> float:
    # u^T L u <= 2 sum_p u_p^2 (1 + colsum_p) for a row-stochastic field
    return 2.0 * (1.0 + float(w.column_sums().max()))


def data_lipschitz(shape, blur: BlurSpec, sampling: SamplingSpec) -> float:
    """Gershgorin bound on ``||Pi_S K||^2`` (row sums of the lattice Gram matrix)."""
    mask = sampling_mask(shape, sampling)
    k = gaussian_kernel(blur)
    gram_rows = convolve(convolve_adjoint(mask, k), k)
    return float(gram_rows[mask > 0].max())


def auto_step_size(prob: BandProblem, cfg: SolverConfig, w: WeightField) -> float:
    """``1 / L`` for a certified upper bound ``L`` of the gradient's Lipschitz constant."""
    s = cfg.sampling.factor
    lip = nonlocal_lipschitz(w)
    if cfg.mu:
        lip += cfg.mu * s * s * data_lipschitz(prob.pan.shape, cfg.blur, cfg.sampling)
    if cfg.delta:
        lip += cfg.delta / prob.pan_norm**2 * float(np.max(prob.pan_low**2))
    return 1.0 / lip


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


def gradient_descent(energy, gradient, init, tau, max_iter, tol, check_divergence):
    """Fixed-step descent stopped on the RMS change between iterates."""
    u = np.array(init, dtype=np.float64, copy=True)
    trace = [energy(u)]
    change = np.inf
    rises = 0
    n = 0
    for n in range(1, max_iter + 1):
        step = tau * gradient(u)
        u -= step
        change = _rms(step)
        trace.append(energy(u))
        if check_divergence:
            if trace[-1] > trace[-2] * (1 + 1e-12) + 1e-300:
                rises += 1
                if rises >= 2:
                    raise StepSizeError(
                        f"energy rose on consecutive iterations ({trace[-3]:.6g} -> "
                        f"{trace[-2]:.6g} -> {trace[-1]:.6g}) at iteration {n} with tau={tau:.4g}"
                    )
            else:
                rises = 0
        if change < tol:
            break
    report = SolveReport(n, change, trace, tau, bool(change < tol))
    return u, report


def solve_nlvd_band(prob: BandProblem, cfg: SolverConfig, w: WeightField, init=None):
    """Minimize the band energy; returns ``(u, SolveReport)``.

    ``init`` defaults to the bicubic upsampling of the low-resolution band.
    """
    u0 = prob.lowres_up if init is None else check_band(init, "init")
    if u0.shape != prob.pan.shape:
        raise ValueError(f"init shape {u0.shape} does not match {prob.pan.shape}")
    auto = cfg.tau is None
    tau = auto_step_size(prob, cfg, w) if auto else cfg.tau
    u, report = gradient_descent(
        lambda v: nlvd_energy(v, prob, cfg, w),
        lambda v: nlvd_gradient(v, prob, cfg, w),
        u0,
        tau,
        cfg.max_iter,
        cfg.tol,
        check_divergence=auto,
    )
    logger.debug("band solved: %d iterations, change %.3g", report.iterations, report.final_relative_change)
    return u, report


def _band_pans(pan, n_bands):
    pan = np.asarray(pan, dtype=np.float64)
    if pan.ndim == 2:
        pan = check_band(pan, "pan")
        return [pan] * n_bands
    pans = check_image(pan, "pan")
    if pans.shape[0] == 1:
        return [pans[0]] * n_bands
    if pans.shape[0] != n_bands:
        raise ValueError(f"got {pans.shape[0]} panchromatic images for {n_bands} bands")
    return list(pans)


def pansharpen_nlvd(pan, lowres, cfg: SolverConfig | None = None, threads=1, return_reports=False):
    """Fuse every band independently.

    ``pan`` is either one panchromatic image (co-registered data) or a
    ``(C, H, W)`` stack holding the panchromatic warped into each band's
    geometry.
    """
    cfg = cfg or SolverConfig()
    lowres = check_image(lowres, "lowres")
    pans = _band_pans(pan, lowres.shape[0])

    def run(k):
        prob = BandProblem.from_data(pans[k], lowres[k], cfg.blur, cfg.sampling)
        w = compute_weights(pans[k], cfg.nonlocal_cfg)
        return solve_nlvd_band(prob, cfg, w)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(lowres.shape[0])))
    else:
        results = [run(k) for k in range(lowres.shape[0])]
    fused = np.stack([u for u, _ in results])
    if return_reports:
        return fused, [r for _, r in results]
    return fused


def check_mixing(alphas, n_bands):
    a = np.asarray(alphas, dtype=np.float64)
    if a.shape != (n_bands,):
        raise ValueError(f"expected {n_bands} mixing coefficients, got {a.shape}")
    if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixing coefficients must be nonnegative and sum to 1, got {a}")
    return a


class CoupledProblem:
    """Shared data of the coupled energy

        J(u) = (1/2) sum_k sum_{p,q} (u_k(q) - u_k(p))^2 w(p, q)
             + (lam / 2) sum_p (sum_k a_k u_k(p) - P(p))^2
             + (mu / 2) sum_k sum_{p in S} ((K u_k)(p) - u_low_k(p))^2
    """

    def __init__(self, pan, lowres, alphas, cfg: SolverConfig, lam, w=None):
        self.pan = check_band(pan, "pan")
        self.lowres = check_image(lowres, "lowres")
        self.alphas = check_mixing(alphas, self.lowres.shape[0])
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.lam = float(lam)
        self.cfg = cfg
        s = cfg.sampling.factor
        if self.pan.shape != (self.lowres.shape[1] * s, self.lowres.shape[2] * s):
            raise ValueError("pan and lowres grids are incompatible")
        self.w = w if w is not None else compute_weights(self.pan, cfg.nonlocal_cfg)
        self.mask = sampling_mask(self.pan.shape, cfg.sampling)
        self.lowres_rep = np.stack([
            BandProblem.from_data(self.pan, band, cfg.blur, cfg.sampling).lowres_rep for band in self.lowres
        ])
        self.lowres_up = bicubic_upsample(self.lowres, s, cfg.sampling.phase)

    def energy(self, u):
        k = gaussian_kernel(self.cfg.blur)
        mix = np.tensordot(self.alphas, u, axes=1) - self.pan
        fit = convolve(u, k) - self.lowres_rep
        return (
            sum(nonlocal_energy(self.w, band) for band in u)
            + 0.5 * self.lam * float(np.sum(mix * mix))
            + 0.5 * self.cfg.mu * float(np.sum(self.mask * fit * fit))
        )

    def gradient(self, u):
        mix = np.tensordot(self.alphas, u, axes=1) - self.pan
        grad = np.stack([apply_nonlocal_operator(self.w, band) for band in u])
        grad += self.lam * self.alphas[:, None, None] * mix
        if self.cfg.mu:
            resid = blur_downsample(u, self.cfg.blur, self.cfg.sampling) - self.lowres
            grad += self.cfg.mu * adjoint_upsample_blur(resid, self.cfg.blur, self.cfg.sampling)
        return grad

    def step_size(self):
        lip = nonlocal_lipschitz(self.w) + self.lam * float(self.alphas @ self.alphas)
        if self.cfg.mu:
            lip += self.cfg.mu * data_lipschitz(self.pan.shape, self.cfg.blur, self.cfg.sampling)
        return 1.0 / lip


def solve_nlv(pan, lowres, alphas, cfg: SolverConfig | None = None, lam=1.0, init=None, return_report=False):
    """Coupled nonlocal fusion; needs co-registered bands and a mixing model.

    ``cfg.mu`` weights the data term without the ``s^2`` normalization and
    ``cfg.delta`` is unused.
    """
    cfg = cfg or SolverConfig()
    prob = CoupledProblem(pan, lowres, alphas, cfg, lam)
    u0 = prob.lowres_up if init is None else check_image(init, "init")
    auto = cfg.tau is None
    tau = prob.step_size() if auto else cfg.tau
    u, report = gradient_descent(prob.energy, prob.gradient, u0, tau, cfg.max_iter, cfg.tol, auto)
    if return_report:
        return u, report
    return u
