"""Nonlocal band-decoupled variational pansharpening with classical baselines,
a reduced-resolution simulator and a quality-metric suite."""

from pansharp.baselines import BaselineConfig, fuse_bicubic, fuse_hpf, fuse_lbf, fuse_lmvm, fuse_sfim
from pansharp.estimators import (
    BicubicPansharpener,
    HPFPansharpener,
    LBFPansharpener,
    LMVMPansharpener,
    NLVDPansharpener,
    NLVPansharpener,
    SFIMPansharpener,
)
from pansharp.metrics import MetricReport, d_lambda, d_s, ergas, q2n, qnr, rmse, sam, ssim_band
from pansharp.raster import difference_visualization, read_image, write_image
from pansharp.sampling import BlurSpec, SamplingSpec
from pansharp.simulate import MixingWeights, SimulationSpec
from pansharp.solver import BandProblem, SolverConfig, SolveReport, pansharpen_nlvd, solve_nlv, solve_nlvd_band
from pansharp.weights import NonlocalConfig, WeightField, compute_weights

__version__ = "0.1.0"

__all__ = [
    "BandProblem",
    "BaselineConfig",
    "BicubicPansharpener",
    "BlurSpec",
    "HPFPansharpener",
    "LBFPansharpener",
    "LMVMPansharpener",
    "MetricReport",
    "MixingWeights",
    "NLVDPansharpener",
    "NLVPansharpener",
    "NonlocalConfig",
    "SFIMPansharpener",
    "SamplingSpec",
    "SimulationSpec",
    "SolveReport",
    "SolverConfig",
    "WeightField",
    "compute_weights",
    "d_lambda",
    "d_s",
    "difference_visualization",
    "ergas",
    "fuse_bicubic",
    "fuse_hpf",
    "fuse_lbf",
    "fuse_lmvm",
    "fuse_sfim",
    "pansharpen_nlvd",
    "q2n",
    "qnr",
    "read_image",
    "rmse",
    "sam",
    "solve_nlv",
    "solve_nlvd_band",
    "ssim_band",
    "write_image",
]
