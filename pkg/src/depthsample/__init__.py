"""Image-guided adaptive depth sampling and dense reconstruction.

Sparse depth measurements are placed at the centers of mass of RGB
superpixels, then densified by zero-order fill and an edge-preserving
bilateral filter in the log-depth domain. The package also ships the
piece-wise planar depth-model validator, RGB/depth boundary statistics,
a sector-star resolution (MTF) harness, baselines, and an experiment
runner with a CLI front end.
"""

from ._kernels import BACKEND as kernel_backend
from .core import (DataError, DepthMap, EvalMask, RgbImage, SampleSet,
                   SegmentMap, pixel_density, rel, rmse)
from .edgestats import (BoundaryMap, conditional_probabilities,
                        depth_boundaries, rgb_edges)
from .mtf import StarChart, compute_mtf, generate_chart
from .planar import (FitModelParams, PlanarModel, fit_model, fit_plane,
                     min_samples, rmse_v)
from .reconstruct import (BilateralParams, bilateral_filter, bilinear_baseline,
                          exp_transform, first_order_baseline, log_transform,
                          reconstruct_ours, zero_order_fill)
from .sampler import (SamplePattern, com_pattern, execute, grid_pattern,
                      random_pattern)
from .superpixel import SlicParams, slic_segment
from .synth import SceneSpec, generate_synthetic_scene

__version__ = "0.1.0"
