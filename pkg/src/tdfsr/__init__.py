"""Frequency selective reconstruction of non-regularly sampled images, with
texture-dependent distribution of the iteration budget (TD-FSR)."""

from .baseline import linear_reconstruct
from .fse import (EmptySupportError, ReconstructionArea, SparseModel, WeightField,
                  build_weights, evaluate_model, generate_model)
from .imaging import AreaLabel, PGMFormatError, apply_mask, load_image, load_mask, save_image, save_mask
from .metrics import QualityScore, psnr, ssim
from .pipeline import (FsrConfig, IterationPlan, Reconstruction, block_count, fsr_fixed,
                       partition_areas, reconstruct_image, run_reconstruction)
from .sampling import MaskSpec, generate_quarter_mask, mask_density
from .texture import (BlockStats, TdConfig, allocate_iterations, block_variance,
                      normalize_variances, td_fsr, texture_plan)

__version__ = "0.1.0"
