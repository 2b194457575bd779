"""Feature-space vector total variation image restoration via split Bregman."""

from .degrade import NoiseSpec, apply_degradation, gaussian_noise, motion_blur_kernel
from .diffops import grad, grad_adjoint, shrink, shrink_iso, tv_aniso, tv_iso, vtv
from .errors import (
    ChannelMismatchError,
    ConfigError,
    DimensionMismatchError,
    NonFiniteError,
    SingularSymbolError,
    UnsupportedAngleError,
    VTVError,
)
from .fileio import quantize, read_image, read_pgm, write_image, write_pgm
from .frames import (
    FilterBank,
    analyze,
    bspline_bank,
    identity_bank,
    load_bank,
    save_bank,
    synthesize_adjoint,
    verify_uep,
)
from .image import (
    EPS_DENOM,
    conv_adjoint,
    conv_circular,
    kernel_flip,
    kernel_symbol,
    psnr,
    solve_diagonal,
)
from .solver import (
    ANISO,
    FULL13,
    ISO,
    REDUCED17,
    DegradationOp,
    SolveResult,
    SolverConfig,
    SplitBregman,
    energy,
    solve,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ANISO",
    "ChannelMismatchError",
    "ConfigError",
    "DegradationOp",
    "DimensionMismatchError",
    "EPS_DENOM",
    "FULL13",
    "FilterBank",
    "ISO",
    "NoiseSpec",
    "NonFiniteError",
    "REDUCED17",
    "SingularSymbolError",
    "SolveResult",
    "SolverConfig",
    "SplitBregman",
    "UnsupportedAngleError",
    "VTVError",
    "analyze",
    "apply_degradation",
    "bspline_bank",
    "conv_adjoint",
    "conv_circular",
    "energy",
    "gaussian_noise",
    "grad",
    "grad_adjoint",
    "identity_bank",
    "kernel_flip",
    "kernel_symbol",
    "load_bank",
    "motion_blur_kernel",
    "psnr",
    "quantize",
    "read_image",
    "read_pgm",
    "save_bank",
    "shrink",
    "shrink_iso",
    "solve",
    "solve_diagonal",
    "synthesize_adjoint",
    "tv_aniso",
    "tv_iso",
    "verify_uep",
    "vtv",
    "write_image",
    "write_pgm",
    "write_trace_csv",
]
