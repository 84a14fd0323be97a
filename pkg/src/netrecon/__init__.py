"""Network topology reconstruction from noisy consensus dynamics."""

from .consensus import SimConfig, TimeSeriesMatrix, simulate_consensus
from .errors import (
    EstimationError,
    InstabilityError,
    NetReconError,
    NumericalError,
    OutputError,
    ParameterError,
    ReconstructionError,
)
from .graph import (
    Graph,
    GeneratorParams,
    LaplacianSpectrum,
    gen_erdos_renyi,
    gen_grid,
    gen_pipeline,
    gen_small_world,
    generate,
    lambda_max,
    laplacian,
    pseudoinverse,
    spectrum,
)
from .noise import NoiseConfig, PowerSpectrum, Signal, gen_hf_noise, low_pass, psd
from .probe import EigenvalueEstimate, estimate_eigenvalues_fft, estimate_lambda_max
from .reconstruction import (
    ReconstructionResult,
    ThresholdSweep,
    correlation_matrix,
    count_errors,
    estimate_laplacian,
    g_trace,
    reconstruct_by_eigenvalue,
)

__version__ = "0.1.0"
