"""Adaptive nonlinear system identification with interpolated low-rank
tensor learners: CP-factorized lookup tensors (classical and interpolated),
tensor/FIR cascades for Hammerstein and Wiener systems, normalized
stochastic-gradient updates, benchmark scenarios, and arithmetic cost
accounting."""

from .cascades import LmstModel, TlmsModel, lmst_step_size, tlms_step_size
from .complexity import OpCount, cost, counted_forward
from .experiments import (
    ExperimentSpec,
    NmseSeries,
    experiment_spec,
    nmse,
    run_experiment,
    run_identification,
)
from .grid import Discretizer, InterpWeights, TapDelayLine
from .interpolation import (
    CellQuery,
    extract_subtensor,
    interp_decomposed,
    interp_subtensor,
)
from .models import (
    BasicInterpTensor,
    DecomposedInterpTensor,
    LmsFilter,
    LmsModel,
    TensorOnlyModel,
)
from .systems import InputProcess, UnknownSystem, add_noise_snr, apply_system, gen_ar1
from .tensors import (
    DenseTensor,
    FactorSet,
    ResourceLimitError,
    SubTensor,
    cpd_evaluate,
    hadamard_row_product,
    materialize,
    mode_vec_product,
)

__version__ = "0.1.0"
