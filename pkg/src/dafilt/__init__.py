"""Bit-accurate distributed-arithmetic LMS adaptive filter model."""

from .cost_model import CostReport, estimate, estimate_obc_even_odd
from .da_core import (
    AccumulatorOverflow,
    CycleRecord,
    CycleTrace,
    DaFilterState,
    form_error,
    output,
    output_obc,
    output_tc,
    step,
    update_obc,
    update_tc,
)
from .fixed_point import (
    CoeffBits,
    FormatError,
    Fx,
    fit,
    quantize,
    reconstruct_obc,
    reconstruct_tc,
    slice_obc,
    slice_tc,
    to_real,
)
from .lut_engine import LutBank, ObcLut, TcLut, bank_build, build_obc, build_tc
from .sim_harness import (
    ConfigError,
    ExperimentConfig,
    LearningCurve,
    RunResult,
    generate_trial,
    make_filter,
    reference_lms,
    reference_lms_float,
    run,
)
from .variants import BlmsState, DlmsState, blms_step, dlms_step
from .verify import VerifyReport, verify

__all__ = [
    "AccumulatorOverflow",
    "BlmsState",
    "CoeffBits",
    "ConfigError",
    "CostReport",
    "CycleRecord",
    "CycleTrace",
    "DaFilterState",
    "DlmsState",
    "ExperimentConfig",
    "FormatError",
    "Fx",
    "LearningCurve",
    "LutBank",
    "ObcLut",
    "RunResult",
    "TcLut",
    "VerifyReport",
    "bank_build",
    "blms_step",
    "build_obc",
    "build_tc",
    "dlms_step",
    "estimate",
    "estimate_obc_even_odd",
    "fit",
    "form_error",
    "generate_trial",
    "make_filter",
    "output",
    "output_obc",
    "output_tc",
    "quantize",
    "reconstruct_obc",
    "reconstruct_tc",
    "reference_lms",
    "reference_lms_float",
    "run",
    "slice_obc",
    "slice_tc",
    "step",
    "to_real",
    "update_obc",
    "update_tc",
    "verify",
]
