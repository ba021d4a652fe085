"""Monte Carlo simulator for merging-based and swapping-based repeater chains.

The merging-based protocol grows one-dimensional cluster states with
type-I fusions and repairs entanglement gaps left by failed fusions; the
swapping-based baseline connects Bell pairs at every second station.
Both samplers record a replayable operation trace and per-memory storage
times, a Pauli-propagation noise engine (checked against a dense
density-matrix oracle) turns those into QBERs, and the statistics layer
reports raw rate, secret key fraction, and secret key rate.
"""

from .backend import backend_name, sample_generator
from .config import ProtocolConfig
from .errors import ConfigError, RepeaterSimError, RoundCapExceeded, TraceError
from .keyrate_stats import (
    RunStatistics,
    aggregate,
    binary_entropy,
    generation_probability,
    raw_rate,
    secret_key_fraction,
)
from .noise_engine import (
    BellDiagonalState,
    DephasingChannel,
    PauliString,
    compose_dephasing,
    dephasing_lambda,
    output_state,
    propagate_z,
    qber,
)
from .exact_oracle import bell_diagonal_of, simulate_trace_dense
from .protocol_mb import SampleOutcome, mb_sample, sample_elementary
from .protocol_sb import sb_sample
from .runner import SweepSpec, run_sweep, simulate
from .traces import (
    Hadamard,
    MemoryLedger,
    MergeFailureErase,
    MergeSuccess,
    MeasureY,
    MeasureZ,
    OperationTrace,
    trace_from_json,
    trace_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "sample_generator",
    "ProtocolConfig",
    "RepeaterSimError",
    "ConfigError",
    "TraceError",
    "RoundCapExceeded",
    "RunStatistics",
    "aggregate",
    "binary_entropy",
    "generation_probability",
    "raw_rate",
    "secret_key_fraction",
    "BellDiagonalState",
    "DephasingChannel",
    "PauliString",
    "compose_dephasing",
    "dephasing_lambda",
    "output_state",
    "propagate_z",
    "qber",
    "bell_diagonal_of",
    "simulate_trace_dense",
    "SampleOutcome",
    "mb_sample",
    "sample_elementary",
    "sb_sample",
    "SweepSpec",
    "run_sweep",
    "simulate",
    "OperationTrace",
    "MemoryLedger",
    "MergeSuccess",
    "MergeFailureErase",
    "MeasureZ",
    "MeasureY",
    "Hadamard",
    "trace_from_json",
    "trace_to_json",
]
