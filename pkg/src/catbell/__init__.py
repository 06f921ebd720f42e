"""Lossy-channel simulator for phase-entangled coherent states.

Two macroscopic coherent beams carry a shared phase flip; after fibre loss,
local displacement-based detection discriminates the flip unambiguously from
single-photon clicks.  The package tracks the exact few-branch superposition
through loss and interferometry, reduces the click statistics to closed
forms, cross-checks them against a truncated Fock-space oracle, simulates
coincidence counting, and plans link budgets for Bell-inequality tests.
"""

from .states import (
    Branch,
    SuperposedState,
    overlap,
    single_photon_amp,
    vacuum_amp,
    make_state,
    add_mode,
    inner_product,
    project_single_photon,
    project_vacuum,
)
from .optics import (
    BeamSplitterSpec,
    LossSpec,
    apply_beam_splitter,
    apply_loss,
    apply_loss_chain,
    apply_displacement,
    apply_phase,
)
from .protocols import (
    PROTOCOLS,
    CHSH_OPTIMAL_ANGLES,
    ProtocolParams,
    RateReport,
    build_source_state,
    build_analysis_state,
    compose_analysis_state,
    usd2_displacement,
    usd4_displacements,
    protocol_usd2,
    protocol_usd4,
    protocol_report,
    visibility,
    usd2_success_prob,
    usd4_success_prob,
    success_prob,
    chsh_s,
)
from .fock import (
    MAX_ORACLE_AMPLITUDE,
    OracleBudgetError,
    TruncationError,
    FockVector,
    TwoModeFock,
    coherent_fock,
    recommended_dim,
    displace_fock,
    beamsplitter_fock,
    displace_two_mode,
    oracle_protocol_prob,
)
from .experiment import (
    BELL_VISIBILITY_THRESHOLD,
    ChannelParams,
    DetectorSpec,
    CountingRates,
    RunResult,
    RangeResult,
    PhiOptimum,
    attenuate,
    counting_rates,
    accidental_rate,
    asymptotic_visibility,
    max_range,
    optimize_phi,
    monte_carlo_run,
    monte_carlo_blocks,
    visibility_estimate,
    chsh_margin,
)

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "SuperposedState",
    "overlap",
    "single_photon_amp",
    "vacuum_amp",
    "make_state",
    "add_mode",
    "inner_product",
    "project_single_photon",
    "project_vacuum",
    "BeamSplitterSpec",
    "LossSpec",
    "apply_beam_splitter",
    "apply_loss",
    "apply_loss_chain",
    "apply_displacement",
    "apply_phase",
    "PROTOCOLS",
    "CHSH_OPTIMAL_ANGLES",
    "ProtocolParams",
    "RateReport",
    "build_source_state",
    "build_analysis_state",
    "compose_analysis_state",
    "usd2_displacement",
    "usd4_displacements",
    "protocol_usd2",
    "protocol_usd4",
    "protocol_report",
    "visibility",
    "usd2_success_prob",
    "usd4_success_prob",
    "success_prob",
    "chsh_s",
    "MAX_ORACLE_AMPLITUDE",
    "OracleBudgetError",
    "TruncationError",
    "FockVector",
    "TwoModeFock",
    "coherent_fock",
    "recommended_dim",
    "displace_fock",
    "beamsplitter_fock",
    "displace_two_mode",
    "oracle_protocol_prob",
    "BELL_VISIBILITY_THRESHOLD",
    "ChannelParams",
    "DetectorSpec",
    "CountingRates",
    "RunResult",
    "RangeResult",
    "PhiOptimum",
    "attenuate",
    "counting_rates",
    "accidental_rate",
    "asymptotic_visibility",
    "max_range",
    "optimize_phi",
    "monte_carlo_run",
    "monte_carlo_blocks",
    "visibility_estimate",
    "chsh_margin",
    "__version__",
]
