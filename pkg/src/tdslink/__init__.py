"""TDS-OFDM baseband link simulator with sampling-phase analysis."""

__version__ = "0.1.0"

from .analysis import (
    BerMode,
    CriterionResult,
    PhaseGrid,
    awgn_phase_criterion,
    band_power_criterion,
    bpsk_theoretical_ber,
    chernoff_objective,
    default_phase_grid,
    rolloff_band,
    theoretical_ber,
    theoretical_ser,
)
from .channel import (
    AWGN_PROFILE,
    ChannelProfile,
    EquivResponse,
    add_awgn,
    apply_channel,
    awgn_response,
    equivalent_response,
    estimate_response_from_pn,
    load_profile,
    wrap_phase,
)
from .config import (
    ConfigError,
    CriterionOptions,
    McConfig,
    ScenarioConfig,
    load_scenario,
    scenario_fingerprint,
)
from .dsp import (
    SignalBuffer,
    SrrcSpec,
    dft,
    downsample,
    fractional_delay,
    idft,
    qfunc,
    raised_cosine_response,
    srrc_taps,
    upsample,
)
from .frame import (
    Constellation,
    FrameConfig,
    PnSequence,
    TdsFrame,
    build_frame,
    generate_pn,
    make_constellation,
    qam_demodulate,
    qam_modulate,
    transmit_chain,
)
from .montecarlo import (
    BerCurve,
    BerPoint,
    CriterionReport,
    Source,
    grid_search_ber_oracle,
    measure_chain_response,
    run_criterion,
    run_mc_ber,
    run_str_baseline,
    run_theory,
)
from .str_sync import (
    CorrelationTrace,
    StrLoopState,
    correlate_pn,
    str_track,
    timing_error,
)
