"""Delay-robust dynamic output feedback for decomposable networked systems
with switching interconnection topology.

Pipeline: decompose the network into modal subsystems, reduce to a
parameter-varying loop, certify fading-memory constants via gridded LMIs,
compute the explicit admissible delay bound, and simulate the closed loop.
"""

from .certificates import (
    DwellSpec,
    FadingMemoryConstants,
    InfeasibleError,
    LmiCertificate,
    fading_constants,
    min_eta,
    search_certificate,
    verify_certificate,
)
from .decomposition import (
    DecomposableMatrixSpec,
    DecomposablePlant,
    GainSchedule,
    LpvPlant,
    ModalFamily,
    PatternPair,
    assemble_full,
    closed_loop_families,
    coords_to_modal,
    coords_to_network,
    decompose,
    lift_gains,
    pattern_eval,
    to_lpv,
)
from .delay_bound import (
    DelayMargin,
    FanOutWitness,
    check_fanout,
    delay_margin,
    small_gain_matrix,
    sup_norm,
    tau_bound,
)
from .linalg import (
    NotCommutingError,
    NotSymmetricError,
    commute_defect,
    induced_norm2,
    kron,
    schur_2x2_nonneg,
    sym_eig,
    simultaneous_diagonalize,
)
from .simulate import (
    DelayProfile,
    SwitchingSignal,
    TrajectoryRecord,
    consensus_gap,
    gen_switching,
    simulate_lpv_closed_loop,
    simulate_network,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
