//! Analysis, synthesis and approximate reconstruction on periodic grids.

mod analysis;
mod coeffs;
mod dual;
mod field;
mod signals;

pub use analysis::{
    analyze, analyze_direct, analyze_with, band_indices, band_weight, frame_operator,
    frame_operator_frequency_check, packet_frequency, synthesize, synthesize_with,
    AnalysisOptions, FrameResidual, Strategy, ALIGN_TOL,
};
pub use coeffs::{Band, BandCoefficients, CoefficientSet, PacketIndex};
pub use field::{Domain, Field};
pub use signals::{band_limited_field, localized_noise, BandLimitedSpec};
pub use dual::{
    apply_inverse_symbol, approx_reconstruct, build_dual, dual_symbol_on, smoothstep, DualWindowSpec, Reconstruction,
    STAR_SCAN_N,
};
