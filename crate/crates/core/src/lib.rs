//! Traveltime kinematics of layered media.
//!
//! The crate covers three connected pieces of machinery:
//!
//! * forward modeling of reflected and diving (refracted) rays through a
//!   smooth layered wave speed c(z), in both the depth domain and the
//!   slowness-distribution (q) domain;
//! * the explicit Herglotz-Wiechert inversion of diving-ray traveltimes,
//!   together with the singular system of the underlying Abel transform;
//! * the spectral conditioning analysis of the reflected-ray problem:
//!   Hankel moment sections in extended precision, their eigenvalue
//!   decay, condition-number bound curves, and the moment-matching
//!   ambiguity construction.
//!
//! The `layertomo` binary exposes the same functionality as subcommands;
//! see the crate README.

pub mod abel_diving;
pub mod cli;
pub mod error;
pub mod extprec;
pub mod fredholm_spectral;
pub mod interp;
pub mod moment_ambiguity;
pub mod quad;
pub mod ray_kinematics;
pub mod velocity_model;

#[cfg(test)]
pub(crate) mod testutil;

pub use abel_diving::{abel_forward, abel_square_kernel_check, herglotz_invert, HerglotzOptions};
pub use error::{Error, Result};
pub use fredholm_spectral::{SlownessGeometry, SpectralReport};
pub use moment_ambiguity::{
    ambiguity_tolerances, construct_equivalent_profile, odd_moments, traveltime_taylor,
    EquivalentProfileOptions, MomentVector, PerturbationBasis, PolyBumpBasis,
};
pub use ray_kinematics::{
    diving_solution, offset_reflected, q_integral_check, traveltime_curve_to_slowness,
    traveltime_reflected, RayKind, RaySolution,
};
pub use velocity_model::{rearrange_profile, sdf, SdfDensity, VelocityProfile};
