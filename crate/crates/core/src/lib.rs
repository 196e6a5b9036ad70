//! Time-domain renderer for dynamic virtual acoustic scenes.
//!
//! Scenes contain moving point sources, first-order-Ambisonics diffuse
//! sources, polygonal reflectors and obstacles, and receivers in several
//! render formats. Audio is processed in blocks; geometry is evaluated at
//! block boundaries and simulation coefficients are interpolated in
//! between, which yields Doppler shift and time-variant comb filtering
//! directly from the delay-line model. A benchmark harness measures the
//! render cost and fits a five-term model that predicts the maximum
//! source count for a target CPU load.

pub mod bench;
pub mod engine;
pub mod geometry;
pub mod imagesource;
pub mod receivers;
pub mod scenedef;
pub mod transmission;
pub mod wav;

/// Audio sample type used on the processing path.
pub type Sample = f32;
