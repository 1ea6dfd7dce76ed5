//! Mutually unbiased bases over prime-power dimensions, a linear-optics model
//! of the cascaded delay-interferometer analyzer for time-bin states, and
//! asymptotic key-rate analysis for the `(d+1)`-basis QKD protocol.

pub mod export;
pub mod galois;
pub mod matrix;
pub mod mub;
pub mod optics;
pub mod protocol;
pub mod security;
