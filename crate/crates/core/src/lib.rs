//! Two-path single-particle interferometry with arbitrary channels.
//!
//! A channel inserted into one path of an interferometer does not fix the
//! interference pattern: the missing data is the *gluing* that couples the
//! Kraus families of the two paths. This crate provides
//!
//! - Kraus/Choi algebra for channels, including canonical (linearly
//!   independent) representations ([`channels`]);
//! - the full parameterization of trace-preserving and LSP gluings of two
//!   channels, and their action on the two-path space ([`gluing`]);
//! - the three-stage interferometer, interference functions, and visibility
//!   measures ([`interferometer`]);
//! - reconstruction of unknown gluings from interference data, both in the
//!   standard and in the generalized setup ([`tomography`]);
//! - construction and classification of all unitary dilations of a channel,
//!   and the gluing each dilation induces ([`dilation`]);
//! - JSON/CSV interchange formats ([`io`]).

pub mod channels;
pub mod dilation;
pub mod error;
pub mod gluing;
pub mod interferometer;
pub mod io;
pub mod linalg;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::CMatrix;

/// Default tolerances. All comparisons use the max-entry absolute difference;
/// rank decisions use singular values relative to the largest one.
pub mod tol {
    /// Trace preservation: ‖Σ V†V − I‖_max.
    pub const TP: f64 = 1e-10;
    /// Hermiticity of density matrices.
    pub const HERM: f64 = 1e-10;
    /// Positive semidefiniteness: smallest eigenvalue ≥ −PSD.
    pub const PSD: f64 = 1e-10;
    /// Unit trace of density matrices.
    pub const TRACE: f64 = 1e-10;
    /// Linear independence: singular values below LI_REL·σ_max count as zero.
    pub const LI_REL: f64 = 1e-9;
    /// Gluing admissibility: min eig(I − CC†) ≥ −GLUING_PSD.
    pub const GLUING_PSD: f64 = 1e-9;
    /// Unitarity checks: ‖U†U − I‖_max.
    pub const UNITARY: f64 = 1e-10;
}
