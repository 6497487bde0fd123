//! Part-based parametric human body model toolkit.
//!
//! The pipeline, end to end:
//!
//! 1. Segment a whole-body template mesh into named parts by blend-weight
//!    argmax, then dilate each part over the mesh graph so adjacent parts
//!    share overlap regions ([`template`]).
//! 2. Train a per-part linear shape model (orthonormal basis + mean) with an
//!    adaptive dimension rule, plus a least-squares joint regressor
//!    ([`shape`], [`train`]).
//! 3. Fit per-part global transforms and shape parameters to ground-truth
//!    meshes and verify recovery ([`annotate`]).
//! 4. Decode parts from parameters and connect adjacent visible parts into
//!    one mesh using topology-distance blending ([`fuse`]).
//! 5. Evaluate the training losses and the partial-visibility benchmark
//!    metrics ([`losses`], [`pv`]).
//!
//! A deterministic synthetic articulated body ([`synth`]) supplies desk-scale
//! data for all of the above, so the whole pipeline runs without any external
//! dataset.
//!
//! With the default `parallel` feature, per-part and per-sample work is
//! distributed with rayon; results are bitwise identical to the sequential
//! fallback because all parallel maps preserve element order and no
//! floating-point reduction order changes.

pub mod annotate;
pub mod bundle;
pub mod error;
pub mod fuse;
pub mod losses;
pub mod mesh;
pub mod numeric;
pub mod parts;
pub mod pv;
pub mod rotation;
pub mod shape;
pub mod synth;
pub mod template;
pub mod train;
pub mod transform;

pub use error::{Error, Result};
