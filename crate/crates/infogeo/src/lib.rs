//! Fisher-information geometry of directed graphical models.
//!
//! Two parameter families over a shared DAG core:
//! * bitnets: binary CPT networks with a diagonal Fisher metric,
//! * linear-gaussian networks: zero-mean, with a dense block metric.
//!
//! On top of the metric sit exact second-order jets, scalar curvature
//! (a dense tensor route and an O(d^2) diagonal shortcut), information
//! volumes and volume-averaged curvature (quadrature and Monte Carlo),
//! closed-form prediction records, and a geometric model-selection
//! score. The `infogeo-cli` crate exposes all of it as JSON commands.

pub mod bitnet;
pub mod curvature;
pub mod dag;
pub mod dataset;
pub mod error;
pub mod gaussian;
pub mod integrate;
pub mod jet;
pub mod model;
pub mod predictions;
pub mod quadrature;
pub mod scoring;

pub use error::{Error, Result};
