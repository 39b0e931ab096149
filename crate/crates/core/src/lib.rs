//! Lossless compression of categorical tables through estimated row and
//! column latents.
//!
//! The pipeline estimates a latent label for every row and column
//! ([`latent`]), splits the table into latent-homogeneous blocks, and codes
//! each block and both label vectors with a base compressor ([`codecs`]),
//! framed by the [`container`] format. [`model`] and [`rate`] provide the
//! generative model and the closed-form rate predictions used to check the
//! compressor against theory.

pub mod bench;
pub mod codecs;
pub mod container;
pub mod error;
pub mod ingest;
pub mod latent;
pub mod model;
pub mod rate;
pub mod rng;

pub use codecs::CodecId;
pub use container::{compress, decompress, drr, CompressConfig};
pub use error::{Error, Result};
pub use latent::{estimate_latents, ClusterMethod, SpectralConfig};
pub use model::{sample_table, sbm_params, Alphabet, LatentAssignment, ModelParams, Table};
