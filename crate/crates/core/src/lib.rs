//! Social-graph analysis of face collections.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`ingest`] parses face records, image metadata and the enrollment list.
//! 2. [`enrollment`] matches faces to subjects and builds the presence matrix.
//! 3. [`connectivity`] scores every subject pair.
//! 4. [`layout`] places subjects in 2-D so distance tracks lack of connectivity.
//! 5. [`graphdoc`] styles nodes and edges and exports JSON and SVG.
//!
//! [`pipeline`] chains all of them; [`synth`] generates planted-community fixtures.

pub mod connectivity;
pub mod enrollment;
pub mod expression;
pub mod geometry;
pub mod ingest;
pub mod layout;
mod matrix_serde;
pub mod graphdoc;
pub mod pipeline;
pub mod synth;
