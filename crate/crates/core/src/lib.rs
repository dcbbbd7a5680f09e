//! Models long-haul fiber infrastructure as a weighted geospatial graph and
//! runs latency analyses over it: shortest-path stretch, latency-optimal
//! network design with wavelength-lease pricing, optical overhead envelopes,
//! stitching of raw fiber segments into routes, and RTT inflation over the
//! speed of light in fiber.

pub mod cli;
pub mod config;
pub mod cost;
pub mod design;
pub mod error;
pub mod fiber_graph;
pub mod geo;
pub mod latency;
pub mod measurements;
pub mod route_stitch;
pub mod stats;
pub mod stretch;

pub use error::{Error, Result};
pub use fiber_graph::{Conduit, Endpoint, FiberGraph, PathResult, Route};
pub use geo::{BoundingBox, GeoPoint};
