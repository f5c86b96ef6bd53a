//! Certified experiments on the Fibonacci tent map and its power-law
//! conjugates.
//!
//! The slope `λ_F` is solved from its kneading sequence, the critical orbit
//! is cached as [`numerics::Ball`]s, and everything downstream (partitions,
//! the invariant measure, derivative cocycles, recurrence rates) is read off
//! that cache.

pub mod conjugacy;
pub mod error;
pub mod kneading;
pub mod lyapunov;
pub mod measure;
pub mod natext;
pub mod numerics;
pub mod par;
pub mod postcritical;
pub mod recurrence;
pub mod report;

pub use error::{Error, Result};
pub use numerics::{Ball, PrecisionPolicy, SignCertificate};
