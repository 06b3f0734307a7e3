//! Stokes flow between two nearly touching rigid inclusions.
//!
//! * [`aux_fields`]: closed-form auxiliary velocity/pressure pairs in the neck.
//! * [`stokes_mfs`]: Stokeslet collocation solver for Dirichlet and force/torque-free problems.
//! * [`rigid_system`]: coupling matrix, rigid constants, Cauchy stress, blow-up functionals.
//! * [`asymptotics`]: gap sweeps, blow-up rate fits, envelope checks.
//! * [`config`] and [`cli`]: run configuration and the command-line front end.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod aux_fields;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod rigid;
pub mod rigid_system;
pub mod stokes_mfs;

pub use error::{Error, Result};
