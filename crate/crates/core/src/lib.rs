//! Set-based reachability, contact constraints and receding-horizon planning
//! for carrying an unsecured object on a tray with a serial arm.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod controller;
pub mod dump;
pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod planlog;
pub mod planner;
pub mod scenario;
pub mod setops;
pub mod traj;
pub mod verify;

pub use error::{Error, Result};
