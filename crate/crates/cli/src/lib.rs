//! Scenario runner, calibration and reporting for the ping-pong QKD
//! simulator; the `pingpong` binary is a thin wrapper over [`scenarios`].

pub mod calibrate;
pub mod config;
pub mod logo;
pub mod output;
pub mod report;
pub mod scenarios;
