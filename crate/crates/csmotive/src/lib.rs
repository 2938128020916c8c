//! File formats, clients, the annotation server and the `csmotive` CLI on
//! top of [`csmotive_core`].

pub mod cli;
pub mod config;
pub mod io;
pub mod remote;
pub mod server;
pub mod store;
pub mod translation;

pub use csmotive_core as core;
