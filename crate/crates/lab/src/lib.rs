pub mod analysis;
pub mod battery;
pub mod config;
pub mod io;
pub mod prop4;
pub mod scenarios;
pub mod stats;
pub mod svg;
