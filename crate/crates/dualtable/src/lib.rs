pub mod attached;
pub mod bench;
pub mod calibrate;
pub mod catalog;
pub mod config;
pub mod counters;
pub mod error;
pub mod fault;
pub mod engine;
pub mod master;
pub mod script;
pub mod union;
