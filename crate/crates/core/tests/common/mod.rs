//! Independent reference implementations used as test oracles. They favour
//! obviousness over speed and share no code with the library.
#![allow(dead_code)]

pub mod fixture_run;
pub mod hdbscan_naive;
pub mod oracles;
pub mod scoring;
pub mod storefront;
