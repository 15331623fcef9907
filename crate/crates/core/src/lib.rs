//! Correlation-inequality workbench.
//!
//! Sums of squares of odd-length ±1 linear forms are expanded into Bell,
//! contextuality, Leggett-Garg and hybrid spatio-temporal inequalities
//! ([`poly`]). Their classical bounds are checked by enumeration and linear
//! programming ([`lhv`]), their quantum values by exact qubit algebra
//! ([`quantum`]) and numerical search ([`optimize`]), and the hybrid
//! measurement protocol by shot-level simulation ([`protocol`]).

pub mod dsl;
pub mod poly;
pub mod lhv;
pub mod quantum;
pub mod protocol;
pub mod optimize;
pub mod report;
