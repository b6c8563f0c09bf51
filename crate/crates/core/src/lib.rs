//! Risk-aware dispatch of residential PV inverters.

pub mod conic;
pub mod dispatch;
pub mod feeder;
pub mod formulation;
pub mod par;
pub mod scenario;
pub mod solver;
pub mod validate;
