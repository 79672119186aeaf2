//! Independent numerical checks: the discrete Wright-Fisher chain, a
//! finite-difference residual of the backward equation, and probes of
//! continuity across strata.

mod mc;
mod probes;

pub use mc::{
    mc_backward_estimate, pairwise_sum, simulate_discrete_wf, MCConfig, MCEstimate, StratumFunction,
};
pub use probes::{continuity_probe, pde_residual, ProbeResult, SpaceTimeFunction, PROBE_EPSILONS};
