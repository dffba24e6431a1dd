//! Closed-form and numerical performance models for optimistic lookahead.
//!
//! All functions are pure. Times are in the caller's unit (milliseconds in
//! the original parameter sets) and rates in the reciprocal unit.

mod overhead;
mod parallel;
mod partition;
pub mod quad;
mod rate;
mod sensitivity;

pub use overhead::{
    accumulated_error, beam_alpha, beta_analytic, chebycheff_pot, inter_rollback_time,
    polling_overhead, utility, AccumulatedError, BetaForms, PositionError,
};
pub use parallel::{erlang_cdf, erlang_pdf, s_parallel, t_async, t_seq};
pub use partition::{optimal_partition, slp_partition_time, SlpTask};
pub use rate::{
    binomial_pmf, cache_speedup, eta, gammas, lookahead_stats, phase_probabilities,
    prediction_rate, pr_at, time_averaged, LookaheadStats, PhaseProbabilities,
};
pub use sensitivity::{pr_gradient, sensitivity, Bounds, Param, Sensitivity};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("virtual message rate must be non-zero")]
    ZeroRate,
    #[error("invalid parameter {0}")]
    Invalid(&'static str),
    #[error("integral did not converge")]
    NonConvergent,
    #[error("prediction rate is undefined")]
    UndefinedRate,
    #[error("bounds leave no active constraint")]
    EmptyActiveSet,
}

/// The symbol set of the analytical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub lambda_vm: f64,
    pub delta_vm: f64,
    pub tau_task: f64,
    pub tau_rb: f64,
    pub ex_x: f64,
    /// Number of messages behind the out-of-tolerance proportion Y.
    pub y_n: u32,
    /// Per-message out-of-tolerance probability; E[Y] = y_p.
    pub y_p: f64,
    pub s_parallel: f64,
    pub big_lambda: f64,
    pub theta: f64,
    pub sigma2: f64,
    pub c_offset: f64,
    pub cache_read: f64,
    pub c_r: f64,
    pub p_procs: u32,
    pub k_stages: u32,
    pub mu: f64,
    pub r_m: f64,
    pub n_lps: u32,
    pub phi_s: f64,
    pub phi_w: f64,
    pub phi_b: f64,
    pub d: f64,
    pub beam_theta: f64,
    pub h_ratio: f64,
    /// Lookahead cycle length; derived from Λ and PR when absent.
    pub t_l: Option<f64>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            lambda_vm: 0.1,
            delta_vm: 45.0,
            tau_task: 5.0,
            tau_rb: 1.0,
            ex_x: 0.0,
            y_n: 10,
            y_p: 0.0,
            s_parallel: 1.0,
            big_lambda: 30.0,
            theta: 2.0,
            sigma2: 1.0,
            c_offset: 0.0,
            cache_read: 2.29,
            c_r: 8.0 / 2.29,
            p_procs: 1,
            k_stages: 1,
            mu: 1.0,
            r_m: 2.0 / 30.0,
            n_lps: 2,
            phi_s: 1.0,
            phi_w: 1.0,
            phi_b: 1.0,
            d: 100.0,
            beam_theta: 0.0175,
            h_ratio: 9.0,
            t_l: None,
        }
    }
}

impl AnalysisParams {
    pub fn ex_y(&self) -> f64 {
        self.y_p
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let non_neg = [
            (self.lambda_vm, "lambda_vm"),
            (self.delta_vm, "delta_vm"),
            (self.tau_task, "tau_task"),
            (self.tau_rb, "tau_rb"),
            (self.big_lambda, "big_lambda"),
            (self.theta, "theta"),
            (self.sigma2, "sigma2"),
            (self.cache_read, "cache_read"),
            (self.mu, "mu"),
            (self.r_m, "r_m"),
        ];
        for (v, name) in non_neg {
            if !(v >= 0.0) {
                return Err(AnalysisError::Invalid(name));
            }
        }
        if !(0.0..=1.0).contains(&self.ex_x) {
            return Err(AnalysisError::Invalid("ex_x"));
        }
        if !(0.0..=1.0).contains(&self.y_p) {
            return Err(AnalysisError::Invalid("y_p"));
        }
        if self.p_procs < 1 || self.k_stages < 1 {
            return Err(AnalysisError::Invalid("p_procs/k_stages"));
        }
        Ok(())
    }
}
