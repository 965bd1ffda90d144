use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::problem::PrimalDualPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub dis: Option<f64>,
    pub phi: Option<f64>,
    pub primal_residual_norm: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    /// Largest subproblem optimality residual reported by an inexact block
    /// solver during the run (0 when every block was solved exactly).
    pub max_subproblem_residual: f64,
    pub final_point: PrimalDualPoint,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn dis_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.dis).collect()
    }

    pub fn phi_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.phi).collect()
    }

    pub fn final_dis(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.dis)
    }
}
