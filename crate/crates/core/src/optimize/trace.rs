use std::fmt::Write;

use crate::qp::QpStatus;

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Stationary,
    MaxOuter,
    StepFailure(String),
}

impl Termination {
    pub fn as_str(&self) -> &str {
        match self {
            Self::Stationary => "stationary",
            Self::MaxOuter => "max_outer",
            Self::StepFailure(_) => "step_failure",
        }
    }
}

/// One outer iteration. `t`, `k`, `phi_t` and the quality fields are only
/// meaningful when `accepted` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub phi0: f64,
    pub slope: f64,
    pub t0: f64,
    pub t: f64,
    pub k: usize,
    pub phi_t: f64,
    pub max_c: f64,
    /// `√|J'(V)|`
    pub grad_norm: f64,
    pub m: f64,
    pub max_multiplier: f64,
    pub qp_status: QpStatus,
    pub qp_iterations: usize,
    pub min_det: f64,
    pub max_det: f64,
    pub max_norm: f64,
    pub quality_rejections: usize,
    pub accepted: bool,
}

impl Default for IterationRecord {
    fn default() -> Self {
        Self {
            iter: 0,
            objective: f64::NAN,
            phi0: f64::NAN,
            slope: f64::NAN,
            t0: f64::NAN,
            t: f64::NAN,
            k: 0,
            phi_t: f64::NAN,
            max_c: f64::NAN,
            grad_norm: f64::NAN,
            m: f64::NAN,
            max_multiplier: 0.0,
            qp_status: QpStatus::Solved,
            qp_iterations: 0,
            min_det: f64::NAN,
            max_det: f64::NAN,
            max_norm: f64::NAN,
            quality_rejections: 0,
            accepted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl Default for OptTrace {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            termination: Termination::MaxOuter,
        }
    }
}

impl OptTrace {
    pub const CSV_HEADER: &'static str = "iter,J,phi0,slope,t,k,maxC,gradnorm,M,qp_status";

    /// Number of accepted steps.
    pub fn accepted_steps(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    /// Objective at the last recorded iterate.
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let (t, k) = if r.accepted {
                (format!("{:.17e}", r.t), r.k.to_string())
            } else {
                (String::new(), String::new())
            };
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{}",
                r.iter,
                r.objective,
                r.phi0,
                r.slope,
                t,
                k,
                r.max_c,
                r.grad_norm,
                r.m,
                r.qp_status.as_str()
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let trace = OptTrace {
            records: vec![
                IterationRecord {
                    iter: 1,
                    objective: 1.0,
                    t: 0.5,
                    k: 2,
                    accepted: true,
                    ..IterationRecord::default()
                },
                IterationRecord {
                    iter: 2,
                    ..IterationRecord::default()
                },
            ],
            termination: Termination::Stationary,
        };
        let csv = trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], OptTrace::CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 10));
        assert!(lines[1].contains(",2,"));
        assert_eq!(trace.accepted_steps(), 1);
    }
}
