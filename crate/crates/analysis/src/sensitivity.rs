use crate::{AnalysisError, AnalysisParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Param {
    LambdaVm,
    DeltaVm,
    TauTask,
    TauRb,
    ExX,
    ExY,
}

impl Param {
    pub const ALL: [Param; 6] = [
        Param::LambdaVm,
        Param::DeltaVm,
        Param::TauTask,
        Param::TauRb,
        Param::ExX,
        Param::ExY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::LambdaVm => "lambda_vm",
            Param::DeltaVm => "delta_vm",
            Param::TauTask => "tau_task",
            Param::TauRb => "tau_rb",
            Param::ExX => "ex_x",
            Param::ExY => "ex_y",
        }
    }

    pub fn get(self, p: &AnalysisParams) -> f64 {
        match self {
            Param::LambdaVm => p.lambda_vm,
            Param::DeltaVm => p.delta_vm,
            Param::TauTask => p.tau_task,
            Param::TauRb => p.tau_rb,
            Param::ExX => p.ex_x,
            Param::ExY => p.y_p,
        }
    }

    pub fn set(self, p: &mut AnalysisParams, v: f64) {
        match self {
            Param::LambdaVm => p.lambda_vm = v,
            Param::DeltaVm => p.delta_vm = v,
            Param::TauTask => p.tau_task = v,
            Param::TauRb => p.tau_rb = v,
            Param::ExX => p.ex_x = v,
            Param::ExY => p.y_p = v,
        }
    }
}

/// Box constraints `(lo, hi)` on the six PR parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lambda_vm: (f64, f64),
    pub delta_vm: (f64, f64),
    pub tau_task: (f64, f64),
    pub tau_rb: (f64, f64),
    pub ex_x: (f64, f64),
    pub ex_y: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            lambda_vm: (0.0, 0.2),
            delta_vm: (0.0, 45.0),
            tau_task: (5.0, 100.0),
            tau_rb: (1.0, 100.0),
            ex_x: (0.0, 0.2),
            ex_y: (0.0, 0.2),
        }
    }
}

impl Bounds {
    pub fn of(&self, param: Param) -> (f64, f64) {
        match param {
            Param::LambdaVm => self.lambda_vm,
            Param::DeltaVm => self.delta_vm,
            Param::TauTask => self.tau_task,
            Param::TauRb => self.tau_rb,
            Param::ExX => self.ex_x,
            Param::ExY => self.ex_y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Sensitivity {
    pub param: Param,
    pub partial: f64,
    pub magnitude: f64,
}

/// Closed-form partials of PR, in `Param::ALL` order.
pub fn pr_gradient(p: &AnalysisParams) -> [f64; 6] {
    let l = p.lambda_vm;
    let s = p.s_parallel;
    let ds = p.delta_vm * s;
    let x = p.ex_x;
    let y = p.ex_y();
    [
        ds - p.tau_task - (p.tau_task + p.tau_rb) * x - ds * y,
        l * s * (1.0 - y),
        -l * (1.0 + x),
        -l * x,
        -l * (p.tau_task + p.tau_rb),
        -(l * ds - 1.0),
    ]
}

/// Partials of PR at the bound-constrained maximizer, largest magnitude first.
pub fn sensitivity(p: &AnalysisParams, bounds: &Bounds) -> Result<Vec<Sensitivity>, AnalysisError> {
    if Param::ALL.iter().all(|&k| {
        let (lo, hi) = bounds.of(k);
        hi <= lo
    }) {
        return Err(AnalysisError::EmptyActiveSet);
    }
    for k in Param::ALL {
        let (lo, hi) = bounds.of(k);
        if !(lo <= hi) {
            return Err(AnalysisError::Invalid(k.name()));
        }
    }
    let mut q = p.clone();
    Param::DeltaVm.set(&mut q, bounds.delta_vm.1);
    Param::TauTask.set(&mut q, bounds.tau_task.0);
    Param::TauRb.set(&mut q, bounds.tau_rb.0);
    Param::ExX.set(&mut q, bounds.ex_x.0);
    Param::ExY.set(&mut q, bounds.ex_y.0);
    // PR is affine in λ once the others are fixed
    let d_lambda = pr_gradient(&q)[0];
    let lam = if d_lambda > 0.0 {
        bounds.lambda_vm.1
    } else {
        bounds.lambda_vm.0
    };
    Param::LambdaVm.set(&mut q, lam);
    let grad = pr_gradient(&q);
    let mut out: Vec<Sensitivity> = Param::ALL
        .iter()
        .zip(grad)
        .map(|(&param, partial)| Sensitivity {
            param,
            partial,
            magnitude: partial.abs(),
        })
        .collect();
    out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pr_at;

    fn pr(p: &AnalysisParams) -> f64 {
        pr_at(p.lambda_vm, p.delta_vm, p.s_parallel, p.tau_task, p.tau_rb, p.ex_x, p.ex_y())
    }

    #[test]
    fn tau_partial_matches_difference() {
        let mut p = AnalysisParams::default();
        p.ex_x = 0.1;
        p.y_p = 0.05;
        let h = 1e-6 * p.tau_task;
        let mut a = p.clone();
        let mut b = p.clone();
        a.tau_task += h;
        b.tau_task -= h;
        let fd = (pr(&a) - pr(&b)) / (2.0 * h);
        let g = pr_gradient(&p)[2];
        assert!((fd - g).abs() < 1e-6);
        assert!((g + p.lambda_vm * (1.0 + p.ex_x)).abs() < 1e-15);
    }

    #[test]
    fn zero_width_bounds() {
        let b = Bounds {
            lambda_vm: (0.1, 0.1),
            delta_vm: (45.0, 45.0),
            tau_task: (5.0, 5.0),
            tau_rb: (1.0, 1.0),
            ex_x: (0.0, 0.0),
            ex_y: (0.0, 0.0),
        };
        assert_eq!(
            sensitivity(&AnalysisParams::default(), &b),
            Err(AnalysisError::EmptyActiveSet)
        );
    }

    #[test]
    fn optimum_point_partials() {
        let s = sensitivity(&AnalysisParams::default(), &Bounds::default()).unwrap();
        let get = |k: Param| s.iter().find(|e| e.param == k).unwrap().partial;
        assert!((get(Param::ExY) + 8.0).abs() < 1e-12);
        assert!((get(Param::LambdaVm) - 40.0).abs() < 1e-12);
        assert!((get(Param::ExX) + 1.2).abs() < 1e-12);
        assert!(s.windows(2).all(|w| w[0].magnitude >= w[1].magnitude));
    }
}
