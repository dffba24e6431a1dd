use crate::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlpTask {
    /// Mean execution time, μ⁻¹.
    pub mean_time: f64,
    pub p_rollback: f64,
    pub rb_time: f64,
}

fn group_time(tasks: &[SlpTask]) -> f64 {
    let m: f64 = tasks.iter().map(|t| t.mean_time).sum();
    let p: f64 = tasks.iter().map(|t| t.p_rollback).sum();
    let r: f64 = tasks.iter().map(|t| t.rb_time).sum();
    m + m * p * r
}

/// Expected time of `tasks` split into consecutive groups of the given sizes.
pub fn slp_partition_time(tasks: &[SlpTask], groups: &[usize]) -> Result<f64, AnalysisError> {
    if groups.iter().any(|&g| g == 0) || groups.iter().sum::<usize>() != tasks.len() {
        return Err(AnalysisError::Invalid("grouping"));
    }
    let mut start = 0;
    let mut total = 0.0;
    for &g in groups {
        total += group_time(&tasks[start..start + g]);
        start += g;
    }
    Ok(total)
}

/// Exhaustive search over the contiguous groupings. Returns group sizes.
pub fn optimal_partition(tasks: &[SlpTask]) -> Result<Vec<usize>, AnalysisError> {
    let n = tasks.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > 30 {
        return Err(AnalysisError::Invalid("too many tasks"));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        // bit i set: cut after task i
        let mut sizes = Vec::new();
        let mut run = 1;
        for i in 0..n - 1 {
            if mask & (1 << i) != 0 {
                sizes.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        sizes.push(run);
        let t = slp_partition_time(tasks, &sizes)?;
        let better = match &best {
            None => true,
            Some((bt, bs)) => t < *bt || (t == *bt && sizes.len() < bs.len()),
        };
        if better {
            best = Some((t, sizes));
        }
    }
    Ok(best.map(|b| b.1).unwrap_or_default())
}
