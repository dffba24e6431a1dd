use std::io::Write;

use vnc_petri::{
    gsv, normalized_sigma, p_oo, parse_net, propagate_tolerance, synchronic_distance, PetriError,
    PetriNet, Synchronic, ToleranceVector,
};

use crate::{CliError, PetriArgs};

impl From<PetriError> for CliError {
    fn from(e: PetriError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn indices(net: &PetriNet, names: &[String]) -> Result<Vec<usize>, CliError> {
    names.iter().map(|n| Ok(net.transition(n)?)).collect()
}

fn show(s: Synchronic) -> String {
    match s {
        Synchronic::Bounded(v) => v.to_string(),
        Synchronic::Unbounded => "unbounded".into(),
        Synchronic::Inconclusive { range_so_far } => format!("inconclusive (>= {range_so_far})"),
    }
}

pub fn command(a: &PetriArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.net)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.net.display())))?;
    let file = parse_net(&text)?;
    let net = if a.pt { file.net } else { file.net.into_ce()? };
    let g = gsv(&net, a.depth)?;
    writeln!(out, "GSV {}", show(g))?;
    if a.t1.is_empty() != a.t2.is_empty() {
        return Err(CliError::Usage("--t1 and --t2 go together".into()));
    }
    if !a.t1.is_empty() {
        let s = synchronic_distance(&net, &indices(&net, &a.t1)?, &indices(&net, &a.t2)?, a.depth)?;
        writeln!(out, "sigma({}; {}) {}", a.t1.join(","), a.t2.join(","), show(s))?;
        if let (Some(sv), Some(gv)) = (s.value(), g.value()) {
            if gv > 0 && sv <= gv {
                let n = normalized_sigma(sv as f64, gv as f64)?;
                writeln!(out, "sigma_n {n:.6}")?;
                writeln!(out, "P_oo {:.6}", p_oo(n)?)?;
            }
        }
    }
    if !a.fire.is_empty() {
        let tol = ToleranceVector::from_named(&net, &file.tolerance)?;
        let seq = indices(&net, &a.fire)?;
        let steps = propagate_tolerance(&net, &tol, &seq, None)?;
        writeln!(out, "step,{}", net.places.join(","))?;
        for (i, row) in steps.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            writeln!(out, "{i},{}", cells.join(","))?;
        }
    }
    Ok(())
}
