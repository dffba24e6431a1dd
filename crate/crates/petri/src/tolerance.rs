use crate::{PetriError, PetriNet};

/// Per-place probability of staying within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceVector {
    pub p: Vec<f64>,
}

impl ToleranceVector {
    pub fn new(p: Vec<f64>) -> Result<Self, PetriError> {
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(PetriError::Range("tolerance entries must lie in [0, 1]"));
        }
        Ok(ToleranceVector { p })
    }

    pub fn from_named(net: &PetriNet, named: &[(String, f64)]) -> Result<Self, PetriError> {
        let mut p = vec![1.0; net.places.len()];
        for (name, v) in named {
            p[net.place(name)?] = *v;
        }
        Self::new(p)
    }
}

/// Fires `sequence` from the net's marking, carrying a real value per place.
/// Each firing zeroes its input places and sets each output place `i` to
/// `σ_n(t)·p_i^w` where `w` is the output weight. `sigma_n` gives the
/// normalized synchronic value per transition; `None` means 1 for all.
pub fn propagate_tolerance(
    net: &PetriNet,
    p: &ToleranceVector,
    sequence: &[usize],
    sigma_n: Option<&[f64]>,
) -> Result<Vec<Vec<f64>>, PetriError> {
    if p.p.len() != net.places.len() {
        return Err(PetriError::Malformed("tolerance vector length".into()));
    }
    let mut tokens = net.marking.clone();
    let mut values: Vec<f64> = tokens.iter().map(|&m| m as f64).collect();
    let mut out = vec![values.clone()];
    for &t in sequence {
        if t >= net.transitions.len() {
            return Err(PetriError::UnknownTransition(t.to_string()));
        }
        tokens = net.fire_at(&tokens, t)?;
        let s = sigma_n.map_or(1.0, |v| v.get(t).copied().unwrap_or(1.0));
        for i in net.inputs(t) {
            values[i] = 0.0;
        }
        for i in net.outputs(t) {
            values[i] = s * p.p[i].powi(net.w[i][t] as i32);
        }
        out.push(values.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_net;

    const SYNCHEX: &str = include_str!("../nets/synchex.net");

    #[test]
    fn fire_a_then_b() {
        let f = parse_net(SYNCHEX).unwrap();
        let p = ToleranceVector::from_named(&f.net, &f.tolerance).unwrap();
        let a = f.net.transition("a").unwrap();
        let b = f.net.transition("b").unwrap();
        let trace = propagate_tolerance(&f.net, &p, &[a, b], None).unwrap();
        let lp = |n: &str| f.net.place(n).unwrap();
        assert!((trace[1][lp("LP1")] - 0.7).abs() < 1e-12);
        assert!((trace[1][lp("LP3")] - 0.3).abs() < 1e-12);
        assert_eq!(trace[1][lp("LP2")], 0.0);
        assert!((trace[2][lp("LP4")] - 0.4).abs() < 1e-12);
        assert_eq!(trace[2][lp("LP1")], 0.0);
        assert_eq!(trace[2][lp("LP5")], 0.0);
    }

    #[test]
    fn sigma_scales_outputs() {
        let f = parse_net(SYNCHEX).unwrap();
        let p = ToleranceVector::from_named(&f.net, &f.tolerance).unwrap();
        let a = f.net.transition("a").unwrap();
        let s = [0.5; 6];
        let trace = propagate_tolerance(&f.net, &p, &[a], Some(&s)).unwrap();
        assert!((trace[1][f.net.place("LP1").unwrap()] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn disabled_sequence_errors() {
        let f = parse_net(SYNCHEX).unwrap();
        let p = ToleranceVector::new(vec![1.0; 8]).unwrap();
        let d = f.net.transition("d").unwrap();
        assert!(propagate_tolerance(&f.net, &p, &[d], None).is_err());
        assert!(ToleranceVector::new(vec![1.5]).is_err());
    }
}
