use crate::PetriError;

/// Incidence-matrix net. `w[place][transition]` is the signed token change.
#[derive(Debug, Clone, PartialEq)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<String>,
    pub w: Vec<Vec<i64>>,
    pub marking: Vec<i64>,
    /// Per-place cap; `None` is unbounded.
    pub capacity: Vec<Option<i64>>,
}

impl PetriNet {
    pub fn new(
        places: Vec<String>,
        transitions: Vec<String>,
        w: Vec<Vec<i64>>,
        marking: Vec<i64>,
    ) -> Result<Self, PetriError> {
        if w.len() != places.len() || marking.len() != places.len() {
            return Err(PetriError::Malformed("row count".into()));
        }
        if w.iter().any(|r| r.len() != transitions.len()) {
            return Err(PetriError::Malformed("column count".into()));
        }
        if marking.iter().any(|&m| m < 0) {
            return Err(PetriError::Malformed("negative marking".into()));
        }
        let capacity = vec![None; places.len()];
        Ok(PetriNet {
            places,
            transitions,
            w,
            marking,
            capacity,
        })
    }

    /// Switches to condition/event semantics: every place holds at most one token.
    pub fn into_ce(mut self) -> Result<Self, PetriError> {
        if self.w.iter().flatten().any(|&x| x.abs() > 1) || self.marking.iter().any(|&m| m > 1) {
            return Err(PetriError::Malformed("C/E nets need unit weights and a safe marking".into()));
        }
        self.capacity = vec![Some(1); self.places.len()];
        Ok(self)
    }

    pub fn with_capacity(mut self, cap: i64) -> Self {
        self.capacity = vec![Some(cap); self.places.len()];
        self
    }

    pub fn transition(&self, name: &str) -> Result<usize, PetriError> {
        self.transitions
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| PetriError::UnknownTransition(name.into()))
    }

    pub fn place(&self, name: &str) -> Result<usize, PetriError> {
        self.places
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| PetriError::UnknownPlace(name.into()))
    }

    pub fn column(&self, t: usize) -> Vec<i64> {
        self.w.iter().map(|r| r[t]).collect()
    }

    pub fn inputs(&self, t: usize) -> Vec<usize> {
        (0..self.places.len()).filter(|&p| self.w[p][t] < 0).collect()
    }

    pub fn outputs(&self, t: usize) -> Vec<usize> {
        (0..self.places.len()).filter(|&p| self.w[p][t] > 0).collect()
    }

    pub fn enabled_at(&self, m: &[i64], t: usize) -> bool {
        self.w.iter().zip(m).zip(&self.capacity).all(|((row, &tok), cap)| {
            let next = tok + row[t];
            next >= 0 && cap.is_none_or(|c| next <= c)
        })
    }

    pub fn enabled(&self, t: usize) -> bool {
        self.enabled_at(&self.marking, t)
    }

    pub fn fire_at(&self, m: &[i64], t: usize) -> Result<Vec<i64>, PetriError> {
        if !self.enabled_at(m, t) {
            return Err(PetriError::NotEnabled(self.transitions[t].clone()));
        }
        Ok(m.iter().zip(&self.w).map(|(&tok, row)| tok + row[t]).collect())
    }

    /// Fires `t` in place; the marking is unchanged on error.
    pub fn fire(&mut self, t: usize) -> Result<&[i64], PetriError> {
        self.marking = self.fire_at(&self.marking, t)?;
        Ok(&self.marking)
    }

    /// Adds the negated column, undoing a firing of `t`.
    pub fn unfire(&mut self, t: usize) -> Result<&[i64], PetriError> {
        let back: Vec<i64> = self.marking.iter().zip(&self.w).map(|(&m, r)| m - r[t]).collect();
        if back.iter().any(|&x| x < 0) {
            return Err(PetriError::NotEnabled(format!("-{}", self.transitions[t])));
        }
        self.marking = back;
        Ok(&self.marking)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetFile {
    pub net: PetriNet,
    /// `(place, probability)` pairs from the tolerance lines.
    pub tolerance: Vec<(String, f64)>,
}

/// Reads the plain-text matrix format: a header of transition names, then
/// `place w1 .. wn m0` rows, then optional `place p` tolerance lines and an
/// optional `capacity k` line. `#` starts a comment.
pub fn parse_net(text: &str) -> Result<NetFile, PetriError> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| PetriError::Malformed("empty file".into()))?
        .split_whitespace()
        .map(String::from)
        .collect();
    let n = header.len();
    let mut places = Vec::new();
    let mut w = Vec::new();
    let mut marking = Vec::new();
    let mut tolerance = Vec::new();
    let mut capacity = None;
    for line in lines {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<i64, PetriError> {
            s.parse().map_err(|_| PetriError::Malformed(format!("bad number {s:?}")))
        };
        if cols.len() == n + 2 {
            places.push(cols[0].to_string());
            w.push(cols[1..=n].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?);
            marking.push(num(cols[n + 1])?);
        } else if cols.len() == 2 && cols[0] == "capacity" {
            capacity = Some(num(cols[1])?);
        } else if cols.len() == 2 {
            let p: f64 = cols[1]
                .parse()
                .map_err(|_| PetriError::Malformed(format!("bad probability {:?}", cols[1])))?;
            tolerance.push((cols[0].to_string(), p));
        } else {
            return Err(PetriError::Malformed(format!("cannot read line {line:?}")));
        }
    }
    let mut net = PetriNet::new(places, header, w, marking)?;
    if let Some(c) = capacity {
        net = net.with_capacity(c);
    }
    for (p, _) in &tolerance {
        net.place(p)?;
    }
    Ok(NetFile { net, tolerance })
}

/// A finite state machine: `edges` are `(from, to, label)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsm {
    pub states: Vec<String>,
    pub initial: usize,
    pub edges: Vec<(usize, usize, String)>,
}

/// One condition per state, one event per edge, a token on the initial state.
pub fn fsm_to_ce(fsm: &Fsm) -> Result<PetriNet, PetriError> {
    if fsm.initial >= fsm.states.len() {
        return Err(PetriError::Malformed("initial state out of range".into()));
    }
    let mut w = vec![vec![0i64; fsm.edges.len()]; fsm.states.len()];
    for (j, (from, to, _)) in fsm.edges.iter().enumerate() {
        if *from >= fsm.states.len() || *to >= fsm.states.len() {
            return Err(PetriError::Malformed("edge endpoint out of range".into()));
        }
        if from == to {
            return Err(PetriError::Malformed("self-loop has no C/E column".into()));
        }
        w[*from][j] -= 1;
        w[*to][j] += 1;
    }
    let mut marking = vec![0; fsm.states.len()];
    marking[fsm.initial] = 1;
    let transitions = fsm.edges.iter().map(|(_, _, l)| l.clone()).collect();
    PetriNet::new(fsm.states.clone(), transitions, w, marking)?.into_ce()
}
