use std::collections::{HashMap, HashSet, VecDeque};

use crate::{PetriError, PetriNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Synchronic {
    Bounded(u64),
    /// Some repeatable firing sequence changes the counter.
    Unbounded,
    /// The depth bound was hit before the search could classify the net.
    Inconclusive { range_so_far: u64 },
}

impl Synchronic {
    pub fn value(self) -> Option<u64> {
        match self {
            Synchronic::Bounded(v) => Some(v),
            _ => None,
        }
    }
}

struct Graph {
    edges: Vec<Vec<(usize, i64)>>,
}

enum Explore {
    Done(Graph),
    Unbounded,
    Cut(u64),
}

fn weight(t: usize, t1: &[usize], t2: &[usize]) -> i64 {
    t1.contains(&t) as i64 - t2.contains(&t) as i64
}

/// Breadth-first reachability graph. For uncapacitated nets a marking that
/// covers one of its ancestors with a different counter value proves the
/// counter unbounded.
fn explore(net: &PetriNet, t1: &[usize], t2: &[usize], depth_bound: usize) -> Explore {
    let uncapped = net.capacity.iter().all(Option::is_none);
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut nodes = vec![net.marking.clone()];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut tree_c = vec![0i64];
    let mut edges: Vec<Vec<(usize, i64)>> = vec![Vec::new()];
    index.insert(net.marking.clone(), 0);
    let mut frontier = vec![0usize];
    let (mut lo, mut hi) = (0i64, 0i64);
    for _ in 0..depth_bound {
        let mut next = Vec::new();
        for &u in &frontier {
            for t in 0..net.transitions.len() {
                if !net.enabled_at(&nodes[u], t) {
                    continue;
                }
                let m = net.fire_at(&nodes[u], t).expect("checked enabled");
                let wt = weight(t, t1, t2);
                let v = match index.get(&m) {
                    Some(&v) => v,
                    None => {
                        let v = nodes.len();
                        let c = tree_c[u] + wt;
                        if uncapped {
                            let mut a = Some(u);
                            while let Some(i) = a {
                                if tree_c[i] != c && m.iter().zip(&nodes[i]).all(|(x, y)| x >= y) {
                                    return Explore::Unbounded;
                                }
                                a = parent[i];
                            }
                        }
                        lo = lo.min(c);
                        hi = hi.max(c);
                        index.insert(m.clone(), v);
                        nodes.push(m);
                        parent.push(Some(u));
                        tree_c.push(c);
                        edges.push(Vec::new());
                        next.push(v);
                        v
                    }
                };
                edges[u].push((v, wt));
            }
        }
        if next.is_empty() {
            return Explore::Done(Graph { edges });
        }
        frontier = next;
    }
    Explore::Cut((hi - lo) as u64)
}

/// Strongly connected components, iterative Tarjan.
fn scc(g: &Graph) -> Vec<usize> {
    let n = g.edges.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut i)) = call.last_mut() {
            if *i < g.edges[u].len() {
                let v = g.edges[u][*i].0;
                *i += 1;
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[u]);
                }
                if low[u] == index[u] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == u {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// True when some cycle inside a component has non-zero counter weight.
fn has_weighted_cycle(g: &Graph, comp: &[usize]) -> bool {
    let n = g.edges.len();
    let mut phi: Vec<Option<i64>> = vec![None; n];
    for root in 0..n {
        if phi[root].is_some() {
            continue;
        }
        phi[root] = Some(0);
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            let pu = phi[u].expect("assigned before queueing");
            for &(v, w) in &g.edges[u] {
                if comp[v] != comp[u] {
                    continue;
                }
                match phi[v] {
                    None => {
                        phi[v] = Some(pu + w);
                        q.push_back(v);
                    }
                    Some(pv) if pv != pu + w => return true,
                    _ => {}
                }
            }
        }
    }
    false
}

/// Maximum variation of a virtual counter that `t1` firings increment and
/// `t2` firings decrement, over all behaviours from the initial marking.
pub fn synchronic_distance(
    net: &PetriNet,
    t1: &[usize],
    t2: &[usize],
    depth_bound: usize,
) -> Result<Synchronic, PetriError> {
    let nt = net.transitions.len();
    if t1.is_empty() || t2.is_empty() || t1.iter().chain(t2).any(|&t| t >= nt) || t1.iter().any(|t| t2.contains(t)) {
        return Err(PetriError::BadSets);
    }
    let g = match explore(net, t1, t2, depth_bound) {
        Explore::Done(g) => g,
        Explore::Unbounded => return Ok(Synchronic::Unbounded),
        Explore::Cut(r) => return Ok(Synchronic::Inconclusive { range_so_far: r }),
    };
    let comp = scc(&g);
    if has_weighted_cycle(&g, &comp) {
        return Ok(Synchronic::Unbounded);
    }
    // cycles carry zero weight, so (node, counter) is a finite space
    let mut best = 0i64;
    for start in 0..g.edges.len() {
        let mut seen: HashSet<(usize, i64)> = HashSet::from([(start, 0)]);
        let mut q = VecDeque::from([(start, 0i64)]);
        while let Some((u, c)) = q.pop_front() {
            for &(v, w) in &g.edges[u] {
                let s = (v, c + w);
                if seen.insert(s) {
                    best = best.max(s.1.abs());
                    q.push_back(s);
                }
            }
        }
    }
    Ok(Synchronic::Bounded(best as u64))
}

/// Largest pairwise synchronic distance over single transitions.
pub fn gsv(net: &PetriNet, depth_bound: usize) -> Result<Synchronic, PetriError> {
    let n = net.transitions.len();
    let mut best = 0u64;
    let mut cut: Option<u64> = None;
    for i in 0..n {
        for j in i + 1..n {
            match synchronic_distance(net, &[i], &[j], depth_bound)? {
                Synchronic::Bounded(v) => best = best.max(v),
                Synchronic::Unbounded => return Ok(Synchronic::Unbounded),
                Synchronic::Inconclusive { range_so_far } => {
                    cut = Some(cut.unwrap_or(0).max(range_so_far))
                }
            }
        }
    }
    Ok(match cut {
        Some(r) => Synchronic::Inconclusive {
            range_so_far: r.max(best),
        },
        None => Synchronic::Bounded(best),
    })
}

/// `1 − σ/GSV`. A zero GSV means perfectly synchronised.
pub fn normalized_sigma(sigma: f64, gsv: f64) -> Result<f64, PetriError> {
    if !(sigma >= 0.0) || !(gsv >= 0.0) || sigma > gsv {
        return Err(PetriError::Range("sigma must lie in [0, GSV]"));
    }
    if gsv == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - sigma / gsv)
}

/// Probability of out-of-order arrival.
pub fn p_oo(sigma_n: f64) -> Result<f64, PetriError> {
    if !(0.0..=1.0).contains(&sigma_n) {
        return Err(PetriError::Range("sigma_n must lie in [0, 1]"));
    }
    Ok(1.0 - sigma_n)
}

/// `σ_n` for two arrival streams in a 1:H ratio.
pub fn ratio_h_sigma_n(h: f64) -> Result<f64, PetriError> {
    normalized_sigma(1.0, h)
}

/// Upper bound on the out-of-order rate: the slowest transition's rate.
pub fn x_rate_bound(rates: &[f64]) -> Option<f64> {
    rates.iter().copied().reduce(f64::min)
}
