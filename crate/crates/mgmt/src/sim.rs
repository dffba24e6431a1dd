use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vnc_core::{init_lp, Cancellation, LpId, Mode, Received, RollbackCause, Send, VncMessage};
use vnc_harness::{EventQueue, HarnessError, MetricsReport, Net, ScenarioConfig, Table, TransportConfig};

use crate::{
    admit, predicted_at, verification_query, MgmtMsg, MgmtTriple, ServiceModel, SwitchLp,
    SwitchState, PKT, SAMPLE,
};

const SEED_SRC: LpId = 1000;
const CLOCK_SRC: LpId = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct MgmtParams {
    pub triple: MgmtTriple,
    pub switches: u32,
    pub service: ServiceModel,
    /// Lognormal sigma on the model's service times.
    pub noise: f64,
    pub sample_step: f64,
    pub tick: f64,
    pub duration: f64,
    pub cancellation: Cancellation,
    pub seed: u64,
}

impl Default for MgmtParams {
    fn default() -> Self {
        MgmtParams {
            triple: crate::STANDARD_TRIPLES[0],
            switches: 3,
            service: ServiceModel { servers: 10, mean: 10.0 },
            noise: 0.5,
            sample_step: 1.0,
            tick: 0.25,
            duration: 2000.0,
            cancellation: Cancellation::Aggressive,
            seed: 0,
        }
    }
}

impl MgmtParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let d = MgmtParams::default();
        if cfg.mode()? != Mode::Vnc {
            return Err(HarnessError::Unschedulable("mgmt runs in vnc mode only".into()));
        }
        let triple = MgmtTriple::new(
            cfg.f64_or("lambda", d.triple.big_lambda)?,
            cfg.f64_or("theta", d.triple.theta)?,
            cfg.f64_or("upsilon", d.triple.upsilon)?,
        )
        .ok_or_else(|| HarnessError::Unschedulable("lambda, theta and upsilon must be positive".into()))?;
        let p = MgmtParams {
            triple,
            switches: cfg.u64_or("mgmt.switches", d.switches as u64)? as u32,
            service: ServiceModel {
                servers: cfg.u64_or("mgmt.servers", d.service.servers as u64)? as u32,
                mean: cfg.f64_or("mgmt.service_mean", d.service.mean)?,
            },
            noise: cfg.f64_or("mgmt.noise", d.noise)?,
            sample_step: cfg.f64_or("mgmt.sample_step", d.sample_step)?,
            tick: cfg.f64_or("tick", d.tick)?,
            duration: cfg.duration(d.duration)?,
            cancellation: cfg.cancellation()?,
            seed: cfg.seed()?,
        };
        if p.switches == 0 || p.service.servers == 0 || !(p.service.mean > 0.0) {
            return Err(HarnessError::Unschedulable("empty switch network".into()));
        }
        if !(p.noise >= 0.0) || !(p.sample_step > 0.0) || !(p.tick > 0.0) {
            return Err(HarnessError::Unschedulable(
                "noise must be non-negative, sample_step and tick positive".into(),
            ));
        }
        Ok(p)
    }
}

pub fn run_mgmt(cfg: &ScenarioConfig) -> Result<MetricsReport, HarnessError> {
    simulate(&MgmtParams::from_config(cfg)?)
}

pub fn run_triple(triple: MgmtTriple, duration: f64, seed: u64) -> Result<MetricsReport, HarnessError> {
    simulate(&MgmtParams {
        triple,
        duration,
        seed,
        ..MgmtParams::default()
    })
}

fn stream(seed: u64, k: u32, which: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k as u64 * 4 + which);
    r
}

fn zero(_: &SwitchState, _: &MgmtMsg) -> f64 {
    0.0
}

struct World {
    p: MgmtParams,
    lps: Vec<SwitchLp>,
    real: Vec<SwitchState>,
    net: Net<MgmtMsg>,
    report: MetricsReport,
    run: Table,
    max_abs_error: u64,
}

impl World {
    fn actual(&self, k: usize) -> u64 {
        self.real[k].counter
    }

    fn row(&mut self, now: f64, k: usize, predicted: u64, kind: &str) {
        let actual = self.actual(k);
        let err = predicted as i64 - actual as i64;
        if kind != RollbackCause::Causal.as_str() {
            self.max_abs_error = self.max_abs_error.max(err.unsigned_abs());
        }
        self.run.push(vec![
            format!("{now}"),
            format!("sw{}", k + 1),
            predicted.to_string(),
            actual.to_string(),
            err.to_string(),
            kind.to_string(),
        ]);
    }

    fn deliver(&mut self, m: VncMessage<MgmtMsg>, now: f64) -> Result<(), HarnessError> {
        let k = m.dst as usize - 1;
        if let Received::Rollback(d) = self.lps[k].enqueue_received(m, now, &zero)? {
            self.row(now, k, d.restored_snapshot.state.counter, d.cause.as_str());
            for a in d.anti_messages {
                self.net.send(a, now, &mut self.report);
            }
        }
        Ok(())
    }

    fn process(&mut self, k: usize, now: f64) -> Result<bool, HarnessError> {
        let lp = &mut self.lps[k];
        let Some(m) = lp.next_processable(now) else {
            return Ok(false);
        };
        let mut st = lp.current_state.clone();
        if m.payload == MgmtMsg::Packet {
            let (end, dst) = admit(&mut st, lp.lvt, &self.p.service, self.p.noise, self.p.switches);
            lp.save_state(st);
            let out = VncMessage::new(lp.lvt, end, end, lp.id, dst + 1, PKT, MgmtMsg::Packet);
            if let Send::Transmit(out) = lp.send_virtual(out)? {
                self.net.send(out, now, &mut self.report);
            }
        } else {
            lp.save_state(st);
        }
        for a in self.lps[k].take_released_antis() {
            self.net.send(a, now, &mut self.report);
        }
        Ok(true)
    }

    fn pump(&mut self, now: f64) -> Result<(), HarnessError> {
        loop {
            let mut progressed = false;
            while let Some(m) = self.net.pop_due(now) {
                self.deliver(m, now)?;
                progressed = true;
            }
            for k in 0..self.lps.len() {
                while self.process(k, now)? {
                    progressed = true;
                }
            }
            if !progressed {
                return Ok(());
            }
        }
    }
}

/// Runs the twin network and its predictive model for one parameter set.
pub fn simulate(p: &MgmtParams) -> Result<MetricsReport, HarnessError> {
    let n = p.switches as usize;
    let lambda = p.triple.big_lambda;
    let mut world = World {
        p: p.clone(),
        lps: Vec::with_capacity(n),
        real: Vec::with_capacity(n),
        net: Net::new(TransportConfig::default()),
        report: MetricsReport::new("mgmt", p.seed, "vnc"),
        run: Table::new(&["t", "lp", "predicted_state", "actual_state", "error", "rollback_kind"]),
        max_abs_error: 0,
    };
    let mut real_events: EventQueue<usize> = EventQueue::new();
    let mut arrivals: Vec<Vec<f64>> = vec![Vec::new(); n];
    for k in 0..n {
        let init = SwitchState {
            counter: 0,
            busy_until: 0.0,
            service: stream(p.seed, k as u32, 0),
            routing: stream(p.seed, k as u32, 1),
            noise: stream(p.seed, k as u32, 2),
        };
        let id = k as LpId + 1;
        let lp: SwitchLp = init_lp(id, p.triple.theta, lambda, init.clone())?;
        world.lps.push(lp.with_cancellation(p.cancellation));
        world.real.push(init);
        world.net.name(id, &format!("sw{id}"));
        real_events.push(0.0, k);
        let idmsg = VncMessage::new(0.0, 0.0, 0.0, SEED_SRC + id, id, PKT, MgmtMsg::Packet);
        world.lps[k].enqueue_received(idmsg, 0.0, &zero)?;
    }

    let mut next_sample = vec![1u64; n];
    let mut next_query = vec![p.triple.upsilon; n];
    let mut last_query: Vec<Option<f64>> = vec![None; n];
    let mut min_query_gap = f64::INFINITY;
    let mut queries = 0u64;
    let mut behind_ticks = 0u64;
    let mut last_commit: Vec<Option<u64>> = vec![None; n];
    let mut commit_decreases = 0u64;
    let mut commit_mismatches = 0u64;
    let mut next_trace = 0i64;

    let steps = (p.duration / p.tick).round() as u64;
    for step in 0..=steps {
        let now = step as f64 * p.tick;
        while let Some((t, k)) = real_events.pop_due(now) {
            arrivals[k].push(t);
            let (end, dst) = admit(&mut world.real[k], t, &p.service, 0.0, p.switches);
            real_events.push(end, dst as usize);
        }
        for k in 0..n {
            let id = k as LpId + 1;
            loop {
                let t = next_sample[k] as f64 * p.sample_step;
                if t > now + lambda {
                    break;
                }
                let mut m = VncMessage::new(t, t, t, CLOCK_SRC + id, id, SAMPLE, MgmtMsg::Sample);
                m.seq = next_sample[k];
                world.deliver(m, now)?;
                next_sample[k] += 1;
            }
        }
        world.pump(now)?;

        for k in 0..n {
            let lp = &world.lps[k];
            let holding = lp.peek().is_none_or(|m| m.recv_time > now + lp.lambda);
            if now < next_query[k] || !holding || lp.lvt < now {
                continue;
            }
            let predicted = predicted_at(lp, now).unwrap_or(0);
            let actual = world.actual(k);
            queries += 1;
            if let Some(prev) = last_query[k] {
                min_query_gap = min_query_gap.min(now - prev);
            }
            last_query[k] = Some(now);
            next_query[k] = now + p.triple.upsilon;
            match verification_query(&mut world.lps[k], now, actual, p.triple.theta)? {
                None => world.row(now, k, predicted, "none"),
                Some(d) => {
                    world.row(now, k, predicted, d.cause.as_str());
                    for a in d.anti_messages {
                        world.net.send(a, now, &mut world.report);
                    }
                }
            }
        }
        world.pump(now)?;

        for k in 0..n {
            if world.lps[k].lvt < now {
                behind_ticks += 1;
            }
            let arr = &arrivals[k];
            let last = &mut last_commit[k];
            world.lps[k].advance(now, &mut |snap| {
                let c = snap.state.counter;
                if last.is_some_and(|l| c < l) {
                    commit_decreases += 1;
                }
                *last = Some(c);
                if arr.partition_point(|&a| a <= snap.save_time) as u64 != c {
                    commit_mismatches += 1;
                }
            });
        }
        if now.floor() as i64 >= next_trace {
            next_trace = now.floor() as i64 + 1;
            let mut gvt = f64::INFINITY;
            for lp in &world.lps {
                gvt = gvt.min(lp.lvt);
                world.report.record_lvt(now, &format!("sw{}", lp.id), lp.lvt);
            }
            world.report.record_lvt(now, "gvt", gvt);
        }
    }
    let end = steps as f64 * p.tick;
    for k in 0..n {
        for a in world.lps[k].flush_lazy() {
            world.net.send(a, end, &mut world.report);
        }
    }

    let mut r = world.report;
    let mut verification = 0u64;
    let mut causal = 0u64;
    let mut min_lead = f64::INFINITY;
    for lp in &world.lps {
        verification += lp.counters.rollbacks_verification;
        causal += lp.counters.rollbacks_causal;
        min_lead = min_lead.min(lp.lvt - end);
        r.scalars.insert(format!("sw{}.lvt", lp.id), lp.lvt);
        r.scalars
            .insert(format!("sw{}.actual", lp.id), world.real[lp.id as usize - 1].counter as f64);
        r.lp.insert(format!("sw{}", lp.id), lp.counters.clone());
    }
    let s = &mut r.scalars;
    s.insert("mgmt.lambda".into(), p.triple.big_lambda);
    s.insert("mgmt.theta".into(), p.triple.theta);
    s.insert("mgmt.upsilon".into(), p.triple.upsilon);
    s.insert("mgmt.queries".into(), queries as f64);
    s.insert("mgmt.verification_rollbacks".into(), verification as f64);
    s.insert("mgmt.causal_rollbacks".into(), causal as f64);
    s.insert("mgmt.antis".into(), r.class_totals.anti as f64);
    s.insert("mgmt.max_abs_error".into(), world.max_abs_error as f64);
    s.insert("mgmt.min_final_lead".into(), min_lead);
    s.insert("mgmt.behind_ticks".into(), behind_ticks as f64);
    s.insert("mgmt.commit_decreases".into(), commit_decreases as f64);
    s.insert("mgmt.commit_mismatches".into(), commit_mismatches as f64);
    if min_query_gap.is_finite() {
        s.insert("mgmt.min_query_gap".into(), min_query_gap);
    }
    r.tables.insert("mgmt_run.csv".into(), world.run);
    r.transport = world.net.transport.counters.clone();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys_reach_params() {
        let mut c = ScenarioConfig::new("mgmt");
        c.set("lambda", "400");
        c.set("theta", "5");
        c.set("mgmt.noise", "0");
        c.set("seed", "9");
        let p = MgmtParams::from_config(&c).unwrap();
        assert_eq!(p.triple, crate::STANDARD_TRIPLES[3]);
        assert_eq!(p.noise, 0.0);
        assert_eq!(p.seed, 9);
        c.set("upsilon", "0");
        assert!(MgmtParams::from_config(&c).is_err());
    }

    #[test]
    fn sequential_mode_is_refused() {
        let mut c = ScenarioConfig::new("mgmt");
        c.set("mode", "sequential");
        assert!(matches!(run_mgmt(&c), Err(HarnessError::Unschedulable(_))));
    }

    #[test]
    fn twin_streams_are_distinct() {
        let a = stream(1, 0, 0);
        let b = stream(1, 0, 1);
        let c = stream(1, 1, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream(1, 0, 0));
    }
}
