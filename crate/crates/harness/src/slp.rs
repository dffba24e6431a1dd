use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vnc_core::{init_lp, Cancellation, LogicalProcess, LpId, Mode, Received, Send, VncMessage};
use vnc_driver::{
    inject_error, step_driver, DriverConfig, DrivingProcess, ErrorModel, GpsFeed, MotionState,
    Position, USER_POS,
};

use crate::{HarnessError, MetricsReport, Net, ScenarioConfig, TransportConfig};

/// A driver feeding a linear chain of LPs on one processor. Every hop adds
/// its own error sample to the prediction it forwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SlpParams {
    pub n_lps: u32,
    pub theta: f64,
    pub lambda: f64,
    pub update_period: f64,
    pub delta: f64,
    pub speed: f64,
    pub direction: f64,
    pub error: ErrorModel,
    pub tick: f64,
    pub duration: f64,
    pub mode: Mode,
    pub cancellation: Cancellation,
    pub seed: u64,
}

impl Default for SlpParams {
    fn default() -> Self {
        SlpParams {
            n_lps: 3,
            theta: 2.0,
            lambda: 300.0,
            update_period: 2.0,
            delta: 2.0,
            speed: 0.1,
            direction: 0.0,
            error: ErrorModel::Normal {
                mean: 0.0,
                variance: 1.0,
            },
            tick: 0.1,
            duration: 1200.0,
            mode: Mode::Vnc,
            cancellation: Cancellation::Aggressive,
            seed: 0,
        }
    }
}

impl SlpParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let d = SlpParams::default();
        let update_period = cfg.f64_or("update_period", d.update_period)?;
        let p = SlpParams {
            n_lps: cfg.u64_or("slp.n_lps", d.n_lps as u64)? as u32,
            theta: cfg.f64_or("theta", d.theta)?,
            lambda: cfg.f64_or("lambda", d.lambda)?,
            update_period,
            delta: cfg.f64_or("delta", update_period)?,
            speed: cfg.f64_or("slp.speed", d.speed)?,
            direction: cfg.f64_or("slp.direction", d.direction)?,
            error: cfg.error_model("error", d.error)?,
            tick: cfg.f64_or("tick", d.tick)?,
            duration: cfg.duration(d.duration)?,
            mode: cfg.mode()?,
            cancellation: cfg.cancellation()?,
            seed: cfg.seed()?,
        };
        if p.n_lps == 0 || !(p.tick > 0.0) {
            return Err(HarnessError::Unschedulable("slp chain needs lps and a positive tick".into()));
        }
        Ok(p)
    }
}

type Lp = LogicalProcess<Position, Position>;

fn distance(saved: &Position, actual: &Position) -> f64 {
    saved.distance(actual)
}

struct Chain {
    lps: Vec<Lp>,
    rngs: Vec<ChaCha8Rng>,
    forwarded: Vec<BTreeSet<(LpId, u64)>>,
    error: ErrorModel,
}

impl Chain {
    fn arrive(&mut self, m: VncMessage<Position>, now: f64, net: &mut Net<Position>, r: &mut MetricsReport) -> Result<(), HarnessError> {
        let i = (m.dst - 1) as usize;
        // real fixes pass straight through so every hop checks its own cache
        if m.is_real(now) && i + 1 < self.lps.len() && self.forwarded[i].insert((m.src, m.seq)) {
            let lp = &mut self.lps[i];
            let tr = m.recv_time;
            let out = lp.send_real(VncMessage::new(tr, tr, tr, lp.id, lp.id + 1, USER_POS, m.payload));
            net.send(out, now, r);
        }
        if let Received::Rollback(d) = self.lps[i].enqueue_received(m, now, &distance)? {
            for a in d.anti_messages {
                net.send(a, now, r);
            }
        }
        Ok(())
    }

    fn process(&mut self, i: usize, now: f64, net: &mut Net<Position>, r: &mut MetricsReport) -> Result<bool, HarnessError> {
        let before = self.lps[i].lvt;
        let Some(m) = self.lps[i].next_processable(now) else {
            return Ok(false);
        };
        let last = i + 1 == self.lps.len();
        let lp = &mut self.lps[i];
        if m.is_real(now) {
            if m.recv_time >= before {
                lp.save_state(m.payload);
            }
        } else {
            lp.save_state(m.payload);
            if !last {
                let payload = inject_error(m.payload, &self.error, &mut self.rngs[i])?;
                let out = VncMessage::new(lp.lvt, m.recv_time, m.origin_real_time, lp.id, lp.id + 1, USER_POS, payload);
                if let Send::Transmit(out) = lp.send_virtual(out)? {
                    net.send(out, now, r);
                }
            }
        }
        for a in lp.take_released_antis() {
            net.send(a, now, r);
        }
        Ok(true)
    }
}

pub fn run_slp_chain(cfg: &ScenarioConfig) -> Result<MetricsReport, HarnessError> {
    let p = SlpParams::from_config(cfg)?;
    let mode_name = match p.mode {
        Mode::Vnc => "vnc",
        Mode::Sequential => "sequential",
    };
    let mut report = MetricsReport::new("slp_chain", p.seed, mode_name);
    let motion = MotionState::new(Position::new(0.0, 0.0), p.speed, p.direction, 0.0)
        .ok_or_else(|| HarnessError::Unschedulable("invalid speed or direction".into()))?;
    let mut driver = DrivingProcess::new(
        DriverConfig {
            id: 0,
            dst: 1,
            update_period: p.update_period,
            delta: p.delta,
            lambda: p.lambda,
            error_model: p.error,
            real_opt: cfg.bool_or("real_opt", false)?,
            downstream_min_theta: p.theta,
            mode: p.mode,
            seed: p.seed,
        },
        motion,
        GpsFeed::exact(motion),
    )?;
    let mut chain = Chain {
        lps: Vec::new(),
        rngs: Vec::new(),
        forwarded: Vec::new(),
        error: p.error,
    };
    let mut net = Net::new(cfg.transport(TransportConfig::default())?);
    net.name(0, "driver");
    for k in 1..=p.n_lps {
        let lp: Lp = init_lp(k, p.theta, p.lambda, motion.position)?;
        chain.lps.push(lp.with_mode(p.mode).with_cancellation(p.cancellation));
        chain.rngs.push(ChaCha8Rng::seed_from_u64(p.seed ^ (0x5eed_0000 + k as u64)));
        chain.forwarded.push(BTreeSet::new());
        net.name(k, &format!("lp{k}"));
    }

    let steps = (p.duration / p.tick).round() as u64;
    let mut next_sample = 0i64;
    for step in 0..=steps {
        let now = step as f64 * p.tick;
        for m in step_driver(&mut driver, now) {
            net.send(m, now, &mut report);
        }
        loop {
            let mut progressed = false;
            while let Some(m) = net.pop_due(now) {
                chain.arrive(m, now, &mut net, &mut report)?;
                progressed = true;
            }
            for i in 0..chain.lps.len() {
                while chain.process(i, now, &mut net, &mut report)? {
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        for lp in chain.lps.iter_mut() {
            lp.advance(now, &mut |_| {});
        }
        if now.floor() as i64 >= next_sample {
            next_sample = now.floor() as i64 + 1;
            report.record_lvt(now, "driver", driver.lvt);
            for lp in &chain.lps {
                report.record_lvt(now, &format!("lp{}", lp.id), lp.lvt);
            }
        }
    }

    let mut checks = 0u64;
    let mut tol = 0u64;
    for lp in &chain.lps {
        checks += lp.counters.tolerance_checks;
        tol += lp.counters.rollbacks_tolerance;
        if lp.counters.tolerance_checks > 0 {
            report.scalars.insert(
                format!("lp{}.tolerance_rollback_fraction", lp.id),
                lp.counters.rollbacks_tolerance as f64 / lp.counters.tolerance_checks as f64,
            );
        }
        report.lp.insert(format!("lp{}", lp.id), lp.counters.clone());
    }
    if checks > 0 {
        report
            .scalars
            .insert("tolerance_rollback_fraction".into(), tol as f64 / checks as f64);
    }
    report.scalars.insert("driver.virtual_out".into(), driver.counters.virtual_out as f64);
    report.scalars.insert("driver.real_out".into(), driver.counters.real_out as f64);
    report.scalars.insert("driver.real_suppressed".into(), driver.counters.real_suppressed as f64);
    report.transport = net.transport.counters.clone();
    report.measured_beta = crate::measure_beta(&report).ok();
    Ok(report)
}
