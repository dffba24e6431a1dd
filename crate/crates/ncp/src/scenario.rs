use std::collections::{BTreeMap, BTreeSet};

use vnc_core::{
    init_lp, Cancellation, LogicalProcess, LpId, Mode, Received, RollbackCause, RollbackDirective,
    Send, VncMessage,
};
use vnc_driver::{step_driver, DriverConfig, DrivingProcess, ErrorModel, GpsFeed, MotionState, Position};
use vnc_harness::{
    DelayModel, EventQueue, HarnessError, MetricsReport, Net, ScenarioConfig, Table, TransportConfig,
};

use crate::fsm::{es_step, rn_step, Dest, Event, FsmState, NodeState, Timer};
use crate::packet::{NcpPacket, HANDOFF, TIMETAB, USER_POS};
use crate::NcpError;

const RN_BASE: LpId = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct NcpParams {
    pub num_es: u32,
    pub num_rn: u32,
    pub es_dist: f64,
    /// Start-up offset between consecutive switches.
    pub es_stagger: f64,
    pub mycall_t: f64,
    pub retry: bool,
    pub retry_timeout: f64,
    pub topology_time: f64,
    pub rn_start: f64,
    pub rn_position: Position,
    pub rn_speed: f64,
    pub rn_direction: f64,
    pub update_period: f64,
    pub delta: f64,
    pub lambda: f64,
    pub theta: f64,
    pub task_delay: f64,
    pub cache_read: f64,
    pub fmax: u32,
    pub slots: u32,
    pub dist_tol: f64,
    /// How far the commit horizon trails real time.
    pub commit_lag: f64,
    pub error: ErrorModel,
    pub real_opt: bool,
    pub tick: f64,
    pub duration: f64,
    pub mode: Mode,
    pub cancellation: Cancellation,
    pub seed: u64,
    pub assert_configured: bool,
}

impl Default for NcpParams {
    fn default() -> Self {
        NcpParams {
            num_es: 2,
            num_rn: 1,
            es_dist: 20.0,
            es_stagger: 1.0,
            mycall_t: 20.0,
            retry: true,
            retry_timeout: 5.0,
            topology_time: 1.0,
            rn_start: 30.0,
            rn_position: Position::new(2.0, 3.0),
            rn_speed: 0.1,
            rn_direction: 90.0,
            update_period: 10.0,
            delta: 10.0,
            lambda: 30.0,
            theta: 2.0,
            task_delay: 8.0,
            cache_read: 2.29,
            fmax: 3,
            slots: 4,
            dist_tol: 1.0,
            commit_lag: 2.0,
            error: ErrorModel::None,
            real_opt: false,
            tick: 0.1,
            duration: 1200.0,
            mode: Mode::Vnc,
            cancellation: Cancellation::Aggressive,
            seed: 0,
            assert_configured: true,
        }
    }
}

impl NcpParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let d = NcpParams::default();
        let update_period = cfg.f64_or("update_period", d.update_period)?;
        let p = NcpParams {
            num_es: cfg.u64_or("ncp.NumES", d.num_es as u64)? as u32,
            num_rn: cfg.u64_or("ncp.NumRN", d.num_rn as u64)? as u32,
            es_dist: cfg.f64_or("ncp.ESDist", d.es_dist)?,
            es_stagger: cfg.f64_or("ncp.ESStagger", d.es_stagger)?,
            mycall_t: cfg.f64_or("ncp.T", d.mycall_t)?,
            retry: cfg.bool_or("ncp.retry", d.retry)?,
            retry_timeout: cfg.f64_or("ncp.retry_timeout", d.retry_timeout)?,
            topology_time: cfg.f64_or("ncp.topology_time", d.topology_time)?,
            rn_start: cfg.f64_or("ncp.rn_start", d.rn_start)?,
            rn_position: Position::new(
                cfg.f64_or("ncp.rn_x", d.rn_position.x)?,
                cfg.f64_or("ncp.rn_y", d.rn_position.y)?,
            ),
            rn_speed: cfg.f64_or("ncp.maxV", d.rn_speed)?,
            rn_direction: cfg.f64_or("ncp.direction", d.rn_direction)?,
            update_period,
            delta: cfg.f64_or("delta", update_period)?,
            lambda: cfg.f64_or("lambda", d.lambda)?,
            theta: cfg.f64_or("theta", d.theta)?,
            task_delay: cfg.f64_or("ncp.task_delay", d.task_delay)?,
            cache_read: cfg.f64_or("ncp.cache_read", d.cache_read)?,
            fmax: cfg.u64_or("ncp.Fmax", d.fmax as u64)? as u32,
            slots: cfg.u64_or("ncp.slots", d.slots as u64)? as u32,
            dist_tol: cfg.f64_or("ncp.dist_tol", d.dist_tol)?,
            commit_lag: cfg.f64_or("ncp.commit_lag", d.commit_lag)?,
            error: cfg.error_model("error", d.error)?,
            real_opt: cfg.bool_or("real_opt", d.real_opt)?,
            tick: cfg.f64_or("tick", d.tick)?,
            duration: cfg.duration(d.duration)?,
            mode: cfg.mode()?,
            cancellation: cfg.cancellation()?,
            seed: cfg.seed()?,
            assert_configured: cfg.bool_or("ncp.assert_configured", d.assert_configured)?,
        };
        if p.num_es == 0 || !(p.tick > 0.0) || !(p.rn_speed > 0.0) {
            return Err(HarnessError::Unschedulable(
                "ncp needs a switch, a positive tick and a moving RN".into(),
            ));
        }
        if p.num_es >= RN_BASE {
            return Err(HarnessError::Unschedulable(format!(
                "at most {} switches",
                RN_BASE - 1
            )));
        }
        Ok(p)
    }

    fn es_position(&self, k: u32) -> Position {
        let cols = (self.num_es as f64).sqrt().ceil() as u32;
        let i = k - 1;
        Position::new((i % cols) as f64 * self.es_dist, (i / cols) as f64 * self.es_dist)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnEntry {
    pub pos: Position,
    /// `(beam, slot)` held by this switch for the RN.
    pub mine: Option<(u32, u32)>,
}

/// What one switch believes about the remote nodes it hears.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EsView {
    pub rn: BTreeMap<String, RnEntry>,
}

/// Association decision of switch `me` for RN `rn` seen at `p`.
///
/// The holder keeps the RN until another switch is closer by more than
/// `tol`, then redirects it there; a non-holder claims the RN once it is
/// closer than every other switch by more than `tol`.
pub fn decide(
    view: &EsView,
    me: &str,
    switches: &[(String, Position)],
    rn: &str,
    p: Position,
    capacity: (u32, u32),
    tol: f64,
) -> (EsView, Option<NcpPacket>) {
    let mut next = view.clone();
    let held = view.rn.get(rn).and_then(|e| e.mine);
    let Some(my_pos) = switches.iter().find(|(c, _)| c == me).map(|(_, q)| *q) else {
        next.rn.insert(rn.to_string(), RnEntry { pos: p, mine: held });
        return (next, None);
    };
    let d_me = my_pos.distance(&p);
    let other = switches
        .iter()
        .filter(|(c, _)| c != me)
        .map(|(_, q)| (q.distance(&p), *q))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let (mine, out) = match held {
        Some(fs) => match other {
            Some((d_o, q)) if d_o + tol < d_me => (
                None,
                Some(NcpPacket::Handoff {
                    frequency: None,
                    time_slot: None,
                    es_position: q,
                }),
            ),
            _ => (Some(fs), Some(assign(fs, my_pos))),
        },
        None => {
            let closest = other.is_none_or(|(d_o, _)| d_me + tol < d_o);
            let used: BTreeSet<(u32, u32)> = view
                .rn
                .iter()
                .filter(|(c, _)| c.as_str() != rn)
                .filter_map(|(_, e)| e.mine)
                .collect();
            let free = (0..capacity.0)
                .flat_map(|f| (0..capacity.1).map(move |s| (f, s)))
                .find(|fs| !used.contains(fs));
            match free {
                Some(fs) if closest => (Some(fs), Some(assign(fs, my_pos))),
                _ => (None, None),
            }
        }
    };
    next.rn.insert(rn.to_string(), RnEntry { pos: p, mine });
    (next, out)
}

fn assign((f, s): (u32, u32), es_position: Position) -> NcpPacket {
    NcpPacket::Handoff {
        frequency: Some(f),
        time_slot: Some(s),
        es_position,
    }
}

fn es_metric(view: &EsView, pkt: &NcpPacket) -> f64 {
    match pkt {
        NcpPacket::UserPos {
            callsign, position, ..
        } => view.rn.get(callsign).map_or(0.0, |e| e.pos.distance(position)),
        _ => 0.0,
    }
}

fn rn_metric(node: &NodeState, pkt: &NcpPacket) -> f64 {
    match pkt {
        NcpPacket::Handoff {
            frequency: Some(_),
            es_position,
            ..
        } => {
            let at = node
                .associated_es
                .as_ref()
                .and_then(|c| node.known_switch_table.get(c))
                .and_then(|e| e.position);
            if at == Some(*es_position) {
                0.0
            } else {
                1.0
            }
        }
        _ => 0.0,
    }
}

type Key = (LpId, u64);

fn key(rn: LpId, tr: f64) -> Key {
    (rn, tr.to_bits())
}

struct Es {
    node: NodeState,
    started: bool,
    lp: LogicalProcess<NcpPacket, EsView>,
    busy_until: f64,
    pre_busy_until: f64,
    cache: BTreeMap<Key, f64>,
    superseded: BTreeSet<Key>,
    vhandoff: BTreeMap<Key, NcpPacket>,
    window_holds: u64,
    mispredicted: u64,
}

struct Rn {
    callsign: String,
    lp: LogicalProcess<NcpPacket, NodeState>,
    driver: DrivingProcess,
    committed: NodeState,
    handoffs: u64,
    first_handoff: Option<f64>,
}

struct Sim {
    p: NcpParams,
    es: Vec<Es>,
    rns: Vec<Rn>,
    net: Net<NcpPacket>,
    timers: EventQueue<(usize, Timer)>,
    pending: EventQueue<VncMessage<NcpPacket>>,
    report: MetricsReport,
    trace: Table,
    latency: Table,
    user_pos_dropped: u64,
    driver_sends: u64,
    handoff_antis: u64,
}

fn protocol(e: NcpError) -> HarnessError {
    HarnessError::Assertion(e.to_string())
}

fn es_id(callsign: &str) -> Option<LpId> {
    callsign.strip_prefix("ES")?.parse().ok()
}

impl Sim {
    fn es_event(&mut self, i: usize, ev: Event, now: f64) -> Result<(), HarnessError> {
        let es = &mut self.es[i];
        let step = es_step(&mut es.node, &ev, now).map_err(protocol)?;
        self.trace.push(vec![
            now.to_string(),
            es.node.callsign.clone(),
            es.node.fsm_state.as_str().to_string(),
            ev.name(),
            step.kinds().join("+"),
        ]);
        let src = es.lp.id;
        for (dest, pkt) in step.emitted {
            let targets: Vec<LpId> = match &dest {
                Dest::AllEs => (1..=self.p.num_es).filter(|k| *k != src).collect(),
                Dest::Node(c) => es_id(c).into_iter().collect(),
                Dest::EsAt(q) => self
                    .es
                    .iter()
                    .filter(|e| e.node.position == *q)
                    .map(|e| e.lp.id)
                    .collect(),
            };
            for dst in targets {
                let m = VncMessage::new(now, now, now, src, dst, pkt.kind(), pkt.clone());
                self.net.send(m, now, &mut self.report);
            }
        }
        for (t, timer) in step.timers {
            self.timers.push(t, (i, timer));
        }
        Ok(())
    }

    fn send_antis(&mut self, i: usize, antis: Vec<VncMessage<NcpPacket>>, now: f64) {
        for a in antis {
            self.es[i].vhandoff.remove(&key(a.dst, a.recv_time));
            if a.kind == HANDOFF {
                self.handoff_antis += 1;
            }
            self.net.send(a, now, &mut self.report);
        }
    }

    fn arrive(&mut self, m: VncMessage<NcpPacket>, now: f64) -> Result<(), HarnessError> {
        if m.dst >= RN_BASE {
            let j = (m.dst - RN_BASE - 1) as usize;
            let Some(rn) = self.rns.get_mut(j) else {
                return Ok(());
            };
            rn.lp.enqueue_received(m, now, &rn_metric)?;
            return Ok(());
        }
        let i = (m.dst - 1) as usize;
        if m.kind != USER_POS {
            let from = format!("ES{}", m.src);
            return self.es_event(
                i,
                Event::Packet {
                    from,
                    packet: m.payload,
                },
                now,
            );
        }
        let es = &mut self.es[i];
        if es.node.fsm_state != FsmState::Active {
            self.user_pos_dropped += 1;
            return Ok(());
        }
        let k = key(m.src, m.recv_time);
        if let Received::Rollback(RollbackDirective {
            cause,
            anti_messages,
            ..
        }) = es.lp.enqueue_received(m, now, &es_metric)?
        {
            if cause == RollbackCause::OutOfTolerance {
                es.superseded.insert(k);
                if es.vhandoff.contains_key(&k) {
                    es.mispredicted += 1;
                }
            }
            self.send_antis(i, anti_messages, now);
        }
        Ok(())
    }

    fn es_process(&mut self, i: usize, now: f64) -> Result<bool, HarnessError> {
        let p = &self.p;
        let es = &mut self.es[i];
        let before = es.lp.lvt;
        let waiting = es.lp.peek().is_some();
        let Some(m) = es.lp.next_processable(now) else {
            if waiting {
                es.window_holds += 1;
            }
            return Ok(false);
        };
        let NcpPacket::UserPos {
            callsign, position, ..
        } = &m.payload
        else {
            return Ok(true);
        };
        let k = key(m.src, m.recv_time);
        let switches = es.node.switch_positions();
        let capacity = (p.fmax, p.slots);
        if m.send_time < m.recv_time {
            if !es.superseded.contains(&k) {
                let (view, out) = decide(
                    &es.lp.current_state,
                    &es.node.callsign,
                    &switches,
                    callsign,
                    *position,
                    capacity,
                    p.dist_tol,
                );
                es.lp.save_state(view);
                if !es.cache.contains_key(&k) {
                    let ready = now.max(es.pre_busy_until) + p.task_delay;
                    es.pre_busy_until = ready;
                    es.cache.insert(k, ready);
                }
                if let Some(pkt) = out {
                    let t = es.lp.lvt;
                    let msg = VncMessage::new(t, t, t, es.lp.id, m.src, HANDOFF, pkt.clone());
                    match es.lp.send_virtual(msg)? {
                        Send::Transmit(msg) => {
                            es.vhandoff.insert(k, pkt);
                            self.net.send(msg, now, &mut self.report);
                        }
                        Send::Suppressed if p.cancellation == Cancellation::Lazy => {
                            es.vhandoff.insert(k, pkt);
                        }
                        Send::Suppressed => {}
                    }
                }
            }
        } else {
            let cached = match p.mode {
                Mode::Vnc if !es.superseded.contains(&k) => es.cache.get(&k).copied(),
                _ => None,
            };
            let (end, out, path) = match cached {
                Some(ready) => {
                    let end = now.max(es.busy_until).max(ready) + p.cache_read;
                    (end, es.vhandoff.get(&k).cloned(), "cache")
                }
                None => {
                    let (view, out) = decide(
                        &es.lp.current_state,
                        &es.node.callsign,
                        &switches,
                        callsign,
                        *position,
                        capacity,
                        p.dist_tol,
                    );
                    if m.recv_time >= before {
                        es.lp.save_state(view);
                    }
                    (now.max(es.busy_until) + p.task_delay, out, "compute")
                }
            };
            es.busy_until = end;
            if let Some(pkt) = out {
                let h = es
                    .lp
                    .send_real(VncMessage::new(m.recv_time, end, end, es.lp.id, m.src, HANDOFF, pkt));
                self.pending.push(end, h);
            }
            self.report.latencies.push(end - now);
            self.latency.push(vec![
                now.to_string(),
                es.node.callsign.clone(),
                callsign.clone(),
                path.to_string(),
                (end - now).to_string(),
            ]);
        }
        let released = es.lp.take_released_antis();
        self.send_antis(i, released, now);
        Ok(true)
    }

    fn rn_process(&mut self, j: usize, now: f64) -> Result<bool, HarnessError> {
        let rn = &mut self.rns[j];
        let before = rn.lp.lvt;
        let Some(m) = rn.lp.next_processable(now) else {
            return Ok(false);
        };
        // a real copy behind LVT only confirms what was already applied
        if m.send_time < m.recv_time && m.recv_time < before {
            return Ok(true);
        }
        let mut st = rn.lp.current_state.clone();
        let ev = Event::Packet {
            from: format!("ES{}", m.src),
            packet: m.payload,
        };
        rn_step(&mut st, &ev, m.recv_time).map_err(protocol)?;
        rn.lp.save_state(st);
        Ok(true)
    }

    fn advance(&mut self, now: f64) {
        let horizon = now - self.p.commit_lag;
        for es in self.es.iter_mut() {
            es.lp.advance(horizon, &mut |_| {});
        }
        for rn in self.rns.iter_mut() {
            let Rn {
                callsign,
                lp,
                committed,
                handoffs,
                first_handoff,
                ..
            } = rn;
            let trace = &mut self.trace;
            lp.advance(horizon, &mut |s| {
                let st = &s.state;
                if st.fsm_state == committed.fsm_state && st.associated_es == committed.associated_es {
                    return;
                }
                if let (Some(a), Some(b)) = (&committed.associated_es, &st.associated_es) {
                    if a != b {
                        *handoffs += 1;
                        first_handoff.get_or_insert(s.save_time);
                    }
                }
                trace.push(vec![
                    s.save_time.to_string(),
                    callsign.clone(),
                    st.fsm_state.as_str().to_string(),
                    HANDOFF.to_string(),
                    String::new(),
                ]);
                *committed = st.clone();
            });
        }
    }
}

/// Runs the orderwire scenario: switch configuration, then RN position
/// updates driving the beam-table task and handoffs.
pub fn run_ncp(cfg: &ScenarioConfig) -> Result<MetricsReport, HarnessError> {
    let p = NcpParams::from_config(cfg)?;
    let mode_name = match p.mode {
        Mode::Vnc => "vnc",
        Mode::Sequential => "sequential",
    };
    let table = TIMETAB.iter().map(|(k, d)| (k.to_string(), *d)).collect();
    let base = TransportConfig {
        delay: DelayModel::PerKind {
            table,
            default: 0.5,
        },
        ..TransportConfig::default()
    };
    let mut net = Net::new(cfg.transport(base)?);
    let mut es = Vec::new();
    for k in 1..=p.num_es {
        let callsign = format!("ES{k}");
        let mut node = NodeState::es(
            &callsign,
            (k - 1) as f64 * p.es_stagger,
            p.es_position(k),
            p.mycall_t,
        );
        node.retry = p.retry;
        node.retry_timeout = p.retry_timeout;
        node.topology_time = p.topology_time;
        let lp = init_lp(k, p.theta, p.lambda, EsView::default())?
            .with_mode(p.mode)
            .with_cancellation(p.cancellation);
        net.name(k, &format!("es{k}"));
        es.push(Es {
            node,
            started: false,
            lp,
            busy_until: 0.0,
            pre_busy_until: 0.0,
            cache: BTreeMap::new(),
            superseded: BTreeSet::new(),
            vhandoff: BTreeMap::new(),
            window_holds: 0,
            mispredicted: 0,
        });
    }
    let mut trace = Table::new(&["t", "node", "state", "event", "emitted"]);
    let mut rns = Vec::new();
    for j in 1..=p.num_rn {
        let id = RN_BASE + j;
        let callsign = format!("RN{j}");
        let start = Position::new(p.rn_position.x, p.rn_position.y + 2.0 * (j - 1) as f64);
        let motion = MotionState::new(start, p.rn_speed, p.rn_direction, p.rn_start)
            .ok_or_else(|| HarnessError::Unschedulable("invalid RN speed or direction".into()))?;
        let driver = DrivingProcess::new(
            DriverConfig {
                id,
                dst: 1,
                update_period: p.update_period,
                delta: p.delta,
                lambda: p.lambda,
                error_model: p.error,
                real_opt: p.real_opt,
                downstream_min_theta: p.theta,
                mode: p.mode,
                seed: p.seed ^ (0xd71e_0000 + j as u64),
            },
            motion,
            GpsFeed::exact(motion),
        )?;
        let mut node = NodeState::rn(&callsign, p.rn_start, start, p.update_period);
        let step = rn_step(&mut node, &Event::Startup, p.rn_start).map_err(protocol)?;
        trace.push(vec![
            p.rn_start.to_string(),
            callsign.clone(),
            node.fsm_state.as_str().to_string(),
            Event::Startup.name(),
            step.kinds().join("+"),
        ]);
        let lp = init_lp(id, 0.5, p.lambda, node.clone())?
            .with_mode(p.mode)
            .with_cancellation(p.cancellation);
        net.name(id, &format!("rn{j}"));
        rns.push(Rn {
            callsign,
            lp,
            driver,
            committed: node,
            handoffs: 0,
            first_handoff: None,
        });
    }
    let mut sim = Sim {
        report: MetricsReport::new("ncp", p.seed, mode_name),
        p,
        es,
        rns,
        net,
        timers: EventQueue::new(),
        pending: EventQueue::new(),
        trace,
        latency: Table::new(&["t", "node", "rn", "path", "latency"]),
        user_pos_dropped: 0,
        driver_sends: 0,
        handoff_antis: 0,
    };

    let steps = (sim.p.duration / sim.p.tick).round() as u64;
    let mut next_sample = 0i64;
    for step in 0..=steps {
        let now = step as f64 * sim.p.tick;
        for i in 0..sim.es.len() {
            if !sim.es[i].started && now >= sim.es[i].node.start_up_time {
                sim.es[i].started = true;
                sim.es_event(i, Event::Startup, now)?;
            }
        }
        while let Some((_, (i, timer))) = sim.timers.pop_due(now) {
            sim.es_event(i, Event::Timeout(timer), now)?;
        }
        if now >= sim.p.rn_start {
            for j in 0..sim.rns.len() {
                let callsign = sim.rns[j].callsign.clone();
                for m in step_driver(&mut sim.rns[j].driver, now) {
                    for k in 1..=sim.p.num_es {
                        let copy = VncMessage {
                            send_time: m.send_time,
                            recv_time: m.recv_time,
                            anti: false,
                            origin_real_time: m.origin_real_time,
                            src: m.src,
                            dst: k,
                            kind: USER_POS,
                            seq: m.seq,
                            payload: NcpPacket::UserPos {
                                callsign: callsign.clone(),
                                gps_time: m.recv_time,
                                position: m.payload,
                            },
                        };
                        sim.driver_sends += 1;
                        sim.net.send(copy, now, &mut sim.report);
                    }
                }
            }
        }
        while let Some((_, h)) = sim.pending.pop_due(now) {
            sim.net.send(h, now, &mut sim.report);
        }
        loop {
            let mut progressed = false;
            while let Some(m) = sim.net.pop_due(now) {
                sim.arrive(m, now)?;
                progressed = true;
            }
            for i in 0..sim.es.len() {
                while sim.es_process(i, now)? {
                    progressed = true;
                }
            }
            for j in 0..sim.rns.len() {
                while sim.rn_process(j, now)? {
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        sim.advance(now);
        if now.floor() as i64 >= next_sample {
            next_sample = now.floor() as i64 + 1;
            for e in &sim.es {
                sim.report.record_lvt(now, &format!("es{}", e.lp.id), e.lp.lvt);
            }
            for r in &sim.rns {
                sim.report
                    .record_lvt(now, &format!("rn{}", r.lp.id - RN_BASE), r.driver.lvt);
            }
        }
    }
    finish(sim)
}

fn finish(sim: Sim) -> Result<MetricsReport, HarnessError> {
    let Sim {
        p,
        es,
        rns,
        net,
        mut report,
        trace,
        latency,
        user_pos_dropped,
        driver_sends,
        handoff_antis,
        ..
    } = sim;
    let configured = es.iter().filter(|e| e.node.fsm_state == FsmState::Active).count();
    let masters = es.iter().filter(|e| e.node.is_master()).count();
    let s = &mut report.scalars;
    s.insert("ncp.configured".into(), configured as f64);
    s.insert("ncp.masters".into(), masters as f64);
    s.insert(
        "ncp.config_rounds".into(),
        es.iter().map(|e| e.node.config_rounds as f64).sum(),
    );
    s.insert(
        "ncp.reconfigurations".into(),
        es.iter().map(|e| e.node.reconfigurations as f64).sum(),
    );
    s.insert("ncp.user_pos_dropped".into(), user_pos_dropped as f64);
    s.insert("ncp.driver_sends".into(), driver_sends as f64);
    s.insert("ncp.handoff_antis".into(), handoff_antis as f64);
    s.insert(
        "ncp.mispredicted".into(),
        es.iter().map(|e| e.mispredicted as f64).sum(),
    );
    let (mut checks, mut tol) = (0u64, 0u64);
    for e in &es {
        let id = e.lp.id;
        s.insert(format!("es{id}.mycall_timer"), e.node.mycall_timer);
        s.insert(format!("es{id}.window_holds"), e.window_holds as f64);
        s.insert(format!("es{id}.active"), (e.node.fsm_state == FsmState::Active) as u8 as f64);
        checks += e.lp.counters.tolerance_checks;
        tol += e.lp.counters.rollbacks_tolerance;
        report.lp.insert(format!("es{id}"), e.lp.counters.clone());
    }
    if checks > 0 {
        s.insert("tolerance_rollback_fraction".into(), tol as f64 / checks as f64);
    }
    let (mut v_out, mut r_out, mut r_sup) = (0u64, 0u64, 0u64);
    for r in &rns {
        let j = r.lp.id - RN_BASE;
        let assoc = r.lp.current_state.associated_es.as_deref().and_then(es_id).unwrap_or(0);
        s.insert(format!("rn{j}.associated"), assoc as f64);
        s.insert(format!("rn{j}.handoffs"), r.handoffs as f64);
        if let Some(t) = r.first_handoff {
            s.insert(format!("rn{j}.first_handoff"), t);
        }
        v_out += r.driver.counters.virtual_out;
        r_out += r.driver.counters.real_out;
        r_sup += r.driver.counters.real_suppressed;
        report.lp.insert(format!("rn{j}"), r.lp.counters.clone());
    }
    s.insert("driver.virtual_out".into(), v_out as f64);
    s.insert("driver.real_out".into(), r_out as f64);
    s.insert("driver.real_suppressed".into(), r_sup as f64);
    if let Some(m) = report.mean_latency() {
        report.scalars.insert("ncp.mean_latency".into(), m);
        let max = report.latencies.iter().cloned().fold(0.0, f64::max);
        report.scalars.insert("ncp.max_latency".into(), max);
    }
    report.tables.insert("fsm_trace.csv".into(), trace);
    report.tables.insert("latency.csv".into(), latency);
    report.transport = net.transport.counters.clone();
    report.measured_beta = vnc_harness::measure_beta(&report).ok();
    if p.assert_configured && configured < es.len() {
        let missing: Vec<String> = es
            .iter()
            .filter(|e| e.node.fsm_state != FsmState::Active)
            .map(|e| format!("{} ({})", e.node.callsign, e.node.fsm_state.as_str()))
            .collect();
        return Err(HarnessError::Assertion(format!(
            "partitioned network, switches never configured: {}",
            missing.join(", ")
        )));
    }
    Ok(report)
}
