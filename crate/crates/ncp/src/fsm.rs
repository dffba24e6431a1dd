use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use vnc_driver::Position;

use crate::packet::{NcpPacket, HANDOFF, MYCALL, NEWSWITCH, SWITCHPOS, TOPOLOGY, USER_POS};
use crate::NcpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Es,
    Rn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FsmState {
    Down,
    Configuring,
    Associating,
    Active,
    Delay,
}

impl FsmState {
    pub fn as_str(self) -> &'static str {
        match self {
            FsmState::Down => "down",
            FsmState::Configuring => "configuring",
            FsmState::Associating => "associating",
            FsmState::Active => "active",
            FsmState::Delay => "delay",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SwitchEntry {
    pub start_up_time: Option<f64>,
    pub position: Option<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timer {
    MycallExpiry { round: u32 },
    NewSwitchRetry { to: String, round: u32 },
    TopologyWait { round: u32 },
    TopologyDone { round: u32 },
    UserPosRetry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Startup,
    Packet { from: String, packet: NcpPacket },
    Timeout(Timer),
}

impl Event {
    pub fn name(&self) -> String {
        match self {
            Event::Startup => "startup".into(),
            Event::Packet { packet, .. } => packet.kind().into(),
            Event::Timeout(t) => match t {
                Timer::MycallExpiry { .. } => "mycall_timeout".into(),
                Timer::NewSwitchRetry { .. } => "newswitch_retry".into(),
                Timer::TopologyWait { .. } => "topology_timeout".into(),
                Timer::TopologyDone { .. } => "topology_done".into(),
                Timer::UserPosRetry => "user_pos_timeout".into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dest {
    AllEs,
    Node(String),
    /// The ES located at this position.
    EsAt(Position),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Step {
    pub emitted: Vec<(Dest, NcpPacket)>,
    pub timers: Vec<(f64, Timer)>,
}

impl Step {
    pub fn kinds(&self) -> Vec<&'static str> {
        self.emitted.iter().map(|(_, p)| p.kind()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeState {
    pub role: Role,
    pub callsign: String,
    pub start_up_time: f64,
    pub fsm_state: FsmState,
    pub position: Position,
    pub known_switch_table: BTreeMap<String, SwitchEntry>,
    /// For an RN the ES it is associated with.
    pub associated_es: Option<String>,
    /// For an ES the master it follows, itself included.
    pub master: Option<String>,
    pub mycall_timer: f64,
    pub backoff: f64,
    /// RN USER_POS period; ES NEWSWITCH retry interval.
    pub retry_timeout: f64,
    pub retry: bool,
    pub topology_time: f64,
    pub round: u32,
    pub awaiting: BTreeSet<String>,
    pub rebroadcast: bool,
    pub topology_pending: bool,
    pub config_rounds: u32,
    pub reconfigurations: u32,
}

impl NodeState {
    pub fn es(callsign: &str, start_up_time: f64, position: Position, t: f64) -> Self {
        NodeState {
            role: Role::Es,
            callsign: callsign.to_string(),
            start_up_time,
            fsm_state: FsmState::Down,
            position,
            known_switch_table: BTreeMap::new(),
            associated_es: None,
            master: None,
            mycall_timer: t,
            backoff: 2.0,
            retry_timeout: 5.0,
            retry: true,
            topology_time: 1.0,
            round: 0,
            awaiting: BTreeSet::new(),
            rebroadcast: false,
            topology_pending: false,
            config_rounds: 0,
            reconfigurations: 0,
        }
    }

    pub fn rn(callsign: &str, start_up_time: f64, position: Position, update_period: f64) -> Self {
        NodeState {
            role: Role::Rn,
            retry_timeout: update_period,
            ..NodeState::es(callsign, start_up_time, position, 0.0)
        }
    }

    pub fn is_master(&self) -> bool {
        self.master.as_deref() == Some(self.callsign.as_str())
    }

    /// Known ES positions, this node's own included for an ES.
    pub fn switch_positions(&self) -> Vec<(String, Position)> {
        self.known_switch_table
            .iter()
            .filter_map(|(c, e)| e.position.map(|p| (c.clone(), p)))
            .collect()
    }

    fn mycall(&self) -> NcpPacket {
        NcpPacket::MyCall {
            callsign: self.callsign.clone(),
            start_up_time: self.start_up_time,
        }
    }

    fn user_pos(&self, now: f64) -> NcpPacket {
        NcpPacket::UserPos {
            callsign: self.callsign.clone(),
            gps_time: now,
            position: self.position,
        }
    }
}

/// Oldest start-up time wins; equal times go to the lowest callsign.
pub fn elect_master(mycalls: &[(String, f64)]) -> Result<String, NcpError> {
    mycalls
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .map(|(c, _)| c.clone())
        .ok_or(NcpError::EmptyElection)
}

/// Kinds a node of `role` may emit from `state`.
pub fn may_emit(role: Role, state: FsmState, kind: &str) -> bool {
    match role {
        Role::Rn => kind == USER_POS && state != FsmState::Delay,
        Role::Es => match state {
            FsmState::Down => kind == MYCALL,
            FsmState::Configuring => [MYCALL, NEWSWITCH, SWITCHPOS].contains(&kind),
            FsmState::Associating => kind == SWITCHPOS,
            FsmState::Delay => [NEWSWITCH, TOPOLOGY].contains(&kind),
            FsmState::Active => [NEWSWITCH, SWITCHPOS, TOPOLOGY, HANDOFF].contains(&kind),
        },
    }
}

fn others(node: &NodeState) -> Vec<String> {
    node.known_switch_table
        .keys()
        .filter(|c| **c != node.callsign)
        .cloned()
        .collect()
}

fn start_master_round(node: &mut NodeState, now: f64, out: &mut Step) {
    node.master = Some(node.callsign.clone());
    node.fsm_state = FsmState::Delay;
    node.topology_pending = false;
    node.awaiting = others(node).into_iter().collect();
    for c in node.awaiting.clone() {
        out.emitted.push((Dest::Node(c.clone()), NcpPacket::NewSwitch));
        if node.retry {
            out.timers.push((
                now + node.retry_timeout,
                Timer::NewSwitchRetry {
                    to: c,
                    round: node.round,
                },
            ));
        }
    }
    if node.awaiting.is_empty() {
        node.topology_pending = true;
        out.timers.push((now + node.topology_time, Timer::TopologyDone { round: node.round }));
    }
}

fn topology_wait(node: &NodeState) -> f64 {
    2.0 * node.retry_timeout + node.topology_time * node.known_switch_table.len().max(1) as f64
}

/// Edge-switch configuration machine: MYCALL discovery, election, the
/// NEWSWITCH / SWITCHPOS exchange and TOPOLOGY distribution.
pub fn es_step(node: &mut NodeState, ev: &Event, now: f64) -> Result<Step, NcpError> {
    if node.role != Role::Es {
        return Err(NcpError::WrongRole {
            node: node.callsign.clone(),
            what: ev.name(),
        });
    }
    let mut out = Step::default();
    match ev {
        Event::Startup => {
            if node.fsm_state != FsmState::Down {
                return Ok(out);
            }
            node.fsm_state = FsmState::Configuring;
            node.known_switch_table.insert(
                node.callsign.clone(),
                SwitchEntry {
                    start_up_time: Some(node.start_up_time),
                    position: Some(node.position),
                },
            );
            out.emitted.push((Dest::AllEs, node.mycall()));
            out.timers
                .push((now + node.mycall_timer, Timer::MycallExpiry { round: node.round }));
        }
        Event::Packet { from, packet } => {
            if node.fsm_state == FsmState::Down || *from == node.callsign {
                return Ok(out);
            }
            match packet {
                NcpPacket::MyCall {
                    callsign,
                    start_up_time,
                } => {
                    let known = node.known_switch_table.contains_key(callsign);
                    let entry = node.known_switch_table.entry(callsign.clone()).or_default();
                    entry.start_up_time = Some(*start_up_time);
                    if known || node.fsm_state == FsmState::Configuring {
                        return Ok(out);
                    }
                    // discovery after the timer expired: reconfigure with a longer timer
                    node.mycall_timer *= node.backoff;
                    node.round += 1;
                    node.reconfigurations += 1;
                    let newcomer_older = (*start_up_time, callsign.as_str())
                        < (node.start_up_time, node.callsign.as_str());
                    if node.is_master() && !newcomer_older {
                        start_master_round(node, now, &mut out);
                    } else {
                        node.master = None;
                        node.fsm_state = FsmState::Configuring;
                        out.timers
                            .push((now + node.mycall_timer, Timer::MycallExpiry { round: node.round }));
                    }
                }
                NcpPacket::NewSwitch => {
                    if node.is_master() {
                        return Ok(out);
                    }
                    node.known_switch_table.entry(from.clone()).or_default();
                    node.master = Some(from.clone());
                    node.fsm_state = FsmState::Associating;
                    out.emitted.push((
                        Dest::Node(from.clone()),
                        NcpPacket::SwitchPos {
                            gps_time: now,
                            position: node.position,
                        },
                    ));
                    if node.retry {
                        out.timers
                            .push((now + topology_wait(node), Timer::TopologyWait { round: node.round }));
                    }
                }
                NcpPacket::SwitchPos { position, .. } => {
                    if !node.is_master() {
                        return Ok(out);
                    }
                    node.known_switch_table.entry(from.clone()).or_default().position = Some(*position);
                    match node.fsm_state {
                        FsmState::Delay => {
                            node.awaiting.remove(from);
                            if node.awaiting.is_empty() && !node.topology_pending {
                                node.topology_pending = true;
                                out.timers
                                    .push((now + node.topology_time, Timer::TopologyDone { round: node.round }));
                            }
                        }
                        FsmState::Active => {
                            out.emitted.push((
                                Dest::Node(from.clone()),
                                NcpPacket::Topology {
                                    nodes: node.switch_positions(),
                                },
                            ));
                        }
                        _ => {}
                    }
                }
                NcpPacket::Topology { nodes } => {
                    if node.is_master() || node.master.as_deref() != Some(from.as_str()) {
                        return Ok(out);
                    }
                    for (c, p) in nodes {
                        node.known_switch_table.entry(c.clone()).or_default().position = Some(*p);
                    }
                    node.fsm_state = FsmState::Active;
                }
                NcpPacket::UserPos { .. } => {}
                NcpPacket::Handoff { .. } => {
                    return Err(NcpError::WrongRole {
                        node: node.callsign.clone(),
                        what: HANDOFF.into(),
                    })
                }
            }
        }
        Event::Timeout(timer) => match timer {
            Timer::MycallExpiry { round } => {
                if *round != node.round || node.fsm_state != FsmState::Configuring {
                    return Ok(out);
                }
                let rest = others(node);
                if rest.is_empty() {
                    if !node.rebroadcast {
                        node.rebroadcast = true;
                        out.emitted.push((Dest::AllEs, node.mycall()));
                        out.timers
                            .push((now + node.mycall_timer, Timer::MycallExpiry { round: node.round }));
                    } else {
                        node.master = Some(node.callsign.clone());
                        node.fsm_state = FsmState::Active;
                        node.config_rounds += 1;
                    }
                    return Ok(out);
                }
                let calls: Vec<(String, f64)> = node
                    .known_switch_table
                    .iter()
                    .filter_map(|(c, e)| e.start_up_time.map(|s| (c.clone(), s)))
                    .collect();
                if elect_master(&calls)? == node.callsign {
                    start_master_round(node, now, &mut out);
                } else if !node.rebroadcast {
                    // the master may not have heard us
                    node.rebroadcast = true;
                    out.emitted.push((Dest::AllEs, node.mycall()));
                    out.timers
                        .push((now + node.mycall_timer, Timer::MycallExpiry { round: node.round }));
                }
            }
            Timer::NewSwitchRetry { to, round } => {
                if *round == node.round && node.fsm_state == FsmState::Delay && node.awaiting.contains(to) {
                    out.emitted.push((Dest::Node(to.clone()), NcpPacket::NewSwitch));
                    out.timers.push((
                        now + node.retry_timeout,
                        Timer::NewSwitchRetry {
                            to: to.clone(),
                            round: *round,
                        },
                    ));
                }
            }
            Timer::TopologyWait { round } => {
                if *round == node.round && node.fsm_state == FsmState::Associating {
                    if let Some(m) = node.master.clone() {
                        out.emitted.push((
                            Dest::Node(m),
                            NcpPacket::SwitchPos {
                                gps_time: now,
                                position: node.position,
                            },
                        ));
                        out.timers
                            .push((now + topology_wait(node), Timer::TopologyWait { round: *round }));
                    }
                }
            }
            Timer::TopologyDone { round } => {
                if *round != node.round || node.fsm_state != FsmState::Delay {
                    return Ok(out);
                }
                let nodes = node.switch_positions();
                for c in others(node) {
                    out.emitted
                        .push((Dest::Node(c), NcpPacket::Topology { nodes: nodes.clone() }));
                }
                node.topology_pending = false;
                node.fsm_state = FsmState::Active;
                node.config_rounds += 1;
            }
            Timer::UserPosRetry => {
                return Err(NcpError::WrongRole {
                    node: node.callsign.clone(),
                    what: ev.name(),
                })
            }
        },
    }
    Ok(out)
}

/// Remote-node machine: USER_POS broadcast and retry, association on
/// HANDOFF, redirection to the indicated ES.
pub fn rn_step(node: &mut NodeState, ev: &Event, now: f64) -> Result<Step, NcpError> {
    if node.role != Role::Rn {
        return Err(NcpError::WrongRole {
            node: node.callsign.clone(),
            what: ev.name(),
        });
    }
    let mut out = Step::default();
    match ev {
        Event::Startup => {
            if node.fsm_state != FsmState::Down {
                return Ok(out);
            }
            node.fsm_state = FsmState::Associating;
            out.emitted.push((Dest::AllEs, node.user_pos(now)));
            out.timers.push((now + node.retry_timeout, Timer::UserPosRetry));
        }
        Event::Timeout(Timer::UserPosRetry) => {
            if node.fsm_state == FsmState::Down {
                return Ok(out);
            }
            out.emitted.push((Dest::AllEs, node.user_pos(now)));
            out.timers.push((now + node.retry_timeout, Timer::UserPosRetry));
        }
        Event::Packet {
            from,
            packet:
                NcpPacket::Handoff {
                    frequency,
                    time_slot,
                    es_position,
                },
        } => {
            if node.fsm_state == FsmState::Down {
                return Ok(out);
            }
            if frequency.is_some() && time_slot.is_some() {
                node.known_switch_table.insert(
                    from.clone(),
                    SwitchEntry {
                        start_up_time: None,
                        position: Some(*es_position),
                    },
                );
                node.associated_es = Some(from.clone());
                node.fsm_state = FsmState::Active;
            } else {
                if node.associated_es.as_deref() == Some(from.as_str()) {
                    node.associated_es = None;
                    node.fsm_state = FsmState::Associating;
                }
                out.emitted.push((Dest::EsAt(*es_position), node.user_pos(now)));
            }
        }
        _ => {
            return Err(NcpError::WrongRole {
                node: node.callsign.clone(),
                what: ev.name(),
            })
        }
    }
    Ok(out)
}
