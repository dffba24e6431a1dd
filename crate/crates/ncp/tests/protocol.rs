use proptest::prelude::*;
use vnc_driver::Position;
use vnc_ncp::{es_step, may_emit, rn_step, Dest, Event, NcpPacket, NodeState, Role, Timer};

fn packet(kind: u8, x: f64) -> NcpPacket {
    let position = Position::new(x, 0.0);
    match kind % 6 {
        0 => NcpPacket::MyCall {
            callsign: format!("ES{}", (x as u32) % 4),
            start_up_time: x,
        },
        1 => NcpPacket::NewSwitch,
        2 => NcpPacket::SwitchPos {
            gps_time: x,
            position,
        },
        3 => NcpPacket::Topology {
            nodes: vec![("ES0".into(), position)],
        },
        4 => NcpPacket::UserPos {
            callsign: "RN1".into(),
            gps_time: x,
            position,
        },
        _ => NcpPacket::Handoff {
            frequency: if x > 5.0 { Some(1) } else { None },
            time_slot: Some(0),
            es_position: position,
        },
    }
}

fn event(tag: u8, a: u8, x: f64) -> Event {
    match tag % 4 {
        0 => Event::Startup,
        1 | 2 => Event::Packet {
            from: format!("ES{}", a % 4),
            packet: packet(a / 4, x),
        },
        _ => Event::Timeout(match a % 5 {
            0 => Timer::MycallExpiry { round: (a / 5 % 2) as u32 },
            1 => Timer::NewSwitchRetry {
                to: format!("ES{}", a / 5 % 4),
                round: 0,
            },
            2 => Timer::TopologyWait { round: 0 },
            3 => Timer::TopologyDone { round: (a / 5 % 2) as u32 },
            _ => Timer::UserPosRetry,
        }),
    }
}

proptest! {
    #[test]
    fn fsm_emits_only_allowed_kinds(
        es_node in any::<bool>(),
        evs in proptest::collection::vec((any::<u8>(), any::<u8>(), 0.0f64..10.0), 1..40),
    ) {
        let mut node = if es_node {
            NodeState::es("ES1", 1.0, Position::new(0.0, 0.0), 20.0)
        } else {
            NodeState::rn("RN1", 0.0, Position::new(1.0, 1.0), 10.0)
        };
        let mut now = 0.0;
        for (tag, a, x) in evs {
            now += x;
            let ev = event(tag, a, x);
            let state = node.fsm_state;
            let step = if es_node { es_step(&mut node, &ev, now) } else { rn_step(&mut node, &ev, now) };
            let Ok(step) = step else { continue };
            let role = if es_node { Role::Es } else { Role::Rn };
            for (dest, pkt) in &step.emitted {
                prop_assert!(may_emit(role, state, pkt.kind()), "{:?} in {:?} emitted {}", role, state, pkt.kind());
                prop_assert_ne!(dest, &Dest::Node(node.callsign.clone()));
            }
            for (t, _) in &step.timers {
                prop_assert!(*t >= now);
            }
        }
    }
}
