use serde::Serialize;
use vnc_driver::Position;

pub const MYCALL: &str = "MYCALL";
pub const NEWSWITCH: &str = "NEWSWITCH";
pub const SWITCHPOS: &str = "SWITCHPOS";
pub const TOPOLOGY: &str = "TOPOLOGY";
pub const USER_POS: &str = vnc_driver::USER_POS;
pub const HANDOFF: &str = "HANDOFF";

/// Mean transfer time per packet kind, in seconds.
pub const TIMETAB: [(&str, f64); 6] = [
    (USER_POS, 0.677),
    (NEWSWITCH, 0.439),
    (HANDOFF, 0.473),
    (MYCALL, 0.492),
    (SWITCHPOS, 0.679),
    (TOPOLOGY, 0.664),
];

/// Orderwire packets. A HANDOFF without frequency and slot redirects the
/// RN to the ES at `es_position`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum NcpPacket {
    MyCall {
        callsign: String,
        start_up_time: f64,
    },
    NewSwitch,
    SwitchPos {
        gps_time: f64,
        position: Position,
    },
    Topology {
        nodes: Vec<(String, Position)>,
    },
    UserPos {
        callsign: String,
        gps_time: f64,
        position: Position,
    },
    Handoff {
        frequency: Option<u32>,
        time_slot: Option<u32>,
        es_position: Position,
    },
}

impl NcpPacket {
    pub fn kind(&self) -> &'static str {
        match self {
            NcpPacket::MyCall { .. } => MYCALL,
            NcpPacket::NewSwitch => NEWSWITCH,
            NcpPacket::SwitchPos { .. } => SWITCHPOS,
            NcpPacket::Topology { .. } => TOPOLOGY,
            NcpPacket::UserPos { .. } => USER_POS,
            NcpPacket::Handoff { .. } => HANDOFF,
        }
    }

    pub fn is_redirect(&self) -> bool {
        matches!(
            self,
            NcpPacket::Handoff {
                frequency: None,
                ..
            }
        )
    }
}

pub fn timetab_delay(kind: &str) -> Option<f64> {
    TIMETAB.iter().find(|(k, _)| *k == kind).map(|(_, d)| *d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_and_delays() {
        let p = NcpPacket::Handoff {
            frequency: None,
            time_slot: None,
            es_position: Position::new(0.0, 0.0),
        };
        assert_eq!(p.kind(), HANDOFF);
        assert!(p.is_redirect());
        assert_eq!(timetab_delay(USER_POS), Some(0.677));
        assert_eq!(timetab_delay(HANDOFF), Some(0.473));
        assert_eq!(timetab_delay("X"), None);
        assert_eq!(NcpPacket::NewSwitch.kind(), NEWSWITCH);
    }
}
