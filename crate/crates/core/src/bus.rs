//! Kernel-mediated communication with per-sender bandwidth caps and a
//! one-cycle delivery delay. Brigades report to the station; the station
//! answers with mission and traffic advice.

use serde::{Deserialize, Serialize};

use crate::params::SimParams;
use crate::world::{AgentId, BrigadeId, BuildingId, Position, RoadId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Feedback,
    Advice,
    TrafficAdvice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Feedback {
        new_fires: Vec<(BuildingId, u8)>,
        new_blocks: Vec<RoadId>,
        pos: Position,
        water: f64,
        health: f64,
    },
    Advice {
        brigade: BrigadeId,
        target: BuildingId,
        stand: Position,
        deadline: u32,
    },
    TrafficAdvice {
        brigade: BrigadeId,
        stand: Position,
    },
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::Feedback { .. } => MessageKind::Feedback,
            Payload::Advice { .. } => MessageKind::Advice,
            Payload::TrafficAdvice { .. } => MessageKind::TrafficAdvice,
        }
    }

    /// The brigade a station message is addressed to; feedback goes to the
    /// station.
    pub fn addressee(&self) -> Option<BrigadeId> {
        match self {
            Payload::Feedback { .. } => None,
            Payload::Advice { brigade, .. } | Payload::TrafficAdvice { brigade, .. } => Some(*brigade),
        }
    }

    pub fn encoded_size(&self) -> usize {
        serde_json::to_string(self).expect("payload serializes").len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: AgentId,
    pub kind: MessageKind,
    pub send_index: u32,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusStats {
    pub submitted: u64,
    pub accepted: u64,
    pub dropped_over_cap: u64,
    pub dropped_oversize: u64,
}

/// One cycle's worth of in-flight traffic. `submit` collects messages during
/// cycle `c`; `end_cycle` seals them for delivery by `receive` at `c + 1`.
#[derive(Debug, Clone, Default)]
pub struct MessageBus {
    pending: Vec<Message>,
    pending_cycle: Option<u32>,
    deliverable: Vec<Message>,
    deliverable_cycle: Option<u32>,
    submit_counts: std::collections::BTreeMap<AgentId, u32>,
    stats: BusStats,
}

impl MessageBus {
    pub fn new() -> MessageBus {
        MessageBus::default()
    }

    pub fn stats(&self) -> BusStats {
        self.stats
    }

    fn cap_for(sender: AgentId, params: &SimParams) -> u32 {
        match sender {
            AgentId::Brigade(_) => params.brigade_msg_cap,
            AgentId::Station => params.station_msg_cap,
        }
    }

    /// Submit a message during `cycle`. Returns whether it was accepted for
    /// delivery next cycle. Oversized payloads and over-cap submissions are
    /// dropped and counted separately.
    pub fn submit(&mut self, cycle: u32, sender: AgentId, payload: Payload, params: &SimParams) -> bool {
        match self.pending_cycle {
            None => self.pending_cycle = Some(cycle),
            Some(c) => debug_assert_eq!(cycle, c, "submit for a cycle already sealed"),
        }
        self.stats.submitted += 1;
        let index = self.submit_counts.entry(sender).or_insert(0);
        let send_index = *index;
        *index += 1;

        if payload.encoded_size() > params.payload_max_bytes {
            self.stats.dropped_oversize += 1;
            return false;
        }
        let accepted_so_far = self
            .pending
            .iter()
            .filter(|m| m.sender == sender)
            .count() as u32;
        if accepted_so_far >= Self::cap_for(sender, params) {
            self.stats.dropped_over_cap += 1;
            return false;
        }
        self.stats.accepted += 1;
        self.pending.push(Message { sender, kind: payload.kind(), send_index, payload });
        true
    }

    /// Seal the current cycle: everything accepted becomes deliverable at
    /// `cycle + 1`.
    pub fn end_cycle(&mut self, cycle: u32) {
        if let Some(c) = self.pending_cycle {
            debug_assert_eq!(cycle, c);
        }
        self.deliverable = std::mem::take(&mut self.pending);
        self.deliverable
            .sort_by(|a, b| a.sender.cmp(&b.sender).then(a.send_index.cmp(&b.send_index)));
        self.deliverable_cycle = Some(cycle + 1);
        self.pending_cycle = Some(cycle + 1);
        self.submit_counts.clear();
    }

    /// Messages for `agent` at `cycle`: everything accepted at `cycle - 1`
    /// addressed to it, ordered by (sender id, send index).
    pub fn receive(&self, cycle: u32, agent: AgentId) -> Vec<Message> {
        if Some(cycle) != self.deliverable_cycle {
            return Vec::new();
        }
        self.deliverable
            .iter()
            .filter(|m| match agent {
                AgentId::Station => m.kind == MessageKind::Feedback,
                AgentId::Brigade(id) => m.payload.addressee() == Some(id),
            })
            .cloned()
            .collect()
    }

    /// All messages deliverable this cycle, for the replay log.
    pub fn delivered_this_cycle(&self, cycle: u32) -> &[Message] {
        if Some(cycle) == self.deliverable_cycle {
            &self.deliverable
        } else {
            &[]
        }
    }
}
