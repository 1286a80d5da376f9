//! The fire-brigade agent: a three-layer pipeline run once per cycle.
//!
//! The heuristic layer digests perception and station messages into the
//! brigade's private world model and raises alternative flags (critical
//! injury, empty tank, discovered blockages, feedback due). The decision
//! layer proposes a command from the advice-based mission structure, falling
//! back to chasing known fires or systematic exploration. The core filter
//! applies a short ordered rule list that can override everything else.
//!
//! Layer order is fixed; [`step`] runs all three and records a trace so
//! tests can assert none was skipped.

use std::collections::BTreeMap;

use crate::bus::{Message, Payload};
use crate::kernel::{Command, Perception};
use crate::params::SimParams;
use crate::pathplan::{reachable_set, shortest_path, tree_distances_m, GraphView, PathResult};
use crate::world::{stage_is_fiery, BrigadeId, BuildingId, CityMap, NodeId, Position, RoadId};

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveMission {
    pub target: BuildingId,
    pub stand: Position,
    pub deadline: u32,
}

#[derive(Debug, Clone)]
pub struct BrigadeMemory {
    pub id: BrigadeId,
    pub view: GraphView,
    /// Last seen stage and the cycle it was seen, per building.
    pub known_buildings: BTreeMap<BuildingId, (u8, u32)>,
    pub mission: Option<ActiveMission>,
    pub last_feedback_cycle: Option<u32>,
    /// Cycle each node was last stood on, for wander-mode staleness.
    pub visits: BTreeMap<NodeId, u32>,
    /// Fires seen since the last feedback went out, in discovery order.
    unreported_fires: Vec<(BuildingId, u8)>,
    /// Blockages seen since the last feedback went out.
    unreported_blocks: Vec<RoadId>,
}

impl BrigadeMemory {
    pub fn new(id: BrigadeId) -> BrigadeMemory {
        BrigadeMemory {
            id,
            view: GraphView::new(),
            known_buildings: BTreeMap::new(),
            mission: None,
            last_feedback_cycle: None,
            visits: BTreeMap::new(),
            unreported_fires: Vec::new(),
            unreported_blocks: Vec::new(),
        }
    }

    /// Memory at spawn time: the dispatch that starts the response names
    /// the initial fire sites, so they are known from cycle 0.
    pub fn at_spawn(id: BrigadeId, scenario: &crate::world::Scenario) -> BrigadeMemory {
        let mut mem = BrigadeMemory::new(id);
        for &b in &scenario.ignitions {
            mem.known_buildings.insert(b, (1, 0));
        }
        mem
    }

    pub fn known_stage(&self, b: BuildingId) -> u8 {
        self.known_buildings.get(&b).map(|&(s, _)| s).unwrap_or(0)
    }

    fn known_fiery(&self) -> impl Iterator<Item = BuildingId> + '_ {
        self.known_buildings
            .iter()
            .filter(|(_, &(s, _))| (1..=3).contains(&s))
            .map(|(&b, _)| b)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alternatives {
    pub critical_injury: bool,
    pub water_empty: bool,
    pub blocked_discovered: Vec<RoadId>,
    pub feedback_due: bool,
    /// Report for the station, built when feedback is due.
    pub feedback: Option<Payload>,
}

/// A proposed command plus the node it is ultimately trying to reach, so
/// the core filter can test reachability.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub command: Command,
    pub destination: Option<NodeId>,
}

/// Update memory from perception and advice, raise alternatives, and build
/// the feedback payload when one is due.
pub fn heuristic_layer(
    perception: &Perception,
    messages: &[Message],
    memory: &mut BrigadeMemory,
    cycle: u32,
    map: &CityMap,
    params: &SimParams,
) -> Alternatives {
    let mut alts = Alternatives::default();
    memory.view.set_cycle(cycle);

    // Advice first; perception of the same cycle still wins on world facts.
    for msg in messages {
        match &msg.payload {
            Payload::Advice { brigade, target, stand, deadline } if *brigade == memory.id => {
                memory.mission =
                    Some(ActiveMission { target: *target, stand: *stand, deadline: *deadline });
            }
            Payload::TrafficAdvice { brigade, stand } if *brigade == memory.id => {
                if let Some(m) = memory.mission.as_mut() {
                    m.stand = *stand;
                }
            }
            _ => {}
        }
    }

    for &(b, stage, _broken) in &perception.buildings {
        let old = memory.known_stage(b);
        // Report anything the station cares about: a building catching
        // fire, advancing a stage, or going out.
        let newsworthy = stage != old && (stage_is_fiery(stage) || stage >= 4);
        if newsworthy {
            memory.unreported_fires.retain(|&(f, _)| f != b);
            memory.unreported_fires.push((b, stage));
        }
        memory.known_buildings.insert(b, (stage, cycle));
    }
    for &(road, blocked) in &perception.roads {
        let was_traversable = memory.view.is_traversable(map, road);
        memory.view.observe_road(map, road, blocked);
        if blocked && was_traversable {
            alts.blocked_discovered.push(road);
            let _ = memory.view.report_blocked(map, road, cycle, params.reopen_delay_cycles);
            if !memory.unreported_blocks.contains(&road) {
                memory.unreported_blocks.push(road);
            }
        }
    }

    // Everything inside vision counts as seen for exploration staleness.
    let here = match perception.position {
        Position::Node(n) => n,
        Position::Building(b) => map.building_entrances[b.index()],
    };
    let here_point = match perception.position {
        Position::Node(n) => map.nodes[n.index()].pos,
        Position::Building(b) => map.buildings[b.index()].pos,
    };
    for node in &map.nodes {
        if node.pos.distance(here_point) <= params.vision_radius_m {
            memory.visits.insert(node.id, cycle);
        }
    }
    memory.visits.insert(here, cycle);

    // A mission ends on timeout or once the target is known to be out.
    if let Some(m) = &memory.mission {
        let stage = memory.known_stage(m.target);
        if cycle > m.deadline || stage >= 4 {
            memory.mission = None;
        }
    }

    alts.critical_injury = perception.health.is_some_and(|h| h <= params.critical_injury_threshold);
    alts.water_empty = perception.water.is_some_and(|w| w < params.extinguish_per_cycle);
    // Reporting slots are staggered by brigade id so the station hears from
    // someone every cycle instead of the whole team at once.
    alts.feedback_due = cycle % params.feedback_interval == memory.id.0 % params.feedback_interval;

    if alts.feedback_due {
        let mut new_fires = memory.unreported_fires.clone();
        let mut new_blocks = memory.unreported_blocks.clone();
        let mut payload = Payload::Feedback {
            new_fires: new_fires.clone(),
            new_blocks: new_blocks.clone(),
            pos: perception.position,
            water: perception.water.unwrap_or(0.0),
            health: perception.health.unwrap_or(0.0),
        };
        // Oldest entries drop first until the payload fits the wire limit.
        while payload.encoded_size() > params.payload_max_bytes
            && (!new_fires.is_empty() || !new_blocks.is_empty())
        {
            if new_fires.len() >= new_blocks.len() {
                new_fires.remove(0);
            } else {
                new_blocks.remove(0);
            }
            payload = Payload::Feedback {
                new_fires: new_fires.clone(),
                new_blocks: new_blocks.clone(),
                pos: perception.position,
                water: perception.water.unwrap_or(0.0),
                health: perception.health.unwrap_or(0.0),
            };
        }
        alts.feedback = Some(payload);
        memory.last_feedback_cycle = Some(cycle);
        memory.unreported_fires.clear();
        memory.unreported_blocks.clear();
    }

    alts
}

fn move_toward(
    map: &CityMap,
    memory: &BrigadeMemory,
    here: NodeId,
    dest: NodeId,
    enter: Option<BuildingId>,
) -> Option<Proposal> {
    match shortest_path(map, &memory.view, here, dest).ok()? {
        PathResult::Path(path) => Some(Proposal {
            command: Command::Move { path, enter },
            destination: Some(dest),
        }),
        PathResult::Unreachable => None,
    }
}

/// Pick the wander goal: the reachable node least recently stood on, ties
/// toward the lower node id.
fn wander_goal(map: &CityMap, memory: &BrigadeMemory, here: NodeId) -> Option<NodeId> {
    let reach = reachable_set(map, &memory.view, here);
    reach
        .into_iter()
        .min_by_key(|n| (memory.visits.get(n).copied().map_or(0u64, |c| c as u64 + 1), *n))
}

fn wander(map: &CityMap, memory: &BrigadeMemory, here: NodeId) -> Proposal {
    if let Some(goal) = wander_goal(map, memory, here) {
        if goal != here {
            if let Some(p) = move_toward(map, memory, here, goal, None) {
                return p;
            }
        }
    }
    Proposal { command: Command::Rest, destination: None }
}

/// Advice-based decision: serve the mission if one is active, otherwise
/// close in on the nearest known fire, otherwise explore.
pub fn decision_layer(
    perception: &Perception,
    memory: &BrigadeMemory,
    map: &CityMap,
    params: &SimParams,
) -> Proposal {
    let here = match perception.position {
        Position::Node(n) => n,
        Position::Building(b) => map.building_entrances[b.index()],
    };
    let here_point = match perception.position {
        Position::Node(n) => map.nodes[n.index()].pos,
        Position::Building(b) => map.buildings[b.index()].pos,
    };

    if let Some(m) = &memory.mission {
        let target_pos = map.buildings[m.target.index()].pos;
        let in_range = here_point.distance(target_pos) <= params.extinguish_range_m;
        let target_fiery = (1..=3).contains(&memory.known_stage(m.target));
        let tank = perception.water.unwrap_or(0.0);
        if in_range && target_fiery && tank > 0.0 {
            return Proposal {
                command: Command::Extinguish {
                    target: m.target,
                    amount: params.extinguish_per_cycle.min(tank),
                },
                destination: None,
            };
        }
        let (stand_node, enter) = match m.stand {
            Position::Node(n) => (n, None),
            Position::Building(b) => (map.building_entrances[b.index()], Some(b)),
        };
        if here != stand_node {
            if let Some(p) = move_toward(map, memory, here, stand_node, enter) {
                return p;
            }
            return Proposal { command: Command::Rest, destination: Some(stand_node) };
        }
        // At the stand but not yet effective: enter the stand building or
        // fall back to the target's own entrance.
        if let Some(b) = enter {
            if perception.position != Position::Building(b) {
                return Proposal {
                    command: Command::Move { path: vec![here], enter: Some(b) },
                    destination: Some(here),
                };
            }
        }
        if !in_range {
            let entrance = map.building_entrances[m.target.index()];
            if entrance != here {
                if let Some(p) = move_toward(map, memory, here, entrance, None) {
                    return p;
                }
                return Proposal { command: Command::Rest, destination: Some(entrance) };
            }
        }
        return Proposal { command: Command::Rest, destination: None };
    }

    // No mission. Chase the nearest known fire if any is reachable.
    let fires: Vec<BuildingId> = memory.known_fiery().collect();
    if !fires.is_empty() {
        let dists = tree_distances_m(map, &memory.view, here);
        let nearest = fires
            .iter()
            .filter_map(|&b| {
                dists[map.building_entrances[b.index()].index()].map(|d| (b, d))
            })
            .min_by(|(ba, da), (bb, db)| da.partial_cmp(db).unwrap().then(ba.cmp(bb)));
        if let Some((b, _)) = nearest {
            let entrance = map.building_entrances[b.index()];
            if entrance == here {
                return Proposal { command: Command::Rest, destination: None };
            }
            if let Some(p) = move_toward(map, memory, here, entrance, None) {
                return p;
            }
        }
    }

    wander(map, memory, here)
}

fn nearest_refuge_move(
    map: &CityMap,
    memory: &BrigadeMemory,
    position: Position,
) -> Command {
    if let Position::Building(b) = position {
        if map.buildings[b.index()].is_refuge {
            return Command::Rest; // already safe: stay to heal and refill
        }
    }
    let here = match position {
        Position::Node(n) => n,
        Position::Building(b) => map.building_entrances[b.index()],
    };
    let dists = tree_distances_m(map, &memory.view, here);
    let best = map
        .refuges
        .iter()
        .filter_map(|&r| {
            dists[map.building_entrances[r.index()].index()].map(|d| (r, d))
        })
        .min_by(|(ra, da), (rb, db)| da.partial_cmp(db).unwrap().then(ra.cmp(rb)));
    match best {
        Some((refuge, _)) => {
            let entrance = map.building_entrances[refuge.index()];
            match shortest_path(map, &memory.view, here, entrance) {
                Ok(PathResult::Path(path)) => Command::Move { path, enter: Some(refuge) },
                _ => Command::Rest,
            }
        }
        None => Command::Rest, // no reachable refuge: nothing better to do
    }
}

/// The core rule list, first match wins: injured agents and dry tanks head
/// for a refuge, unreachable destinations degrade to exploration, anything
/// else passes through untouched.
pub fn core_filter(
    proposal: &Proposal,
    alternatives: &Alternatives,
    memory: &BrigadeMemory,
    perception: &Perception,
    map: &CityMap,
) -> Command {
    if alternatives.critical_injury {
        return nearest_refuge_move(map, memory, perception.position);
    }
    if alternatives.water_empty {
        return nearest_refuge_move(map, memory, perception.position);
    }
    if let Some(dest) = proposal.destination {
        let here = match perception.position {
            Position::Node(n) => n,
            Position::Building(b) => map.building_entrances[b.index()],
        };
        let unreachable = !matches!(
            shortest_path(map, &memory.view, here, dest),
            Ok(PathResult::Path(_))
        );
        if unreachable {
            return wander(map, memory, here).command;
        }
    }
    proposal.command.clone()
}

/// Which layers ran, in order, plus their intermediate products.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub layers: Vec<&'static str>,
    pub alternatives: Alternatives,
    pub proposal: Proposal,
}

/// One full agent cycle: heuristic layer, decision layer, core filter.
pub fn step(
    perception: &Perception,
    messages: &[Message],
    memory: &mut BrigadeMemory,
    cycle: u32,
    map: &CityMap,
    params: &SimParams,
) -> (Command, StepTrace) {
    let mut layers = Vec::with_capacity(3);
    layers.push("heuristic");
    let alternatives = heuristic_layer(perception, messages, memory, cycle, map, params);
    layers.push("decision");
    let proposal = decision_layer(perception, memory, map, params);
    layers.push("core");
    let command = core_filter(&proposal, &alternatives, memory, perception, map);
    (command, StepTrace { layers, alternatives, proposal })
}
