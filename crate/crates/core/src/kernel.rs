//! The coordinating kernel: ground-truth world state, command application,
//! fire physics, refuge effects, and scoring.
//!
//! A step applies six phases in a fixed order (scheduled road openings,
//! moves, extinguishing, fire spread, refuge and damage effects, cycle
//! advance). Ties inside a phase resolve in ascending agent or building id,
//! so a step is a pure function of its inputs and replays bit-identically.
//!
//! Burn stages: 0 unburnt, 1-3 burning, 4 extinguished, 5 burnt out. Legal
//! transitions are 0->1->2->3->5 and {1,2,3}->4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_distance, Point};
use crate::params::SimParams;
use crate::world::{AgentId, BrigadeId, BuildingId, NodeId, Position, RoadId, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Move {
        path: Vec<NodeId>,
        /// Building to enter if the full path is traversed and its entrance
        /// is the final node.
        enter: Option<BuildingId>,
    },
    Extinguish {
        target: BuildingId,
        amount: f64,
    },
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingState {
    pub heat: f64,
    pub stage: u8,
    pub max_stage_reached: u8,
    pub remaining_water_need: f64,
    pub stage_entered_cycle: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrigadeState {
    pub position: Position,
    pub health: f64,
    pub water: f64,
    pub incapacitated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub cycle: u32,
    pub buildings: Vec<BuildingState>,
    pub road_blocked: Vec<bool>,
    pub brigades: Vec<BrigadeState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub brigade: BrigadeId,
    pub code: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageChange {
    pub building: BuildingId,
    pub from: u8,
    pub to: u8,
}

/// Everything a step did besides producing the next state, for the replay
/// log and for tests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEffects {
    pub diagnostics: Vec<Diagnostic>,
    pub ignitions: Vec<BuildingId>,
    pub stage_changes: Vec<StageChange>,
    /// Water each brigade actually applied this cycle, per target.
    pub water_applied: Vec<(BrigadeId, BuildingId, f64)>,
    pub roads_opened: Vec<RoadId>,
}

impl WorldState {
    /// Initial state for a scenario, with brigades standing on the given
    /// spawn nodes (one brigade per node, in order).
    pub fn new(scenario: &Scenario, spawns: &[NodeId]) -> WorldState {
        let params = &scenario.params;
        let buildings = scenario
            .map()
            .buildings
            .iter()
            .map(|b| {
                if scenario.ignitions.contains(&b.id) {
                    BuildingState {
                        heat: params.threshold_for(b.broken),
                        stage: 1,
                        max_stage_reached: 1,
                        remaining_water_need: b.area_m2 * params.water_need_per_m2,
                        stage_entered_cycle: 0,
                    }
                } else {
                    BuildingState {
                        heat: 0.0,
                        stage: 0,
                        max_stage_reached: 0,
                        remaining_water_need: 0.0,
                        stage_entered_cycle: 0,
                    }
                }
            })
            .collect();
        let road_blocked = scenario.map().roads.iter().map(|r| r.initially_blocked).collect();
        let brigades = spawns
            .iter()
            .map(|&n| BrigadeState {
                position: Position::Node(n),
                health: params.health_max,
                water: params.tank_capacity,
                incapacitated: false,
            })
            .collect();
        WorldState { cycle: 0, buildings, road_blocked, brigades }
    }

    pub fn position_point(&self, scenario: &Scenario, b: BrigadeId) -> Point {
        match self.brigades[b.index()].position {
            Position::Node(n) => scenario.map().nodes[n.index()].pos,
            Position::Building(bl) => scenario.map().buildings[bl.index()].pos,
        }
    }

    /// The node a brigade effectively stands at for movement purposes.
    pub fn effective_node(&self, scenario: &Scenario, b: BrigadeId) -> NodeId {
        match self.brigades[b.index()].position {
            Position::Node(n) => n,
            Position::Building(bl) => scenario.map().building_entrances[bl.index()],
        }
    }

    pub fn any_fiery(&self) -> bool {
        self.buildings.iter().any(|b| (1..=3).contains(&b.stage))
    }

    pub fn stages(&self) -> Vec<u8> {
        self.buildings.iter().map(|b| b.stage).collect()
    }
}

fn stage_water_multiplier(stage: u8) -> f64 {
    SimParams::stage_multiplier(stage)
}

/// Advance the world one cycle. Malformed commands never fail the step;
/// they degrade to `Rest` with a diagnostic.
pub fn step(
    state: &WorldState,
    commands: &std::collections::BTreeMap<BrigadeId, Command>,
    scenario: &Scenario,
) -> Result<(WorldState, StepEffects)> {
    let params = &scenario.params;
    if state.cycle >= params.deadline_cycles {
        return Err(Error::InvalidArgument(format!(
            "cycle {} is at or past the deadline {}",
            state.cycle, params.deadline_cycles
        )));
    }
    let map = scenario.map();
    let mut next = state.clone();
    let mut fx = StepEffects::default();
    let cycle = state.cycle;

    // 1. Scheduled road openings.
    for opening in &scenario.road_open_schedule {
        if opening.cycle == cycle && next.road_blocked[opening.road.index()] {
            next.road_blocked[opening.road.index()] = false;
            fx.roads_opened.push(opening.road);
        }
    }

    // 2. Moves.
    for (&bid, command) in commands {
        if bid.index() >= next.brigades.len() {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "unknown_brigade".into() });
            continue;
        }
        if next.brigades[bid.index()].incapacitated {
            if !matches!(command, Command::Rest) {
                fx.diagnostics.push(Diagnostic { brigade: bid, code: "incapacitated".into() });
            }
            continue;
        }
        let Command::Move { path, enter } = command else { continue };
        let start = next.effective_node(scenario, bid);
        if path.first() != Some(&start) {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "bad_path_start".into() });
            continue;
        }
        if path.iter().any(|n| n.index() >= map.nodes.len()) {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "unknown_node_in_path".into() });
            continue;
        }
        let mut at = start;
        let mut steps_taken = 0u32;
        let mut completed = true;
        for w in path.windows(2) {
            if steps_taken >= params.move_budget_edges {
                completed = false;
                break;
            }
            let road = map
                .neighbors(w[0])
                .iter()
                .find(|&&(v, _)| v == w[1])
                .map(|&(_, r)| r);
            let Some(road) = road else {
                fx.diagnostics.push(Diagnostic { brigade: bid, code: "no_road_between".into() });
                completed = false;
                break;
            };
            if next.road_blocked[road.index()] {
                completed = false;
                break;
            }
            at = w[1];
            steps_taken += 1;
        }
        next.brigades[bid.index()].position = Position::Node(at);
        if completed {
            if let Some(b) = enter {
                if b.index() >= map.buildings.len() {
                    fx.diagnostics.push(Diagnostic { brigade: bid, code: "unknown_building".into() });
                } else if map.building_entrances[b.index()] == at {
                    next.brigades[bid.index()].position = Position::Building(*b);
                } else {
                    fx.diagnostics.push(Diagnostic { brigade: bid, code: "invalid_enter".into() });
                }
            }
        }
    }

    // 3. Extinguishing.
    for (&bid, command) in commands {
        if bid.index() >= next.brigades.len() || next.brigades[bid.index()].incapacitated {
            continue;
        }
        let Command::Extinguish { target, amount } = command else { continue };
        if target.index() >= map.buildings.len() {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "unknown_target".into() });
            continue;
        }
        if !(*amount > 0.0 && *amount <= params.extinguish_per_cycle) {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "amount_out_of_range".into() });
            continue;
        }
        let pos = next.position_point(scenario, bid);
        let dist = pos.distance(map.buildings[target.index()].pos);
        if dist > params.extinguish_range_m {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "extinguish_out_of_range".into() });
            continue;
        }
        let b = &mut next.buildings[target.index()];
        if !(1..=3).contains(&b.stage) {
            fx.diagnostics.push(Diagnostic { brigade: bid, code: "target_not_burning".into() });
            continue;
        }
        // Water is capped by the tank and the per-cycle limit only; pouring
        // more than the building still needs wastes the excess.
        let tank = next.brigades[bid.index()].water;
        let applied = amount.min(tank);
        if applied <= 0.0 {
            continue;
        }
        next.brigades[bid.index()].water -= applied;
        b.remaining_water_need -= applied;
        fx.water_applied.push((bid, *target, applied));
        if b.remaining_water_need <= 1e-9 {
            fx.stage_changes.push(StageChange { building: *target, from: b.stage, to: 4 });
            b.stage = 4;
            b.remaining_water_need = 0.0;
        }
    }

    // 4. Fire physics: heat from the currently fiery set, then ignitions,
    // then stage advancement.
    let fiery: Vec<BuildingId> = map
        .buildings
        .iter()
        .filter(|b| (1..=3).contains(&next.buildings[b.id.index()].stage))
        .map(|b| b.id)
        .collect();
    for &f in &fiery {
        let center = map.buildings[f.index()].pos;
        for n in map.buildings_within(center, params.spread_radius_m) {
            if n != f && next.buildings[n.index()].stage == 0 {
                next.buildings[n.index()].heat += params.spread_heat_per_neighbor;
            }
        }
    }
    for b in &map.buildings {
        let s = &mut next.buildings[b.id.index()];
        if s.stage == 0 && s.heat >= params.threshold_for(b.broken) {
            s.stage = 1;
            s.max_stage_reached = s.max_stage_reached.max(1);
            s.stage_entered_cycle = cycle;
            s.remaining_water_need = b.area_m2 * params.water_need_per_m2;
            fx.ignitions.push(b.id);
        }
    }
    for &f in &fiery {
        let s = &mut next.buildings[f.index()];
        if !(1..=3).contains(&s.stage) {
            continue; // extinguished earlier this cycle
        }
        if cycle.saturating_sub(s.stage_entered_cycle) >= params.stage_advance_period {
            let from = s.stage;
            if s.stage == 3 {
                fx.stage_changes.push(StageChange { building: f, from, to: 5 });
                s.stage = 5;
                s.remaining_water_need = 0.0;
            } else {
                let to = s.stage + 1;
                // The intensified fire consumes whatever quenching progress
                // was made: the need resets to the full new-stage amount.
                s.remaining_water_need =
                    map.buildings[f.index()].area_m2 * params.water_need_per_m2
                        * stage_water_multiplier(to);
                s.stage = to;
                s.max_stage_reached = s.max_stage_reached.max(to);
                s.stage_entered_cycle = cycle;
                fx.stage_changes.push(StageChange { building: f, from, to });
            }
        }
    }

    // 5. Refuge and damage effects.
    for i in 0..next.brigades.len() {
        if next.brigades[i].incapacitated {
            continue;
        }
        if let Position::Building(b) = next.brigades[i].position {
            let building = &map.buildings[b.index()];
            if building.is_refuge {
                next.brigades[i].water =
                    (next.brigades[i].water + params.refill_per_cycle).min(params.tank_capacity);
                next.brigades[i].health =
                    (next.brigades[i].health + params.heal_per_cycle).min(params.health_max);
            }
            if (1..=3).contains(&next.buildings[b.index()].stage) {
                next.brigades[i].health =
                    (next.brigades[i].health - params.fire_damage_per_cycle).max(0.0);
                if next.brigades[i].health == 0.0 {
                    next.brigades[i].incapacitated = true;
                }
            }
        }
    }

    // 6. Advance the clock.
    next.cycle = cycle + 1;
    fx.ignitions.sort_unstable();
    fx.stage_changes.sort_by_key(|c| c.building);
    Ok((next, fx))
}

/// What one agent can see this cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    pub cycle: u32,
    pub agent: AgentId,
    pub position: Position,
    /// Own tank and health; absent for the station.
    pub water: Option<f64>,
    pub health: Option<f64>,
    pub incapacitated: bool,
    /// (building, stage, broken) for every building in vision range.
    pub buildings: Vec<(BuildingId, u8, bool)>,
    /// (road, blocked) for every road with any point in vision range.
    pub roads: Vec<(RoadId, bool)>,
}

/// The station observes from the entrance of the lowest-id refuge (node 0
/// when the map has no refuge).
pub fn station_node(scenario: &Scenario) -> NodeId {
    scenario
        .refuges
        .iter()
        .min()
        .map(|&r| scenario.map().building_entrances[r.index()])
        .unwrap_or(NodeId(0))
}

/// Snapshot of everything within vision radius of the agent, plus its own
/// state. Nothing beyond the radius leaks through.
pub fn perceive(state: &WorldState, scenario: &Scenario, agent: AgentId) -> Result<Perception> {
    let map = scenario.map();
    let (position, water, health, incapacitated) = match agent {
        AgentId::Brigade(b) => {
            if b.index() >= state.brigades.len() {
                return Err(Error::unknown("brigade", b.0));
            }
            let s = &state.brigades[b.index()];
            (s.position, Some(s.water), Some(s.health), s.incapacitated)
        }
        AgentId::Station => (Position::Node(station_node(scenario)), None, None, false),
    };
    let here = match position {
        Position::Node(n) => map.nodes[n.index()].pos,
        Position::Building(b) => map.buildings[b.index()].pos,
    };
    let v_r = scenario.params.vision_radius_m;

    let buildings = map
        .buildings_within(here, v_r)
        .into_iter()
        .map(|b| {
            let meta = &map.buildings[b.index()];
            (b, state.buildings[b.index()].stage, meta.broken)
        })
        .collect();

    let roads = map
        .roads
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            segment_distance(here, map.nodes[r.a.index()].pos, map.nodes[r.b.index()].pos) <= v_r
        })
        .map(|(i, _)| (RoadId(i as u32), state.road_blocked[i]))
        .collect();

    Ok(Perception {
        cycle: state.cycle,
        agent,
        position,
        water,
        health,
        incapacitated,
        buildings,
        roads,
    })
}

/// Fraction of the city's burn mass consumed: each building contributes its
/// deepest burning stage over 3 (burnt out counts as 3), averaged over all
/// buildings.
pub fn burnt_ratio(state: &WorldState) -> f64 {
    if state.buildings.is_empty() {
        return 0.0;
    }
    let total: f64 = state.buildings.iter().map(|b| b.max_stage_reached as f64 / 3.0).sum();
    total / state.buildings.len() as f64
}
