//! The fire station: aggregates brigade feedback into a world model and
//! runs the planning pipeline each cycle.
//!
//! The pipeline has two regimes. During the opening cycles every free
//! brigade swarms the single most valuable fire (the prediction net has
//! nothing to say yet and half the roads are still blocked). Afterwards the
//! full chain runs: predict ignitions and water demand, score candidate
//! buildings, compute which brigades can reach which targets, solve the
//! min-cost assignment, and smooth crowding with traffic advice.
//!
//! The station only ever emits advice messages; it holds no command channel
//! to the kernel.

use std::collections::{BTreeMap, BTreeSet};

use crate::assign::{critical_assign, schedule_missions, Mission};
use crate::bus::{Message, Payload};
use crate::error::Result;
use crate::kernel::Perception;
use crate::params::SimParams;
use crate::pathplan::{tree_distances_m, GraphView};
use crate::predict::{extract_features, Knowledge, NetKind, PredictorNet, WATER_SCALE};
use crate::valuation::{building_value, select_targets, FireBorder};
use crate::world::{BrigadeId, BuildingId, CityMap, NodeId, Position};

#[derive(Debug, Clone)]
pub struct BrigadeInfo {
    pub position: Position,
    pub water: f64,
    pub health: f64,
    pub report_cycle: u32,
}

/// Everything the station believes about the world, built purely from
/// feedback messages and its own perception.
#[derive(Debug, Clone)]
pub struct StationWorldModel {
    pub view: GraphView,
    pub stages: Vec<u8>,
    pub report_cycle: Vec<Option<u32>>,
    pub first_fiery_cycle: Vec<Option<u32>>,
    pub est_heat: Vec<f64>,
    pub brigades: BTreeMap<BrigadeId, BrigadeInfo>,
    pub missions: Vec<Mission>,
}

impl StationWorldModel {
    /// Fresh model. The dispatch that starts the response names the initial
    /// fire sites, so they are known from cycle 0.
    pub fn new(
        n_buildings: usize,
        initial_fires: &[BuildingId],
        spawns: &BTreeMap<BrigadeId, NodeId>,
        params: &SimParams,
    ) -> Self {
        let mut stages = vec![0; n_buildings];
        let mut report_cycle = vec![None; n_buildings];
        let mut first_fiery_cycle = vec![None; n_buildings];
        for &b in initial_fires {
            stages[b.index()] = 1;
            report_cycle[b.index()] = Some(0);
            first_fiery_cycle[b.index()] = Some(0);
        }
        StationWorldModel {
            view: GraphView::new(),
            stages,
            report_cycle,
            first_fiery_cycle,
            est_heat: vec![0.0; n_buildings],
            brigades: spawns
                .iter()
                .map(|(&id, &node)| {
                    (
                        id,
                        BrigadeInfo {
                            position: Position::Node(node),
                            water: params.tank_capacity,
                            health: params.health_max,
                            report_cycle: 0,
                        },
                    )
                })
                .collect(),
            missions: Vec::new(),
        }
    }

    fn record_stage(&mut self, b: BuildingId, stage: u8, cycle: u32) {
        let idx = b.index();
        match self.report_cycle[idx] {
            Some(existing) if existing > cycle => return, // stale report
            _ => {}
        }
        self.stages[idx] = stage;
        self.report_cycle[idx] = Some(cycle);
        if (1..=3).contains(&stage) && self.first_fiery_cycle[idx].is_none() {
            self.first_fiery_cycle[idx] = Some(cycle);
        }
    }

    /// The free set J: known-healthy brigades without an active mission.
    pub fn free_agents(&self) -> Vec<BrigadeId> {
        let assigned: BTreeSet<BrigadeId> =
            self.missions.iter().flat_map(|m| m.brigades.iter().copied()).collect();
        self.brigades
            .iter()
            .filter(|(id, info)| !assigned.contains(id) && info.health > 0.0)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn known_fiery(&self) -> Vec<BuildingId> {
        self.stages
            .iter()
            .enumerate()
            .filter(|(_, s)| (1..=3).contains(*s))
            .map(|(i, _)| BuildingId(i as u32))
            .collect()
    }
}

/// Merge one cycle's feedback and the station's own perception into the
/// model, then close missions that timed out or whose target is done for.
pub fn aggregate_feedback(
    model: &mut StationWorldModel,
    messages: &[Message],
    own: &Perception,
    cycle: u32,
    map: &CityMap,
    params: &SimParams,
) {
    model.view.set_cycle(cycle);
    // Feedback was sent the cycle before it is delivered.
    let report_cycle = cycle.saturating_sub(1);
    for msg in messages {
        let Payload::Feedback { new_fires, new_blocks, pos, water, health } = &msg.payload else {
            continue;
        };
        let crate::world::AgentId::Brigade(sender) = msg.sender else { continue };
        for &(b, stage) in new_fires {
            if b.index() < model.stages.len() {
                model.record_stage(b, stage, report_cycle);
            }
        }
        for &road in new_blocks {
            model.view.observe_road(map, road, true);
        }
        model.brigades.insert(
            sender,
            BrigadeInfo { position: *pos, water: *water, health: *health, report_cycle },
        );
    }

    // Own perception is the newest information; apply it last.
    for &(b, stage, _) in &own.buildings {
        model.record_stage(b, stage, cycle);
    }
    for &(road, blocked) in &own.roads {
        model.view.observe_road(map, road, blocked);
    }

    // Advance the heat estimate with the station's own copy of the spread
    // rule, over believed stages only.
    let fiery = model.known_fiery();
    for &f in &fiery {
        for n in map.buildings_within(map.buildings[f.index()].pos, params.spread_radius_m) {
            if n != f && model.stages[n.index()] == 0 {
                model.est_heat[n.index()] += params.spread_heat_per_neighbor;
            }
        }
    }

    // Close missions that expired or whose target is extinguished or burnt
    // out. (A target believed stage 0 may be a predicted ignition; those
    // run until their deadline.)
    model.missions.retain(|m| {
        let stage = model.stages[m.target.index()];
        !(m.expired(cycle) || stage >= 4)
    });
}

/// Which branch of the pipeline ran last cycle, for pipeline-exclusivity
/// checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanBranch {
    Critical,
    Scheduled,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StationFlags {
    pub disable_critical: bool,
    pub disable_traffic: bool,
    pub disable_predict: bool,
}

pub struct Station {
    pub model: StationWorldModel,
    pub ignition_net: PredictorNet,
    pub water_net: PredictorNet,
    pub flags: StationFlags,
    pub last_branch: Option<PlanBranch>,
    /// Brigades whose stand position could not be decongested.
    pub traffic_overflow: u64,
}

impl Station {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_buildings: usize,
        initial_fires: &[BuildingId],
        spawns: &BTreeMap<BrigadeId, NodeId>,
        params: &SimParams,
        ignition_net: PredictorNet,
        water_net: PredictorNet,
        flags: StationFlags,
    ) -> Station {
        debug_assert_eq!(ignition_net.kind, NetKind::Ignition);
        debug_assert_eq!(water_net.kind, NetKind::Water);
        Station {
            model: StationWorldModel::new(n_buildings, initial_fires, spawns, params),
            ignition_net,
            water_net,
            flags,
            last_branch: None,
            traffic_overflow: 0,
        }
    }

    fn effective_node(&self, map: &CityMap, b: BrigadeId) -> NodeId {
        match self.model.brigades[&b].position {
            Position::Node(n) => n,
            Position::Building(bl) => map.building_entrances[bl.index()],
        }
    }

    /// Run the planning pipeline for `cycle` and return the advice payloads
    /// to submit, ordered most valuable first.
    pub fn plan(&mut self, cycle: u32, map: &CityMap, params: &SimParams) -> Result<Vec<Payload>> {
        let free = self.model.free_agents();

        // Distance of every free agent to every node, over the station's
        // own view of the road graph.
        let dists: BTreeMap<BrigadeId, Vec<Option<f64>>> = free
            .iter()
            .map(|&a| (a, tree_distances_m(map, &self.model.view, self.effective_node(map, a))))
            .collect();
        let dist_to = |a: BrigadeId, b: BuildingId| -> Option<f64> {
            dists[&a][map.building_entrances[b.index()].index()]
        };

        let critical = cycle < params.critical_end_cycle && !self.flags.disable_critical;
        let use_predict = !critical && !self.flags.disable_predict;

        // Candidate stages: believed stages, plus predicted ignitions
        // promoted to stage 1 when prediction is in play.
        let mut stages = self.model.stages.clone();
        let mut predicted_water: BTreeMap<BuildingId, f64> = BTreeMap::new();
        if use_predict {
            let know = Knowledge {
                stages: &self.model.stages,
                est_heat: &self.model.est_heat,
                first_fiery_cycle: &self.model.first_fiery_cycle,
            };
            for b in &map.buildings {
                let idx = b.id.index();
                if self.model.stages[idx] == 0 {
                    let f = extract_features(map, params, &know, b.id, cycle)?;
                    if self.ignition_net.forward(&f)? > 0.5 {
                        stages[idx] = 1;
                    }
                } else if (1..=3).contains(&self.model.stages[idx]) {
                    let f = extract_features(map, params, &know, b.id, cycle)?;
                    predicted_water.insert(b.id, self.water_net.forward(&f)? * WATER_SCALE);
                }
            }
        }

        let candidates: Vec<BuildingId> = stages
            .iter()
            .enumerate()
            .filter(|(_, s)| (1..=3).contains(*s))
            .map(|(i, _)| BuildingId(i as u32))
            .collect();
        if candidates.is_empty() || free.is_empty() {
            self.last_branch = None;
            return Ok(Vec::new());
        }

        let border = FireBorder::from_stages(map, &stages);
        let weights = &params.weights;
        let mut values: Vec<(BuildingId, f64)> = Vec::with_capacity(candidates.len());
        for &b in &candidates {
            let agent_dists: Vec<Option<f64>> = if weights.sum_over_all_free {
                // Experimental unrestricted sum: straight-line distances for
                // every free agent regardless of reachability.
                free.iter()
                    .map(|&a| {
                        let p = match self.model.brigades[&a].position {
                            Position::Node(n) => map.nodes[n.index()].pos,
                            Position::Building(bl) => map.buildings[bl.index()].pos,
                        };
                        Some(p.distance(map.buildings[b.index()].pos))
                    })
                    .collect()
            } else {
                free.iter().map(|&a| dist_to(a, b)).collect()
            };
            values.push((b, building_value(map, &stages, &border, b, &agent_dists, weights)?));
        }

        let new_missions: Vec<Mission>;
        if critical {
            new_missions = critical_assign(&values, &free, cycle, params);
            self.last_branch = Some(PlanBranch::Critical);
        } else {
            let k = (free.len().div_ceil(3)).clamp(1, 8);
            let targets = select_targets(&values, k);
            let mut dist_pairs: BTreeMap<(BrigadeId, BuildingId), Option<f64>> = BTreeMap::new();
            for &a in &free {
                for &t in &targets {
                    dist_pairs.insert((a, t), dist_to(a, t));
                }
            }
            new_missions =
                schedule_missions(&targets, &free, &dist_pairs, &predicted_water, cycle, params)?;
            self.last_branch = Some(PlanBranch::Scheduled);
        }

        // Stand positions: the target entrance unless traffic control moves
        // a brigade into an adjacent building.
        let mut stands: BTreeMap<BrigadeId, Position> = BTreeMap::new();
        for m in &new_missions {
            for &b in &m.brigades {
                stands.insert(b, Position::Node(map.building_entrances[m.target.index()]));
            }
        }
        if !self.flags.disable_traffic {
            let adjusted = traffic_control(
                &new_missions,
                &self.model.missions,
                &stands,
                &stages,
                map,
                params,
                &mut self.traffic_overflow,
            );
            stands = adjusted;
        }

        // One advice per newly assigned brigade, ordered by target value
        // (then brigade id) so the most important survive the bandwidth cap.
        let value_of: BTreeMap<BuildingId, f64> = values.into_iter().collect();
        let mut advices: Vec<(f64, BrigadeId, Payload)> = Vec::new();
        for m in &new_missions {
            for &b in &m.brigades {
                advices.push((
                    value_of.get(&m.target).copied().unwrap_or(0.0),
                    b,
                    Payload::Advice {
                        brigade: b,
                        target: m.target,
                        stand: stands[&b],
                        deadline: m.deadline,
                    },
                ));
            }
        }
        advices.sort_by(|(va, ba, _), (vb, bb, _)| {
            vb.partial_cmp(va).unwrap().then(ba.cmp(bb))
        });

        self.model.missions.extend(new_missions);
        Ok(advices.into_iter().map(|(_, _, p)| p).collect())
    }
}

/// Limit how many brigades stand at any one road node. Overflow brigades
/// move into an unburnt building adjacent to their target and within
/// extinguish range of it; when no such building is left they keep the road
/// spot and the overflow statistic grows.
#[allow(clippy::too_many_arguments)]
fn traffic_control(
    new_missions: &[Mission],
    active_missions: &[Mission],
    stands: &BTreeMap<BrigadeId, Position>,
    stages: &[u8],
    map: &CityMap,
    params: &SimParams,
    overflow: &mut u64,
) -> BTreeMap<BrigadeId, Position> {
    let mut result = stands.clone();

    // Node occupancy starts with the already-active missions' stands (their
    // brigades keep standing at target entrances).
    let mut node_load: BTreeMap<NodeId, u32> = BTreeMap::new();
    for m in active_missions {
        let node = map.building_entrances[m.target.index()];
        *node_load.entry(node).or_insert(0) += m.brigades.len() as u32;
    }

    let mut used_buildings: BTreeSet<BuildingId> = BTreeSet::new();
    for m in new_missions {
        let target_pos = map.buildings[m.target.index()].pos;
        // Adjacent unburnt buildings a brigade could stand in instead,
        // close enough to keep hosing the target.
        let mut shelters: Vec<BuildingId> = map
            .buildings_within(target_pos, params.weights.r_adj_m)
            .into_iter()
            .filter(|&b| {
                b != m.target
                    && stages[b.index()] == 0
                    && !used_buildings.contains(&b)
                    && map.buildings[b.index()].pos.distance(target_pos)
                        <= params.extinguish_range_m
            })
            .collect();
        shelters.sort_unstable();
        shelters.reverse(); // pop() takes the lowest id first

        for &b in &m.brigades {
            let Position::Node(node) = result[&b] else { continue };
            let load = node_load.entry(node).or_insert(0);
            if *load < params.stand_cap_per_node {
                *load += 1;
                continue;
            }
            match shelters.pop() {
                Some(shelter) => {
                    used_buildings.insert(shelter);
                    result.insert(b, Position::Building(shelter));
                }
                None => {
                    *load += 1; // cap consciously exceeded
                    *overflow += 1;
                }
            }
        }
    }
    result
}
