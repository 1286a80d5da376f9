//! End-to-end runner: wires brigades, station, bus, and kernel together,
//! writes replay logs, and compares strategies across seeds.
//!
//! A run is deterministic in its configuration. The seed permutes which
//! brigade starts on which spawn node (and drives target choice for the
//! `random` strategy); everything else is pure bookkeeping.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brigade::{ActiveMission, BrigadeMemory};
use crate::bus::{BusStats, MessageBus};
use crate::error::{Error, Result};
use crate::kernel::{burnt_ratio, perceive, step, Command, WorldState};
use crate::params::SimParams;
use crate::pathplan::tree_distances_m;
use crate::predict::{load_net, NetKind, PredictorNet};
use crate::replay::{read_log, BrigadeSnapshot, CycleRecord, LogMeta, LogWriter};
use crate::station::{Station, StationFlags};
use crate::world::{load_scenario, AgentId, BrigadeId, BuildingId, NodeId, Position, Scenario};

const DEFAULT_IGNITION_NET: &str = include_str!("../assets/ignition_net.json");
const DEFAULT_WATER_NET: &str = include_str!("../assets/water_net.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fais { critical: bool, traffic: bool, predict: bool },
    GreedyNearest,
    Random,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Fais { critical: true, traffic: true, predict: true } => "fais",
            Strategy::Fais { critical: false, .. } => "fais-no-critical",
            Strategy::Fais { traffic: false, .. } => "fais-no-traffic",
            Strategy::Fais { .. } => "fais-no-predict",
            Strategy::GreedyNearest => "greedy-nearest",
            Strategy::Random => "random",
        }
    }

    fn uses_station(&self) -> bool {
        matches!(self, Strategy::Fais { .. })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "fais" => Ok(Strategy::Fais { critical: true, traffic: true, predict: true }),
            "fais-no-critical" => Ok(Strategy::Fais { critical: false, traffic: true, predict: true }),
            "fais-no-traffic" => Ok(Strategy::Fais { critical: true, traffic: false, predict: true }),
            "fais-no-predict" => Ok(Strategy::Fais { critical: true, traffic: true, predict: false }),
            "greedy-nearest" => Ok(Strategy::GreedyNearest),
            "random" => Ok(Strategy::Random),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Optional weight overrides applied on top of the scenario's parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeightOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub margin: Option<f64>,
}

impl WeightOverrides {
    pub fn apply_to(&self, params: &mut SimParams) {
        if let Some(a) = self.alpha {
            params.weights.alpha = a;
        }
        if let Some(b) = self.beta {
            params.weights.beta = b;
        }
        if let Some(g) = self.gamma {
            params.weights.gamma = g;
        }
        if let Some(m) = self.margin {
            params.weights.margin_m = m;
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub seed: u64,
    pub cycles: Option<u32>,
    pub strategy: Strategy,
    pub weights: WeightOverrides,
    pub log_path: Option<PathBuf>,
    pub render_dir: Option<PathBuf>,
    pub ignition_net_path: Option<PathBuf>,
    pub water_net_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(scenario_path: impl Into<PathBuf>, seed: u64, strategy: Strategy) -> RunConfig {
        RunConfig {
            scenario_path: scenario_path.into(),
            seed,
            cycles: None,
            strategy,
            weights: WeightOverrides::default(),
            log_path: None,
            render_dir: None,
            ignition_net_path: None,
            water_net_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub final_burnt_ratio: f64,
    pub score_trace: Vec<f64>,
    pub cycles_run: u32,
    pub bus_stats: BusStats,
    pub traffic_overflow: u64,
    /// Sum over cycles and nodes of brigades standing above the per-node cap.
    pub standing_violations: u64,
    pub log_path: Option<PathBuf>,
}

fn default_nets() -> (PredictorNet, PredictorNet) {
    let inet = load_net(DEFAULT_IGNITION_NET).expect("embedded ignition net is valid");
    let wnet = load_net(DEFAULT_WATER_NET).expect("embedded water net is valid");
    (inet, wnet)
}

fn load_nets(config: &RunConfig) -> Result<(PredictorNet, PredictorNet)> {
    let (mut inet, mut wnet) = default_nets();
    if let Some(p) = &config.ignition_net_path {
        inet = load_net(&std::fs::read_to_string(p)?)?;
        if inet.kind != NetKind::Ignition {
            return Err(Error::InvalidArgument("ignition net file has kind water".into()));
        }
    }
    if let Some(p) = &config.water_net_path {
        wnet = load_net(&std::fs::read_to_string(p)?)?;
        if wnet.kind != NetKind::Water {
            return Err(Error::InvalidArgument("water net file has kind ignition".into()));
        }
    }
    Ok((inet, wnet))
}

/// Greedy self-mission: attack the nearest known fire over the brigade's
/// own view, ties toward the lower building id.
fn greedy_mission(
    memory: &BrigadeMemory,
    here: NodeId,
    cycle: u32,
    scenario: &Scenario,
) -> Option<ActiveMission> {
    let map = scenario.map();
    let dists = tree_distances_m(map, &memory.view, here);
    let fires: Vec<BuildingId> = memory
        .known_buildings
        .iter()
        .filter(|(_, &(s, _))| (1..=3).contains(&s))
        .map(|(&b, _)| b)
        .collect();
    fires
        .into_iter()
        .filter_map(|b| dists[map.building_entrances[b.index()].index()].map(|d| (b, d)))
        .min_by(|(ba, da), (bb, db)| da.partial_cmp(db).unwrap().then(ba.cmp(bb)))
        .map(|(target, _)| ActiveMission {
            target,
            stand: Position::Node(map.building_entrances[target.index()]),
            deadline: cycle + scenario.params.mission_time,
        })
}

fn random_mission(
    memory: &BrigadeMemory,
    rng: &mut ChaCha8Rng,
    cycle: u32,
    scenario: &Scenario,
) -> Option<ActiveMission> {
    let map = scenario.map();
    let fires: Vec<BuildingId> = memory
        .known_buildings
        .iter()
        .filter(|(_, &(s, _))| (1..=3).contains(&s))
        .map(|(&b, _)| b)
        .collect();
    if fires.is_empty() {
        return None;
    }
    let target = fires[rng.random_range(0..fires.len())];
    Some(ActiveMission {
        target,
        stand: Position::Node(map.building_entrances[target.index()]),
        deadline: cycle + scenario.params.mission_time,
    })
}

/// Run one seeded scenario to its deadline (or until every fire is out) and
/// report the score, statistics, and log location.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let text = std::fs::read_to_string(&config.scenario_path)?;
    let mut scenario = load_scenario(&text)?;
    config.weights.apply_to(&mut scenario.params);
    scenario.params.validate()?;
    run_scenario(config, &scenario)
}

/// Same as [`run`] but over an already-loaded scenario (weight overrides
/// are assumed applied).
pub fn run_scenario(config: &RunConfig, scenario: &Scenario) -> Result<RunReport> {
    let map = scenario.map();
    let params = &scenario.params;
    let cap = config.cycles.unwrap_or(params.deadline_cycles).min(params.deadline_cycles);

    // The seed decides which brigade starts on which spawn node.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut spawns = scenario.brigade_spawns.clone();
    spawns.shuffle(&mut rng);

    let mut state = WorldState::new(scenario, &spawns);
    let n_brigades = spawns.len();
    let mut memories: Vec<BrigadeMemory> =
        (0..n_brigades).map(|i| BrigadeMemory::at_spawn(BrigadeId(i as u32), scenario)).collect();
    let mut bus = MessageBus::new();

    let mut station = if config.strategy.uses_station() {
        let (inet, wnet) = load_nets(config)?;
        let flags = match config.strategy {
            Strategy::Fais { critical, traffic, predict } => StationFlags {
                disable_critical: !critical,
                disable_traffic: !traffic,
                disable_predict: !predict,
            },
            _ => StationFlags::default(),
        };
        let spawn_map: BTreeMap<BrigadeId, NodeId> =
            spawns.iter().enumerate().map(|(i, &n)| (BrigadeId(i as u32), n)).collect();
        Some(Station::new(map.buildings.len(), &scenario.ignitions, &spawn_map, params, inet, wnet, flags))
    } else {
        None
    };

    let mut writer = match &config.log_path {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            let meta = LogMeta {
                scenario_path: config.scenario_path.display().to_string(),
                seed: config.seed,
                strategy: config.strategy.name().to_string(),
                cycles_cap: cap,
                scenario: scenario.clone(),
            };
            Some(LogWriter::new(std::io::BufWriter::new(std::fs::File::create(path)?), &meta)?)
        }
        None => None,
    };

    let mut score_trace = Vec::new();
    let mut standing_violations = 0u64;
    let mut records_for_render: Vec<CycleRecord> = Vec::new();

    while state.cycle < cap {
        let cycle = state.cycle;
        if !state.any_fiery() {
            break; // nothing can change the score anymore
        }

        let delivered: Vec<_> = bus.delivered_this_cycle(cycle).to_vec();

        // Brigades act in ascending id order.
        let mut commands: BTreeMap<BrigadeId, Command> = BTreeMap::new();
        for i in 0..n_brigades {
            let id = BrigadeId(i as u32);
            let perception = perceive(&state, scenario, AgentId::Brigade(id))?;
            if perception.incapacitated {
                continue;
            }
            let messages = bus.receive(cycle, AgentId::Brigade(id));

            match config.strategy {
                Strategy::GreedyNearest => {
                    let here = state.effective_node(scenario, id);
                    memories[i].mission = greedy_mission(&memories[i], here, cycle, scenario);
                }
                Strategy::Random => {
                    if memories[i].mission.is_none() {
                        memories[i].mission = random_mission(&memories[i], &mut rng, cycle, scenario);
                    }
                }
                Strategy::Fais { .. } => {}
            }

            let (command, trace) =
                crate::brigade::step(&perception, &messages, &mut memories[i], cycle, map, params);
            if let Some(feedback) = trace.alternatives.feedback {
                if config.strategy.uses_station() {
                    bus.submit(cycle, AgentId::Brigade(id), feedback, params);
                }
            }
            if !matches!(command, Command::Rest) {
                commands.insert(id, command);
            }
        }

        // The station reads the same cycle's deliveries and answers next
        // cycle.
        if let Some(st) = station.as_mut() {
            let own = perceive(&state, scenario, AgentId::Station)?;
            let messages = bus.receive(cycle, AgentId::Station);
            crate::station::aggregate_feedback(&mut st.model, &messages, &own, cycle, map, params);
            let payloads = st.plan(cycle, map, params)?;
            if std::env::var_os("FAIS_TRACE").is_some() {
                eprintln!(
                    "c{cycle}: J={} model-fiery={} truth-fiery={} missions={} advices={}",
                    st.model.free_agents().len(),
                    st.model.known_fiery().len(),
                    state.buildings.iter().filter(|b| (1..=3).contains(&b.stage)).count(),
                    st.model.missions.len(),
                    payloads.len()
                );
            }
            for payload in payloads {
                bus.submit(cycle, AgentId::Station, payload, params);
            }
        }

        bus.end_cycle(cycle);
        let (next, fx) = step(&state, &commands, scenario)?;

        // Standing-cap accounting over road nodes.
        let mut per_node: BTreeMap<NodeId, u32> = BTreeMap::new();
        for b in &next.brigades {
            if let Position::Node(n) = b.position {
                *per_node.entry(n).or_insert(0) += 1;
            }
        }
        for count in per_node.values() {
            standing_violations += count.saturating_sub(params.stand_cap_per_node) as u64;
        }

        let score = burnt_ratio(&next);
        score_trace.push(score);

        if writer.is_some() || config.render_dir.is_some() {
            let record = CycleRecord {
                cycle,
                commands,
                diagnostics: fx.diagnostics,
                ignitions: fx.ignitions,
                stage_changes: fx.stage_changes,
                messages: delivered,
                water_applied: fx.water_applied,
                brigades: next
                    .brigades
                    .iter()
                    .enumerate()
                    .map(|(i, b)| BrigadeSnapshot {
                        id: BrigadeId(i as u32),
                        pos: b.position,
                        water: b.water,
                        health: b.health,
                        incapacitated: b.incapacitated,
                    })
                    .collect(),
                score,
            };
            if let Some(w) = writer.as_mut() {
                w.record(&record)?;
            }
            if config.render_dir.is_some() {
                records_for_render.push(record);
            }
        }

        state = next;
    }

    if let Some(w) = writer.take() {
        w.finish()?;
    }
    if let Some(dir) = &config.render_dir {
        let meta = LogMeta {
            scenario_path: config.scenario_path.display().to_string(),
            seed: config.seed,
            strategy: config.strategy.name().to_string(),
            cycles_cap: cap,
            scenario: scenario.clone(),
        };
        crate::render::render_records(&meta, &records_for_render, dir, 10)?;
    }

    Ok(RunReport {
        final_burnt_ratio: burnt_ratio(&state),
        score_trace,
        cycles_run: state.cycle,
        bus_stats: bus.stats(),
        traffic_overflow: station.as_ref().map(|s| s.traffic_overflow).unwrap_or(0),
        standing_violations,
        log_path: config.log_path.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareCell {
    pub scenario: String,
    pub strategy: String,
    pub median_burnt_ratio: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareTable {
    pub seeds: u64,
    pub cells: Vec<CompareCell>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.is_empty() {
        return f64::NAN;
    }
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Run every (scenario, strategy, seed) combination and tabulate medians.
/// A failing run aborts only its own cell.
pub fn compare(scenarios: &[PathBuf], strategies: &[Strategy], seeds: u64) -> Result<CompareTable> {
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("compare needs at least one scenario".into()));
    }
    if strategies.len() < 2 {
        return Err(Error::InvalidArgument("compare needs at least two strategies".into()));
    }
    let mut cells = Vec::new();
    for scenario in scenarios {
        for &strategy in strategies {
            let mut per_seed = Vec::new();
            let mut failed = false;
            for seed in 1..=seeds {
                let config = RunConfig::new(scenario.clone(), seed, strategy);
                match run(&config) {
                    Ok(report) => per_seed.push(report.final_burnt_ratio),
                    Err(e) => {
                        eprintln!(
                            "run failed for {} / {} / seed {seed}: {e}",
                            scenario.display(),
                            strategy.name()
                        );
                        failed = true;
                        break;
                    }
                }
            }
            if !failed {
                cells.push(CompareCell {
                    scenario: scenario.display().to_string(),
                    strategy: strategy.name().to_string(),
                    median_burnt_ratio: median(&per_seed),
                    per_seed,
                });
            }
        }
    }
    Ok(CompareTable { seeds, cells })
}

impl CompareTable {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<40} {:<18} {:>8}  per-seed\n",
            "scenario", "strategy", "median"
        ));
        for cell in &self.cells {
            let seeds: Vec<String> =
                cell.per_seed.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!(
                "{:<40} {:<18} {:>8.4}  [{}]\n",
                cell.scenario,
                cell.strategy,
                cell.median_burnt_ratio,
                seeds.join(", ")
            ));
        }
        out
    }
}

/// Check a finished log against the bus bandwidth contract: per sender and
/// cycle, delivered messages never exceed the sender's cap.
pub fn assert_bandwidth_in_log(path: &Path) -> Result<()> {
    let (meta, records) = read_log(path)?;
    let params = &meta.scenario.params;
    for rec in &records {
        let mut per_sender: BTreeMap<AgentId, u32> = BTreeMap::new();
        for m in &rec.messages {
            *per_sender.entry(m.sender).or_insert(0) += 1;
        }
        for (sender, count) in per_sender {
            let cap = match sender {
                AgentId::Brigade(_) => params.brigade_msg_cap,
                AgentId::Station => params.station_msg_cap,
            };
            if count > cap {
                return Err(Error::Replay(format!(
                    "cycle {}: sender {sender:?} delivered {count} > cap {cap}",
                    rec.cycle
                )));
            }
        }
    }
    Ok(())
}

/// Recompute the score trace from the log and compare with the recorded
/// scores.
pub fn assert_log_self_consistent(path: &Path) -> Result<()> {
    let (meta, records) = read_log(path)?;
    let recomputed = crate::replay::recompute_scores(&meta, &records);
    for (rec, want) in records.iter().zip(&recomputed) {
        if (rec.score - want).abs() > 1e-9 {
            return Err(Error::Replay(format!(
                "cycle {}: recorded score {} != recomputed {want}",
                rec.cycle, rec.score
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for name in
            ["fais", "fais-no-critical", "fais-no-traffic", "fais-no-predict", "greedy-nearest", "random"]
        {
            assert_eq!(Strategy::from_str(name).unwrap().name(), name);
        }
        assert!(Strategy::from_str("bogus").is_err());
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
