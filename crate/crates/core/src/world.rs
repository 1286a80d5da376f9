//! Static city model: road graph, buildings, refuges, and scenario files.
//!
//! A [`CityMap`] is immutable after construction and safe to share across
//! threads. Scenario files are UTF-8 JSON with a fixed key set; unknown keys
//! are rejected so typos fail loudly.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::params::SimParams;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(
            Debug,
            Clone,
            Copy,
            PartialEq,
            Eq,
            PartialOrd,
            Ord,
            Hash,
            Serialize,
            Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(NodeId);
id_type!(RoadId);
id_type!(BuildingId);
id_type!(BrigadeId);

/// Where an agent currently is: on a road node or inside a building.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Node(NodeId),
    Building(BuildingId),
}

/// The two agent kinds the kernel mediates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentId {
    Brigade(BrigadeId),
    Station,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadNode {
    pub id: NodeId,
    pub pos: Point,
}

/// Undirected road edge. The road's id is its index in `CityMap::roads`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Road {
    pub a: NodeId,
    pub b: NodeId,
    pub length_m: f64,
    pub initially_blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub id: BuildingId,
    pub pos: Point,
    pub area_m2: f64,
    pub broken: bool,
    pub is_refuge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityMap {
    pub nodes: Vec<RoadNode>,
    pub roads: Vec<Road>,
    pub buildings: Vec<Building>,
    pub refuges: Vec<BuildingId>,
    /// Building id -> nearest road node, the single point where brigades
    /// enter and leave the building.
    pub building_entrances: Vec<NodeId>,

    #[serde(skip)]
    adjacency: Vec<Vec<(NodeId, RoadId)>>,
    #[serde(skip)]
    grid: SpatialGrid,
}

/// Uniform grid over building centroids for radius queries.
#[derive(Debug, Clone, Default, PartialEq)]
struct SpatialGrid {
    cell: f64,
    min_x: f64,
    min_y: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<BuildingId>>,
}

impl SpatialGrid {
    const CELL_M: f64 = 50.0;

    fn build(buildings: &[Building]) -> SpatialGrid {
        if buildings.is_empty() {
            return SpatialGrid::default();
        }
        let min_x = buildings.iter().map(|b| b.pos.x).fold(f64::INFINITY, f64::min);
        let min_y = buildings.iter().map(|b| b.pos.y).fold(f64::INFINITY, f64::min);
        let max_x = buildings.iter().map(|b| b.pos.x).fold(f64::NEG_INFINITY, f64::max);
        let max_y = buildings.iter().map(|b| b.pos.y).fold(f64::NEG_INFINITY, f64::max);
        let cell = Self::CELL_M;
        let cols = ((max_x - min_x) / cell).floor() as usize + 1;
        let rows = ((max_y - min_y) / cell).floor() as usize + 1;
        let mut cells = vec![Vec::new(); cols * rows];
        for b in buildings {
            let cx = ((b.pos.x - min_x) / cell).floor() as usize;
            let cy = ((b.pos.y - min_y) / cell).floor() as usize;
            cells[cy * cols + cx].push(b.id);
        }
        SpatialGrid { cell, min_x, min_y, cols, rows, cells }
    }

    /// All buildings whose centroid lies within `r` of `p`, in ascending id
    /// order.
    fn within(&self, buildings: &[Building], p: Point, r: f64) -> Vec<BuildingId> {
        if self.cells.is_empty() {
            return Vec::new();
        }
        let lo_x = (((p.x - r - self.min_x) / self.cell).floor().max(0.0)) as usize;
        let lo_y = (((p.y - r - self.min_y) / self.cell).floor().max(0.0)) as usize;
        let hi_x = ((((p.x + r - self.min_x) / self.cell).floor()).max(0.0) as usize).min(self.cols - 1);
        let hi_y = ((((p.y + r - self.min_y) / self.cell).floor()).max(0.0) as usize).min(self.rows - 1);
        let mut out = Vec::new();
        for cy in lo_y..=hi_y {
            for cx in lo_x..=hi_x {
                for &id in &self.cells[cy * self.cols + cx] {
                    if buildings[id.index()].pos.distance(p) <= r {
                        out.push(id);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

impl CityMap {
    pub fn new(
        nodes: Vec<RoadNode>,
        roads: Vec<Road>,
        buildings: Vec<Building>,
        refuges: Vec<BuildingId>,
        building_entrances: Vec<NodeId>,
    ) -> Result<CityMap> {
        let mut map = CityMap {
            nodes,
            roads,
            buildings,
            refuges,
            building_entrances,
            adjacency: Vec::new(),
            grid: SpatialGrid::default(),
        };
        map.validate()?;
        map.rebuild_indexes();
        Ok(map)
    }

    fn rebuild_indexes(&mut self) {
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (i, r) in self.roads.iter().enumerate() {
            adjacency[r.a.index()].push((r.b, RoadId(i as u32)));
            adjacency[r.b.index()].push((r.a, RoadId(i as u32)));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        self.adjacency = adjacency;
        self.grid = SpatialGrid::build(&self.buildings);
    }

    fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(Error::Invariant(format!(
                    "node ids must be dense from 0: index {i} holds id {}",
                    n.id
                )));
            }
            if !n.pos.is_finite() {
                return Err(Error::Invariant(format!("node {} has non-finite position", n.id)));
            }
        }
        for (i, r) in self.roads.iter().enumerate() {
            if r.a == r.b {
                return Err(Error::Invariant(format!("road {i} connects node {} to itself", r.a)));
            }
            let a = self
                .nodes
                .get(r.a.index())
                .ok_or_else(|| Error::Invariant(format!("road {i} references unknown node {}", r.a)))?;
            let b = self
                .nodes
                .get(r.b.index())
                .ok_or_else(|| Error::Invariant(format!("road {i} references unknown node {}", r.b)))?;
            let euclid = a.pos.distance(b.pos);
            if !(r.length_m > 0.0) {
                return Err(Error::Invariant(format!("road {i} has non-positive length")));
            }
            if (r.length_m - euclid).abs() > 0.001 * euclid.max(f64::MIN_POSITIVE) {
                return Err(Error::Invariant(format!(
                    "road {i} length {} deviates more than 0.1% from node distance {euclid}",
                    r.length_m
                )));
            }
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if b.id.index() != i {
                return Err(Error::Invariant(format!(
                    "building ids must be dense from 0: index {i} holds id {}",
                    b.id
                )));
            }
            if !(b.area_m2 > 0.0) {
                return Err(Error::Invariant(format!("building {} has non-positive area", b.id)));
            }
            if !b.pos.is_finite() {
                return Err(Error::Invariant(format!("building {} has non-finite position", b.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for &r in &self.refuges {
            let b = self
                .buildings
                .get(r.index())
                .ok_or_else(|| Error::Invariant(format!("unknown refuge id {r}")))?;
            if !b.is_refuge {
                return Err(Error::Invariant(format!(
                    "building {r} listed as refuge but not flagged is_refuge"
                )));
            }
            if !seen.insert(r) {
                return Err(Error::Invariant(format!("refuge id {r} listed twice")));
            }
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if b.is_refuge && !seen.contains(&b.id) {
                return Err(Error::Invariant(format!(
                    "building {i} flagged is_refuge but missing from refuges list"
                )));
            }
        }
        if self.building_entrances.len() != self.buildings.len() {
            return Err(Error::Invariant(format!(
                "expected {} building entrances, got {}",
                self.buildings.len(),
                self.building_entrances.len()
            )));
        }
        for (i, &n) in self.building_entrances.iter().enumerate() {
            if n.index() >= self.nodes.len() {
                return Err(Error::Invariant(format!(
                    "building {i} entrance references unknown node {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn node(&self, id: NodeId) -> Result<&RoadNode> {
        self.nodes.get(id.index()).ok_or(Error::unknown("node", id.0))
    }

    pub fn building(&self, id: BuildingId) -> Result<&Building> {
        self.buildings.get(id.index()).ok_or(Error::unknown("building", id.0))
    }

    pub fn road(&self, id: RoadId) -> Result<&Road> {
        self.roads.get(id.index()).ok_or(Error::unknown("road", id.0))
    }

    pub fn entrance(&self, id: BuildingId) -> Result<NodeId> {
        self.building(id)?;
        Ok(self.building_entrances[id.index()])
    }

    /// Neighbors of a node as `(node, road)` pairs in ascending node order.
    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, RoadId)] {
        &self.adjacency[id.index()]
    }

    /// Buildings with centroid within `r` meters of `p` (ascending id).
    pub fn buildings_within(&self, p: Point, r: f64) -> Vec<BuildingId> {
        self.grid.within(&self.buildings, p, r)
    }
}

/// A dynamic view of building burn stages, used wherever an operation needs
/// "fieryness per building" without caring whether it is ground truth or an
/// agent's belief. Index = building id; values use the kernel stage encoding
/// (0 unburnt, 1-3 burning, 4 extinguished, 5 burnt out).
pub type StageView = [u8];

pub fn stage_is_fiery(stage: u8) -> bool {
    (1..=3).contains(&stage)
}

/// Number of unburnt neighbors of `b`: buildings other than `b` whose
/// centroid lies within `r_adj` of `b`'s and whose stage is still 0.
pub fn unfired_neighbors(map: &CityMap, stages: &StageView, b: BuildingId, r_adj: f64) -> Result<usize> {
    let center = map.building(b)?.pos;
    if !(r_adj > 0.0) {
        return Err(Error::InvalidArgument(format!("r_adj must be positive, got {r_adj}")));
    }
    Ok(map
        .buildings_within(center, r_adj)
        .into_iter()
        .filter(|&n| n != b && stages[n.index()] == 0)
        .count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledOpening {
    pub cycle: u32,
    pub road: RoadId,
}

/// A complete, loadable simulation setup: the map plus everything dynamic
/// about the start of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub nodes: Vec<RoadNode>,
    pub roads: Vec<Road>,
    pub buildings: Vec<Building>,
    pub refuges: Vec<BuildingId>,
    pub ignitions: Vec<BuildingId>,
    pub brigade_spawns: Vec<NodeId>,
    pub road_open_schedule: Vec<ScheduledOpening>,
    pub params: SimParams,

    #[serde(skip)]
    map: Option<CityMap>,
}

impl Scenario {
    pub fn build(
        map: CityMap,
        ignitions: Vec<BuildingId>,
        brigade_spawns: Vec<NodeId>,
        road_open_schedule: Vec<ScheduledOpening>,
        params: SimParams,
    ) -> Result<Scenario> {
        let s = Scenario {
            nodes: map.nodes.clone(),
            roads: map.roads.clone(),
            buildings: map.buildings.clone(),
            refuges: map.refuges.clone(),
            ignitions,
            brigade_spawns,
            road_open_schedule,
            params,
            map: Some(map),
        };
        s.validate()?;
        Ok(s)
    }

    /// The validated city map. Panics if the scenario was deserialized
    /// without going through [`load_scenario`].
    pub fn map(&self) -> &CityMap {
        self.map.as_ref().expect("scenario map not initialized; use load_scenario")
    }

    fn finish(&mut self) -> Result<()> {
        let map = CityMap::new(
            self.nodes.clone(),
            self.roads.clone(),
            self.buildings.clone(),
            self.refuges.clone(),
            nearest_entrances(&self.nodes, &self.buildings),
        )?;
        self.map = Some(map);
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        let map = self.map.as_ref().expect("map built before validate");
        if self.ignitions.is_empty() {
            return Err(Error::Invariant("scenario has no initial ignitions".into()));
        }
        let mut seen = BTreeSet::new();
        for &b in &self.ignitions {
            map.building(b).map_err(|_| Error::Invariant(format!("unknown ignition id {b}")))?;
            if !seen.insert(b) {
                return Err(Error::Invariant(format!("ignition id {b} listed twice")));
            }
        }
        for &n in &self.brigade_spawns {
            map.node(n).map_err(|_| Error::Invariant(format!("unknown brigade spawn node {n}")))?;
        }
        if self.brigade_spawns.is_empty() {
            return Err(Error::Invariant("scenario has no brigade spawns".into()));
        }
        for (i, o) in self.road_open_schedule.iter().enumerate() {
            map.road(o.road)
                .map_err(|_| Error::Invariant(format!("schedule entry {i} references unknown road {}", o.road)))?;
            if o.cycle == 0 {
                return Err(Error::Invariant(format!(
                    "schedule entry {i} has cycle 0; opening cycles must be strictly positive"
                )));
            }
            if o.cycle > self.params.deadline_cycles {
                return Err(Error::Invariant(format!(
                    "schedule entry {i} opens at cycle {} after the deadline {}",
                    o.cycle, self.params.deadline_cycles
                )));
            }
        }
        self.params.validate()
    }

    pub fn n_brigades(&self) -> usize {
        self.brigade_spawns.len()
    }
}

fn nearest_entrances(nodes: &[RoadNode], buildings: &[Building]) -> Vec<NodeId> {
    buildings
        .iter()
        .map(|b| {
            nodes
                .iter()
                .min_by(|m, n| {
                    m.pos
                        .distance(b.pos)
                        .partial_cmp(&n.pos.distance(b.pos))
                        .unwrap()
                        .then(m.id.cmp(&n.id))
                })
                .map(|n| n.id)
                .unwrap_or(NodeId(0))
        })
        .collect()
}

/// Parse and validate a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let mut s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    s.finish()?;
    Ok(s)
}

/// Canonical serialized form: pretty JSON with a fixed field order and a
/// trailing newline. `load_scenario(save_scenario(s))` reproduces `s`.
pub fn save_scenario(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("scenario serializes");
    out.push('\n');
    out
}

// Buildings sit near their entrance junction, so the spacing range is
// bounded by fire-spread geometry instead of extinguish range: axis
// neighbors stay within the 50 m spread radius, diagonals outside it.
const MIN_GRID_SPACING_M: f64 = 25.0;
const MAX_GRID_SPACING_M: f64 = 48.0;

/// Deterministically generate a city scenario: a jittered grid of road
/// junctions with one building per block, a connected base road graph, 10%
/// of roads initially blocked, and a handful of scheduled road openings.
///
/// `density` is in buildings per square kilometer and is clamped so that
/// every building stays within extinguish range of its entrance node.
pub fn generate_city(seed: u64, n_buildings: u32, density: f64) -> Result<Scenario> {
    if n_buildings < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_buildings must be at least 2, got {n_buildings}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = SimParams::default();

    let density = if density.is_finite() && density > 0.0 { density } else { 500.0 };
    let spacing = (1_000_000.0 / density).sqrt().clamp(MIN_GRID_SPACING_M, MAX_GRID_SPACING_M);

    // Buildings occupy just under half of the blocks; the empty blocks are
    // plazas and parks that bound how far any one fire can creep.
    const OCCUPANCY: f64 = 0.45;
    let cells_needed = ((n_buildings as f64) / OCCUPANCY).ceil();
    let cells_per_side = (cells_needed.sqrt().ceil() as u32).max(1);
    let nodes_per_side = cells_per_side + 1;

    let mut nodes = Vec::new();
    for gy in 0..nodes_per_side {
        for gx in 0..nodes_per_side {
            let jitter_x = rng.random_range(-0.08..0.08) * spacing;
            let jitter_y = rng.random_range(-0.08..0.08) * spacing;
            nodes.push(RoadNode {
                id: NodeId((gy * nodes_per_side + gx) as u32),
                pos: Point::new(gx as f64 * spacing + jitter_x, gy as f64 * spacing + jitter_y),
            });
        }
    }
    let node_at = |gx: u32, gy: u32| NodeId(gy * nodes_per_side + gx);

    let mut roads = Vec::new();
    for gy in 0..nodes_per_side {
        for gx in 0..nodes_per_side {
            if gx + 1 < nodes_per_side {
                let (a, b) = (node_at(gx, gy), node_at(gx + 1, gy));
                let length_m = nodes[a.index()].pos.distance(nodes[b.index()].pos);
                roads.push(Road { a, b, length_m, initially_blocked: false });
            }
            if gy + 1 < nodes_per_side {
                let (a, b) = (node_at(gx, gy), node_at(gx, gy + 1));
                let length_m = nodes[a.index()].pos.distance(nodes[b.index()].pos);
                roads.push(Road { a, b, length_m, initially_blocked: false });
            }
        }
    }

    // Buildings anchor near their block's low-corner junction (their
    // entrance): extinguish range holds at any spacing, and neighbor
    // distances track the grid so fire spreads along axes only. Every
    // fourth block also hosts an annex across the block near the next
    // junction; annex pairs sit well under extinguish range of each other,
    // which is what lets traffic control park overflow brigades indoors.
    let mut cells: Vec<(u32, u32)> = (0..cells_per_side)
        .flat_map(|gy| (0..cells_per_side).map(move |gx| (gx, gy)))
        .collect();
    cells.shuffle(&mut rng);

    let mut buildings = Vec::new();
    let mut cell_iter = cells.iter();
    while (buildings.len() as u32) < n_buildings {
        let Some(&(gx, gy)) = cell_iter.next() else { break };
        let cx = gx as f64 * spacing + rng.random_range(10.0..14.0);
        let cy = gy as f64 * spacing + rng.random_range(10.0..14.0);
        buildings.push(Building {
            id: BuildingId(buildings.len() as u32),
            pos: Point::new(cx, cy),
            area_m2: (rng.random_range(800.0..2400.0f64) * 10.0).round() / 10.0,
            broken: rng.random_range(0.0..1.0) < 0.10,
            is_refuge: false,
        });
        if buildings.len() % 4 == 0 && (buildings.len() as u32) < n_buildings {
            let ax = (gx + 1) as f64 * spacing - rng.random_range(10.0..14.0);
            let ay = gy as f64 * spacing + rng.random_range(10.0..14.0);
            buildings.push(Building {
                id: BuildingId(buildings.len() as u32),
                pos: Point::new(ax, ay),
                area_m2: (rng.random_range(600.0..1200.0f64) * 10.0).round() / 10.0,
                broken: rng.random_range(0.0..1.0) < 0.10,
                is_refuge: false,
            });
        }
    }
    // Keep ids in reading order so nearby buildings get nearby ids.
    buildings.sort_by(|a, b| {
        (a.pos.y, a.pos.x).partial_cmp(&(b.pos.y, b.pos.x)).unwrap()
    });
    for (i, b) in buildings.iter_mut().enumerate() {
        b.id = BuildingId(i as u32);
    }

    // Refuges: roughly one per sixteen buildings, spread by shuffled pick.
    let n_refuges = ((n_buildings / 16).max(1)) as usize;
    let mut candidates: Vec<BuildingId> = buildings.iter().map(|b| b.id).collect();
    candidates.shuffle(&mut rng);
    let mut refuges: Vec<BuildingId> = candidates[..n_refuges].to_vec();
    refuges.sort_unstable();
    for &r in &refuges {
        buildings[r.index()].is_refuge = true;
    }

    // 10% of roads start blocked; half of those open on a schedule.
    let mut blocked_ids = Vec::new();
    for (i, road) in roads.iter_mut().enumerate() {
        if rng.random_range(0.0..1.0) < 0.10 {
            road.initially_blocked = true;
            blocked_ids.push(RoadId(i as u32));
        }
    }
    let mut road_open_schedule = Vec::new();
    for &rid in &blocked_ids {
        if rng.random_range(0.0..1.0) < 0.5 {
            let cycle = rng.random_range(30..(params.deadline_cycles * 2 / 3).max(31));
            road_open_schedule.push(ScheduledOpening { cycle, road: rid });
        }
    }
    road_open_schedule.sort_by_key(|o| (o.cycle, o.road));

    // Ignitions come as separate small sites: seed buildings kept well
    // apart, each paired with its nearest neighbor.
    let city_side = cells_per_side as f64 * spacing;
    let min_site_gap = 0.35 * city_side;
    let n_sites = ((n_buildings / 120).max(1)) as usize;
    let mut site_seeds: Vec<BuildingId> = Vec::new();
    let mut tries = 0;
    while site_seeds.len() < n_sites && tries < 2000 {
        tries += 1;
        let candidate = BuildingId(rng.random_range(0..n_buildings));
        let pos = buildings[candidate.index()].pos;
        let far_enough = site_seeds
            .iter()
            .all(|s| buildings[s.index()].pos.distance(pos) >= min_site_gap);
        if far_enough && !site_seeds.contains(&candidate) {
            site_seeds.push(candidate);
        }
    }
    let mut ignition_set: BTreeSet<BuildingId> = BTreeSet::new();
    for &seed_building in &site_seeds {
        ignition_set.insert(seed_building);
        let seed_pos = buildings[seed_building.index()].pos;
        let partner = buildings
            .iter()
            .filter(|b| b.id != seed_building && !ignition_set.contains(&b.id))
            .min_by(|a, b| {
                a.pos
                    .distance(seed_pos)
                    .partial_cmp(&b.pos.distance(seed_pos))
                    .unwrap()
                    .then(a.id.cmp(&b.id))
            })
            .map(|b| b.id);
        if let Some(p) = partner {
            ignition_set.insert(p);
        }
    }
    let ignitions: Vec<BuildingId> = ignition_set.into_iter().collect();

    // Brigades start together at the depot: the nodes closest to the
    // station refuge's entrance.
    let entrances = nearest_entrances(&nodes, &buildings);
    let n_brigades = ((n_buildings / 30).max(4)) as usize;
    let depot = refuges.first().map(|&r| entrances[r.index()]).unwrap_or(NodeId(0));
    let depot_pos = nodes[depot.index()].pos;
    let mut by_depot_distance: Vec<NodeId> = nodes.iter().map(|n| n.id).collect();
    by_depot_distance.sort_by(|a, b| {
        nodes[a.index()]
            .pos
            .distance(depot_pos)
            .partial_cmp(&nodes[b.index()].pos.distance(depot_pos))
            .unwrap()
            .then(a.cmp(b))
    });
    let spawn_set: Vec<NodeId> = by_depot_distance[..n_brigades.min(nodes.len())].to_vec();

    let map = CityMap::new(nodes, roads, buildings, refuges, entrances)?;
    Scenario::build(map, ignitions, spawn_set, road_open_schedule, params)
}
