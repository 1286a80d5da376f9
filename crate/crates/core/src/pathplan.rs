//! Path planning over the dynamic road graph.
//!
//! Every agent owns a private [`GraphView`]: the static map plus what the
//! agent believes about road state. Blocked roads discovered on the way are
//! suppressed for a fixed number of cycles; initially blocked roads stay
//! untraversable until the owner learns they have opened. Planning is
//! minimum-hop BFS; edge lengths only matter when a path is priced in
//! meters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::world::{BrigadeId, BuildingId, CityMap, NodeId, RoadId};

/// One agent's believed state of the road graph.
#[derive(Debug, Clone)]
pub struct GraphView {
    /// Edges currently believed blocked (seen blocked, not yet seen open).
    known_blocked: BTreeSet<RoadId>,
    /// Collision-detection suppression: edge -> first cycle it may be used.
    suppressed: BTreeMap<RoadId, u32>,
    /// Initially blocked edges the owner has seen open.
    discovered_open: BTreeSet<RoadId>,
    /// The owner's current cycle.
    cycle: u32,
}

impl GraphView {
    pub fn new() -> GraphView {
        GraphView {
            known_blocked: BTreeSet::new(),
            suppressed: BTreeMap::new(),
            discovered_open: BTreeSet::new(),
            cycle: 0,
        }
    }

    pub fn set_cycle(&mut self, cycle: u32) {
        self.cycle = cycle;
    }

    pub fn cycle(&self) -> u32 {
        self.cycle
    }

    /// Record a sighting (or report) of the road's current state.
    pub fn observe_road(&mut self, map: &CityMap, road: RoadId, blocked: bool) {
        if map.road(road).is_err() {
            return;
        }
        if blocked {
            self.known_blocked.insert(road);
        } else {
            self.known_blocked.remove(&road);
            if map.roads[road.index()].initially_blocked {
                self.discovered_open.insert(road);
            }
        }
    }

    /// Temporarily suppress an edge after a collision-style discovery. The
    /// edge becomes usable again `reopen_delay` cycles later; repeated
    /// reports extend the suppression (latest wins).
    pub fn report_blocked(&mut self, map: &CityMap, road: RoadId, cycle: u32, reopen_delay: u32) -> Result<()> {
        map.road(road)?;
        let reopen = cycle + reopen_delay;
        let entry = self.suppressed.entry(road).or_insert(reopen);
        *entry = (*entry).max(reopen);
        Ok(())
    }

    pub fn is_traversable(&self, map: &CityMap, road: RoadId) -> bool {
        if self.known_blocked.contains(&road) {
            return false;
        }
        if let Some(&reopen) = self.suppressed.get(&road) {
            if reopen > self.cycle {
                return false;
            }
        }
        if map.roads[road.index()].initially_blocked && !self.discovered_open.contains(&road) {
            return false;
        }
        true
    }

    pub fn known_blocked(&self) -> impl Iterator<Item = RoadId> + '_ {
        self.known_blocked.iter().copied()
    }
}

impl Default for GraphView {
    fn default() -> Self {
        GraphView::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathResult {
    Path(Vec<NodeId>),
    Unreachable,
}

impl PathResult {
    pub fn path(&self) -> Option<&[NodeId]> {
        match self {
            PathResult::Path(p) => Some(p),
            PathResult::Unreachable => None,
        }
    }

    pub fn is_unreachable(&self) -> bool {
        matches!(self, PathResult::Unreachable)
    }
}

fn bfs_dists(map: &CityMap, view: &GraphView, start: NodeId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; map.nodes.len()];
    dist[start.index()] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        for &(v, road) in map.neighbors(u) {
            if dist[v.index()] == u32::MAX && view.is_traversable(map, road) {
                dist[v.index()] = dist[u.index()] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Minimum-hop path from `from` to `to` over the view's traversable edges.
/// Among equal-hop paths the lexicographically smallest node sequence wins.
pub fn shortest_path(map: &CityMap, view: &GraphView, from: NodeId, to: NodeId) -> Result<PathResult> {
    map.node(from)?;
    map.node(to)?;
    if from == to {
        return Ok(PathResult::Path(vec![from]));
    }
    let dist_from = bfs_dists(map, view, from);
    if dist_from[to.index()] == u32::MAX {
        return Ok(PathResult::Unreachable);
    }
    let dist_to = bfs_dists(map, view, to);
    let total = dist_from[to.index()];

    // Walk forward greedily: at every step take the smallest neighbor that
    // still lies on some minimum-hop path. Neighbor lists are sorted, so the
    // first admissible candidate is the lexicographic choice.
    let mut path = vec![from];
    let mut at = from;
    for step in 1..=total {
        let next = map
            .neighbors(at)
            .iter()
            .filter(|(v, road)| {
                view.is_traversable(map, *road)
                    && dist_from[v.index()] == step
                    && dist_to[v.index()] != u32::MAX
                    && dist_from[v.index()] + dist_to[v.index()] == total
            })
            .map(|&(v, _)| v)
            .next()
            .expect("path exists");
        path.push(next);
        at = next;
    }
    Ok(PathResult::Path(path))
}

/// Total length in meters of a node path. The path must follow existing
/// roads; between two nodes joined by parallel roads the shortest counts.
pub fn path_length_m(map: &CityMap, path: &[NodeId]) -> Result<f64> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let len = map
            .neighbors(w[0])
            .iter()
            .filter(|&&(v, _)| v == w[1])
            .map(|&(_, road)| map.roads[road.index()].length_m)
            .fold(f64::INFINITY, f64::min);
        if !len.is_finite() {
            return Err(Error::InvalidArgument(format!("no road between {} and {}", w[0], w[1])));
        }
        total += len;
    }
    Ok(total)
}

/// All nodes reachable from `from` over traversable edges, including `from`.
pub fn reachable_set(map: &CityMap, view: &GraphView, from: NodeId) -> BTreeSet<NodeId> {
    let dist = bfs_dists(map, view, from);
    map.nodes
        .iter()
        .filter(|n| dist[n.id.index()] != u32::MAX)
        .map(|n| n.id)
        .collect()
}

/// Distance in meters from `from` to every node, measured along a
/// deterministic minimum-hop BFS tree (ties toward the lowest parent id).
/// `None` marks unreachable nodes.
pub fn tree_distances_m(map: &CityMap, view: &GraphView, from: NodeId) -> Vec<Option<f64>> {
    let mut hops = vec![u32::MAX; map.nodes.len()];
    let mut meters: Vec<f64> = vec![f64::INFINITY; map.nodes.len()];
    hops[from.index()] = 0;
    meters[from.index()] = 0.0;
    let mut queue = VecDeque::new();
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        for &(v, road) in map.neighbors(u) {
            if !view.is_traversable(map, road) {
                continue;
            }
            if hops[v.index()] == u32::MAX {
                hops[v.index()] = hops[u.index()] + 1;
                meters[v.index()] = meters[u.index()] + map.roads[road.index()].length_m;
                queue.push_back(v);
            }
        }
    }
    meters
        .into_iter()
        .map(|m| if m.is_finite() { Some(m) } else { None })
        .collect()
}

/// For every candidate building, the set of free agents whose view lets them
/// reach its entrance. Buildings with no able agent map to an empty set.
pub fn agent_domains(
    map: &CityMap,
    views: &BTreeMap<BrigadeId, (&GraphView, NodeId)>,
    candidates: &[BuildingId],
) -> BTreeMap<BuildingId, BTreeSet<BrigadeId>> {
    let mut domains: BTreeMap<BuildingId, BTreeSet<BrigadeId>> =
        candidates.iter().map(|&b| (b, BTreeSet::new())).collect();
    for (&agent, &(view, node)) in views {
        let reach = reachable_set(map, view, node);
        for &b in candidates {
            if reach.contains(&map.building_entrances[b.index()]) {
                domains.get_mut(&b).unwrap().insert(agent);
            }
        }
    }
    domains
}
