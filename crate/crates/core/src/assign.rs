//! Mission assignment: capacity-limited min-cost matching of free brigades
//! to target buildings, plus the all-on-one-building override used in the
//! opening cycles.
//!
//! The degree-limited matching reduces to a plain assignment problem by
//! expanding each target into capacity slots. The solver is a shortest
//! augmenting path (Jonker-Volgenant style) run on a padded square matrix,
//! followed by a fix-and-resolve pass that makes tie-breaking canonical:
//! agents in ascending id order take the lowest slot index that preserves
//! the optimal total.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::world::{BrigadeId, BuildingId};

/// Finite stand-in for an unreachable pairing. One avoided `BIG` always
/// outweighs any achievable sum of real path costs (at most the slot count
/// times `REAL_LIMIT`), so the solver maximizes the number of real
/// assignments before minimizing cost. Finite costs at or above
/// `REAL_LIMIT` are treated as unreachable.
const BIG: f64 = 1e9;
const REAL_LIMIT: f64 = 1e6;

/// Split a padded-matrix total into (number of BIG edges, real cost) so the
/// two can be compared without BIG swamping the tolerance.
fn decompose(total: f64) -> (u64, f64) {
    let bigs = (total / BIG).round();
    (bigs as u64, total - bigs * BIG)
}

/// Compare padded totals: fewer BIG edges always wins; equal BIG counts
/// compare real cost with a tolerance generous enough to absorb the
/// rounding that BIG-magnitude sums introduce.
fn leq_total(a: f64, b: f64) -> bool {
    let (ba, ra) = decompose(a);
    let (bb, rb) = decompose(b);
    ba < bb || (ba == bb && ra <= rb + 1e-3 + 1e-6 * rb.abs())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Mission {
    pub target: BuildingId,
    pub brigades: Vec<BrigadeId>,
    pub issue_cycle: u32,
    pub deadline: u32,
    /// Water the predictor estimated the target still needs, units.
    pub water_budget: f64,
}

impl Mission {
    pub fn expired(&self, cycle: u32) -> bool {
        cycle > self.deadline
    }
}

/// Agents, capacity slots, and the cost of every pairing. `cost[i][j]` is
/// the path distance in meters from agent `i` to slot `j`'s building, or
/// `f64::INFINITY` when the agent cannot reach it.
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    pub agents: Vec<BrigadeId>,
    pub slots: Vec<(BuildingId, u32)>,
    pub cost: Vec<Vec<f64>>,
}

impl AssignmentProblem {
    pub fn validate(&self) -> Result<()> {
        if self.cost.len() != self.agents.len() {
            return Err(Error::InvalidArgument(format!(
                "cost has {} rows for {} agents",
                self.cost.len(),
                self.agents.len()
            )));
        }
        for (i, row) in self.cost.iter().enumerate() {
            if row.len() != self.slots.len() {
                return Err(Error::InvalidArgument(format!(
                    "cost row {i} has {} entries for {} slots",
                    row.len(),
                    self.slots.len()
                )));
            }
            for (j, &c) in row.iter().enumerate() {
                if c.is_nan() || c < 0.0 {
                    return Err(Error::InvalidArgument(format!("cost[{i}][{j}] = {c} is invalid")));
                }
            }
        }
        // Slots of the same building must price identically for each agent.
        for i in 0..self.agents.len() {
            let mut per_building: BTreeMap<BuildingId, f64> = BTreeMap::new();
            for (j, &(b, _)) in self.slots.iter().enumerate() {
                let c = self.cost[i][j];
                match per_building.get(&b) {
                    None => {
                        per_building.insert(b, c);
                    }
                    Some(&prev) if prev == c || (prev.is_infinite() && c.is_infinite()) => {}
                    Some(&prev) => {
                        return Err(Error::InvalidArgument(format!(
                            "agent {i} prices building {b} at both {prev} and {c}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Slot index per agent (same order as `problem.agents`), `None` for
    /// agents left unassigned.
    pub slot_of_agent: Vec<Option<usize>>,
    pub total_cost: f64,
}

/// Minimum total cost of a square matrix under a perfect matching, via
/// shortest augmenting paths with potentials.
fn square_optimum(a: &[Vec<f64>]) -> f64 {
    let k = a.len();
    if k == 0 {
        return 0.0;
    }
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut col_row = vec![0usize; k + 1]; // matched row (1-based) per column
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=k {
        if col_row[j] > 0 {
            total += a[col_row[j] - 1][j - 1];
        }
    }
    total
}

/// Optimum over the residual square matrix spanned by `rows` x `cols`.
fn residual_optimum(square: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    debug_assert_eq!(rows.len(), cols.len());
    let sub: Vec<Vec<f64>> =
        rows.iter().map(|&r| cols.iter().map(|&c| square[r][c]).collect()).collect();
    square_optimum(&sub)
}

/// Solve the assignment problem. Agents with no reachable slot stay
/// unassigned; among equally cheap matchings, agents in ascending order take
/// the lowest admissible slot index.
pub fn min_cost_assignment(problem: &AssignmentProblem) -> Result<Assignment> {
    problem.validate()?;
    let n = problem.agents.len();
    let m = problem.slots.len();
    if n == 0 || m == 0 {
        return Ok(Assignment { slot_of_agent: vec![None; n], total_cost: 0.0 });
    }
    let k = n.max(m);

    // Square padding: virtual rows cost nothing anywhere, virtual columns
    // (and unreachable pairings) cost BIG.
    let square: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i >= n {
                        0.0
                    } else if j >= m || problem.cost[i][j] >= REAL_LIMIT {
                        BIG
                    } else {
                        problem.cost[i][j]
                    }
                })
                .collect()
        })
        .collect();

    let mut rows_left: Vec<usize> = (0..k).collect();
    let mut cols_left: Vec<usize> = (0..k).collect();
    let mut opt = square_optimum(&square);
    let mut slot_of_agent: Vec<Option<usize>> = vec![None; n];
    let mut total_cost = 0.0;

    for r in 0..n {
        let mut chosen = None;
        for (ci, &c) in cols_left.iter().enumerate() {
            let rest_rows: Vec<usize> = rows_left.iter().copied().filter(|&x| x != r).collect();
            let rest_cols: Vec<usize> =
                cols_left.iter().copied().enumerate().filter(|&(i, _)| i != ci).map(|(_, x)| x).collect();
            let rest = residual_optimum(&square, &rest_rows, &rest_cols);
            if leq_total(square[r][c] + rest, opt) {
                chosen = Some((ci, c, rest));
                break;
            }
        }
        let (ci, c, rest) = chosen.expect("some column always preserves the optimum");
        if c < m && square[r][c] < BIG {
            slot_of_agent[r] = Some(c);
            total_cost += problem.cost[r][c];
        }
        cols_left.remove(ci);
        rows_left.retain(|&x| x != r);
        opt = rest;
    }

    Ok(Assignment { slot_of_agent, total_cost })
}

/// Capacity of a target: how many brigades its predicted water demand
/// justifies, at one brigade-mission-half of extinguishing work per slot.
pub fn slot_capacity(predicted_water: f64, params: &SimParams) -> u32 {
    let per_slot = params.extinguish_per_cycle * params.mission_time as f64 / 2.0;
    let c = (predicted_water / per_slot).ceil();
    if c.is_finite() && c >= 1.0 {
        (c as u32).min(5)
    } else {
        1
    }
}

/// Build missions for the planning pipeline: expand targets into capacity
/// slots, price every agent-slot pair with the given path distances, solve,
/// and group the assigned brigades per target.
///
/// `targets` come ordered by descending value; `dist` gives each free
/// agent's path distance in meters to each target's entrance (`None` when
/// the agent is outside the building's domain); `predicted_water` feeds slot
/// capacities.
pub fn schedule_missions(
    targets: &[BuildingId],
    free_agents: &[BrigadeId],
    dist: &BTreeMap<(BrigadeId, BuildingId), Option<f64>>,
    predicted_water: &BTreeMap<BuildingId, f64>,
    cycle: u32,
    params: &SimParams,
) -> Result<Vec<Mission>> {
    if targets.is_empty() || free_agents.is_empty() {
        return Ok(Vec::new());
    }
    let mut slots = Vec::new();
    for &b in targets {
        let water = predicted_water.get(&b).copied().unwrap_or(0.0);
        for s in 0..slot_capacity(water, params) {
            slots.push((b, s));
        }
    }
    let cost: Vec<Vec<f64>> = free_agents
        .iter()
        .map(|&a| {
            slots
                .iter()
                .map(|&(b, _)| dist.get(&(a, b)).copied().flatten().unwrap_or(f64::INFINITY))
                .collect()
        })
        .collect();
    let problem = AssignmentProblem { agents: free_agents.to_vec(), slots, cost };
    let solved = min_cost_assignment(&problem)?;

    let mut per_target: BTreeMap<BuildingId, Vec<BrigadeId>> = BTreeMap::new();
    for (i, slot) in solved.slot_of_agent.iter().enumerate() {
        if let Some(j) = slot {
            per_target.entry(problem.slots[*j].0).or_default().push(problem.agents[i]);
        }
    }
    Ok(per_target
        .into_iter()
        .map(|(target, mut brigades)| {
            brigades.sort_unstable();
            Mission {
                target,
                brigades,
                issue_cycle: cycle,
                deadline: cycle + params.mission_time,
                water_budget: predicted_water.get(&target).copied().unwrap_or(0.0),
            }
        })
        .collect())
}

/// Opening-cycles override: every free agent is sent to the single
/// highest-valued fiery building; prediction plays no part.
pub fn critical_assign(
    values: &[(BuildingId, f64)],
    free_agents: &[BrigadeId],
    cycle: u32,
    params: &SimParams,
) -> Vec<Mission> {
    let best = values
        .iter()
        .min_by(|(ida, va), (idb, vb)| vb.partial_cmp(va).unwrap().then(ida.cmp(idb)))
        .map(|&(id, _)| id);
    match best {
        Some(target) if !free_agents.is_empty() => {
            let mut brigades = free_agents.to_vec();
            brigades.sort_unstable();
            vec![Mission {
                target,
                brigades,
                issue_cycle: cycle,
                deadline: cycle + params.mission_time,
                water_budget: 0.0,
            }]
        }
        _ => Vec::new(),
    }
}
