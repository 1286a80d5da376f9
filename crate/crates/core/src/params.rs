//! Simulation constants. Every tunable of the kernel, the agents, and the
//! message bus lives here so a scenario file pins a complete configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::valuation::Weights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Simulation stops after this many cycles.
    pub deadline_cycles: u32,
    /// Vision radius of every agent, meters.
    pub vision_radius_m: f64,
    /// Maximum distance at which a brigade can pour water on a building.
    pub extinguish_range_m: f64,
    /// Water a single brigade can apply per cycle (units).
    pub extinguish_per_cycle: f64,
    /// Tank capacity per brigade (units).
    pub tank_capacity: f64,
    /// Water refilled per cycle while inside a refuge.
    pub refill_per_cycle: f64,
    /// Health healed per cycle while inside a refuge.
    pub heal_per_cycle: f64,
    /// Maximum brigade health.
    pub health_max: f64,
    /// Health lost per cycle while inside a burning building.
    pub fire_damage_per_cycle: f64,
    /// Radius within which a fiery building heats its neighbors, meters.
    pub spread_radius_m: f64,
    /// Heat added per fiery neighbor per cycle.
    pub spread_heat_per_neighbor: f64,
    /// Heat at which an unburnt building ignites (halved for broken ones).
    pub ignition_threshold: f64,
    /// Cycles a burning building spends in each stage before advancing.
    pub stage_advance_period: u32,
    /// Water units needed per square meter of footprint at stage 1.
    pub water_need_per_m2: f64,
    /// Edges a brigade may traverse per cycle.
    pub move_budget_edges: u32,
    /// Cycles a collision-reported edge stays suppressed.
    pub reopen_delay_cycles: u32,
    /// Mission timeout: a mission issued at cycle c expires at c + mission_time.
    pub mission_time: u32,
    /// Cycles [0, critical_end_cycle) use the all-on-one-building override.
    pub critical_end_cycle: u32,
    /// Brigades report to the station every this many cycles.
    pub feedback_interval: u32,
    /// Health at or below which a brigade heads for a refuge.
    pub critical_injury_threshold: f64,
    /// Messages a brigade may send per cycle.
    pub brigade_msg_cap: u32,
    /// Messages the station may send per cycle.
    pub station_msg_cap: u32,
    /// Maximum serialized payload size in bytes.
    pub payload_max_bytes: usize,
    /// Brigades that may be routed to stand at one road node.
    pub stand_cap_per_node: u32,
    /// Cycles within which an ignition counts as a positive training label.
    pub ignition_label_window: u32,
    /// Building-value weights and fire-border geometry settings.
    pub weights: Weights,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            deadline_cycles: 300,
            vision_radius_m: 100.0,
            extinguish_range_m: 30.0,
            extinguish_per_cycle: 1000.0,
            tank_capacity: 15000.0,
            refill_per_cycle: 3000.0,
            heal_per_cycle: 10.0,
            health_max: 100.0,
            fire_damage_per_cycle: 5.0,
            spread_radius_m: 50.0,
            spread_heat_per_neighbor: 10.0,
            ignition_threshold: 30.0,
            stage_advance_period: 20,
            water_need_per_m2: 1.0,
            move_budget_edges: 3,
            reopen_delay_cycles: 20,
            mission_time: 25,
            critical_end_cycle: 30,
            feedback_interval: 5,
            critical_injury_threshold: 30.0,
            brigade_msg_cap: 4,
            station_msg_cap: 32,
            payload_max_bytes: 256,
            stand_cap_per_node: 2,
            ignition_label_window: 5,
            weights: Weights::default(),
        }
    }
}

impl SimParams {
    /// Water-need multiplier for a burning stage (1, 2, or 3).
    pub fn stage_multiplier(stage: u8) -> f64 {
        match stage {
            1 => 1.0,
            2 => 1.5,
            3 => 2.0,
            _ => 0.0,
        }
    }

    /// Ignition threshold for a building, halved when it is broken.
    pub fn threshold_for(&self, broken: bool) -> f64 {
        if broken {
            self.ignition_threshold / 2.0
        } else {
            self.ignition_threshold
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("deadline_cycles", self.deadline_cycles as f64),
            ("vision_radius_m", self.vision_radius_m),
            ("extinguish_range_m", self.extinguish_range_m),
            ("extinguish_per_cycle", self.extinguish_per_cycle),
            ("tank_capacity", self.tank_capacity),
            ("refill_per_cycle", self.refill_per_cycle),
            ("heal_per_cycle", self.heal_per_cycle),
            ("health_max", self.health_max),
            ("fire_damage_per_cycle", self.fire_damage_per_cycle),
            ("spread_radius_m", self.spread_radius_m),
            ("spread_heat_per_neighbor", self.spread_heat_per_neighbor),
            ("ignition_threshold", self.ignition_threshold),
            ("stage_advance_period", self.stage_advance_period as f64),
            ("water_need_per_m2", self.water_need_per_m2),
            ("move_budget_edges", self.move_budget_edges as f64),
            ("reopen_delay_cycles", self.reopen_delay_cycles as f64),
            ("mission_time", self.mission_time as f64),
            ("critical_end_cycle", self.critical_end_cycle as f64),
            ("feedback_interval", self.feedback_interval as f64),
            ("critical_injury_threshold", self.critical_injury_threshold),
            ("brigade_msg_cap", self.brigade_msg_cap as f64),
            ("station_msg_cap", self.station_msg_cap as f64),
            ("payload_max_bytes", self.payload_max_bytes as f64),
            ("stand_cap_per_node", self.stand_cap_per_node as f64),
            ("ignition_label_window", self.ignition_label_window as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invariant(format!(
                    "param {name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.ignition_threshold <= self.spread_heat_per_neighbor {
            return Err(Error::Invariant(format!(
                "ignition_threshold ({}) must exceed spread_heat_per_neighbor ({})",
                self.ignition_threshold, self.spread_heat_per_neighbor
            )));
        }
        self.weights.validate()?;
        Ok(())
    }
}
