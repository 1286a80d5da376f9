//! Fire prediction: a small feed-forward network estimating which buildings
//! ignite soon and how much water a burning building will take, plus the
//! feature preparation and the pipeline that mines training data from
//! replay logs.
//!
//! The station never sees kernel ground truth; features are computed from
//! whatever stage knowledge, heat estimates, and ignition timestamps the
//! caller has, so the same code serves the live station and the offline
//! harvester.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::replay::{CycleRecord, LogMeta};
use crate::world::{BuildingId, CityMap};

pub const FEATURE_COUNT: usize = 8;

/// Feature scaling constants. Every feature lands in [0, 1].
const NEIGHBOR_NORM: f64 = 10.0;
const DIST_CAP_M: f64 = 200.0;
const AREA_NORM_M2: f64 = 8000.0;
const AGE_CAP_CYCLES: f64 = 50.0;

/// Water labels and predictions are scaled by this many units.
pub const WATER_SCALE: f64 = 10_000.0;

pub type FeatureVector = [f64; FEATURE_COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    /// Sigmoid output: probability the building ignites soon.
    Ignition,
    /// Identity output clamped at zero: scaled water demand.
    Water,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorNet {
    pub sizes: Vec<usize>,
    /// One row-major matrix per layer, shape sizes[l+1] x sizes[l].
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub kind: NetKind,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl PredictorNet {
    /// Fresh net with small uniform weights, deterministic in the seed.
    pub fn new(sizes: &[usize], kind: NetKind, seed: u64) -> PredictorNet {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let scale = 1.0 / (sizes[l] as f64).sqrt();
            weights.push(
                (0..sizes[l + 1] * sizes[l]).map(|_| rng.random_range(-scale..scale)).collect(),
            );
            biases.push(vec![0.0; sizes[l + 1]]);
        }
        PredictorNet { sizes: sizes.to_vec(), weights, biases, kind }
    }

    /// All-zero parameters: the neutral net (0.5 ignition probability, zero
    /// water) used when no trained net is supplied.
    pub fn zeroed(sizes: &[usize], kind: NetKind) -> PredictorNet {
        let mut net = PredictorNet::new(sizes, kind, 0);
        for w in net.weights.iter_mut() {
            w.iter_mut().for_each(|x| *x = 0.0);
        }
        net
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::InvalidArgument("net needs at least two layers".into()));
        }
        if self.weights.len() != self.sizes.len() - 1 || self.biases.len() != self.sizes.len() - 1 {
            return Err(Error::InvalidArgument("layer count mismatch".into()));
        }
        for l in 0..self.weights.len() {
            if self.weights[l].len() != self.sizes[l + 1] * self.sizes[l]
                || self.biases[l].len() != self.sizes[l + 1]
            {
                return Err(Error::InvalidArgument(format!("layer {l} shape mismatch")));
            }
            if self.weights[l].iter().chain(&self.biases[l]).any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(())
    }

    /// Pre-activations and activations per layer, input included.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::new();
        let mut activations = vec![x.to_vec()];
        for l in 0..self.weights.len() {
            let n_in = self.sizes[l];
            let prev = activations.last().unwrap().clone();
            let mut z = self.biases[l].clone();
            for (o, zo) in z.iter_mut().enumerate() {
                for (i, p) in prev.iter().enumerate() {
                    *zo += self.weights[l][o * n_in + i] * p;
                }
            }
            let last = l == self.weights.len() - 1;
            let a: Vec<f64> = z
                .iter()
                .map(|&zv| {
                    if !last {
                        sigmoid(zv)
                    } else {
                        match self.kind {
                            NetKind::Ignition => sigmoid(zv),
                            NetKind::Water => zv.max(0.0),
                        }
                    }
                })
                .collect();
            zs.push(z);
            activations.push(a);
        }
        (zs, activations)
    }

    /// Deterministic forward pass; the single output value.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.sizes[0] {
            return Err(Error::InvalidArgument(format!(
                "input has {} features, net expects {}",
                x.len(),
                self.sizes[0]
            )));
        }
        let (_, activations) = self.forward_trace(x);
        Ok(activations.last().unwrap()[0])
    }

    /// Loss of one sample: cross-entropy for ignition nets, half squared
    /// error for water nets.
    pub fn loss(&self, x: &[f64], y: f64) -> Result<f64> {
        let p = self.forward(x)?;
        Ok(match self.kind {
            NetKind::Ignition => {
                let p = p.clamp(1e-12, 1.0 - 1e-12);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            }
            NetKind::Water => 0.5 * (p - y) * (p - y),
        })
    }

    /// Analytic parameter gradients of the single-sample loss, in the same
    /// layout as `weights` and `biases`.
    pub fn gradients(&self, x: &[f64], y: f64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        if x.len() != self.sizes[0] {
            return Err(Error::InvalidArgument("input size mismatch".into()));
        }
        let (zs, activations) = self.forward_trace(x);
        let layers = self.weights.len();
        let mut dw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut db: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        // Output delta: dL/dz of the final layer. Cross-entropy through a
        // sigmoid and half-squared-error through identity both collapse to
        // (p - y); the water clamp zeroes the gradient where it is active.
        let p = activations[layers][0];
        let mut delta = vec![match self.kind {
            NetKind::Ignition => p - y,
            NetKind::Water => {
                if zs[layers - 1][0] > 0.0 {
                    p - y
                } else {
                    0.0
                }
            }
        }];

        for l in (0..layers).rev() {
            let n_in = self.sizes[l];
            for (o, d) in delta.iter().enumerate() {
                db[l][o] = *d;
                for i in 0..n_in {
                    dw[l][o * n_in + i] = d * activations[l][i];
                }
            }
            if l > 0 {
                let mut prev_delta = vec![0.0; n_in];
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    let mut sum = 0.0;
                    for (o, d) in delta.iter().enumerate() {
                        sum += self.weights[l][o * n_in + i] * d;
                    }
                    let a = activations[l][i];
                    *pd = sum * a * (1.0 - a);
                }
                delta = prev_delta;
            }
        }
        Ok((dw, db))
    }
}

/// Mini-batch gradient descent. Returns the trained net and the mean loss
/// per epoch. Deterministic for a fixed seed and data order.
pub fn train(
    net: &PredictorNet,
    dataset: &[(FeatureVector, f64)],
    epochs: u32,
    learning_rate: f64,
    seed: u64,
) -> Result<(PredictorNet, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::Training("dataset is empty".into()));
    }
    net.validate()?;
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(epochs as usize);
    let batch = 32usize;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut dw: Vec<Vec<f64>> = net.weights.iter().map(|w| vec![0.0; w.len()]).collect();
            let mut db: Vec<Vec<f64>> = net.biases.iter().map(|b| vec![0.0; b.len()]).collect();
            for &idx in chunk {
                let (x, y) = &dataset[idx];
                let (gw, gb) = net.gradients(x, *y)?;
                for l in 0..dw.len() {
                    for (acc, g) in dw[l].iter_mut().zip(&gw[l]) {
                        *acc += g;
                    }
                    for (acc, g) in db[l].iter_mut().zip(&gb[l]) {
                        *acc += g;
                    }
                }
                epoch_loss += net.loss(x, *y)?;
            }
            let scale = learning_rate / chunk.len() as f64;
            for l in 0..net.weights.len() {
                for (w, g) in net.weights[l].iter_mut().zip(&dw[l]) {
                    *w -= scale * g;
                }
                for (b, g) in net.biases[l].iter_mut().zip(&db[l]) {
                    *b -= scale * g;
                }
            }
        }
        let mean = epoch_loss / dataset.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training(format!("non-finite loss {mean}")));
        }
        trace.push(mean);
    }
    Ok((net, trace))
}

pub fn save_net(net: &PredictorNet) -> String {
    let mut s = serde_json::to_string_pretty(net).expect("net serializes");
    s.push('\n');
    s
}

pub fn load_net(text: &str) -> Result<PredictorNet> {
    let net: PredictorNet =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("net file: {e}")))?;
    net.validate()?;
    Ok(net)
}

/// What the feature extractor may know about the world. Index = building id.
pub struct Knowledge<'a> {
    pub stages: &'a [u8],
    /// Estimated accumulated heat per building (never kernel truth).
    pub est_heat: &'a [f64],
    /// Cycle each building was first known fiery, if ever.
    pub first_fiery_cycle: &'a [Option<u32>],
}

/// The eight features for one candidate building, each scaled into [0, 1]:
/// fiery neighbors, distance to nearest fire, brokenness, area, heat over
/// threshold, age of the nearest fire, stage-3 neighbors, refuge flag.
pub fn extract_features(
    map: &CityMap,
    params: &SimParams,
    know: &Knowledge<'_>,
    b: BuildingId,
    cycle: u32,
) -> Result<FeatureVector> {
    let building = map.building(b)?;
    let r_f = params.spread_radius_m;
    let neighbors = map.buildings_within(building.pos, r_f);

    let mut fiery_count = 0u32;
    let mut stage3_count = 0u32;
    let mut nearest_age: Option<u32> = None;
    let mut nearest_dist = f64::INFINITY;
    for &n in &neighbors {
        if n == b {
            continue;
        }
        let stage = know.stages[n.index()];
        if (1..=3).contains(&stage) {
            fiery_count += 1;
            if stage == 3 {
                stage3_count += 1;
            }
            let d = building.pos.distance(map.buildings[n.index()].pos);
            if d < nearest_dist {
                nearest_dist = d;
                nearest_age = know.first_fiery_cycle[n.index()].map(|c| cycle.saturating_sub(c));
            }
        }
    }
    // The loop above only sees the spread radius; the distance feature
    // looks city-wide so far-off fires still register.
    let mut global_nearest = f64::INFINITY;
    for other in &map.buildings {
        if other.id != b && (1..=3).contains(&know.stages[other.id.index()]) {
            global_nearest = global_nearest.min(building.pos.distance(other.pos));
        }
    }

    let threshold = params.threshold_for(building.broken);
    Ok([
        (fiery_count as f64 / NEIGHBOR_NORM).min(1.0),
        if global_nearest.is_finite() { (global_nearest / DIST_CAP_M).min(1.0) } else { 1.0 },
        if building.broken { 1.0 } else { 0.0 },
        (building.area_m2 / AREA_NORM_M2).min(1.0),
        (know.est_heat[b.index()] / threshold).clamp(0.0, 1.0),
        nearest_age.map(|a| (a as f64 / AGE_CAP_CYCLES).min(1.0)).unwrap_or(1.0),
        (stage3_count as f64 / NEIGHBOR_NORM).min(1.0),
        if building.is_refuge { 1.0 } else { 0.0 },
    ])
}

#[derive(Debug, Default)]
pub struct Dataset {
    /// (features, 0/1): did the building ignite within the label window?
    pub ignition: Vec<(FeatureVector, f64)>,
    /// (features, water / WATER_SCALE) for buildings that were extinguished.
    pub water: Vec<(FeatureVector, f64)>,
}

/// Mine training samples from replay logs. Ignition samples label each
/// still-unburnt building by whether it ignites within the configured
/// window; negatives are thinned deterministically to keep classes roughly
/// balanced. Water samples pair each burning cycle of an eventually
/// extinguished building with the total water that put it out.
pub fn harvest_training_data(logs: &[(LogMeta, Vec<CycleRecord>)]) -> Result<Dataset> {
    let mut out = Dataset::default();
    for (meta, records) in logs {
        let scenario = &meta.scenario;
        let map = scenario.map();
        let params = &scenario.params;
        let n = map.buildings.len();

        // Ignition cycle per building (0 for initial fires).
        let mut ignition_cycle: Vec<Option<u32>> = vec![None; n];
        for &b in &scenario.ignitions {
            ignition_cycle[b.index()] = Some(0);
        }
        let mut extinguished_at: Vec<Option<u32>> = vec![None; n];
        let mut water_spent = vec![0.0f64; n];
        for rec in records {
            for &b in &rec.ignitions {
                if ignition_cycle[b.index()].is_none() {
                    ignition_cycle[b.index()] = Some(rec.cycle);
                }
            }
            for c in &rec.stage_changes {
                if c.to == 4 && extinguished_at[c.building.index()].is_none() {
                    extinguished_at[c.building.index()] = Some(rec.cycle);
                }
            }
            for &(_, target, w) in &rec.water_applied {
                water_spent[target.index()] += w;
            }
        }

        // Replay stages and heat forward, emitting samples at the start of
        // every cycle.
        let mut stages = vec![0u8; n];
        let mut heat = vec![0.0f64; n];
        for &b in &scenario.ignitions {
            stages[b.index()] = 1;
        }
        let window = params.ignition_label_window;
        for rec in records {
            let t = rec.cycle;
            let first_known: Vec<Option<u32>> =
                ignition_cycle.iter().map(|c| c.filter(|&ic| ic <= t)).collect();
            let know = Knowledge { stages: &stages, est_heat: &heat, first_fiery_cycle: &first_known };
            for b in &map.buildings {
                let idx = b.id.index();
                if stages[idx] == 0 {
                    let label = match ignition_cycle[idx] {
                        Some(c) if c > t && c - t <= window => 1.0,
                        _ => 0.0,
                    };
                    if label == 1.0 || (idx as u32 + t) % 7 == 0 {
                        out.ignition.push((extract_features(map, params, &know, b.id, t)?, label));
                    }
                } else if (1..=3).contains(&stages[idx]) {
                    if let Some(ext) = extinguished_at[idx] {
                        if t <= ext {
                            out.water.push((
                                extract_features(map, params, &know, b.id, t)?,
                                water_spent[idx] / WATER_SCALE,
                            ));
                        }
                    }
                }
            }

            // Advance the reconstruction with this cycle's events.
            let fiery_now: Vec<BuildingId> = map
                .buildings
                .iter()
                .map(|b| b.id)
                .filter(|b| (1..=3).contains(&stages[b.index()]))
                .collect();
            for &f in &fiery_now {
                for nb in map.buildings_within(map.buildings[f.index()].pos, params.spread_radius_m)
                {
                    if nb != f && stages[nb.index()] == 0 {
                        heat[nb.index()] += params.spread_heat_per_neighbor;
                    }
                }
            }
            for &b in &rec.ignitions {
                stages[b.index()] = 1;
            }
            for c in &rec.stage_changes {
                stages[c.building.index()] = c.to;
            }
        }
    }
    Ok(out)
}
