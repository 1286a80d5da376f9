//! Building valuation: scores fiery buildings by how profitable they are to
//! extinguish, combining the count of unburnt neighbors, a fire-border
//! destructiveness measure, and the travel cost of the free brigades.
//!
//! The destructiveness measure `HV` works on the convex hull of the fiery
//! buildings: a hull-vertex building looks along the bisector of its hull
//! angle and measures the gap to the nearest fiery building within a lateral
//! margin of that ray. Large gaps mean a fire front with room to grow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{orient, Point};
use crate::world::{stage_is_fiery, unfired_neighbors, BuildingId, CityMap, StageView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    /// Penalty per meter of summed free-agent travel distance.
    pub alpha: f64,
    /// Reward per unburnt neighbor.
    pub beta: f64,
    /// Reward per meter of border gap (HV).
    pub gamma: f64,
    /// Lateral half-width of the HV search strip, meters.
    pub margin_m: f64,
    /// HV value when no candidate lies along the ray, and the cap for
    /// degenerate two-building configurations.
    pub hv_max_m: f64,
    /// Neighbor radius shared with the unburnt-neighbor count, meters.
    pub r_adj_m: f64,
    /// Aim the bisector ray away from the hull instead of into it.
    pub outward_bisector: bool,
    /// Sum travel distances over all free agents instead of only those able
    /// to reach the building.
    pub sum_over_all_free: bool,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            alpha: 0.001,
            beta: 1.0,
            gamma: 0.05,
            margin_m: 20.0,
            hv_max_m: 200.0,
            r_adj_m: 50.0,
            outward_bisector: false,
            sum_over_all_free: false,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invariant(format!("weight {name} must be non-negative, got {v}")));
            }
        }
        if !(self.margin_m > 0.0) {
            return Err(Error::Invariant(format!("margin_m must be positive, got {}", self.margin_m)));
        }
        if !(self.hv_max_m > 0.0) {
            return Err(Error::Invariant(format!("hv_max_m must be positive, got {}", self.hv_max_m)));
        }
        if !(self.r_adj_m > 0.0) {
            return Err(Error::Invariant(format!("r_adj_m must be positive, got {}", self.r_adj_m)));
        }
        Ok(())
    }
}

/// Counter-clockwise convex hull of `points`, collinear points excluded.
/// Zero, one, or two distinct points are returned as-is (deduplicated);
/// fully collinear inputs collapse to their two extremes.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() <= 2 {
        return pts;
    }

    // Andrew's monotone chain: same output as the classic polar-angle scan
    // without needing a sort around a pivot.
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // All points collinear: keep the two extremes.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    // Rotate so the hull starts at the lexicographically smallest vertex.
    let start = lower
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()))
        .map(|(i, _)| i)
        .unwrap();
    lower.rotate_left(start);
    lower
}

/// Unit interior-angle bisector of the hull at vertex index `i`, pointing
/// into the hull. The hull must be in counter-clockwise order with at least
/// three vertices.
pub fn border_direction(hull: &[Point], i: usize) -> Result<Point> {
    if hull.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "hull must have at least 3 vertices, got {}",
            hull.len()
        )));
    }
    if i >= hull.len() {
        return Err(Error::InvalidArgument(format!("vertex index {i} out of range")));
    }
    let x = hull[i];
    let prev = hull[(i + hull.len() - 1) % hull.len()];
    let next = hull[(i + 1) % hull.len()];
    let to_prev = prev.sub(x).normalize().ok_or_else(|| {
        Error::InvalidArgument("degenerate hull: repeated vertex".into())
    })?;
    let to_next = next.sub(x).normalize().ok_or_else(|| {
        Error::InvalidArgument("degenerate hull: repeated vertex".into())
    })?;
    to_prev
        .add(to_next)
        .normalize()
        .ok_or_else(|| Error::InvalidArgument("straight hull angle has no bisector".into()))
}

/// The fiery buildings of a stage view together with the convex hull of
/// their centroids.
#[derive(Debug, Clone)]
pub struct FireBorder {
    pub fiery: Vec<BuildingId>,
    pub hull: Vec<Point>,
}

impl FireBorder {
    pub fn from_stages(map: &CityMap, stages: &StageView) -> FireBorder {
        let fiery: Vec<BuildingId> = map
            .buildings
            .iter()
            .filter(|b| stage_is_fiery(stages[b.id.index()]))
            .map(|b| b.id)
            .collect();
        let points: Vec<Point> = fiery.iter().map(|&b| map.buildings[b.index()].pos).collect();
        FireBorder { fiery, hull: convex_hull(&points) }
    }

    fn hull_index_of(&self, p: Point) -> Option<usize> {
        self.hull.iter().position(|&h| h.x == p.x && h.y == p.y)
    }
}

/// Border destructiveness of fiery building `x`, in meters.
///
/// Hull vertices look along their angle bisector for the nearest fiery
/// building within the margin strip; buildings interior to the border score
/// zero. Degenerate fire sets (one or two fiery buildings, or a collinear
/// border) fall back as documented on each branch.
pub fn hv(map: &CityMap, border: &FireBorder, x: BuildingId, weights: &Weights) -> Result<f64> {
    if !border.fiery.contains(&x) {
        return Err(Error::InvalidArgument(format!("building {x} is not fiery")));
    }
    let xp = map.building(x)?.pos;

    if border.fiery.len() == 1 {
        // The only fire in the city: nothing bounds its spread.
        return Ok(weights.hv_max_m);
    }
    if border.hull.len() < 3 {
        if border.fiery.len() == 2 {
            let other = border.fiery.iter().find(|&&b| b != x).copied().unwrap();
            let d = xp.distance(map.buildings[other.index()].pos);
            return Ok(d.min(weights.hv_max_m));
        }
        // Three or more collinear fires: treat every one as border-interior.
        return Ok(0.0);
    }

    let Some(i) = border.hull_index_of(xp) else {
        return Ok(0.0);
    };
    let mut u = border_direction(&border.hull, i)?;
    if weights.outward_bisector {
        u = Point::new(-u.x, -u.y);
    }

    let mut best: Option<f64> = None;
    for &other in &border.fiery {
        if other == x {
            continue;
        }
        let q = map.buildings[other.index()].pos.sub(xp);
        let along = q.dot(u);
        let lateral = u.cross(q).abs();
        if along >= 0.0 && lateral <= weights.margin_m {
            let d = q.norm();
            best = Some(match best {
                Some(b) => b.min(d),
                None => d,
            });
        }
    }
    Ok(best.unwrap_or(weights.hv_max_m))
}

/// Building value: `beta * N + gamma * HV - alpha * sum(d_i)` where the sum
/// runs over the free agents that can reach the building. `agent_dists`
/// carries one entry per free agent, `None` when the agent cannot reach it.
pub fn building_value(
    map: &CityMap,
    stages: &StageView,
    border: &FireBorder,
    b: BuildingId,
    agent_dists: &[Option<f64>],
    weights: &Weights,
) -> Result<f64> {
    if !stage_is_fiery(stages[b.index()]) {
        return Err(Error::InvalidArgument(format!("building {b} is not fiery")));
    }
    let n = unfired_neighbors(map, stages, b, weights.r_adj_m)? as f64;
    let hv_val = hv(map, border, b, weights)?;
    let dist_sum: f64 = agent_dists.iter().filter_map(|d| *d).sum();
    Ok(weights.beta * n + weights.gamma * hv_val - weights.alpha * dist_sum)
}

/// The `k` highest-valued buildings, ties broken toward the lower id.
pub fn select_targets(values: &[(BuildingId, f64)], k: usize) -> Vec<BuildingId> {
    let mut sorted: Vec<(BuildingId, f64)> = values.to_vec();
    sorted.sort_by(|(ida, va), (idb, vb)| {
        vb.partial_cmp(va).unwrap().then(ida.cmp(idb))
    });
    sorted.into_iter().take(k).map(|(id, _)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Building, RoadNode, Road, NodeId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// O(n^3) hull-vertex oracle: p is a hull vertex iff it is not contained
    /// in any triangle (possibly degenerate) formed by other points.
    pub(crate) fn hull_vertices_oracle(points: &[Point]) -> Vec<Point> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
        pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
        let inside = |p: Point, a: Point, b: Point, c: Point| -> bool {
            let d1 = orient(a, b, p);
            let d2 = orient(b, c, p);
            let d3 = orient(c, a, p);
            let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
            let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
            !(has_neg && has_pos)
        };
        let on_segment = |p: Point, a: Point, b: Point| -> bool {
            orient(a, b, p) == 0.0
                && p.x >= a.x.min(b.x)
                && p.x <= a.x.max(b.x)
                && p.y >= a.y.min(b.y)
                && p.y <= a.y.max(b.y)
        };
        pts.iter()
            .copied()
            .filter(|&p| {
                let others: Vec<Point> =
                    pts.iter().copied().filter(|&q| q.x != p.x || q.y != p.y).collect();
                for i in 0..others.len() {
                    for j in (i + 1)..others.len() {
                        if on_segment(p, others[i], others[j]) {
                            return false;
                        }
                        for k in (j + 1)..others.len() {
                            if orient(others[i], others[j], others[k]) != 0.0
                                && inside(p, others[i], others[j], others[k])
                            {
                                return false;
                            }
                        }
                    }
                }
                true
            })
            .collect()
    }

    fn as_sorted(mut v: Vec<Point>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
        v.into_iter().map(|p| (p.x, p.y)).collect()
    }

    #[test]
    fn hull_square_with_interior_point() {
        let hull = convex_hull(&[pt(0.0, 0.0), pt(4.0, 0.0), pt(4.0, 4.0), pt(0.0, 4.0), pt(2.0, 2.0)]);
        assert_eq!(hull, vec![pt(0.0, 0.0), pt(4.0, 0.0), pt(4.0, 4.0), pt(0.0, 4.0)]);
    }

    #[test]
    fn hull_degenerate_cases() {
        assert_eq!(convex_hull(&[pt(0.0, 0.0)]), vec![pt(0.0, 0.0)]);
        assert_eq!(convex_hull(&[]), Vec::<Point>::new());
        assert_eq!(
            convex_hull(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0)]),
            vec![pt(0.0, 0.0), pt(2.0, 0.0)]
        );
        assert_eq!(convex_hull(&[pt(1.0, 1.0), pt(1.0, 1.0)]), vec![pt(1.0, 1.0)]);
    }

    #[test]
    fn hull_is_counter_clockwise() {
        let hull = convex_hull(&[pt(0.0, 0.0), pt(10.0, 0.0), pt(6.0, 8.0), pt(0.0, 10.0)]);
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            let c = hull[(i + 2) % hull.len()];
            assert!(orient(a, b, c) > 0.0, "hull turn at {i} not CCW");
        }
    }

    #[test]
    fn hull_matches_oracle_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x48554c4c);
        for _ in 0..200 {
            let n = rng.random_range(1..=12);
            let pts: Vec<Point> = (0..n)
                .map(|_| pt(rng.random_range(0..12) as f64, rng.random_range(0..12) as f64))
                .collect();
            let hull = convex_hull(&pts);
            let oracle = hull_vertices_oracle(&pts);
            assert_eq!(as_sorted(hull), as_sorted(oracle), "points: {pts:?}");
        }
    }

    #[test]
    fn bisector_square_corners() {
        let hull = vec![pt(0.0, 0.0), pt(10.0, 0.0), pt(10.0, 10.0), pt(0.0, 10.0)];
        let h = (2.0f64).sqrt() / 2.0;
        let u = border_direction(&hull, 0).unwrap();
        assert!((u.x - h).abs() < 1e-9 && (u.y - h).abs() < 1e-9, "{u:?}");
        let v = border_direction(&hull, 2).unwrap();
        assert!((v.x + h).abs() < 1e-9 && (v.y + h).abs() < 1e-9, "{v:?}");
        for i in 0..4 {
            assert!((border_direction(&hull, i).unwrap().norm() - 1.0).abs() < 1e-9);
        }
        assert!(border_direction(&hull[..2], 0).is_err());
        assert!(border_direction(&hull, 9).is_err());
    }

    fn map_with_buildings(positions: &[(f64, f64)]) -> CityMap {
        let nodes = vec![RoadNode { id: NodeId(0), pos: pt(0.0, 0.0) }, RoadNode {
            id: NodeId(1),
            pos: pt(1000.0, 0.0),
        }];
        let roads = vec![Road { a: NodeId(0), b: NodeId(1), length_m: 1000.0, initially_blocked: false }];
        let buildings: Vec<Building> = positions
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Building {
                id: BuildingId(i as u32),
                pos: pt(x, y),
                area_m2: 100.0,
                broken: false,
                is_refuge: false,
            })
            .collect();
        let entrances = vec![NodeId(0); positions.len()];
        CityMap::new(nodes, roads, buildings, vec![], entrances).unwrap()
    }

    #[test]
    fn hv_square_corner_example() {
        let map = map_with_buildings(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let stages = vec![1u8; 4];
        let border = FireBorder::from_stages(&map, &stages);
        let w = Weights { margin_m: 2.0, ..Weights::default() };
        let v = hv(&map, &border, BuildingId(0), &w).unwrap();
        assert!((v - 200.0f64.sqrt()).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn hv_degenerate_fallbacks() {
        let w = Weights::default();

        let map = map_with_buildings(&[(0.0, 0.0)]);
        let stages = vec![1u8];
        let border = FireBorder::from_stages(&map, &stages);
        assert_eq!(hv(&map, &border, BuildingId(0), &w).unwrap(), w.hv_max_m);

        let map = map_with_buildings(&[(0.0, 0.0), (30.0, 40.0)]);
        let stages = vec![1u8, 1];
        let border = FireBorder::from_stages(&map, &stages);
        assert_eq!(hv(&map, &border, BuildingId(0), &w).unwrap(), 50.0);

        // Distance capped at hv_max for a far pair.
        let map = map_with_buildings(&[(0.0, 0.0), (300.0, 400.0)]);
        let stages = vec![1u8, 1];
        let border = FireBorder::from_stages(&map, &stages);
        assert_eq!(hv(&map, &border, BuildingId(0), &w).unwrap(), w.hv_max_m);

        // Interior building scores zero.
        let map =
            map_with_buildings(&[(0.0, 0.0), (40.0, 0.0), (40.0, 40.0), (0.0, 40.0), (20.0, 20.0)]);
        let stages = vec![1u8; 5];
        let border = FireBorder::from_stages(&map, &stages);
        assert_eq!(hv(&map, &border, BuildingId(4), &w).unwrap(), 0.0);

        // Non-fiery building is an error.
        let stages = vec![1u8, 1, 1, 1, 0];
        let border = FireBorder::from_stages(&map, &stages);
        assert!(hv(&map, &border, BuildingId(4), &w).is_err());
    }

    /// Literal exhaustive-scan oracle for hv, written independently from the
    /// implementation: distances and strip tests via explicit coordinates.
    pub(crate) fn hv_oracle(
        positions: &[Point],
        fiery: &[bool],
        x: usize,
        w: &Weights,
    ) -> f64 {
        let fiery_pts: Vec<(usize, Point)> = positions
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| fiery[*i])
            .collect();
        let n_fiery = fiery_pts.len();
        if n_fiery == 1 {
            return w.hv_max_m;
        }
        let hull = convex_hull(&fiery_pts.iter().map(|(_, p)| *p).collect::<Vec<_>>());
        let xp = positions[x];
        if hull.len() < 3 {
            if n_fiery == 2 {
                let (_, other) = fiery_pts.iter().find(|(i, _)| *i != x).unwrap();
                return xp.distance(*other).min(w.hv_max_m);
            }
            return 0.0;
        }
        let Some(i) = hull.iter().position(|h| h.x == xp.x && h.y == xp.y) else {
            return 0.0;
        };
        let prev = hull[(i + hull.len() - 1) % hull.len()];
        let next = hull[(i + 1) % hull.len()];
        let a1 = (prev.y - xp.y).atan2(prev.x - xp.x);
        let a2 = (next.y - xp.y).atan2(next.x - xp.x);
        // Interior bisector via normalized direction sum, recomputed from
        // angles rather than vector addition.
        let u = Point::new((a1.cos() + a2.cos()) / 2.0, (a1.sin() + a2.sin()) / 2.0)
            .normalize()
            .expect("non-straight hull angle");
        let u = if w.outward_bisector { Point::new(-u.x, -u.y) } else { u };
        let mut best = f64::INFINITY;
        for (j, q) in &fiery_pts {
            if *j == x {
                continue;
            }
            let rel = q.sub(xp);
            let along = rel.x * u.x + rel.y * u.y;
            let perp = (rel.x * u.y - rel.y * u.x).abs();
            if along >= 0.0 && perp <= w.margin_m {
                best = best.min(xp.distance(*q));
            }
        }
        if best.is_finite() {
            best
        } else {
            w.hv_max_m
        }
    }

    #[test]
    fn hv_matches_oracle_on_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4856);
        for _ in 0..200 {
            let n = rng.random_range(1..=10);
            let positions: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (rng.random_range(0..40) as f64 * 5.0, rng.random_range(0..40) as f64 * 5.0)
                })
                .collect();
            let map = map_with_buildings(&positions);
            let mut fiery = vec![false; n];
            for f in fiery.iter_mut() {
                *f = rng.random_range(0.0..1.0) < 0.6;
            }
            if !fiery.iter().any(|&f| f) {
                fiery[0] = true;
            }
            let stages: Vec<u8> = fiery.iter().map(|&f| if f { 1 } else { 0 }).collect();
            let border = FireBorder::from_stages(&map, &stages);
            let pts: Vec<Point> = positions.iter().map(|&(x, y)| pt(x, y)).collect();
            let w = Weights { margin_m: 12.0, ..Weights::default() };
            for (i, &f) in fiery.iter().enumerate() {
                if !f {
                    continue;
                }
                let got = hv(&map, &border, BuildingId(i as u32), &w).unwrap();
                let want = hv_oracle(&pts, &fiery, i, &w);
                assert!((got - want).abs() <= 1e-9, "building {i}: got {got}, want {want}");
            }
        }
    }

    #[test]
    fn select_targets_ordering_and_ties() {
        let values = vec![(BuildingId(3), 1.0), (BuildingId(7), 5.0), (BuildingId(2), 5.0)];
        assert_eq!(select_targets(&values, 2), vec![BuildingId(2), BuildingId(7)]);
        assert_eq!(select_targets(&values, 10).len(), 3);

        // Invariant under a strictly increasing transform.
        let scaled: Vec<(BuildingId, f64)> =
            values.iter().map(|&(id, v)| (id, v * 3.5 + 1.0)).collect();
        assert_eq!(select_targets(&values, 2), select_targets(&scaled, 2));
    }
}
