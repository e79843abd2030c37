//! Procedural representations of uniformly locally finite metric spaces.
//!
//! Two kinds are built in: the integer lattice `Z^n` with the `l1` or
//! `l_inf` metric, and coarse disjoint unions of finite graphs (cycles or
//! paths) with a separation rule that pushes distinct components apart.
//! Spaces are infinite; only finite regions are ever materialized.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of a space: a lattice site or a vertex of one component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Lattice(Vec<i64>),
    Component { component: u32, vertex: u32 },
}

impl Point {
    pub fn lattice(coords: &[i64]) -> Self {
        Point::Lattice(coords.to_vec())
    }

    pub fn component(component: u32, vertex: u32) -> Self {
        Point::Component { component, vertex }
    }

    /// Flat integer encoding used in JSON artifacts: lattice coordinates,
    /// or `[component, vertex]` for coarse unions.
    pub fn encode(&self) -> Vec<i64> {
        match self {
            Point::Lattice(c) => c.clone(),
            Point::Component { component, vertex } => vec![*component as i64, *vertex as i64],
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Lattice(c) => {
                let s: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", s.join(","))
            }
            Point::Component { component, vertex } => write!(f, "G{}:v{}", component, vertex),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    LInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentFamily {
    Cycles,
    Paths,
}

/// Component sizes: an explicit list, or an unbounded arithmetic rule
/// `size_j = start + step * j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeSpec {
    List(Vec<u32>),
    Arithmetic { start: u32, step: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseUnionSpec {
    pub family: ComponentFamily,
    pub sizes: SizeSpec,
}

impl CoarseUnionSpec {
    pub fn size(&self, j: u32) -> Option<u32> {
        match &self.sizes {
            SizeSpec::List(v) => v.get(j as usize).copied(),
            SizeSpec::Arithmetic { start, step } => Some(start + step * j),
        }
    }

    /// Number of components, `None` when the family is unbounded.
    pub fn component_count(&self) -> Option<usize> {
        match &self.sizes {
            SizeSpec::List(v) => Some(v.len()),
            SizeSpec::Arithmetic { .. } => None,
        }
    }

    pub fn diameter(&self, j: u32) -> Option<u64> {
        self.size(j).map(|s| match self.family {
            ComponentFamily::Cycles => (s / 2) as u64,
            ComponentFamily::Paths => s.saturating_sub(1) as u64,
        })
    }

    /// Largest component diameter, `None` when unbounded over the family.
    pub fn max_diameter(&self) -> Option<u64> {
        match &self.sizes {
            SizeSpec::List(v) => (0..v.len() as u32).map(|j| self.diameter(j).unwrap()).max(),
            SizeSpec::Arithmetic { step, .. } if *step == 0 => self.diameter(0),
            SizeSpec::Arithmetic { .. } => None,
        }
    }

    /// Unit of the inter-component separation `d(G_j, G_k) = (j+k+1) * unit`.
    ///
    /// For explicit lists the unit is the largest component diameter. For
    /// unbounded families that diameter does not exist; the unit
    /// `max(start, step, 1)` still dominates every intra-component path up to
    /// the factor the triangle inequality needs.
    pub fn separation_unit(&self) -> u64 {
        match &self.sizes {
            SizeSpec::List(_) => self.max_diameter().unwrap_or(1).max(1),
            SizeSpec::Arithmetic { start, step } => (*start.max(step)).max(1) as u64,
        }
    }

    /// Sorted, deduplicated neighbor list of `vertex` in component `j`.
    pub fn neighbors(&self, j: u32, vertex: u32) -> Result<Vec<u32>> {
        let s = self
            .size(j)
            .ok_or_else(|| Error::InvalidPoint(format!("component {} does not exist", j)))?;
        if vertex >= s {
            return Err(Error::InvalidPoint(format!(
                "vertex {} out of range for component {} of size {}",
                vertex, j, s
            )));
        }
        if s == 1 {
            return Ok(Vec::new());
        }
        let mut n = match self.family {
            ComponentFamily::Cycles => vec![(vertex + 1) % s, (vertex + s - 1) % s],
            ComponentFamily::Paths => {
                let mut v = Vec::new();
                if vertex + 1 < s {
                    v.push(vertex + 1);
                }
                if vertex > 0 {
                    v.push(vertex - 1);
                }
                v
            }
        };
        n.sort_unstable();
        n.dedup();
        Ok(n)
    }

    fn intra_distance(&self, j: u32, a: u32, b: u32) -> u64 {
        let s = self.size(j).expect("validated component");
        let d = a.abs_diff(b) as u64;
        match self.family {
            ComponentFamily::Cycles => d.min(s as u64 - d),
            ComponentFamily::Paths => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceKind {
    ZLattice { dim: usize, metric: Metric },
    CoarseUnion(CoarseUnionSpec),
}

/// A countable ULF metric space given procedurally.
///
/// `property_a` is metadata only: it is always true for lattices and
/// user-asserted for coarse unions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    pub property_a: bool,
}

/// A finite set of points in canonical order together with its diameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteRegion {
    points: Vec<Point>,
    diameter: u64,
}

impl FiniteRegion {
    /// Builds a region from arbitrary points: deduplicates, sorts by the
    /// global point order, and computes the diameter.
    pub fn new(space: &SpaceDescriptor, mut points: Vec<Point>) -> Result<Self> {
        for p in &points {
            space.validate_point(p)?;
        }
        points.sort();
        points.dedup();
        let diameter = max_pairwise_distance(space, &points)?;
        Ok(FiniteRegion { points, diameter })
    }

    pub(crate) fn from_ordered(space: &SpaceDescriptor, points: Vec<Point>) -> Result<Self> {
        let diameter = max_pairwise_distance(space, &points)?;
        Ok(FiniteRegion { points, diameter })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diameter(&self) -> u64 {
        self.diameter
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.iter().any(|q| q == p)
    }
}

fn max_pairwise_distance(space: &SpaceDescriptor, points: &[Point]) -> Result<u64> {
    let mut diam = 0;
    for (i, p) in points.iter().enumerate() {
        for q in points.iter().skip(i + 1) {
            diam = diam.max(space.distance(p, q)?);
        }
    }
    Ok(diam)
}

/// Supremum of ball cardinalities at a given radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub value: u64,
    pub exact: bool,
    /// Set when the bound was only checked up to a component horizon.
    pub horizon: Option<u32>,
}

/// How to pick a diverging sequence of centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergingStrategy {
    AxisRay { axis: usize, negative: bool },
    DiagonalRay { negative: bool },
    ComponentWalk,
    Randomized,
}

impl fmt::Display for DivergingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergingStrategy::AxisRay { axis, negative } => {
                write!(f, "axis_ray({}{})", if *negative { "-" } else { "+" }, axis)
            }
            DivergingStrategy::DiagonalRay { negative } => {
                write!(f, "diagonal_ray({})", if *negative { "-" } else { "+" })
            }
            DivergingStrategy::ComponentWalk => write!(f, "component_walk"),
            DivergingStrategy::Randomized => write!(f, "randomized"),
        }
    }
}

/// Largest usable center count for ray strategies; beyond this the ray
/// positions would overflow `i64`.
pub const MAX_RAY_COUNT: usize = 1024;

/// Position of the m-th point on a geometric ray: `2^m`, switching to
/// linear steps of `2^53` once doubling would leave the exactly
/// representable range.
fn ray_position(m: usize) -> i64 {
    if m < 53 {
        1i64 << m
    } else {
        (1i64 << 53) * (m as i64 - 51)
    }
}

impl SpaceDescriptor {
    pub fn z_lattice(dim: usize, metric: Metric) -> Self {
        SpaceDescriptor {
            kind: SpaceKind::ZLattice { dim, metric },
            property_a: true,
        }
    }

    pub fn coarse_union(spec: CoarseUnionSpec, property_a: bool) -> Self {
        SpaceDescriptor {
            kind: SpaceKind::CoarseUnion(spec),
            property_a,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::ZLattice { dim, .. } => Some(*dim),
            SpaceKind::CoarseUnion(_) => None,
        }
    }

    pub fn basepoint(&self) -> Point {
        match &self.kind {
            SpaceKind::ZLattice { dim, .. } => Point::Lattice(vec![0; *dim]),
            SpaceKind::CoarseUnion(_) => Point::Component {
                component: 0,
                vertex: 0,
            },
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match (&self.kind, p) {
            (SpaceKind::ZLattice { dim, .. }, Point::Lattice(c)) => {
                if c.len() == *dim {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!(
                        "expected {} coordinates, got {}",
                        dim,
                        c.len()
                    )))
                }
            }
            (SpaceKind::CoarseUnion(cu), Point::Component { component, vertex }) => {
                let s = cu.size(*component).ok_or_else(|| {
                    Error::InvalidPoint(format!("component {} does not exist", component))
                })?;
                if *vertex < s {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!(
                        "vertex {} out of range for component {} of size {}",
                        vertex, component, s
                    )))
                }
            }
            _ => Err(Error::InvalidPoint(
                "point kind does not match space kind".into(),
            )),
        }
    }

    /// Exact metric. Symmetric, zero iff equal, triangle inequality.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<u64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> u64 {
        match (&self.kind, x, y) {
            (SpaceKind::ZLattice { metric, .. }, Point::Lattice(a), Point::Lattice(b)) => {
                match metric {
                    Metric::L1 => a.iter().zip(b).map(|(p, q)| p.abs_diff(*q)).sum(),
                    Metric::LInf => a
                        .iter()
                        .zip(b)
                        .map(|(p, q)| p.abs_diff(*q))
                        .max()
                        .unwrap_or(0),
                }
            }
            (
                SpaceKind::CoarseUnion(cu),
                Point::Component {
                    component: j,
                    vertex: a,
                },
                Point::Component {
                    component: k,
                    vertex: b,
                },
            ) => {
                if j == k {
                    cu.intra_distance(*j, *a, *b)
                } else {
                    (*j as u64 + *k as u64 + 1) * cu.separation_unit()
                }
            }
            _ => unreachable!("validated points"),
        }
    }

    /// The closed ball `B(x, r)` in canonical order: by distance from `x`,
    /// ties broken by lexicographic offset on lattices and by BFS order with
    /// sorted neighbor lists on graph components.
    pub fn ball(&self, x: &Point, r: u64) -> Result<FiniteRegion> {
        self.validate_point(x)?;
        match (&self.kind, x) {
            (SpaceKind::ZLattice { dim, metric }, Point::Lattice(c)) => {
                let offsets = lattice_ball_offsets(*dim, *metric, r);
                let points = offsets
                    .into_iter()
                    .map(|o| {
                        Point::Lattice(c.iter().zip(&o).map(|(a, b)| a + b).collect::<Vec<_>>())
                    })
                    .collect();
                FiniteRegion::from_ordered(self, points)
            }
            (
                SpaceKind::CoarseUnion(cu),
                Point::Component {
                    component: j,
                    vertex: v,
                },
            ) => {
                // Intra-component part by BFS.
                let intra = bfs_ball(cu, *j, *v, r)?;
                // Other components whose separation is within r contribute
                // wholesale: all their vertices sit at the same distance.
                let mut keyed: Vec<(u64, u8, u32, u32)> = intra
                    .iter()
                    .enumerate()
                    .map(|(rank, (w, d))| (*d, 0u8, rank as u32, *w))
                    .collect();
                let unit = cu.separation_unit();
                let mut k = 0u32;
                loop {
                    let Some(sk) = cu.size(k) else { break };
                    if k != *j {
                        let sep = (*j as u64 + k as u64 + 1) * unit;
                        if sep <= r {
                            for w in 0..sk {
                                keyed.push((sep, 1, k, w));
                            }
                        } else if k > *j {
                            // separation grows with k; nothing further is in range
                            break;
                        }
                    }
                    k += 1;
                }
                keyed.sort();
                let points = keyed
                    .into_iter()
                    .map(|(_, class, a, b)| {
                        if class == 0 {
                            Point::Component {
                                component: *j,
                                vertex: b,
                            }
                        } else {
                            Point::Component {
                                component: a,
                                vertex: b,
                            }
                        }
                    })
                    .collect();
                FiniteRegion::from_ordered(self, points)
            }
            _ => unreachable!("validated point"),
        }
    }

    /// Exact supremum of `#B(x, r)` over all centers.
    pub fn growth_bound(&self, r: u64) -> GrowthBound {
        match &self.kind {
            SpaceKind::ZLattice { dim, metric } => {
                let value = match metric {
                    Metric::L1 => l1_ball_size(*dim, r),
                    Metric::LInf => (2 * r + 1).checked_pow(*dim as u32).unwrap_or(u64::MAX),
                };
                GrowthBound {
                    value,
                    exact: true,
                    horizon: None,
                }
            }
            SpaceKind::CoarseUnion(cu) => {
                // Intra part: a ball of radius r in a component of size s has
                // at most min(2r+1, s) points, achieved at interior centers.
                let intra_sup = |limit: Option<u64>| -> u64 {
                    match limit {
                        Some(max_size) => (2 * r + 1).min(max_size),
                        None => 2 * r + 1,
                    }
                };
                let max_size = match &cu.sizes {
                    SizeSpec::List(v) => v.iter().copied().max().map(|s| s as u64),
                    SizeSpec::Arithmetic { step, start } if *step == 0 => Some(*start as u64),
                    SizeSpec::Arithmetic { .. } => None,
                };
                let mut best = intra_sup(max_size);
                // Cross-component spill: only centers in components j with
                // (j + k + 1) * unit <= r see any other component, so the scan
                // below is finite and the bound stays exact.
                let unit = cu.separation_unit();
                let mut j = 0u32;
                while (j as u64 + 1) * unit <= r {
                    if let Some(sj) = cu.size(j) {
                        let own = (2 * r + 1).min(sj as u64);
                        let mut total = own;
                        let mut k = 0u32;
                        loop {
                            let Some(sk) = cu.size(k) else { break };
                            if k != j {
                                let sep = (j as u64 + k as u64 + 1) * unit;
                                if sep <= r {
                                    total += sk as u64;
                                } else if k > j {
                                    break;
                                }
                            }
                            k += 1;
                        }
                        best = best.max(total);
                    } else {
                        break;
                    }
                    j += 1;
                }
                GrowthBound {
                    value: best,
                    exact: true,
                    horizon: None,
                }
            }
        }
    }

    /// First `count` points of the canonical enumeration (lattices: by
    /// shells outward from the origin; unions: component by component).
    pub fn enumerate(&self, count: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(count);
        match &self.kind {
            SpaceKind::ZLattice { dim, metric } => {
                let mut r = 0u64;
                while out.len() < count {
                    let shell = lattice_ball_offsets(*dim, *metric, r)
                        .into_iter()
                        .filter(|o| lattice_norm(o, *metric) == r);
                    for o in shell {
                        if out.len() == count {
                            break;
                        }
                        out.push(Point::Lattice(o));
                    }
                    r += 1;
                }
            }
            SpaceKind::CoarseUnion(cu) => {
                let mut j = 0u32;
                'outer: loop {
                    let Some(s) = cu.size(j) else { break };
                    for v in 0..s {
                        if out.len() == count {
                            break 'outer;
                        }
                        out.push(Point::Component {
                            component: j,
                            vertex: v,
                        });
                    }
                    j += 1;
                }
            }
        }
        out
    }

    /// A sequence of centers with strictly increasing distance from the
    /// basepoint. Randomized choices are driven entirely by `seed`.
    pub fn diverging_sequence(
        &self,
        strategy: DivergingStrategy,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(Error::Config("center count must be at least 1".into()));
        }
        if count > MAX_RAY_COUNT {
            return Err(Error::Config(format!(
                "center count {} exceeds the supported maximum {}",
                count, MAX_RAY_COUNT
            )));
        }
        match (&self.kind, strategy) {
            (SpaceKind::ZLattice { dim, .. }, DivergingStrategy::AxisRay { axis, negative }) => {
                if axis >= *dim {
                    return Err(Error::Config(format!(
                        "axis {} out of range for dim {}",
                        axis, dim
                    )));
                }
                Ok((0..count)
                    .map(|m| {
                        let mut c = vec![0i64; *dim];
                        c[axis] = if negative { -ray_position(m) } else { ray_position(m) };
                        Point::Lattice(c)
                    })
                    .collect())
            }
            (SpaceKind::ZLattice { dim, .. }, DivergingStrategy::DiagonalRay { negative }) => {
                Ok((0..count)
                    .map(|m| {
                        let v = if negative { -ray_position(m) } else { ray_position(m) };
                        Point::Lattice(vec![v; *dim])
                    })
                    .collect())
            }
            (SpaceKind::ZLattice { dim, .. }, DivergingStrategy::Randomized) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // Fixed random direction, geometric positions along it.
                let mut dir = vec![0i64; *dim];
                while dir.iter().all(|&d| d == 0) {
                    for d in dir.iter_mut() {
                        *d = rng.gen_range(-1..=1);
                    }
                }
                Ok((0..count)
                    .map(|m| {
                        Point::Lattice(dir.iter().map(|&d| d * ray_position(m)).collect())
                    })
                    .collect())
            }
            (SpaceKind::CoarseUnion(cu), DivergingStrategy::ComponentWalk) => {
                let available = cu.component_count().unwrap_or(count);
                let n = count.min(available);
                if n == 0 {
                    return Err(Error::Config("coarse union has no components".into()));
                }
                (0..n as u32)
                    .map(|j| {
                        cu.size(j).ok_or_else(|| {
                            Error::Config(format!("component {} missing", j))
                        })?;
                        Ok(Point::Component {
                            component: j,
                            vertex: 0,
                        })
                    })
                    .collect()
            }
            (SpaceKind::CoarseUnion(cu), DivergingStrategy::Randomized) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let available = cu.component_count().unwrap_or(count);
                let n = count.min(available);
                if n == 0 {
                    return Err(Error::Config("coarse union has no components".into()));
                }
                (0..n as u32)
                    .map(|j| {
                        let s = cu.size(j).ok_or_else(|| {
                            Error::Config(format!("component {} missing", j))
                        })?;
                        Ok(Point::Component {
                            component: j,
                            vertex: rng.gen_range(0..s),
                        })
                    })
                    .collect()
            }
            (_, s) => Err(Error::Config(format!(
                "strategy {} is not applicable to this space kind",
                s
            ))),
        }
    }
}

fn lattice_norm(offset: &[i64], metric: Metric) -> u64 {
    match metric {
        Metric::L1 => offset.iter().map(|x| x.unsigned_abs()).sum(),
        Metric::LInf => offset.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0),
    }
}

/// All offsets with norm <= r, sorted by (norm, lexicographic order).
fn lattice_ball_offsets(dim: usize, metric: Metric, r: u64) -> Vec<Vec<i64>> {
    let ri = r as i64;
    let mut out: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![-ri; dim];
    if dim == 0 {
        return vec![Vec::new()];
    }
    loop {
        if lattice_norm(&cur, metric) <= r {
            out.push(cur.clone());
        }
        // odometer over the box [-r, r]^dim
        let mut i = dim;
        loop {
            if i == 0 {
                out.sort_by(|a, b| {
                    lattice_norm(a, metric)
                        .cmp(&lattice_norm(b, metric))
                        .then_with(|| a.cmp(b))
                });
                return out;
            }
            i -= 1;
            if cur[i] < ri {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -ri;
                }
                break;
            }
        }
    }
}

/// Cardinality of the l1 ball of radius r in Z^d:
/// sum_k 2^k * C(d, k) * C(r, k).
fn l1_ball_size(dim: usize, r: u64) -> u64 {
    let mut total: u128 = 0;
    for k in 0..=dim.min(r as usize) {
        let mut term: u128 = 1u128 << k;
        term = term.saturating_mul(binomial(dim as u128, k as u128));
        term = term.saturating_mul(binomial(r as u128, k as u128));
        total = total.saturating_add(term);
    }
    total.min(u64::MAX as u128) as u64
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// BFS ball inside one component: (vertex, distance) in visit order with
/// neighbor lists sorted by vertex index.
fn bfs_ball(cu: &CoarseUnionSpec, j: u32, v: u32, r: u64) -> Result<Vec<(u32, u64)>> {
    let s = cu
        .size(j)
        .ok_or_else(|| Error::InvalidPoint(format!("component {} does not exist", j)))?;
    if v >= s {
        return Err(Error::InvalidPoint(format!(
            "vertex {} out of range for component {} of size {}",
            v, j, s
        )));
    }
    let mut dist = vec![u64::MAX; s as usize];
    let mut order = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    dist[v as usize] = 0;
    queue.push_back(v);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize];
        order.push((u, d));
        if d == r {
            continue;
        }
        for w in cu.neighbors(j, u)? {
            if dist[w as usize] == u64::MAX {
                dist[w as usize] = d + 1;
                queue.push_back(w);
            }
        }
    }
    Ok(order)
}
