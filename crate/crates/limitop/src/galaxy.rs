//! Limit operators along diverging sequences, extracted by patch
//! stabilization with nested subsequence refinement.
//!
//! A genuine ultrafilter is non-constructive; the extraction replaces it by
//! greedy majority-class selection with tolerance clustering, stage by stage
//! over an increasing radius schedule. Success requires a configurable
//! number of survivors; anything less is reported as inconclusive rather
//! than guessed around.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{C64, OperatorHandle, Propagation};
use crate::space::Point;

/// The matrix of `T` restricted to `B(center, radius)` under canonical
/// labeling, together with the pairwise distances of the labels.
#[derive(Debug, Clone)]
pub struct PointedPatch {
    pub center: Point,
    pub radius: u64,
    pub labels: Vec<Point>,
    pub entries: DMatrix<C64>,
    pub distances: Vec<Vec<u64>>,
}

/// Materializes `P_B T P_B` on the ball `B(center, radius)`.
///
/// For operators with unbounded block families the ball must stay inside a
/// single component, otherwise the patch is not defined.
pub fn patch(op: &OperatorHandle, center: &Point, radius: u64) -> Result<PointedPatch> {
    let space = op.space();
    let ball = space.ball(center, radius)?;
    if op.propagation() == Propagation::Unbounded {
        if let Point::Component { component, .. } = center {
            let crossing = ball.points().iter().any(|p| match p {
                Point::Component { component: c, .. } => c != component,
                _ => false,
            });
            if crossing {
                return Err(Error::Domain(format!(
                    "ball B({}, {}) crosses components; unbounded block operators only admit intra-component patches",
                    center, radius
                )));
            }
        }
    }
    let labels: Vec<Point> = ball.points().to_vec();
    let n = labels.len();
    let mut entries = DMatrix::<C64>::zeros(n, n);
    for (i, x) in labels.iter().enumerate() {
        for (j, y) in labels.iter().enumerate() {
            entries[(i, j)] = op.entry(x, y)?;
        }
    }
    let mut distances = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = space.distance_unchecked(&labels[i], &labels[j]);
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    Ok(PointedPatch {
        center: center.clone(),
        radius,
        labels,
        entries,
        distances,
    })
}

/// Provenance of one extraction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalaxySample {
    /// Encoded centers, in divergence order.
    pub centers: Vec<Vec<i64>>,
    pub stabilized_radii: Vec<u64>,
    /// Indices (into `centers`) retained at each refinement stage.
    pub subsequence_trace: Vec<Vec<usize>>,
    pub tolerance: f64,
}

/// The stabilized pointed metric space: labels are implicit (ordinal, sorted
/// by distance from the center), only the distance matrix is retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizedSpace {
    pub distances: Vec<Vec<u64>>,
}

impl StabilizedSpace {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Distance of label `i` from the center (label 0).
    pub fn center_distance(&self, i: usize) -> u64 {
        self.distances[0][i]
    }

    /// Number of labels within distance `r` of the center. Labels are sorted
    /// by center distance, so these always form a prefix.
    pub fn prefix_len(&self, r: u64) -> usize {
        self.distances[0].iter().take_while(|d| **d <= r).count()
    }
}

/// A limit operator represented by its stabilized kernel around a galaxy
/// sample.
#[derive(Debug, Clone)]
pub struct LimitOperatorRep {
    pub space_model: StabilizedSpace,
    /// Kernel on the full achieved ball; restrictions to smaller radii are
    /// leading principal submatrices, so coherence across radii holds by
    /// construction.
    pub kernel: DMatrix<C64>,
    pub achieved_radius: u64,
    pub stage_radii: Vec<u64>,
    pub sample: GalaxySample,
    /// Entries recognized as decaying to zero along the survivors and
    /// replaced by their standard part 0.
    pub snapped_entries: usize,
    pub source_propagation: Propagation,
}

impl LimitOperatorRep {
    /// Kernel restricted to the ball of radius `r` around the center.
    pub fn kernel_at_radius(&self, r: u64) -> DMatrix<C64> {
        let n = self.space_model.prefix_len(r.min(self.achieved_radius));
        self.kernel.view((0, 0), (n, n)).into_owned()
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    /// Increasing radius schedule, one refinement stage per entry.
    pub radii: Vec<u64>,
    /// Entrywise clustering tolerance.
    pub tol: f64,
    /// Minimum number of centers that must survive the last stage.
    pub min_survivors: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            radii: vec![2, 4, 6],
            tol: 1e-6,
            min_survivors: 3,
        }
    }
}

/// Ratio threshold for the finite standard part: a survivor value sequence
/// that is monotonically nonincreasing in magnitude and loses at least this
/// factor overall is taken to converge to zero.
const DECAY_RATIO: f64 = 0.6;
const MONOTONE_SLACK: f64 = 1e-9;

/// Estimates one kernel entry from the survivor values in divergence order.
///
/// Identical values pass through exactly (so eventually periodic data stays
/// bit-exact). Magnitudes that decay monotonically by more than
/// `DECAY_RATIO` are snapped to zero, the finite shadow of taking a standard
/// part of an infinitesimal. Everything else is averaged; the deviation is
/// bounded by the cluster tolerance.
fn estimate_entry(values: &[C64]) -> (C64, bool) {
    let first = values[0];
    if values.iter().all(|v| *v == first) {
        return (first, false);
    }
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let m0 = mags[0];
    let mlast = *mags.last().unwrap();
    let monotone = mags
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK));
    if monotone && m0 > 0.0 && mlast <= DECAY_RATIO * m0 {
        return (C64::new(0.0, 0.0), true);
    }
    let sum = values.iter().fold(C64::new(0.0, 0.0), |a, b| a + b);
    (sum / values.len() as f64, false)
}

fn patch_sup_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Partitions patch indices into classes with identical distance matrices
/// and pairwise entry agreement within `tol`; returns the largest class
/// (ties broken toward the earliest first member).
fn largest_class(patches: &[(usize, PointedPatch)], tol: f64) -> Vec<usize> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    'next: for (pos, (_, p)) in patches.iter().enumerate() {
        for class in classes.iter_mut() {
            let compatible = class.iter().all(|&q| {
                let other = &patches[q].1;
                other.distances == p.distances
                    && patch_sup_diff(&other.entries, &p.entries) <= tol
            });
            if compatible {
                class.push(pos);
                continue 'next;
            }
        }
        classes.push(vec![pos]);
    }
    classes
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .map(|class| class.into_iter().map(|pos| patches[pos].0).collect())
        .unwrap_or_default()
}

/// Extracts the limit operator of `op` along `centers` by nested refinement
/// over the radius schedule.
pub fn extract_limit_operator(
    op: &OperatorHandle,
    centers: &[Point],
    config: &ExtractionConfig,
) -> Result<LimitOperatorRep> {
    if centers.is_empty() {
        return Err(Error::Config("extraction needs at least one center".into()));
    }
    if config.radii.is_empty() || config.radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "radius schedule must be nonempty and strictly increasing".into(),
        ));
    }
    if config.tol <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if config.min_survivors < 2 {
        return Err(Error::Config("min_survivors must be at least 2".into()));
    }

    let mut survivors: Vec<usize> = (0..centers.len()).collect();
    let mut trace = Vec::with_capacity(config.radii.len());
    let mut final_patches: Vec<(usize, PointedPatch)> = Vec::new();

    for (stage, &radius) in config.radii.iter().enumerate() {
        let mut patches = Vec::with_capacity(survivors.len());
        let mut first_err = None;
        for &i in &survivors {
            match patch(op, &centers[i], radius) {
                Ok(p) => patches.push((i, p)),
                // centers whose ball is not materializable (e.g. crossing
                // components under an unbounded block) simply drop out
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        if patches.is_empty() {
            return Err(first_err.unwrap_or_else(|| {
                Error::Inconclusive("no centers admit patches at this radius".into())
            }));
        }
        let class = largest_class(&patches, config.tol);
        if class.len() < config.min_survivors {
            return Err(Error::Inconclusive(format!(
                "stage {} (radius {}): largest compatible class has {} members, need {}; increase centers or tol",
                stage, radius, class.len(), config.min_survivors
            )));
        }
        survivors = class;
        trace.push(survivors.clone());
        if stage + 1 == config.radii.len() {
            final_patches = patches
                .into_iter()
                .filter(|(i, _)| survivors.contains(i))
                .collect();
        }
    }

    final_patches.sort_by_key(|(i, _)| *i);
    let model = StabilizedSpace {
        distances: final_patches[0].1.distances.clone(),
    };
    let n = model.len();
    let mut kernel = DMatrix::<C64>::zeros(n, n);
    let mut snapped = 0usize;
    let mut buf = Vec::with_capacity(final_patches.len());
    for i in 0..n {
        for j in 0..n {
            buf.clear();
            buf.extend(final_patches.iter().map(|(_, p)| p.entries[(i, j)]));
            let (value, was_snapped) = estimate_entry(&buf);
            kernel[(i, j)] = value;
            if was_snapped {
                snapped += 1;
            }
        }
    }

    Ok(LimitOperatorRep {
        space_model: model,
        kernel,
        achieved_radius: *config.radii.last().unwrap(),
        stage_radii: config.radii.clone(),
        sample: GalaxySample {
            centers: centers.iter().map(|c| c.encode()).collect(),
            stabilized_radii: config.radii.clone(),
            subsequence_trace: trace,
            tolerance: config.tol,
        },
        snapped_entries: snapped,
        source_propagation: op.propagation(),
    })
}

/// One equivalence class of reps under isometry of the stabilized models and
/// entrywise kernel agreement on the common ball.
#[derive(Debug, Clone)]
pub struct DedupClass {
    /// Indices into the input slice; the first member is the representative.
    pub member_indices: Vec<usize>,
}

impl DedupClass {
    pub fn representative(&self) -> usize {
        self.member_indices[0]
    }
}

fn reps_equivalent(a: &LimitOperatorRep, b: &LimitOperatorRep, tol: f64) -> bool {
    let r = a.achieved_radius.min(b.achieved_radius);
    let na = a.space_model.prefix_len(r);
    let nb = b.space_model.prefix_len(r);
    if na != nb {
        return false;
    }
    for i in 0..na {
        for j in 0..na {
            if a.space_model.distances[i][j] != b.space_model.distances[i][j] {
                return false;
            }
        }
    }
    let ka = a.kernel_at_radius(r);
    let kb = b.kernel_at_radius(r);
    patch_sup_diff(&ka, &kb) <= tol
}

/// Groups reps of the same source operator that describe the same limit
/// operator. Distinct diverging sequences landing in the same limit behavior
/// are identified; the representative of each class is its first member.
pub fn dedup_limit_operators(reps: &[LimitOperatorRep], tol: f64) -> Vec<DedupClass> {
    let mut classes: Vec<DedupClass> = Vec::new();
    'next: for (i, rep) in reps.iter().enumerate() {
        for class in classes.iter_mut() {
            if class
                .member_indices
                .iter()
                .all(|&j| reps_equivalent(rep, &reps[j], tol))
            {
                class.member_indices.push(i);
                continue 'next;
            }
        }
        classes.push(DedupClass {
            member_indices: vec![i],
        });
    }
    classes
}

/// Checks propagation preservation: the extracted kernel must vanish (up to
/// the sample tolerance) wherever the stabilized distance exceeds the source
/// propagation bound.
pub fn check_limit_propagation(rep: &LimitOperatorRep, source: &OperatorHandle) -> bool {
    let Some(r) = source.propagation().bound() else {
        return true;
    };
    let tol = rep.sample.tolerance;
    let n = rep.space_model.len();
    for i in 0..n {
        for j in 0..n {
            if rep.space_model.distances[i][j] > r && rep.kernel[(i, j)].norm() > tol {
                return false;
            }
        }
    }
    true
}

/// JSON-friendly view of a rep: distance matrices and kernels per stage
/// radius, plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitOperatorReport {
    pub achieved_radius: u64,
    pub stage_radii: Vec<u64>,
    pub snapped_entries: usize,
    pub stages: Vec<StageKernel>,
    pub sample: GalaxySample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageKernel {
    pub radius: u64,
    pub distances: Vec<Vec<u64>>,
    /// Complex entries as `[re, im]` pairs.
    pub kernel: Vec<Vec<[f64; 2]>>,
}

impl LimitOperatorRep {
    pub fn report(&self) -> LimitOperatorReport {
        let stages = self
            .stage_radii
            .iter()
            .map(|&r| {
                let n = self.space_model.prefix_len(r);
                let k = self.kernel_at_radius(r);
                StageKernel {
                    radius: r,
                    distances: self.space_model.distances[..n]
                        .iter()
                        .map(|row| row[..n].to_vec())
                        .collect(),
                    kernel: (0..n)
                        .map(|i| (0..n).map(|j| [k[(i, j)].re, k[(i, j)].im]).collect())
                        .collect(),
                }
            })
            .collect();
        LimitOperatorReport {
            achieved_radius: self.achieved_radius,
            stage_radii: self.stage_radii.clone(),
            snapped_entries: self.snapped_entries,
            stages,
            sample: self.sample.clone(),
        }
    }
}
