//! Band and band-dominated operators assembled from declarative kernel terms.
//!
//! An operator is a finite sum of shifts, diagonals, finite patches, and
//! per-component blocks. Handles are immutable after assembly; all oracles
//! (`entry`, `column`, `apply`, `truncate_columns`) are pure.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::space::{FiniteRegion, Point, SpaceDescriptor, SpaceKind};

pub type C64 = Complex<f64>;

/// Scalar coefficient attached to a shift or diagonal term, evaluated at the
/// column (source) index.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientFn {
    Constant(C64),
    /// `c(n)` equals `right[n mod p]` for n >= 0 and `left[n mod p]` for
    /// n < 0, except on the finitely many indices listed in `transition`.
    EventuallyPeriodic {
        period: u32,
        left: Vec<C64>,
        right: Vec<C64>,
        transition: BTreeMap<i64, C64>,
    },
    /// `c(n) = alpha + beta / (1 + |n|)`.
    Converging { alpha: C64, beta: C64 },
}

impl CoefficientFn {
    pub fn constant(re: f64) -> Self {
        CoefficientFn::Constant(C64::new(re, 0.0))
    }

    fn eval_lattice(&self, coords: &[i64]) -> C64 {
        match self {
            CoefficientFn::Constant(c) => *c,
            CoefficientFn::EventuallyPeriodic {
                period,
                left,
                right,
                transition,
            } => {
                let n = coords[0];
                if let Some(v) = transition.get(&n) {
                    return *v;
                }
                let idx = n.rem_euclid(*period as i64) as usize;
                if n >= 0 {
                    right[idx]
                } else {
                    left[idx]
                }
            }
            CoefficientFn::Converging { alpha, beta } => {
                let norm: u64 = coords.iter().map(|x| x.unsigned_abs()).sum();
                alpha + beta / (1.0 + norm as f64)
            }
        }
    }

    /// Supremum of |c(n)|, used for the Schur norm bound.
    fn sup_abs(&self) -> f64 {
        match self {
            CoefficientFn::Constant(c) => c.norm(),
            CoefficientFn::EventuallyPeriodic {
                left,
                right,
                transition,
                ..
            } => left
                .iter()
                .chain(right)
                .chain(transition.values())
                .map(|c| c.norm())
                .fold(0.0, f64::max),
            CoefficientFn::Converging { alpha, beta } => alpha.norm() + beta.norm(),
        }
    }

    fn validate(&self, space: &SpaceDescriptor) -> Result<()> {
        match self {
            CoefficientFn::Constant(_) => Ok(()),
            CoefficientFn::EventuallyPeriodic {
                period, left, right, ..
            } => {
                if space.dim() != Some(1) {
                    return Err(Error::Config(
                        "eventually periodic coefficients require a 1-dimensional lattice".into(),
                    ));
                }
                if *period == 0 {
                    return Err(Error::Config("coefficient period must be positive".into()));
                }
                if left.len() != *period as usize || right.len() != *period as usize {
                    return Err(Error::Config(
                        "left/right value tables must have exactly `period` entries".into(),
                    ));
                }
                Ok(())
            }
            CoefficientFn::Converging { .. } => {
                if space.dim().is_some() {
                    Ok(())
                } else {
                    Err(Error::Config(
                        "converging coefficients require a lattice space".into(),
                    ))
                }
            }
        }
    }
}

/// Built-in per-component block generators for coarse unions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockFamily {
    /// `1/|C_j|` on every pair of the component.
    Averaging,
    /// Graph adjacency matrix.
    Adjacency,
    /// Graph Laplacian `deg - adjacency`.
    Laplacian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelTerm {
    Shift { offset: Vec<i64>, coeff: CoefficientFn },
    Diag { coeff: CoefficientFn },
    Finite { entries: Vec<(Point, Point, C64)> },
    Block { family: BlockFamily, scale: C64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorSpec {
    pub terms: Vec<KernelTerm>,
    pub declared_norm_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Bounded(u64),
    Unbounded,
}

impl Propagation {
    pub fn bound(&self) -> Option<u64> {
        match self {
            Propagation::Bounded(r) => Some(*r),
            Propagation::Unbounded => None,
        }
    }

    fn max(self, other: Propagation) -> Propagation {
        match (self, other) {
            (Propagation::Bounded(a), Propagation::Bounded(b)) => Propagation::Bounded(a.max(b)),
            _ => Propagation::Unbounded,
        }
    }

    fn sum(self, other: Propagation) -> Propagation {
        match (self, other) {
            (Propagation::Bounded(a), Propagation::Bounded(b)) => Propagation::Bounded(a + b),
            _ => Propagation::Unbounded,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum OpNode {
    Leaf(Vec<KernelTerm>),
    Adjoint(Box<OpNode>),
    Sum(Box<OpNode>, Box<OpNode>),
    Compose(Box<OpNode>, Box<OpNode>),
}

/// An assembled operator bound to its space.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    space: SpaceDescriptor,
    node: OpNode,
    propagation: Propagation,
    declared_norm_bound: Option<f64>,
}

/// Column-truncated, row-restricted matrix of `T P_F`: columns indexed by
/// `F` in canonical order, rows by the points where some column is nonzero.
/// Rows outside that set are identically zero and omitted.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub matrix: DMatrix<C64>,
    pub rows: Vec<Point>,
    pub cols: Vec<Point>,
}

/// Assembles a handle, validating every term against the space kind.
pub fn assemble(space: &SpaceDescriptor, spec: &OperatorSpec) -> Result<OperatorHandle> {
    for term in &spec.terms {
        validate_term(space, term)?;
    }
    let propagation = spec
        .terms
        .iter()
        .map(|t| term_propagation(space, t))
        .fold(Propagation::Bounded(0), Propagation::max);
    Ok(OperatorHandle {
        space: space.clone(),
        node: OpNode::Leaf(spec.terms.clone()),
        propagation,
        declared_norm_bound: spec.declared_norm_bound,
    })
}

fn validate_term(space: &SpaceDescriptor, term: &KernelTerm) -> Result<()> {
    match term {
        KernelTerm::Shift { offset, coeff } => {
            let dim = space.dim().ok_or_else(|| {
                Error::Config("shift terms require a lattice space".into())
            })?;
            if offset.len() != dim {
                return Err(Error::Config(format!(
                    "shift offset has {} coordinates, space has dimension {}",
                    offset.len(),
                    dim
                )));
            }
            coeff.validate(space)
        }
        KernelTerm::Diag { coeff } => match coeff {
            CoefficientFn::Constant(_) => Ok(()),
            _ => coeff.validate(space),
        },
        KernelTerm::Finite { entries } => {
            for (x, y, _) in entries {
                space.validate_point(x)?;
                space.validate_point(y)?;
            }
            Ok(())
        }
        KernelTerm::Block { .. } => match &space.kind {
            SpaceKind::CoarseUnion(_) => Ok(()),
            _ => Err(Error::Config("block terms require a coarse union space".into())),
        },
    }
}

fn term_propagation(space: &SpaceDescriptor, term: &KernelTerm) -> Propagation {
    match term {
        KernelTerm::Shift { offset, .. } => {
            let p = Point::Lattice(offset.clone());
            let origin = space.basepoint();
            Propagation::Bounded(space.distance_unchecked(&origin, &p))
        }
        KernelTerm::Diag { .. } => Propagation::Bounded(0),
        KernelTerm::Finite { entries } => Propagation::Bounded(
            entries
                .iter()
                .map(|(x, y, _)| space.distance_unchecked(x, y))
                .max()
                .unwrap_or(0),
        ),
        KernelTerm::Block { family, .. } => match family {
            BlockFamily::Adjacency | BlockFamily::Laplacian => Propagation::Bounded(1),
            BlockFamily::Averaging => match &space.kind {
                SpaceKind::CoarseUnion(cu) => match cu.max_diameter() {
                    Some(d) => Propagation::Bounded(d),
                    None => Propagation::Unbounded,
                },
                _ => unreachable!("validated term"),
            },
        },
    }
}

impl OperatorHandle {
    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn propagation(&self) -> Propagation {
        self.propagation
    }

    pub fn is_band(&self) -> bool {
        matches!(self.propagation, Propagation::Bounded(_))
    }

    /// Leaf terms when the handle is a plain assembly (no algebra applied).
    pub fn leaf_terms(&self) -> Option<&[KernelTerm]> {
        match &self.node {
            OpNode::Leaf(terms) => Some(terms),
            _ => None,
        }
    }

    pub(crate) fn node(&self) -> &OpNode {
        &self.node
    }

    pub fn declared_norm_bound(&self) -> Option<f64> {
        self.declared_norm_bound
    }

    /// Kernel entry `k_T(x, y) = (delta_x, T delta_y)`.
    pub fn entry(&self, x: &Point, y: &Point) -> Result<C64> {
        self.space.validate_point(x)?;
        self.space.validate_point(y)?;
        Ok(node_entry(&self.space, &self.node, x, y))
    }

    /// The nonzero entries of the column `T delta_y`, sorted by point order.
    pub fn column(&self, y: &Point) -> Result<Vec<(Point, C64)>> {
        self.space.validate_point(y)?;
        let mut acc = BTreeMap::new();
        node_column(&self.space, &self.node, y, C64::new(1.0, 0.0), &mut acc);
        Ok(acc.into_iter().filter(|(_, v)| *v != C64::new(0.0, 0.0)).collect())
    }

    /// The nonzero entries of the row `x`, sorted by point order.
    pub fn row(&self, x: &Point) -> Result<Vec<(Point, C64)>> {
        self.space.validate_point(x)?;
        let mut acc = BTreeMap::new();
        node_row(&self.space, &self.node, x, C64::new(1.0, 0.0), &mut acc);
        Ok(acc.into_iter().filter(|(_, v)| *v != C64::new(0.0, 0.0)).collect())
    }

    /// Applies the operator to a finitely supported vector.
    pub fn apply(&self, v: &[(Point, C64)]) -> Result<Vec<(Point, C64)>> {
        let mut acc: BTreeMap<Point, C64> = BTreeMap::new();
        for (y, a) in v {
            self.space.validate_point(y)?;
            node_column(&self.space, &self.node, y, *a, &mut acc);
        }
        Ok(acc
            .into_iter()
            .filter(|(_, v)| v.norm_sqr() != 0.0)
            .collect())
    }

    pub fn adjoint(&self) -> OperatorHandle {
        OperatorHandle {
            space: self.space.clone(),
            node: OpNode::Adjoint(Box::new(self.node.clone())),
            propagation: self.propagation,
            declared_norm_bound: self.declared_norm_bound,
        }
    }

    pub fn add(&self, other: &OperatorHandle) -> Result<OperatorHandle> {
        if self.space != other.space {
            return Err(Error::Config("operator sum requires the same space".into()));
        }
        Ok(OperatorHandle {
            space: self.space.clone(),
            node: OpNode::Sum(Box::new(self.node.clone()), Box::new(other.node.clone())),
            propagation: self.propagation.max(other.propagation),
            declared_norm_bound: None,
        })
    }

    pub fn compose(&self, other: &OperatorHandle) -> Result<OperatorHandle> {
        if self.space != other.space {
            return Err(Error::Config(
                "operator composition requires the same space".into(),
            ));
        }
        Ok(OperatorHandle {
            space: self.space.clone(),
            node: OpNode::Compose(Box::new(self.node.clone()), Box::new(other.node.clone())),
            propagation: self.propagation.sum(other.propagation),
            declared_norm_bound: None,
        })
    }

    /// Dense matrix of `T P_F` with zero rows omitted.
    pub fn truncate_columns(&self, region: &FiniteRegion) -> Result<Truncation> {
        if region.is_empty() {
            return Err(Error::Domain("cannot truncate to an empty region".into()));
        }
        let cols: Vec<Point> = region.points().to_vec();
        let mut columns = Vec::with_capacity(cols.len());
        let mut row_set: std::collections::BTreeSet<Point> = std::collections::BTreeSet::new();
        for y in &cols {
            let col = self.column(y)?;
            for (x, _) in &col {
                row_set.insert(x.clone());
            }
            columns.push(col);
        }
        let rows: Vec<Point> = row_set.into_iter().collect();
        let row_index: BTreeMap<&Point, usize> =
            rows.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut matrix = DMatrix::<C64>::zeros(rows.len(), cols.len());
        for (j, col) in columns.iter().enumerate() {
            for (x, v) in col {
                matrix[(row_index[x], j)] = *v;
            }
        }
        Ok(Truncation { matrix, rows, cols })
    }

    /// Declared norm bound if present, otherwise the Schur bound
    /// `sqrt(sup row l1 * sup column l1)` computed over the band.
    pub fn norm_bound(&self) -> f64 {
        if let Some(b) = self.declared_norm_bound {
            return b;
        }
        let (row, col) = node_l1_bounds(&self.space, &self.node);
        (row * col).sqrt()
    }
}

fn node_entry(space: &SpaceDescriptor, node: &OpNode, x: &Point, y: &Point) -> C64 {
    match node {
        OpNode::Leaf(terms) => terms
            .iter()
            .map(|t| term_entry(space, t, x, y))
            .fold(C64::new(0.0, 0.0), |a, b| a + b),
        OpNode::Adjoint(inner) => node_entry(space, inner, y, x).conj(),
        OpNode::Sum(a, b) => node_entry(space, a, x, y) + node_entry(space, b, x, y),
        OpNode::Compose(a, b) => {
            // finite sum over the intersection band
            let mut acc = BTreeMap::new();
            node_column(space, b, y, C64::new(1.0, 0.0), &mut acc);
            acc.into_iter()
                .map(|(z, v)| node_entry(space, a, x, &z) * v)
                .fold(C64::new(0.0, 0.0), |p, q| p + q)
        }
    }
}

fn term_entry(space: &SpaceDescriptor, term: &KernelTerm, x: &Point, y: &Point) -> C64 {
    let zero = C64::new(0.0, 0.0);
    match term {
        KernelTerm::Shift { offset, coeff } => match (x, y) {
            (Point::Lattice(xc), Point::Lattice(yc)) => {
                let matches = xc
                    .iter()
                    .zip(yc.iter().zip(offset))
                    .all(|(xi, (yi, oi))| *xi == yi + oi);
                if matches {
                    coeff.eval_lattice(yc)
                } else {
                    zero
                }
            }
            _ => zero,
        },
        KernelTerm::Diag { coeff } => {
            if x == y {
                match y {
                    Point::Lattice(c) => coeff.eval_lattice(c),
                    Point::Component { .. } => match coeff {
                        CoefficientFn::Constant(c) => *c,
                        _ => zero,
                    },
                }
            } else {
                zero
            }
        }
        KernelTerm::Finite { entries } => entries
            .iter()
            .filter(|(ex, ey, _)| ex == x && ey == y)
            .map(|(_, _, v)| *v)
            .fold(zero, |a, b| a + b),
        KernelTerm::Block { family, scale } => match (x, y) {
            (
                Point::Component {
                    component: jx,
                    vertex: vx,
                },
                Point::Component {
                    component: jy,
                    vertex: vy,
                },
            ) if jx == jy => {
                let cu = match &space.kind {
                    SpaceKind::CoarseUnion(cu) => cu,
                    _ => unreachable!("validated term"),
                };
                let s = cu.size(*jx).expect("validated point");
                match family {
                    BlockFamily::Averaging => scale / s as f64,
                    BlockFamily::Adjacency => {
                        if cu.neighbors(*jy, *vy).expect("validated").contains(vx) {
                            *scale
                        } else {
                            zero
                        }
                    }
                    BlockFamily::Laplacian => {
                        let nb = cu.neighbors(*jy, *vy).expect("validated");
                        if vx == vy {
                            scale * nb.len() as f64
                        } else if nb.contains(vx) {
                            -scale
                        } else {
                            zero
                        }
                    }
                }
            }
            _ => zero,
        },
    }
}

fn add_to(acc: &mut BTreeMap<Point, C64>, p: Point, v: C64) {
    *acc.entry(p).or_insert_with(|| C64::new(0.0, 0.0)) += v;
}

/// Accumulates `weight * T delta_y` into `acc`.
fn node_column(
    space: &SpaceDescriptor,
    node: &OpNode,
    y: &Point,
    weight: C64,
    acc: &mut BTreeMap<Point, C64>,
) {
    match node {
        OpNode::Leaf(terms) => {
            for term in terms {
                term_column(space, term, y, weight, acc);
            }
        }
        OpNode::Adjoint(inner) => {
            let mut rows = BTreeMap::new();
            node_row(space, inner, y, C64::new(1.0, 0.0), &mut rows);
            for (x, v) in rows {
                add_to(acc, x, v.conj() * weight);
            }
        }
        OpNode::Sum(a, b) => {
            node_column(space, a, y, weight, acc);
            node_column(space, b, y, weight, acc);
        }
        OpNode::Compose(a, b) => {
            let mut mid = BTreeMap::new();
            node_column(space, b, y, weight, &mut mid);
            for (z, v) in mid {
                node_column(space, a, &z, v, acc);
            }
        }
    }
}

/// Accumulates `weight * conj-free row x of T` into `acc` (values `k_T(x, y)`).
fn node_row(
    space: &SpaceDescriptor,
    node: &OpNode,
    x: &Point,
    weight: C64,
    acc: &mut BTreeMap<Point, C64>,
) {
    match node {
        OpNode::Leaf(terms) => {
            for term in terms {
                term_row(space, term, x, weight, acc);
            }
        }
        OpNode::Adjoint(inner) => {
            let mut cols = BTreeMap::new();
            node_column(space, inner, x, C64::new(1.0, 0.0), &mut cols);
            for (y, v) in cols {
                add_to(acc, y, v.conj() * weight);
            }
        }
        OpNode::Sum(a, b) => {
            node_row(space, a, x, weight, acc);
            node_row(space, b, x, weight, acc);
        }
        OpNode::Compose(a, b) => {
            let mut mid = BTreeMap::new();
            node_row(space, a, x, weight, &mut mid);
            for (z, v) in mid {
                node_row(space, b, &z, v, acc);
            }
        }
    }
}

fn term_column(
    space: &SpaceDescriptor,
    term: &KernelTerm,
    y: &Point,
    weight: C64,
    acc: &mut BTreeMap<Point, C64>,
) {
    match term {
        KernelTerm::Shift { offset, coeff } => {
            if let Point::Lattice(yc) = y {
                let x: Vec<i64> = yc.iter().zip(offset).map(|(a, b)| a + b).collect();
                add_to(acc, Point::Lattice(x), coeff.eval_lattice(yc) * weight);
            }
        }
        KernelTerm::Diag { coeff } => {
            let v = match y {
                Point::Lattice(c) => coeff.eval_lattice(c),
                Point::Component { .. } => match coeff {
                    CoefficientFn::Constant(c) => *c,
                    _ => C64::new(0.0, 0.0),
                },
            };
            add_to(acc, y.clone(), v * weight);
        }
        KernelTerm::Finite { entries } => {
            for (x, ey, v) in entries {
                if ey == y {
                    add_to(acc, x.clone(), *v * weight);
                }
            }
        }
        KernelTerm::Block { family, scale } => {
            if let Point::Component {
                component: j,
                vertex: vy,
            } = y
            {
                let cu = match &space.kind {
                    SpaceKind::CoarseUnion(cu) => cu,
                    _ => unreachable!("validated term"),
                };
                let s = cu.size(*j).expect("validated point");
                match family {
                    BlockFamily::Averaging => {
                        let v = scale / s as f64 * weight;
                        for w in 0..s {
                            add_to(
                                acc,
                                Point::Component {
                                    component: *j,
                                    vertex: w,
                                },
                                v,
                            );
                        }
                    }
                    BlockFamily::Adjacency => {
                        for w in cu.neighbors(*j, *vy).expect("validated") {
                            add_to(
                                acc,
                                Point::Component {
                                    component: *j,
                                    vertex: w,
                                },
                                *scale * weight,
                            );
                        }
                    }
                    BlockFamily::Laplacian => {
                        let nb = cu.neighbors(*j, *vy).expect("validated");
                        add_to(acc, y.clone(), *scale * nb.len() as f64 * weight);
                        for w in nb {
                            add_to(
                                acc,
                                Point::Component {
                                    component: *j,
                                    vertex: w,
                                },
                                -*scale * weight,
                            );
                        }
                    }
                }
            }
        }
    }
}

fn term_row(
    space: &SpaceDescriptor,
    term: &KernelTerm,
    x: &Point,
    weight: C64,
    acc: &mut BTreeMap<Point, C64>,
) {
    match term {
        KernelTerm::Shift { offset, coeff } => {
            if let Point::Lattice(xc) = x {
                let y: Vec<i64> = xc.iter().zip(offset).map(|(a, b)| a - b).collect();
                let v = coeff.eval_lattice(&y);
                add_to(acc, Point::Lattice(y), v * weight);
            }
        }
        KernelTerm::Diag { .. } => {
            term_column(space, term, x, weight, acc);
        }
        KernelTerm::Finite { entries } => {
            for (ex, y, v) in entries {
                if ex == x {
                    add_to(acc, y.clone(), *v * weight);
                }
            }
        }
        KernelTerm::Block { family, .. } => {
            // built-in blocks are symmetric in support; reuse the column shape
            match family {
                BlockFamily::Averaging | BlockFamily::Adjacency | BlockFamily::Laplacian => {
                    term_column(space, term, x, weight, acc);
                }
            }
        }
    }
}

/// `(sup row l1, sup column l1)` bounds for the Schur estimate.
fn node_l1_bounds(space: &SpaceDescriptor, node: &OpNode) -> (f64, f64) {
    match node {
        OpNode::Leaf(terms) => {
            let mut row = 0.0;
            let mut col = 0.0;
            for term in terms {
                let (r, c) = term_l1_bounds(space, term);
                row += r;
                col += c;
            }
            (row, col)
        }
        OpNode::Adjoint(inner) => {
            let (r, c) = node_l1_bounds(space, inner);
            (c, r)
        }
        OpNode::Sum(a, b) => {
            let (ra, ca) = node_l1_bounds(space, a);
            let (rb, cb) = node_l1_bounds(space, b);
            (ra + rb, ca + cb)
        }
        OpNode::Compose(a, b) => {
            let (ra, ca) = node_l1_bounds(space, a);
            let (rb, cb) = node_l1_bounds(space, b);
            (ra * rb, ca * cb)
        }
    }
}

fn term_l1_bounds(space: &SpaceDescriptor, term: &KernelTerm) -> (f64, f64) {
    match term {
        KernelTerm::Shift { coeff, .. } | KernelTerm::Diag { coeff } => {
            let s = coeff.sup_abs();
            (s, s)
        }
        KernelTerm::Finite { entries } => {
            let mut rows: BTreeMap<&Point, f64> = BTreeMap::new();
            let mut cols: BTreeMap<&Point, f64> = BTreeMap::new();
            for (x, y, v) in entries {
                *rows.entry(x).or_insert(0.0) += v.norm();
                *cols.entry(y).or_insert(0.0) += v.norm();
            }
            let r = rows.values().cloned().fold(0.0, f64::max);
            let c = cols.values().cloned().fold(0.0, f64::max);
            (r, c)
        }
        KernelTerm::Block { family, scale } => {
            let s = scale.norm();
            let b = match family {
                BlockFamily::Averaging => s,
                BlockFamily::Adjacency => {
                    let max_deg = match &space.kind {
                        SpaceKind::CoarseUnion(_) => 2.0,
                        _ => 2.0,
                    };
                    s * max_deg
                }
                BlockFamily::Laplacian => s * 4.0,
            };
            (b, b)
        }
    }
}
