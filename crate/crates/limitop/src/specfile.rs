//! The versioned JSON operator spec format consumed by the CLI.
//!
//! Complex numbers are `[re, im]` pairs. Points are flat integer arrays:
//! lattice coordinates, or `[component, vertex]` on coarse unions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::{BlockFamily, C64, CoefficientFn, KernelTerm, OperatorSpec};
use crate::space::{
    ComponentFamily, CoarseUnionSpec, Metric, Point, SizeSpec, SpaceDescriptor, SpaceKind,
};

pub const SCHEMA: &str = "bandop-spec/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub schema: String,
    pub space: SpaceSection,
    pub operator: OperatorSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSection {
    ZLattice {
        dim: usize,
        #[serde(default = "default_metric")]
        metric: Metric,
        #[serde(default = "default_true")]
        property_a: bool,
    },
    CoarseUnion {
        components: ComponentsSection,
        #[serde(default)]
        property_a: bool,
    },
}

fn default_metric() -> Metric {
    Metric::L1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentsSection {
    pub family: ComponentFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_rule: Option<SizeRule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeRule {
    pub start: u32,
    pub step: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorSection {
    pub terms: Vec<TermSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermSection {
    Shift {
        offset: Vec<i64>,
        coeff: CoeffSection,
    },
    Diag {
        coeff: CoeffSection,
    },
    Finite {
        entries: Vec<FiniteEntry>,
    },
    Block {
        family: BlockFamilySection,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteEntry {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockFamilySection {
    Averaging,
    Adjacency,
    Laplacian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoeffSection {
    Constant {
        value: [f64; 2],
    },
    EventuallyPeriodic {
        period: u32,
        left: Vec<[f64; 2]>,
        right: Vec<[f64; 2]>,
        #[serde(default)]
        transition: Vec<TransitionEntry>,
    },
    Converging {
        alpha: [f64; 2],
        beta: [f64; 2],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub n: i64,
    pub value: [f64; 2],
}

fn c64(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl SpecFile {
    /// Parses and validates a spec file, reporting serde's line/column on
    /// malformed input.
    pub fn parse(text: &str) -> Result<SpecFile> {
        let spec: SpecFile = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!(
                "spec parse error at line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })?;
        if spec.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {:?}, expected {:?}",
                spec.schema, SCHEMA
            )));
        }
        Ok(spec)
    }

    pub fn space_descriptor(&self) -> Result<SpaceDescriptor> {
        match &self.space {
            SpaceSection::ZLattice {
                dim,
                metric,
                property_a,
            } => {
                if *dim == 0 || *dim > 8 {
                    return Err(Error::Config("lattice dimension must be in 1..=8".into()));
                }
                Ok(SpaceDescriptor {
                    kind: SpaceKind::ZLattice {
                        dim: *dim,
                        metric: *metric,
                    },
                    property_a: *property_a,
                })
            }
            SpaceSection::CoarseUnion {
                components,
                property_a,
            } => {
                let sizes = match (&components.sizes, &components.size_rule) {
                    (Some(list), None) => {
                        if list.is_empty() {
                            return Err(Error::Config("component size list is empty".into()));
                        }
                        if list.iter().any(|s| *s == 0) {
                            return Err(Error::Config("component sizes must be positive".into()));
                        }
                        SizeSpec::List(list.clone())
                    }
                    (None, Some(rule)) => {
                        if rule.start == 0 {
                            return Err(Error::Config("size rule start must be positive".into()));
                        }
                        SizeSpec::Arithmetic {
                            start: rule.start,
                            step: rule.step,
                        }
                    }
                    _ => {
                        return Err(Error::Config(
                            "components need exactly one of `sizes` or `size_rule`".into(),
                        ))
                    }
                };
                Ok(SpaceDescriptor::coarse_union(
                    CoarseUnionSpec {
                        family: components.family,
                        sizes,
                    },
                    *property_a,
                ))
            }
        }
    }

    pub fn operator_spec(&self, space: &SpaceDescriptor) -> Result<OperatorSpec> {
        let decode_point = |enc: &[i64]| -> Result<Point> {
            match &space.kind {
                SpaceKind::ZLattice { dim, .. } => {
                    if enc.len() != *dim {
                        return Err(Error::Config(format!(
                            "point {:?} has {} coordinates, expected {}",
                            enc,
                            enc.len(),
                            dim
                        )));
                    }
                    Ok(Point::Lattice(enc.to_vec()))
                }
                SpaceKind::CoarseUnion(_) => {
                    if enc.len() != 2 || enc[0] < 0 || enc[1] < 0 {
                        return Err(Error::Config(format!(
                            "point {:?} must be [component, vertex]",
                            enc
                        )));
                    }
                    Ok(Point::Component {
                        component: enc[0] as u32,
                        vertex: enc[1] as u32,
                    })
                }
            }
        };
        let coeff = |c: &CoeffSection| -> CoefficientFn {
            match c {
                CoeffSection::Constant { value } => CoefficientFn::Constant(c64(*value)),
                CoeffSection::EventuallyPeriodic {
                    period,
                    left,
                    right,
                    transition,
                } => CoefficientFn::EventuallyPeriodic {
                    period: *period,
                    left: left.iter().map(|v| c64(*v)).collect(),
                    right: right.iter().map(|v| c64(*v)).collect(),
                    transition: transition
                        .iter()
                        .map(|t| (t.n, c64(t.value)))
                        .collect::<BTreeMap<_, _>>(),
                },
                CoeffSection::Converging { alpha, beta } => CoefficientFn::Converging {
                    alpha: c64(*alpha),
                    beta: c64(*beta),
                },
            }
        };
        let mut terms = Vec::with_capacity(self.operator.terms.len());
        for term in &self.operator.terms {
            terms.push(match term {
                TermSection::Shift { offset, coeff: c } => KernelTerm::Shift {
                    offset: offset.clone(),
                    coeff: coeff(c),
                },
                TermSection::Diag { coeff: c } => KernelTerm::Diag { coeff: coeff(c) },
                TermSection::Finite { entries } => {
                    let mut out = Vec::with_capacity(entries.len());
                    for e in entries {
                        out.push((decode_point(&e.x)?, decode_point(&e.y)?, c64(e.value)));
                    }
                    KernelTerm::Finite { entries: out }
                }
                TermSection::Block { family, scale } => KernelTerm::Block {
                    family: match family {
                        BlockFamilySection::Averaging => BlockFamily::Averaging,
                        BlockFamilySection::Adjacency => BlockFamily::Adjacency,
                        BlockFamilySection::Laplacian => BlockFamily::Laplacian,
                    },
                    scale: scale.map(c64).unwrap_or(C64::new(1.0, 0.0)),
                },
            });
        }
        Ok(OperatorSpec {
            terms,
            declared_norm_bound: self.operator.norm_bound,
        })
    }
}
