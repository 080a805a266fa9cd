//! Interpolation nodes, Lagrange interpolation (univariate and tensor),
//! conditioning measurements and the perfect-interpolation experiments.

mod arch;
mod conditioning;
mod counterexample;
mod lagrange;
mod separation;

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::cantor::{BitString, CantorError, SpreadEmbedding};
use crate::field::{FieldDescriptor, FieldElement, FieldError};
use crate::poly::PolyError;

pub use arch::{arch_integral_bound, ArchBound};
pub use conditioning::{
    conditioning_estimate, envelope_fit, perfect_interp_check, ConditioningConfig,
    ConditioningReport, ConditioningSource, DegreeRecord, TrialFamily, TrialRecord,
};
pub use counterexample::{
    counterexample_certificate, counterexample_family, counterexample_family_with, counterexample_poly, CounterexampleCertificate,
    CounterexampleRecord, SUP_GRID_POINTS, TWO_ADIC_RESIDUE_BITS,
};
pub use lagrange::{evaluate_on_grid, lagrange_univariate, lebesgue_sum, tensor_interpolate, Grid};
pub use separation::{separation_lower_bound, separation_lower_bound_with, separation_sum, SeparationReport};

/// Extra tree levels searched below the subtree level for a member point.
pub const SUBTREE_SEARCH_LEVELS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("only {found} level-{level} subtrees meet the member set, need {needed}")]
    InsufficientSubtrees { level: usize, found: usize, needed: usize },
    #[error("{big_n} roots of unity cannot carry {needed} nodes")]
    TooFewNodes { big_n: usize, needed: usize },
    #[error("interpolation nodes {0} and {1} coincide")]
    DuplicateNodes(usize, usize),
    #[error("grid shape {grid:?} does not match plan sizes {plans:?}")]
    ShapeMismatch { grid: Vec<usize>, plans: Vec<usize> },
    #[error("operation needs a {0} plan")]
    WrongScheme(&'static str),
    #[error("trial {0} has zero sup norm on the sample")]
    DegenerateSample(String),
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Cantor(#[from] CantorError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeScheme {
    /// One node in each of `n + 1` distinct level-`level` Cantor subtrees.
    NonarchSubtree { level: usize },
    /// `n + 1` consecutive `N`-th roots of unity scaled by `r` and rotated;
    /// `t = n / N`.
    ArchRootsOfUnity { big_n: usize, r: f64, rotation: f64, t: f64 },
    Explicit,
}

/// Interpolation nodes along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePlan {
    pub scheme: NodeScheme,
    pub nodes: Vec<FieldElement>,
    /// Bitstring preimages of the nodes under `embedding` (subtree plans).
    pub branches: Vec<BitString>,
    pub embedding: Option<SpreadEmbedding>,
}

fn check_distinct(nodes: &[FieldElement]) -> Result<(), InterpError> {
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i].sub_flush(&nodes[j])?.is_zero() {
                return Err(InterpError::DuplicateNodes(i, j));
            }
        }
    }
    Ok(())
}

impl NodePlan {
    pub fn explicit(nodes: Vec<FieldElement>) -> Result<Self, InterpError> {
        if nodes.is_empty() {
            return Err(InterpError::InvalidParameter("a plan needs at least one node".into()));
        }
        let desc = nodes[0].descriptor();
        if let Some(x) = nodes.iter().find(|x| x.descriptor() != desc) {
            return Err(FieldError::DescriptorMismatch(desc, x.descriptor()).into());
        }
        check_distinct(&nodes)?;
        Ok(NodePlan {
            scheme: NodeScheme::Explicit,
            nodes,
            branches: Vec::new(),
            embedding: None,
        })
    }

    /// Chebyshev points `cos((2j+1) pi / (2n+2))` in `[-1, 1]`.
    pub fn chebyshev(desc: FieldDescriptor, n: usize) -> Result<Self, InterpError> {
        let nodes = (0..=n)
            .map(|j| {
                let x = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n + 2) as f64).cos();
                match desc {
                    FieldDescriptor::Real => Ok(FieldElement::real(x)),
                    FieldDescriptor::Complex => Ok(FieldElement::complex(x, 0.0)),
                    other => Err(FieldError::UnsupportedField(other)),
                }
            })
            .collect::<Result<_, _>>()?;
        Self::explicit(nodes)
    }

    /// Number of nodes minus one.
    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.nodes[0].descriptor()
    }
}

/// Smallest `m` with `2^m mu > n`.
pub fn subtree_level(n: usize, mu_est: &BigRational) -> Result<usize, InterpError> {
    if *mu_est <= BigRational::from_integer(0.into()) {
        return Err(InterpError::InvalidParameter("mu_est must be positive".into()));
    }
    let target = BigRational::from_integer(BigInt::from(n));
    let mut m = 0usize;
    let mut scaled = mu_est.clone();
    while scaled <= target {
        scaled *= BigRational::from_integer(2.into());
        m += 1;
    }
    Ok(m)
}

/// Picks `n + 1` nodes in distinct level-`m` subtrees, `m` the smallest level
/// with `2^m mu_est > n`. Each subtree contributes its lexicographically
/// smallest member bitstring, searched at most [`SUBTREE_SEARCH_LEVELS`]
/// below level `m`. When too few subtrees meet the member set the level is
/// raised until the embedding depth is reached.
pub fn select_nodes_nonarch<F>(
    e: &SpreadEmbedding,
    member: F,
    n: usize,
    mu_est: &BigRational,
) -> Result<NodePlan, InterpError>
where
    F: Fn(&FieldElement) -> bool,
{
    let mut m = subtree_level(n, mu_est)?;
    if m > e.depth() {
        return Err(InterpError::InsufficientSubtrees { level: m, found: 0, needed: n + 1 });
    }
    loop {
        let search = (m + SUBTREE_SEARCH_LEVELS).min(e.depth());
        let tail = search - m;
        let mut branches = Vec::new();
        let mut nodes = Vec::new();
        'subtrees: for alpha in BitString::all(m) {
            for rest in 0..1u64 << tail {
                let mut bits = alpha.bits().to_vec();
                bits.extend_from_slice(BitString::from_index(rest, tail).bits());
                let b = BitString::new(bits);
                let x = e.embed(&b)?;
                if member(&x) {
                    branches.push(b);
                    nodes.push(x);
                    if nodes.len() == n + 1 {
                        break 'subtrees;
                    }
                    continue 'subtrees;
                }
            }
        }
        if nodes.len() == n + 1 {
            return Ok(NodePlan {
                scheme: NodeScheme::NonarchSubtree { level: m },
                nodes,
                branches,
                embedding: Some(e.clone()),
            });
        }
        if m >= e.depth() || nodes.is_empty() {
            return Err(InterpError::InsufficientSubtrees { level: m, found: nodes.len(), needed: n + 1 });
        }
        m += 1;
    }
}

/// `n + 1` consecutive `N`-th roots of unity times `r`, rotated by `rotation`,
/// where `N = ceil(n / (1 - eps))`.
pub fn select_nodes_arch(n: usize, eps: f64, r: f64, rotation: f64) -> Result<NodePlan, InterpError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(InterpError::InvalidParameter(format!("eps = {eps} not in (0, 1)")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(InterpError::InvalidParameter(format!("radius {r} must be positive")));
    }
    let x = n as f64 / (1.0 - eps);
    let near = x.round();
    let big_n = if (x - near).abs() <= 1e-9 * x.max(1.0) { near } else { x.ceil() } as usize;
    let big_n = if n == 0 { big_n.max(1) } else { big_n };
    if big_n <= n && n > 0 {
        return Err(InterpError::TooFewNodes { big_n, needed: n + 1 });
    }
    let nodes = (0..=n)
        .map(|j| {
            let z = num_complex::Complex64::from_polar(r, rotation + TAU * j as f64 / big_n as f64);
            FieldElement::from_complex(z)
        })
        .collect();
    Ok(NodePlan {
        scheme: NodeScheme::ArchRootsOfUnity {
            big_n,
            r,
            rotation,
            t: n as f64 / big_n as f64,
        },
        nodes,
        branches: Vec::new(),
        embedding: None,
    })
}
