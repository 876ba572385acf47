//! Finite-dimensional tracial *-algebras `⊕ᵢ M_{nᵢ}` with trace weights `λᵢ`.
//!
//! The normalized trace is `tr(x) = Σᵢ λᵢ · Tr(xᵢ)/nᵢ`, so `tr(1) = 1` and the
//! 2-norm `‖x‖₂ = tr(x*x)^{1/2}` never exceeds the operator norm. The opposite
//! algebra is not a separate structure: multiplication takes an `opposite`
//! flag instead.

mod decomp;
mod element;
pub(crate) mod linalg;
mod random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decomp::{avg_two_unitaries, nearest_unitary, polar, Polar, DYADIC_GRID_BITS};
pub use element::{AlgebraElement, ElementRecord, UnitaryCertificate};
pub use random::{
    ginibre, haar_unitary, haar_unitary_with, random_ball_element, random_contraction_near_sphere,
};

pub type C64 = num_complex::Complex64;

/// Tolerance used when validating that trace weights sum to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default tolerance for algebraic identities.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("malformed algebra spec {spec:?}: {reason}")]
    MalformedSpec { spec: String, reason: String },
    #[error("block {index} has size zero")]
    ZeroBlock { index: usize },
    #[error("trace weights must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("trace weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("{blocks} blocks but {weights} weights")]
    WeightCount { blocks: usize, weights: usize },
    #[error("elements belong to different algebras ({left} vs {right})")]
    MismatchedParents { left: String, right: String },
    #[error("block {index} has shape {rows}x{cols}, expected {expected}x{expected}")]
    BlockShape {
        index: usize,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("expected {expected} blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
    #[error("element is not a contraction (operator norm {0})")]
    NotContraction(f64),
    #[error("element is not unitary (defect {defect} > {tol})")]
    NotUnitary { defect: f64, tol: f64 },
}

/// A finite direct sum of full matrix blocks with a faithful normalized trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TracialAlgebra {
    blocks: Vec<usize>,
    weights: Vec<f64>,
    label: String,
}

impl PartialEq for TracialAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks && self.weights == other.weights
    }
}

impl TracialAlgebra {
    pub fn new(blocks: Vec<usize>, weights: Option<Vec<f64>>) -> Result<Self, AlgebraError> {
        let label = render_label(&blocks, weights.as_deref());
        Self::with_label(blocks, weights, label)
    }

    fn with_label(
        blocks: Vec<usize>,
        weights: Option<Vec<f64>>,
        label: String,
    ) -> Result<Self, AlgebraError> {
        if blocks.is_empty() {
            return Err(AlgebraError::MalformedSpec {
                spec: label,
                reason: "no blocks".into(),
            });
        }
        if let Some(index) = blocks.iter().position(|&n| n == 0) {
            return Err(AlgebraError::ZeroBlock { index });
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != blocks.len() {
                    return Err(AlgebraError::WeightCount {
                        blocks: blocks.len(),
                        weights: w.len(),
                    });
                }
                if let Some(&bad) = w.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(AlgebraError::NonPositiveWeight(bad));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(AlgebraError::WeightSum(sum));
                }
                w
            }
            None => vec![1.0 / blocks.len() as f64; blocks.len()],
        };
        Ok(Self {
            blocks,
            weights,
            label,
        })
    }

    /// The full matrix algebra `M_n` with its unique normalized trace.
    pub fn matrix(n: usize) -> Self {
        Self::new(vec![n], None).expect("single positive block")
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Complex dimension `Σ nᵢ²`.
    pub fn complex_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Real dimension `Σ 2·nᵢ²`.
    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim()
    }

    /// Block sizes agree (weights may differ).
    pub fn same_shape(&self, other: &Self) -> bool {
        self.blocks == other.blocks
    }

    /// Per-block factor `λᵢ/nᵢ` applied to the unnormalized block trace.
    pub(crate) fn trace_factor(&self, block: usize) -> f64 {
        self.weights[block] / self.blocks[block] as f64
    }

    /// Smallest constant `κ` with `‖x‖_op ≤ κ·‖x‖₂` for every `x`.
    pub fn op_to_two_norm_constant(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| (n as f64 / w).sqrt())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for TracialAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn render_label(blocks: &[usize], weights: Option<&[f64]>) -> String {
    let mut s = blocks
        .iter()
        .map(|&n| if n == 1 { "C".to_string() } else { format!("M{n}") })
        .collect::<Vec<_>>()
        .join("+");
    if let Some(w) = weights {
        s.push(':');
        s.push_str(
            &w.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    s
}

/// Parses `spec := block ("+" block)* (":" weight ("," weight)*)?` with
/// `block := "M" int | "C"`. Weights are decimal literals; `p/q` fractions are
/// also accepted.
pub fn make_algebra(spec: &str) -> Result<TracialAlgebra, AlgebraError> {
    let spec = spec.trim();
    let malformed = |reason: &str| AlgebraError::MalformedSpec {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let (block_part, weight_part) = match spec.split_once(':') {
        Some((b, w)) => (b, Some(w)),
        None => (spec, None),
    };
    let mut blocks = Vec::new();
    for token in block_part.split('+') {
        let token = token.trim();
        if token == "C" {
            blocks.push(1);
        } else if let Some(digits) = token.strip_prefix('M') {
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed(&format!("bad block {token:?}")));
            }
            let n: usize = digits
                .parse()
                .map_err(|_| malformed(&format!("bad block size {digits:?}")))?;
            blocks.push(n);
        } else {
            return Err(malformed(&format!("bad block {token:?}")));
        }
    }
    let weights = match weight_part {
        None => None,
        Some(w) => Some(
            w.split(',')
                .map(|t| parse_weight(t.trim()).ok_or_else(|| malformed(&format!("bad weight {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    TracialAlgebra::with_label(blocks, weights, spec.to_string())
}

fn parse_weight(token: &str) -> Option<f64> {
    if let Some((p, q)) = token.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        (q != 0.0).then(|| p / q)
    } else {
        token.parse().ok()
    }
}

impl FromStr for TracialAlgebra {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        make_algebra(s)
    }
}
