//! Structural classification: ellipticity, cancellation, rank-one spectrum
//! and the mixing condition.

mod ellipticity;
mod range;
mod spectrum;

pub use ellipticity::{
    complex_ellipticity_constant, ellipticity_constant, sigma_min_complex, sigma_min_real,
    EllipticityResult,
};
pub use range::{
    essential_range, is_canceling, reduce_scalar_operator, CancelingResult, ScalarReduction,
};
pub use spectrum::{
    b_matrix, best_witness, extract_spectral_pair, hyperplane_nullspace, mixing_check,
    pair_residual, rank_a_first_order, rank_one_cone_search, rank_zero_covectors,
    validate_pair, ConeSearch, MixingResult, MixingVerdict, SpectralPair,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operator::Operator;

/// Three-valued verdict used by the search-based checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tri {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Sphere samples for ellipticity; `None` picks 4096 (n ≤ 3) or 32768.
    pub sphere_samples: Option<usize>,
    pub refine_starts: usize,
    pub refine_iters: usize,
    /// Seeded random directions appended to the structured schedule.
    pub random_directions: usize,
    /// σ₂-minimization restarts for first-order operators.
    pub restarts: usize,
    pub canceling_samples: usize,
    pub stable_window: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            sphere_samples: None,
            refine_starts: 10,
            refine_iters: 500,
            random_directions: 64,
            restarts: 200,
            canceling_samples: 400,
            stable_window: 50,
        }
    }
}

impl Budget {
    pub fn sphere_samples_for(&self, n: usize) -> usize {
        self.sphere_samples
            .unwrap_or(if n <= 3 { 4096 } else { 32768 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for ranks and kernels.
    pub rank: f64,
    /// Relative σ_min threshold for ellipticity verdicts.
    pub ellipticity: f64,
    /// Acceptance threshold for spectral-pair residuals.
    pub pair: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            ellipticity: 1e-9,
            pair: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyCheck {
    pub name: String,
    pub applicable: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    pub name: Option<String>,
    pub n: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    pub order: usize,
}

impl OperatorSummary {
    pub fn of(op: &Operator) -> Self {
        OperatorSummary {
            name: op.name().map(str::to_string),
            n: op.n(),
            dim_v: op.dim_v(),
            dim_w: op.dim_w(),
            order: op.order(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub operator: OperatorSummary,
    pub elliptic: EllipticityResult,
    pub complex_elliptic: EllipticityResult,
    pub canceling: CancelingResult,
    pub mixing: MixingResult,
    pub essential_range_dim: usize,
    pub consistency: Vec<ConsistencyCheck>,
    pub seed: u64,
    pub budget: Budget,
    pub tolerances: Tolerances,
}

pub fn classify(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
) -> Result<ClassificationReport> {
    let elliptic = ellipticity_constant(op, budget, tol)?;
    let complex_elliptic = complex_ellipticity_constant(op, budget, tol)?;
    let canceling = is_canceling(op, budget, tol, seed)?;
    let mixing = mixing_check(op, budget, tol, seed)?;
    let essential_range_dim = essential_range(op, budget, tol, seed)?.dim();

    let verified = matches!(mixing.verdict, MixingVerdict::Verified { .. });
    let consistency = vec![
        ConsistencyCheck {
            name: "mixing implies canceling".into(),
            applicable: verified,
            ok: !verified || canceling.verdict == Tri::Yes,
        },
        ConsistencyCheck {
            name: "first-order elliptic with mixing implies complex-elliptic".into(),
            applicable: verified && op.order() == 1 && elliptic.verdict == Tri::Yes,
            ok: !(verified && op.order() == 1 && elliptic.verdict == Tri::Yes)
                || complex_elliptic.verdict == Tri::Yes,
        },
        ConsistencyCheck {
            name: "dual intersection matches spanned covectors".into(),
            applicable: true,
            ok: mixing.de_morgan_consistent,
        },
    ];

    Ok(ClassificationReport {
        operator: OperatorSummary::of(op),
        elliptic,
        complex_elliptic,
        canceling,
        mixing,
        essential_range_dim,
        consistency,
        seed,
        budget: budget.clone(),
        tolerances: tol.clone(),
    })
}
