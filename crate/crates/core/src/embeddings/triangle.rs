use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocusKind {
    RegularOrbit,
    DegenerateIsotropic,
    Empty,
}

/// Zero level of `α n₁ + β n₂ + γ n₃` on three spheres, with a witness when nonempty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleLocus {
    pub kind: LocusKind,
    pub witness: Option<[[f64; 3]; 3]>,
}

impl TriangleLocus {
    /// `‖α n₁ + β n₂ + γ n₃‖` of the witness.
    pub fn witness_residual(&self, weights: [f64; 3]) -> Option<f64> {
        self.witness.map(|w| {
            (0..3)
                .map(|k| (0..3).map(|j| weights[j] * w[j][k]).sum::<f64>().powi(2))
                .sum::<f64>()
                .sqrt()
        })
    }
}

/// Classifies `μ⁻¹(0) ⊂ (CP¹)³` for weights `(α, β, γ)`.
///
/// Saturation of a triangle inequality is detected with the scale-invariant
/// tolerance `1e-9·(α + β + γ)`.
pub fn triangle_locus(alpha: f64, beta: f64, gamma: f64) -> Result<TriangleLocus> {
    let w = [alpha, beta, gamma];
    if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidSpec(format!("weights must be positive, got {w:?}")));
    }
    let total = alpha + beta + gamma;
    let tol = 1e-9 * total;
    // Slack of each triangle inequality: positive = strict, zero = saturated.
    let slack = [beta + gamma - alpha, alpha + gamma - beta, alpha + beta - gamma];
    let min = slack.iter().copied().fold(f64::INFINITY, f64::min);
    let kind = if min < -tol {
        LocusKind::Empty
    } else if min.abs() <= tol {
        LocusKind::DegenerateIsotropic
    } else {
        LocusKind::RegularOrbit
    };
    if kind == LocusKind::Empty {
        return Ok(TriangleLocus { kind, witness: None });
    }
    let n1 = [1.0, 0.0, 0.0];
    let cos = ((gamma * gamma - alpha * alpha - beta * beta) / (2.0 * alpha * beta)).clamp(-1.0, 1.0);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let n2 = [cos, sin, 0.0];
    let mut n3 = [0.0; 3];
    for k in 0..3 {
        n3[k] = -(alpha * n1[k] + beta * n2[k]) / gamma;
    }
    let norm = n3.iter().map(|x| x * x).sum::<f64>().sqrt();
    n3.iter_mut().for_each(|x| *x /= norm);
    Ok(TriangleLocus {
        kind,
        witness: Some([n1, n2, n3]),
    })
}
