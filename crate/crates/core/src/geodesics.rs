//! Polar decomposition `Z = U K^{1/2}` off the divisor `det Z = 0`, the CP¹
//! cotangent map, the evolution operator of nested spin chains and the
//! resulting magnetic geodesics `U(t) = U(0) Ev(t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, exp_i_hermitian, hermitian_eigen, hermitian_function, CMatrix, I};
use crate::spinchain::{
    norm_deviation, time_derivatives, uniform_step, Gauge, SpinChainConfig, SpinChainState, Trajectory,
};

/// Relative smallest singular value below which `Z` counts as on the divisor.
pub const DIVISOR_THRESHOLD: f64 = 1e-8;
/// Eigenvalue floor for `K^{-1/2}`.
const CLAMP: f64 = 1e-14;

/// `Z = U K^{1/2}` with `U` unitary and `K = Z†Z` positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarPair {
    pub u: CMatrix,
    pub k: CMatrix,
}

impl PolarPair {
    /// `K^{1/2}`.
    pub fn h(&self) -> CMatrix {
        hermitian_function(&self.k, |x| x.max(0.0).sqrt())
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.u * self.h()
    }
}

pub fn polar_decompose(z: &CMatrix) -> Result<PolarPair> {
    polar_decompose_at(z, None)
}

fn polar_decompose_at(z: &CMatrix, time: Option<f64>) -> Result<PolarPair> {
    if !z.is_square() || z.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: z.nrows(),
            got: z.ncols(),
        });
    }
    // U = W V† from Z = W Σ V† stays unitary however badly Z is conditioned;
    // going through (Z†Z)^{-1/2} would square the condition number.
    let svd = crate::linalg::checked_svd(z);
    let s = &svd.singular_values;
    let max = s.max();
    let min = s.min();
    if !(min > DIVISOR_THRESHOLD * max) || !(min * min >= CLAMP) {
        return Err(Error::NearDivisor {
            min_singular: min,
            time,
        });
    }
    let w = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    Ok(PolarPair {
        u: w * v_t,
        k: z.adjoint() * z,
    })
}

/// `det(Z†Z)` against its maximum `(Σ p_a / n)^n` over matrices with `|z_a|² = p_a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetBound {
    pub value: f64,
    pub bound: f64,
    /// `Z†Z` equals `(Σp/n)·1` to `1e-8` (relative).
    pub at_max: bool,
}

pub fn det_bound(z: &CMatrix, p: &[f64]) -> Result<DetBound> {
    let n = p.len();
    if z.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.nrows(),
        });
    }
    let deviation = norm_deviation(z, p);
    if deviation > 1e-9 * p.iter().copied().fold(1.0, f64::max) {
        return Err(Error::Normalization { deviation });
    }
    let mean = p.iter().sum::<f64>() / n as f64;
    let k = z.adjoint() * z;
    let distance = (&k - CMatrix::identity(n, n) * c(mean, 0.0)).norm();
    Ok(DetBound {
        value: k.determinant().re,
        bound: mean.powi(n as i32),
        at_max: distance < 1e-8 * mean,
    })
}

/// A point of `T*CP¹ = {n⃗² = 1, π⃗·n⃗ = 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentPointCP1 {
    pub n: [f64; 3],
    pub pi: [f64; 3],
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `n⃗ = (n⃗₁ − n⃗₂)/√(2(1 − n⃗₁·n⃗₂))`, `π⃗ = p (n⃗₁ × n⃗₂)/√(2(1 − n⃗₁·n⃗₂))`.
pub fn cp1_cotangent_map(n1: [f64; 3], n2: [f64; 3], p: f64) -> Result<CotangentPointCP1> {
    for v in [n1, n2] {
        if (dot(v, v) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("{v:?} is not a unit vector")));
        }
    }
    let d = dot(n1, n2);
    if d > 1.0 - 1e-12 {
        return Err(Error::NearDivisor {
            min_singular: (1.0 - d).max(0.0),
            time: None,
        });
    }
    let scale = 1.0 / (2.0 * (1.0 - d)).sqrt();
    let x = cross(n1, n2);
    Ok(CotangentPointCP1 {
        n: [0, 1, 2].map(|k| (n1[k] - n2[k]) * scale),
        pi: [0, 1, 2].map(|k| p * x[k] * scale),
    })
}

fn check_gram(config: &SpinChainConfig, a0: &CMatrix) -> Result<()> {
    let n = config.n();
    if a0.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a0.nrows(),
        });
    }
    let scale = a0.norm().max(1.0);
    let herm = (a0 - a0.adjoint()).norm();
    if herm > 1e-10 * scale {
        return Err(Error::InvalidSpec(format!(
            "initial Gram matrix is not Hermitian ({herm:.3e})"
        )));
    }
    let diag = (0..n)
        .map(|k| (a0[(k, k)].re - config.p()[k]).abs())
        .fold(0.0, f64::max);
    if diag > 1e-9 * scale {
        return Err(Error::Normalization { deviation: diag });
    }
    let min = hermitian_eigen(a0).0[0];
    if min < -1e-10 * scale {
        return Err(Error::InvalidSpec(format!(
            "initial Gram matrix is not positive semidefinite (eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// `Ev(t) = E_n ⋯ E_2`, `E_k = exp[i(α_{k+1} − α_k) t Pr_k(A⁰)]`, `α_{n+1} = 0`.
///
/// `Pr_k` keeps the upper-left `k×k` block; each factor is the identity outside it.
pub fn ev_operator(config: &SpinChainConfig, a0: &CMatrix, t: f64) -> Result<CMatrix> {
    let levels = config.levels()?;
    check_gram(config, a0)?;
    Ok(ev_unchecked(levels, a0, t))
}

fn ev_unchecked(levels: &[f64], a0: &CMatrix, t: f64) -> CMatrix {
    let n = levels.len();
    let mut ev = CMatrix::identity(n, n);
    for k in 2..=n {
        let next = if k < n { levels[k] } else { 0.0 };
        let theta = (next - levels[k - 1]) * t;
        let block = exp_i_hermitian(&a0.view((0, 0), (k, k)).into_owned(), theta);
        let mut factor = CMatrix::identity(n, n);
        factor.view_mut((0, 0), (k, k)).copy_from(&block);
        ev = factor * ev;
    }
    ev
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonMonotoneTimes);
    }
    Ok(())
}

/// `Z(t) = Z(0) Ev(t)` on the given times.
pub fn closed_form_trajectory(z0: &CMatrix, config: &SpinChainConfig, times: &[f64]) -> Result<Trajectory> {
    let levels = config.levels()?.to_vec();
    check_times(times)?;
    let initial = SpinChainState::new(z0.clone(), 0.0, config)?;
    let a0 = initial.gram();
    check_gram(config, &a0)?;
    let states: Vec<SpinChainState> = times
        .par_iter()
        .map(|&t| SpinChainState {
            z: z0 * ev_unchecked(&levels, &a0, t),
            time: t,
        })
        .collect();
    Trajectory::from_states(config.clone(), Gauge::Nested.label(), states)
}

/// Uniform grid `0, dt, 2dt, …` ending exactly at `t_end`, matching the integrator's grid.
pub fn uniform_times(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    Ok((0..=steps)
        .map(|k| if k == steps { t_end.max(0.0) } else { k as f64 * dt })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSample {
    pub time: f64,
    pub u: CMatrix,
    pub k: CMatrix,
}

/// Unitary factors `U(t)` with the momenta `K(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MagneticGeodesic {
    pub samples: Vec<GeodesicSample>,
    pub charges: Vec<f64>,
    /// `max_t ‖U(t) − U(0) Ev(t)‖`; `None` when built from a numerical trajectory.
    pub ev_deviation: Option<f64>,
}

impl MagneticGeodesic {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// `max_t ‖U_self(t) − U_other(t)‖` entrywise.
    pub fn max_deviation(&self, other: &MagneticGeodesic) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| crate::linalg::max_abs(&(&a.u - &b.u)))
            .fold(0.0, f64::max)
    }
}

/// Polar factors of a trajectory; fails at the first sample near the divisor.
pub fn geodesic_from_trajectory(trajectory: &Trajectory) -> Result<MagneticGeodesic> {
    let samples = trajectory
        .samples
        .par_iter()
        .map(|s| {
            let pair = polar_decompose_at(&s.state.z, Some(s.time()))?;
            Ok(GeodesicSample {
                time: s.time(),
                u: pair.u,
                k: pair.k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MagneticGeodesic {
        samples,
        charges: trajectory.config.charges(),
        ev_deviation: None,
    })
}

/// `U(t)` from the closed-form `Z(t)`, checked against `U(0) Ev(t)`.
pub fn magnetic_geodesic(z0: &CMatrix, config: &SpinChainConfig, times: &[f64]) -> Result<MagneticGeodesic> {
    let levels = config.levels()?.to_vec();
    polar_decompose(z0)?;
    let trajectory = closed_form_trajectory(z0, config, times)?;
    let mut geodesic = geodesic_from_trajectory(&trajectory)?;
    let u0 = polar_decompose(z0)?.u;
    let a0 = z0.adjoint() * z0;
    let deviation = geodesic
        .samples
        .par_iter()
        .map(|s| (&s.u - &u0 * ev_unchecked(&levels, &a0, s.time)).norm())
        .reduce(|| 0.0, f64::max);
    geodesic.ev_deviation = Some(deviation);
    Ok(geodesic)
}

/// Gauge-aligned residual of `i Ż = Z M` along a uniformly sampled geodesic.
///
/// `Z = U K^{1/2}` is rebuilt per sample, `Ż` comes from finite differences
/// (centered, one-sided second order at the ends), and the multiplier term is
/// removed column by column as the real multiple of `z_a` that best fits the
/// residual. What remains vanishes on solutions in every gauge.
pub fn geodesic_residual(geodesic: &MagneticGeodesic, config: &SpinChainConfig) -> Result<f64> {
    let h = uniform_step(&geodesic.times())?;
    let n = config.n();
    let zs: Vec<CMatrix> = geodesic
        .samples
        .iter()
        .map(|s| {
            if s.u.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.u.nrows(),
                });
            }
            Ok(&s.u * hermitian_function(&s.k, |x| x.max(0.0).sqrt()))
        })
        .collect::<Result<_>>()?;
    let derivs = time_derivatives(&zs, h);
    let zero = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for (z, dz) in zs.iter().zip(&derivs) {
        let m = crate::spinchain::eom_matrix(z, config, &zero);
        let mut r = dz * I - z * m;
        for a in 0..n {
            let za = z.column(a).into_owned();
            let coef = za.dotc(&r.column(a)).re / za.norm_squared();
            let fixed = r.column(a) - za * c(coef, 0.0);
            r.set_column(a, &fixed);
        }
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// `Z' = U (K + c)^{1/2}`: same unitary factor, normalizations `p_a + c`.
pub fn shift_normalizations(z: &CMatrix, shift: f64) -> Result<CMatrix> {
    let pair = polar_decompose(z)?;
    let n = z.nrows();
    let k = &pair.k + CMatrix::identity(n, n) * c(shift, 0.0);
    if hermitian_eigen(&k).0[0] <= 0.0 {
        return Err(Error::InvalidSpec(format!("shift {shift} makes K indefinite")));
    }
    Ok(&pair.u * hermitian_function(&k, |x| x.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{sample_group_element, GroupFamily};
    use crate::spinchain::random_state;

    #[test]
    fn polar_examples() {
        let u = sample_group_element(GroupFamily::su(3), 1);
        let pair = polar_decompose(&u).unwrap();
        assert!((&pair.u - &u).norm() < 1e-12);
        assert!((&pair.k - CMatrix::identity(3, 3)).norm() < 1e-12);

        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0)]));
        let pair = polar_decompose(&d).unwrap();
        assert!((&pair.u - CMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((pair.k[(0, 0)].re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn polar_rejects_the_divisor() {
        let z = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(polar_decompose(&z), Err(Error::NearDivisor { .. })));
    }

    #[test]
    fn polar_right_unitary_equivariance() {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0, 0.5], &[1.0, 1.0]).unwrap();
        let z = random_state(&cfg, 7).z;
        let v = sample_group_element(GroupFamily::su(3), 8);
        let a = polar_decompose(&z).unwrap();
        let b = polar_decompose(&(&z * &v)).unwrap();
        assert!((&b.u - &a.u * &v).norm() < 1e-10);
        assert!((&b.k - v.adjoint() * &a.k * &v).norm() < 1e-10);
    }

    #[test]
    fn det_bound_examples() {
        let u = sample_group_element(GroupFamily::su(3), 3);
        let b = det_bound(&u, &[1.0; 3]).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12 && b.bound == 1.0 && b.at_max);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(s, 0.0)]);
        let b = det_bound(&z, &[1.0, 1.0]).unwrap();
        assert!(b.value.abs() < 1e-15 && !b.at_max);
    }

    #[test]
    fn cp1_antipodal() {
        let n1 = [0.0, 0.6, 0.8];
        let m = cp1_cotangent_map(n1, n1.map(|x| -x), 2.0).unwrap();
        for ((n, pi), expected) in m.n.iter().zip(&m.pi).zip(&n1) {
            assert!((n - expected).abs() < 1e-15);
            assert!(pi.abs() < 1e-15);
        }
        assert!(cp1_cotangent_map(n1, n1, 1.0).is_err());
    }

    #[test]
    fn ev_at_zero_is_identity() {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0, 3.0, 1.0], &[1.0, 0.4, 2.0]).unwrap();
        let a0 = random_state(&cfg, 0).gram();
        let ev = ev_operator(&cfg, &a0, 0.0).unwrap();
        assert!((ev - CMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn ev_two_sites() {
        let alpha = 0.7;
        let cfg = SpinChainConfig::nested(vec![1.0, 1.5], &[alpha]).unwrap();
        let a0 = random_state(&cfg, 2).gram();
        let t = 1.3;
        let direct = (&a0 * c(0.0, -alpha * t)).exp();
        assert!((ev_operator(&cfg, &a0, t).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn ev_three_sites_matches_the_product_form() {
        // exp[−iα₁₃ A t]·diag(exp[i(α₁₃−α₁₂) Pr₂(A) t], 1).
        let (a12, a13) = (0.6, 1.4);
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0, 0.5], &[a12, a13]).unwrap();
        let a0 = random_state(&cfg, 5).gram();
        let t = 0.9;
        let outer = (&a0 * c(0.0, -a13 * t)).exp();
        let inner_block = (a0.view((0, 0), (2, 2)).into_owned() * c(0.0, (a13 - a12) * t)).exp();
        let mut inner = CMatrix::identity(3, 3);
        inner.view_mut((0, 0), (2, 2)).copy_from(&inner_block);
        assert!((ev_operator(&cfg, &a0, t).unwrap() - outer * inner).norm() < 1e-12);
    }

    #[test]
    fn ev_checks_inputs() {
        let cfg = SpinChainConfig::nested(vec![1.0, 1.0], &[1.0]).unwrap();
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(ev_operator(&cfg, &bad, 1.0).is_err());
        let indefinite = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(ev_operator(&cfg, &indefinite, 1.0).is_err());
        let wrong_diag = CMatrix::identity(2, 2) * c(2.0, 0.0);
        assert!(ev_operator(&cfg, &wrong_diag, 1.0).is_err());

        let mut alpha = nalgebra::DMatrix::from_element(3, 3, 1.0);
        alpha.fill_diagonal(0.0);
        alpha[(0, 2)] = 2.0;
        alpha[(2, 0)] = 2.0;
        let cfg = SpinChainConfig::new(vec![1.0; 3], alpha).unwrap();
        let a0 = random_state(&cfg, 0).gram();
        assert!(matches!(ev_operator(&cfg, &a0, 1.0), Err(Error::NotNested)));
    }

    #[test]
    fn ev_is_unitary() {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0, 3.0, 0.5, 1.0], &[1.0, 2.0, 0.3, 1.1]).unwrap();
        let a0 = random_state(&cfg, 11).gram();
        for t in [0.1, 1.0, 7.5] {
            let ev = ev_operator(&cfg, &a0, t).unwrap();
            assert!((ev.adjoint() * &ev - CMatrix::identity(5, 5)).norm() < 1e-9);
        }
    }

    #[test]
    fn closed_form_rejects_bad_times() {
        let cfg = SpinChainConfig::nested(vec![1.0, 1.0], &[1.0]).unwrap();
        let z0 = random_state(&cfg, 0).z;
        assert!(matches!(
            closed_form_trajectory(&z0, &cfg, &[0.0, 0.5, 0.5]),
            Err(Error::NonMonotoneTimes)
        ));
    }

    #[test]
    fn uniform_times_match_the_integrator() {
        assert_eq!(uniform_times(0.25, 0.1).unwrap(), vec![0.0, 0.1, 0.2, 0.25]);
        assert_eq!(uniform_times(1.0, 0.5).unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn shift_keeps_u_and_moves_the_diagonal() {
        let cfg = SpinChainConfig::nested(vec![1.0, 2.0, 1.5], &[1.0, 2.0]).unwrap();
        let z = random_state(&cfg, 3).z;
        let shifted = shift_normalizations(&z, 1.0).unwrap();
        let a = z.adjoint() * &z;
        let b = shifted.adjoint() * &shifted;
        assert!((b - a - CMatrix::identity(3, 3)).norm() < 1e-10);
        let ua = polar_decompose(&z).unwrap().u;
        let ub = polar_decompose(&shifted).unwrap().u;
        assert!((ua - ub).norm() < 1e-10);
    }
}
