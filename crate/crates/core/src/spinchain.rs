//! Classical spin chain on `(CP^{n−1})^n`: columns `z_a` of `Z` with `z̄_a z_a = p_a`,
//! Hamiltonian `Σ_{i<j} α_ij |z̄_i z_j|²` and the gauge-fixed first-order dynamics
//! `i Ż = Z M`, `M_ia = α_ia z̄_i z_a` (i ≠ a), `M_aa = −λ_a`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, commutator, CMatrix, C64, I};

/// Relative column-norm deviation that aborts an integration.
const BLOW_UP: f64 = 0.1;

/// Normalizations and couplings of a spin chain with `n` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainConfig {
    p: Vec<f64>,
    alpha: DMatrix<f64>,
    /// `α_a` for `a = 1..n` (with `α_1 = α_2`) when `α_ij = α_max(i,j)`.
    levels: Option<Vec<f64>>,
}

impl SpinChainConfig {
    /// General couplings; nestedness is detected by exact comparison.
    pub fn new(p: Vec<f64>, alpha: DMatrix<f64>) -> Result<Self> {
        let n = p.len();
        if n < 2 {
            return Err(Error::InvalidSpec("a spin chain needs at least two sites".into()));
        }
        if p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "normalizations must be positive, got {p:?}"
            )));
        }
        if alpha.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: alpha.nrows(),
            });
        }
        for i in 0..n {
            if alpha[(i, i)] != 0.0 {
                return Err(Error::InvalidSpec("couplings must have a zero diagonal".into()));
            }
            for j in 0..n {
                if alpha[(i, j)] != alpha[(j, i)] || !alpha[(i, j)].is_finite() {
                    return Err(Error::InvalidSpec(
                        "couplings must be finite and symmetric".into(),
                    ));
                }
            }
        }
        let levels = detect_levels(&alpha);
        Ok(Self { p, alpha, levels })
    }

    /// Nested couplings `α_ij = α_max(i,j)` from `levels = (α_2, …, α_n)`.
    pub fn nested(p: Vec<f64>, levels: &[f64]) -> Result<Self> {
        let n = p.len();
        if levels.len() + 1 != n {
            return Err(Error::InvalidSpec(format!(
                "{} sites need {} levels, got {}",
                n,
                n.saturating_sub(1),
                levels.len()
            )));
        }
        let alpha = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { levels[i.max(j) - 1] });
        Self::new(p, alpha)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn is_nested(&self) -> bool {
        self.levels.is_some()
    }

    /// `(α_1, …, α_n)` with `α_1 = α_2`, or `NotNested`.
    pub fn levels(&self) -> Result<&[f64]> {
        self.levels.as_deref().ok_or(Error::NotNested)
    }

    /// Magnetic charges `q_i = p_i − p_{i−1}`, `i = 1..n−1`.
    pub fn charges(&self) -> Vec<f64> {
        self.p.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same couplings with every `p_a` shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.p.iter().map(|x| x + c).collect(), self.alpha.clone())
    }
}

fn detect_levels(alpha: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = alpha.nrows();
    let mut levels = vec![0.0; n];
    for a in 1..n {
        levels[a] = alpha[(0, a)];
    }
    levels[0] = levels[1];
    for i in 0..n {
        for j in 0..n {
            if i != j && alpha[(i, j)] != levels[i.max(j)] {
                return None;
            }
        }
    }
    Some(levels)
}

/// `Z` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainState {
    pub z: CMatrix,
    pub time: f64,
}

impl SpinChainState {
    /// Checks `z̄_a z_a = p_a` to `1e-9`.
    pub fn new(z: CMatrix, time: f64, config: &SpinChainConfig) -> Result<Self> {
        let n = config.n();
        if z.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: z.nrows(),
            });
        }
        let deviation = norm_deviation(&z, config.p());
        if deviation > 1e-9 {
            return Err(Error::Normalization { deviation });
        }
        Ok(Self { z, time })
    }

    /// Gram matrix `A_ab = z̄_a z_b`.
    pub fn gram(&self) -> CMatrix {
        self.z.adjoint() * &self.z
    }
}

/// `max_a |z̄_a z_a − p_a|`.
pub fn norm_deviation(z: &CMatrix, p: &[f64]) -> f64 {
    z.column_iter()
        .zip(p)
        .map(|(col, &pa)| (col.norm_squared() - pa).abs())
        .fold(0.0, f64::max)
}

/// Rescales every column to `|z_a|² = p_a`.
pub fn normalize_columns(z: &mut CMatrix, p: &[f64]) {
    for (mut col, &pa) in z.column_iter_mut().zip(p) {
        let norm = col.norm();
        if norm > 0.0 {
            col *= c(pa.sqrt() / norm, 0.0);
        }
    }
}

/// Gaussian random columns rescaled to the normalizations.
pub fn random_state(config: &SpinChainConfig, seed: u64) -> SpinChainState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.n();
    let mut z = CMatrix::from_fn(n, n, |_, _| {
        c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    normalize_columns(&mut z, config.p());
    SpinChainState { z, time: 0.0 }
}

/// `Σ_{i<j} α_ij |z̄_i z_j|²`.
pub fn hamiltonian(state: &SpinChainState, config: &SpinChainConfig) -> f64 {
    let a = state.gram();
    let n = config.n();
    let mut h = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            h += config.alpha[(i, j)] * a[(i, j)].norm_sqr();
        }
    }
    h
}

/// Choice of the Lagrange multipliers `λ_a`.
#[derive(Clone)]
pub enum Gauge {
    /// `λ_a = −α_a p_a`; requires nested couplings.
    Nested,
    /// `λ_a = 0`.
    Zero,
    /// User-supplied `λ(t)`.
    Custom(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Gauge {
    /// `Nested` for nested couplings, `Zero` otherwise.
    pub fn default_for(config: &SpinChainConfig) -> Self {
        if config.is_nested() {
            Self::Nested
        } else {
            Self::Zero
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Nested => "nested",
            Self::Zero => "zero",
            Self::Custom(_) => "custom",
        }
    }

    pub fn multipliers(&self, config: &SpinChainConfig, t: f64) -> Result<Vec<f64>> {
        match self {
            Self::Nested => Ok(config
                .levels()?
                .iter()
                .zip(config.p())
                .map(|(a, p)| -a * p)
                .collect()),
            Self::Zero => Ok(vec![0.0; config.n()]),
            Self::Custom(f) => {
                let l = f(t);
                if l.len() != config.n() {
                    return Err(Error::DimensionMismatch {
                        expected: config.n(),
                        got: l.len(),
                    });
                }
                Ok(l)
            }
        }
    }
}

/// The matrix `M` of `i Ż = Z M`.
pub fn eom_matrix(z: &CMatrix, config: &SpinChainConfig, lambda: &[f64]) -> CMatrix {
    let a = z.adjoint() * z;
    let n = config.n();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(-lambda[i], 0.0)
        } else {
            a[(i, j)] * config.alpha[(i, j)]
        }
    })
}

fn rhs(z: &CMatrix, config: &SpinChainConfig, lambda: &[f64]) -> CMatrix {
    z * eom_matrix(z, config, lambda) * (-I)
}

/// `Ż = −i Z M` in the gauge `gauge` at the state's time.
pub fn eom_rhs(state: &SpinChainState, config: &SpinChainConfig, gauge: &Gauge) -> Result<CMatrix> {
    let lambda = gauge.multipliers(config, state.time)?;
    Ok(rhs(&state.z, config, &lambda))
}

/// Conserved and monitored quantities at one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub energy: f64,
    pub norms: Vec<f64>,
    /// `det(Z†Z)`, real and nonnegative.
    pub det_gram: f64,
    pub gram: CMatrix,
}

impl Diagnostics {
    pub fn of(state: &SpinChainState, config: &SpinChainConfig) -> Self {
        let gram = state.gram();
        Self {
            energy: hamiltonian(state, config),
            norms: (0..config.n()).map(|a| gram[(a, a)].re).collect(),
            det_gram: gram.determinant().re,
            gram,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: SpinChainState,
    pub diagnostics: Diagnostics,
}

impl Sample {
    pub fn time(&self) -> f64 {
        self.state.time
    }
}

/// Time-ordered samples with their diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub config: SpinChainConfig,
    pub gauge: String,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// Builds a trajectory, recomputing diagnostics and checking that times increase.
    pub fn from_states(config: SpinChainConfig, gauge: &str, states: Vec<SpinChainState>) -> Result<Self> {
        if states.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::NonMonotoneTimes);
        }
        let samples = states
            .into_iter()
            .map(|state| Sample {
                diagnostics: Diagnostics::of(&state, &config),
                state,
            })
            .collect();
        Ok(Self {
            config,
            gauge: gauge.to_string(),
            samples,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::time).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are nonempty")
    }

    /// `max_t |H(t) − H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.samples[0].diagnostics.energy;
        self.samples
            .iter()
            .map(|s| (s.diagnostics.energy - h0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_t max_a |z̄_a z_a − p_a|`.
    pub fn norm_drift(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| {
                s.diagnostics
                    .norms
                    .iter()
                    .zip(self.config.p())
                    .map(|(x, p)| (x - p).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `Z_self(t) − Z_other(t)` over common samples.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                got: other.samples.len(),
            });
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if (a.time() - b.time()).abs() > 1e-9 * a.time().abs().max(1.0) {
                return Err(Error::InvalidSpec(format!(
                    "sample times differ: {} vs {}",
                    a.time(),
                    b.time()
                )));
            }
            worst = worst.max(crate::linalg::max_abs(&(&a.state.z - &b.state.z)));
        }
        Ok(worst)
    }
}

/// Options for [`integrate_with`].
#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    /// Defaults to [`Gauge::default_for`].
    pub gauge: Option<Gauge>,
    /// Rescale columns to `p_a` after every step.
    pub renormalize: bool,
    /// Record every `sample_every`-th step (the final state is always recorded).
    pub sample_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            gauge: None,
            renormalize: true,
            sample_every: 1,
        }
    }
}

/// Fixed-step RK4 with default options.
pub fn integrate(config: &SpinChainConfig, z0: &CMatrix, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_with(config, z0, t_end, dt, &IntegrateOptions::default())
}

/// Classical RK4 from `t = 0` to `t_end` with step `dt` (the last step is shortened to land on `t_end`).
pub fn integrate_with(
    config: &SpinChainConfig,
    z0: &CMatrix,
    t_end: f64,
    dt: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "t_end must be finite and nonnegative, got {t_end}"
        )));
    }
    let initial = SpinChainState::new(z0.clone(), 0.0, config)?;
    let gauge = opts.gauge.clone().unwrap_or_else(|| Gauge::default_for(config));
    // Validates the gauge (e.g. Nested on non-nested couplings) before stepping.
    gauge.multipliers(config, 0.0)?;
    let every = opts.sample_every.max(1);
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;

    let mut states = vec![initial.clone()];
    let mut z = initial.z;
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        let h = t_next - t;
        z = rk4_step(config, &gauge, &z, t, h)?;
        t = t_next;
        let deviation = config
            .p()
            .iter()
            .zip(z.column_iter())
            .map(|(p, col)| (col.norm_squared() / p - 1.0).abs())
            .fold(0.0, f64::max);
        if !(deviation <= BLOW_UP) {
            return Err(Error::BlowUp { time: t, deviation });
        }
        if opts.renormalize {
            normalize_columns(&mut z, config.p());
        }
        if k % every == 0 || k == steps {
            states.push(SpinChainState {
                z: z.clone(),
                time: t,
            });
        }
    }
    Trajectory::from_states(config.clone(), gauge.label(), states)
}

fn rk4_step(config: &SpinChainConfig, gauge: &Gauge, z: &CMatrix, t: f64, h: f64) -> Result<CMatrix> {
    let half = c(0.5 * h, 0.0);
    let full = c(h, 0.0);
    let l0 = gauge.multipliers(config, t)?;
    let lh = gauge.multipliers(config, t + 0.5 * h)?;
    let l1 = gauge.multipliers(config, t + h)?;
    let k1 = rhs(z, config, &l0);
    let k2 = rhs(&(z + &k1 * half), config, &lh);
    let k3 = rhs(&(z + &k2 * half), config, &lh);
    let k4 = rhs(&(z + &k3 * full), config, &l1);
    Ok(z + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0))
}

/// Integrates independent jobs in parallel; results keep the input order.
pub fn integrate_batch(
    jobs: &[(SpinChainConfig, CMatrix)],
    t_end: f64,
    dt: f64,
    opts: &IntegrateOptions,
) -> Vec<Result<Trajectory>> {
    jobs.par_iter()
        .map(|(config, z0)| integrate_with(config, z0, t_end, dt, opts))
        .collect()
}

/// `A_ab = z̄_a z_b` and `B_ab = α_max(a,b) z̄_a z_b` (diagonal weighted by `α_a`).
pub fn gram_and_lax(state: &SpinChainState, config: &SpinChainConfig) -> Result<(CMatrix, CMatrix)> {
    let levels = config.levels()?;
    let a = state.gram();
    let n = config.n();
    let b = CMatrix::from_fn(n, n, |i, j| a[(i, j)] * levels[i.max(j)]);
    Ok((a, b))
}

/// Finite-difference derivative of a uniformly sampled sequence: centered inside,
/// second-order one-sided at both ends.
pub(crate) fn time_derivatives(values: &[CMatrix], h: f64) -> Vec<CMatrix> {
    let n = values.len();
    assert!(n >= 3, "at least three samples are needed");
    (0..n)
        .map(|k| {
            if k == 0 {
                (&values[0] * c(-3.0, 0.0) + &values[1] * c(4.0, 0.0) - &values[2]) * c(0.5 / h, 0.0)
            } else if k == n - 1 {
                (&values[n - 1] * c(3.0, 0.0) - &values[n - 2] * c(4.0, 0.0) + &values[n - 3])
                    * c(0.5 / h, 0.0)
            } else {
                (&values[k + 1] - &values[k - 1]) * c(0.5 / h, 0.0)
            }
        })
        .collect()
}

/// Common step of a uniformly sampled time grid.
pub(crate) fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::InvalidSpec("at least three samples are needed".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::NonMonotoneTimes);
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(Error::InvalidSpec("time grid is not uniform".into()));
        }
    }
    Ok(h)
}

/// `max_t ‖i Ȧ + [B, A]‖` with `Ȧ` from finite differences; the trajectory must be in the nested gauge.
pub fn lax_residual(trajectory: &Trajectory) -> Result<f64> {
    let config = &trajectory.config;
    config.levels()?;
    if trajectory.gauge != Gauge::Nested.label() {
        return Err(Error::InvalidSpec(format!(
            "the Lax form holds in the nested gauge, trajectory uses '{}'",
            trajectory.gauge
        )));
    }
    let h = uniform_step(&trajectory.times())?;
    let pairs = trajectory
        .samples
        .iter()
        .map(|s| gram_and_lax(&s.state, config))
        .collect::<Result<Vec<_>>>()?;
    let grams: Vec<CMatrix> = pairs.iter().map(|(a, _)| a.clone()).collect();
    let derivs = time_derivatives(&grams, h);
    Ok(pairs
        .iter()
        .zip(&derivs)
        .map(|((a, b), da)| (da * I + commutator(b, a)).norm())
        .fold(0.0, f64::max))
}

/// Bloch vector `z̄ σ⃗ z / z̄ z` of a nonzero 2-vector.
pub fn bloch_vector(z: [C64; 2]) -> Result<[f64; 3]> {
    let norm = z[0].norm_sqr() + z[1].norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::InvalidSpec("Bloch vector of the zero vector".into()));
    }
    let cross = z[0].conj() * z[1];
    Ok([
        2.0 * cross.re / norm,
        2.0 * cross.im / norm,
        (z[0].norm_sqr() - z[1].norm_sqr()) / norm,
    ])
}

/// Bloch vector of column `a` of `Z` (`n = 2` only).
pub fn column_bloch_vector(z: &CMatrix, a: usize) -> Result<[f64; 3]> {
    if z.nrows() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: z.nrows(),
        });
    }
    bloch_vector([z[(0, a)], z[(1, a)]])
}
