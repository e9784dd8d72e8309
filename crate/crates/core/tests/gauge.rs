//! Shifting every `p_a` by `c` for nested chains.

use coadjoint::geodesics::{closed_form_trajectory, magnetic_geodesic, shift_normalizations, uniform_times};
use coadjoint::spinchain::{random_state, SpinChainConfig};

fn check_shift(config: &SpinChainConfig, seed: u64, shift: f64) -> (f64, f64, f64) {
    let z0 = random_state(config, seed).z;
    let shifted = config.shifted(shift).unwrap();
    let z1 = shift_normalizations(&z0, shift).unwrap();
    let times = uniform_times(5.0, 1e-2).unwrap();

    let a = closed_form_trajectory(&z0, config, &times).unwrap();
    let b = closed_form_trajectory(&z1, &shifted, &times).unwrap();
    let n = config.n();
    let mut modulus: f64 = 0.0;
    for (x, y) in a.samples.iter().zip(&b.samples) {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    modulus = modulus
                        .max((x.diagnostics.gram[(i, j)].norm() - y.diagnostics.gram[(i, j)].norm()).abs());
                }
            }
        }
    }

    // U' = U · diag(e^{−i α_a c t}).
    let levels = config.levels().unwrap();
    let ua = magnetic_geodesic(&z0, config, &times).unwrap();
    let ub = magnetic_geodesic(&z1, &shifted, &times).unwrap();
    let (mut off, mut phase): (f64, f64) = (0.0, 0.0);
    for (x, y) in ua.samples.iter().zip(&ub.samples) {
        let d = x.u.adjoint() * &y.u;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    let expected = coadjoint::linalg::c(0.0, -levels[i] * shift * x.time).exp();
                    phase = phase.max((d[(i, i)] - expected).norm());
                } else {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
    }
    (modulus, off, phase)
}

#[test]
fn shift_is_a_global_phase_for_two_spins() {
    let config = SpinChainConfig::nested(vec![1.2, 0.9], &[0.8]).unwrap();
    let (modulus, off, phase) = check_shift(&config, 1, 1.0);
    assert!(modulus < 1e-10 && off < 1e-10 && phase < 1e-10);
}

#[test]
fn shift_is_a_diagonal_gauge_for_longer_chains() {
    for (p, levels) in [
        (vec![1.0, 1.3, 0.7], vec![0.5, 1.1]),
        (vec![0.8, 1.0, 1.5, 0.6], vec![0.4, 0.9, 1.6]),
    ] {
        let config = SpinChainConfig::nested(p, &levels).unwrap();
        for shift in [1.0, 0.35] {
            let (modulus, off, phase) = check_shift(&config, 7, shift);
            assert!(modulus < 1e-9, "|A_ij| changed by {modulus}");
            assert!(off < 1e-9, "U'†U has off-diagonal {off}");
            assert!(phase < 1e-9, "diagonal phases off by {phase}");
        }
    }
}

#[test]
fn shift_is_not_global_once_levels_differ() {
    // With α₃ ≠ α₂ the column phases separate, so |Tr(U†U')|/n drops below 1.
    let config = SpinChainConfig::nested(vec![1.0, 1.3, 0.7], &[0.5, 1.1]).unwrap();
    let z0 = random_state(&config, 7).z;
    let times = [0.0, 2.0];
    let ua = magnetic_geodesic(&z0, &config, &times).unwrap();
    let ub = magnetic_geodesic(
        &shift_normalizations(&z0, 1.0).unwrap(),
        &config.shifted(1.0).unwrap(),
        &times,
    )
    .unwrap();
    let overlap = (ua.samples[1].u.adjoint() * &ub.samples[1].u).trace().norm() / 3.0;
    assert!(overlap < 1.0 - 1e-3, "{overlap}");
}
