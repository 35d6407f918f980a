//! Pure-loss channel on the truncated two-mode space, mixed-state fidelity
//! to pure targets, and the minimal-transmission search defining the loss
//! tolerance of a certification.
//!
//! Both modes see the same transmission η. The channel acts through the
//! Kraus operators A_j|n⟩ = sqrt(C(n,j) η^{n−j} (1−η)^j) |n−j⟩, which are
//! exactly trace preserving on the truncated space, so no superoperator is
//! ever materialized.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{BasisDescriptor, TwoModeState};
use crate::linalg::CMat;
use crate::threshold::ThresholdResult;

/// Largest input leakage the channel accepts.
pub const MAX_CHANNEL_LEAKAGE: f64 = 1e-8;

/// Hermitian positive matrix on the truncated two-mode space.
#[derive(Debug, Clone)]
pub struct TwoModeDensity {
    basis: BasisDescriptor,
    rho: CMat,
    trace_defect: f64,
}

impl TwoModeDensity {
    pub fn basis(&self) -> BasisDescriptor {
        self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    pub fn trace_defect(&self) -> f64 {
        self.trace_defect
    }

    pub fn trace(&self) -> f64 {
        (0..self.basis.total_dim())
            .map(|i| self.rho.get(i, i).re)
            .sum()
    }

    /// Largest deviation from Hermiticity, max |ρ − ρ†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rho.rows {
            for j in 0..=i {
                let d = (self.rho.get(i, j) - self.rho.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ParameterOutOfRange {
            what: "transmission eta",
            value: eta,
            allowed: "[0, 1]".into(),
        });
    }
    Ok(())
}

/// Per-j Kraus coefficient rows: coef[j][n] for n in j..=cutoff.
fn kraus_coefficients(eta: f64, cutoff: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(cutoff + 1);
    for j in 0..=cutoff {
        let mut row = vec![0.0f64; cutoff + 1];
        // c²(j, j) = (1−η)^j; ratio c²(j, n+1)/c²(j, n) = η (n+1)/(n+1−j).
        let mut c2 = (1.0 - eta).powi(j as i32);
        row[j] = c2.sqrt();
        for n in j..cutoff {
            c2 *= eta * (n + 1) as f64 / ((n + 1 - j) as f64);
            row[n + 1] = c2.sqrt();
        }
        rows.push(row);
    }
    rows
}

/// (A_{j1} ⊗ A_{j2}) ψ as a flat vector.
fn kraus_branch(amp: &[C64], dim: usize, coef: &[Vec<f64>], j1: usize, j2: usize) -> Vec<C64> {
    let mut w = vec![C64::new(0.0, 0.0); dim * dim];
    for k in j1..dim {
        let c1 = coef[j1][k];
        if c1 == 0.0 {
            continue;
        }
        for l in j2..dim {
            let v = amp[k * dim + l];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            w[(k - j1) * dim + (l - j2)] = c1 * coef[j2][l] * v;
        }
    }
    w
}

/// Pure-loss channel with equal transmission η on both modes applied to a
/// pure state.
pub fn pure_loss(state: &TwoModeState, eta: f64) -> Result<TwoModeDensity> {
    check_eta(eta)?;
    if state.leakage() > MAX_CHANNEL_LEAKAGE {
        return Err(Error::LeakageTooLarge {
            leakage: state.leakage(),
            max: MAX_CHANNEL_LEAKAGE,
        });
    }
    let basis = state.basis();
    let dim = basis.dim();
    let coef = kraus_coefficients(eta, basis.cutoff());
    let mut rho = CMat::zeros(basis.total_dim(), basis.total_dim());
    for j1 in 0..dim {
        for j2 in 0..dim {
            let w = kraus_branch(state.amplitudes(), dim, &coef, j1, j2);
            // Rank-one update over the branch support only.
            let support: Vec<usize> = (0..w.len()).filter(|&i| w[i].norm_sqr() > 0.0).collect();
            for &r in &support {
                let wr = w[r];
                for &c in &support {
                    let v = rho.get(r, c) + wr * w[c].conj();
                    rho.set(r, c, v);
                }
            }
        }
    }
    // Symmetrize away accumulation round-off.
    for i in 0..rho.rows {
        for j in 0..i {
            let m = 0.5 * (rho.get(i, j) + rho.get(j, i).conj());
            rho.set(i, j, m);
            rho.set(j, i, m.conj());
        }
        let d = rho.get(i, i).re;
        rho.set(i, i, C64::new(d, 0.0));
    }
    let trace: f64 = (0..basis.total_dim()).map(|i| rho.get(i, i).re).sum();
    Ok(TwoModeDensity {
        basis,
        rho,
        trace_defect: (trace - 1.0).abs(),
    })
}

/// Channel action on a density matrix (used for composition checks).
pub fn pure_loss_density(rho: &TwoModeDensity, eta: f64) -> Result<TwoModeDensity> {
    check_eta(eta)?;
    let basis = rho.basis;
    let dim = basis.dim();
    let coef = kraus_coefficients(eta, basis.cutoff());
    let mut out = CMat::zeros(basis.total_dim(), basis.total_dim());
    for j1 in 0..dim {
        for j2 in 0..dim {
            for k in j1..dim {
                for l in j2..dim {
                    let cl = coef[j1][k] * coef[j2][l];
                    if cl == 0.0 {
                        continue;
                    }
                    let row_in = k * dim + l;
                    let row_out = (k - j1) * dim + (l - j2);
                    for kp in j1..dim {
                        for lp in j2..dim {
                            let cr = coef[j1][kp] * coef[j2][lp];
                            if cr == 0.0 {
                                continue;
                            }
                            let v = rho.rho.get(row_in, kp * dim + lp);
                            if v.norm_sqr() == 0.0 {
                                continue;
                            }
                            let col_out = (kp - j1) * dim + (lp - j2);
                            let acc = out.get(row_out, col_out) + cl * cr * v;
                            out.set(row_out, col_out, acc);
                        }
                    }
                }
            }
        }
    }
    let trace: f64 = (0..basis.total_dim()).map(|i| out.get(i, i).re).sum();
    Ok(TwoModeDensity {
        basis,
        rho: out,
        trace_defect: (trace - 1.0).abs(),
    })
}

/// ⟨ψ_t| ρ |ψ_t⟩.
pub fn fidelity_to_pure(target: &TwoModeState, rho: &TwoModeDensity) -> Result<f64> {
    if target.basis() != rho.basis {
        return Err(Error::BasisMismatch {
            left: target.basis().cutoff(),
            right: rho.basis.cutoff(),
        });
    }
    let w = rho.rho.mul_vec(target.amplitudes());
    Ok(crate::linalg::vec_dot(target.amplitudes(), &w).re)
}

/// Fidelity of the lossy state to a pure target without materializing ρ:
/// Σ_j |⟨ψ_t|A_j ⊗ A_j'|ψ⟩|². Identical to
/// `fidelity_to_pure(target, pure_loss(state, η))`.
pub fn lossy_fidelity(target: &TwoModeState, state: &TwoModeState, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if target.basis() != state.basis() {
        return Err(Error::BasisMismatch {
            left: target.basis().cutoff(),
            right: state.basis().cutoff(),
        });
    }
    let basis = state.basis();
    let dim = basis.dim();
    let coef = kraus_coefficients(eta, basis.cutoff());
    let t = target.amplitudes();
    let s = state.amplitudes();
    let mut fid = 0.0;
    for j1 in 0..dim {
        for j2 in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in j1..dim {
                let c1 = coef[j1][k];
                if c1 == 0.0 {
                    continue;
                }
                for l in j2..dim {
                    let v = s[k * dim + l];
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += t[(k - j1) * dim + (l - j2)].conj() * (c1 * coef[j2][l]) * v;
                }
            }
            fid += acc.norm_sqr();
        }
    }
    Ok(fid)
}

/// Loss tolerance of a certification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossResult {
    /// Minimal transmission keeping the lossy fidelity above the threshold.
    pub eta_min: f64,
    pub threshold_used: ThresholdResult,
    /// (η, fidelity) on the verification grid.
    pub fidelity_curve: Vec<(f64, f64)>,
    pub monotone_verified: bool,
    /// Set when the threshold leaves no room for any loss.
    pub no_margin: bool,
}

/// Points on the monotonicity verification grid.
const GRID_POINTS: usize = 21;

/// Minimal transmission η for which the fidelity between the lossy target
/// and the lossless target stays above the threshold. The target is held
/// fixed as the lossless state.
pub fn min_transmission(
    target: &TwoModeState,
    threshold: &ThresholdResult,
    tol: f64,
) -> Result<LossResult> {
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange {
            what: "bisection tolerance",
            value: tol,
            allowed: "> 0".into(),
        });
    }
    let t = threshold.value;
    let f = |eta: f64| lossy_fidelity(target, target, eta);

    let mut curve = Vec::with_capacity(GRID_POINTS);
    for i in 0..GRID_POINTS {
        let eta = i as f64 / (GRID_POINTS - 1) as f64;
        curve.push((eta, f(eta)?));
    }
    let monotone = curve.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);

    // Certification impossible even without loss.
    if curve.last().unwrap().1 <= t {
        return Ok(LossResult {
            eta_min: 1.0,
            threshold_used: threshold.clone(),
            fidelity_curve: curve,
            monotone_verified: monotone,
            no_margin: true,
        });
    }
    // Even a fully lossy state certifies.
    if curve[0].1 > t {
        return Ok(LossResult {
            eta_min: 0.0,
            threshold_used: threshold.clone(),
            fidelity_curve: curve,
            monotone_verified: monotone,
            no_margin: false,
        });
    }

    // Bracket the crossing F(η) = threshold: on a monotone curve this is
    // the unique crossing; otherwise take the lowest-η upward crossing.
    let mut bracket = None;
    for w in curve.windows(2) {
        if w[0].1 <= t && w[1].1 > t {
            bracket = Some((w[0].0, w[1].0));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.expect("crossing exists between the checked endpoints");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LossResult {
        eta_min: 0.5 * (lo + hi),
        threshold_used: threshold.clone(),
        fidelity_curve: curve,
        monotone_verified: monotone,
        no_margin: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::PassiveParams;
    use crate::fock::TwoModeState;
    use crate::targets;
    use crate::threshold::{BestParams, ThresholdKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::FRAC_PI_4;

    fn dummy_threshold(value: f64) -> ThresholdResult {
        ThresholdResult {
            kind: ThresholdKind::Passive,
            value,
            best_params: BestParams::Passive(PassiveParams {
                phi1: 0.0,
                theta: 0.0,
            }),
            best_input: (vec![], vec![]),
            cutoff_trace: vec![(2, value)],
            converged: true,
            evaluations: 0,
        }
    }

    #[test]
    fn identity_channel_is_projector() {
        let basis = BasisDescriptor::new(3);
        let s = targets::fock_pair(0.8, 1, basis).unwrap();
        let rho = pure_loss(&s, 1.0).unwrap();
        assert!(rho.trace_defect() < 1e-12);
        let f = fidelity_to_pure(&s, &rho).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let basis = BasisDescriptor::new(3);
        let s = targets::fock_pair(0.8, 1, basis).unwrap();
        let rho = pure_loss(&s, 0.0).unwrap();
        assert!((rho.matrix().get(0, 0).re - 1.0).abs() < 1e-12);
        let vac = TwoModeState::vacuum(basis);
        assert!((fidelity_to_pure(&vac, &rho).unwrap() - 1.0).abs() < 1e-12);
        let eleven = TwoModeState::fock(basis, 1, 1).unwrap();
        assert!(fidelity_to_pure(&eleven, &rho).unwrap().abs() < 1e-14);
    }

    #[test]
    fn single_photon_two_branch_expansion() {
        let basis = BasisDescriptor::new(2);
        let s = TwoModeState::fock(basis, 1, 0).unwrap();
        let eta = 0.37;
        let rho = pure_loss(&s, eta).unwrap();
        let i10 = basis.flat(1, 0);
        assert!((rho.matrix().get(i10, i10).re - eta).abs() < 1e-14);
        assert!((rho.matrix().get(0, 0).re - (1.0 - eta)).abs() < 1e-14);
        assert!(rho.matrix().get(i10, 0).norm() < 1e-14);
        assert!(rho.trace_defect() < 1e-14);
    }

    #[test]
    fn fock_pair_closed_form_fidelity() {
        // F(η) = (cos² + η sin²)² + cos² sin² (1−η)² for cosθ|00⟩+sinθ|11⟩.
        let basis = BasisDescriptor::new(2);
        let theta = 0.7;
        let s = targets::fock_pair(theta, 1, basis).unwrap();
        for &eta in &[0.0, 0.3, 0.62, 0.9, 1.0] {
            let rho = pure_loss(&s, eta).unwrap();
            let f = fidelity_to_pure(&s, &rho).unwrap();
            let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
            let expect = (c2 + eta * s2).powi(2) + c2 * s2 * (1.0 - eta).powi(2);
            assert!((f - expect).abs() < 1e-12, "eta={eta}: {f} vs {expect}");
            // Fast path agrees with the density route.
            let fast = lossy_fidelity(&s, &s, eta).unwrap();
            assert!((fast - f).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_is_trace_preserving_and_positive() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let basis = BasisDescriptor::new(6);
        for _ in 0..3 {
            let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
            for a in amp.iter_mut() {
                *a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let s = TwoModeState::from_amplitudes(basis, amp, 0.0).normalized();
            let eta = rng.gen_range(0.05..0.95);
            let rho = pure_loss(&s, eta).unwrap();
            assert!(
                rho.trace_defect() <= 1e-9,
                "trace defect {}",
                rho.trace_defect()
            );
            assert!(rho.hermiticity_defect() < 1e-12);
            // Positivity: smallest eigenvalue of ρ ≥ −1e-10 via the largest
            // eigenvalue of (I − ρ) having λ ≤ 1 + 1e-10.
            let (w, _) = crate::linalg::hermitian_eigen(rho.matrix());
            assert!(w[0] >= -1e-10, "negative eigenvalue {}", w[0]);
        }
    }

    #[test]
    fn semigroup_composition() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let basis = BasisDescriptor::new(5);
        let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
        for a in amp.iter_mut() {
            *a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let s = TwoModeState::from_amplitudes(basis, amp, 0.0).normalized();
        let (e1, e2) = (0.85, 0.6);
        let once = pure_loss(&s, e1 * e2).unwrap();
        let twice = pure_loss_density(&pure_loss(&s, e1).unwrap(), e2).unwrap();
        assert!(once.matrix().max_abs_diff(twice.matrix()) < 1e-9);
    }

    #[test]
    fn min_transmission_basics() {
        let basis = BasisDescriptor::new(2);
        let s = targets::fock_pair(FRAC_PI_4, 1, basis).unwrap();

        // Threshold 0: any fidelity is above it.
        let r0 = min_transmission(&s, &dummy_threshold(0.0), 1e-4).unwrap();
        assert_eq!(r0.eta_min, 0.0);
        assert!(!r0.no_margin);

        // Threshold ~1: no margin.
        let r1 = min_transmission(&s, &dummy_threshold(1.0), 1e-4).unwrap();
        assert!((r1.eta_min - 1.0).abs() < 1e-12);
        assert!(r1.no_margin);

        // Interior threshold: bisection hits F(η*) = T.
        let t = 0.8;
        let res = min_transmission(&s, &dummy_threshold(t), 1e-6).unwrap();
        assert!(res.monotone_verified);
        let f_at = lossy_fidelity(&s, &s, res.eta_min).unwrap();
        assert!((f_at - t).abs() < 1e-4, "F(eta_min) = {f_at}");
        // F(1) = 1 for the leak-free target.
        assert!((res.fidelity_curve.last().unwrap().1 - 1.0).abs() < 1e-9);
        // Lower threshold tolerates more loss.
        let res_low = min_transmission(&s, &dummy_threshold(0.6), 1e-6).unwrap();
        assert!(res_low.eta_min < res.eta_min);
    }

    #[test]
    fn rejects_bad_parameters() {
        let basis = BasisDescriptor::new(2);
        let s = TwoModeState::vacuum(basis);
        assert!(matches!(
            pure_loss(&s, 1.2),
            Err(Error::ParameterOutOfRange { .. })
        ));
        let leaky = TwoModeState::from_amplitudes(basis, s.amplitudes().to_vec(), 1e-6);
        assert!(matches!(
            pure_loss(&leaky, 0.5),
            Err(Error::LeakageTooLarge { .. })
        ));
    }
}
