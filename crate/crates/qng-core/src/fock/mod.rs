//! Truncated two-mode Fock space: states, operators, and the elementary
//! Gaussian unitaries (beam splitter, phase shift, single- and two-mode
//! squeezing).
//!
//! Conventions (all generators written without a 1/2):
//! - beam splitter     U_BS(τ) = exp(τ a1†a2 − τ* a1a2†)
//! - phase shift       R_i(φ)  = exp(iφ a_i†a_i)
//! - single-mode       S_i(ξ)  = exp(ξ (a_i†)² − ξ* a_i²), Bogoliubov
//!   factors cosh 2|ξ| / sinh 2|ξ|
//! - two-mode          S12(ξ)  = exp(ξ a1†a2† − ξ* a1a2), Bogoliubov
//!   factors cosh |ξ| / sinh |ξ|
//!
//! A normalized state keeps Σ|amp|² + leakage = 1: the amplitude vector
//! carries the weight that fits below the cutoff and `leakage` is a
//! conservative estimate of the weight that does not.

pub mod blocks;
pub mod overlap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{vec_dot, vec_norm, CMat};
use blocks::{pad_steps, BlockSystem, GeneratorKind};

/// Hard bound on squeezing magnitudes accepted by the constructors.
pub const XI_MAX: f64 = 3.0;
/// Norm below which an (unnormalized) state counts as annihilated.
pub const ZERO_STATE_NORM: f64 = 1e-14;
/// Columns with image leakage below this are "interior" for the unitarity
/// defect.
pub const INTERIOR_COLUMN_LEAK: f64 = 1e-8;
/// Defect above which a constructor attaches a truncation warning.
pub const TRUNCATION_WARN_DEFECT: f64 = 1e-6;

/// Which mode a single-mode operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

/// Truncated two-mode basis: per-mode Fock indices 0..=cutoff, flat index
/// k·dim + l.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    cutoff: usize,
}

impl BasisDescriptor {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    #[inline]
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Per-mode dimension, cutoff + 1.
    #[inline]
    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    /// Two-mode dimension, dim².
    #[inline]
    pub fn total_dim(&self) -> usize {
        self.dim() * self.dim()
    }

    #[inline]
    pub fn flat(&self, k: usize, l: usize) -> usize {
        debug_assert!(k <= self.cutoff && l <= self.cutoff);
        k * self.dim() + l
    }

    #[inline]
    pub fn unflat(&self, i: usize) -> (usize, usize) {
        (i / self.dim(), i % self.dim())
    }
}

fn check_bases(a: BasisDescriptor, b: BasisDescriptor) -> Result<()> {
    if a != b {
        return Err(Error::BasisMismatch {
            left: a.cutoff,
            right: b.cutoff,
        });
    }
    Ok(())
}

/// Pure two-mode state on a truncated basis with tracked truncation leakage.
#[derive(Debug, Clone)]
pub struct TwoModeState {
    basis: BasisDescriptor,
    amp: Vec<C64>,
    leakage: f64,
}

impl TwoModeState {
    pub fn from_amplitudes(basis: BasisDescriptor, amp: Vec<C64>, leakage: f64) -> Self {
        assert_eq!(amp.len(), basis.total_dim());
        assert!(leakage >= 0.0);
        Self {
            basis,
            amp,
            leakage,
        }
    }

    pub fn vacuum(basis: BasisDescriptor) -> Self {
        let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
        amp[0] = C64::new(1.0, 0.0);
        Self {
            basis,
            amp,
            leakage: 0.0,
        }
    }

    pub fn fock(basis: BasisDescriptor, k: usize, l: usize) -> Result<Self> {
        if k > basis.cutoff() || l > basis.cutoff() {
            return Err(Error::CutoffTooSmall {
                cutoff: basis.cutoff(),
                why: format!("Fock pair ({k},{l}) does not fit"),
            });
        }
        let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
        amp[basis.flat(k, l)] = C64::new(1.0, 0.0);
        Ok(Self {
            basis,
            amp,
            leakage: 0.0,
        })
    }

    /// Product state |u⟩₁|v⟩₂ from single-mode amplitude vectors, normalized.
    pub fn product(basis: BasisDescriptor, u: &[C64], v: &[C64]) -> Result<Self> {
        let dim = basis.dim();
        if u.len() > dim || v.len() > dim {
            return Err(Error::CutoffTooSmall {
                cutoff: basis.cutoff(),
                why: "product factors exceed the basis".into(),
            });
        }
        let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
        for (k, &uk) in u.iter().enumerate() {
            for (l, &vl) in v.iter().enumerate() {
                amp[basis.flat(k, l)] = uk * vl;
            }
        }
        let mut s = Self {
            basis,
            amp,
            leakage: 0.0,
        };
        s.normalize();
        Ok(s)
    }

    #[inline]
    pub fn basis(&self) -> BasisDescriptor {
        self.basis
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    #[inline]
    pub fn amplitude(&self, k: usize, l: usize) -> C64 {
        self.amp[self.basis.flat(k, l)]
    }

    #[inline]
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amp)
    }

    /// Rescale so that Σ|amp|² + leakage = 1.
    pub fn normalize(&mut self) {
        let total = self.norm().powi(2) + self.leakage;
        if total > 0.0 {
            let s = 1.0 / total.sqrt();
            for a in self.amp.iter_mut() {
                *a *= s;
            }
            self.leakage /= total;
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Crop or zero-extend to a new cutoff; cropped weight joins the
    /// leakage.
    pub fn with_cutoff(&self, cutoff: usize) -> TwoModeState {
        let new_basis = BasisDescriptor::new(cutoff);
        let mut amp = vec![C64::new(0.0, 0.0); new_basis.total_dim()];
        let mut kept = 0.0;
        for k in 0..=cutoff.min(self.basis.cutoff()) {
            for l in 0..=cutoff.min(self.basis.cutoff()) {
                let v = self.amplitude(k, l);
                kept += v.norm_sqr();
                amp[new_basis.flat(k, l)] = v;
            }
        }
        let lost = (self.norm().powi(2) - kept).max(0.0);
        TwoModeState {
            basis: new_basis,
            amp,
            leakage: self.leakage + lost,
        }
    }

    /// |⟨self|other⟩|².
    pub fn fidelity_with(&self, other: &TwoModeState) -> Result<f64> {
        Ok(inner(self, other)?.norm_sqr())
    }
}

/// Dense operator on the truncated two-mode space with a unitarity-defect
/// certificate.
///
/// The defect is the largest column norm of (U†U − 1) restricted to
/// interior columns and rows, where a column is interior when its image
/// loses less than [`INTERIOR_COLUMN_LEAK`] of its norm to the cutoff. It
/// certifies how unitary the operator is on the subspace the truncation
/// represents faithfully.
#[derive(Debug, Clone)]
pub struct TwoModeOperator {
    basis: BasisDescriptor,
    mat: CMat,
    unitarity_defect: f64,
    truncation_warning: bool,
}

impl TwoModeOperator {
    pub fn from_parts(
        basis: BasisDescriptor,
        mat: CMat,
        unitarity_defect: f64,
        truncation_warning: bool,
    ) -> Self {
        assert_eq!(mat.rows, basis.total_dim());
        assert_eq!(mat.cols, basis.total_dim());
        Self {
            basis,
            mat,
            unitarity_defect,
            truncation_warning,
        }
    }

    pub fn identity(basis: BasisDescriptor) -> Self {
        Self {
            basis,
            mat: CMat::identity(basis.total_dim()),
            unitarity_defect: 0.0,
            truncation_warning: false,
        }
    }

    #[inline]
    pub fn basis(&self) -> BasisDescriptor {
        self.basis
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    #[inline]
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    #[inline]
    pub fn truncation_warning(&self) -> bool {
        self.truncation_warning
    }

    pub fn adjoint(&self) -> TwoModeOperator {
        TwoModeOperator {
            basis: self.basis,
            mat: self.mat.adjoint(),
            unitarity_defect: self.unitarity_defect,
            truncation_warning: self.truncation_warning,
        }
    }
}

/// Defect of a cropped block-diagonal unitary from its dense blocks:
/// max over interior columns j of ‖P_int (C†C − 1) e_j‖ with P_int the
/// projector onto interior columns of the same block.
fn block_defect(dense_blocks: &[(Vec<C64>, usize)], col_leak_blocks: &[Vec<f64>]) -> f64 {
    let mut defect = 0.0f64;
    for ((dense, keep), leaks) in dense_blocks.iter().zip(col_leak_blocks.iter()) {
        let keep = *keep;
        let interior: Vec<usize> = (0..keep)
            .filter(|&j| leaks[j] < INTERIOR_COLUMN_LEAK)
            .collect();
        if interior.is_empty() {
            continue;
        }
        for &j in &interior {
            let mut colsq = 0.0;
            for &i in &interior {
                // (C†C)_{ij} = Σ_r conj(C_rj... rows are the kept space.
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..keep {
                    acc += dense[r * keep + i].conj() * dense[r * keep + j];
                }
                if i == j {
                    acc -= 1.0;
                }
                colsq += acc.norm_sqr();
            }
            defect = defect.max(colsq.sqrt());
        }
    }
    defect
}

fn build_from_system(sys: &BlockSystem, param: C64, basis: BasisDescriptor) -> (CMat, f64) {
    let (t, chi) = if param.norm() == 0.0 {
        (0.0, 0.0)
    } else {
        (param.norm(), param.arg())
    };
    let mut mat = CMat::zeros(basis.total_dim(), basis.total_dim());
    let mut dense_blocks = Vec::new();
    let mut leak_blocks = Vec::new();
    for block in &sys.blocks {
        let keep = block.keep();
        if keep == 0 {
            continue;
        }
        let dense = blocks::block_dense(block, t, chi);
        let mut leaks = vec![0.0f64; keep];
        for (bj, &cj) in block.indices.iter().enumerate() {
            let mut kept_norm = 0.0;
            for (bi, &ci) in block.indices.iter().enumerate() {
                let v = dense[bi * keep + bj];
                kept_norm += v.norm_sqr();
                mat.set(ci, cj, v);
            }
            leaks[bj] = (1.0 - kept_norm).max(0.0);
        }
        dense_blocks.push((dense, keep));
        leak_blocks.push(leaks);
    }
    let defect = block_defect(&dense_blocks, &leak_blocks);
    (mat, defect)
}

/// Beam splitter exp(τ a1†a2 − τ* a1a2†). Photon-number conserving, hence
/// exactly unitary on the truncated space.
pub fn beam_splitter(tau: C64, basis: BasisDescriptor) -> TwoModeOperator {
    let sys = BlockSystem::beam_splitter(basis.cutoff());
    let (mat, defect) = build_from_system(&sys, tau, basis);
    TwoModeOperator {
        basis,
        mat,
        unitarity_defect: defect,
        truncation_warning: defect > TRUNCATION_WARN_DEFECT,
    }
}

/// Phase shift exp(iφ a_i†a_i), diagonal and exactly unitary.
pub fn phase_shift(phi: f64, mode: Mode, basis: BasisDescriptor) -> TwoModeOperator {
    let dim = basis.dim();
    let mut mat = CMat::zeros(basis.total_dim(), basis.total_dim());
    for k in 0..dim {
        for l in 0..dim {
            let n = match mode {
                Mode::One => k,
                Mode::Two => l,
            } as f64;
            let ang = phi * n;
            mat.set(
                basis.flat(k, l),
                basis.flat(k, l),
                C64::new(ang.cos(), ang.sin()),
            );
        }
    }
    TwoModeOperator {
        basis,
        mat,
        unitarity_defect: 0.0,
        truncation_warning: false,
    }
}

fn check_xi(xi: C64, what: &'static str) -> Result<()> {
    if !xi.re.is_finite() || !xi.im.is_finite() || xi.norm() > XI_MAX {
        return Err(Error::ParameterOutOfRange {
            what,
            value: xi.norm(),
            allowed: format!("|xi| <= {XI_MAX}"),
        });
    }
    Ok(())
}

/// Single-mode squeezer S_i(ξ) = exp(ξ (a†)² − ξ* a²) tensored with the
/// identity on the other mode. Parity preserving in the squeezed mode.
///
/// Safe range for the 1e-6 defect bound at cutoff ≥ 25: |ξ| ≤ 0.6.
pub fn single_mode_squeeze(xi: C64, mode: Mode, basis: BasisDescriptor) -> Result<TwoModeOperator> {
    check_xi(xi, "single-mode squeeze xi")?;
    let cutoff = basis.cutoff();
    let pad = pad_steps(xi.norm(), cutoff, GeneratorKind::SingleModeSqueeze);
    let sys = BlockSystem::single_mode_squeeze(cutoff, pad);
    let dim = basis.dim();

    // Dense single-mode matrix with per-column leakage, then tensor.
    let (t, chi) = if xi.norm() == 0.0 {
        (0.0, 0.0)
    } else {
        (xi.norm(), xi.arg())
    };
    let mut s = CMat::zeros(dim, dim);
    let mut dense_blocks = Vec::new();
    let mut leak_blocks = Vec::new();
    for block in &sys.blocks {
        let keep = block.keep();
        if keep == 0 {
            continue;
        }
        let dense = blocks::block_dense(block, t, chi);
        let mut leaks = vec![0.0f64; keep];
        for (bj, &cj) in block.indices.iter().enumerate() {
            let mut kept_norm = 0.0;
            for (bi, &ci) in block.indices.iter().enumerate() {
                let v = dense[bi * keep + bj];
                kept_norm += v.norm_sqr();
                s.set(ci, cj, v);
            }
            leaks[bj] = (1.0 - kept_norm).max(0.0);
        }
        dense_blocks.push((dense, keep));
        leak_blocks.push(leaks);
    }
    let defect = block_defect(&dense_blocks, &leak_blocks);

    let mut mat = CMat::zeros(basis.total_dim(), basis.total_dim());
    for k in 0..dim {
        for kp in 0..dim {
            let v = s.get(k, kp);
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for other in 0..dim {
                match mode {
                    Mode::One => mat.set(basis.flat(k, other), basis.flat(kp, other), v),
                    Mode::Two => mat.set(basis.flat(other, k), basis.flat(other, kp), v),
                }
            }
        }
    }
    Ok(TwoModeOperator {
        basis,
        mat,
        unitarity_defect: defect,
        truncation_warning: defect > TRUNCATION_WARN_DEFECT,
    })
}

/// Two-mode squeezer S12(ξ) = exp(ξ a1†a2† − ξ* a1a2). Preserves the
/// photon-number difference k − l.
///
/// Safe range for the 1e-6 defect bound at cutoff ≥ 25: |ξ| ≤ 1.2.
pub fn two_mode_squeeze(xi: C64, basis: BasisDescriptor) -> Result<TwoModeOperator> {
    check_xi(xi, "two-mode squeeze xi")?;
    let cutoff = basis.cutoff();
    let pad = pad_steps(xi.norm(), cutoff, GeneratorKind::TwoModeSqueeze);
    let sys = BlockSystem::two_mode_squeeze(cutoff, pad);
    let (mat, defect) = build_from_system(&sys, xi, basis);
    Ok(TwoModeOperator {
        basis,
        mat,
        unitarity_defect: defect,
        truncation_warning: defect > TRUNCATION_WARN_DEFECT,
    })
}

/// Truncated annihilation operator on one mode. The result is unnormalized;
/// leakage is propagated with a conservative (cutoff + 2) amplification.
pub fn annihilate(mode: Mode, state: &TwoModeState) -> Result<TwoModeState> {
    let basis = state.basis();
    if basis.cutoff() < 1 {
        return Err(Error::CutoffTooSmall {
            cutoff: basis.cutoff(),
            why: "annihilation needs cutoff >= 1".into(),
        });
    }
    let dim = basis.dim();
    let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
    for k in 0..dim {
        for l in 0..dim {
            let v = state.amplitude(k, l);
            if v.norm_sqr() == 0.0 {
                continue;
            }
            match mode {
                Mode::One => {
                    if k >= 1 {
                        amp[basis.flat(k - 1, l)] += (k as f64).sqrt() * v;
                    }
                }
                Mode::Two => {
                    if l >= 1 {
                        amp[basis.flat(k, l - 1)] += (l as f64).sqrt() * v;
                    }
                }
            }
        }
    }
    let norm = vec_norm(&amp);
    if norm < ZERO_STATE_NORM {
        return Err(Error::ZeroState { norm });
    }
    Ok(TwoModeState {
        basis,
        amp,
        leakage: state.leakage() * (basis.cutoff() as f64 + 2.0),
    })
}

/// In-place phase shift exp(iφ n̂) on one mode of a flat amplitude vector.
pub fn apply_phase_inplace(phi: f64, mode: Mode, dim: usize, amp: &mut [C64]) {
    debug_assert_eq!(amp.len(), dim * dim);
    if phi == 0.0 {
        return;
    }
    for k in 0..dim {
        for l in 0..dim {
            let n = match mode {
                Mode::One => k,
                Mode::Two => l,
            } as f64;
            let ang = phi * n;
            amp[k * dim + l] *= C64::new(ang.cos(), ang.sin());
        }
    }
}

/// Matrix-vector application with additive leakage propagation: the norm
/// this application loses to the cutoff joins the state's leakage.
pub fn apply(op: &TwoModeOperator, state: &TwoModeState) -> Result<TwoModeState> {
    check_bases(op.basis, state.basis)?;
    let amp = op.mat.mul_vec(&state.amp);
    let lost = (state.norm().powi(2) - vec_norm(&amp).powi(2)).max(0.0);
    Ok(TwoModeState {
        basis: state.basis,
        amp,
        leakage: state.leakage + lost,
    })
}

/// Operator product a·b (b acts first). The defect of the product is an
/// upper estimate from the factor defects.
pub fn compose(a: &TwoModeOperator, b: &TwoModeOperator) -> Result<TwoModeOperator> {
    check_bases(a.basis, b.basis)?;
    let mat = a.mat.mul(&b.mat);
    let defect = a.unitarity_defect + b.unitarity_defect + 1e-15 * a.basis.total_dim() as f64;
    Ok(TwoModeOperator {
        basis: a.basis,
        mat,
        unitarity_defect: defect,
        truncation_warning: a.truncation_warning || b.truncation_warning,
    })
}

/// Hermitian inner product ⟨a|b⟩.
pub fn inner(a: &TwoModeState, b: &TwoModeState) -> Result<C64> {
    check_bases(a.basis, b.basis)?;
    Ok(vec_dot(&a.amp, &b.amp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_flat_bijection() {
        let b = BasisDescriptor::new(7);
        let mut seen = vec![false; b.total_dim()];
        for k in 0..=7 {
            for l in 0..=7 {
                let i = b.flat(k, l);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(b.unflat(i), (k, l));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn beam_splitter_identity_at_zero() {
        let b = BasisDescriptor::new(5);
        let u = beam_splitter(c(0.0), b);
        assert!(u.matrix().max_abs_diff(&CMat::identity(b.total_dim())) < 1e-14);
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn beam_splitter_balanced_on_single_photon() {
        let b = BasisDescriptor::new(4);
        let u = beam_splitter(c(FRAC_PI_4), b);
        let s = apply(&u, &TwoModeState::fock(b, 1, 0).unwrap()).unwrap();
        let a10 = s.amplitude(1, 0).norm();
        let a01 = s.amplitude(0, 1).norm();
        let isq = 1.0 / 2.0f64.sqrt();
        assert!((a10 - isq).abs() < 1e-12);
        assert!((a01 - isq).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_full_swap() {
        let b = BasisDescriptor::new(4);
        let u = beam_splitter(c(FRAC_PI_2), b);
        let s = apply(&u, &TwoModeState::fock(b, 1, 0).unwrap()).unwrap();
        assert!((s.amplitude(0, 1).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_conserves_total_number_exactly() {
        let b = BasisDescriptor::new(4);
        let u = beam_splitter(C64::new(0.3, 0.4), b);
        for col in 0..b.total_dim() {
            let (k, l) = b.unflat(col);
            for row in 0..b.total_dim() {
                let (m, n) = b.unflat(row);
                if m + n != k + l {
                    assert_eq!(u.matrix().get(row, col), C64::new(0.0, 0.0));
                }
            }
        }
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn phase_shift_eigenphases() {
        let b = BasisDescriptor::new(3);
        let r1 = phase_shift(PI, Mode::One, b);
        let s = apply(&r1, &TwoModeState::fock(b, 1, 0).unwrap()).unwrap();
        assert!((s.amplitude(1, 0) - c(-1.0)).norm() < 1e-14);

        let r2 = phase_shift(FRAC_PI_2, Mode::Two, b);
        let s2 = apply(&r2, &TwoModeState::fock(b, 0, 2).unwrap()).unwrap();
        assert!((s2.amplitude(0, 2) - c(-1.0)).norm() < 1e-14);

        let id = phase_shift(0.0, Mode::One, b);
        assert!(id.matrix().max_abs_diff(&CMat::identity(b.total_dim())) < 1e-15);
    }

    #[test]
    fn two_mode_squeeze_schmidt_amplitudes() {
        // sech(r) tanh(r)^n on |n,n> within 1e-8 for r <= 1.2 at cutoff 25.
        let b = BasisDescriptor::new(25);
        for &r in &[0.4, 0.8, 1.2] {
            let u = two_mode_squeeze(c(r), b).unwrap();
            let s = apply(&u, &TwoModeState::vacuum(b)).unwrap();
            for n in 0..=25 {
                let expect = (1.0 / r.cosh()) * r.tanh().powi(n as i32);
                let got = s.amplitude(n, n);
                assert!(
                    (got.re - expect).abs() < 1e-8 && got.im.abs() < 1e-10,
                    "r={r} n={n}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn two_mode_squeeze_conserves_difference_exactly() {
        let b = BasisDescriptor::new(6);
        let u = two_mode_squeeze(C64::new(0.2, 0.3), b).unwrap();
        for col in 0..b.total_dim() {
            let (k, l) = b.unflat(col);
            for row in 0..b.total_dim() {
                let (m, n) = b.unflat(row);
                if (m as isize - n as isize) != (k as isize - l as isize) {
                    assert_eq!(u.matrix().get(row, col), C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn squeeze_defect_small_in_safe_range() {
        let b = BasisDescriptor::new(25);
        let tms = two_mode_squeeze(c(1.2), b).unwrap();
        assert!(tms.unitarity_defect() <= 1e-6, "{}", tms.unitarity_defect());
        assert!(!tms.truncation_warning());
        let sq = single_mode_squeeze(c(0.6), Mode::One, b).unwrap();
        assert!(sq.unitarity_defect() <= 1e-6, "{}", sq.unitarity_defect());
    }

    #[test]
    fn squeeze_rejects_out_of_range() {
        let b = BasisDescriptor::new(10);
        assert!(matches!(
            single_mode_squeeze(c(3.5), Mode::One, b),
            Err(Error::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            two_mode_squeeze(c(-3.2), b),
            Err(Error::ParameterOutOfRange { .. })
        ));
    }

    #[test]
    fn single_mode_squeeze_identity_and_parity() {
        let b = BasisDescriptor::new(8);
        let id = single_mode_squeeze(c(0.0), Mode::Two, b).unwrap();
        assert!(id.matrix().max_abs_diff(&CMat::identity(b.total_dim())) < 1e-13);

        let u = single_mode_squeeze(c(0.3), Mode::One, b).unwrap();
        for col in 0..b.total_dim() {
            let (k, l) = b.unflat(col);
            for row in 0..b.total_dim() {
                let (m, n) = b.unflat(row);
                // Mode-2 index untouched, mode-1 parity preserved.
                if n != l || (m % 2) != (k % 2) {
                    assert_eq!(u.matrix().get(row, col), C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn single_mode_squeeze_vacuum_ratio_against_higher_cutoff() {
        // Construct at cutoff 60 and 25 and compare the |2>/|0> ratio with
        // the analytic tanh(2r)/sqrt(2).
        let r: f64 = 0.35;
        let expect = (2.0 * r).tanh() / 2.0f64.sqrt();
        for &cut in &[25usize, 60] {
            let b = BasisDescriptor::new(cut);
            let u = single_mode_squeeze(c(r), Mode::One, b).unwrap();
            let s = apply(&u, &TwoModeState::vacuum(b)).unwrap();
            let ratio = s.amplitude(2, 0) / s.amplitude(0, 0);
            assert!((ratio.re - expect).abs() < 1e-10, "cutoff {cut}");
        }
    }

    #[test]
    fn bogoliubov_relation_on_interior_block() {
        // S a S† = a cosh 2|ξ| − e^{iθ} a† sinh 2|ξ| on the interior. The
        // product of two cropped operators carries round trips above the
        // cutoff, so the interior window has to sit well below it.
        let b = BasisDescriptor::new(36);
        let dim = b.dim();
        let xi = C64::from_polar(0.15, 0.9);
        let s = single_mode_squeeze(xi, Mode::One, b).unwrap();
        // Dense a on mode 1.
        let mut a1 = CMat::zeros(b.total_dim(), b.total_dim());
        for k in 1..dim {
            for l in 0..dim {
                a1.set(b.flat(k - 1, l), b.flat(k, l), c((k as f64).sqrt()));
            }
        }
        let lhs = s.matrix().mul(&a1).mul(&s.matrix().adjoint());
        let ch = (2.0 * xi.norm()).cosh();
        let sh = (2.0 * xi.norm()).sinh();
        let phase = C64::from_polar(1.0, xi.arg());
        let mut rhs = CMat::zeros(b.total_dim(), b.total_dim());
        for k in 0..dim {
            for l in 0..dim {
                if k >= 1 {
                    let v = rhs.get(b.flat(k - 1, l), b.flat(k, l));
                    rhs.set(b.flat(k - 1, l), b.flat(k, l), v + ch * (k as f64).sqrt());
                }
                if k + 1 < dim {
                    let v = rhs.get(b.flat(k + 1, l), b.flat(k, l));
                    rhs.set(
                        b.flat(k + 1, l),
                        b.flat(k, l),
                        v - phase * sh * ((k + 1) as f64).sqrt(),
                    );
                }
            }
        }
        // Compare on the interior block k,l <= 5.
        let mut max_diff = 0.0f64;
        for k in 0..=5 {
            for l in 0..=5 {
                for m in 0..=5 {
                    for n in 0..=5 {
                        let d = (lhs.get(b.flat(m, n), b.flat(k, l))
                            - rhs.get(b.flat(m, n), b.flat(k, l)))
                        .norm();
                        max_diff = max_diff.max(d);
                    }
                }
            }
        }
        assert!(max_diff < 1e-10, "Bogoliubov residual {max_diff}");
    }

    #[test]
    fn annihilate_ladder() {
        let b = BasisDescriptor::new(4);
        let s = annihilate(Mode::One, &TwoModeState::fock(b, 1, 0).unwrap()).unwrap();
        assert!((s.amplitude(0, 0) - c(1.0)).norm() < 1e-15);

        let s2 = annihilate(Mode::One, &TwoModeState::fock(b, 2, 0).unwrap()).unwrap();
        assert!((s2.amplitude(1, 0) - c(2.0f64.sqrt())).norm() < 1e-15);

        assert!(matches!(
            annihilate(Mode::Two, &TwoModeState::vacuum(b)),
            Err(Error::ZeroState { .. })
        ));
    }

    #[test]
    fn apply_compose_inner_basics() {
        let b = BasisDescriptor::new(6);
        let id = TwoModeOperator::identity(b);
        let s = TwoModeState::fock(b, 2, 1).unwrap();
        let s2 = apply(&id, &s).unwrap();
        assert!((inner(&s, &s2).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((inner(&s, &s).unwrap().re - 1.0).abs() < 1e-15);

        let u = beam_splitter(C64::new(0.4, 0.1), b);
        let uu = compose(&u, &u.adjoint()).unwrap();
        assert!(uu.matrix().max_abs_diff(&CMat::identity(b.total_dim())) < 1e-12);

        let other = BasisDescriptor::new(5);
        assert!(matches!(
            inner(&s, &TwoModeState::vacuum(other)),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn apply_preserves_norm_within_defect_and_leakage() {
        let b = BasisDescriptor::new(25);
        let u = two_mode_squeeze(c(0.8), b).unwrap();
        let s = apply(&u, &TwoModeState::vacuum(b)).unwrap();
        let budget = u.unitarity_defect() + s.leakage();
        assert!((1.0 - s.norm().powi(2)) <= budget + 1e-12);
        // Normalized bookkeeping: amp² + leakage ~ 1.
        assert!((s.norm().powi(2) + s.leakage() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn with_cutoff_tracks_cropped_weight() {
        let b = BasisDescriptor::new(20);
        let u = two_mode_squeeze(c(0.9), b).unwrap();
        let s = apply(&u, &TwoModeState::vacuum(b)).unwrap();
        let t = s.with_cutoff(10);
        assert!((t.norm().powi(2) + t.leakage() - 1.0).abs() < 1e-9);
        assert!(t.leakage() > s.leakage());
        let back = t.with_cutoff(20);
        assert_eq!(back.basis().cutoff(), 20);
    }
}
