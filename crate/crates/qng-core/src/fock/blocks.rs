//! Block-diagonal exponentials of the quadratic generators.
//!
//! Every elementary Gaussian unitary used here is exp(K) with K
//! anti-Hermitian and ladder-like: K couples each basis state to at most two
//! neighbours inside an invariant chain (beam splitter: fixed total photon
//! number; two-mode squeezer: fixed photon-number difference; single-mode
//! squeezer: fixed parity). After pulling out the parameter phase and a
//! diagonal i^j twist, each chain becomes a real symmetric tridiagonal
//! matrix t·T̂ with zero diagonal, so
//!
//!   exp(K) = Q · W exp(-i t Λ) W^T · Q†,   T̂ = W Λ W^T,
//!
//! where Q is a diagonal phase, t = |parameter| and (W, Λ) do not depend on
//! the parameter at all. The eigensystems are computed once per cutoff and
//! reused for every parameter value, which is what makes the outer
//! optimization loops affordable.
//!
//! Squeezer chains are infinite and have to be truncated; they are built on
//! a padded chain and cropped back, so matrix elements well inside the
//! requested cutoff agree with the untruncated operator while the norm lost
//! near the cutoff is reported as leakage. Beam-splitter chains close
//! exactly on the truncated space and need no padding.

use num_complex::Complex64 as C64;

use crate::linalg::sym_tridiag_eigen;

/// One invariant chain of a ladder generator.
#[derive(Debug, Clone)]
pub struct LadderBlock {
    /// Flat indices (into the cropped state vector) of the first `keep`
    /// chain members; chain positions >= keep lie beyond the cutoff.
    pub indices: Vec<usize>,
    /// Chain length including padding.
    pub len: usize,
    /// First `keep` rows of the eigenvector matrix W (row-major keep x len).
    pub w_rows: Vec<f64>,
    /// Eigenvalues of the unit-parameter chain.
    pub lam: Vec<f64>,
}

impl LadderBlock {
    #[inline]
    pub fn keep(&self) -> usize {
        self.indices.len()
    }
}

/// The generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// tau a1†a2 - tau* a1 a2†; chains of fixed total photon number.
    BeamSplitter,
    /// xi a1†a2† - xi* a1 a2; chains of fixed photon-number difference.
    TwoModeSqueeze,
    /// xi (a†)² - xi* a²; single-mode chains of fixed parity (built on the
    /// single-mode space, tensored at apply time).
    SingleModeSqueeze,
}

/// Cached block system for one generator family at one cutoff.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub kind: GeneratorKind,
    /// Cutoff of the cropped space the indices refer to.
    pub cutoff: usize,
    pub blocks: Vec<LadderBlock>,
}

/// Padding length (in chain steps) that keeps interior matrix elements of a
/// truncated squeezer converged for parameters up to `t_cap` in magnitude.
///
/// The crop error decays like tanh(z)^(2·pad) with z the per-step
/// amplification, so pad is sized for ~1e-12 and clamped to a hard ceiling;
/// beyond the ceiling the constructors report the defect honestly instead
/// of letting the chains grow without bound.
pub fn pad_steps(t_cap: f64, cutoff: usize, kind: GeneratorKind) -> usize {
    let z = match kind {
        GeneratorKind::BeamSplitter => return 0,
        GeneratorKind::TwoModeSqueeze => t_cap.abs(),
        GeneratorKind::SingleModeSqueeze => 2.0 * t_cap.abs(),
    };
    let decay = -z.tanh().max(1e-12).ln();
    let steps = (14.0 / decay.max(0.015)).ceil() as usize;
    steps.clamp(12, 3 * (cutoff + 1) + 64)
}

fn build_chain(indices: Vec<usize>, couplings: &[f64]) -> LadderBlock {
    let len = couplings.len() + 1;
    debug_assert!(indices.len() <= len);
    let keep = indices.len();
    let (lam, z) = sym_tridiag_eigen(&vec![0.0; len], couplings);
    let mut w_rows = vec![0.0f64; keep * len];
    for i in 0..keep {
        w_rows[i * len..(i + 1) * len].copy_from_slice(&z[i * len..(i + 1) * len]);
    }
    LadderBlock {
        indices,
        len,
        w_rows,
        lam,
    }
}

/// q_j = i^j e^{i j chi}: the diagonal twist that realifies a chain.
#[inline]
fn chain_phase(j: usize, chi: f64) -> C64 {
    let ang = j as f64 * (std::f64::consts::FRAC_PI_2 + chi);
    C64::new(ang.cos(), ang.sin())
}

/// Apply Q W e^{-itΛ} W^T Q† to the kept prefix of a chain, in place.
/// `vals` holds the kept amplitudes; amplitudes beyond the crop are implied
/// zero on input and dropped on output. Returns the norm² lost to the crop.
fn transform_chain(
    block: &LadderBlock,
    t: f64,
    chi: f64,
    vals: &mut [C64],
    y: &mut Vec<C64>,
) -> f64 {
    let keep = block.keep();
    let len = block.len;
    debug_assert_eq!(vals.len(), keep);
    let mut in_norm = 0.0;
    for (j, v) in vals.iter_mut().enumerate() {
        *v *= chain_phase(j, chi).conj();
        in_norm += v.norm_sqr();
    }
    if in_norm == 0.0 {
        return 0.0;
    }
    y.clear();
    y.resize(len, C64::new(0.0, 0.0));
    for (j, &zj) in vals.iter().enumerate() {
        if zj.norm_sqr() == 0.0 {
            continue;
        }
        let row = &block.w_rows[j * len..(j + 1) * len];
        for (yk, &wjk) in y.iter_mut().zip(row.iter()) {
            *yk += zj * wjk;
        }
    }
    for (yk, &lk) in y.iter_mut().zip(block.lam.iter()) {
        let ang = -t * lk;
        *yk *= C64::new(ang.cos(), ang.sin());
    }
    let mut out_norm = 0.0;
    for (j, v) in vals.iter_mut().enumerate() {
        let row = &block.w_rows[j * len..(j + 1) * len];
        let mut acc = C64::new(0.0, 0.0);
        for (&wjk, &yk) in row.iter().zip(y.iter()) {
            acc += wjk * yk;
        }
        acc *= chain_phase(j, chi);
        out_norm += acc.norm_sqr();
        *v = acc;
    }
    (in_norm - out_norm).max(0.0)
}

fn split_param(param: C64, adjoint: bool) -> (f64, f64) {
    let t = if adjoint { -param.norm() } else { param.norm() };
    let chi = if param.norm() == 0.0 {
        0.0
    } else {
        param.arg()
    };
    (t, chi)
}

impl BlockSystem {
    /// Beam-splitter chains at the requested cutoff (exactly unitary).
    pub fn beam_splitter(cutoff: usize) -> Self {
        let dim = cutoff + 1;
        let mut blocks = Vec::with_capacity(2 * cutoff + 1);
        for total in 0..=(2 * cutoff) {
            let k_min = total.saturating_sub(cutoff);
            let k_max = total.min(cutoff);
            let indices: Vec<usize> = (k_min..=k_max).map(|k| k * dim + (total - k)).collect();
            // Chain position j holds (k, l) = (k_min + j, total - k); the
            // upward coupling a1†a2 carries sqrt((k+1) l).
            let couplings: Vec<f64> = (k_min..k_max)
                .map(|k| (((k + 1) * (total - k)) as f64).sqrt())
                .collect();
            blocks.push(build_chain(indices, &couplings));
        }
        Self {
            kind: GeneratorKind::BeamSplitter,
            cutoff,
            blocks,
        }
    }

    /// Two-mode squeezer chains, padded by `pad` pair-steps and cropped to
    /// the cutoff.
    pub fn two_mode_squeeze(cutoff: usize, pad: usize) -> Self {
        let dim = cutoff + 1;
        let mut blocks = Vec::new();
        for diff in -(cutoff as isize)..=(cutoff as isize) {
            let d = diff.unsigned_abs();
            let keep = cutoff + 1 - d;
            let len = keep + pad;
            let indices: Vec<usize> = (0..keep)
                .map(|j| {
                    if diff >= 0 {
                        (j + d) * dim + j
                    } else {
                        j * dim + (j + d)
                    }
                })
                .collect();
            let couplings: Vec<f64> = (0..len - 1)
                .map(|j| (((j + d + 1) * (j + 1)) as f64).sqrt())
                .collect();
            blocks.push(build_chain(indices, &couplings));
        }
        Self {
            kind: GeneratorKind::TwoModeSqueeze,
            cutoff,
            blocks,
        }
    }

    /// Single-mode squeezer chains on the single-mode space {0..cutoff},
    /// padded by `pad` steps (each step spans two Fock levels).
    pub fn single_mode_squeeze(cutoff: usize, pad: usize) -> Self {
        let mut blocks = Vec::new();
        for parity in 0..=1usize.min(cutoff) {
            let keep = (cutoff - parity) / 2 + 1;
            let len = keep + pad;
            let indices: Vec<usize> = (0..keep).map(|j| 2 * j + parity).collect();
            let couplings: Vec<f64> = (0..len - 1)
                .map(|j| {
                    let n = (2 * j + parity) as f64;
                    ((n + 1.0) * (n + 2.0)).sqrt()
                })
                .collect();
            blocks.push(build_chain(indices, &couplings));
        }
        Self {
            kind: GeneratorKind::SingleModeSqueeze,
            cutoff,
            blocks,
        }
    }

    /// Apply exp(K) with the given parameter to a flat state vector in
    /// place; `adjoint` applies exp(-K). Returns the norm² lost to the crop.
    ///
    /// For `SingleModeSqueeze` the state must be a single-mode vector; use
    /// [`apply_single_mode`] for the tensor action on a two-mode state.
    pub fn apply(&self, param: C64, adjoint: bool, state: &mut [C64]) -> f64 {
        let (t, chi) = split_param(param, adjoint);
        let mut lost = 0.0;
        let mut gather: Vec<C64> = Vec::new();
        let mut y: Vec<C64> = Vec::new();
        for block in &self.blocks {
            let keep = block.keep();
            if keep == 0 {
                continue;
            }
            gather.clear();
            gather.extend(block.indices.iter().map(|&i| state[i]));
            lost += transform_chain(block, t, chi, &mut gather, &mut y);
            for (j, &idx) in block.indices.iter().enumerate() {
                state[idx] = gather[j];
            }
        }
        lost
    }

    /// Dense cropped matrix of exp(K) on the space the indices refer to
    /// (two-mode flat space for BS/TMS, single-mode for SQ1), together with
    /// the per-column image leakage (norm² pushed beyond the crop).
    pub fn dense(
        &self,
        param: C64,
        adjoint: bool,
        space_dim: usize,
    ) -> (crate::linalg::CMat, Vec<f64>) {
        let (t, chi) = split_param(param, adjoint);
        let mut mat = crate::linalg::CMat::zeros(space_dim, space_dim);
        let mut col_leak = vec![0.0f64; space_dim];
        for block in &self.blocks {
            let keep = block.keep();
            if keep == 0 {
                continue;
            }
            let dense = block_dense(block, t, chi);
            for (bj, &cj) in block.indices.iter().enumerate() {
                let mut kept_norm = 0.0;
                for (bi, &ci) in block.indices.iter().enumerate() {
                    let v = dense[bi * keep + bj];
                    kept_norm += v.norm_sqr();
                    mat.set(ci, cj, v);
                }
                col_leak[cj] = (1.0 - kept_norm).max(0.0);
            }
        }
        (mat, col_leak)
    }
}

/// Dense kept x kept matrix of one chain: crop(Q W e^{-itΛ} W^T Q†).
pub fn block_dense(block: &LadderBlock, t: f64, chi: f64) -> Vec<C64> {
    let keep = block.keep();
    let len = block.len;
    let mut out = vec![C64::new(0.0, 0.0); keep * keep];
    for col in 0..keep {
        let wc = &block.w_rows[col * len..(col + 1) * len];
        for row in 0..keep {
            let wr = &block.w_rows[row * len..(row + 1) * len];
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..len {
                let ang = -t * block.lam[k];
                acc += wr[k] * wc[k] * C64::new(ang.cos(), ang.sin());
            }
            out[row * keep + col] = chain_phase(row, chi) * acc * chain_phase(col, chi).conj();
        }
    }
    out
}

/// Apply a single-mode block system along one mode of a two-mode state.
/// `mode` is 1 or 2, `dim` the per-mode dimension. Returns lost norm².
pub fn apply_single_mode(
    sys: &BlockSystem,
    param: C64,
    adjoint: bool,
    mode: u8,
    dim: usize,
    state: &mut [C64],
) -> f64 {
    debug_assert_eq!(sys.kind, GeneratorKind::SingleModeSqueeze);
    debug_assert_eq!(state.len(), dim * dim);
    let (t, chi) = split_param(param, adjoint);
    let mut lost = 0.0;
    let mut gather: Vec<C64> = Vec::new();
    let mut y: Vec<C64> = Vec::new();
    for other in 0..dim {
        let flat = |n: usize| -> usize {
            if mode == 1 {
                n * dim + other
            } else {
                other * dim + n
            }
        };
        for block in &sys.blocks {
            let keep = block.keep();
            if keep == 0 {
                continue;
            }
            gather.clear();
            gather.extend(block.indices.iter().map(|&n| state[flat(n)]));
            lost += transform_chain(block, t, chi, &mut gather, &mut y);
            for (j, &n) in block.indices.iter().enumerate() {
                state[flat(n)] = gather[j];
            }
        }
    }
    lost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_norm;

    #[test]
    fn beam_splitter_single_excitation_rotation() {
        let sys = BlockSystem::beam_splitter(3);
        let dim = 4;
        let tau = 0.37;
        let mut state = vec![C64::new(0.0, 0.0); dim * dim];
        state[1] = C64::new(1.0, 0.0); // |0,1>
        let lost = sys.apply(C64::new(tau, 0.0), false, &mut state);
        assert!(lost < 1e-15);
        // U|0,1> = cos tau |0,1> + sin tau |1,0>.
        assert!((state[1].re - tau.cos()).abs() < 1e-14);
        assert!((state[dim].re - tau.sin()).abs() < 1e-14);
        assert!((vec_norm(&state) - 1.0).abs() < 1e-14);

        let mut back = state.clone();
        sys.apply(C64::new(tau, 0.0), true, &mut back);
        assert!((back[1].re - 1.0).abs() < 1e-13);
        assert!(back[dim].norm() < 1e-13);
    }

    #[test]
    fn beam_splitter_swap_at_half_pi() {
        let sys = BlockSystem::beam_splitter(4);
        let dim = 5;
        let mut state = vec![C64::new(0.0, 0.0); dim * dim];
        state[dim] = C64::new(1.0, 0.0); // |1,0>
        sys.apply(
            C64::new(std::f64::consts::FRAC_PI_2, 0.0),
            false,
            &mut state,
        );
        // |1,0> -> -|0,1> at tau = pi/2.
        assert!((state[1].norm() - 1.0).abs() < 1e-13);
        assert!(state[dim].norm() < 1e-13);
    }

    #[test]
    fn two_mode_squeeze_vacuum_schmidt() {
        // exp(xi (a1†a2† - a1 a2)) |00> has amplitudes sech(xi) tanh(xi)^n.
        let cutoff = 20;
        let xi = 0.8;
        let pad = pad_steps(1.2, cutoff, GeneratorKind::TwoModeSqueeze);
        let sys = BlockSystem::two_mode_squeeze(cutoff, pad);
        let dim = cutoff + 1;
        let mut state = vec![C64::new(0.0, 0.0); dim * dim];
        state[0] = C64::new(1.0, 0.0);
        sys.apply(C64::new(xi, 0.0), false, &mut state);
        let sech = 1.0 / xi.cosh();
        for n in 0..=cutoff {
            let expect = sech * xi.tanh().powi(n as i32);
            let got = state[n * dim + n];
            assert!(
                (got.re - expect).abs() < 1e-10 && got.im.abs() < 1e-12,
                "n={n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn single_mode_squeeze_vacuum_ratio() {
        // S(xi)|0>: amplitude(|2>)/amplitude(|0>) = tanh(2 xi)/sqrt(2).
        let cutoff = 24;
        let xi = 0.3;
        let pad = pad_steps(0.65, cutoff, GeneratorKind::SingleModeSqueeze);
        let sys = BlockSystem::single_mode_squeeze(cutoff, pad);
        let dim = cutoff + 1;
        let mut state = vec![C64::new(0.0, 0.0); dim * dim];
        state[0] = C64::new(1.0, 0.0);
        apply_single_mode(&sys, C64::new(xi, 0.0), false, 1, dim, &mut state);
        let ratio = state[2 * dim] / state[0];
        let expect = (2.0 * xi).tanh() / 2.0f64.sqrt();
        assert!((ratio.re - expect).abs() < 1e-12, "{ratio} vs {expect}");
        assert!(ratio.im.abs() < 1e-13);

        // Same squeeze on mode 2.
        let mut state2 = vec![C64::new(0.0, 0.0); dim * dim];
        state2[0] = C64::new(1.0, 0.0);
        apply_single_mode(&sys, C64::new(xi, 0.0), false, 2, dim, &mut state2);
        let ratio2 = state2[2] / state2[0];
        assert!((ratio2.re - expect).abs() < 1e-12);
    }

    #[test]
    fn adjoint_inverts_complex_parameter() {
        // A state supported far below the cutoff sees the cropped squeezer
        // as unitary, so forward followed by adjoint is the identity up to
        // the amplitude the forward pass pushed into the crop.
        let cutoff = 20;
        let sys = BlockSystem::two_mode_squeeze(
            cutoff,
            pad_steps(1.2, cutoff, GeneratorKind::TwoModeSqueeze),
        );
        let dim = cutoff + 1;
        let param = C64::from_polar(0.2, 1.1);
        let mut state = vec![C64::new(0.0, 0.0); dim * dim];
        state[0] = C64::new(0.8, 0.0);
        state[dim + 1] = C64::new(0.0, 0.6);
        let before = state.clone();
        sys.apply(param, false, &mut state);
        sys.apply(param, true, &mut state);
        for (a, b) in state.iter().zip(before.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dense_matches_apply() {
        let cutoff = 6;
        let dim = cutoff + 1;
        let pad = pad_steps(1.2, cutoff, GeneratorKind::TwoModeSqueeze);
        let sys = BlockSystem::two_mode_squeeze(cutoff, pad);
        let param = C64::from_polar(0.5, -0.7);
        let (mat, col_leak) = sys.dense(param, false, dim * dim);
        // Column = apply on basis vector.
        for col in 0..dim * dim {
            let mut e = vec![C64::new(0.0, 0.0); dim * dim];
            e[col] = C64::new(1.0, 0.0);
            let lost = sys.apply(param, false, &mut e);
            for row in 0..dim * dim {
                assert!((mat.get(row, col) - e[row]).norm() < 1e-13);
            }
            assert!((lost - col_leak[col]).abs() < 1e-12);
        }
    }
}
