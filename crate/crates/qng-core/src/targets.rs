//! Target-state families for the certification thresholds.
//!
//! Squeezing convention: the user-facing parameter `r` of the
//! photon-subtracted family is the standard squeezing parameter, i.e. the
//! Bogoliubov factors of the squeezers S₁(r)S₂(−r) are cosh r and sinh r.
//! Since the elementary operator S(ξ) = exp(ξ(a†)² − ξ*a²) carries factors
//! cosh 2|ξ|, the generator coefficients passed down are ξ = ±r/2. With
//! this normalization the single-subtraction core state is exactly
//! cos φ |1,0⟩ − sin φ |0,1⟩ and a Fock cutoff of ~25 faithfully represents
//! every r ≤ 0.7 target.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::blocks::{apply_single_mode, pad_steps, BlockSystem, GeneratorKind};
use crate::fock::{BasisDescriptor, TwoModeState, XI_MAX, ZERO_STATE_NORM};

/// Leakage budget for auto-selected cutoffs.
pub const TARGET_LEAKAGE: f64 = 1e-8;
/// Largest cutoff the auto-selection will try.
pub const MAX_AUTO_CUTOFF: usize = 160;

/// cos θ |0,0⟩ + sin θ |n,n⟩, normalized exactly.
pub fn fock_pair(theta: f64, n: usize, basis: BasisDescriptor) -> Result<TwoModeState> {
    if n > basis.cutoff() {
        return Err(Error::CutoffTooSmall {
            cutoff: basis.cutoff(),
            why: format!("fock_pair needs n = {n} within the basis"),
        });
    }
    let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
    amp[basis.flat(0, 0)] = C64::new(theta.cos(), 0.0);
    amp[basis.flat(n, n)] += C64::new(theta.sin(), 0.0);
    Ok(TwoModeState::from_amplitudes(basis, amp, 0.0).normalized())
}

/// cos θ |0,2n⟩ + sin θ |2n,0⟩.
pub fn noon_like(theta: f64, n: usize, basis: BasisDescriptor) -> Result<TwoModeState> {
    if 2 * n > basis.cutoff() {
        return Err(Error::CutoffTooSmall {
            cutoff: basis.cutoff(),
            why: format!("noon_like needs 2n = {} within the basis", 2 * n),
        });
    }
    let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
    amp[basis.flat(0, 2 * n)] = C64::new(theta.cos(), 0.0);
    amp[basis.flat(2 * n, 0)] += C64::new(theta.sin(), 0.0);
    Ok(TwoModeState::from_amplitudes(basis, amp, 0.0).normalized())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CatParity {
    Even,
    Odd,
}

/// Normalized single-mode cat state |α⟩ ± |−α⟩.
#[derive(Debug, Clone)]
pub struct CatState {
    pub amp: Vec<C64>,
    pub cutoff: usize,
    /// Set when the α → 0 odd cat degenerated to |1⟩.
    pub degenerate: bool,
}

/// Smallest cutoff with coherent-tail weight below 1e-10, floor 15.
fn cat_auto_cutoff(alpha: f64) -> usize {
    let a2 = alpha * alpha;
    let mut term = (-a2).exp(); // Poisson p(0)
    let mut tail = 1.0 - term;
    let mut n = 0usize;
    while tail > 1e-10 && n < MAX_AUTO_CUTOFF {
        n += 1;
        term *= a2 / n as f64;
        tail -= term;
        tail = tail.max(0.0);
    }
    n.max(15)
}

/// Cat state amplitudes on {0..cutoff}; auto-raises the cutoff when no hint
/// is given.
pub fn cat_state(alpha: f64, parity: CatParity, cutoff: Option<usize>) -> Result<CatState> {
    if !(alpha >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            what: "cat alpha",
            value: alpha,
            allowed: "alpha >= 0".into(),
        });
    }
    let cutoff = cutoff.unwrap_or_else(|| cat_auto_cutoff(alpha));
    let mut amp = vec![C64::new(0.0, 0.0); cutoff + 1];
    if alpha == 0.0 {
        return Ok(match parity {
            CatParity::Even => {
                amp[0] = C64::new(1.0, 0.0);
                CatState {
                    amp,
                    cutoff,
                    degenerate: false,
                }
            }
            // The odd cat vanishes at α = 0; its normalized limit is |1⟩.
            CatParity::Odd => {
                amp[1] = C64::new(1.0, 0.0);
                CatState {
                    amp,
                    cutoff,
                    degenerate: true,
                }
            }
        });
    }
    // Coherent amplitudes α^n/sqrt(n!) with the odd/even half cancelled.
    let keep = match parity {
        CatParity::Even => 0,
        CatParity::Odd => 1,
    };
    let mut coeff = 1.0f64;
    let mut norm2 = 0.0;
    for n in 0..=cutoff {
        if n > 0 {
            coeff *= alpha / (n as f64).sqrt();
        }
        if n % 2 == keep {
            amp[n] = C64::new(coeff, 0.0);
            norm2 += coeff * coeff;
        }
    }
    let s = 1.0 / norm2.sqrt();
    for a in amp.iter_mut() {
        *a *= s;
    }
    Ok(CatState {
        amp,
        cutoff,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridVariant {
    One,
    Two,
}

/// Hybrid entangled state cos θ |0⟩|cat_a⟩ + sin θ |1⟩|cat_b⟩ with
/// (a, b) = (+, −) for variant 1 and (−, +) for variant 2. The two branches
/// are orthogonal, so normalization is exact.
pub fn hybrid(
    variant: HybridVariant,
    theta: f64,
    alpha: f64,
    basis: BasisDescriptor,
) -> Result<TwoModeState> {
    let needed = cat_auto_cutoff(alpha);
    if basis.cutoff() < needed {
        return Err(Error::CutoffTooSmall {
            cutoff: basis.cutoff(),
            why: format!("hybrid cat tails need cutoff >= {needed}"),
        });
    }
    let (p0, p1) = match variant {
        HybridVariant::One => (CatParity::Even, CatParity::Odd),
        HybridVariant::Two => (CatParity::Odd, CatParity::Even),
    };
    let cat0 = cat_state(alpha, p0, Some(basis.cutoff()))?;
    let cat1 = cat_state(alpha, p1, Some(basis.cutoff()))?;
    let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
    for (l, &c) in cat0.amp.iter().enumerate() {
        amp[basis.flat(0, l)] = theta.cos() * c;
    }
    for (l, &c) in cat1.amp.iter().enumerate() {
        amp[basis.flat(1, l)] += theta.sin() * c;
    }
    Ok(TwoModeState::from_amplitudes(basis, amp, 0.0).normalized())
}

/// Hybrid state on its auto-selected basis.
pub fn hybrid_auto(variant: HybridVariant, theta: f64, alpha: f64) -> Result<TwoModeState> {
    hybrid(
        variant,
        theta,
        alpha,
        BasisDescriptor::new(cat_auto_cutoff(alpha)),
    )
}

fn check_subtraction_args(m: usize, phis: &[f64], r: f64) -> Result<()> {
    if !(m == 1 || m == 2) {
        return Err(Error::ParameterOutOfRange {
            what: "subtraction count m",
            value: m as f64,
            allowed: "m in {1, 2}".into(),
        });
    }
    if phis.len() != m {
        return Err(Error::ParameterOutOfRange {
            what: "subtraction angles",
            value: phis.len() as f64,
            allowed: format!("exactly {m} angles"),
        });
    }
    if !(r.abs() / 2.0 <= XI_MAX) {
        return Err(Error::ParameterOutOfRange {
            what: "squeezing r",
            value: r,
            allowed: format!("|r| <= {}", 2.0 * XI_MAX),
        });
    }
    Ok(())
}

/// m-photon subtracted two-mode squeezed state
/// Π_k (a₁ cos φ_k + a₂ sin φ_k) · S₁(r) S₂(−r) |0,0⟩, normalized.
///
/// Construction happens on an internally padded basis and is cropped back,
/// so the returned leakage reflects the true tail above the cutoff.
pub fn photon_subtracted(
    m: usize,
    phis: &[f64],
    r: f64,
    basis: BasisDescriptor,
) -> Result<TwoModeState> {
    check_subtraction_args(m, phis, r)?;
    let xi = r / 2.0;
    // Internal construction cutoff: far enough above the requested one that
    // the cropped amplitudes are converged.
    let extra = 2 * pad_steps(
        xi.abs().max(0.05),
        basis.cutoff(),
        GeneratorKind::SingleModeSqueeze,
    );
    let c_int = basis.cutoff() + extra.max(16);
    let dim_int = c_int + 1;
    let sys = BlockSystem::single_mode_squeeze(
        c_int,
        pad_steps(xi.abs().max(0.05), c_int, GeneratorKind::SingleModeSqueeze),
    );
    let mut amp = vec![C64::new(0.0, 0.0); dim_int * dim_int];
    amp[0] = C64::new(1.0, 0.0);
    let mut abs_leak = 0.0;
    abs_leak += apply_single_mode(&sys, C64::new(xi, 0.0), false, 1, dim_int, &mut amp);
    abs_leak += apply_single_mode(&sys, C64::new(-xi, 0.0), false, 2, dim_int, &mut amp);

    // Mode-selective subtractions, done directly on the amplitudes.
    for &phi in phis {
        let (c, s) = (phi.cos(), phi.sin());
        let mut next = vec![C64::new(0.0, 0.0); dim_int * dim_int];
        for k in 0..dim_int {
            for l in 0..dim_int {
                let mut acc = C64::new(0.0, 0.0);
                if k + 1 < dim_int {
                    acc += c * ((k + 1) as f64).sqrt() * amp[(k + 1) * dim_int + l];
                }
                if l + 1 < dim_int {
                    acc += s * ((l + 1) as f64).sqrt() * amp[k * dim_int + l + 1];
                }
                next[k * dim_int + l] = acc;
            }
        }
        amp = next;
        let norm2: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
        if norm2.sqrt() < ZERO_STATE_NORM {
            return Err(Error::ZeroState { norm: norm2.sqrt() });
        }
        // Each subtraction can amplify above-cutoff weight by at most ~n.
        abs_leak *= c_int as f64 + 2.0;
    }

    let inner = TwoModeState::from_amplitudes(BasisDescriptor::new(c_int), amp, abs_leak);
    let out = inner.with_cutoff(basis.cutoff()).normalized();
    if out.leakage() > 1e-4 {
        return Err(Error::CutoffTooSmall {
            cutoff: basis.cutoff(),
            why: format!(
                "photon-subtracted state keeps leakage {:.2e} at this cutoff",
                out.leakage()
            ),
        });
    }
    Ok(out)
}

/// Photon-subtracted state on an auto-selected basis meeting the
/// [`TARGET_LEAKAGE`] budget.
pub fn photon_subtracted_auto(m: usize, phis: &[f64], r: f64) -> Result<TwoModeState> {
    let mut cutoff = 25usize;
    loop {
        let basis = BasisDescriptor::new(cutoff);
        match photon_subtracted(m, phis, r, basis) {
            Ok(s) if s.leakage() <= TARGET_LEAKAGE => return Ok(s),
            Ok(_) | Err(Error::CutoffTooSmall { .. }) if cutoff < MAX_AUTO_CUTOFF => {
                cutoff += 5;
            }
            Ok(s) => {
                return Err(Error::CutoffTooSmall {
                    cutoff,
                    why: format!("leakage {:.2e} still above budget", s.leakage()),
                })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Core state |ψ̃_m⟩ with S₁(r)S₂(−r)|ψ̃_m⟩ equal to the photon-subtracted
/// state: the finite Fock superposition left after commuting the
/// subtraction operators through the squeezers.
///
/// For m = 1: cos φ sinh r |1,0⟩ − sin φ sinh r |0,1⟩ (normalized).
/// For m = 2: c₀₀|0,0⟩ + c₁₁|1,1⟩ + c₂₀|2,0⟩ + c₀₂|0,2⟩ with
///   c₀₀ = cosh r sinh r cos(φ₁+φ₂),  c₁₁ = −sinh²r sin(φ₁+φ₂),
///   c₂₀ = √2 sinh²r cos φ₁ cos φ₂,   c₀₂ = √2 sinh²r sin φ₁ sin φ₂.
pub fn core_state(m: usize, phis: &[f64], r: f64) -> Result<TwoModeState> {
    check_subtraction_args(m, phis, r)?;
    let sh = r.sinh();
    let ch = r.cosh();
    match m {
        1 => {
            let basis = BasisDescriptor::new(1);
            let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
            amp[basis.flat(1, 0)] = C64::new(phis[0].cos() * sh, 0.0);
            amp[basis.flat(0, 1)] = C64::new(-phis[0].sin() * sh, 0.0);
            let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < ZERO_STATE_NORM {
                return Err(Error::ZeroState { norm });
            }
            Ok(TwoModeState::from_amplitudes(basis, amp, 0.0).normalized())
        }
        2 => {
            let (p1, p2) = (phis[0], phis[1]);
            let basis = BasisDescriptor::new(2);
            let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
            amp[basis.flat(0, 0)] = C64::new(ch * sh * (p1 + p2).cos(), 0.0);
            amp[basis.flat(1, 1)] = C64::new(-sh * sh * (p1 + p2).sin(), 0.0);
            amp[basis.flat(2, 0)] = C64::new(2.0f64.sqrt() * sh * sh * p1.cos() * p2.cos(), 0.0);
            amp[basis.flat(0, 2)] = C64::new(2.0f64.sqrt() * sh * sh * p1.sin() * p2.sin(), 0.0);
            let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < ZERO_STATE_NORM {
                return Err(Error::ZeroState { norm });
            }
            Ok(TwoModeState::from_amplitudes(basis, amp, 0.0).normalized())
        }
        _ => unreachable!(),
    }
}

/// Target family selector mirroring the JSON run-configuration schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FockPair,
    NoonLike,
    Hybrid1,
    Hybrid2,
    PhotonSubtracted,
}

/// Declarative target description; family-specific fields must be present
/// exactly when the family uses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

impl TargetSpec {
    pub fn fock_pair(theta: f64, n: usize) -> Self {
        Self {
            family: Family::FockPair,
            theta: Some(theta),
            n: Some(n),
            alpha: None,
            r: None,
            phis: None,
            m: None,
            cutoff: None,
        }
    }

    pub fn noon_like(theta: f64, n: usize) -> Self {
        Self {
            family: Family::NoonLike,
            n: Some(n),
            ..Self::fock_pair(theta, 0)
        }
    }

    pub fn hybrid(variant: HybridVariant, theta: f64, alpha: f64) -> Self {
        Self {
            family: match variant {
                HybridVariant::One => Family::Hybrid1,
                HybridVariant::Two => Family::Hybrid2,
            },
            theta: Some(theta),
            n: None,
            alpha: Some(alpha),
            r: None,
            phis: None,
            m: None,
            cutoff: None,
        }
    }

    pub fn photon_subtracted(m: usize, phis: Vec<f64>, r: f64) -> Self {
        Self {
            family: Family::PhotonSubtracted,
            theta: None,
            n: None,
            alpha: None,
            r: Some(r),
            phis: Some(phis),
            m: Some(m),
            cutoff: None,
        }
    }

    fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::InvalidConfig(format!("target is missing required key \"{key}\"")))
    }

    fn forbid<T>(v: &Option<T>, key: &str, family: &str) -> Result<()> {
        if v.is_some() {
            return Err(Error::InvalidConfig(format!(
                "target key \"{key}\" does not apply to family {family}"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(theta) = self.theta {
            if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
                return Err(Error::InvalidConfig(format!(
                    "theta = {theta} outside [0, pi/2]"
                )));
            }
        }
        match self.family {
            Family::FockPair | Family::NoonLike => {
                Self::require(self.theta, "theta")?;
                Self::require(self.n, "n")?;
                Self::forbid(&self.alpha, "alpha", "fock_pair/noon_like")?;
                Self::forbid(&self.r, "r", "fock_pair/noon_like")?;
                Self::forbid(&self.phis, "phis", "fock_pair/noon_like")?;
                Self::forbid(&self.m, "m", "fock_pair/noon_like")?;
            }
            Family::Hybrid1 | Family::Hybrid2 => {
                Self::require(self.theta, "theta")?;
                Self::require(self.alpha, "alpha")?;
                Self::forbid(&self.n, "n", "hybrid")?;
                Self::forbid(&self.r, "r", "hybrid")?;
                Self::forbid(&self.phis, "phis", "hybrid")?;
                Self::forbid(&self.m, "m", "hybrid")?;
            }
            Family::PhotonSubtracted => {
                Self::require(self.r, "r")?;
                Self::require(self.m, "m")?;
                if self.phis.is_none() {
                    return Err(Error::InvalidConfig(
                        "target is missing required key \"phis\"".into(),
                    ));
                }
                Self::forbid(&self.theta, "theta", "photon_subtracted")?;
                Self::forbid(&self.n, "n", "photon_subtracted")?;
                Self::forbid(&self.alpha, "alpha", "photon_subtracted")?;
            }
        }
        Ok(())
    }

    /// Build the state, auto-selecting the cutoff unless one was given.
    pub fn build(&self) -> Result<TwoModeState> {
        self.validate()?;
        match self.family {
            Family::FockPair => {
                let n = self.n.unwrap();
                let basis = BasisDescriptor::new(self.cutoff.unwrap_or(n).max(n));
                fock_pair(self.theta.unwrap(), n, basis)
            }
            Family::NoonLike => {
                let n = self.n.unwrap();
                let basis = BasisDescriptor::new(self.cutoff.unwrap_or(2 * n).max(2 * n));
                noon_like(self.theta.unwrap(), n, basis)
            }
            Family::Hybrid1 | Family::Hybrid2 => {
                let variant = if self.family == Family::Hybrid1 {
                    HybridVariant::One
                } else {
                    HybridVariant::Two
                };
                match self.cutoff {
                    Some(c) => hybrid(
                        variant,
                        self.theta.unwrap(),
                        self.alpha.unwrap(),
                        BasisDescriptor::new(c),
                    ),
                    None => hybrid_auto(variant, self.theta.unwrap(), self.alpha.unwrap()),
                }
            }
            Family::PhotonSubtracted => {
                let phis = self.phis.as_ref().unwrap();
                match self.cutoff {
                    Some(c) => photon_subtracted(
                        self.m.unwrap(),
                        phis,
                        self.r.unwrap(),
                        BasisDescriptor::new(c),
                    ),
                    None => photon_subtracted_auto(self.m.unwrap(), phis, self.r.unwrap()),
                }
            }
        }
    }
}
