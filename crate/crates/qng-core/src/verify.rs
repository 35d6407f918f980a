//! Named verification suites: the acceptance criteria behind the
//! `figures-*` suites and the independent oracle checks behind `oracles`.
//!
//! Every check returns a [`CheckResult`] with a pass flag and a one-line
//! detail, so the CLI can print a table and the acceptance tests can assert
//! on the same code path. Expensive thresholds are cached per process; all
//! randomness is seeded, so a suite is deterministic for a fixed seed.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::circuits::{BlochMessiahParams, CircuitWorkspace, EntanglingParams};
use crate::cmaes::{maximize, BoundMap, CmaesConfig};
use crate::fock::{overlap::overlap_generating_function, overlap::overlap_matrix_oracle};
use crate::fock::{BasisDescriptor, TwoModeState};
use crate::linalg::{normalize, spectral_norm_sq_power, vec_dot, CMat};
use crate::loss::{min_transmission, pure_loss, pure_loss_density};
use crate::targets::{self, HybridVariant};
use crate::threshold::{
    gaussian_threshold, passive_threshold, EscalationConfig, GridConfig, ThresholdResult,
};

/// Default seed of the verification suites.
pub const DEFAULT_SEED: u64 = 20260808;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

impl CheckResult {
    fn finish(name: &str, started: Instant, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
            millis: started.elapsed().as_millis(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracles,
    FiguresFast,
    FiguresFull,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "oracles" => Some(Suite::Oracles),
            "figures-fast" => Some(Suite::FiguresFast),
            "figures-full" => Some(Suite::FiguresFull),
            _ => None,
        }
    }
}

fn threshold_cache() -> &'static Mutex<HashMap<String, ThresholdResult>> {
    static CACHE: OnceLock<Mutex<HashMap<String, ThresholdResult>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn fnv(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

fn acceptance_cmaes(seed: u64, near_one: bool) -> CmaesConfig {
    let mut cfg = CmaesConfig::new(6, seed);
    cfg.restarts = 8;
    cfg.max_evals = 4_000;
    cfg.tol_fun = 1e-9;
    cfg.stagnation_gens = 50;
    cfg.stagnation_tol = 1e-7;
    if near_one {
        // Targets known to be reachable: stop once the bound is proven.
        cfg.target_stop = Some(1.0 - 2e-4);
    }
    cfg
}

fn cached_passive(key: &str, target: &TwoModeState) -> ThresholdResult {
    if let Some(hit) = threshold_cache().lock().unwrap().get(key) {
        return hit.clone();
    }
    let res = passive_threshold(target, &GridConfig::default()).expect("passive threshold");
    threshold_cache()
        .lock()
        .unwrap()
        .insert(key.to_string(), res.clone());
    res
}

fn cached_gaussian(
    key: &str,
    target: &TwoModeState,
    seed: u64,
    esc: &EscalationConfig,
    near_one: bool,
) -> ThresholdResult {
    if let Some(hit) = threshold_cache().lock().unwrap().get(key) {
        return hit.clone();
    }
    let cfg = acceptance_cmaes(seed ^ fnv(key), near_one);
    let res = gaussian_threshold(target, &cfg, esc).expect("gaussian threshold");
    threshold_cache()
        .lock()
        .unwrap()
        .insert(key.to_string(), res.clone());
    res
}

fn photon_subtracted_escalation() -> EscalationConfig {
    // Start at the cutoff that reproduces these states faithfully and
    // take one escalation step to confirm.
    EscalationConfig {
        start: Some(25),
        step: 5,
        stop: 30,
        ..Default::default()
    }
}

/// TMSV lower bound for cos θ|0,0⟩ + sin θ|n,n⟩ targets at n = 1:
/// max_r |cos θ sech r + sin θ sech r tanh r|².
fn tmsv_lower_bound(theta: f64) -> f64 {
    let f = |r: f64| {
        let overlap = theta.cos() / r.cosh() + theta.sin() * r.tanh() / r.cosh();
        overlap * overlap
    };
    // Golden-section over r in [0, 2].
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    for _ in 0..200 {
        let x1 = hi - inv_phi * (hi - lo);
        let x2 = lo + inv_phi * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    f(0.5 * (lo + hi))
}

/// Criterion 1: passive-separable targets have threshold exactly 1.
pub fn criterion_1(_seed: u64) -> CheckResult {
    let t0 = Instant::now();
    // (|0,1> + |1,0>)/sqrt(2).
    let basis = BasisDescriptor::new(1);
    let isq = 1.0 / 2.0f64.sqrt();
    let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
    amp[basis.flat(0, 1)] = C64::new(isq, 0.0);
    amp[basis.flat(1, 0)] = C64::new(isq, 0.0);
    let bell = TwoModeState::from_amplitudes(basis, amp, 0.0);

    let t_bell = Instant::now();
    let r1 = cached_passive("to:bell01", &bell);
    let bell_ms = t_bell.elapsed().as_millis();

    let hom = targets::noon_like(std::f64::consts::FRAC_PI_4, 1, BasisDescriptor::new(2)).unwrap();
    let t_hom = Instant::now();
    let r2 = cached_passive("to:hom", &hom);
    let hom_ms = t_hom.elapsed().as_millis();

    let ok = (r1.value - 1.0).abs() <= 1e-6
        && (r2.value - 1.0).abs() <= 1e-6
        && bell_ms < 10_000
        && hom_ms < 10_000;
    CheckResult::finish(
        "criterion 1: passive-separable exactness",
        t0,
        ok,
        format!(
            "T_O(bell01) = {:.9} in {bell_ms} ms; T_O(HOM) = {:.9} in {hom_ms} ms",
            r1.value, r2.value
        ),
    )
}

/// Criterion 2: single-subtraction states are Gaussian separable.
pub fn criterion_2(seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for r in [0.2, 0.7] {
        let t_r = Instant::now();
        let target =
            targets::photon_subtracted_auto(1, &[std::f64::consts::FRAC_PI_4], r).expect("target");
        let key = format!("tg:psub1:pi4:{r}");
        let res = cached_gaussian(&key, &target, seed, &photon_subtracted_escalation(), true);
        let ms = t_r.elapsed().as_millis();
        let pass = (res.value - 1.0).abs() <= 1e-3 && ms < 600_000;
        ok &= pass;
        details.push(format!("T_G(r={r}) = {:.6} in {} s", res.value, ms / 1000));
    }
    CheckResult::finish(
        "criterion 2: Gaussian-separable exactness",
        t0,
        ok,
        details.join("; "),
    )
}

/// Criterion 3: Fock-pair targets beat no Gaussian circuit, yet stay above
/// the analytic two-mode-squeezed-vacuum bound.
pub fn criterion_3(seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for theta in [
        std::f64::consts::FRAC_PI_8,
        std::f64::consts::FRAC_PI_4,
        3.0 * std::f64::consts::FRAC_PI_8,
    ] {
        let target = targets::fock_pair(theta, 1, BasisDescriptor::new(1)).unwrap();
        let key = format!("tg:fock_pair:{theta:.6}:1");
        let res = cached_gaussian(&key, &target, seed, &EscalationConfig::default(), false);
        let bound = tmsv_lower_bound(theta);
        let pass = res.value < 1.0 - 1e-3 && res.value >= bound - 1e-6;
        ok &= pass;
        details.push(format!(
            "theta={theta:.4}: T_G = {:.6} (bound {:.6}){}",
            res.value,
            bound,
            if pass { "" } else { " FAIL" }
        ));
    }
    CheckResult::finish(
        "criterion 3: strict-resource detection",
        t0,
        ok,
        details.join("; "),
    )
}

/// Criterion 4: passive <= Gaussian ordering and θ → 0 endpoints.
pub fn criterion_4(seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;

    // Ordering on a spread of targets.
    let pairs: Vec<(String, TwoModeState, EscalationConfig, bool)> = vec![
        (
            "fock_pair:0.785398:1".into(),
            targets::fock_pair(std::f64::consts::FRAC_PI_4, 1, BasisDescriptor::new(1)).unwrap(),
            EscalationConfig::default(),
            false,
        ),
        (
            "noon:1.047198:1".into(),
            targets::noon_like(std::f64::consts::FRAC_PI_3, 1, BasisDescriptor::new(2)).unwrap(),
            EscalationConfig::default(),
            false,
        ),
        (
            "psub1:pi4:0.2".into(),
            targets::photon_subtracted_auto(1, &[std::f64::consts::FRAC_PI_4], 0.2).unwrap(),
            photon_subtracted_escalation(),
            false,
        ),
    ];
    for (name, target, esc, near_one) in &pairs {
        let to = cached_passive(&format!("to:{name}"), target);
        let tg = cached_gaussian(&format!("tg:{name}"), target, seed, esc, *near_one);
        let pass = to.value <= tg.value + 2e-4;
        ok &= pass;
        details.push(format!(
            "{name}: T_O = {:.6}, T_G = {:.6}{}",
            to.value,
            tg.value,
            if pass { "" } else { " ORDER FAIL" }
        ));
    }

    // Endpoints: thresholds -> 1 as θ -> 0.
    for (name, target) in [
        (
            "fock_pair:0.01",
            targets::fock_pair(0.01, 1, BasisDescriptor::new(1)).unwrap(),
        ),
        (
            "noon:0.01",
            targets::noon_like(0.01, 1, BasisDescriptor::new(2)).unwrap(),
        ),
    ] {
        let to = cached_passive(&format!("to:{name}"), &target);
        let tg = cached_gaussian(
            &format!("tg:{name}"),
            &target,
            seed,
            &EscalationConfig::default(),
            true,
        );
        let pass = to.value >= 1.0 - 1e-3 && tg.value >= 1.0 - 1e-3 && to.value <= tg.value + 2e-4;
        ok &= pass;
        details.push(format!(
            "{name}: T_O = {:.6}, T_G = {:.6}{}",
            to.value,
            tg.value,
            if pass { "" } else { " ENDPOINT FAIL" }
        ));
    }
    CheckResult::finish(
        "criterion 4: ordering and endpoints",
        t0,
        ok,
        details.join("; "),
    )
}

fn psub1_passive(r: f64) -> ThresholdResult {
    let target =
        targets::photon_subtracted_auto(1, &[std::f64::consts::FRAC_PI_4], r).expect("target");
    cached_passive(&format!("to:psub1:pi4:{r}"), &target)
}

/// Criterion 5: the single-subtraction mode-intrinsic threshold decreases
/// with squeezing.
pub fn criterion_5(_seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let rs: Vec<f64> = (1..=7).map(|i| i as f64 / 10.0).collect();
    let values: Vec<f64> = rs.iter().map(|&r| psub1_passive(r).value).collect();
    let strictly_decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let drop = values[1] - values[6]; // r = 0.2 minus r = 0.7
    let ok = strictly_decreasing && drop >= 0.05;
    CheckResult::finish(
        "criterion 5: mode-intrinsic threshold curve shape",
        t0,
        ok,
        format!(
            "T_O(r) = [{}], drop(0.2 -> 0.7) = {:.4}",
            values
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(", "),
            drop
        ),
    )
}

fn psub2_target(phi2: f64, r: f64) -> TwoModeState {
    targets::photon_subtracted_auto(2, &[std::f64::consts::FRAC_PI_4, phi2], r).expect("target")
}

fn psub2_gaussian(phi2: f64, r: f64, seed: u64) -> ThresholdResult {
    let target = psub2_target(phi2, r);
    cached_gaussian(
        &format!("tg:psub2:{phi2:.6}:{r}"),
        &target,
        seed,
        &photon_subtracted_escalation(),
        false,
    )
}

/// Criterion 6: loss tolerance collapses for the φ₂ = −π/4 two-photon
/// subtracted family.
pub fn criterion_6(seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let phi2 = -std::f64::consts::FRAC_PI_4;
    let mut ok = true;
    let mut details = Vec::new();
    for r in [0.2, 0.4, 0.7] {
        let target = psub2_target(phi2, r);
        let thr = psub2_gaussian(phi2, r, seed);
        let loss = min_transmission(&target, &thr, 1e-4).expect("loss analysis");
        let pass = 1.0 - loss.eta_min < 0.01;
        ok &= pass;
        details.push(format!(
            "r={r}: T_G = {:.5}, eta_min = {:.5}{}",
            thr.value,
            loss.eta_min,
            if pass { "" } else { " FAIL" }
        ));
    }
    CheckResult::finish(
        "criterion 6: loss-tolerance extremes",
        t0,
        ok,
        details.join("; "),
    )
}

/// Criterion 7: loss tolerance of single-subtraction certification is best
/// at an interior squeezing near 0.45.
pub fn criterion_7(_seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let rs: Vec<f64> = (1..=7).map(|i| i as f64 / 10.0).collect();
    let mut etas = Vec::new();
    for &r in &rs {
        let target = targets::photon_subtracted_auto(1, &[std::f64::consts::FRAC_PI_4], r).unwrap();
        let thr = psub1_passive(r);
        let loss = min_transmission(&target, &thr, 1e-4).expect("loss analysis");
        etas.push(loss.eta_min);
    }
    let (imin, _) = etas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let r_best = rs[imin];
    let interior = imin > 0 && imin < rs.len() - 1;
    let ok = interior && (r_best - 0.45).abs() <= 0.15;
    CheckResult::finish(
        "criterion 7: non-monotonic loss tolerance",
        t0,
        ok,
        format!(
            "eta_min(r) = [{}], best at r = {r_best}",
            etas.iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

/// Criterion 8: Gaussian and passive thresholds coincide for two-photon
/// subtracted targets.
pub fn criterion_8(seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for phi2 in [
        -std::f64::consts::FRAC_PI_4,
        0.0,
        std::f64::consts::FRAC_PI_4,
    ] {
        for r in [0.2, 0.7] {
            let target = psub2_target(phi2, r);
            let tg = psub2_gaussian(phi2, r, seed);
            let to = cached_passive(&format!("to:psub2:{phi2:.6}:{r}"), &target);
            let diff = (tg.value - to.value).abs();
            let pass = diff < 1e-3;
            ok &= pass;
            details.push(format!(
                "(phi2={phi2:.3}, r={r}): |T_G - T_O| = {diff:.2e}{}",
                if pass { "" } else { " FAIL" }
            ));
        }
    }
    let mut detail = details.join("; ");
    if !ok {
        detail.push_str(
            "; analysis: at phi2 = +pi/4 both subtractions act on one rotated mode, the core state is a rotated |2,0> and the target is exactly Gaussian separable (T_G = 1, explicit decomposition S1 S2 U_BS(-3pi/4)|2,0>), so coincidence with T_O cannot hold there",
        );
    }
    CheckResult::finish("criterion 8: threshold coincidence", t0, ok, detail)
}

/// Criterion 9: hybrid-state loss tolerance ~13.5% at θ = 0.7·(π/2),
/// α = 0.3. On failure the check re-runs at the figure caption's θ = 0.7π
/// and reports both rather than silently passing.
pub fn criterion_9(seed: u64) -> CheckResult {
    let t0 = Instant::now();
    let alpha = 0.3;
    let theta_text = 0.7 * std::f64::consts::FRAC_PI_2;
    let run = |theta: f64, label: &str| -> (bool, String) {
        let target = targets::hybrid_auto(HybridVariant::Two, theta, alpha).expect("hybrid");
        let key = format!("tg:hybrid2:{theta:.6}:{alpha}");
        let thr = cached_gaussian(&key, &target, seed, &EscalationConfig::default(), false);
        let loss = min_transmission(&target, &thr, 1e-4).expect("loss analysis");
        let tol = 1.0 - loss.eta_min;
        let pass = (tol - 0.135).abs() <= 0.02;
        (
            pass,
            format!(
                "{label}: T_G = {:.5}, loss tolerance = {:.4} (target 0.135 ± 0.02)",
                thr.value, tol
            ),
        )
    };
    let (ok, mut detail) = run(theta_text, "theta = 0.7·pi/2");
    if !ok {
        // Documented fallback at the caption angle.
        let caption = run(0.7 * std::f64::consts::PI, "caption theta = 0.7·pi");
        detail = format!(
            "{detail}; {}; analysis: the target is >99.9% Gaussian-reachable (threshold confirmed through the dense-operator route), leaving no room for a 13.5% loss budget",
            caption.1
        );
    }
    CheckResult::finish("criterion 9: hybrid loss tolerance", t0, ok, detail)
}

/// Criterion 10 is the oracle suite; each sub-check is its own result.
pub fn oracle_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();

    // Analytic generating-function overlap vs matrix products, 50 random cases.
    {
        let t0 = Instant::now();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xa11c);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let k = rng.gen_range(0..=4);
            let l = rng.gen_range(0..=4);
            let m = rng.gen_range(0..=4);
            let n = rng.gen_range(0..=4);
            let t1 = C64::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let t2 = C64::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let xi = C64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let a = overlap_generating_function(k, l, m, n, t1, t2, xi, phi).expect("derived");
            let b = overlap_matrix_oracle(k, l, m, n, t1, t2, xi, phi);
            worst = worst.max((a - b).norm());
        }
        out.push(CheckResult::finish(
            "oracle: analytic overlap vs matrix product (50 cases)",
            t0,
            worst <= 1e-8,
            format!("worst |diff| = {worst:.2e}"),
        ));
    }

    // Canonical-form reachability: Bloch-Messiah circuits acting on product
    // states are reachable by the canonical entangling family.
    {
        let t0 = Instant::now();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xb10c);
        let worst = reachability_worst(&mut rng, 20, 1);
        out.push(CheckResult::finish(
            "oracle: Bloch-Messiah reachability (20 circuits)",
            t0,
            worst >= 1.0 - 1e-5,
            format!("worst reachability = {worst:.8}"),
        ));
    }

    // Loss channel: CPTP and semigroup on random states.
    {
        let t0 = Instant::now();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x1055);
        let basis = BasisDescriptor::new(6);
        let mut worst_trace = 0.0f64;
        let mut worst_comp = 0.0f64;
        for _ in 0..5 {
            let mut amp = vec![C64::new(0.0, 0.0); basis.total_dim()];
            for a in amp.iter_mut() {
                *a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let s = TwoModeState::from_amplitudes(basis, amp, 0.0).normalized();
            let (e1, e2) = (rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0));
            let rho1 = pure_loss(&s, e1).unwrap();
            worst_trace = worst_trace.max(rho1.trace_defect());
            let twice = pure_loss_density(&rho1, e2).unwrap();
            let once = pure_loss(&s, e1 * e2).unwrap();
            worst_comp = worst_comp.max(once.matrix().max_abs_diff(twice.matrix()));
        }
        out.push(CheckResult::finish(
            "oracle: loss channel CPTP and semigroup",
            t0,
            worst_trace <= 1e-9 && worst_comp <= 1e-9,
            format!("trace defect {worst_trace:.2e}, composition residual {worst_comp:.2e}"),
        ));
    }

    // inner_max dominates random product probes.
    {
        let t0 = Instant::now();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xd011);
        let mut pass = true;
        let mut worst_gap = f64::INFINITY;
        for (name, target) in [
            (
                "fock_pair",
                targets::fock_pair(0.6, 1, BasisDescriptor::new(2)).unwrap(),
            ),
            (
                "psub1",
                targets::photon_subtracted_auto(1, &[0.5], 0.3).unwrap(),
            ),
        ] {
            let _ = name;
            let thr = passive_threshold(&target, &GridConfig::default()).unwrap();
            let c_work = thr.cutoff_trace[0].0;
            let work = target.with_cutoff(c_work);
            let ws = CircuitWorkspace::new(c_work, 0.3, 0.3);
            let crate::threshold::BestParams::Passive(p) = thr.best_params else {
                unreachable!()
            };
            let mut w = work.amplitudes().to_vec();
            crate::fock::apply_phase_inplace(-p.phi1, crate::fock::Mode::One, c_work + 1, &mut w);
            ws.apply_beam_splitter(C64::new(p.theta, 0.0), true, &mut w);
            let basis = BasisDescriptor::new(c_work);
            let mut m = CMat::zeros(c_work + 1, c_work + 1);
            for k in 0..=c_work {
                for l in 0..=c_work {
                    m.set(k, l, w[basis.flat(k, l)].conj());
                }
            }
            for _ in 0..100 {
                let mut u: Vec<C64> = (0..=c_work)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let mut v: Vec<C64> = (0..=c_work)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                normalize(&mut u);
                normalize(&mut v);
                let probe = vec_dot(&u, &m.mul_vec(&v)).norm_sqr();
                worst_gap = worst_gap.min(thr.value - probe);
                if probe > thr.value + 1e-6 {
                    pass = false;
                }
            }
        }
        out.push(CheckResult::finish(
            "oracle: inner_max dominates random probes",
            t0,
            pass,
            format!("smallest threshold-probe gap = {worst_gap:.3e}"),
        ));
    }

    // Seed determinism: identical configs give bitwise identical values.
    {
        let t0 = Instant::now();
        let target = targets::fock_pair(0.5, 1, BasisDescriptor::new(1)).unwrap();
        let mut cfg = CmaesConfig::new(6, seed ^ 0xde7e);
        cfg.restarts = 2;
        cfg.max_evals = 1_200;
        let esc = EscalationConfig {
            start: Some(6),
            stop: 11,
            ..Default::default()
        };
        let a = gaussian_threshold(&target, &cfg, &esc).unwrap();
        let b = gaussian_threshold(&target, &cfg, &esc).unwrap();
        let bitwise = a.value.to_bits() == b.value.to_bits() && a.evaluations == b.evaluations;
        out.push(CheckResult::finish(
            "oracle: seed determinism (bitwise)",
            t0,
            bitwise,
            format!("value = {:.12}, evals = {}", a.value, a.evaluations),
        ));
    }

    out
}

/// Worst-case reachability of Bloch-Messiah outputs by the entangling
/// family over randomized circuits and product inputs.
pub fn reachability_worst(rng: &mut ChaCha12Rng, circuits: usize, inputs_each: usize) -> f64 {
    let cutoff = 30;
    let ws = CircuitWorkspace::new(cutoff, 1.3, 0.65);
    let basis = ws.basis();
    let mut worst = 1.0f64;
    for _ in 0..circuits {
        let p = BlochMessiahParams::new(
            C64::from_polar(
                rng.gen_range(0.0..1.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ),
            C64::from_polar(
                rng.gen_range(0.0..1.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ),
            C64::from_polar(
                rng.gen_range(0.05..0.3),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ),
            C64::from_polar(
                rng.gen_range(0.05..0.3),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ),
        )
        .unwrap();
        for _ in 0..inputs_each {
            // Random product input supported on Fock 0..=2.
            let mut u = [C64::new(0.0, 0.0); 3];
            let mut v = [C64::new(0.0, 0.0); 3];
            for z in u.iter_mut().chain(v.iter_mut()) {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let input = TwoModeState::product(basis, &u, &v).unwrap();
            let mut out_amp = input.amplitudes().to_vec();
            let lost = ws.apply_bloch_messiah(&p, &mut out_amp);
            let out = TwoModeState::from_amplitudes(basis, out_amp, lost).normalized();

            let reached = best_entangling_fidelity(&ws, &out, rng.gen());
            worst = worst.min(reached);
        }
    }
    worst
}

#[doc(hidden)]
pub fn best_entangling_fidelity_dbg(
    ws: &CircuitWorkspace,
    target: &TwoModeState,
    seed: u64,
) -> f64 {
    best_entangling_fidelity(ws, target, seed)
}

/// max_p σ²(M(p)) for a fixed target at the workspace cutoff, stopping as
/// soon as 1 − 5e-6 is reached.
fn best_entangling_fidelity(ws: &CircuitWorkspace, target: &TwoModeState, seed: u64) -> f64 {
    let psi = target.amplitudes().to_vec();
    let basis = ws.basis();
    let objective = |x: &[f64]| {
        let p = EntanglingParams {
            phi1: x[0],
            phi2: x[1],
            tau1: x[2],
            phi: x[3],
            xi: x[4],
            tau2: x[5],
        };
        let mut w = psi.clone();
        ws.apply_entangling_adjoint(&p, &mut w);
        let mut m = CMat::zeros(basis.dim(), basis.dim());
        for k in 0..basis.dim() {
            for l in 0..basis.dim() {
                m.set(k, l, w[basis.flat(k, l)].conj());
            }
        }
        spectral_norm_sq_power(&m, None, 1e-12, 300).0
    };
    let bounds = [
        BoundMap::Affine {
            scale: std::f64::consts::TAU,
            offset: 0.0,
        },
        BoundMap::Affine {
            scale: std::f64::consts::TAU,
            offset: 0.0,
        },
        BoundMap::Affine {
            scale: std::f64::consts::PI,
            offset: 0.0,
        },
        BoundMap::Affine {
            scale: std::f64::consts::TAU,
            offset: 0.0,
        },
        BoundMap::Logistic {
            lo: 0.0,
            hi: 1.3,
            slope: 2.0,
        },
        BoundMap::Affine {
            scale: std::f64::consts::PI,
            offset: 0.0,
        },
    ];
    let init_box = [
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 1.0),
        (-1.5, 0.5),
        (0.0, 1.0),
    ];
    let mut cfg = CmaesConfig::new(6, seed);
    cfg.restarts = 24;
    cfg.max_evals = 8_000;
    cfg.target_stop = Some(1.0 - 5e-6);
    maximize(&objective, &cfg, &bounds, &init_box)
        .expect("reachability optimization")
        .best_f
}

/// Run one named suite.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<CheckResult> {
    match suite {
        Suite::Oracles => oracle_checks(seed),
        Suite::FiguresFast => vec![
            criterion_1(seed),
            criterion_3(seed),
            criterion_4(seed),
            criterion_9(seed),
        ],
        Suite::FiguresFull => vec![
            criterion_1(seed),
            criterion_2(seed),
            criterion_3(seed),
            criterion_4(seed),
            criterion_5(seed),
            criterion_6(seed),
            criterion_7(seed),
            criterion_8(seed),
            criterion_9(seed),
            {
                let t0 = Instant::now();
                let checks = oracle_checks(seed);
                let passed = checks.iter().all(|c| c.passed);
                let detail = checks
                    .iter()
                    .map(|c| format!("{} [{}]", c.name, if c.passed { "ok" } else { "FAIL" }))
                    .collect::<Vec<_>>()
                    .join("; ");
                CheckResult::finish("criterion 10: oracle suites", t0, passed, detail)
            },
        ],
    }
}
