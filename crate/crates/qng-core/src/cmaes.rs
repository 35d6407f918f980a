//! Covariance Matrix Adaptation evolution strategy for bounded, non-convex,
//! derivative-free maximization.
//!
//! This is the standard (μ/μ_w, λ) algorithm with rank-one and rank-μ
//! covariance updates and cumulative step-size adaptation, written from the
//! published update equations. It is deliberately self-contained: the
//! threshold search must be bitwise reproducible for a fixed seed across
//! platforms and thread counts, which rules out wrapping an external
//! optimizer with unspecified internals.
//!
//! Search happens in unbounded internal coordinates; per-coordinate
//! [`BoundMap`]s squash them smoothly into the feasible region before the
//! objective sees them, so box boundaries never stall the sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};
use num_complex::Complex64 as C64;

/// Smooth per-coordinate map from the unbounded search variable to the
/// objective's coordinate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum BoundMap {
    /// y = x.
    Identity,
    /// y = scale·x + offset.
    Affine { scale: f64, offset: f64 },
    /// y = lo + (hi − lo)·logistic(slope·x); strictly inside (lo, hi).
    Logistic { lo: f64, hi: f64, slope: f64 },
}

impl BoundMap {
    pub fn map(&self, x: f64) -> f64 {
        match *self {
            BoundMap::Identity => x,
            BoundMap::Affine { scale, offset } => scale * x + offset,
            BoundMap::Logistic { lo, hi, slope } => lo + (hi - lo) / (1.0 + (-slope * x).exp()),
        }
    }

    /// Inverse map (used to seed warm starts); saturates near the edges.
    pub fn unmap(&self, y: f64) -> f64 {
        match *self {
            BoundMap::Identity => y,
            BoundMap::Affine { scale, offset } => (y - offset) / scale,
            BoundMap::Logistic { lo, hi, slope } => {
                let t = ((y - lo) / (hi - lo)).clamp(1e-9, 1.0 - 1e-9);
                (t / (1.0 - t)).ln() / slope
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmaesConfig {
    pub dim: usize,
    /// Offspring per generation; default 4 + ⌊3 ln dim⌋.
    pub population: Option<usize>,
    /// Initial step size in the internal coordinates.
    pub sigma0: f64,
    /// Evaluation budget per restart.
    pub max_evals: u64,
    pub tol_fun: f64,
    pub tol_x: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Stop a run after this many generations without `stagnation_tol`
    /// improvement of the best-ever value.
    pub stagnation_gens: usize,
    pub stagnation_tol: f64,
    /// Stop everything once the best value reaches this level.
    pub target_stop: Option<f64>,
    /// Optional extra restart seeded at this point (internal coordinates
    /// are recovered through the bound maps).
    pub warm_start: Option<Vec<f64>>,
    /// Further deterministic restart means in mapped coordinates, each
    /// consuming one extra restart slot.
    pub seed_points: Vec<Vec<f64>>,
}

impl CmaesConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            population: None,
            sigma0: 0.3,
            max_evals: 20_000,
            tol_fun: 1e-8,
            tol_x: 1e-9,
            seed,
            restarts: 12,
            stagnation_gens: 60,
            stagnation_tol: 1e-6,
            target_stop: None,
            warm_start: None,
            seed_points: Vec::new(),
        }
    }

    pub fn effective_population(&self) -> usize {
        self.population
            .unwrap_or(4 + (3.0 * (self.dim as f64).ln()).floor() as usize)
            .max(4)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("cmaes dim must be positive".into()));
        }
        for (name, v) in [
            ("sigma0", self.sigma0),
            ("tol_fun", self.tol_fun),
            ("tol_x", self.tol_x),
            ("stagnation_tol", self.stagnation_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("cmaes {name} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    TolFun,
    TolX,
    MaxEvals,
    Stagnation,
    TargetReached,
}

/// Result of a maximization (best over all restarts).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptRun {
    /// Best point in objective (mapped) coordinates.
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Total objective evaluations across restarts.
    pub evals: u64,
    /// Stop reason of the restart that produced `best_x`.
    pub stop_reason: StopReason,
}

struct SingleRun {
    best_x_internal: Vec<f64>,
    best_f: f64,
    evals: u64,
    stop_reason: StopReason,
}

fn run_single<F>(
    objective: &F,
    config: &CmaesConfig,
    bounds: &[BoundMap],
    mean0: Vec<f64>,
    seed: u64,
) -> Result<SingleRun>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = config.dim;
    let lambda = config.effective_population();
    let mu = lambda / 2;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // Selection weights and learning rates (Hansen's defaults).
    let mut weights: Vec<f64> = (0..mu)
        .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
        .collect();
    let wsum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= wsum;
    }
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let n = dim as f64;
    let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
    let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    let mut mean = mean0;
    let mut sigma = config.sigma0;
    let mut cov = vec![0.0f64; dim * dim];
    for i in 0..dim {
        cov[i * dim + i] = 1.0;
    }
    let mut b = cov.clone(); // eigenvectors (columns)
    let mut d_sqrt = vec![1.0f64; dim];
    let mut p_sigma = vec![0.0f64; dim];
    let mut p_c = vec![0.0f64; dim];

    let mut best_f = f64::NEG_INFINITY;
    let mut best_x_internal = mean.clone();
    let mut evals: u64 = 0;
    let mut gen: usize = 0;
    let mut last_improve_gen: usize = 0;
    let mut best_at_last_improve = f64::NEG_INFINITY;
    let mut gen_best_hist: Vec<f64> = Vec::new();

    let stop_reason = loop {
        gen += 1;
        // Sample offspring x = mean + sigma · B D z.
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(lambda);
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut y = vec![0.0f64; dim];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += b[i * dim + j] * d_sqrt[j] * z[j];
                }
                y[i] = acc;
            }
            let x: Vec<f64> = (0..dim).map(|i| mean[i] + sigma * y[i]).collect();
            ys.push(y);
            xs.push(x);
        }

        // Evaluate in population-index order (deterministic reduction).
        let fs: Vec<f64> = xs
            .par_iter()
            .map(|x| {
                let mapped: Vec<f64> = x
                    .iter()
                    .zip(bounds.iter())
                    .map(|(&v, b)| b.map(v))
                    .collect();
                objective(&mapped)
            })
            .collect();
        evals += lambda as u64;
        if let Some(pos) = fs.iter().position(|f| !f.is_finite()) {
            return Err(Error::ObjectiveNonFinite {
                eval: (evals - lambda as u64) as usize + pos,
            });
        }

        // Sort descending by fitness (we maximize), stable in index.
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &bi| fs[bi].partial_cmp(&fs[a]).unwrap().then(a.cmp(&bi)));

        let gen_best = fs[order[0]];
        gen_best_hist.push(gen_best);
        if gen_best > best_f {
            best_f = gen_best;
            best_x_internal = xs[order[0]].clone();
        }
        if best_f > best_at_last_improve + config.stagnation_tol {
            best_at_last_improve = best_f;
            last_improve_gen = gen;
        }

        if let Some(target) = config.target_stop {
            if best_f >= target {
                break StopReason::TargetReached;
            }
        }

        // Recombination.
        let mean_old = mean.clone();
        let mut y_w = vec![0.0f64; dim];
        for (rank, &idx) in order.iter().take(mu).enumerate() {
            for i in 0..dim {
                y_w[i] += weights[rank] * ys[idx][i];
            }
        }
        for i in 0..dim {
            mean[i] = mean_old[i] + sigma * y_w[i];
        }

        // Step-size path: p_sigma with C^{-1/2} y_w = B D^{-1} B^T y_w.
        let mut bt_yw = vec![0.0f64; dim];
        for j in 0..dim {
            let mut acc = 0.0;
            for i in 0..dim {
                acc += b[i * dim + j] * y_w[i];
            }
            bt_yw[j] = acc / d_sqrt[j].max(1e-300);
        }
        let mut c_inv_sqrt_yw = vec![0.0f64; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += b[i * dim + j] * bt_yw[j];
            }
            c_inv_sqrt_yw[i] = acc;
        }
        let cs_fac = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        for i in 0..dim {
            p_sigma[i] = (1.0 - c_sigma) * p_sigma[i] + cs_fac * c_inv_sqrt_yw[i];
        }
        let ps_norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let denom = (1.0 - (1.0 - c_sigma).powi(2 * gen as i32)).sqrt();
        let h_sigma = if ps_norm / denom.max(1e-300) / chi_n < 1.4 + 2.0 / (n + 1.0) {
            1.0
        } else {
            0.0
        };

        // Covariance path and update.
        let cc_fac = (c_c * (2.0 - c_c) * mu_eff).sqrt();
        for i in 0..dim {
            p_c[i] = (1.0 - c_c) * p_c[i] + h_sigma * cc_fac * y_w[i];
        }
        let delta_h = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        for i in 0..dim {
            for j in 0..=i {
                let mut v =
                    (1.0 - c_1 - c_mu + c_1 * delta_h) * cov[i * dim + j] + c_1 * p_c[i] * p_c[j];
                for (rank, &idx) in order.iter().take(mu).enumerate() {
                    v += c_mu * weights[rank] * ys[idx][i] * ys[idx][j];
                }
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }

        // Step size.
        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();

        // Refresh the eigensystem (cheap at these dimensions) with an
        // eigenvalue floor relative to the trace.
        let mut cm = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                cm.set(i, j, C64::new(cov[i * dim + j], 0.0));
            }
        }
        let (mut evals_c, vecs) = hermitian_eigen(&cm);
        let trace: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
        let floor = 1e-14 * trace.max(1e-300);
        for (i, ev) in evals_c.iter_mut().enumerate() {
            if *ev < floor {
                *ev = floor;
            }
            d_sqrt[i] = ev.sqrt();
        }
        for i in 0..dim {
            for j in 0..dim {
                b[i * dim + j] = vecs.get(i, j).re;
            }
        }

        // Termination.
        if evals >= config.max_evals {
            break StopReason::MaxEvals;
        }
        let hist_window = 10 + (30.0 * n / lambda as f64).ceil() as usize;
        if gen_best_hist.len() >= hist_window {
            let tail = &gen_best_hist[gen_best_hist.len() - hist_window..];
            let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < config.tol_fun {
                break StopReason::TolFun;
            }
        }
        let max_std = (0..dim)
            .map(|i| cov[i * dim + i].sqrt())
            .fold(0.0f64, f64::max);
        let pc_norm = p_c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sigma * max_std < config.tol_x && sigma * pc_norm < config.tol_x {
            break StopReason::TolX;
        }
        if gen - last_improve_gen >= config.stagnation_gens {
            break StopReason::Stagnation;
        }
    };

    Ok(SingleRun {
        best_x_internal,
        best_f,
        evals,
        stop_reason,
    })
}

/// Maximize `objective` over the mapped coordinates with independent
/// seeded restarts. Deterministic for a fixed config.
///
/// `init_box` gives per-coordinate intervals (in internal coordinates) from
/// which restart means are drawn.
pub fn maximize<F>(
    objective: &F,
    config: &CmaesConfig,
    bounds: &[BoundMap],
    init_box: &[(f64, f64)],
) -> Result<OptRun>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    assert_eq!(bounds.len(), config.dim);
    assert_eq!(init_box.len(), config.dim);

    // Restart plan: optional warm start first, then seeded random means.
    let mut plans: Vec<Vec<f64>> = Vec::new();
    for mapped in config.warm_start.iter().chain(config.seed_points.iter()) {
        assert_eq!(mapped.len(), config.dim);
        let internal: Vec<f64> = mapped
            .iter()
            .zip(bounds.iter())
            .map(|(&y, b)| b.unmap(y))
            .collect();
        plans.push(internal);
    }
    for r in 0..config.restarts {
        let mut rng = ChaCha12Rng::seed_from_u64(
            config
                .seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(r as u64 + 1)),
        );
        let mean: Vec<f64> = init_box
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..hi))
            .collect();
        plans.push(mean);
    }

    // Early-out sequencing for target_stop has to stay deterministic, so
    // restarts run in index order when a target is set; otherwise they can
    // run in parallel and are reduced in index order.
    let runs: Result<Vec<SingleRun>> = if config.target_stop.is_some() {
        let mut out = Vec::with_capacity(plans.len());
        for (ridx, mean) in plans.iter().enumerate() {
            let run = run_single(
                objective,
                config,
                bounds,
                mean.clone(),
                config.seed.wrapping_add(ridx as u64),
            )?;
            let reached = matches!(run.stop_reason, StopReason::TargetReached);
            out.push(run);
            if reached {
                break;
            }
        }
        Ok(out)
    } else {
        plans
            .par_iter()
            .enumerate()
            .map(|(ridx, mean)| {
                run_single(
                    objective,
                    config,
                    bounds,
                    mean.clone(),
                    config.seed.wrapping_add(ridx as u64),
                )
            })
            .collect()
    };
    let runs = runs?;

    let total_evals: u64 = runs.iter().map(|r| r.evals).sum();
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.best_f.partial_cmp(&b.best_f).unwrap().then(ib.cmp(ia)))
        .expect("at least one restart");
    let best_x: Vec<f64> = best
        .1
        .best_x_internal
        .iter()
        .zip(bounds.iter())
        .map(|(&v, b)| b.map(v))
        .collect();
    Ok(OptRun {
        best_x,
        best_f: best.1.best_f,
        evals: total_evals,
        stop_reason: best.1.stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_setup(dim: usize) -> (Vec<BoundMap>, Vec<(f64, f64)>) {
        (vec![BoundMap::Identity; dim], vec![(-1.0, 1.0); dim])
    }

    #[test]
    fn sphere_reaches_optimum() {
        let dim = 4;
        let (bounds, init) = sphere_setup(dim);
        let mut cfg = CmaesConfig::new(dim, 7);
        cfg.restarts = 2;
        cfg.max_evals = 8_000;
        cfg.tol_fun = 1e-14;
        let f = |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>();
        let run = maximize(&f, &cfg, &bounds, &init).unwrap();
        assert!(run.best_f >= -1e-10, "best {}", run.best_f);
    }

    #[test]
    fn rosenbrock_two_dim() {
        let dim = 2;
        let (bounds, init) = sphere_setup(dim);
        let mut cfg = CmaesConfig::new(dim, 3);
        cfg.restarts = 4;
        cfg.max_evals = 30_000;
        cfg.tol_fun = 1e-16;
        cfg.tol_x = 1e-14;
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let run = maximize(&f, &cfg, &bounds, &init).unwrap();
        assert!((run.best_x[0] - 1.0).abs() < 1e-3, "{:?}", run.best_x);
        assert!((run.best_x[1] - 1.0).abs() < 1e-3, "{:?}", run.best_x);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let dim = 3;
        let (bounds, init) = sphere_setup(dim);
        let mut cfg = CmaesConfig::new(dim, 42);
        cfg.restarts = 3;
        cfg.max_evals = 3_000;
        let f = |x: &[f64]| {
            -x.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 + 1.0) * v * v)
                .sum::<f64>()
        };
        let a = maximize(&f, &cfg, &bounds, &init).unwrap();
        let b = maximize(&f, &cfg, &bounds, &init).unwrap();
        assert_eq!(a.best_f.to_bits(), b.best_f.to_bits());
        for (x, y) in a.best_x.iter().zip(b.best_x.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.evals, b.evals);
    }

    #[test]
    fn sphere_success_rate_dim8() {
        // 100 seeded single runs on the 8-dim sphere: at least 95 reach
        // 1e-8 of the optimum within 4000 evaluations.
        let dim = 8;
        let (bounds, init) = sphere_setup(dim);
        let f = |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>();
        let mut ok = 0;
        for seed in 0..100u64 {
            let mut cfg = CmaesConfig::new(dim, seed);
            cfg.restarts = 1;
            cfg.max_evals = 4_000;
            cfg.tol_fun = 1e-15;
            cfg.target_stop = Some(-1e-8);
            let run = maximize(&f, &cfg, &bounds, &init).unwrap();
            if run.best_f >= -1e-8 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/100 runs reached 1e-8");
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let dim = 2;
        let (bounds, init) = sphere_setup(dim);
        let mut cfg = CmaesConfig::new(dim, 5);
        cfg.restarts = 1;
        let f = |x: &[f64]| {
            if x[0] > 0.0 {
                f64::NAN
            } else {
                -x[0] * x[0]
            }
        };
        assert!(matches!(
            maximize(&f, &cfg, &bounds, &init),
            Err(Error::ObjectiveNonFinite { .. })
        ));
    }

    #[test]
    fn logistic_bound_map_round_trips() {
        let b = BoundMap::Logistic {
            lo: 0.0,
            hi: 3.0,
            slope: 2.0,
        };
        for &y in &[0.01, 0.3, 1.5, 2.9] {
            let x = b.unmap(y);
            assert!((b.map(x) - y).abs() < 1e-9);
        }
    }
}
