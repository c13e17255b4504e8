//! Genetic search over Fourier-series auxiliary waveforms.
//!
//! Candidates are `g_c(t) = Σ c_m cos(mπt/T) + Σ d_m sin(mπt/T)` on the
//! horizon `[0, T]`, scored by the homodyne SNR at τ = T. The endpoint
//! conditions and the displacement constraint are linear in the
//! coefficients. In [`ConstraintMode::NullSpace`] the genome lives on that
//! affine subspace, so every candidate is feasible by construction; in
//! [`ConstraintMode::Penalty`] the genome is the raw coefficient vector and
//! violations are penalized.
//!
//! Coefficients are handled in units of `s = target/T`, the constant
//! amplitude that delivers the displacement target over the horizon.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use crate::cavity::CavityTrajectory;
use crate::error::{ReadoutError, Result};
use crate::modulation::Modulation;
use crate::params::{linspace, SystemParams};
use crate::pulse_design::{trigonometric_ansatz, verify_boundaries, BoundaryReport};
use crate::readout::snr_curve;

/// Normalized boundary tolerance a returned solution must meet.
pub const FEASIBILITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintMode {
    NullSpace,
    Penalty,
}

fn default_mode() -> ConstraintMode {
    ConstraintMode::NullSpace
}
fn default_tournament() -> usize {
    3
}
fn default_elitism() -> usize {
    2
}
fn default_grid() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    /// 2K: K cosines c_0..c_{K−1} and K sines d_1..d_K.
    pub n_coeffs: usize,
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub seed: u64,
    /// Design horizon T in seconds.
    pub horizon: f64,
    pub penalty_weight: f64,
    #[serde(default = "default_mode")]
    pub constraint_mode: ConstraintMode,
    /// Box bound on every coefficient (rad/s). Default 50·s.
    #[serde(default)]
    pub coeff_bound: Option<f64>,
    /// Gaussian mutation width (rad/s). Default 0.1·s.
    #[serde(default)]
    pub mutation_sigma: Option<f64>,
    #[serde(default = "default_tournament")]
    pub tournament: usize,
    #[serde(default = "default_elitism")]
    pub elitism: usize,
    /// Time points used to integrate the cavity field.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

impl GAConfig {
    /// Horizon t_f/2, population 40, 60 generations.
    pub fn for_params(p: &SystemParams, n_coeffs: usize, seed: u64) -> Self {
        GAConfig {
            n_coeffs,
            population: 40,
            generations: 60,
            mutation_rate: 0.3,
            crossover_rate: 0.8,
            seed,
            horizon: 0.5 * p.t_f,
            penalty_weight: 1e4,
            constraint_mode: ConstraintMode::NullSpace,
            coeff_bound: None,
            mutation_sigma: None,
            tournament: 3,
            elitism: 2,
            grid_points: 201,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ReadoutError::Input(msg));
        if self.n_coeffs < 2 || self.n_coeffs % 2 != 0 {
            return bad(format!("n_coeffs = {} must be even and >= 2", self.n_coeffs));
        }
        if self.population < 20 {
            return bad(format!("population = {} must be >= 20", self.population));
        }
        for (name, r) in [("mutation_rate", self.mutation_rate), ("crossover_rate", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} = {r} outside [0, 1]"));
            }
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive".into());
        }
        if !(self.penalty_weight >= 0.0) {
            return bad("penalty_weight must be non-negative".into());
        }
        if self.tournament == 0 || self.elitism >= self.population {
            return bad("tournament must be >= 1 and elitism < population".into());
        }
        if self.grid_points < 3 {
            return bad("grid_points must be >= 3".into());
        }
        if let Some(b) = self.coeff_bound {
            if !(b > 0.0) {
                return bad("coeff_bound must be positive".into());
            }
        }
        if let Some(s) = self.mutation_sigma {
            if !(s > 0.0) {
                return bad("mutation_sigma must be positive".into());
            }
        }
        Ok(())
    }
}

/// g_c(t) of a flat coefficient vector `[c_0..c_{K−1}, d_1..d_K]` on `[0, t_f]`.
pub fn decode_coeffs(coeffs: &[f64], t_f: f64, t: f64) -> Result<f64> {
    let m = Modulation::fourier_flat(coeffs.to_vec(), t_f)?;
    Ok(m.checked_eval(t)?.value)
}

/// SNR at τ = T for waveform `m` on `[0, T]`, homodyne angle π/2.
pub fn snr_at_horizon(m: &Modulation, kappa: f64, horizon: f64, grid_points: usize) -> Result<f64> {
    let grid = linspace(0.0, horizon, grid_points.max(2));
    let traj = CavityTrajectory::compute(m, kappa, &grid)?;
    Ok(snr_curve(&traj, FRAC_PI_2, &[horizon], None)?.snr[0])
}

fn penalty(report: &BoundaryReport) -> f64 {
    report.normalized.iter().map(|r| r * r).sum::<f64>() + (report.displacement_integral - 1.0).powi(2)
}

/// SNR at the horizon minus `penalty_weight` × (sum of squared normalized
/// boundary residuals + squared relative displacement error).
pub fn fitness(coeffs: &[f64], p: &SystemParams, cfg: &GAConfig) -> Result<f64> {
    Ok(evaluate(coeffs, p, cfg)?.fitness)
}

#[derive(Debug, Clone)]
struct Evaluation {
    coeffs: Vec<f64>,
    fitness: f64,
    snr: f64,
    feasible: bool,
}

fn horizon_params(p: &SystemParams, cfg: &GAConfig) -> SystemParams {
    p.with_t_f(cfg.horizon)
}

fn evaluate(coeffs: &[f64], p: &SystemParams, cfg: &GAConfig) -> Result<Evaluation> {
    let ph = horizon_params(p, cfg);
    let m = Modulation::fourier_flat(coeffs.to_vec(), cfg.horizon)?;
    let report = verify_boundaries(&m, &ph, FEASIBILITY_TOL);
    let snr = snr_at_horizon(&m, p.kappa, cfg.horizon, cfg.grid_points)?;
    let fit = snr - cfg.penalty_weight * penalty(&report);
    Ok(Evaluation {
        coeffs: coeffs.to_vec(),
        fitness: if fit.is_nan() { f64::NEG_INFINITY } else { fit },
        snr,
        feasible: report.passed,
    })
}

/// The linear constraints in coefficient units of `s`:
/// g_c, ġ_c, g̈_c vanish at 0 and T, and ∫₀^T g_c = target.
struct Constraints {
    /// Scale s = target/T in rad/s.
    scale: f64,
    /// Least-norm feasible point ξ₀.
    x0: DVector<f64>,
    /// Orthonormal null-space basis, one column per free direction.
    basis: DMatrix<f64>,
}

impl Constraints {
    fn new(n: usize, ph: &SystemParams) -> Result<Self> {
        let k = n / 2;
        let target = ph.displacement_target();
        let horizon = ph.t_f;
        let scale = if target > 0.0 { target / horizon } else { ph.g_z0.max(1.0) };
        let rows = 7;
        let size = rows.max(n);
        let mut a = DMatrix::<f64>::zeros(size, n);
        let mut b = DVector::<f64>::zeros(size);
        for m in 0..k {
            let mf = m as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            // cosine c_m: value and curvature at both ends, integral for m = 0
            a[(0, m)] = 1.0;
            a[(1, m)] = sign;
            a[(4, m)] = -mf * mf;
            a[(5, m)] = -mf * mf * sign;
            if m == 0 {
                a[(6, m)] = 1.0;
            }
            // sine d_{m+1}: slope at both ends and integral
            let h = (m + 1) as f64;
            let sign_h = if (m + 1) % 2 == 0 { 1.0 } else { -1.0 };
            a[(2, k + m)] = h;
            a[(3, k + m)] = h * sign_h;
            a[(6, k + m)] = (1.0 - sign_h) / (h * PI);
        }
        b[6] = if target > 0.0 { 1.0 } else { 0.0 };
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let tol = 1e-12 * smax.max(f64::MIN_POSITIVE);
        let x0 = svd
            .solve(&b, tol)
            .map_err(|e| ReadoutError::Infeasible(format!("constraint solve failed: {e}")))?;
        let residual = (&a * &x0 - &b).norm();
        if residual > 1e-9 {
            return Err(ReadoutError::Infeasible(format!(
                "{n} coefficients cannot satisfy the boundary and displacement constraints (residual {residual:e})"
            )));
        }
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let free: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] <= tol)
            .collect();
        let mut basis = DMatrix::zeros(n, free.len());
        for (j, &i) in free.iter().enumerate() {
            basis.set_column(j, &v_t.row(i).transpose());
        }
        Ok(Constraints { scale, x0, basis })
    }

    fn nullity(&self) -> usize {
        self.basis.ncols()
    }

    fn point(&self, z: &[f64]) -> DVector<f64> {
        &self.x0 + &self.basis * DVector::from_column_slice(z)
    }

    fn project(&self, xi: &DVector<f64>) -> Vec<f64> {
        (self.basis.transpose() * (xi - &self.x0)).iter().copied().collect()
    }
}

/// Problem-specific decoding of genomes into coefficients.
struct Encoding {
    mode: ConstraintMode,
    cons: Constraints,
    /// Coefficient bound in units of s.
    bound: f64,
    /// Mutation width in units of s.
    sigma: f64,
    n: usize,
}

impl Encoding {
    fn genome_len(&self) -> usize {
        match self.mode {
            ConstraintMode::NullSpace => self.cons.nullity(),
            ConstraintMode::Penalty => self.n,
        }
    }

    /// Pulls a genome back into the coefficient box.
    fn clip(&self, g: &mut [f64]) {
        match self.mode {
            ConstraintMode::Penalty => g.iter_mut().for_each(|x| *x = x.clamp(-self.bound, self.bound)),
            ConstraintMode::NullSpace => {
                // largest α ∈ [0, 1] keeping x₀ + α·N z inside the box
                let dir = &self.cons.basis * DVector::from_column_slice(g);
                let mut alpha: f64 = 1.0;
                for (x0, d) in self.cons.x0.iter().zip(dir.iter()) {
                    if *d != 0.0 {
                        let limit = if *d > 0.0 { (self.bound - x0) / d } else { (-self.bound - x0) / d };
                        alpha = alpha.min(limit.max(0.0));
                    }
                }
                if alpha < 1.0 {
                    g.iter_mut().for_each(|z| *z *= alpha);
                }
            }
        }
    }

    fn coefficients(&self, g: &[f64]) -> Vec<f64> {
        let xi = match self.mode {
            ConstraintMode::NullSpace => self.cons.point(g),
            ConstraintMode::Penalty => DVector::from_column_slice(g),
        };
        xi.iter().map(|x| x * self.cons.scale).collect()
    }

    fn encode(&self, coeffs: &[f64]) -> Vec<f64> {
        let xi = DVector::from_iterator(self.n, coeffs.iter().map(|c| c / self.cons.scale));
        match self.mode {
            ConstraintMode::NullSpace => self.cons.project(&xi),
            ConstraintMode::Penalty => xi.iter().copied().collect(),
        }
    }
}

/// Result of [`ga_run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedModulation {
    pub coefficients: Vec<f64>,
    pub horizon: f64,
    pub n_coeffs: usize,
    pub seed: u64,
    pub constraint_mode: ConstraintMode,
    /// Best fitness per generation, generation 0 first.
    pub fitness_history: Vec<f64>,
    pub mean_history: Vec<f64>,
    pub feasible_fraction: Vec<f64>,
    pub final_snr: f64,
    pub final_fitness: f64,
    /// SNR at the horizon of the trigonometric ansatz designed on `[0, T]`.
    pub incumbent_snr: f64,
    pub constraint_residuals: BoundaryReport,
}

impl OptimizedModulation {
    pub fn modulation(&self) -> Result<Modulation> {
        Modulation::fourier_flat(self.coefficients.clone(), self.horizon)
    }

    /// CSV with columns generation, best, mean, feasible_fraction.
    pub fn write_history_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "generation,best,mean,feasible_fraction")?;
        for i in 0..self.fitness_history.len() {
            writeln!(
                w,
                "{},{:e},{:e},{:e}",
                i, self.fitness_history[i], self.mean_history[i], self.feasible_fraction[i]
            )?;
        }
        Ok(())
    }
}

/// Trigonometric ansatz on `[0, T]` in Fourier layout, truncated to K sines.
pub fn incumbent_coefficients(p: &SystemParams, cfg: &GAConfig) -> Vec<f64> {
    let k = cfg.n_coeffs / 2;
    let trig = trigonometric_ansatz(&horizon_params(p, cfg));
    let mut coeffs = vec![0.0; 2 * k];
    for (i, &a) in trig.coefficients().iter().enumerate().take(k) {
        coeffs[k + i] = a;
    }
    coeffs
}

fn rng_for(seed: u64, generation: usize, individual: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | individual as u64);
    rng
}

fn tournament<'a>(pop: &'a [Evaluation], genomes: &'a [Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> &'a [f64] {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let c = rng.random_range(0..pop.len());
        if pop[c].fitness > pop[best].fitness {
            best = c;
        }
    }
    &genomes[best]
}

/// Runs the genetic search. Deterministic for a given seed regardless of
/// thread count.
pub fn ga_run(p: &SystemParams, cfg: &GAConfig) -> Result<OptimizedModulation> {
    cfg.validate()?;
    let ph = horizon_params(p, cfg);
    let cons = Constraints::new(cfg.n_coeffs, &ph)?;
    let scale = cons.scale;
    let enc = Encoding {
        mode: cfg.constraint_mode,
        bound: cfg.coeff_bound.map_or(50.0, |b| b / scale),
        sigma: cfg.mutation_sigma.map_or(0.1, |s| s / scale),
        n: cfg.n_coeffs,
        cons,
    };
    if enc.mode == ConstraintMode::NullSpace {
        if enc.genome_len() == 0 {
            return Err(ReadoutError::Infeasible(format!(
                "{} coefficients leave no free direction after the constraints",
                cfg.n_coeffs
            )));
        }
        if enc.cons.x0.amax() > enc.bound {
            return Err(ReadoutError::Infeasible(
                "least-norm feasible waveform exceeds the coefficient bound".into(),
            ));
        }
    }
    let glen = enc.genome_len();
    let normal = Normal::new(0.0, enc.sigma).map_err(|e| ReadoutError::Input(e.to_string()))?;

    let incumbent = incumbent_coefficients(p, cfg);
    let incumbent_snr = snr_at_horizon(
        &trigonometric_ansatz(&ph),
        p.kappa,
        cfg.horizon,
        cfg.grid_points,
    )?;

    let mut genomes: Vec<Vec<f64>> = (0..cfg.population)
        .into_par_iter()
        .map(|i| {
            let mut g = if i == 0 {
                enc.encode(&incumbent)
            } else {
                let mut rng = rng_for(cfg.seed, 0, i);
                (0..glen).map(|_| rng.random_range(-enc.bound..=enc.bound)).collect()
            };
            enc.clip(&mut g);
            g
        })
        .collect();

    let eval_all = |genomes: &[Vec<f64>]| -> Result<Vec<Evaluation>> {
        genomes
            .par_iter()
            .map(|g| evaluate(&enc.coefficients(g), p, cfg))
            .collect()
    };

    let mut evals = eval_all(&genomes)?;
    let mut best_feasible: Option<Evaluation> = None;
    let mut fitness_history = Vec::with_capacity(cfg.generations + 1);
    let mut mean_history = Vec::with_capacity(cfg.generations + 1);
    let mut feasible_fraction = Vec::with_capacity(cfg.generations + 1);

    for generation in 0..=cfg.generations {
        for e in &evals {
            if e.feasible && best_feasible.as_ref().is_none_or(|b| e.fitness > b.fitness) {
                best_feasible = Some(e.clone());
            }
        }
        let best = evals.iter().map(|e| e.fitness).fold(f64::NEG_INFINITY, f64::max);
        let finite: Vec<f64> = evals.iter().map(|e| e.fitness).filter(|f| f.is_finite()).collect();
        fitness_history.push(best);
        mean_history.push(if finite.is_empty() {
            f64::NEG_INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        });
        feasible_fraction.push(evals.iter().filter(|e| e.feasible).count() as f64 / evals.len() as f64);
        if generation == cfg.generations {
            break;
        }

        let mut order: Vec<usize> = (0..evals.len()).collect();
        order.sort_by(|&a, &b| evals[b].fitness.total_cmp(&evals[a].fitness).then(a.cmp(&b)));
        let elites: Vec<usize> = order[..cfg.elitism].to_vec();

        let next_gen = generation + 1;
        let children: Vec<Vec<f64>> = (cfg.elitism..cfg.population)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(cfg.seed, next_gen, i);
                let a = tournament(&evals, &genomes, cfg.tournament, &mut rng);
                let b = tournament(&evals, &genomes, cfg.tournament, &mut rng);
                let mut child: Vec<f64> = if rng.random::<f64>() < cfg.crossover_rate {
                    a.iter().zip(b).map(|(x, y)| if rng.random::<bool>() { *x } else { *y }).collect()
                } else {
                    a.to_vec()
                };
                for gene in child.iter_mut() {
                    if rng.random::<f64>() < cfg.mutation_rate {
                        *gene += normal.sample(&mut rng);
                    }
                }
                enc.clip(&mut child);
                child
            })
            .collect();
        let child_evals = eval_all(&children)?;

        let mut new_genomes = Vec::with_capacity(cfg.population);
        let mut new_evals = Vec::with_capacity(cfg.population);
        for &e in &elites {
            new_genomes.push(genomes[e].clone());
            new_evals.push(evals[e].clone());
        }
        new_genomes.extend(children);
        new_evals.extend(child_evals);
        genomes = new_genomes;
        evals = new_evals;
    }

    let best = best_feasible.ok_or_else(|| {
        ReadoutError::Infeasible(format!(
            "no individual met the boundary tolerance {FEASIBILITY_TOL:e} in {} generations",
            cfg.generations
        ))
    })?;
    let m = Modulation::fourier_flat(best.coeffs.clone(), cfg.horizon)?;
    Ok(OptimizedModulation {
        constraint_residuals: verify_boundaries(&m, &ph, FEASIBILITY_TOL),
        coefficients: best.coeffs,
        horizon: cfg.horizon,
        n_coeffs: cfg.n_coeffs,
        seed: cfg.seed,
        constraint_mode: cfg.constraint_mode,
        fitness_history,
        mean_history,
        feasible_fraction,
        final_snr: best.snr,
        final_fitness: best.fitness,
        incumbent_snr,
    })
}
