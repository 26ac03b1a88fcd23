//! Monte Carlo trajectory ensembles and the derived observables.
//!
//! The ensemble density matrix is never materialized on the full grid:
//! probabilities and the survival probability are linear in ρ and average
//! over trajectories, and the purity Tr ρ² comes from the trajectory Gram
//! matrix, `M = (1/N²) Σ_kl |<ψ_k|ψ_l>|²`. A direct grid-basis ρ is still
//! available for small grids to cross-check that identity.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;

use crate::decoherence::{evolve_trajectory, KickEvent, KickParams, TrajectorySeed};
use crate::dynamics::{PropagatorPlan, WaveFunction};
use crate::error::{Error, Result};
use crate::lattice::{Side, WellPartition};
use crate::scalar::{lit, Real};
use crate::spectral::{make_l_state, make_superposition, BlochSpectrum, SuperpositionSpec};

/// Initial state of every trajectory.
#[derive(Debug, Clone)]
pub enum InitialState<R> {
    /// Left-localized doublet superposition (|0> + e^{iα}|1>)/√2.
    LState,
    /// Single normalized Gaussian packet synthesized directly on the grid.
    Gaussian { sigma: R, center: R },
    /// Explicit superposition over q = 0 eigenstates.
    Superposition(SuperpositionSpec<R>),
}

/// Full ensemble specification.
#[derive(Debug, Clone)]
pub struct EnsembleConfig<R> {
    pub n_trajectories: usize,
    pub base_seed: u64,
    /// Strictly increasing, starting at 0; aligned to the propagator step.
    pub record_times: Vec<R>,
    pub initial_state: InitialState<R>,
    pub kick: KickParams<R>,
    /// Attach across-trajectory standard errors to P_L and F.
    pub with_std_err: bool,
    /// Run trajectories on the rayon pool; results are identical either way.
    pub parallel: bool,
    /// Collect per-trajectory kick logs.
    pub keep_kick_log: bool,
}

impl<R: Real> EnsembleConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 1 {
            return Err(Error::validation("n_trajectories", "must be at least 1"));
        }
        if self.record_times.is_empty() || self.record_times[0] != R::zero() {
            return Err(Error::validation("record_times", "must start at 0"));
        }
        for w in self.record_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::validation(
                    "record_times",
                    "must be strictly increasing",
                ));
            }
        }
        Ok(())
    }
}

/// Time series of every observable, one entry per record time.
#[derive(Debug, Clone)]
pub struct ObservableSeries<R> {
    pub times: Vec<R>,
    /// P_L summed over all left wells.
    pub p_left_total: Vec<R>,
    /// Probability in the left interval of the designated initial cell.
    pub p_initial_well: Vec<R>,
    /// Probability in the right interval of the same cell.
    pub p_right_well: Vec<R>,
    /// Survival probability F(t) = <ψ0|ρ|ψ0>.
    pub survival: Vec<R>,
    /// Purity M(t) = Tr ρ².
    pub purity: Vec<R>,
    pub se_p_left: Option<Vec<R>>,
    pub se_survival: Option<Vec<R>>,
    /// Kick logs per trajectory when requested.
    pub kick_logs: Option<Vec<Vec<KickEvent<R>>>>,
}

/// Density matrix access without committing to a representation.
pub enum DensityMatrixView<'a, R: Real> {
    /// Grid-basis ρ(x_j, x_j'), with the dx measure still external.
    Full(DMatrix<Complex<R>>),
    /// Trajectory Gram form: states plus their pairwise overlaps.
    Gram {
        waves: &'a [WaveFunction<R>],
        gram: DMatrix<Complex<R>>,
    },
}

impl<'a, R: Real> DensityMatrixView<'a, R> {
    pub fn purity(&self, dx: R) -> R {
        match self {
            DensityMatrixView::Full(rho) => purity_direct(rho, dx),
            DensityMatrixView::Gram { gram, .. } => purity_from_gram(gram),
        }
    }
}

/// Pairwise overlap matrix G_kl = <ψ_k|ψ_l> with the dx measure.
pub fn gram_matrix<R: Real>(waves: &[&WaveFunction<R>]) -> DMatrix<Complex<R>> {
    let n = waves.len();
    let mut g = DMatrix::from_element(n, n, Complex::new(R::zero(), R::zero()));
    for k in 0..n {
        for l in k..n {
            let v = waves[k].inner(waves[l]);
            g[(k, l)] = v;
            g[(l, k)] = v.conj();
        }
    }
    g
}

/// Purity via the Gram identity M = (1/N²) Σ_kl |G_kl|².
pub fn purity_from_gram<R: Real>(gram: &DMatrix<Complex<R>>) -> R {
    let n = gram.nrows();
    let sum = gram
        .iter()
        .map(|z| z.norm_sqr())
        .fold(R::zero(), |a, b| a + b);
    sum / lit::<R>((n * n) as f64)
}

/// Ensemble purity of a set of trajectory states.
pub fn purity<R: Real>(waves: &[&WaveFunction<R>]) -> R {
    purity_from_gram(&gram_matrix(waves))
}

/// Grid-basis density matrix ρ(x_j, x_j') = (1/N) Σ_k ψ_k(x_j) ψ_k*(x_j').
/// Quadratic in the grid size; intended for small grids.
pub fn assemble_density<R: Real>(waves: &[&WaveFunction<R>]) -> DMatrix<Complex<R>> {
    let n_grid = waves[0].amplitudes.len();
    let inv_n = R::one() / lit::<R>(waves.len() as f64);
    DMatrix::from_fn(n_grid, n_grid, |a, b| {
        let mut acc = Complex::new(R::zero(), R::zero());
        for w in waves {
            acc = acc + w.amplitudes[a] * w.amplitudes[b].conj();
        }
        acc.scale(inv_n)
    })
}

/// Direct double integral of Tr ρ²: Σ_ab ρ(a,b) ρ(b,a) dx².
pub fn purity_direct<R: Real>(rho: &DMatrix<Complex<R>>, dx: R) -> R {
    let n = rho.nrows();
    let mut acc = Complex::new(R::zero(), R::zero());
    for a in 0..n {
        for b in 0..n {
            acc = acc + rho[(a, b)] * rho[(b, a)];
        }
    }
    (acc * Complex::new(dx * dx, R::zero())).re
}

/// Trace Σ_j ρ(x_j, x_j) dx of a full-grid density matrix.
pub fn trace<R: Real>(rho: &DMatrix<Complex<R>>, dx: R) -> R {
    let mut acc = R::zero();
    for a in 0..rho.nrows() {
        acc = acc + rho[(a, a)].re;
    }
    acc * dx
}

/// Probability in (x_lo, x_hi] averaged over trajectories (boundary points
/// belong to the interval they terminate, the lower-x convention).
pub fn prob_in_interval<R: Real>(waves: &[&WaveFunction<R>], interval: (R, R)) -> R {
    let grid = waves[0].grid;
    let mask: Vec<bool> = (0..grid.n_points)
        .map(|j| {
            let x = grid.point(j);
            x > interval.0 && x <= interval.1
        })
        .collect();
    mean_masked_prob(waves, &mask)
}

/// P_L: probability summed over every left interval of the partition,
/// averaged over trajectories.
pub fn prob_left_total<R: Real>(waves: &[&WaveFunction<R>], partition: &WellPartition<R>) -> R {
    let grid = waves[0].grid;
    let mask: Vec<bool> = (0..grid.n_points)
        .map(|j| partition.classify(grid.point(j)).1 == Side::Left)
        .collect();
    mean_masked_prob(waves, &mask)
}

/// F = <ψ0|ρ|ψ0> = (1/N) Σ_k |<ψ0|ψ_k>|².
pub fn survival<R: Real>(waves: &[&WaveFunction<R>], psi0: &WaveFunction<R>) -> R {
    let sum = waves
        .iter()
        .map(|w| psi0.inner(w).norm_sqr())
        .fold(R::zero(), |a, b| a + b);
    sum / lit::<R>(waves.len() as f64)
}

fn mean_masked_prob<R: Real>(waves: &[&WaveFunction<R>], mask: &[bool]) -> R {
    let dx = waves[0].grid.dx;
    let sum = waves
        .iter()
        .map(|w| {
            w.amplitudes
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(a, _)| a.norm_sqr())
                .fold(R::zero(), |s, v| s + v)
                * dx
        })
        .fold(R::zero(), |a, b| a + b);
    sum / lit::<R>(waves.len() as f64)
}

fn masked_prob<R: Real>(w: &WaveFunction<R>, mask: &[bool]) -> R {
    w.amplitudes
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(a, _)| a.norm_sqr())
        .fold(R::zero(), |s, v| s + v)
        * w.grid.dx
}

struct TrajectoryResult<R> {
    snapshots: Vec<WaveFunction<R>>,
    kicks: Option<Vec<KickEvent<R>>>,
}

/// Runs the full Monte Carlo ensemble and reduces every observable at every
/// record time. Trajectory k uses the RNG stream (base_seed, k); the
/// reduction is performed in trajectory order, so parallel and sequential
/// execution give identical output.
pub fn run_ensemble<R: Real>(
    cfg: &EnsembleConfig<R>,
    plan: &PropagatorPlan<R>,
    spectrum: &BlochSpectrum<R>,
    partition: &WellPartition<R>,
) -> Result<ObservableSeries<R>> {
    cfg.validate()?;
    let grid = plan.grid;
    let (psi0, designated_center) = match &cfg.initial_state {
        InitialState::LState => {
            let (w, _alpha) = make_l_state(spectrum, &grid, partition);
            (w, R::zero())
        }
        InitialState::Gaussian { sigma, center } => {
            if !(*sigma > R::zero()) {
                return Err(Error::validation("sigma", "must be > 0"));
            }
            let two = lit::<R>(2.0);
            let amps: Vec<Complex<R>> = (0..grid.n_points)
                .map(|j| {
                    let d = grid.point(j) - *center;
                    Complex::new(Float::exp(-(d * d) / (two * *sigma * *sigma)), R::zero())
                })
                .collect();
            let mut w = WaveFunction::new(amps, grid);
            w.normalize();
            (w, *center)
        }
        InitialState::Superposition(spec) => {
            (make_superposition(spec, spectrum, &grid)?, R::zero())
        }
    };

    // Designated cell: the one holding the packet center (x = 0 otherwise).
    let init_cell = partition.cell_of(designated_center);
    let n_grid = grid.n_points;
    let mut left_mask = vec![false; n_grid];
    let mut init_left_mask = vec![false; n_grid];
    let mut init_right_mask = vec![false; n_grid];
    for j in 0..n_grid {
        let (cell, side) = partition.classify(grid.point(j));
        match side {
            Side::Left => {
                left_mask[j] = true;
                if cell == init_cell {
                    init_left_mask[j] = true;
                }
            }
            Side::Right => {
                if cell == init_cell {
                    init_right_mask[j] = true;
                }
            }
        }
    }

    let run_one = |k: usize| -> TrajectoryResult<R> {
        let mut snapshots = Vec::with_capacity(cfg.record_times.len());
        let mut log = cfg.keep_kick_log.then(Vec::new);
        evolve_trajectory(
            &psi0,
            plan,
            &cfg.kick,
            &cfg.record_times,
            TrajectorySeed {
                base_seed: cfg.base_seed,
                trajectory_index: k as u64,
            },
            |_, _, w| snapshots.push(w.clone()),
            log.as_mut(),
        );
        TrajectoryResult {
            snapshots,
            kicks: log,
        }
    };

    let results: Vec<TrajectoryResult<R>> = if cfg.parallel {
        (0..cfg.n_trajectories)
            .into_par_iter()
            .map(run_one)
            .collect()
    } else {
        (0..cfg.n_trajectories).map(run_one).collect()
    };

    let n = cfg.n_trajectories;
    let n_rec = cfg.record_times.len();
    let inv_n = R::one() / lit::<R>(n as f64);
    let mut series = ObservableSeries {
        times: cfg.record_times.clone(),
        p_left_total: Vec::with_capacity(n_rec),
        p_initial_well: Vec::with_capacity(n_rec),
        p_right_well: Vec::with_capacity(n_rec),
        survival: Vec::with_capacity(n_rec),
        purity: Vec::with_capacity(n_rec),
        se_p_left: cfg.with_std_err.then(Vec::new),
        se_survival: cfg.with_std_err.then(Vec::new),
        kick_logs: cfg
            .keep_kick_log
            .then(|| results.iter().map(|r| r.kicks.clone().unwrap()).collect()),
    };

    for ri in 0..n_rec {
        let waves: Vec<&WaveFunction<R>> = results.iter().map(|r| &r.snapshots[ri]).collect();
        let pl_each: Vec<R> = waves.iter().map(|w| masked_prob(w, &left_mask)).collect();
        let f_each: Vec<R> = waves
            .iter()
            .map(|w| psi0.inner(w).norm_sqr())
            .collect();
        let pl = pl_each.iter().fold(R::zero(), |a, &b| a + b) * inv_n;
        let f = f_each.iter().fold(R::zero(), |a, &b| a + b) * inv_n;
        series.p_left_total.push(pl);
        series.survival.push(f);
        series
            .p_initial_well
            .push(waves.iter().map(|w| masked_prob(w, &init_left_mask)).fold(R::zero(), |a, b| a + b) * inv_n);
        series
            .p_right_well
            .push(waves.iter().map(|w| masked_prob(w, &init_right_mask)).fold(R::zero(), |a, b| a + b) * inv_n);
        series.purity.push(purity(&waves));
        if let Some(se) = series.se_p_left.as_mut() {
            se.push(std_error(&pl_each, pl));
        }
        if let Some(se) = series.se_survival.as_mut() {
            se.push(std_error(&f_each, f));
        }
    }
    Ok(series)
}

/// Across-trajectory standard error of the mean.
fn std_error<R: Real>(samples: &[R], mean: R) -> R {
    let n = samples.len();
    if n < 2 {
        return R::zero();
    }
    let var = samples
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .fold(R::zero(), |a, b| a + b)
        / lit::<R>((n - 1) as f64);
    Float::sqrt(var / lit::<R>(n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::DirectionModel;
    use crate::dynamics::{plan_propagator, Grid};
    use crate::lattice::LatticeParams;
    use crate::spectral::{solve_spectrum, synthesize_on_grid, PlaneWaveBasis};

    fn setup(
        z_f: f64,
    ) -> (
        LatticeParams<f64>,
        Grid<f64>,
        BlochSpectrum<f64>,
        WellPartition<f64>,
    ) {
        let p = LatticeParams::figure(z_f);
        let g = Grid::new(-9.75, 10.25, 512).unwrap();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        let part = WellPartition::build(&p, (g.x_min, g.x_max), 256).unwrap();
        (p, g, spec, part)
    }

    fn base_cfg(record_times: Vec<f64>) -> EnsembleConfig<f64> {
        EnsembleConfig {
            n_trajectories: 1,
            base_seed: 0,
            record_times,
            initial_state: InitialState::LState,
            kick: KickParams::disabled(),
            with_std_err: false,
            parallel: false,
            keep_kick_log: false,
        }
    }

    #[test]
    fn purity_degenerate_cases() {
        let (_, g, spec, _) = setup(0.1);
        let w0 = synthesize_on_grid(&spec.states[0], &g);
        let w1 = synthesize_on_grid(&spec.states[1], &g);

        // N = 1 and identical copies are pure.
        assert!((purity(&[&w0]) - 1.0).abs() < 1e-10);
        assert!((purity(&[&w0, &w0, &w0]) - 1.0).abs() < 1e-10);
        // Two orthogonal states give the maximally mixed value 1/2.
        assert!((purity(&[&w0, &w1]) - 0.5).abs() < 1e-10);

        let g1 = gram_matrix(&[&w0]);
        assert_eq!(g1.nrows(), 1);
        assert!((g1[(0, 0)].re - 1.0).abs() < 1e-12);
        let g2 = gram_matrix(&[&w0, &w1]);
        assert!(g2[(0, 1)].norm() < 1e-10);
        assert!((g2[(1, 1)].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gram_purity_equals_direct_double_integral() {
        // 64-point grid, 5 non-orthogonal trajectories.
        let g = Grid::new(0.0, 4.0, 64).unwrap();
        let mk = |f: &dyn Fn(f64) -> Complex<f64>| {
            let mut w = WaveFunction::new((0..64).map(|j| f(g.point(j))).collect(), g);
            w.normalize();
            w
        };
        let waves = [
            mk(&|x| Complex::new((-(x - 1.0) * (x - 1.0)).exp(), 0.0)),
            mk(&|x| Complex::new((-(x - 2.0) * (x - 2.0) / 0.5).exp(), 0.1 * x.sin())),
            mk(&|x| Complex::from_polar((-(x - 2.5) * (x - 2.5)).exp(), 2.0 * x)),
            mk(&|x| Complex::new(x.sin(), x.cos() * 0.3)),
            mk(&|x| Complex::from_polar(1.0, -3.0 * x)),
        ];
        let refs: Vec<&WaveFunction<f64>> = waves.iter().collect();
        let rho = assemble_density(&refs);
        let direct = purity_direct(&rho, g.dx);
        let gram = purity(&refs);
        assert!(
            (gram - direct).abs() < 1e-10,
            "gram {gram} vs direct {direct}"
        );
        // trace is preserved
        assert!((trace(&rho, g.dx) - 1.0).abs() < 1e-10);

        let view = DensityMatrixView::Full(rho);
        assert!((view.purity(g.dx) - direct).abs() < 1e-12);
    }

    #[test]
    fn linearity_of_interval_probabilities() {
        // The trajectory-averaged interval probability equals the diagonal
        // of the assembled density matrix integrated over the interval.
        let g = Grid::new(0.0, 2.0, 64).unwrap();
        let mk = |c: f64| {
            let mut w = WaveFunction::new(
                (0..64)
                    .map(|j| Complex::from_polar((-(g.point(j) - c).powi(2) / 0.1).exp(), c * g.point(j)))
                    .collect(),
                g,
            );
            w.normalize();
            w
        };
        let waves = [mk(0.5), mk(1.0), mk(1.3)];
        let refs: Vec<&WaveFunction<f64>> = waves.iter().collect();
        let interval = (0.25, 1.25);
        let avg = prob_in_interval(&refs, interval);
        let rho = assemble_density(&refs);
        let mut from_rho = 0.0;
        for j in 0..64 {
            let x = g.point(j);
            if x > interval.0 && x <= interval.1 {
                from_rho += rho[(j, j)].re;
            }
        }
        from_rho *= g.dx;
        assert!((avg - from_rho).abs() < 1e-10);

        // whole domain sums to one; complementary intervals add up
        let whole = prob_in_interval(&refs, (g.x_min - 1.0, g.x_max));
        assert!((whole - 1.0).abs() < 1e-8);
        let a = prob_in_interval(&refs, (g.x_min - 1.0, 1.0));
        let b = prob_in_interval(&refs, (1.0, g.x_max));
        assert!((a + b - whole).abs() < 1e-10);
    }

    #[test]
    fn uniform_state_splits_by_interval_length() {
        let (_, g, _, part) = setup(0.05);
        let mut w = WaveFunction::new(vec![Complex::new(1.0, 0.0); g.n_points], g);
        w.normalize();
        let pl = prob_left_total(&[&w], &part);
        let frac = part.total_side_length(Side::Left) / part.width();
        assert!((pl - frac).abs() < 1e-8);
    }

    #[test]
    fn left_and_right_partition_the_norm() {
        let (_, g, spec, part) = setup(0.1);
        let (l_state, _) = make_l_state(&spec, &g, &part);
        let refs = [&l_state];
        let pl = prob_left_total(&refs, &part);
        let mask: Vec<bool> = (0..g.n_points)
            .map(|j| part.classify(g.point(j)).1 == Side::Right)
            .collect();
        let pr = mean_masked_prob(&refs, &mask);
        assert!((pl + pr - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_unitary_trajectory_stays_pure() {
        let (p, g, spec, part) = setup(0.1);
        let plan = plan_propagator(&p, &g, 1e-3);
        let mut cfg = base_cfg((0..=5).map(|i| i as f64 * 0.2).collect());
        cfg.initial_state = InitialState::Gaussian {
            sigma: 0.1,
            center: 0.0,
        };
        let series = run_ensemble(&cfg, &plan, &spec, &part).unwrap();
        for (i, &m) in series.purity.iter().enumerate() {
            assert!((m - 1.0).abs() < 1e-8, "M at record {i} = {m}");
        }
        assert!((series.survival[0] - 1.0).abs() < 1e-10);
        assert!(series.p_initial_well[0] > 0.95);
        for (&pl, (&pi, &pr)) in series
            .p_left_total
            .iter()
            .zip(series.p_initial_well.iter().zip(&series.p_right_well))
        {
            for v in [pl, pi, pr] {
                assert!((-1e-8..=1.0 + 1e-8).contains(&v));
            }
        }
    }

    #[test]
    fn survival_follows_the_doublet_formula() {
        // F(t) = cos²(δt/2) for the |L> state; at the half period the state
        // sits in the right wells and F is near its minimum.
        let (p, g, spec, part) = setup(0.1);
        let delta = spec.splitting();
        let t_half = std::f64::consts::PI / delta;
        let plan = plan_propagator(&p, &g, 1e-3);
        let mut cfg = base_cfg(vec![0.0, 0.3 * t_half, t_half]);
        cfg.initial_state = InitialState::LState;
        let series = run_ensemble(&cfg, &plan, &spec, &part).unwrap();
        let expect_mid = (delta * 0.3 * t_half / 2.0).cos().powi(2);
        assert!((series.survival[1] - expect_mid).abs() < 0.05);
        assert!(series.survival[2] < 0.05, "F(half period) near minimum");
        assert!(series.p_left_total[2] < 0.05, "state in the right wells");
    }

    #[test]
    fn ensemble_is_deterministic_and_parallel_invariant() {
        let (p, g, spec, part) = setup(0.1);
        let plan = plan_propagator(&p, &g, 1e-3);
        let mut cfg = base_cfg((0..=3).map(|i| i as f64 * 0.5).collect());
        cfg.n_trajectories = 6;
        cfg.base_seed = 9;
        cfg.kick = KickParams {
            strength_m: 10.0,
            rate: 1.0,
            enabled: true,
            direction: DirectionModel::Isotropic,
        };
        cfg.with_std_err = true;

        cfg.parallel = true;
        let a = run_ensemble(&cfg, &plan, &spec, &part).unwrap();
        cfg.parallel = false;
        let b = run_ensemble(&cfg, &plan, &spec, &part).unwrap();
        let c = run_ensemble(&cfg, &plan, &spec, &part).unwrap();

        assert_eq!(a.p_left_total, b.p_left_total);
        assert_eq!(a.survival, b.survival);
        assert_eq!(a.purity, b.purity);
        assert_eq!(b.purity, c.purity);
        assert_eq!(a.se_p_left, b.se_p_left);

        // purity bounds 1/N <= M <= 1
        for &m in &a.purity {
            assert!(m <= 1.0 + 1e-10);
            assert!(m >= 1.0 / cfg.n_trajectories as f64 - 1e-10);
        }
        assert!((a.purity[0] - 1.0).abs() < 1e-12, "M(0) = 1 for pure start");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = base_cfg(vec![0.0, 1.0]);
        cfg.n_trajectories = 0;
        assert!(cfg.validate().is_err());
        let cfg = base_cfg(vec![1.0, 2.0]);
        assert!(cfg.validate().is_err());
        let cfg = base_cfg(vec![0.0, 1.0, 1.0]);
        assert!(cfg.validate().is_err());
    }
}
