//! Uniform periodic grid, wavefunctions, and the split-operator Fourier
//! propagator for i dψ/dt = H ψ.
//!
//! One step is the Strang factorization
//! `e^{-iV dt/2} · F⁻¹ e^{-iT dt} F · e^{-iV dt/2}`
//! with T diagonal in the transform basis. Spectral momenta are expressed
//! relative to k, so a plane wave `e^{inkx}` carries kinetic energy exactly
//! n² E_R and a unit harmonic acquires phase `e^{-i dt}` per step.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Float;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::scalar::{fabs, lit, Real};

/// Uniform periodic spatial grid over an integer number of lattice periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<R> {
    pub x_min: R,
    pub x_max: R,
    pub n_points: usize,
    pub dx: R,
}

impl<R: Real> Grid<R> {
    /// Fails with `BadDomain` unless the width is an integer multiple of λ
    /// and `n_points` is a power of two.
    pub fn new(x_min: R, x_max: R, n_points: usize) -> Result<Self> {
        let width = (x_max - x_min).to_f64().unwrap_or(f64::NAN);
        if !(width > 0.0) || (width - width.round()).abs() > 1e-9 {
            return Err(Error::BadDomain(format!(
                "grid width {width} is not a positive integer multiple of lambda"
            )));
        }
        if !n_points.is_power_of_two() {
            return Err(Error::BadDomain(format!(
                "n_points {n_points} is not a power of two"
            )));
        }
        let dx = (x_max - x_min) / lit::<R>(n_points as f64);
        Ok(Grid {
            x_min,
            x_max,
            n_points,
            dx,
        })
    }

    pub fn width(&self) -> R {
        self.x_max - self.x_min
    }

    /// Position of grid point `j`.
    pub fn point(&self, j: usize) -> R {
        self.x_min + lit::<R>(j as f64) * self.dx
    }

    pub fn points(&self) -> Vec<R> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Spectral wavenumbers `2π m / L` in transform order
    /// (m = j for j < N/2, j − N otherwise).
    pub fn wavenumbers(&self) -> Vec<R> {
        let n = self.n_points;
        let scale = R::TAU() / self.width();
        (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                scale * lit::<R>(m as f64)
            })
            .collect()
    }

    /// Kinetic energies `(p_j / k)²` in E_R, transform order.
    pub fn kinetic_er(&self) -> Vec<R> {
        let n = self.n_points;
        let cells = self.width(); // width in units of lambda
        (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                let r = lit::<R>(m as f64) / cells;
                r * r
            })
            .collect()
    }
}

/// Complex amplitudes over the grid points, with the grid measure carried
/// along: norms and inner products include the factor dx.
#[derive(Debug, Clone)]
pub struct WaveFunction<R> {
    pub amplitudes: Vec<Complex<R>>,
    pub grid: Grid<R>,
}

impl<R: Real> WaveFunction<R> {
    pub fn new(amplitudes: Vec<Complex<R>>, grid: Grid<R>) -> Self {
        assert_eq!(amplitudes.len(), grid.n_points);
        WaveFunction { amplitudes, grid }
    }

    /// `Σ_j |ψ_j|² dx`.
    pub fn norm_sqr(&self) -> R {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            * self.grid.dx
    }

    pub fn normalize(&mut self) {
        let n = Float::sqrt(self.norm_sqr());
        for a in self.amplitudes.iter_mut() {
            *a = a.unscale(n);
        }
    }

    /// `<self|other> = Σ_j conj(self_j) other_j dx`.
    pub fn inner(&self, other: &Self) -> Complex<R> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * *b)
            .fold(Complex::new(R::zero(), R::zero()), |acc, z| acc + z)
            .scale(self.grid.dx)
    }

    /// Maximum pointwise amplitude difference against another wavefunction.
    pub fn max_pointwise_diff(&self, other: &Self) -> R {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| Float::sqrt((*a - *b).norm_sqr()))
            .fold(R::zero(), |m, d| if d > m { d } else { m })
    }
}

/// Precomputed split-operator step for a fixed dt: pure phase vectors plus
/// the transform pair. Immutable and shareable across trajectory workers;
/// per-worker scratch comes from [`PropagatorPlan::make_scratch`].
pub struct PropagatorPlan<R: Real> {
    pub dt: R,
    pub grid: Grid<R>,
    half_potential_phase: Vec<Complex<R>>,
    kinetic_phase: Vec<Complex<R>>,
    potential: Vec<R>,
    kinetic: Vec<R>,
    fft_fwd: Arc<dyn Fft<R>>,
    fft_inv: Arc<dyn Fft<R>>,
    inv_n: R,
}

impl<R: Real> std::fmt::Debug for PropagatorPlan<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropagatorPlan")
            .field("dt", &self.dt)
            .field("grid", &self.grid)
            .finish()
    }
}

/// Precomputes the phase vectors for `potential_1d` on the grid.
pub fn plan_propagator<R: Real>(
    params: &LatticeParams<R>,
    grid: &Grid<R>,
    dt: R,
) -> PropagatorPlan<R> {
    let potential: Vec<R> = (0..grid.n_points)
        .map(|j| params.potential_1d(grid.point(j)))
        .collect();
    let kinetic = grid.kinetic_er();
    let half = lit::<R>(0.5);
    let half_potential_phase = potential
        .iter()
        .map(|&v| Complex::from_polar(R::one(), -v * dt * half))
        .collect();
    let kinetic_phase = kinetic
        .iter()
        .map(|&t| Complex::from_polar(R::one(), -t * dt))
        .collect();
    let mut planner = FftPlanner::new();
    let fft_fwd = planner.plan_fft_forward(grid.n_points);
    let fft_inv = planner.plan_fft_inverse(grid.n_points);
    PropagatorPlan {
        dt,
        grid: *grid,
        half_potential_phase,
        kinetic_phase,
        potential,
        kinetic,
        fft_fwd,
        fft_inv,
        inv_n: R::one() / lit::<R>(grid.n_points as f64),
    }
}

impl<R: Real> PropagatorPlan<R> {
    pub fn make_scratch(&self) -> Vec<Complex<R>> {
        let len = self
            .fft_fwd
            .get_inplace_scratch_len()
            .max(self.fft_inv.get_inplace_scratch_len());
        vec![Complex::new(R::zero(), R::zero()); len]
    }

    pub fn potential(&self) -> &[R] {
        &self.potential
    }

    /// One Strang step of size `self.dt`, in place.
    pub fn step_in_place(&self, amps: &mut [Complex<R>], scratch: &mut [Complex<R>]) {
        self.apply_phases(
            amps,
            scratch,
            &self.half_potential_phase,
            &self.kinetic_phase,
        );
    }

    /// One Strang step of arbitrary size `dt_sub` (used to land exactly on
    /// kick times); phases are built on the fly.
    pub fn partial_step(&self, amps: &mut [Complex<R>], scratch: &mut [Complex<R>], dt_sub: R) {
        let half = lit::<R>(0.5);
        let pot: Vec<Complex<R>> = self
            .potential
            .iter()
            .map(|&v| Complex::from_polar(R::one(), -v * dt_sub * half))
            .collect();
        let kin: Vec<Complex<R>> = self
            .kinetic
            .iter()
            .map(|&t| Complex::from_polar(R::one(), -t * dt_sub))
            .collect();
        self.apply_phases(amps, scratch, &pot, &kin);
    }

    fn apply_phases(
        &self,
        amps: &mut [Complex<R>],
        scratch: &mut [Complex<R>],
        half_pot: &[Complex<R>],
        kin: &[Complex<R>],
    ) {
        for (a, p) in amps.iter_mut().zip(half_pot) {
            *a = *a * *p;
        }
        self.fft_fwd.process_with_scratch(amps, scratch);
        for (a, k) in amps.iter_mut().zip(kin) {
            *a = *a * *k;
        }
        self.fft_inv.process_with_scratch(amps, scratch);
        for (a, p) in amps.iter_mut().zip(half_pot) {
            *a = a.scale(self.inv_n) * *p;
        }
    }

    /// Energy expectation using the plan's stored potential and kinetic
    /// tables (same contract as [`expectation_energy`]).
    pub fn expectation_energy(&self, psi: &WaveFunction<R>) -> Result<R> {
        expectation_with(
            psi,
            &self.potential,
            &self.kinetic,
            &*self.fft_fwd,
            &*self.fft_inv,
            self.inv_n,
        )
    }
}

/// Allocating single step, for callers that do not manage buffers.
pub fn step<R: Real>(psi: &WaveFunction<R>, plan: &PropagatorPlan<R>) -> WaveFunction<R> {
    let mut out = psi.clone();
    let mut scratch = plan.make_scratch();
    plan.step_in_place(&mut out.amplitudes, &mut scratch);
    out
}

/// Repeated stepping with an observer invoked at step 0 and every
/// `record_every` steps thereafter (pass 0 to record only the start).
pub fn evolve<R: Real>(
    psi: &WaveFunction<R>,
    plan: &PropagatorPlan<R>,
    n_steps: usize,
    record_every: usize,
    mut observer: impl FnMut(usize, R, &WaveFunction<R>),
) -> WaveFunction<R> {
    let mut w = psi.clone();
    let mut scratch = plan.make_scratch();
    observer(0, R::zero(), &w);
    for s in 1..=n_steps {
        plan.step_in_place(&mut w.amplitudes, &mut scratch);
        if record_every > 0 && s % record_every == 0 {
            observer(s, lit::<R>(s as f64) * plan.dt, &w);
        }
    }
    w
}

/// `<ψ|H|ψ>` computed spectrally (kinetic via the transform, potential
/// pointwise). Fails with `NonHermitianResidual` if the imaginary part
/// exceeds 1e-8; otherwise the real part is returned.
pub fn expectation_energy<R: Real>(psi: &WaveFunction<R>, params: &LatticeParams<R>) -> Result<R> {
    let grid = &psi.grid;
    let potential: Vec<R> = (0..grid.n_points)
        .map(|j| params.potential_1d(grid.point(j)))
        .collect();
    let kinetic = grid.kinetic_er();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(grid.n_points);
    let inv = planner.plan_fft_inverse(grid.n_points);
    expectation_with(
        psi,
        &potential,
        &kinetic,
        &*fwd,
        &*inv,
        R::one() / lit::<R>(grid.n_points as f64),
    )
}

fn expectation_with<R: Real>(
    psi: &WaveFunction<R>,
    potential: &[R],
    kinetic: &[R],
    fwd: &dyn Fft<R>,
    inv: &dyn Fft<R>,
    inv_n: R,
) -> Result<R> {
    let mut hpsi: Vec<Complex<R>> = psi.amplitudes.clone();
    let mut scratch = vec![
        Complex::new(R::zero(), R::zero());
        fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())
    ];
    fwd.process_with_scratch(&mut hpsi, &mut scratch);
    for (a, t) in hpsi.iter_mut().zip(kinetic) {
        *a = a.scale(*t);
    }
    inv.process_with_scratch(&mut hpsi, &mut scratch);
    for ((h, a), v) in hpsi.iter_mut().zip(&psi.amplitudes).zip(potential) {
        *h = h.scale(inv_n) + a.scale(*v);
    }
    let mut acc = Complex::new(R::zero(), R::zero());
    for (a, h) in psi.amplitudes.iter().zip(&hpsi) {
        acc = acc + a.conj() * *h;
    }
    acc = acc.scale(psi.grid.dx);
    let im = fabs(acc.im).to_f64().unwrap_or(f64::NAN);
    if !(im <= 1e-8) {
        return Err(Error::NonHermitianResidual(im));
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeParams;
    use crate::spectral::{solve_spectrum, synthesize_on_grid, PlaneWaveBasis};

    fn figure_grid() -> Grid<f64> {
        Grid::new(-9.75, 10.25, 512).unwrap()
    }

    fn params(z_f: f64) -> LatticeParams<f64> {
        LatticeParams::figure(z_f)
    }

    #[test]
    fn grid_constructor_examples() {
        let g = figure_grid();
        assert_eq!(g.dx, 20.0 / 512.0);
        assert_eq!(g.dx, 0.0390625);
        assert!(matches!(
            Grid::<f64>::new(-9.75, 10.25, 511),
            Err(Error::BadDomain(_))
        ));
        assert!(matches!(
            Grid::<f64>::new(0.0, 0.5, 64),
            Err(Error::BadDomain(_))
        ));
        let g = Grid::<f64>::new(0.0, 1.0, 64).unwrap();
        assert_eq!(g.n_points, 64);
        assert_eq!(g.dx, 1.0 / 64.0);
    }

    #[test]
    fn wavenumbers_follow_transform_order() {
        let g = Grid::<f64>::new(0.0, 1.0, 8).unwrap();
        let ks = g.wavenumbers();
        let tau = std::f64::consts::TAU;
        let expect = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in ks.iter().zip(expect) {
            assert!((k - e * tau).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_depth_and_zero_dt_give_unit_phases() {
        let g = figure_grid();
        let mut p = params(0.1);
        p.v_xy = 0.0;
        let plan = plan_propagator(&p, &g, 1e-3);
        for ph in &plan.half_potential_phase {
            assert_eq!(*ph, Complex::new(1.0, 0.0));
        }
        let plan = plan_propagator(&params(0.1), &g, 0.0);
        for ph in plan.half_potential_phase.iter().chain(&plan.kinetic_phase) {
            assert_eq!(*ph, Complex::new(1.0, 0.0));
        }
    }

    /// A unit-harmonic plane wave has energy exactly 1 E_R, so one step
    /// multiplies it by the global phase e^{-i dt}.
    #[test]
    fn free_plane_wave_dispersion() {
        let g = figure_grid();
        let mut p = params(0.1);
        p.v_xy = 0.0;
        let dt = 1e-3;
        let plan = plan_propagator(&p, &g, dt);
        let k = LatticeParams::<f64>::k();
        let mut w = WaveFunction::new(
            (0..g.n_points)
                .map(|j| Complex::from_polar(1.0, k * g.point(j)))
                .collect(),
            g,
        );
        w.normalize();
        let stepped = step(&w, &plan);
        let expect = Complex::from_polar(1.0, -dt);
        for (a, b) in stepped.amplitudes.iter().zip(&w.amplitudes) {
            assert!((a - b * expect).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenstate_is_stationary_for_one_step() {
        let p = params(0.1);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        let w = synthesize_on_grid(&spec.states[0], &g);
        let plan = plan_propagator(&p, &g, 1e-3);
        let stepped = step(&w, &plan);
        let fidelity = stepped.inner(&w).norm();
        assert!(fidelity >= 1.0 - 1e-8, "fidelity {fidelity}");
    }

    #[test]
    fn norm_is_preserved_over_many_steps() {
        let p = params(0.1);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        let mut w = synthesize_on_grid(&spec.states[3], &g);
        let plan = plan_propagator(&p, &g, 1e-3);
        let mut scratch = plan.make_scratch();
        for _ in 0..100_000 {
            plan.step_in_place(&mut w.amplitudes, &mut scratch);
        }
        assert!((w.norm_sqr() - 1.0).abs() < 1e-9);
    }

    /// Strang splitting is second order: against the eigen-expansion
    /// reference the error at fixed t scales as dt².
    #[test]
    fn splitting_error_is_second_order() {
        let p = params(0.1);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        let levels = 6;
        let phis: Vec<WaveFunction<f64>> = (0..levels)
            .map(|l| synthesize_on_grid(&spec.states[l], &g))
            .collect();
        let mut w0 = WaveFunction::new(vec![Complex::new(0.0, 0.0); g.n_points], g);
        for phi in &phis {
            for (a, b) in w0.amplitudes.iter_mut().zip(&phi.amplitudes) {
                *a += b.unscale((levels as f64).sqrt());
            }
        }
        w0.normalize();
        let coeffs: Vec<Complex<f64>> = phis.iter().map(|phi| phi.inner(&w0)).collect();

        let t = 1.0;
        let exact_at = |t: f64| {
            let mut e = WaveFunction::new(vec![Complex::new(0.0, 0.0); g.n_points], g);
            for (l, phi) in phis.iter().enumerate() {
                let c = coeffs[l] * Complex::from_polar(1.0, -spec.energy(l) * t);
                for (a, b) in e.amplitudes.iter_mut().zip(&phi.amplitudes) {
                    *a += c * b;
                }
            }
            e
        };
        let run = |dt: f64| {
            let plan = plan_propagator(&p, &g, dt);
            let n = (t / dt).round() as usize;
            let w = evolve(&w0, &plan, n, 0, |_, _, _| {});
            w.max_pointwise_diff(&exact_at(t))
        };
        let e1 = run(1e-3);
        let e2 = run(5e-4);
        let ratio = e1 / e2;
        assert!(
            (ratio - 4.0).abs() < 0.5,
            "expected dt² scaling, got ratio {ratio} (errors {e1:e}, {e2:e})"
        );
        // At small dt the same oracle is tight.
        assert!(run(6.25e-5) < 1e-6);
    }

    /// Two half steps against one full step: the one-step defect is O(dt³).
    #[test]
    fn richardson_step_halving() {
        let p = params(0.1);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        let mut w0 = synthesize_on_grid(&spec.states[0], &g);
        for (a, b) in w0
            .amplitudes
            .iter_mut()
            .zip(&synthesize_on_grid(&spec.states[4], &g).amplitudes)
        {
            *a += *b;
        }
        w0.normalize();

        let defect = |dt: f64| {
            let full = plan_propagator(&p, &g, dt);
            let half = plan_propagator(&p, &g, dt / 2.0);
            let a = step(&w0, &full);
            let b = step(&step(&w0, &half), &half);
            a.max_pointwise_diff(&b)
        };
        let d1 = defect(2e-3);
        let d2 = defect(1e-3);
        let ratio = d1 / d2;
        assert!(
            (ratio - 8.0).abs() < 1.5,
            "expected dt³ local error, got ratio {ratio}"
        );
    }

    #[test]
    fn evolve_zero_steps_returns_input() {
        let p = params(0.05);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(16).unwrap()).unwrap();
        let w = synthesize_on_grid(&spec.states[0], &g);
        let plan = plan_propagator(&p, &g, 1e-3);
        let out = evolve(&w, &plan, 0, 0, |_, _, _| {});
        assert_eq!(out.amplitudes, w.amplitudes);
    }

    #[test]
    fn doublet_beat_matches_two_level_formula() {
        // P_L(t) for the |L> state follows cos²(delta t / 2); check a fifth
        // of a period, far from any fine-tuning of the window.
        use crate::lattice::{Side, WellPartition};
        let p = params(0.1);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        let part = WellPartition::build(&p, (g.x_min, g.x_max), 256).unwrap();
        let (l_state, _) = crate::spectral::make_l_state(&spec, &g, &part);
        let delta = spec.splitting();
        let t = 0.2 * std::f64::consts::TAU / delta;
        let dt = 1e-3;
        let plan = plan_propagator(&p, &g, dt);
        let w = evolve(&l_state, &plan, (t / dt).round() as usize, 0, |_, _, _| {});
        let p_left: f64 = (0..g.n_points)
            .filter(|&j| part.classify(g.point(j)).1 == Side::Left)
            .map(|j| w.amplitudes[j].norm_sqr())
            .sum::<f64>()
            * g.dx;
        let expect = (delta * t / 2.0).cos().powi(2);
        assert!(
            (p_left - expect).abs() < 0.05,
            "P_L({t}) = {p_left}, two-level formula {expect}"
        );
    }

    #[test]
    fn energy_expectation_examples() {
        let p = params(0.1);
        let g = figure_grid();
        let spec = solve_spectrum(&p, PlaneWaveBasis::new(32).unwrap()).unwrap();
        // eigenstates reproduce their eigenvalues
        for l in [0, 2, 7] {
            let w = synthesize_on_grid(&spec.states[l], &g);
            let e = expectation_energy(&w, &p).unwrap();
            assert!((e - spec.energy(l)).abs() < 1e-6);
        }
        // constant wavefunction with zero depth has zero energy
        let mut free = p;
        free.v_xy = 0.0;
        let mut w = WaveFunction::new(vec![Complex::new(1.0, 0.0); g.n_points], g);
        w.normalize();
        assert!(expectation_energy(&w, &free).unwrap().abs() < 1e-12);
        // Gaussian kinetic energy: for psi ~ e^{-x²/2σ²}, <p²> = 1/(2σ²),
        // so <T> = 1/(2σ²k²) E_R.
        let sigma = 0.1;
        let mut gw = WaveFunction::new(
            (0..g.n_points)
                .map(|j| {
                    let x = g.point(j);
                    Complex::new((-x * x / (2.0 * sigma * sigma)).exp(), 0.0)
                })
                .collect(),
            g,
        );
        gw.normalize();
        let k = LatticeParams::<f64>::k();
        let analytic = 1.0 / (2.0 * sigma * sigma * k * k);
        let e = expectation_energy(&gw, &free).unwrap();
        assert!(
            (e - analytic).abs() < 1e-6 * analytic.max(1.0),
            "gaussian kinetic {e} vs analytic {analytic}"
        );
    }

    #[test]
    fn plan_phases_are_pure() {
        let plan = plan_propagator(&params(0.05), &figure_grid(), 1e-3);
        for ph in plan.half_potential_phase.iter().chain(&plan.kinetic_phase) {
            assert!((ph.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn f32_step_preserves_norm() {
        let p32 = LatticeParams::<f32>::figure(0.1);
        let g = Grid::<f32>::new(-9.75, 10.25, 512).unwrap();
        let plan = plan_propagator(&p32, &g, 1e-3);
        let mut w = WaveFunction::new(
            (0..g.n_points)
                .map(|j| {
                    let x = g.point(j);
                    Complex::new((-x * x / 0.02).exp(), 0.0)
                })
                .collect(),
            g,
        );
        w.normalize();
        let mut scratch = plan.make_scratch();
        for _ in 0..100 {
            plan.step_in_place(&mut w.amplitudes, &mut scratch);
        }
        assert!((w.norm_sqr() - 1.0).abs() < 1e-4);
    }
}
