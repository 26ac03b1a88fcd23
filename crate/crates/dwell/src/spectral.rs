//! Zero-quasi-momentum plane-wave eigenproblem of the 1D lattice.
//!
//! Eigenfunctions are expanded over reciprocal-lattice plane waves
//! `phi(x) = sum_n d_n e^{i n k x}` with n in {-n_max, ..., +n_max}. In E_R
//! units the kinetic energy of `e^{inkx}` is exactly n², and the potential
//! couples n to n±1 (first harmonic) and n±2 (second harmonics), so the
//! Hamiltonian is a Hermitian banded matrix.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::Float;

use crate::dynamics::{Grid, WaveFunction};
use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, Side, WellPartition};
use crate::scalar::{lit, Real};

/// Plane-wave basis `e^{inkx}`, n in {-n_max, ..., +n_max}, at quasi-momentum
/// q = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlaneWaveBasis {
    pub n_max: usize,
}

impl PlaneWaveBasis {
    /// The potential couples up to second harmonics, so n_max must be >= 2.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::validation("n_max", "must be at least 2"));
        }
        Ok(PlaneWaveBasis { n_max })
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Harmonic index of matrix row/column `i`.
    pub fn harmonic(&self, i: usize) -> i64 {
        i as i64 - self.n_max as i64
    }
}

/// One Bloch eigenstate: energy in E_R and plane-wave coefficients d_n.
///
/// Coefficients are normalized (`sum |d_n|² = 1`) with the largest-modulus
/// coefficient made real and positive.
#[derive(Debug, Clone)]
pub struct BlochState<R> {
    pub energy: R,
    pub coeffs: Vec<Complex<R>>,
}

/// Sorted q = 0 spectrum of the lattice.
#[derive(Debug, Clone)]
pub struct BlochSpectrum<R> {
    pub states: Vec<BlochState<R>>,
    pub basis: PlaneWaveBasis,
    /// Hash of the lattice parameters and n_max that produced this spectrum.
    pub params_fingerprint: u64,
}

impl<R: Real> BlochSpectrum<R> {
    /// Doublet splitting delta = E_1 - E_0.
    pub fn splitting(&self) -> R {
        assert!(self.states.len() >= 2, "spectrum needs at least two states");
        self.states[1].energy - self.states[0].energy
    }

    pub fn energy(&self, level: usize) -> R {
        self.states[level].energy
    }
}

/// Superposition over eigenstates: (level, amplitude) pairs.
#[derive(Debug, Clone)]
pub struct SuperpositionSpec<R> {
    pub coefficients: Vec<(usize, Complex<R>)>,
}

impl<R: Real> SuperpositionSpec<R> {
    pub fn sum_sqr(&self) -> R {
        self.coefficients
            .iter()
            .map(|(_, c)| c.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
    }

    /// Rescaled so that `sum |c_l|² = 1`.
    pub fn normalized(&self) -> Self {
        let s = Float::sqrt(self.sum_sqr());
        SuperpositionSpec {
            coefficients: self
                .coefficients
                .iter()
                .map(|&(l, c)| (l, c.unscale(s)))
                .collect(),
        }
    }
}

/// Gaussian projection onto the lowest eigenstates, with the weight left
/// outside them.
#[derive(Debug, Clone)]
pub struct GaussianProjection<R> {
    pub spec: SuperpositionSpec<R>,
    pub residual: R,
}

/// Hermitian plane-wave Hamiltonian at q = 0: kinetic n² on the diagonal,
/// potential harmonics on the first and second off-diagonals.
pub fn build_hamiltonian<R: Real>(
    params: &LatticeParams<R>,
    basis: PlaneWaveBasis,
) -> DMatrix<Complex<R>> {
    let (c0, c1, c2) = params.fourier_coefficients();
    let dim = basis.dim();
    DMatrix::from_fn(dim, dim, |i, j| {
        let n = basis.harmonic(i);
        match n - basis.harmonic(j) {
            0 => Complex::new(lit::<R>((n * n) as f64) + c0, R::zero()),
            1 => c1,
            -1 => c1.conj(),
            2 => c2,
            -2 => c2.conj(),
            _ => Complex::new(R::zero(), R::zero()),
        }
    })
}

/// Full eigendecomposition of the q = 0 Hamiltonian, sorted ascending, with
/// the phase convention applied.
pub fn solve_spectrum<R: Real + RealField>(
    params: &LatticeParams<R>,
    basis: PlaneWaveBasis,
) -> Result<BlochSpectrum<R>> {
    params.validate()?;
    let h = build_hamiltonian(params, basis);
    let eig = nalgebra::linalg::SymmetricEigen::try_new(h, Float::epsilon(), 0)
        .ok_or_else(|| Error::ConvergenceFailure("symmetric eigeniteration stalled".into()))?;

    let dim = basis.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut states = Vec::with_capacity(dim);
    for &col in &order {
        let mut coeffs: Vec<Complex<R>> = eig.eigenvectors.column(col).iter().copied().collect();
        // Normalize exactly and fix the phase: largest-modulus coefficient
        // real and positive.
        let norm = Float::sqrt(
            coeffs
                .iter()
                .map(|c| c.norm_sqr())
                .fold(R::zero(), |a, b| a + b),
        );
        for c in coeffs.iter_mut() {
            *c = c.unscale(norm);
        }
        let (imax, _) = coeffs
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
            .unwrap();
        let phase = coeffs[imax].unscale(Float::sqrt(coeffs[imax].norm_sqr()));
        for c in coeffs.iter_mut() {
            *c = *c * phase.conj();
        }
        states.push(BlochState {
            energy: eig.eigenvalues[col],
            coeffs,
        });
    }

    // Orthonormality is part of the contract; a failed iteration that
    // slipped through shows up here.
    let residual = orthonormality_residual(&states);
    if residual.to_f64().unwrap_or(1.0) > 1e-8 {
        return Err(Error::ConvergenceFailure(format!(
            "eigenvector orthonormality residual {residual:e}"
        )));
    }

    Ok(BlochSpectrum {
        states,
        basis,
        params_fingerprint: fingerprint(params, basis),
    })
}

/// max |<i|j> - delta_ij| over all eigenvector pairs.
pub fn orthonormality_residual<R: Real>(states: &[BlochState<R>]) -> R {
    let mut worst = R::zero();
    for (i, si) in states.iter().enumerate() {
        for (j, sj) in states.iter().enumerate().skip(i) {
            let mut dot = Complex::new(R::zero(), R::zero());
            for (a, b) in si.coeffs.iter().zip(&sj.coeffs) {
                dot = dot + a.conj() * *b;
            }
            let target = if i == j { R::one() } else { R::zero() };
            let dev = Float::sqrt((dot - Complex::new(target, R::zero())).norm_sqr());
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

fn fingerprint<R: Real>(params: &LatticeParams<R>, basis: PlaneWaveBasis) -> u64 {
    let mut h = DefaultHasher::new();
    for v in [
        params.v_xy,
        params.z_f,
        params.theta_xy,
        params.theta_z,
        params.phi_xy,
        params.phi_z,
        params.er_frequency,
    ] {
        v.to_f64().unwrap_or(f64::NAN).to_bits().hash(&mut h);
    }
    basis.n_max.hash(&mut h);
    h.finish()
}

/// Samples `phi(x) = sum_n d_n e^{inkx}` on the grid and normalizes under
/// the grid measure.
pub fn synthesize_on_grid<R: Real>(state: &BlochState<R>, grid: &Grid<R>) -> WaveFunction<R> {
    let k = LatticeParams::<R>::k();
    let n_max = (state.coeffs.len() - 1) / 2;
    let mut amps = vec![Complex::new(R::zero(), R::zero()); grid.n_points];
    for (j, amp) in amps.iter_mut().enumerate() {
        let kx = k * grid.point(j);
        let mut acc = Complex::new(R::zero(), R::zero());
        for (i, d) in state.coeffs.iter().enumerate() {
            let n = i as i64 - n_max as i64;
            acc = acc + *d * Complex::from_polar(R::one(), lit::<R>(n as f64) * kx);
        }
        *amp = acc;
    }
    let mut wave = WaveFunction::new(amps, *grid);
    wave.normalize();
    wave
}

/// Projection `c_l = <l|psi>` of a grid wavefunction onto the lowest
/// `n_levels` eigenstates.
pub fn project_wave<R: Real>(
    spectrum: &BlochSpectrum<R>,
    grid: &Grid<R>,
    wave: &WaveFunction<R>,
    n_levels: usize,
) -> Vec<Complex<R>> {
    (0..n_levels.min(spectrum.states.len()))
        .map(|l| synthesize_on_grid(&spectrum.states[l], grid).inner(wave))
        .collect()
}

/// The left-localized doublet state `(|0> + e^{i alpha}|1>)/sqrt(2)` with the
/// relative phase alpha in {0, pi} chosen to maximize the left-well
/// probability at t = 0. Returns the state and the chosen alpha.
pub fn make_l_state<R: Real>(
    spectrum: &BlochSpectrum<R>,
    grid: &Grid<R>,
    partition: &WellPartition<R>,
) -> (WaveFunction<R>, R) {
    assert!(spectrum.states.len() >= 2, "spectrum needs the doublet");
    let phi0 = synthesize_on_grid(&spectrum.states[0], grid);
    let phi1 = synthesize_on_grid(&spectrum.states[1], grid);
    let left_mask: Vec<bool> = (0..grid.n_points)
        .map(|j| partition.classify(grid.point(j)).1 == Side::Left)
        .collect();

    let build = |sign: R| {
        let amps: Vec<Complex<R>> = phi0
            .amplitudes
            .iter()
            .zip(&phi1.amplitudes)
            .map(|(a, b)| (*a + b.scale(sign)).unscale(Float::sqrt(lit::<R>(2.0))))
            .collect();
        let mut w = WaveFunction::new(amps, *grid);
        w.normalize();
        w
    };
    let plus = build(R::one());
    let minus = build(-R::one());
    let p_left = |w: &WaveFunction<R>| {
        let mut p = R::zero();
        for (j, amp) in w.amplitudes.iter().enumerate() {
            if left_mask[j] {
                p = p + amp.norm_sqr();
            }
        }
        p * w.grid.dx
    };
    if p_left(&plus) >= p_left(&minus) {
        (plus, R::zero())
    } else {
        (minus, R::PI())
    }
}

/// Projects the normalized λ-periodized Gaussian `exp(-(x-center)²/2σ²)`
/// onto the lowest `n_levels` eigenstates.
///
/// Periodization (equivalently, per-cell normalization of the Bloch states)
/// is what makes the coefficients of a packet that fits inside one well sum
/// to ~1 over a handful of levels; the bare packet overlaps the q = 0
/// subspace of an N-cell domain with weight only 1/N.
pub fn project_gaussian<R: Real>(
    spectrum: &BlochSpectrum<R>,
    grid: &Grid<R>,
    sigma: R,
    center: R,
    n_levels: usize,
) -> Result<GaussianProjection<R>> {
    if !(sigma > R::zero()) {
        return Err(Error::validation("sigma", "must be > 0"));
    }
    if center < grid.x_min || center >= grid.x_max {
        return Err(Error::validation("center", "must lie inside the domain"));
    }
    let comb = periodized_gaussian(grid, sigma, center);
    let coeffs = project_wave(spectrum, grid, &comb, n_levels);
    let sum: R = coeffs
        .iter()
        .map(|c| c.norm_sqr())
        .fold(R::zero(), |a, b| a + b);
    let residual = R::one() - sum;
    if residual.to_f64().unwrap_or(1.0) > 0.05 {
        return Err(Error::PoorOverlap(residual.to_f64().unwrap_or(1.0)));
    }
    Ok(GaussianProjection {
        spec: SuperpositionSpec {
            coefficients: coeffs.into_iter().enumerate().collect(),
        },
        residual,
    })
}

/// Normalized sum of Gaussian copies translated by every lattice period.
pub fn periodized_gaussian<R: Real>(grid: &Grid<R>, sigma: R, center: R) -> WaveFunction<R> {
    let cells = (grid.x_max - grid.x_min).to_f64().unwrap().round() as i64;
    let reach = (8.0 * sigma.to_f64().unwrap()).ceil() as i64 + 1;
    let two = lit::<R>(2.0);
    let amps: Vec<Complex<R>> = (0..grid.n_points)
        .map(|j| {
            let x = grid.point(j);
            let mut v = R::zero();
            for n in -(cells + reach)..=(cells + reach) {
                let d = x - center - lit::<R>(n as f64);
                v = v + Float::exp(-(d * d) / (two * sigma * sigma));
            }
            Complex::new(v, R::zero())
        })
        .collect();
    let mut w = WaveFunction::new(amps, *grid);
    w.normalize();
    w
}

/// Grid wavefunction `sum_l c_l phi_l(x)`, renormalized.
pub fn make_superposition<R: Real>(
    sspec: &SuperpositionSpec<R>,
    spectrum: &BlochSpectrum<R>,
    grid: &Grid<R>,
) -> Result<WaveFunction<R>> {
    let mut amps = vec![Complex::new(R::zero(), R::zero()); grid.n_points];
    for &(level, c) in &sspec.coefficients {
        if level >= spectrum.states.len() {
            return Err(Error::validation(
                "coefficients",
                format!("level {level} outside the solved spectrum"),
            ));
        }
        let phi = synthesize_on_grid(&spectrum.states[level], grid);
        for (a, p) in amps.iter_mut().zip(&phi.amplitudes) {
            *a = *a + c * *p;
        }
    }
    let mut w = WaveFunction::new(amps, *grid);
    w.normalize();
    Ok(w)
}
