//! Spontaneous emission as random recoil phase kicks.
//!
//! Kicks arrive as a homogeneous Poisson process. Each kick multiplies the
//! instantaneous wavefunction by the pure phase
//! `e^{-i m k x sinθ cosφ}` — the x-projection of a photon recoil of
//! magnitude k' = m·k in a random direction (θ, φ). Between kicks the state
//! evolves unitarily; the propagator sub-steps with a final partial step to
//! land exactly on each kick time, so kick times are never rounded to the
//! step grid.

use num_complex::Complex;
use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{PropagatorPlan, WaveFunction};
use crate::lattice::LatticeParams;
use crate::scalar::{lit, Real};

/// How emission directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionModel {
    /// Uniform on the unit sphere: cosθ ~ U(-1, 1), φ ~ U(0, 2π).
    #[default]
    Isotropic,
    /// sin²θ-weighted dipole pattern about the z axis.
    DipoleZ,
}

/// Kick strength and rate (dimensionless, after rate conversion).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickParams<R> {
    /// Strength m: the photon wavelength is λ' = λ/m, so k' = m·k.
    pub strength_m: R,
    /// Expected kicks per unit simulation time.
    pub rate: R,
    pub enabled: bool,
    pub direction: DirectionModel,
}

impl<R: Real> KickParams<R> {
    pub fn disabled() -> Self {
        KickParams {
            strength_m: R::one(),
            rate: R::zero(),
            enabled: false,
            direction: DirectionModel::Isotropic,
        }
    }

    pub fn active(&self) -> bool {
        self.enabled && self.rate > R::zero()
    }
}

/// One realized kick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickEvent<R> {
    pub time: R,
    pub theta: R,
    pub phi: R,
}

/// Reproducible per-trajectory randomness: `base_seed` selects the ensemble,
/// `trajectory_index` the stream within it. Distinct indices give
/// statistically independent streams; the same pair replays bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectorySeed {
    pub base_seed: u64,
    pub trajectory_index: u64,
}

impl TrajectorySeed {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.trajectory_index);
        rng
    }
}

/// Homogeneous Poisson arrivals in [t_start, t_end): exponential gaps,
/// strictly sorted.
pub fn sample_kick_times<R: Real>(
    kp: &KickParams<R>,
    t_start: R,
    t_end: R,
    rng: &mut impl Rng,
) -> Vec<R> {
    let mut times = Vec::new();
    if !kp.active() || !(t_end > t_start) {
        return times;
    }
    let mut t = t_start;
    loop {
        let u: R = rng.gen_range(R::zero()..R::one());
        let gap = -Float::ln(R::one() - u) / kp.rate;
        if !(gap > R::zero()) {
            continue; // u == 0 draws again rather than duplicating a time
        }
        t = t + gap;
        if t >= t_end {
            return times;
        }
        times.push(t);
    }
}

/// Random emission direction (θ, φ) under the given model.
pub fn sample_direction<R: Real>(rng: &mut impl Rng, model: DirectionModel) -> (R, R) {
    let two = lit::<R>(2.0);
    let cos_theta = match model {
        DirectionModel::Isotropic => rng.gen_range(-R::one()..R::one()),
        DirectionModel::DipoleZ => loop {
            let c: R = rng.gen_range(-R::one()..R::one());
            let u: R = rng.gen_range(R::zero()..R::one());
            if u <= R::one() - c * c {
                break c;
            }
        },
    };
    let theta = Float::acos(cos_theta);
    let phi = rng.gen_range(R::zero()..two * R::PI());
    (theta, phi)
}

/// Applies the recoil phase `e^{-i m k x sinθ cosφ}` pointwise. The norm is
/// unchanged and the momentum distribution shifts by m·k·sinθ·cosφ.
pub fn apply_kick<R: Real>(psi: &mut WaveFunction<R>, kp: &KickParams<R>, ev: &KickEvent<R>) {
    let q = kp.strength_m * LatticeParams::<R>::k() * Float::sin(ev.theta) * Float::cos(ev.phi);
    let grid = psi.grid;
    for (j, a) in psi.amplitudes.iter_mut().enumerate() {
        *a = *a * Complex::from_polar(R::one(), -q * grid.point(j));
    }
}

/// Unitary propagation over `duration`: full plan steps plus one partial
/// step for the remainder. Durations that are integer multiples of dt (to
/// 1e-7 relative) use full steps only, so the no-kick path is bit-identical
/// to plain `evolve`.
pub fn propagate_for<R: Real>(
    plan: &PropagatorPlan<R>,
    amps: &mut [Complex<R>],
    scratch: &mut [Complex<R>],
    duration: R,
) {
    if !(duration > R::zero()) {
        return;
    }
    let ratio = (duration / plan.dt).to_f64().unwrap();
    let rounded = ratio.round();
    let (full, partial) = if (ratio - rounded).abs() < 1e-7 {
        (rounded as usize, R::zero())
    } else {
        let full = ratio.floor() as usize;
        (full, duration - lit::<R>(full as f64) * plan.dt)
    };
    for _ in 0..full {
        plan.step_in_place(amps, scratch);
    }
    if partial > R::zero() {
        plan.partial_step(amps, scratch, partial);
    }
}

/// Unitary evolution over [t_start, t_end] interrupted by the given kicks
/// (times must lie inside the interval, ascending). Directions must already
/// be resolved. This is the deterministic core of [`evolve_trajectory`].
pub fn propagate_with_kicks<R: Real>(
    plan: &PropagatorPlan<R>,
    kp: &KickParams<R>,
    amps: &mut [Complex<R>],
    scratch: &mut [Complex<R>],
    t_start: R,
    t_end: R,
    kicks: &[KickEvent<R>],
) {
    let mut cursor = t_start;
    let grid = plan.grid;
    for ev in kicks {
        debug_assert!(ev.time >= cursor && ev.time < t_end);
        propagate_for(plan, amps, scratch, ev.time - cursor);
        let q =
            kp.strength_m * LatticeParams::<R>::k() * Float::sin(ev.theta) * Float::cos(ev.phi);
        for (j, a) in amps.iter_mut().enumerate() {
            *a = *a * Complex::from_polar(R::one(), -q * grid.point(j));
        }
        cursor = ev.time;
    }
    propagate_for(plan, amps, scratch, t_end - cursor);
}

/// One stochastic trajectory: per recording interval, kick times are
/// pre-sampled, the state is propagated unitarily between kicks (landing
/// exactly on each kick time), each kick applies its random phase, and the
/// observer sees the state at every record time. Deterministic given the
/// seed.
pub fn evolve_trajectory<R: Real>(
    psi0: &WaveFunction<R>,
    plan: &PropagatorPlan<R>,
    kp: &KickParams<R>,
    record_times: &[R],
    seed: TrajectorySeed,
    mut observer: impl FnMut(usize, R, &WaveFunction<R>),
    mut kick_log: Option<&mut Vec<KickEvent<R>>>,
) -> WaveFunction<R> {
    let mut rng = seed.rng();
    let mut w = psi0.clone();
    let mut scratch = plan.make_scratch();
    let mut cursor = R::zero();
    for (ri, &t_rec) in record_times.iter().enumerate() {
        if t_rec > cursor {
            // times first, then directions in time order
            let times = sample_kick_times(kp, cursor, t_rec, &mut rng);
            let kicks: Vec<KickEvent<R>> = times
                .into_iter()
                .map(|time| {
                    let (theta, phi) = sample_direction(&mut rng, kp.direction);
                    KickEvent { time, theta, phi }
                })
                .collect();
            if let Some(log) = kick_log.as_deref_mut() {
                log.extend_from_slice(&kicks);
            }
            propagate_with_kicks(plan, kp, &mut w.amplitudes, &mut scratch, cursor, t_rec, &kicks);
            cursor = t_rec;
        }
        observer(ri, t_rec, &w);
    }
    w
}
