//! Lattice potential, units, and the left/right well partition.
//!
//! Everything is dimensionless: lengths in units of the lattice period λ
//! (so k = 2π), energies in units of the recoil energy E_R, time in units
//! of 1/E_R with ħ=1. The only dimensional anchor is `er_frequency`, the
//! value of E_R in s⁻¹, used to convert laboratory kick rates quoted in Hz.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{fabs, lit, Real};

/// All lattice constants in dimensionless units.
///
/// The 2D potential is
/// `V(x,y) = -(v_xy/4) [ (1 - z_f) V1(x,y) + z_f V2(x,y) ]`
/// with V1 carrying the in-plane (θ_xy, φ_xy) phases and second harmonics
/// only, and V2 carrying the out-of-plane (θ_z, φ_z) phases with both first
/// and second harmonics. The barrier height of the double well is set by
/// z_f, the tilt by the phase differences δθ = θ_z − θ_xy, δφ = φ_z − φ_xy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams<R> {
    /// Potential depth in E_R.
    pub v_xy: R,
    /// Intensity ratio of the in-plane and out-of-plane lattices, in [0, 1].
    pub z_f: R,
    /// In-plane lattice phase θ_xy (radians).
    pub theta_xy: R,
    /// Out-of-plane lattice phase θ_z (radians).
    pub theta_z: R,
    /// In-plane lattice phase φ_xy (radians).
    pub phi_xy: R,
    /// Out-of-plane lattice phase φ_z (radians).
    pub phi_z: R,
    /// E_R expressed in s⁻¹; converts laboratory rates to simulation units.
    pub er_frequency: R,
}

impl<R: Real> LatticeParams<R> {
    /// Lattice period; the unit of length.
    pub fn lambda() -> R {
        R::one()
    }

    /// Wavevector k = 2π/λ.
    pub fn k() -> R {
        R::TAU()
    }

    /// Parameters with the gauge θ_xy = φ_xy = 0, so that θ_z = δθ and
    /// φ_z = δφ are the control phase differences.
    pub fn new(v_xy: R, z_f: R, delta_theta: R, delta_phi: R, er_frequency: R) -> Result<Self> {
        let p = LatticeParams {
            v_xy,
            z_f,
            theta_xy: R::zero(),
            theta_z: delta_theta,
            phi_xy: R::zero(),
            phi_z: delta_phi,
            er_frequency,
        };
        p.validate()?;
        Ok(p)
    }

    /// The paper-figure parameters: V_xy = 36 E_R, δθ = π/2, δφ = 0,
    /// E_R = 3500 s⁻¹, with the given barrier ratio.
    pub fn figure(z_f: R) -> Self {
        LatticeParams {
            v_xy: lit(36.0),
            z_f,
            theta_xy: R::zero(),
            theta_z: lit(std::f64::consts::FRAC_PI_2),
            phi_xy: R::zero(),
            phi_z: R::zero(),
            er_frequency: lit(3500.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_f >= R::zero() && self.z_f <= R::one()) {
            return Err(Error::validation("z_f", "must be in [0, 1]"));
        }
        if !(self.v_xy >= R::zero()) {
            return Err(Error::validation("v_xy", "must be >= 0"));
        }
        if !(self.er_frequency > R::zero()) {
            return Err(Error::validation("er_frequency", "must be > 0"));
        }
        Ok(())
    }

    pub fn delta_theta(&self) -> R {
        self.theta_z - self.theta_xy
    }

    pub fn delta_phi(&self) -> R {
        self.phi_z - self.phi_xy
    }

    /// Full 2D lattice potential, in E_R.
    pub fn potential_2d(&self, x: R, y: R) -> R {
        let k = Self::k();
        let two = lit::<R>(2.0);
        let four = lit::<R>(4.0);
        let (kx, ky) = (k * x, k * y);

        let v1 = four
            + two * Float::cos(two * kx - two * self.theta_xy - two * self.phi_xy)
            + two * Float::cos(two * ky + two * self.phi_xy);
        let v2 = four
            + four * Float::cos(kx + ky - self.theta_z)
            + four * Float::cos(kx - ky - self.theta_z - two * self.phi_z)
            + two * Float::cos(two * kx - two * self.theta_z - two * self.phi_z)
            + two * Float::cos(two * ky + two * self.phi_z);

        -(self.v_xy / four) * ((R::one() - self.z_f) * v1 + self.z_f * v2)
    }

    /// 1D cut of the lattice potential along y = 0, in E_R.
    pub fn potential_1d(&self, x: R) -> R {
        self.potential_2d(x, R::zero())
    }

    /// Fourier coefficients (c0, c1, c2) of the 1D cut:
    /// V(x) = c0 + 2 Re[c1 e^{ikx}] + 2 Re[c2 e^{2ikx}].
    pub fn fourier_coefficients(&self) -> (R, Complex<R>, Complex<R>) {
        let two = lit::<R>(2.0);
        let four = lit::<R>(4.0);
        let zf = self.z_f;
        let scale = -(self.v_xy / four);

        let c0 = scale
            * ((R::one() - zf) * (four + two * Float::cos(two * self.phi_xy))
                + zf * (four + two * Float::cos(two * self.phi_z)));
        let c1 = Complex::from_polar(
            -self.v_xy * zf * Float::cos(self.phi_z),
            -(self.theta_z + self.phi_z),
        );
        let c2 = Complex::from_polar(R::one() - zf, -two * (self.theta_xy + self.phi_xy))
            .scale(scale)
            + Complex::from_polar(zf, -two * (self.theta_z + self.phi_z)).scale(scale);
        (c0, c1, c2)
    }

    /// Laboratory rate in Hz → expected events per unit of simulation time
    /// (time unit 1/E_R, ħ = 1): divides by `er_frequency`.
    pub fn convert_rate(&self, rate_hz: R) -> R {
        rate_hz / self.er_frequency
    }
}

/// Which sub-well of a cell a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One λ-wide double-well cell. Coordinates are "unwrapped": the last cell
/// of a periodic domain may extend past x_max, with positions understood
/// modulo the domain width.
#[derive(Debug, Clone, Copy)]
pub struct WellCell<R> {
    /// Left sub-well interval (x_lo, x_hi); x_hi is the barrier position.
    pub left: (R, R),
    /// Right sub-well interval (x_lo, x_hi); x_lo is the barrier position.
    pub right: (R, R),
    /// Internal barrier position between the two minima.
    pub barrier: R,
    /// Positions of the two local minima (left, right).
    pub minima: (R, R),
}

/// Partition of a periodic domain into λ-wide double-well cells, with cell
/// boundaries at the inter-cell potential maxima.
#[derive(Debug, Clone)]
pub struct WellPartition<R> {
    pub cells: Vec<WellCell<R>>,
    pub domain: (R, R),
    /// First cell boundary (inter-cell maximum) inside the domain.
    origin: R,
}

impl<R: Real> WellPartition<R> {
    /// Locates minima and barriers of `potential_1d` by dense sampling plus
    /// golden-section refinement, and labels the lower-x sub-well of each
    /// cell "left".
    ///
    /// The domain width must be an integer number of λ. Fails with
    /// `DegenerateWell` when cells do not hold exactly two minima separated
    /// by a barrier lower than the cell boundaries.
    pub fn build(
        params: &LatticeParams<R>,
        domain: (R, R),
        samples_per_cell: usize,
    ) -> Result<Self> {
        params.validate()?;
        let (x_min, x_max) = domain;
        let width = x_max - x_min;
        let widthf = width.to_f64().unwrap_or(f64::NAN);
        if !(widthf > 0.0) || (widthf - widthf.round()).abs() > 1e-9 {
            return Err(Error::BadDomain(format!(
                "partition domain width {widthf} is not a positive integer multiple of lambda"
            )));
        }
        if samples_per_cell < 64 {
            return Err(Error::validation(
                "samples_per_cell",
                "must be at least 64",
            ));
        }
        let n_cells = widthf.round() as usize;
        let m = n_cells * samples_per_cell;

        // Dense periodic sampling. The fractional offset keeps symmetric
        // extrema from landing exactly between two equal samples.
        let h = width / lit::<R>(m as f64);
        let offset = lit::<R>(0.381_966_011_250_105);
        let xs: Vec<R> = (0..m)
            .map(|j| x_min + (lit::<R>(j as f64) + offset) * h)
            .collect();
        let vs: Vec<R> = xs.iter().map(|&x| params.potential_1d(x)).collect();

        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for i in 0..m {
            let prev = vs[(i + m - 1) % m];
            let next = vs[(i + 1) % m];
            let lo = xs[i] - h;
            let hi = xs[i] + h;
            if vs[i] > prev && vs[i] > next {
                maxima.push(refine(|x| params.potential_1d(x), lo, hi, true));
            } else if vs[i] < prev && vs[i] < next {
                minima.push(refine(|x| params.potential_1d(x), lo, hi, false));
            }
        }

        if maxima.len() != 2 * n_cells || minima.len() != 2 * n_cells {
            return Err(Error::DegenerateWell(format!(
                "expected {} maxima and {} minima over {} cells, found {} and {}",
                2 * n_cells,
                2 * n_cells,
                n_cells,
                maxima.len(),
                minima.len()
            )));
        }
        maxima.sort_by(|a, b| a.partial_cmp(b).unwrap());
        minima.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // Maxima alternate internal barrier / cell boundary; the boundary
        // class is the strictly higher one.
        let height =
            |positions: &[R]| -> R { positions.iter().map(|&x| params.potential_1d(x)).sum() };
        let even: Vec<R> = maxima.iter().copied().step_by(2).collect();
        let odd: Vec<R> = maxima.iter().copied().skip(1).step_by(2).collect();
        let (he, ho) = (height(&even), height(&odd));
        let tol = lit::<R>(1e-9) * params.v_xy;
        if fabs(he - ho) <= tol * lit::<R>(n_cells as f64) {
            return Err(Error::DegenerateWell(
                "internal barriers and cell boundaries have equal height; no double-well structure"
                    .into(),
            ));
        }
        let (boundaries, barriers) = if he > ho { (even, odd) } else { (odd, even) };

        // Unwrap everything relative to the first boundary and assemble
        // cells; the last cell wraps past x_max.
        let origin = boundaries[0];
        let unwrap = |x: R| -> R {
            if x < origin {
                x + width
            } else {
                x
            }
        };
        let mut barriers_u: Vec<R> = barriers.iter().map(|&x| unwrap(x)).collect();
        let mut minima_u: Vec<R> = minima.iter().map(|&x| unwrap(x)).collect();
        barriers_u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        minima_u.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let lambda = LatticeParams::<R>::lambda();
        let mut cells = Vec::with_capacity(n_cells);
        for i in 0..n_cells {
            let lo = origin + lit::<R>(i as f64) * lambda;
            let hi = origin + lit::<R>((i + 1) as f64) * lambda;
            let b = barriers_u[i];
            let (ml, mr) = (minima_u[2 * i], minima_u[2 * i + 1]);
            if !(lo < ml && ml < b && b < mr && mr < hi) {
                return Err(Error::DegenerateWell(format!(
                    "cell {i} does not hold two minima around an internal barrier"
                )));
            }
            cells.push(WellCell {
                left: (lo, b),
                right: (b, hi),
                barrier: b,
                minima: (ml, mr),
            });
        }

        Ok(WellPartition {
            cells,
            domain,
            origin,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn width(&self) -> R {
        self.domain.1 - self.domain.0
    }

    /// Cell index and sub-well of a point. Total on the domain: points on a
    /// cell boundary belong to the previous cell's right interval, points on
    /// an internal barrier to the left interval (lower-x convention).
    pub fn classify(&self, x: R) -> (usize, Side) {
        let width = self.width();
        let n = self.cells.len();
        let mut u = (x - self.origin) % width;
        if u < R::zero() {
            u = u + width;
        }
        // u in [0, width); offset 0 is a cell boundary -> previous cell.
        let lambda = LatticeParams::<R>::lambda();
        let mut idx = (u / lambda).to_f64().unwrap().floor() as usize;
        if idx >= n {
            idx = n - 1;
        }
        let offset = u - lit::<R>(idx as f64) * lambda;
        if offset == R::zero() {
            let prev = (idx + n - 1) % n;
            return (prev, Side::Right);
        }
        let cell = &self.cells[idx];
        let barrier_offset = cell.barrier - cell.left.0;
        if offset <= barrier_offset {
            (idx, Side::Left)
        } else {
            (idx, Side::Right)
        }
    }

    /// Index of the cell containing `x`.
    pub fn cell_of(&self, x: R) -> usize {
        self.classify(x).0
    }

    /// Summed length of all left (or right) intervals.
    pub fn total_side_length(&self, side: Side) -> R {
        self.cells
            .iter()
            .map(|c| match side {
                Side::Left => c.left.1 - c.left.0,
                Side::Right => c.right.1 - c.right.0,
            })
            .sum()
    }
}

/// Golden-section refinement of an extremum bracketed in [lo, hi].
fn refine<R: Real>(f: impl Fn(R) -> R, lo: R, hi: R, maximize: bool) -> R {
    let inv_phi = lit::<R>(0.618_033_988_749_894_8);
    let tol = lit::<R>(1e-9);
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let value = |x: R| if maximize { -f(x) } else { f(x) };
    let mut fc = value(c);
    let mut fd = value(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = value(d);
        }
    }
    (a + b) / lit::<R>(2.0)
}
