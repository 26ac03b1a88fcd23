//! Run configuration: structured key = value text (TOML sections), full
//! validation, and assembly of the simulation pipeline.
//!
//! Unknown keys are parse errors, so typos never silently fall back to
//! defaults. Every block validates against its module's invariants before a
//! run starts.

use serde::{Deserialize, Serialize};

use crate::decoherence::{DirectionModel, KickParams};
use crate::dynamics::{plan_propagator, Grid};
use crate::ensemble::{EnsembleConfig, InitialState};
use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, WellPartition};
use crate::spectral::{solve_spectrum, BlochSpectrum, PlaneWaveBasis, SuperpositionSpec};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub grid: GridSection,
    pub propagation: PropagationSection,
    pub initial_state: InitialStateSection,
    pub kick: KickSection,
    pub ensemble: EnsembleSection,
    pub spectral: SpectralSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeSection::default(),
            grid: GridSection::default(),
            propagation: PropagationSection::default(),
            initial_state: InitialStateSection::default(),
            kick: KickSection::default(),
            ensemble: EnsembleSection::default(),
            spectral: SpectralSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub v_xy: f64,
    pub z_f: f64,
    pub theta_xy: f64,
    pub theta_z: f64,
    pub phi_xy: f64,
    pub phi_z: f64,
    /// E_R in s⁻¹. 3500 reads "E_R = 3.5 kHz" as E_R/ħ; use 2π·3500 for the
    /// E_R/h reading.
    pub er_frequency: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            v_xy: 36.0,
            z_f: 0.1,
            theta_xy: 0.0,
            theta_z: std::f64::consts::FRAC_PI_2,
            phi_xy: 0.0,
            phi_z: 0.0,
            er_frequency: 3500.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            x_min: -9.75,
            x_max: 10.25,
            n_points: 512,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub dt: f64,
    pub t_final: f64,
    pub n_record: usize,
}

impl Default for PropagationSection {
    fn default() -> Self {
        PropagationSection {
            dt: 1e-3,
            t_final: 40.0,
            n_record: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InitialStateSection {
    /// "l-state", "gaussian" or "coefficients".
    pub kind: String,
    pub sigma: f64,
    pub center: f64,
    /// (level, re, im) triples for kind = "coefficients".
    pub coefficients: Vec<(usize, f64, f64)>,
}

impl Default for InitialStateSection {
    fn default() -> Self {
        InitialStateSection {
            kind: "l-state".into(),
            sigma: 0.1,
            center: 0.0,
            coefficients: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct KickSection {
    pub enabled: bool,
    pub strength_m: f64,
    /// Laboratory rate in Hz; converted through er_frequency.
    pub rate_hz: Option<f64>,
    /// Rate already in events per unit simulation time. Mutually exclusive
    /// with rate_hz.
    pub rate_dimensionless: Option<f64>,
    /// "isotropic" or "dipole-z".
    pub direction: String,
}

impl Default for KickSection {
    fn default() -> Self {
        KickSection {
            enabled: false,
            strength_m: 10.0,
            rate_hz: None,
            rate_dimensionless: None,
            direction: "isotropic".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_trajectories: usize,
    pub base_seed: u64,
    pub with_std_err: bool,
    pub parallel: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_trajectories: 50,
            base_seed: 0,
            with_std_err: false,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSection {
    pub n_max: usize,
    /// Number of levels used for Gaussian projection and level-resolved
    /// output.
    pub gaussian_levels: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            n_max: 32,
            gaussian_levels: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub kick_log: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            kick_log: false,
        }
    }
}

/// Parses the structured text config; unknown keys and malformed values are
/// errors with line/key context, and every invariant is checked.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.lattice_params().validate()?;
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n_points)?;

        let p = &self.propagation;
        if !(p.dt > 0.0) {
            return Err(Error::validation("propagation.dt", "must be > 0"));
        }
        if !(p.t_final > 0.0) {
            return Err(Error::validation("propagation.t_final", "must be > 0"));
        }
        if p.n_record == 0 {
            return Err(Error::validation("propagation.n_record", "must be >= 1"));
        }
        let n_steps = p.t_final / p.dt;
        if (n_steps - n_steps.round()).abs() > 1e-6 {
            return Err(Error::validation(
                "propagation.t_final",
                "must be an integer number of dt steps",
            ));
        }
        let n_steps = n_steps.round() as u64;
        if n_steps % p.n_record as u64 != 0 {
            return Err(Error::validation(
                "propagation.n_record",
                format!("must divide the {n_steps} propagation steps"),
            ));
        }

        match self.initial_state.kind.as_str() {
            "l-state" => {}
            "gaussian" => {
                if !(self.initial_state.sigma > 0.0) {
                    return Err(Error::validation("initial_state.sigma", "must be > 0"));
                }
                if self.initial_state.center < self.grid.x_min
                    || self.initial_state.center >= self.grid.x_max
                {
                    return Err(Error::validation(
                        "initial_state.center",
                        "must lie inside the grid domain",
                    ));
                }
            }
            "coefficients" => {
                if self.initial_state.coefficients.is_empty() {
                    return Err(Error::validation(
                        "initial_state.coefficients",
                        "must not be empty",
                    ));
                }
                let dim = 2 * self.spectral.n_max + 1;
                for &(l, _, _) in &self.initial_state.coefficients {
                    if l >= dim {
                        return Err(Error::validation(
                            "initial_state.coefficients",
                            format!("level {l} outside the {dim}-state spectrum"),
                        ));
                    }
                }
            }
            other => {
                return Err(Error::validation(
                    "initial_state.kind",
                    format!("unknown kind '{other}' (expected l-state, gaussian or coefficients)"),
                ));
            }
        }

        if self.kick.rate_hz.is_some() && self.kick.rate_dimensionless.is_some() {
            return Err(Error::validation(
                "kick",
                "rate_hz and rate_dimensionless are mutually exclusive",
            ));
        }
        if self.kick.enabled && self.kick.rate_hz.is_none() && self.kick.rate_dimensionless.is_none()
        {
            return Err(Error::validation(
                "kick",
                "enabled kicks need rate_hz or rate_dimensionless",
            ));
        }
        if let Some(r) = self.kick.rate_hz {
            if !(r >= 0.0) {
                return Err(Error::validation("kick.rate_hz", "must be >= 0"));
            }
        }
        if let Some(r) = self.kick.rate_dimensionless {
            if !(r >= 0.0) {
                return Err(Error::validation("kick.rate_dimensionless", "must be >= 0"));
            }
        }
        if self.kick.enabled && !(self.kick.strength_m > 0.0) {
            return Err(Error::validation("kick.strength_m", "must be > 0"));
        }
        match self.kick.direction.as_str() {
            "isotropic" | "dipole-z" => {}
            other => {
                return Err(Error::validation(
                    "kick.direction",
                    format!("unknown direction '{other}' (expected isotropic or dipole-z)"),
                ));
            }
        }

        if self.ensemble.n_trajectories < 1 {
            return Err(Error::validation("ensemble.n_trajectories", "must be >= 1"));
        }
        if self.spectral.n_max < 2 {
            return Err(Error::validation("spectral.n_max", "must be >= 2"));
        }
        if self.spectral.gaussian_levels < 1 {
            return Err(Error::validation("spectral.gaussian_levels", "must be >= 1"));
        }
        Ok(())
    }

    pub fn lattice_params(&self) -> LatticeParams<f64> {
        LatticeParams {
            v_xy: self.lattice.v_xy,
            z_f: self.lattice.z_f,
            theta_xy: self.lattice.theta_xy,
            theta_z: self.lattice.theta_z,
            phi_xy: self.lattice.phi_xy,
            phi_z: self.lattice.phi_z,
            er_frequency: self.lattice.er_frequency,
        }
    }

    /// Normalized text form (the serialization used for output headers and
    /// round-trip checks).
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Dimensionless kick rate plus a human-readable note on the conversion.
    pub fn kick_rate(&self) -> (f64, String) {
        if let Some(hz) = self.kick.rate_hz {
            let rate = self.lattice_params().convert_rate(hz);
            (
                rate,
                format!(
                    "rate {hz} Hz / er_frequency {} s^-1 = {rate:.6e} per time unit (time in 1/E_R, hbar = 1)",
                    self.lattice.er_frequency
                ),
            )
        } else {
            let rate = self.kick.rate_dimensionless.unwrap_or(0.0);
            (rate, format!("rate {rate:.6e} per time unit (dimensionless)"))
        }
    }

    /// Builds every pipeline stage this config describes.
    pub fn build(&self) -> Result<SimContext> {
        self.validate()?;
        let params = self.lattice_params();
        let grid = Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n_points)?;
        let basis = PlaneWaveBasis::new(self.spectral.n_max)?;
        let spectrum = solve_spectrum(&params, basis)?;
        let partition = WellPartition::build(&params, (grid.x_min, grid.x_max), 256)?;
        let plan = plan_propagator(&params, &grid, self.propagation.dt);

        let n_steps = (self.propagation.t_final / self.propagation.dt).round() as u64;
        let stride = n_steps / self.propagation.n_record as u64;
        let record_times: Vec<f64> = (0..=self.propagation.n_record)
            .map(|i| (i as u64 * stride) as f64 * self.propagation.dt)
            .collect();

        let initial_state = match self.initial_state.kind.as_str() {
            "l-state" => InitialState::LState,
            "gaussian" => InitialState::Gaussian {
                sigma: self.initial_state.sigma,
                center: self.initial_state.center,
            },
            _ => InitialState::Superposition(SuperpositionSpec {
                coefficients: self
                    .initial_state
                    .coefficients
                    .iter()
                    .map(|&(l, re, im)| (l, num_complex::Complex::new(re, im)))
                    .collect(),
            }),
        };

        let (rate, rate_note) = self.kick_rate();
        let kick = KickParams {
            strength_m: self.kick.strength_m,
            rate,
            enabled: self.kick.enabled,
            direction: match self.kick.direction.as_str() {
                "dipole-z" => DirectionModel::DipoleZ,
                _ => DirectionModel::Isotropic,
            },
        };

        let ensemble = EnsembleConfig {
            n_trajectories: self.ensemble.n_trajectories,
            base_seed: self.ensemble.base_seed,
            record_times,
            initial_state,
            kick,
            with_std_err: self.ensemble.with_std_err,
            parallel: self.ensemble.parallel,
            keep_kick_log: self.output.kick_log,
        };

        Ok(SimContext {
            params,
            grid,
            basis,
            spectrum,
            partition,
            plan,
            ensemble,
            rate_note,
        })
    }
}

/// Everything a run needs, assembled from a validated config.
pub struct SimContext {
    pub params: LatticeParams<f64>,
    pub grid: Grid<f64>,
    pub basis: PlaneWaveBasis,
    pub spectrum: BlochSpectrum<f64>,
    pub partition: WellPartition<f64>,
    pub plan: crate::dynamics::PropagatorPlan<f64>,
    pub ensemble: EnsembleConfig<f64>,
    pub rate_note: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.propagation.dt, 1e-3);
        assert_eq!(cfg.spectral.n_max, 32);
        assert_eq!(cfg.ensemble.n_trajectories, 50);
        assert_eq!(cfg.grid.n_points, 512);
        assert_eq!(cfg.lattice.er_frequency, 3500.0);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let err = parse_config("[lattice]\nv_xz = 36.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let msg = err.to_string();
        assert!(msg.contains("v_xz"), "message names the key: {msg}");
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let err = parse_config("[lattice]\nz_f = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("z_f"), "{err}");

        let err = parse_config(
            "[kick]\nenabled = true\nrate_hz = 10.0\nrate_dimensionless = 0.1\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");

        let err = parse_config("[kick]\nenabled = true\n").unwrap_err();
        assert!(err.to_string().contains("rate"), "{err}");

        let err = parse_config("[grid]\nn_points = 500\n").unwrap_err();
        assert!(matches!(err, Error::BadDomain(_)), "{err}");

        let err = parse_config("[initial_state]\nkind = \"plane-wave\"\n").unwrap_err();
        assert!(err.to_string().contains("kind"), "{err}");
    }

    #[test]
    fn round_trip_is_idempotent_after_one_normalization() {
        let text = "[lattice]\nz_f = 0.05\n[kick]\nenabled = true\nrate_hz = 100.0\n";
        let cfg = parse_config(text).unwrap();
        let once = cfg.to_text();
        let cfg2 = parse_config(&once).unwrap();
        let twice = cfg2.to_text();
        assert_eq!(once, twice);
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn rate_conversion_is_reported() {
        let cfg = parse_config("[kick]\nenabled = true\nrate_hz = 100.0\n").unwrap();
        let (rate, note) = cfg.kick_rate();
        assert!((rate - 100.0 / 3500.0).abs() < 1e-15);
        assert!(note.contains("3500"));

        let cfg = parse_config("[kick]\nenabled = true\nrate_dimensionless = 0.5\n").unwrap();
        let (rate, _) = cfg.kick_rate();
        assert_eq!(rate, 0.5);
    }

    #[test]
    fn build_assembles_the_pipeline() {
        let mut cfg = RunConfig::default();
        cfg.propagation.t_final = 0.01;
        cfg.propagation.n_record = 2;
        cfg.propagation.dt = 1e-3;
        let ctx = cfg.build().unwrap();
        assert_eq!(ctx.ensemble.record_times, vec![0.0, 0.005, 0.01]);
        assert_eq!(ctx.spectrum.states.len(), 65);
        assert_eq!(ctx.partition.n_cells(), 20);
    }

    #[test]
    fn record_grid_must_divide_steps() {
        let mut cfg = RunConfig::default();
        cfg.propagation.t_final = 0.0101;
        cfg.propagation.dt = 1e-3;
        assert!(matches!(cfg.validate(), Err(Error::Validation { .. })));
        cfg.propagation.t_final = 0.01;
        cfg.propagation.n_record = 3;
        assert!(matches!(cfg.validate(), Err(Error::Validation { .. })));
    }
}
