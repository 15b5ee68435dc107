//! The JSON experiment configuration and its validation.

use lorentz_kinetic::divisors::DivisorConfig;
use lorentz_kinetic::dynamics::{InitialData, SimConfig};
use lorentz_kinetic::field::PGrid;
use lorentz_kinetic::lattice::PeriodicPotential;
use serde::{Deserialize, Serialize};

/// Smoothing probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSection {
    pub nu_list: Vec<f64>,
    pub kappa2_radius: i64,
    pub p_points: usize,
    pub p_half_width: f64,
}

impl Default for ScaleSection {
    fn default() -> Self {
        ScaleSection {
            nu_list: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            kappa2_radius: 200,
            p_points: 256,
            p_half_width: 0.75,
        }
    }
}

/// Remainder probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemainderSection {
    pub s: f64,
    pub tau_list: Vec<f64>,
    pub gamma: f64,
}

impl Default for RemainderSection {
    fn default() -> Self {
        RemainderSection {
            s: 0.2,
            tau_list: (2..=7).map(|k| 0.5f64.powi(k)).collect(),
            gamma: 0.4,
        }
    }
}

/// Limit comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoltzmannSection {
    pub collision_dt: f64,
}

impl Default for BoltzmannSection {
    fn default() -> Self {
        BoltzmannSection {
            collision_dt: 0.005,
        }
    }
}

/// Resonance geometry and the single-mode scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceSection {
    pub n_radius: i64,
    pub box_half: f64,
    pub rho: f64,
    pub tau: f64,
    pub eta_panels: usize,
}

impl Default for ResonanceSection {
    fn default() -> Self {
        ResonanceSection {
            n_radius: 3,
            box_half: 4.0,
            rho: 0.05,
            tau: 0.25,
            eta_panels: 1024,
        }
    }
}

/// Bound validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub lemma: String,
    pub samples: usize,
    pub eta: Vec<f64>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection {
            lemma: "phi-st".into(),
            samples: 1000,
            eta: vec![0.118],
        }
    }
}

/// Observable at the zero mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSection {
    pub t: f64,
    /// Multiple of `1/(2m)` between η nodes.
    pub eta_stride: usize,
}

impl Default for ObservableSection {
    fn default() -> Self {
        ObservableSection {
            t: 0.5,
            eta_stride: 4,
        }
    }
}

/// Output location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// One experiment; every section has defaults, so `{}` is a valid configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must name the subcommand being run.
    pub command: Option<String>,
    pub seed: u64,
    pub eps_list: Vec<f64>,
    pub sim: SimConfig,
    pub divisors: DivisorConfig,
    pub scale: ScaleSection,
    pub remainder: RemainderSection,
    pub boltzmann: BoltzmannSection,
    pub resonance: ResonanceSection,
    pub bounds: BoundsSection,
    pub observable: ObservableSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            seed: 7,
            eps_list: vec![0.1, 0.05, 0.025],
            sim: SimConfig {
                eps: 0.1,
                t_final: 0.5,
                dt: 0.05,
                potential: PeriodicPotential::single_mode(1, 0, 0.5),
                n: 8,
                m: 64,
                eta: vec![15.0 / 128.0],
                kappa2_radius: 6,
                xi_radius: 2,
                p_grid: PGrid::centered(1, 64, 2.0),
                initial: InitialData::GaussianPacket {
                    center: vec![0.0],
                    width: 4.0,
                    k0: vec![0.0],
                    radius: 16,
                    per_cell: 16,
                },
            },
            divisors: DivisorConfig {
                delta: 0.1,
                n_radius: 20,
                dim: 1,
                gamma: 0.4,
            },
            scale: ScaleSection::default(),
            remainder: RemainderSection::default(),
            boltzmann: BoltzmannSection::default(),
            resonance: ResonanceSection::default(),
            bounds: BoundsSection::default(),
            observable: ObservableSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Checks the invariants shared by all commands.
    pub fn validate(&self) -> Result<(), String> {
        if self.eps_list.is_empty() {
            return Err("eps_list is empty".into());
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(format!(
                "eps_list {:?} has entries outside (0, 1)",
                self.eps_list
            ));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(format!(
                "eps_list {:?} is not strictly decreasing",
                self.eps_list
            ));
        }
        self.sim.validate().map_err(|e| e.to_string())?;
        self.divisors.validate().map_err(|e| e.to_string())?;
        let two_m_eta = |e: &f64| 2.0 * self.sim.m as f64 * e;
        if self
            .sim
            .eta
            .iter()
            .map(two_m_eta)
            .any(|x| (x - x.round()).abs() > 1e-9)
        {
            return Err(format!(
                "sim.eta {:?} is not a multiple of 1/(2m) with m = {}",
                self.sim.eta, self.sim.m
            ));
        }
        if self.observable.eta_stride == 0 || (self.sim.m / 2) % self.observable.eta_stride != 0 {
            return Err(format!(
                "observable.eta_stride {} does not divide m/2 = {}",
                self.observable.eta_stride,
                self.sim.m / 2
            ));
        }
        if self.remainder.tau_list.iter().any(|t| *t <= 0.0) {
            return Err("remainder.tau_list must be positive".into());
        }
        Ok(())
    }
}
