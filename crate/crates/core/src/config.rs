//! Experiment configuration: a TOML schema with strict validation
//! (unknown keys are errors) plus built-in presets that reproduce the
//! reference desynchronization experiments at desk scale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::reset::PartialReset;
use crate::rise::RiseFunction;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of oscillators (for meta coupling: the full network size;
    /// the simulated state then has one entry per cluster).
    pub n: usize,
    /// Master seed; required whenever any field is randomized.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Spike budget per run (total pulses).
    pub spikes: u64,
    /// Optional wall-clock (simulated time) budget instead of spikes.
    #[serde(default)]
    pub time: Option<f64>,
    pub coupling: CouplingSpec,
    pub rise: RiseSpec,
    pub reset: ResetSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub theory: Option<TheorySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CouplingSpec {
    Homogeneous { eps: f64 },
    RandomUniform { eps_min: f64, eps_max: f64 },
    Meta { sizes: Vec<usize>, eps: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RiseSpec {
    Identity,
    Ub { b: f64 },
    Lif { e_eq: f64, g_l: f64 },
    LifCb { e_eq: f64, g_l: f64, e_syn: f64 },
    Qif { alpha: f64, beta: f64 },
    QifCb { alpha: f64, beta: f64, e_syn: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ResetSpec {
    Linear { c: f64 },
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// All phases at threshold plus uniform noise on `[-magnitude, 0]`.
    PerturbedSync { magnitude: f64 },
    /// Independent phases uniform on `[0, 1)`.
    UniformRandom,
    /// Explicit phases by oscillator id.
    Explicit { phases: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Reset strengths of the sweep grid (requires a linear reset).
    pub c_values: Vec<f64>,
    /// Independent runs per grid point.
    pub runs: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySpec {
    #[serde(default)]
    pub a_min: Option<usize>,
    #[serde(default)]
    pub a_max: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write every k-th reference-section snapshot into the event log
    /// (0 disables snapshot lines).
    #[serde(default)]
    pub snapshot_every: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Dimension of the simulated state: one per cluster for meta
    /// coupling, otherwise `n`.
    pub fn state_dim(&self) -> usize {
        match &self.coupling {
            CouplingSpec::Meta { sizes, .. } => sizes.len(),
            _ => self.n,
        }
    }

    fn randomized(&self) -> bool {
        matches!(self.coupling, CouplingSpec::RandomUniform { .. })
            || !matches!(self.initial, InitialSpec::Explicit { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be >= 1"));
        }
        if self.spikes == 0 && self.time.is_none() {
            return Err(Error::config("spikes", "spike or time budget required"));
        }
        if self.randomized() && self.seed.is_none() {
            return Err(Error::config(
                "seed",
                "required because the coupling or initial condition is randomized",
            ));
        }
        let nf = self.n as f64;
        match &self.coupling {
            CouplingSpec::Homogeneous { eps } => {
                if !(*eps >= 0.0) {
                    return Err(Error::config("coupling.eps", "must be >= 0"));
                }
                if (nf - 1.0) * eps >= 1.0 {
                    return Err(Error::config(
                        "coupling.eps",
                        format!("safety bound violated: (n-1) eps = {} >= 1", (nf - 1.0) * eps),
                    ));
                }
            }
            CouplingSpec::RandomUniform { eps_min, eps_max } => {
                if !(0.0 <= *eps_min && eps_min <= eps_max) {
                    return Err(Error::config(
                        "coupling.eps_min",
                        "need 0 <= eps_min <= eps_max",
                    ));
                }
                if (nf - 1.0) * eps_max >= 1.0 {
                    return Err(Error::config(
                        "coupling.eps_max",
                        "safety bound violated: (n-1) eps_max >= 1",
                    ));
                }
            }
            CouplingSpec::Meta { sizes, eps } => {
                if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
                    return Err(Error::config("coupling.sizes", "non-empty, all >= 1"));
                }
                let total: usize = sizes.iter().sum();
                if total != self.n {
                    return Err(Error::config(
                        "coupling.sizes",
                        format!("sizes sum to {total}, expected n = {}", self.n),
                    ));
                }
                if (nf - 1.0) * eps >= 1.0 {
                    return Err(Error::config("coupling.eps", "safety bound violated"));
                }
            }
        }
        self.build_rise()
            .map_err(|e| Error::config("rise", e.to_string()))?;
        self.build_reset()
            .map_err(|e| Error::config("reset", e.to_string()))?;
        match &self.initial {
            InitialSpec::PerturbedSync { magnitude } => {
                if !(*magnitude > 0.0 && *magnitude < 1.0) {
                    return Err(Error::config("initial.magnitude", "need 0 < magnitude < 1"));
                }
            }
            InitialSpec::Explicit { phases } => {
                if phases.len() != self.state_dim() {
                    return Err(Error::config(
                        "initial.phases",
                        format!(
                            "got {} phases, expected {} (state dimension)",
                            phases.len(),
                            self.state_dim()
                        ),
                    ));
                }
                if phases.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config("initial.phases", "phases must lie in [0, 1]"));
                }
            }
            InitialSpec::UniformRandom => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.c_values.is_empty() || sweep.runs == 0 {
                return Err(Error::config("sweep", "c_values and runs must be non-empty"));
            }
            if sweep.c_values.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::config("sweep.c_values", "reset strengths in [0, 1]"));
            }
            if !matches!(self.reset, ResetSpec::Linear { .. }) {
                return Err(Error::config("sweep", "sweeping requires a linear reset"));
            }
        }
        if let Some(theory) = &self.theory {
            let lo = theory.a_min.unwrap_or(2);
            let hi = theory.a_max.unwrap_or(self.n);
            if lo < 2 || hi > self.n || lo > hi {
                return Err(Error::config("theory", "need 2 <= a_min <= a_max <= n"));
            }
        }
        Ok(())
    }

    pub fn build_rise(&self) -> Result<RiseFunction> {
        match &self.rise {
            RiseSpec::Identity => Ok(RiseFunction::identity()),
            RiseSpec::Ub { b } => RiseFunction::ub(*b),
            RiseSpec::Lif { e_eq, g_l } => RiseFunction::lif(*e_eq, *g_l),
            RiseSpec::LifCb { e_eq, g_l, e_syn } => {
                RiseFunction::lif(*e_eq, *g_l)?.conductance_based(*e_syn)
            }
            RiseSpec::Qif { alpha, beta } => RiseFunction::qif(*alpha, *beta),
            RiseSpec::QifCb { alpha, beta, e_syn } => {
                RiseFunction::qif(*alpha, *beta)?.conductance_based(*e_syn)
            }
        }
    }

    pub fn build_reset(&self) -> Result<PartialReset> {
        match &self.reset {
            ResetSpec::Linear { c } => PartialReset::linear(*c),
            ResetSpec::Table { points } => PartialReset::table(points.clone()),
        }
    }

    pub fn build_coupling<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CouplingMatrix> {
        match &self.coupling {
            CouplingSpec::Homogeneous { eps } => CouplingMatrix::homogeneous(self.n, *eps),
            CouplingSpec::RandomUniform { eps_min, eps_max } => {
                CouplingMatrix::random_uniform(self.n, *eps_min, *eps_max, rng)
            }
            CouplingSpec::Meta { sizes, eps } => CouplingMatrix::meta(sizes, *eps),
        }
    }

    /// Initial phases by oscillator id, in `[0, 1]`.
    pub fn build_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let dim = self.state_dim();
        Ok(match &self.initial {
            InitialSpec::PerturbedSync { magnitude } => (0..dim)
                .map(|_| 1.0 - rng.random_range(0.0..*magnitude))
                .collect(),
            InitialSpec::UniformRandom => (0..dim).map(|_| rng.random_range(0.0..1.0)).collect(),
            InitialSpec::Explicit { phases } => phases.clone(),
        })
    }

    /// Replaces the linear reset strength (used by sweeps).
    pub fn with_reset_c(&self, c: f64) -> Self {
        let mut cfg = self.clone();
        cfg.reset = ResetSpec::Linear { c };
        cfg
    }
}

/// Built-in experiment presets at desk scale. Parameter provenance is
/// documented in the README; `fig6`/`fig7` carry the convex
/// conductance-based LIF rise function (`E_eq = 3, E_syn = 1.1`) and
/// `fig6` fixes `eps = 0.009`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "fig3" => ExperimentConfig {
            n: 50,
            seed: Some(20080912),
            spikes: 30_000,
            time: None,
            coupling: CouplingSpec::Homogeneous { eps: 0.0175 },
            rise: RiseSpec::Ub { b: -3.0 },
            reset: ResetSpec::Linear { c: 0.5 },
            initial: InitialSpec::PerturbedSync { magnitude: 1e-3 },
            sweep: Some(SweepSpec {
                c_values: (0..=20).map(|k| k as f64 * 0.05).collect(),
                runs: 50,
            }),
            theory: Some(TheorySpec {
                a_min: None,
                a_max: None,
            }),
            output: OutputSpec::default(),
        },
        "fig6" => ExperimentConfig {
            n: 100,
            seed: Some(20080913),
            spikes: 60_000,
            time: None,
            coupling: CouplingSpec::Homogeneous { eps: 0.009 },
            rise: RiseSpec::LifCb {
                e_eq: 3.0,
                g_l: 1.0,
                e_syn: 1.1,
            },
            reset: ResetSpec::Linear { c: 0.18 },
            initial: InitialSpec::PerturbedSync { magnitude: 1e-3 },
            sweep: Some(SweepSpec {
                c_values: (0..=20).map(|k| k as f64 * 0.05).collect(),
                runs: 20,
            }),
            theory: Some(TheorySpec {
                a_min: None,
                a_max: None,
            }),
            output: OutputSpec::default(),
        },
        "fig7" => ExperimentConfig {
            n: 50,
            seed: Some(20080914),
            spikes: 30_000,
            time: None,
            coupling: CouplingSpec::RandomUniform {
                eps_min: 0.009,
                eps_max: 0.011,
            },
            rise: RiseSpec::LifCb {
                e_eq: 3.0,
                g_l: 1.0,
                e_syn: 1.1,
            },
            reset: ResetSpec::Linear { c: 0.19 },
            initial: InitialSpec::PerturbedSync { magnitude: 1e-3 },
            sweep: Some(SweepSpec {
                c_values: (0..=20).map(|k| k as f64 * 0.05).collect(),
                runs: 20,
            }),
            theory: None,
            output: OutputSpec::default(),
        },
        "fig8" => ExperimentConfig {
            n: 100,
            seed: Some(20080915),
            spikes: 60_000,
            time: None,
            coupling: CouplingSpec::Homogeneous { eps: 0.002 },
            rise: RiseSpec::QifCb {
                alpha: 1.0,
                beta: -1.0,
                e_syn: 2.0,
            },
            reset: ResetSpec::Linear { c: 0.46 },
            initial: InitialSpec::PerturbedSync { magnitude: 1e-3 },
            sweep: Some(SweepSpec {
                c_values: (0..=15).map(|k| 0.30 + k as f64 * 0.02).collect(),
                runs: 20,
            }),
            theory: None,
            output: OutputSpec::default(),
        },
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (expected fig3|fig6|fig7|fig8)"),
            ))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
