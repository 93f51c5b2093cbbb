//! Run configuration: a flat `key = value` file, overridden by `--set` flags.

use std::fmt;
use std::path::{Path, PathBuf};

use kmslab_core::operator_core::{Boundary, HamiltonianSpec, Perturbation};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Band {
    Quadratic,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StateKind {
    /// Gibbs state of `K + V`.
    Gibbs,
    /// Gibbs state of `K` pinched onto the eigenspaces of `K + V`.
    Pinched,
    /// Gibbs state of `gamma K + V / gamma` at the first gamma.
    Commuting,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Kinetic convergence threshold on `||C[rho]||_inf`.
    pub kinetic: f64,
    /// Fermi-Dirac logit residual.
    pub fit: f64,
    /// KMS line residual and two-point residual.
    pub kms: f64,
    /// Allowed per-step entropy decrease.
    pub entropy: f64,
    /// Heisenberg vs Schrodinger agreement.
    pub dual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { kinetic: 1e-10, fit: 1e-6, kms: 1e-10, entropy: 1e-10, dual: 1e-11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub plots: bool,
    pub sites: usize,
    pub boundary: Boundary,
    pub hamiltonian: HamiltonianSpec,
    pub beta: f64,
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub epsilon: f64,
    pub tau: f64,
    pub dtau: f64,
    pub tau_max: f64,
    pub steps: usize,
    pub grid_side: usize,
    pub grid_dims: usize,
    pub band: Band,
    /// Energy-shell broadening; 0 selects the exact shell.
    pub eta: f64,
    pub runs: usize,
    pub state: StateKind,
    pub t_max: f64,
    pub t_steps: usize,
    pub observables: Vec<String>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: PathBuf::from("out"),
            plots: false,
            sites: 6,
            boundary: Boundary::Periodic,
            hamiltonian: HamiltonianSpec::default(),
            beta: 1.0,
            gammas: vec![0.5, 1.0, 2.0, 4.0],
            lambdas: vec![0.4, 0.2, 0.1],
            epsilons: vec![0.5, 0.25, 0.1],
            epsilon: 0.1,
            tau: 0.5,
            dtau: 0.01,
            tau_max: 50.0,
            steps: 50,
            grid_side: 8,
            grid_dims: 2,
            band: Band::Quadratic,
            eta: 0.0,
            runs: 1,
            state: StateKind::Gibbs,
            t_max: 2.0,
            t_steps: 8,
            observables: vec!["nn:0,1".into(), "hop:0,1".into()],
            tolerances: Tolerances::default(),
        }
    }
}

/// Every accepted key, in the order used for the canonical form.
pub const KEYS: &[&str] = &[
    "seed",
    "out",
    "plots",
    "sites",
    "boundary",
    "hopping",
    "interaction",
    "chemical_potential",
    "perturbation",
    "perturbation_strength",
    "beta",
    "gammas",
    "lambdas",
    "epsilons",
    "epsilon",
    "tau",
    "dtau",
    "tau_max",
    "steps",
    "grid_side",
    "grid_dims",
    "band",
    "eta",
    "runs",
    "state",
    "t_max",
    "t_steps",
    "observables",
    "tol_kinetic",
    "tol_fit",
    "tol_kms",
    "tol_entropy",
    "tol_dual",
];

fn bad(key: &str, value: &str, want: &str) -> CliError {
    CliError::Config(format!("{key} = {value}: expected {want}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, want: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, want))
}

fn real(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = num(key, value, "a number")?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, value, "a finite number"))
    }
}

fn positive(key: &str, value: &str) -> Result<f64, CliError> {
    let x = real(key, value)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, value, "a positive number"))
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let xs = value.split(',').map(|s| positive(key, s.trim())).collect::<Result<Vec<_>, _>>()?;
    if xs.is_empty() {
        return Err(bad(key, value, "a nonempty list"));
    }
    Ok(xs)
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Set one key. Unknown keys are an error so typos never pass silently.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let h = &mut self.hamiltonian;
        match key.trim() {
            "seed" => self.seed = num(key, v, "an unsigned 64-bit integer")?,
            "out" => self.out = PathBuf::from(v),
            "plots" => self.plots = num(key, v, "true or false")?,
            "sites" => self.sites = num(key, v, "a site count")?,
            "boundary" => {
                self.boundary = match v {
                    "open" => Boundary::Open,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(bad(key, v, "open or periodic")),
                }
            }
            "hopping" => h.hopping = real(key, v)?,
            "interaction" => h.interaction = real(key, v)?,
            "chemical_potential" => h.chemical_potential = real(key, v)?,
            "perturbation" => {
                h.perturbation = match v {
                    "none" => Perturbation::None,
                    "quasifree" => Perturbation::QuasifreeHopping,
                    "quartic" => Perturbation::QuarticLocal,
                    _ => return Err(bad(key, v, "none, quasifree or quartic")),
                }
            }
            "perturbation_strength" => h.perturbation_strength = real(key, v)?,
            "beta" => {
                self.beta = real(key, v)?;
                if self.beta < 0.0 {
                    return Err(bad(key, v, "a nonnegative number"));
                }
            }
            "gammas" => self.gammas = list(key, v)?,
            "lambdas" => self.lambdas = list(key, v)?,
            "epsilons" => self.epsilons = list(key, v)?,
            "epsilon" => self.epsilon = positive(key, v)?,
            "tau" => {
                self.tau = real(key, v)?;
                if self.tau < 0.0 {
                    return Err(bad(key, v, "a nonnegative number"));
                }
            }
            "dtau" => self.dtau = positive(key, v)?,
            "tau_max" => self.tau_max = positive(key, v)?,
            "steps" => self.steps = num(key, v, "a step count")?,
            "grid_side" => self.grid_side = num(key, v, "a grid side length")?,
            "grid_dims" => self.grid_dims = num(key, v, "1 or 2")?,
            "band" => {
                self.band = match v {
                    "quadratic" => Band::Quadratic,
                    "cosine" => Band::Cosine,
                    _ => return Err(bad(key, v, "quadratic or cosine")),
                }
            }
            "eta" => {
                self.eta = real(key, v)?;
                if self.eta < 0.0 {
                    return Err(bad(key, v, "a nonnegative number"));
                }
            }
            "runs" => self.runs = num(key, v, "a run count")?,
            "state" => {
                self.state = match v {
                    "gibbs" => StateKind::Gibbs,
                    "pinched" => StateKind::Pinched,
                    "commuting" => StateKind::Commuting,
                    _ => return Err(bad(key, v, "gibbs, pinched or commuting")),
                }
            }
            "t_max" => self.t_max = positive(key, v)?,
            "t_steps" => self.t_steps = num(key, v, "a step count")?,
            "observables" => self.observables = v.split(';').map(|s| s.trim().to_string()).collect(),
            "tol_kinetic" => self.tolerances.kinetic = positive(key, v)?,
            "tol_fit" => self.tolerances.fit = positive(key, v)?,
            "tol_kms" => self.tolerances.kms = positive(key, v)?,
            "tol_entropy" => self.tolerances.entropy = positive(key, v)?,
            "tol_dual" => self.tolerances.dual = positive(key, v)?,
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Apply a `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Apply a `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, got `{kv}`")))?;
        self.set(k, v)
    }

    pub fn value_of(&self, key: &str) -> String {
        let h = &self.hamiltonian;
        match key {
            "seed" => self.seed.to_string(),
            "out" => self.out.display().to_string(),
            "plots" => self.plots.to_string(),
            "sites" => self.sites.to_string(),
            "boundary" => match self.boundary {
                Boundary::Open => "open".into(),
                Boundary::Periodic => "periodic".into(),
            },
            "hopping" => h.hopping.to_string(),
            "interaction" => h.interaction.to_string(),
            "chemical_potential" => h.chemical_potential.to_string(),
            "perturbation" => match h.perturbation {
                Perturbation::None => "none".into(),
                Perturbation::QuasifreeHopping => "quasifree".into(),
                Perturbation::QuarticLocal => "quartic".into(),
            },
            "perturbation_strength" => h.perturbation_strength.to_string(),
            "beta" => self.beta.to_string(),
            "gammas" => fmt_list(&self.gammas),
            "lambdas" => fmt_list(&self.lambdas),
            "epsilons" => fmt_list(&self.epsilons),
            "epsilon" => self.epsilon.to_string(),
            "tau" => self.tau.to_string(),
            "dtau" => self.dtau.to_string(),
            "tau_max" => self.tau_max.to_string(),
            "steps" => self.steps.to_string(),
            "grid_side" => self.grid_side.to_string(),
            "grid_dims" => self.grid_dims.to_string(),
            "band" => match self.band {
                Band::Quadratic => "quadratic".into(),
                Band::Cosine => "cosine".into(),
            },
            "eta" => self.eta.to_string(),
            "runs" => self.runs.to_string(),
            "state" => match self.state {
                StateKind::Gibbs => "gibbs".into(),
                StateKind::Pinched => "pinched".into(),
                StateKind::Commuting => "commuting".into(),
            },
            "t_max" => self.t_max.to_string(),
            "t_steps" => self.t_steps.to_string(),
            "observables" => self.observables.join(";"),
            "tol_kinetic" => self.tolerances.kinetic.to_string(),
            "tol_fit" => self.tolerances.fit.to_string(),
            "tol_kms" => self.tolerances.kms.to_string(),
            "tol_entropy" => self.tolerances.entropy.to_string(),
            "tol_dual" => self.tolerances.dual.to_string(),
            _ => unreachable!("not a config key: {key}"),
        }
    }

    /// Canonical text form; parsing it back gives the same config.
    pub fn canonical(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.value_of(k))).collect()
    }

    /// SHA-256 of the canonical form, as lowercase hex. The output directory
    /// is excluded so the same run in two places hashes the same.
    pub fn hash(&self) -> String {
        let text: String = KEYS
            .iter()
            .filter(|k| **k != "out")
            .map(|k| format!("{k} = {}\n", self.value_of(k)))
            .collect();
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("beta = 0.5\n# comment\nlambdas = 0.3, 0.1  # trailing\nboundary = open\n").unwrap();
        let mut d = RunConfig::default();
        d.apply_text(&c.canonical()).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.hash(), d.hash());
        assert_eq!(c.lambdas, vec![0.3, 0.1]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::default().apply_text("betta = 1").unwrap_err();
        assert!(err.to_string().contains("betta"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_values_are_rejected() {
        for line in ["beta = -1", "gammas = 1,0", "tol_kms = 0", "band = flat", "sites = x", "no equals sign"] {
            assert!(RunConfig::default().apply_text(line).is_err(), "{line}");
        }
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.set("out", "elsewhere").unwrap();
        assert_eq!(a.hash(), b.hash());
        b.set("seed", "2").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn every_key_is_settable() {
        let d = RunConfig::default();
        for k in KEYS {
            let mut c = RunConfig::default();
            c.set(k, &d.value_of(k)).unwrap();
            assert_eq!(c, d, "{k}");
        }
    }
}
