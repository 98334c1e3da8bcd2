//! Plain-text run configuration: `key = value` lines, `#` comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::discretization::{FeSpace, Mesh};
use crate::energy::{check_trapping, EnergyContext, Physics};
use crate::gradients::MetricKind;
use crate::optimizer::{MomentumKind, SolverConfig, StopRule};
use crate::verifier::VerifierConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl From<ConfigError> for crate::Error {
    fn from(e: ConfigError) -> Self {
        crate::Error::Config(e.to_string())
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// `(Ω/√π)(x + iy) e^{−r²/2}`
    Vortex,
    /// Complex conjugate of the vortex.
    ConjVortex,
    /// Vortex plus `((1 − Ω)/√π) e^{−r²/2}`.
    Mixed,
    /// A stored state file.
    File(PathBuf),
}

impl InitialKind {
    fn name(&self) -> String {
        match self {
            InitialKind::Vortex => "vortex".into(),
            InitialKind::ConjVortex => "conj-vortex".into(),
            InitialKind::Mixed => "mixed".into(),
            InitialKind::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    Consecutive,
    Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub physics: Physics,
    pub n: usize,
    pub metric: MetricKind,
    pub momentum: MomentumKind,
    pub initial: InitialKind,
    pub tau_min: f64,
    pub tau_max: f64,
    pub expand_bracket: bool,
    pub golden_tol: f64,
    pub stop: StopMode,
    pub stop_tol: Option<f64>,
    pub reference_energy: Option<f64>,
    pub reference_state: Option<PathBuf>,
    pub grad_tol: Option<f64>,
    pub max_iter: usize,
    pub linear_tol: f64,
    pub output: Option<PathBuf>,
    pub certify: bool,
    pub eig_k: usize,
    pub gap_tol: f64,
    pub residual_tol: f64,
}

const KEYS: &[&str] = &[
    "preset",
    "l",
    "gamma_x",
    "gamma_y",
    "omega",
    "kappa",
    "n",
    "mesh_exponent",
    "metric",
    "momentum",
    "initial",
    "tau_min",
    "tau_max",
    "expand_bracket",
    "golden_tol",
    "stop",
    "stop_tol",
    "reference_energy",
    "reference_state",
    "grad_tol",
    "max_iter",
    "linear_tol",
    "output",
    "certify",
    "eig_k",
    "gap_tol",
    "residual_tol",
];

const PHYSICS_KEYS: &[&str] = &["l", "gamma_x", "gamma_y", "omega", "kappa"];

impl RunConfig {
    fn base(physics: Physics, n: usize, initial: InitialKind) -> Self {
        let solver = SolverConfig::default();
        let verifier = VerifierConfig::default();
        Self {
            preset: None,
            physics,
            n,
            metric: solver.metric,
            momentum: solver.momentum,
            initial,
            tau_min: solver.tau_min,
            tau_max: solver.tau_max,
            expand_bracket: solver.expand_bracket,
            golden_tol: solver.golden_tol,
            stop: StopMode::Consecutive,
            stop_tol: None,
            reference_energy: None,
            reference_state: None,
            grad_tol: None,
            max_iter: solver.max_iter,
            linear_tol: solver.linear_tol,
            output: None,
            certify: true,
            eig_k: verifier.k,
            gap_tol: verifier.gap_tol,
            residual_tol: verifier.residual_tol,
        }
    }

    /// Named experiment setups; a `-coarse` suffix selects the 64-cell mesh.
    pub fn preset(name: &str) -> Option<Self> {
        let (stem, coarse) = match name.strip_suffix("-coarse") {
            Some(s) => (s, true),
            None => (name, false),
        };
        let phys = |l, gx, gy, omega, kappa| Physics {
            gamma_x: gx,
            gamma_y: gy,
            omega,
            kappa,
            half_width: l,
        };
        let (physics, n, initial) = match stem {
            "exp1" => (phys(6.0, 2.0, 1.9, 1.9, 500.0), 256, InitialKind::Vortex),
            "exp2" => (phys(8.0, 1.1, 1.3, 1.2, 400.0), 256, InitialKind::ConjVortex),
            "exp3" => (phys(3.0, 11.0, 10.0, 9.0, 1000.0), 256, InitialKind::Mixed),
            "exp4" | "exp4-2.0" => (phys(6.0, 2.0, 2.0, 2.0, 200.0), 512, InitialKind::Mixed),
            "exp4-2.4" => (phys(6.0, 2.0, 2.0, 2.4, 200.0), 512, InitialKind::Mixed),
            "exp4-2.7" => (phys(6.0, 2.0, 2.0, 2.7, 200.0), 512, InitialKind::Mixed),
            _ => return None,
        };
        let mut cfg = Self::base(physics, if coarse { 64 } else { n }, initial);
        cfg.preset = Some(name.to_string());
        Some(cfg)
    }

    /// Tolerance of the active stop rule.
    pub fn effective_stop_tol(&self) -> f64 {
        self.stop_tol.unwrap_or(match self.stop {
            StopMode::Consecutive => 1e-13,
            StopMode::Reference => 1e-9,
        })
    }

    /// Solver settings; `reference` is required for the reference stop rule.
    pub fn solver_config(&self, reference: Option<f64>) -> SolverConfig {
        let tol = self.effective_stop_tol();
        let stop = match (self.stop, reference) {
            (StopMode::Reference, Some(energy)) => StopRule::Reference { energy, tol },
            _ => StopRule::Consecutive { tol },
        };
        SolverConfig {
            metric: self.metric,
            momentum: self.momentum,
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            expand_bracket: self.expand_bracket,
            golden_tol: self.golden_tol,
            stop,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            linear_tol: self.linear_tol,
        }
    }

    pub fn verifier_config(&self) -> VerifierConfig {
        VerifierConfig {
            k: self.eig_k,
            gap_tol: self.gap_tol,
            residual_tol: self.residual_tol,
            ..VerifierConfig::default()
        }
    }

    pub fn build_context(&self) -> crate::Result<EnergyContext> {
        EnergyContext::from_physics(&self.physics, self.n)
    }

    /// Canonical `key = value` listing of every setting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.physics;
        if let Some(name) = &self.preset {
            let _ = writeln!(s, "# preset {name}");
        }
        let _ = writeln!(s, "L = {}", p.half_width);
        let _ = writeln!(s, "gamma_x = {}", p.gamma_x);
        let _ = writeln!(s, "gamma_y = {}", p.gamma_y);
        let _ = writeln!(s, "Omega = {}", p.omega);
        let _ = writeln!(s, "kappa = {}", p.kappa);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "metric = {}", self.metric);
        let _ = writeln!(s, "momentum = {}", self.momentum);
        let _ = writeln!(s, "initial = {}", self.initial.name());
        let _ = writeln!(s, "tau_min = {}", self.tau_min);
        let _ = writeln!(s, "tau_max = {}", self.tau_max);
        let _ = writeln!(s, "expand_bracket = {}", self.expand_bracket);
        let _ = writeln!(s, "golden_tol = {}", self.golden_tol);
        let stop = match self.stop {
            StopMode::Consecutive => "consecutive",
            StopMode::Reference => "reference",
        };
        let _ = writeln!(s, "stop = {stop}");
        let _ = writeln!(s, "stop_tol = {}", self.effective_stop_tol());
        if let Some(e) = self.reference_energy {
            let _ = writeln!(s, "reference_energy = {e}");
        }
        if let Some(path) = &self.reference_state {
            let _ = writeln!(s, "reference_state = {}", path.display());
        }
        if let Some(g) = self.grad_tol {
            let _ = writeln!(s, "grad_tol = {g}");
        }
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "linear_tol = {}", self.linear_tol);
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output = {}", out.display());
        }
        let _ = writeln!(s, "certify = {}", self.certify);
        let _ = writeln!(s, "eig_k = {}", self.eig_k);
        let _ = writeln!(s, "gap_tol = {}", self.gap_tol);
        let _ = writeln!(s, "residual_tol = {}", self.residual_tol);
        s
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| err(Some(line), format!("invalid value '{value}' for {key}")))
}

/// Parses and validates a configuration, including the trapping condition.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        for part in content.split([',', ';']).map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| err(Some(line), format!("expected key = value, got '{part}'")))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(err(Some(line), format!("unknown key '{}'", key)));
            }
            if value.is_empty() {
                return Err(err(Some(line), format!("missing value for {key}")));
            }
            if let Some((first, _)) = entries.get(&key) {
                return Err(err(Some(line), format!("duplicate key '{key}' (first set on line {first})")));
            }
            entries.insert(key, (line, value));
        }
    }

    let mut cfg = match entries.get("preset") {
        Some((line, name)) => {
            RunConfig::preset(name).ok_or_else(|| err(Some(*line), format!("unknown preset '{name}'")))?
        }
        None => {
            if let Some(missing) = PHYSICS_KEYS.iter().find(|k| !entries.contains_key(**k)) {
                return Err(err(None, format!("missing required key '{missing}' (or give a preset)")));
            }
            RunConfig::base(
                Physics {
                    gamma_x: 1.0,
                    gamma_y: 1.0,
                    omega: 0.0,
                    kappa: 0.0,
                    half_width: 1.0,
                },
                64,
                InitialKind::Vortex,
            )
        }
    };

    let mut omega_line = entries.get("preset").map(|(l, _)| *l);
    let mut physics_line = omega_line;
    for (key, (line, value)) in &entries {
        let line = *line;
        let v = value.as_str();
        match key.as_str() {
            "preset" => {}
            "l" => {
                cfg.physics.half_width = parse_num(v, key, line)?;
                physics_line = Some(line);
            }
            "gamma_x" => {
                cfg.physics.gamma_x = parse_num(v, key, line)?;
                physics_line = Some(line);
            }
            "gamma_y" => {
                cfg.physics.gamma_y = parse_num(v, key, line)?;
                physics_line = Some(line);
            }
            "omega" => {
                cfg.physics.omega = parse_num(v, key, line)?;
                omega_line = Some(line);
            }
            "kappa" => {
                cfg.physics.kappa = parse_num(v, key, line)?;
                physics_line = Some(line);
            }
            "n" => cfg.n = parse_num(v, key, line)?,
            "mesh_exponent" => {
                let e: u32 = parse_num(v, key, line)?;
                if !(2..=12).contains(&e) {
                    return Err(err(Some(line), format!("mesh_exponent must lie in 2..=12, got {e}")));
                }
                if entries.contains_key("n") {
                    return Err(err(Some(line), "give either n or mesh_exponent, not both"));
                }
                cfg.n = 1usize << e;
            }
            "metric" => cfg.metric = v.parse().map_err(|e: String| err(Some(line), e))?,
            "momentum" => cfg.momentum = v.parse().map_err(|e: String| err(Some(line), e))?,
            "initial" => {
                cfg.initial = match v {
                    "vortex" => InitialKind::Vortex,
                    "conj-vortex" | "conj_vortex" => InitialKind::ConjVortex,
                    "mixed" => InitialKind::Mixed,
                    _ => match v.strip_prefix("file:") {
                        Some(path) if !path.is_empty() => InitialKind::File(PathBuf::from(path)),
                        _ => {
                            return Err(err(
                                Some(line),
                                format!("unknown initial '{v}' (vortex, conj-vortex, mixed or file:PATH)"),
                            ))
                        }
                    },
                }
            }
            "tau_min" => cfg.tau_min = parse_num(v, key, line)?,
            "tau_max" => cfg.tau_max = parse_num(v, key, line)?,
            "expand_bracket" => cfg.expand_bracket = parse_num(v, key, line)?,
            "golden_tol" => cfg.golden_tol = parse_num(v, key, line)?,
            "stop" => {
                cfg.stop = match v {
                    "consecutive" => StopMode::Consecutive,
                    "reference" => StopMode::Reference,
                    _ => return Err(err(Some(line), format!("unknown stop rule '{v}' (consecutive or reference)"))),
                }
            }
            "stop_tol" => cfg.stop_tol = Some(parse_num(v, key, line)?),
            "reference_energy" => cfg.reference_energy = Some(parse_num(v, key, line)?),
            "reference_state" => cfg.reference_state = Some(PathBuf::from(v)),
            "grad_tol" => cfg.grad_tol = Some(parse_num(v, key, line)?),
            "max_iter" => cfg.max_iter = parse_num(v, key, line)?,
            "linear_tol" => cfg.linear_tol = parse_num(v, key, line)?,
            "output" => cfg.output = Some(PathBuf::from(v)),
            "certify" => cfg.certify = parse_num(v, key, line)?,
            "eig_k" => cfg.eig_k = parse_num(v, key, line)?,
            "gap_tol" => cfg.gap_tol = parse_num(v, key, line)?,
            "residual_tol" => cfg.residual_tol = parse_num(v, key, line)?,
            other => unreachable!("key {other} accepted but not handled"),
        }
    }

    if cfg.stop == StopMode::Reference && cfg.reference_energy.is_none() && cfg.reference_state.is_none() {
        let line = entries.get("stop").map(|(l, _)| *l);
        return Err(err(line, "stop = reference needs reference_energy or reference_state"));
    }
    if !(1..=10).contains(&cfg.eig_k) {
        let line = entries.get("eig_k").map(|(l, _)| *l);
        return Err(err(line, format!("eig_k must lie in 1..=10, got {}", cfg.eig_k)));
    }
    cfg.solver_config(cfg.reference_energy.or(Some(0.0)))
        .validate()
        .map_err(|m| err(None, m))?;
    cfg.physics.validate().map_err(|m| err(physics_line, m))?;
    let mesh = Mesh::new(cfg.physics.half_width, cfg.n).map_err(|e| {
        err(entries.get("n").or(entries.get("mesh_exponent")).map(|(l, _)| *l), e.to_string())
    })?;
    let space = FeSpace::new(mesh);
    check_trapping(&cfg.physics.potential(), cfg.physics.omega, &space)
        .map_err(|v| err(omega_line, format!("trapping condition violated: {v}")))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand() {
        let c = parse_config("preset=exp1").unwrap();
        let p = c.physics;
        assert_eq!((p.half_width, p.gamma_x, p.gamma_y, p.omega, p.kappa), (6.0, 2.0, 1.9, 1.9, 500.0));
        assert_eq!(c.n, 256);
        let c = parse_config("preset = exp2-coarse\n").unwrap();
        let p = c.physics;
        assert_eq!((p.half_width, p.gamma_x, p.gamma_y, p.omega, p.kappa), (8.0, 1.1, 1.3, 1.2, 400.0));
        assert_eq!(c.n, 64);
        assert_eq!(c.initial, InitialKind::ConjVortex);
    }

    #[test]
    fn trapping_violation_is_reported_with_line() {
        let e = parse_config("L=6\nkappa=10\nOmega=9, gamma_x=1, gamma_y=1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("trapping"));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let e = parse_config("preset=exp1\n# comment\nfoo = 3").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_config("preset=exp1\nn=32\nn=64").unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn missing_physics_key() {
        let e = parse_config("L=1\ngamma_x=1\ngamma_y=1\nOmega=0").unwrap_err();
        assert!(e.message.contains("kappa"));
    }

    #[test]
    fn overrides_and_round_trip() {
        let c = parse_config("preset=exp1-coarse\nmomentum=HS\nmetric=H10\nmax_iter=12 # cap\n").unwrap();
        assert_eq!(c.momentum, MomentumKind::Hs);
        assert_eq!(c.metric, MetricKind::H10);
        assert_eq!(c.max_iter, 12);
        let again = parse_config(&c.to_text()).unwrap();
        assert_eq!(again.physics, c.physics);
        assert_eq!(again.n, c.n);
        assert_eq!(again.momentum, c.momentum);
    }
}
