//! Plain-text `key = value` run configuration.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::model::SystemParams;
use crate::steady::{ArnoldiOptions, KrylovOptions, SolverKind, SolverOptions};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    /// Uniform in η², i.e. in γ.
    Quadratic,
}

impl Spacing {
    fn as_str(&self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Quadratic => "quadratic",
        }
    }
}

/// Cavity number basis used for the quantum solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CavityBasis {
    Fock,
    /// Displaced to the mean field and re-centered on ⟨a⟩.
    Displaced,
}

impl CavityBasis {
    fn as_str(&self) -> &'static str {
        match self {
            CavityBasis::Fock => "fock",
            CavityBasis::Displaced => "displaced",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub coop: f64,
    pub detuning: f64,
    pub kappa_list: Vec<f64>,
    pub x_eq: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_count: usize,
    pub eta_spacing: Spacing,
    pub semiclassical_count: usize,
    pub n_cav: usize,
    pub n_mot: usize,
    pub cavity_basis: CavityBasis,
    pub dt: f64,
    pub t_map: f64,
    pub solver: SolverKind,
    pub arnoldi_krylov_dim: usize,
    pub arnoldi_n_eigs: usize,
    pub arnoldi_tol: f64,
    pub arnoldi_max_restarts: usize,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub gmres_tol: f64,
    pub precond_shift: f64,
    pub gap_shift: f64,
    pub husimi_points: usize,
    pub husimi_min_half_width: f64,
    pub warm_start: bool,
    pub husimi_dump: bool,
    pub projection: bool,
    pub gap: bool,
    pub non_gaussianity: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let arnoldi = ArnoldiOptions::default();
        let krylov = KrylovOptions::default();
        Self {
            coop: 2.0,
            detuning: 1.0,
            kappa_list: vec![1.0],
            x_eq: 5.0,
            eta_min: 0.5,
            eta_max: 6.0,
            eta_count: 12,
            eta_spacing: Spacing::Linear,
            semiclassical_count: 241,
            n_cav: 12,
            n_mot: 15,
            cavity_basis: CavityBasis::Displaced,
            dt: 1e-4,
            t_map: 0.05,
            solver: SolverKind::Krylov,
            arnoldi_krylov_dim: arnoldi.krylov_dim,
            arnoldi_n_eigs: arnoldi.n_eigs,
            arnoldi_tol: arnoldi.tol,
            arnoldi_max_restarts: arnoldi.max_restarts,
            gmres_restart: krylov.restart,
            gmres_max_iter: krylov.max_iter,
            gmres_tol: krylov.tol,
            precond_shift: krylov.precond_shift,
            gap_shift: 0.01,
            husimi_points: 201,
            husimi_min_half_width: 4.0,
            warm_start: true,
            husimi_dump: false,
            projection: true,
            gap: true,
            non_gaussianity: true,
            output_dir: PathBuf::from("results"),
        }
    }
}

/// One problem found while reading a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.field {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem{})", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "C",
    "c",
    "kappa",
    "x_eq",
    "eta_min",
    "eta_max",
    "eta_count",
    "eta_spacing",
    "semiclassical_count",
    "n_cav",
    "n_mot",
    "cavity_basis",
    "dt",
    "t_map",
    "solver",
    "arnoldi_krylov_dim",
    "arnoldi_n_eigs",
    "arnoldi_tol",
    "arnoldi_max_restarts",
    "gmres_restart",
    "gmres_max_iter",
    "gmres_tol",
    "precond_shift",
    "gap_shift",
    "husimi_points",
    "husimi_min_half_width",
    "warm_start",
    "husimi_dump",
    "projection",
    "gap",
    "non_gaussianity",
    "output_dir",
];

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("expected a finite number, got `{v}`"))
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, ConfigErrors> {
        let mut cfg = RunConfig::default();
        let mut errors = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(ConfigError {
                    line: Some(line_no),
                    field: None,
                    message: format!("expected `key = value`, got `{line}`"),
                });
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let err = |message: String| ConfigError { line: Some(line_no), field: Some(key.to_string()), message };
            if !KEYS.contains(&key) {
                errors.push(ConfigError { line: Some(line_no), field: None, message: format!("unknown key `{key}`") });
                continue;
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                errors.push(err(format!("duplicate key (first set on line {prev})")));
                continue;
            }
            if value.is_empty() {
                errors.push(err("missing value".to_string()));
                continue;
            }
            if let Err(m) = cfg.set(key, value) {
                errors.push(err(m));
            }
        }
        for (field, message) in cfg.check() {
            let line = seen.get(field).copied();
            errors.push(ConfigError { line, field: Some(field.to_string()), message });
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "C" => self.coop = parse_f64(v)?,
            "c" => self.detuning = parse_f64(v)?,
            "kappa" => {
                self.kappa_list = v.split(',').map(|s| parse_f64(s.trim())).collect::<std::result::Result<_, _>>()?
            }
            "x_eq" => self.x_eq = parse_f64(v)?,
            "eta_min" => self.eta_min = parse_f64(v)?,
            "eta_max" => self.eta_max = parse_f64(v)?,
            "eta_count" => self.eta_count = parse_usize(v)?,
            "eta_spacing" => {
                self.eta_spacing = match v {
                    "linear" => Spacing::Linear,
                    "quadratic" => Spacing::Quadratic,
                    _ => return Err(format!("expected linear or quadratic, got `{v}`")),
                }
            }
            "semiclassical_count" => self.semiclassical_count = parse_usize(v)?,
            "n_cav" => self.n_cav = parse_usize(v)?,
            "n_mot" => self.n_mot = parse_usize(v)?,
            "cavity_basis" => {
                self.cavity_basis = match v {
                    "fock" => CavityBasis::Fock,
                    "displaced" => CavityBasis::Displaced,
                    _ => return Err(format!("expected fock or displaced, got `{v}`")),
                }
            }
            "dt" => self.dt = parse_f64(v)?,
            "t_map" => self.t_map = parse_f64(v)?,
            "solver" => self.solver = v.parse()?,
            "arnoldi_krylov_dim" => self.arnoldi_krylov_dim = parse_usize(v)?,
            "arnoldi_n_eigs" => self.arnoldi_n_eigs = parse_usize(v)?,
            "arnoldi_tol" => self.arnoldi_tol = parse_f64(v)?,
            "arnoldi_max_restarts" => self.arnoldi_max_restarts = parse_usize(v)?,
            "gmres_restart" => self.gmres_restart = parse_usize(v)?,
            "gmres_max_iter" => self.gmres_max_iter = parse_usize(v)?,
            "gmres_tol" => self.gmres_tol = parse_f64(v)?,
            "precond_shift" => self.precond_shift = parse_f64(v)?,
            "gap_shift" => self.gap_shift = parse_f64(v)?,
            "husimi_points" => self.husimi_points = parse_usize(v)?,
            "husimi_min_half_width" => self.husimi_min_half_width = parse_f64(v)?,
            "warm_start" => self.warm_start = parse_bool(v)?,
            "husimi_dump" => self.husimi_dump = parse_bool(v)?,
            "projection" => self.projection = parse_bool(v)?,
            "gap" => self.gap = parse_bool(v)?,
            "non_gaussianity" => self.non_gaussianity = parse_bool(v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Cross-field and range checks: (field, message) pairs.
    fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut positive = |field: &'static str, v: f64| {
            if !(v > 0.0) {
                out.push((field, format!("must be positive, got {v}")));
            }
        };
        positive("C", self.coop);
        positive("x_eq", self.x_eq);
        positive("dt", self.dt);
        positive("t_map", self.t_map);
        positive("arnoldi_tol", self.arnoldi_tol);
        positive("gmres_tol", self.gmres_tol);
        positive("precond_shift", self.precond_shift);
        positive("gap_shift", self.gap_shift);
        positive("husimi_min_half_width", self.husimi_min_half_width);
        if self.kappa_list.is_empty() || self.kappa_list.iter().any(|k| !(*k > 0.0)) {
            out.push(("kappa", "every value must be positive".to_string()));
        }
        if self.eta_min < 0.0 {
            out.push(("eta_min", format!("must be non-negative, got {}", self.eta_min)));
        }
        if self.eta_max < self.eta_min {
            out.push((
                "eta_max",
                format!("grid error: eta_max = {} is below eta_min = {}", self.eta_max, self.eta_min),
            ));
        }
        if self.eta_count == 0 {
            out.push(("eta_count", "grid needs at least one point".to_string()));
        }
        if self.semiclassical_count == 0 {
            out.push(("semiclassical_count", "grid needs at least one point".to_string()));
        }
        if self.n_cav == 0 {
            out.push(("n_cav", "must be at least 1".to_string()));
        }
        if self.n_mot == 0 {
            out.push(("n_mot", "must be at least 1".to_string()));
        }
        if self.t_map < self.dt {
            out.push(("t_map", format!("must be at least dt = {}", self.dt)));
        }
        if self.arnoldi_n_eigs < 2 {
            out.push(("arnoldi_n_eigs", "need at least 2 eigenvalues for a gap".to_string()));
        }
        if self.arnoldi_krylov_dim < self.arnoldi_n_eigs + 2 {
            out.push((
                "arnoldi_krylov_dim",
                format!("must be at least arnoldi_n_eigs + 2 = {}", self.arnoldi_n_eigs + 2),
            ));
        }
        if self.gmres_restart == 0 {
            out.push(("gmres_restart", "must be at least 1".to_string()));
        }
        if self.husimi_points < 3 {
            out.push(("husimi_points", "need at least 3 points per axis".to_string()));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(Error::Config)
    }

    /// η/√κ grid points.
    pub fn eta_grid(&self) -> Vec<f64> {
        grid(self.eta_min, self.eta_max, self.eta_count, self.eta_spacing)
    }

    pub fn semiclassical_grid(&self) -> Vec<f64> {
        grid(self.eta_min, self.eta_max, self.semiclassical_count, Spacing::Linear)
    }

    pub fn params(&self, kappa: f64, eta_scaled: f64) -> SystemParams {
        SystemParams {
            coop: self.coop,
            detuning: self.detuning,
            kappa,
            x_eq: self.x_eq,
            eta_scaled,
            n_cav: self.n_cav,
            n_mot: self.n_mot,
            dt: self.dt,
            t_map: self.t_map,
            displacement: C64::new(0.0, 0.0),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            kind: self.solver,
            arnoldi: ArnoldiOptions {
                krylov_dim: self.arnoldi_krylov_dim,
                n_eigs: self.arnoldi_n_eigs,
                tol: self.arnoldi_tol,
                max_restarts: self.arnoldi_max_restarts,
            },
            krylov: KrylovOptions {
                restart: self.gmres_restart,
                max_iter: self.gmres_max_iter,
                tol: self.gmres_tol,
                precond_shift: self.precond_shift,
            },
            compute_gap: self.gap,
            gap_shift: self.gap_shift,
        }
    }

    /// Every key with its resolved value; parsing this text reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let kappa = self.kappa_list.iter().map(|k| format!("{k:?}")).collect::<Vec<_>>().join(", ");
        let lines = [
            ("C", format!("{:?}", self.coop)),
            ("c", format!("{:?}", self.detuning)),
            ("kappa", kappa),
            ("x_eq", format!("{:?}", self.x_eq)),
            ("eta_min", format!("{:?}", self.eta_min)),
            ("eta_max", format!("{:?}", self.eta_max)),
            ("eta_count", self.eta_count.to_string()),
            ("eta_spacing", self.eta_spacing.as_str().to_string()),
            ("semiclassical_count", self.semiclassical_count.to_string()),
            ("n_cav", self.n_cav.to_string()),
            ("n_mot", self.n_mot.to_string()),
            ("cavity_basis", self.cavity_basis.as_str().to_string()),
            ("dt", format!("{:?}", self.dt)),
            ("t_map", format!("{:?}", self.t_map)),
            ("solver", self.solver.as_str().to_string()),
            ("arnoldi_krylov_dim", self.arnoldi_krylov_dim.to_string()),
            ("arnoldi_n_eigs", self.arnoldi_n_eigs.to_string()),
            ("arnoldi_tol", format!("{:?}", self.arnoldi_tol)),
            ("arnoldi_max_restarts", self.arnoldi_max_restarts.to_string()),
            ("gmres_restart", self.gmres_restart.to_string()),
            ("gmres_max_iter", self.gmres_max_iter.to_string()),
            ("gmres_tol", format!("{:?}", self.gmres_tol)),
            ("precond_shift", format!("{:?}", self.precond_shift)),
            ("gap_shift", format!("{:?}", self.gap_shift)),
            ("husimi_points", self.husimi_points.to_string()),
            ("husimi_min_half_width", format!("{:?}", self.husimi_min_half_width)),
            ("warm_start", self.warm_start.to_string()),
            ("husimi_dump", self.husimi_dump.to_string()),
            ("projection", self.projection.to_string()),
            ("gap", self.gap.to_string()),
            ("non_gaussianity", self.non_gaussianity.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ];
        let mut s = String::from("# resolved configuration\n");
        for (k, v) in lines {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            match spacing {
                Spacing::Linear => lo + t * (hi - lo),
                Spacing::Quadratic => (lo * lo + t * (hi * hi - lo * lo)).sqrt(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.coop, cfg.detuning, cfg.x_eq), (2.0, 1.0, 5.0));
        let echo = cfg.to_config_string();
        assert!(echo.contains("C = 2.0") && echo.contains("x_eq = 5.0"));
    }

    #[test]
    fn echo_round_trips() {
        let text = "C = 0.5\nkappa = 0.5, 0.75, 1.0\neta_spacing = quadratic\nsolver = map\ngap = false\ndt=2.5e-4\nt_map = 0.1";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.kappa_list, vec![0.5, 0.75, 1.0]);
        let again = RunConfig::parse(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn errors_carry_lines_and_fields() {
        let text = "# comment\nC =\nbogus = 3\neta_min = 4 # trailing\neta_max = 2\nn_cav = -1\nno equals sign";
        let errs = RunConfig::parse(text).unwrap_err().0;
        let has =
            |line: usize, needle: &str| errs.iter().any(|e| e.line == Some(line) && e.to_string().contains(needle));
        assert!(has(2, "C: missing value"));
        assert!(has(3, "unknown key `bogus`"));
        assert!(has(5, "grid error"));
        assert!(has(6, "n_cav"));
        assert!(has(7, "key = value"));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let errs = RunConfig::parse("C = 1\nC = 2").unwrap_err();
        assert!(errs.to_string().contains("duplicate"));
    }

    #[test]
    fn grids() {
        assert_eq!(grid(1.0, 3.0, 3, Spacing::Linear), vec![1.0, 2.0, 3.0]);
        let q = grid(0.0, 2.0, 3, Spacing::Quadratic);
        assert!((q[1] - 2f64.sqrt()).abs() < 1e-15 && q[2] == 2.0);
        assert_eq!(grid(0.7, 0.7, 1, Spacing::Linear), vec![0.7]);
    }
}
