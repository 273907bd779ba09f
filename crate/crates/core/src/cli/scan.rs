//! Scan driver: one steady-state solve per (κ, η) point, written as CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use faer::Mat;

use super::config::{CavityBasis, RunConfig};
use crate::model::{build_operators, SystemOperators, SystemParams};
use crate::observables::{
    axes_with_floor, basic_means, entropies, husimi, log_negativity, non_gaussianity, project_positive, HusimiGrid,
    SingleMode,
};
use crate::semiclassical::{
    bifurcation_scan, center_critical_gamma, critical_cooperativity, delta_eff, eta_scaled_for_gamma, global_minimum,
    mean_photon_semiclassical, photon_amplitude, side_equilibria,
};
use crate::steady::refine::COARSE_TAIL_TOL;
use crate::steady::{solve_steady, DensityMatrix, SolverOptions, SteadyOutcome};
use crate::{Error, Result, C64};

pub const SCHEMA_VERSION: u32 = 1;

pub const SCAN_FILE: &str = "scan.csv";
pub const SEMICLASSICAL_FILE: &str = "semiclassical.csv";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.txt";

pub const SCAN_COLUMNS: [&str; 22] = [
    "kappa",
    "eta_scaled",
    "gamma",
    "n_photon",
    "n_photon_semiclassical",
    "delta_eff_mean",
    "delta_eff_semiclassical",
    "x2_mean",
    "x2_dispersion",
    "kinetic",
    "S_total",
    "S_cav",
    "S_ion",
    "E_N",
    "mutual_info",
    "gap_over_kappa",
    "nongauss_cav",
    "nongauss_ion",
    "nongauss_ion_projected",
    "converged_flag",
    "arnoldi_residual",
    "note",
];

pub const SEMICLASSICAL_COLUMNS: [&str; 8] = [
    "eta_scaled",
    "gamma",
    "center_stable",
    "xbar_side_stable",
    "xbar_side_unstable",
    "xbar_global_min",
    "n_photon_semiclassical",
    "delta_eff_semiclassical",
];

/// One row of the scan table. Quantities that could not be computed are NaN
/// and the reason goes into `note`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub kappa: f64,
    pub eta_scaled: f64,
    pub gamma: f64,
    pub n_photon: f64,
    pub n_photon_semiclassical: f64,
    pub delta_eff_mean: f64,
    pub delta_eff_semiclassical: f64,
    pub x2_mean: f64,
    pub x2_dispersion: f64,
    pub kinetic: f64,
    pub s_total: f64,
    pub s_cav: f64,
    pub s_ion: f64,
    pub log_negativity: f64,
    pub mutual_info: f64,
    pub gap_over_kappa: f64,
    pub nongauss_cav: f64,
    pub nongauss_ion: f64,
    pub nongauss_ion_projected: f64,
    pub converged: bool,
    pub residual: f64,
    pub note: String,
}

impl ScanRow {
    fn blank(p: &SystemParams) -> Self {
        let x = global_minimum(p);
        Self {
            kappa: p.kappa,
            eta_scaled: p.eta_scaled,
            gamma: p.gamma(),
            n_photon: f64::NAN,
            n_photon_semiclassical: mean_photon_semiclassical(x, p),
            delta_eff_mean: f64::NAN,
            delta_eff_semiclassical: delta_eff(x, p) / p.u0(),
            x2_mean: f64::NAN,
            x2_dispersion: f64::NAN,
            kinetic: f64::NAN,
            s_total: f64::NAN,
            s_cav: f64::NAN,
            s_ion: f64::NAN,
            log_negativity: f64::NAN,
            mutual_info: f64::NAN,
            gap_over_kappa: f64::NAN,
            nongauss_cav: f64::NAN,
            nongauss_ion: f64::NAN,
            nongauss_ion_projected: f64::NAN,
            converged: false,
            residual: f64::NAN,
            note: String::new(),
        }
    }

    fn add_note(&mut self, note: impl AsRef<str>) {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(note.as_ref());
    }

    fn record(&self) -> Vec<String> {
        let nums = [
            self.kappa,
            self.eta_scaled,
            self.gamma,
            self.n_photon,
            self.n_photon_semiclassical,
            self.delta_eff_mean,
            self.delta_eff_semiclassical,
            self.x2_mean,
            self.x2_dispersion,
            self.kinetic,
            self.s_total,
            self.s_cav,
            self.s_ion,
            self.log_negativity,
            self.mutual_info,
            self.gap_over_kappa,
            self.nongauss_cav,
            self.nongauss_ion,
            self.nongauss_ion_projected,
        ];
        let mut out: Vec<String> = nums.iter().map(|&v| num(v)).collect();
        out.push(self.converged.to_string());
        out.push(num(self.residual));
        out.push(self.note.clone());
        out
    }
}

/// 17 significant digits; NaN for missing values.
fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == 0.0 {
        // no negative zero in the output
        format!("{:.16e}", 0.0)
    } else {
        format!("{v:.16e}")
    }
}

/// Husimi grids kept for the optional dump files.
#[derive(Clone, Debug)]
pub struct HusimiPair {
    pub cavity: HusimiGrid,
    pub ion: HusimiGrid,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub row: ScanRow,
    pub husimi: Option<HusimiPair>,
}

/// Converged state of a neighbouring point together with the cavity
/// displacement of the basis it is written in.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub state: DensityMatrix,
    pub displacement: C64,
}

/// Solves one grid point. Failures end up in the row, never in the return.
pub fn run_point(cfg: &RunConfig, params: &SystemParams, warm: Option<&WarmStart>) -> (PointResult, Option<WarmStart>) {
    let mut row = ScanRow::blank(params);
    let mut husimi_pair = None;
    let state = match solve_point(cfg, params, warm, &mut row, &mut husimi_pair) {
        Ok(state) => Some(state),
        Err(e) => {
            row.converged = false;
            row.add_note(e.to_string());
            None
        }
    };
    (PointResult { row, husimi: husimi_pair }, state)
}

fn solve_point(
    cfg: &RunConfig,
    params: &SystemParams,
    warm: Option<&WarmStart>,
    row: &mut ScanRow,
    husimi_out: &mut Option<HusimiPair>,
) -> Result<WarmStart> {
    let opts = cfg.solver_options();
    let (ops, outcome) = match cfg.cavity_basis {
        CavityBasis::Fock => {
            let ops = build_operators(params)?;
            // a displaced warm state would sit in the wrong basis
            let warm = warm.filter(|w| w.displacement == crate::linalg::ZERO).map(|w| &w.state);
            let outcome = solve_steady(&ops, &opts, warm)?;
            (ops, outcome)
        }
        CavityBasis::Displaced => solve_centered(params, &opts, warm)?,
    };
    let (cav_tail, mot_tail) = outcome.state.trailing_populations();
    if cav_tail > COARSE_TAIL_TOL || mot_tail > COARSE_TAIL_TOL {
        row.add_note(format!("cutoff tail {cav_tail:.1e} (cavity) {mot_tail:.1e} (motion)"));
    }
    let rho = outcome.state;
    row.converged = outcome.converged;
    row.residual = outcome.residual;
    row.gap_over_kappa = outcome.gap.unwrap_or(f64::NAN);
    if let Some(note) = &outcome.note {
        row.add_note(note);
    }

    let m = basic_means(&rho, &ops);
    row.n_photon = m.n_photon;
    row.delta_eff_mean = m.delta_eff;
    row.x2_mean = m.x2;
    row.x2_dispersion = m.x2_dispersion;
    row.kinetic = m.kinetic;

    let s = entropies(&rho)?;
    row.s_total = s.total;
    row.s_cav = s.cavity;
    row.s_ion = s.motion;
    row.mutual_info = s.cavity + s.motion - s.total;
    row.log_negativity = log_negativity(&rho)?;

    if cfg.non_gaussianity || cfg.husimi_dump {
        let cav = SingleMode::cavity(&rho, &ops);
        let ion = SingleMode::motion(&rho)?;
        let (n, floor) = (cfg.husimi_points, cfg.husimi_min_half_width);
        let (cre, cim) = axes_with_floor(&cav, n, floor)?;
        let (ire, iim) = axes_with_floor(&ion, n, floor)?;
        if cfg.non_gaussianity {
            match non_gaussianity(&cav, cre, cim) {
                Ok(ng) => row.nongauss_cav = ng.value,
                Err(e) => row.add_note(format!("cavity non-Gaussianity: {e}")),
            }
            match non_gaussianity(&ion, ire, iim) {
                Ok(ng) => row.nongauss_ion = ng.value,
                Err(e) => row.add_note(format!("ion non-Gaussianity: {e}")),
            }
            if cfg.projection {
                let projected = project_positive(&ion).and_then(|half| {
                    let (re, im) = axes_with_floor(&half, n, floor)?;
                    non_gaussianity(&half, re, im)
                });
                match projected {
                    Ok(ng) => row.nongauss_ion_projected = ng.value,
                    Err(e) => row.add_note(format!("projected ion non-Gaussianity: {e}")),
                }
            }
        }
        if cfg.husimi_dump {
            *husimi_out = Some(HusimiPair { cavity: husimi(&cav, cre, cim), ion: husimi(&ion, ire, iim) });
        }
    }
    Ok(WarmStart { state: rho, displacement: ops.params.displacement })
}

/// Re-centering stops once ⟨a⟩ moves by less than this.
const RECENTER_TOL: f64 = 0.25;
const MAX_RECENTER: usize = 6;

/// Steady state in a cavity basis displaced to the field amplitude. The
/// first guess is the warm state's basis, or else the semiclassical
/// amplitude at the global minimum; the basis is then re-centered on ⟨a⟩
/// until it settles.
fn solve_centered(
    params: &SystemParams,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<(SystemOperators, SteadyOutcome)> {
    let mut alpha = match warm {
        Some(w) => w.displacement,
        None => photon_amplitude(global_minimum(params), params),
    };
    let search = SolverOptions { compute_gap: false, ..opts.clone() };
    let mut warm = warm.map(|w| w.state.clone());
    for pass in 0..MAX_RECENTER {
        let ops = build_operators(&SystemParams { displacement: alpha, ..params.clone() })?;
        let out = solve_steady(&ops, &search, warm.as_ref())?;
        let mean = out.state.expect_complex(ops.a.mat.as_ref());
        // ⟨a⟩ of a degenerate steady state means nothing; keep this basis
        let settled = (mean - alpha).norm() < RECENTER_TOL || out.multistable;
        if settled || pass + 1 == MAX_RECENTER {
            if !settled {
                log::warn!("cavity basis still moving by {:.3} at eta = {}", (mean - alpha).norm(), params.eta_scaled);
            }
            if !opts.compute_gap || out.spectrum.is_some() {
                return Ok((ops, out));
            }
            // warm-started from the converged state, so only the gap costs anything
            let full = solve_steady(&ops, opts, Some(&out.state))?;
            return Ok((ops, full));
        }
        alpha = mean;
        warm = Some(out.state);
    }
    unreachable!("loop returns on its last pass")
}

/// Grid points per κ, in output order.
fn grid_points(cfg: &RunConfig) -> Vec<Vec<SystemParams>> {
    let etas = cfg.eta_grid();
    cfg.kappa_list.iter().map(|&k| etas.iter().map(|&e| cfg.params(k, e)).collect()).collect()
}

/// Runs `jobs` on up to `threads` workers; results come back in job order.
fn run_pool<T: Send, F: Fn(usize) -> T + Sync>(jobs: usize, threads: usize, f: F) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.max(1)) {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= jobs {
                    break;
                }
                let out = f(j);
                slots.lock().expect("result slots poisoned")[j] = Some(out);
            });
        }
    });
    slots.into_inner().expect("result slots poisoned").into_iter().map(|r| r.expect("job finished")).collect()
}

/// All scan points in grid order (κ outer, η inner). With warm starts each
/// κ chain is sequential and chains run in parallel; otherwise every point
/// is an independent job.
pub fn compute_scan(cfg: &RunConfig, threads: usize) -> Vec<PointResult> {
    let chains = grid_points(cfg);
    if cfg.warm_start {
        run_pool(chains.len(), threads, |k| {
            let mut warm: Option<WarmStart> = None;
            let mut out = Vec::with_capacity(chains[k].len());
            for p in &chains[k] {
                log::info!("kappa = {}, eta = {}", p.kappa, p.eta_scaled);
                let (res, state) = run_point(cfg, p, warm.as_ref());
                if state.is_some() {
                    warm = state;
                }
                out.push(res);
            }
            out
        })
        .into_iter()
        .flatten()
        .collect()
    } else {
        let flat: Vec<SystemParams> = chains.into_iter().flatten().collect();
        run_pool(flat.len(), threads, |j| {
            log::info!("kappa = {}, eta = {}", flat[j].kappa, flat[j].eta_scaled);
            run_point(cfg, &flat[j], None).0
        })
    }
}

fn csv_writer(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# schema_version={SCHEMA_VERSION}")?;
    for c in comments {
        writeln!(file, "# {c}")?;
    }
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Configuration(format!("CSV write failed: {other:?}")),
    }
}

pub fn write_scan_csv(path: &Path, results: &[PointResult]) -> Result<()> {
    let mut w = csv_writer(path, &[])?;
    w.write_record(SCAN_COLUMNS).map_err(csv_err)?;
    for r in results {
        w.write_record(r.row.record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Q on the grid: first row holds the Re α axis, first column the Im α axis.
pub fn write_husimi(path: &Path, q: &HusimiGrid, label: &str) -> Result<()> {
    let comments =
        [format!("husimi={label}"), format!("rows=im_alpha cols=re_alpha n_re={} n_im={}", q.re_axis.n, q.im_axis.n)];
    let mut w = csv_writer(path, &comments)?;
    let mut header = vec!["im_alpha\\re_alpha".to_string()];
    header.extend(q.re_axis.points().into_iter().map(num));
    w.write_record(&header).map_err(csv_err)?;
    let values: &Mat<f64> = &q.values;
    for (j, im) in q.im_axis.points().into_iter().enumerate() {
        let mut rec = vec![num(im)];
        rec.extend((0..q.re_axis.n).map(|i| num(values[(i, j)])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"))
}

/// Semiclassical branches on `semiclassical_count` points of the η range.
pub fn write_semiclassical(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let base = cfg.params(cfg.kappa_list[0], cfg.eta_min);
    let grid = cfg.semiclassical_grid();
    let branch = bifurcation_scan(&base, &grid);
    let (cc, c, xeq) = (cfg.coop, cfg.detuning, cfg.x_eq);
    let gamma_c0 = center_critical_gamma(cc, c);
    let comments = vec![
        format!("C={cc:?} c={c:?} x_eq={xeq:?}"),
        format!("gamma_c0={gamma_c0:?}"),
        format!("gamma_cs={}", fmt_opt(branch.gamma_cs)),
        format!("eta_scaled_c0={:?}", eta_scaled_for_gamma(gamma_c0, xeq)),
        format!("eta_scaled_cs={}", fmt_opt(branch.gamma_cs.map(|g| eta_scaled_for_gamma(g, xeq)))),
        format!("eta_scaled_global_switch={}", fmt_opt(branch.global_min_switch)),
        format!("transition={}", branch.transition.as_str()),
        format!("C_crit={}", fmt_opt(critical_cooperativity(c))),
        "positions xbar are in units of x_eq; NaN marks an absent branch".to_string(),
    ];
    let path = dir.join(SEMICLASSICAL_FILE);
    let mut w = csv_writer(&path, &comments)?;
    w.write_record(SEMICLASSICAL_COLUMNS).map_err(csv_err)?;
    for (k, &eta) in grid.iter().enumerate() {
        let p = SystemParams { eta_scaled: eta, ..base.clone() };
        let minima = &branch.minima[k];
        let side = side_equilibria(&p);
        let stable = side.iter().filter(|e| e.stable).map(|e| e.x_bar).next_back();
        let unstable = side.iter().filter(|e| !e.stable).map(|e| e.x_bar).next_back();
        let x = branch.global_min[k];
        let rec = [
            num(eta),
            num(p.gamma()),
            u8::from(minima.first() == Some(&0.0)).to_string(),
            num(stable.map_or(f64::NAN, |x| x / xeq)),
            num(unstable.map_or(f64::NAN, |x| x / xeq)),
            num(x / xeq),
            num(mean_photon_semiclassical(x, &p)),
            num(delta_eff(x, &p) / p.u0()),
        ];
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_resolved_config(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(RESOLVED_CONFIG_FILE);
    std::fs::write(&path, cfg.to_config_string())?;
    Ok(path)
}

#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub results: Vec<PointResult>,
    pub files: Vec<PathBuf>,
}

/// Full run: resolved config, semiclassical branches, scan table and
/// optional Husimi dumps under `dir`.
pub fn run_scan(cfg: &RunConfig, dir: &Path, threads: usize) -> Result<ScanOutput> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec![write_resolved_config(cfg, dir)?, write_semiclassical(cfg, dir)?];
    let results = compute_scan(cfg, threads);
    let scan = dir.join(SCAN_FILE);
    write_scan_csv(&scan, &results)?;
    files.push(scan);
    if cfg.husimi_dump {
        let n_eta = cfg.eta_count;
        for (idx, r) in results.iter().enumerate() {
            let Some(h) = &r.husimi else { continue };
            let (k, e) = (idx / n_eta, idx % n_eta);
            for (label, q) in [("cavity", &h.cavity), ("ion", &h.ion)] {
                let path = dir.join(format!("husimi_{label}_k{k:02}_e{e:03}.csv"));
                write_husimi(&path, q, label)?;
                files.push(path);
            }
        }
    }
    Ok(ScanOutput { results, files })
}
