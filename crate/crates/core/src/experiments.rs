//! File-driven experiment runners behind the `rd-arnoldi` binary.
//!
//! Configs are flat key=value text files; outputs are CSV files with a
//! leading comment line that echoes the fully resolved configuration, so a
//! run is reproducible from its own output. Identical config and seed give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::operators::SectorialOperator;
use crate::phifun::{
    rd_arnoldi_phi_with, BoundContext, DriverOptions, PhiApproximation, PhiRequest,
};
use crate::residual::{StopMode, StoppingRule};
use crate::sector::{sector_of_operator, SectorInfo};
use crate::tauselect::{calibrate_on_coarse, tau_window, TauPolicy};

const LARGE_M: usize = 1000;
const ORACLE_DIM_CAP: usize = 400;
/// Margin added to a computed semiangle before it feeds the bounds: the
/// theory wants F(L) strictly inside the sector.
pub const THETA_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    AdvDiff { m: usize, c: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSpec {
    Explicit(f64),
    Auto,
}

/// Everything a run needs, resolved from a config file plus CLI overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub operator: OperatorSpec,
    pub k_list: Vec<usize>,
    pub h: f64,
    pub tau: TauSpec,
    pub m_coarse: usize,
    pub calib_tol: f64,
    pub tol: f64,
    pub max_m: Option<usize>,
    pub mode: StopMode,
    pub check_every: usize,
    pub oracle: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub theta: Option<f64>,
    pub symmetric: bool,
    pub large: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            operator: OperatorSpec::AdvDiff { m: 200, c: 2.0 },
            k_list: vec![0, 1, 2],
            h: 0.1,
            tau: TauSpec::Auto,
            m_coarse: 50,
            calib_tol: 1e-12,
            tol: 1e-12,
            max_m: None,
            mode: StopMode::Residual,
            check_every: 1,
            oracle: true,
            out_dir: PathBuf::from("."),
            seed: 0,
            theta: None,
            symmetric: false,
            large: false,
        }
    }
}

impl ExperimentConfig {
    /// Parses a flat key=value config. Lines starting with '#' and blank
    /// lines are skipped; unknown keys are rejected with their line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut m: usize = 200;
        let mut c: f64 = 2.0;
        let mut file: Option<PathBuf> = None;
        let mut operator_kind = "advdiff".to_string();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Config {
                line: lineno,
                message: "expected key=value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| Error::Config {
                line: lineno,
                message,
            };
            match key {
                "operator" => match value {
                    "advdiff" | "file" => operator_kind = value.to_string(),
                    other => return Err(bad(format!("unknown operator '{other}'"))),
                },
                "M" => m = value.parse().map_err(|_| bad(format!("bad M '{value}'")))?,
                "c" => c = value.parse().map_err(|_| bad(format!("bad c '{value}'")))?,
                "matrix_file" => file = Some(PathBuf::from(value)),
                "k" => {
                    let mut ks = Vec::new();
                    for part in value.split(',') {
                        let k: usize = part
                            .trim()
                            .parse()
                            .map_err(|_| bad(format!("bad k entry '{part}'")))?;
                        ks.push(k);
                    }
                    if ks.is_empty() {
                        return Err(bad("k list is empty".into()));
                    }
                    cfg.k_list = ks;
                }
                "h" => cfg.h = value.parse().map_err(|_| bad(format!("bad h '{value}'")))?,
                "tau" => {
                    cfg.tau = if value == "auto" {
                        TauSpec::Auto
                    } else {
                        TauSpec::Explicit(
                            value
                                .parse()
                                .map_err(|_| bad(format!("bad tau '{value}'")))?,
                        )
                    }
                }
                "m_coarse" => {
                    cfg.m_coarse = value
                        .parse()
                        .map_err(|_| bad(format!("bad m_coarse '{value}'")))?
                }
                "calib_tol" => {
                    cfg.calib_tol = value
                        .parse()
                        .map_err(|_| bad(format!("bad calib_tol '{value}'")))?
                }
                "tol" => {
                    cfg.tol = value
                        .parse()
                        .map_err(|_| bad(format!("bad tol '{value}'")))?
                }
                "max_m" => {
                    cfg.max_m = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad max_m '{value}'")))?,
                    )
                }
                "mode" => cfg.mode = value.parse().map_err(|e: String| bad(e))?,
                "check_every" => {
                    cfg.check_every = value
                        .parse()
                        .map_err(|_| bad(format!("bad check_every '{value}'")))?
                }
                "oracle" => {
                    cfg.oracle = match value {
                        "on" | "true" => true,
                        "off" | "false" => false,
                        other => return Err(bad(format!("oracle must be on/off, got '{other}'"))),
                    }
                }
                "out" => cfg.out_dir = PathBuf::from(value),
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| bad(format!("bad seed '{value}'")))?
                }
                "theta" => {
                    cfg.theta = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad theta '{value}'")))?,
                    )
                }
                "symmetric" => {
                    cfg.symmetric = match value {
                        "on" | "true" => true,
                        "off" | "false" => false,
                        other => {
                            return Err(bad(format!("symmetric must be on/off, got '{other}'")))
                        }
                    }
                }
                other => {
                    return Err(bad(format!("unknown key '{other}'")));
                }
            }
        }
        cfg.operator = match operator_kind.as_str() {
            "advdiff" => OperatorSpec::AdvDiff { m, c },
            "file" => OperatorSpec::File {
                path: file.ok_or(Error::Config {
                    line: 0,
                    message: "operator=file requires matrix_file=PATH".into(),
                })?,
            },
            _ => unreachable!(),
        };
        Ok(cfg)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn build_operator(&self) -> Result<SectorialOperator> {
        match &self.operator {
            OperatorSpec::AdvDiff { m, c } => {
                let m = if self.large { LARGE_M } else { *m };
                Ok(SectorialOperator::advection_diffusion(m, *c))
            }
            OperatorSpec::File { path } => SectorialOperator::from_coordinate_file(path),
        }
    }

    fn coarse_operator(&self) -> Result<SectorialOperator> {
        match &self.operator {
            OperatorSpec::AdvDiff { c, .. } => {
                Ok(SectorialOperator::advection_diffusion(self.m_coarse, *c))
            }
            // No coarser version of a file operator is available.
            OperatorSpec::File { path } => SectorialOperator::from_coordinate_file(path),
        }
    }

    fn oracle_enabled(&self, dim: usize) -> bool {
        self.oracle && !self.large && dim <= ORACLE_DIM_CAP
    }

    /// Sector semiangle fed to bounds and tau selection: an explicit
    /// override, or computed on the coarse operator plus a small margin.
    pub fn resolve_theta(&self) -> Result<f64> {
        if let Some(t) = self.theta {
            return Ok(t);
        }
        if self.symmetric {
            return Ok(0.0);
        }
        let coarse = self.coarse_operator()?;
        Ok(sector_of_operator(&coarse, 256)?.theta + THETA_MARGIN)
    }

    fn operator_tag(&self) -> String {
        match &self.operator {
            OperatorSpec::AdvDiff { c, .. } => format!("c{c}"),
            OperatorSpec::File { path } => format!(
                "file_{}",
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "matrix".into())
            ),
        }
    }

    /// One-line echo of the resolved configuration for the CSV comment.
    pub fn echo(&self, theta: f64, tau: Option<f64>, k: Option<usize>) -> String {
        let mut s = String::new();
        match &self.operator {
            OperatorSpec::AdvDiff { m, c } => {
                let m = if self.large { LARGE_M } else { *m };
                let _ = write!(s, "operator=advdiff M={m} c={c}");
            }
            OperatorSpec::File { path } => {
                let _ = write!(s, "operator=file matrix_file={}", path.display());
            }
        }
        if let Some(k) = k {
            let _ = write!(s, " k={k}");
        } else {
            let ks: Vec<String> = self.k_list.iter().map(|k| k.to_string()).collect();
            let _ = write!(s, " k={}", ks.join(","));
        }
        let _ = write!(s, " h={}", self.h);
        match tau {
            Some(t) => {
                let _ = write!(s, " tau={t:.6}");
            }
            None => match self.tau {
                TauSpec::Explicit(t) => {
                    let _ = write!(s, " tau={t}");
                }
                TauSpec::Auto => {
                    let _ = write!(
                        s,
                        " tau=auto m_coarse={} calib_tol={}",
                        self.m_coarse, self.calib_tol
                    );
                }
            },
        }
        let mode = match self.mode {
            StopMode::Residual => "residual",
            StopMode::BoundFe1 => "bound_fe1",
            StopMode::BoundFe2 => "bound_fe2",
            StopMode::Oracle => "oracle",
        };
        let _ = write!(
            s,
            " tol={} mode={mode} check_every={} oracle={} theta={theta:.6} symmetric={} seed={}",
            self.tol,
            self.check_every,
            if self.oracle { "on" } else { "off" },
            self.symmetric,
            self.seed
        );
        s
    }
}

fn fmt(x: f64) -> String {
    // 15 significant digits in scientific notation.
    format!("{x:.14e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn write_csv(path: &Path, echo: &str, header: &str, rows: &[String]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut s = String::with_capacity(rows.len() * 96 + 256);
    let _ = writeln!(s, "# {echo}");
    let _ = writeln!(s, "{header}");
    for row in rows {
        let _ = writeln!(s, "{row}");
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn report_rows(report: &BoundReport) -> Vec<String> {
    report
        .records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.m,
                fmt_opt(r.true_error),
                fmt_opt(r.bound_fe1),
                fmt_opt(r.bound_fe2),
                fmt_opt(r.residual),
                fmt(r.subdiag_product)
            )
        })
        .collect()
}

/// Resolves tau for one phi index: explicit value or coarse calibration.
fn resolve_tau(cfg: &ExperimentConfig, k: usize, theta: f64) -> Result<(f64, Option<TauPolicy>)> {
    match cfg.tau {
        TauSpec::Explicit(t) => Ok((t, None)),
        TauSpec::Auto => {
            let coarse = cfg.coarse_operator()?;
            let dim = coarse.dim();
            let v = vec![1.0 / (dim as f64).sqrt(); dim];
            let policy = calibrate_on_coarse(&coarse, &v, k, cfg.h, theta, cfg.calib_tol)?;
            Ok((policy.tau_opt, Some(policy)))
        }
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    op: &SectorialOperator,
    k: usize,
    tau: f64,
    theta: f64,
    mode: StopMode,
) -> Result<PhiApproximation> {
    let dim = op.dim();
    let v = vec![1.0 / (dim as f64).sqrt(); dim];
    let req = PhiRequest::new(k, cfg.h, v.clone(), tau)?;
    let reference = if cfg.oracle_enabled(dim) || mode == StopMode::Oracle {
        Some(crate::phifun::phi_oracle_dense(
            k,
            cfg.h,
            &op.to_dense(),
            &v,
        )?)
    } else {
        None
    };
    let ctx = if cfg.symmetric {
        BoundContext::symmetric()
    } else {
        BoundContext::new(theta)
    };
    let bound_context = if theta < std::f64::consts::PI / 3.0 {
        Some(ctx)
    } else {
        None
    };
    let stop = StoppingRule::new(cfg.tol, cfg.max_m.unwrap_or(dim).min(dim), mode)
        .with_check_every(cfg.check_every);
    let opts = DriverOptions {
        stop: Some(stop),
        bound_context,
        reference: reference.as_deref(),
    };
    rd_arnoldi_phi_with(&req, op, &opts)
}

/// Convergence experiment: per-iteration error, bounds and residual, one CSV
/// per phi index. Returns the written paths.
pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let op = cfg.build_operator()?;
    let theta = cfg.resolve_theta()?;
    let mut paths = Vec::new();
    for &k in &cfg.k_list {
        let (tau, _) = resolve_tau(cfg, k, theta)?;
        let out = run_one(cfg, &op, k, tau, theta, cfg.mode);
        let (report, failed) = match &out {
            Ok(a) => (&a.report, None),
            Err(Error::MaxIterations { best, .. }) => (&best.report, Some(())),
            Err(_) => {
                out?;
                unreachable!()
            }
        };
        let path = cfg
            .out_dir
            .join(format!("converge_{}_k{k}.csv", cfg.operator_tag()));
        write_csv(
            &path,
            &cfg.echo(theta, Some(tau), Some(k)),
            "m,true_error,bound_fe1,bound_fe2,residual,subdiag_product",
            &report_rows(report),
        )?;
        paths.push(path);
        if failed.is_some() {
            return out.map(|_| paths);
        }
    }
    Ok(paths)
}

/// Residual-vs-error experiment (needs the oracle): CSV of m, true_error,
/// residual per phi index.
pub fn run_residual_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let op = cfg.build_operator()?;
    if !cfg.oracle_enabled(op.dim()) {
        return Err(Error::InvalidRequest(format!(
            "residual experiment needs the oracle (oracle=on, M <= {ORACLE_DIM_CAP}, not --large)"
        )));
    }
    let theta = cfg.resolve_theta()?;
    let mut paths = Vec::new();
    for &k in &cfg.k_list {
        let (tau, _) = resolve_tau(cfg, k, theta)?;
        let out = run_one(cfg, &op, k, tau, theta, cfg.mode);
        let report = match &out {
            Ok(a) => &a.report,
            Err(Error::MaxIterations { best, .. }) => &best.report,
            Err(_) => {
                out?;
                unreachable!()
            }
        };
        let rows: Vec<String> = report
            .records
            .iter()
            .map(|r| format!("{},{},{}", r.m, fmt_opt(r.true_error), fmt_opt(r.residual)))
            .collect();
        let path = cfg
            .out_dir
            .join(format!("residual_{}_k{k}.csv", cfg.operator_tag()));
        write_csv(
            &path,
            &cfg.echo(theta, Some(tau), Some(k)),
            "m,true_error,residual",
            &rows,
        )?;
        paths.push(path);
    }
    Ok(paths)
}

/// Robustness-window experiment: the admissible tau interval around the
/// optimum for one and two extra iterations, over m = 2..40 in the
/// self-adjoint exponential setting.
pub fn run_window_experiment(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for m in 2..=40usize {
        let w1 = tau_window(m, 0, 0.0, 1)?;
        let w2 = tau_window(m, 0, 0.0, 2)?;
        rows.push(format!(
            "{},{},{},{},{}",
            m,
            fmt(w1.lo),
            fmt(w1.hi),
            fmt(w2.lo),
            fmt(w2.hi)
        ));
    }
    let path = cfg.out_dir.join("window.csv");
    write_csv(
        &path,
        "window experiment theta=0 k=0 m=2..40",
        "m,tau1_extra1,tau2_extra1,tau1_extra2,tau2_extra2",
        &rows,
    )?;
    Ok(path)
}

/// Coarse-grid calibration for the first configured phi index.
pub fn run_calibrate(cfg: &ExperimentConfig) -> Result<(TauPolicy, f64)> {
    let theta = cfg.resolve_theta()?;
    let k = cfg.k_list[0];
    let coarse = cfg.coarse_operator()?;
    let dim = coarse.dim();
    let v = vec![1.0 / (dim as f64).sqrt(); dim];
    let policy = calibrate_on_coarse(&coarse, &v, k, cfg.h, theta, cfg.calib_tol)?;
    Ok((policy, theta))
}

/// Sector geometry of the configured operator.
pub fn run_sector(cfg: &ExperimentConfig) -> Result<SectorInfo> {
    let op = cfg.build_operator()?;
    sector_of_operator(&op, 256)
}

/// One-shot phi computation; writes the iterate as a CSV column.
pub fn run_phi(cfg: &ExperimentConfig) -> Result<(PathBuf, PhiApproximation)> {
    let op = cfg.build_operator()?;
    let theta = cfg.resolve_theta()?;
    let k = cfg.k_list[0];
    let (tau, _) = resolve_tau(cfg, k, theta)?;
    let approx = run_one(cfg, &op, k, tau, theta, cfg.mode)?;
    let rows: Vec<String> = approx
        .y
        .iter()
        .enumerate()
        .map(|(i, y)| format!("{},{}", i + 1, fmt(*y)))
        .collect();
    let path = cfg.out_dir.join(format!("phi_k{k}.csv"));
    write_csv(&path, &cfg.echo(theta, Some(tau), Some(k)), "i,y", &rows)?;
    Ok((path, approx))
}
