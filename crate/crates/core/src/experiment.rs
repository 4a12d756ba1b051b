//! Experiment configuration, named presets, sweeps and result files.
//!
//! Configuration files are flat TOML: every key is optional and overrides the
//! chosen preset (or the defaults). Powers are in dBm, gains in dB, angles in
//! degrees and distances in meters.
//!
//! ```toml
//! preset = "fig3"
//! pa_dbm = 10.0
//! sweep_symbols = [2, 4, 8, 16]
//! schemes = ["joint_optimal", "semi_passive"]
//! trials = 20000
//! seed = 7
//! output = "fig3_low_budget.csv"
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{scheme_solution, SchemeId};
use crate::beamforming::DEFAULT_GRID_POINTS;
use crate::error::{Error, Result};
use crate::montecarlo::{derive_seed, estimate_rates, MIN_TRIALS};
use crate::scene::{db_to_amplitude, db_to_power, dbm_to_watts, SceneParams};

/// Parameter varied across rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sweep {
    None,
    /// Values of the block length `T`.
    Symbols(Vec<usize>),
    /// Values of the number of reflecting elements `N`.
    Elements(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mt: usize,
    pub mr: usize,
    pub n: usize,
    pub t: usize,
    pub theta0_deg: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub d1_m: f64,
    pub d2_m: f64,
    pub k0_db: f64,
    pub d_ref_m: f64,
    pub ple: f64,
    pub rcs_re: f64,
    pub rcs_im: f64,
    pub p_dbm: f64,
    pub pa_dbm: f64,
    pub sigma2_dbm: f64,
    pub sigmaz2_dbm: f64,
    pub amax_db: f64,
    pub pfa: f64,
    pub sweep: Sweep,
    pub schemes: Vec<SchemeId>,
    /// Monte Carlo trials per row; zero disables simulation.
    pub trials: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mt: 8,
            mr: 8,
            n: 16,
            t: 8,
            theta0_deg: 45.0,
            theta1_deg: 45.0,
            theta2_deg: 45.0,
            d1_m: 120.0,
            d2_m: 10.0,
            k0_db: -30.0,
            d_ref_m: 1.0,
            ple: 2.2,
            rcs_re: 1.0,
            rcs_im: 0.0,
            p_dbm: 30.0,
            pa_dbm: 15.0,
            sigma2_dbm: -70.0,
            sigmaz2_dbm: -30.0,
            amax_db: 20.0,
            pfa: 1e-3,
            sweep: Sweep::None,
            schemes: vec![SchemeId::JointOptimal],
            trials: 0,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            output: PathBuf::from("results.csv"),
        }
    }
}

pub const PRESET_NAMES: [&str; 3] = ["fig2", "fig3", "fig4"];

/// Named configurations reproducing the data behind each figure.
pub fn presets() -> Vec<(&'static str, ExperimentConfig)> {
    let base = ExperimentConfig::default();
    vec![
        (
            "fig2",
            ExperimentConfig {
                n: 16,
                amax_db: 20.0,
                sweep: Sweep::Symbols((1..=20).collect()),
                schemes: vec![SchemeId::JointOptimal, SchemeId::SnrDetector],
                output: PathBuf::from("fig2.csv"),
                ..base.clone()
            },
        ),
        (
            "fig3",
            ExperimentConfig {
                n: 16,
                sweep: Sweep::Symbols((1..=20).collect()),
                schemes: SchemeId::ALL.to_vec(),
                output: PathBuf::from("fig3.csv"),
                ..base.clone()
            },
        ),
        (
            "fig4",
            ExperimentConfig {
                t: 8,
                sweep: Sweep::Elements(vec![4, 8, 16, 24, 32, 40, 48, 56, 64]),
                schemes: SchemeId::ALL.to_vec(),
                output: PathBuf::from("fig4.csv"),
                ..base
            },
        ),
    ]
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    presets()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset {name:?} (expected one of {})",
                PRESET_NAMES.join(", ")
            ))
        })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    mt: Option<usize>,
    mr: Option<usize>,
    n: Option<usize>,
    t: Option<usize>,
    theta0_deg: Option<f64>,
    theta1_deg: Option<f64>,
    theta2_deg: Option<f64>,
    d1_m: Option<f64>,
    d2_m: Option<f64>,
    k0_db: Option<f64>,
    d_ref_m: Option<f64>,
    ple: Option<f64>,
    rcs_re: Option<f64>,
    rcs_im: Option<f64>,
    p_dbm: Option<f64>,
    pa_dbm: Option<f64>,
    sigma2_dbm: Option<f64>,
    sigmaz2_dbm: Option<f64>,
    amax_db: Option<f64>,
    pfa: Option<f64>,
    sweep_symbols: Option<Vec<usize>>,
    sweep_elements: Option<Vec<usize>>,
    schemes: Option<Vec<SchemeId>>,
    trials: Option<usize>,
    seed: Option<u64>,
    grid_points: Option<usize>,
    output: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $file:ident, $($field:ident),*) => {
        $(if let Some(v) = $file.$field { $cfg.$field = v; })*
    };
}

impl ExperimentConfig {
    /// Parses configuration text. `preset` takes precedence over a `preset`
    /// key in the text. The result is validated.
    pub fn from_toml(text: &str, preset_override: Option<&str>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = match preset_override.or(file.preset.as_deref()) {
            Some(name) => preset(name)?,
            None => ExperimentConfig::default(),
        };
        if file.sweep_symbols.is_some() && file.sweep_elements.is_some() {
            return Err(Error::Config(
                "`sweep_symbols` and `sweep_elements` are mutually exclusive".into(),
            ));
        }
        if let Some(v) = file.sweep_symbols {
            cfg.sweep = Sweep::Symbols(v);
        }
        if let Some(v) = file.sweep_elements {
            cfg.sweep = Sweep::Elements(v);
        }
        overlay!(
            cfg,
            file,
            mt,
            mr,
            n,
            t,
            theta0_deg,
            theta1_deg,
            theta2_deg,
            d1_m,
            d2_m,
            k0_db,
            d_ref_m,
            ple,
            rcs_re,
            rcs_im,
            p_dbm,
            pa_dbm,
            sigma2_dbm,
            sigmaz2_dbm,
            amax_db,
            pfa,
            schemes,
            trials,
            seed,
            grid_points,
            output
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, preset_override: Option<&str>) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, preset_override)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, why: String| Err(Error::Config(format!("field `{field}`: {why}")));
        for (field, v) in [
            ("theta0_deg", self.theta0_deg),
            ("theta1_deg", self.theta1_deg),
            ("theta2_deg", self.theta2_deg),
        ] {
            if !(v.is_finite() && v.abs() < 90.0) {
                return fail(field, format!("must lie in (-90, 90), got {v}"));
            }
        }
        for (field, v) in [
            ("k0_db", self.k0_db),
            ("p_dbm", self.p_dbm),
            ("pa_dbm", self.pa_dbm),
            ("sigma2_dbm", self.sigma2_dbm),
            ("sigmaz2_dbm", self.sigmaz2_dbm),
            ("amax_db", self.amax_db),
        ] {
            if !v.is_finite() {
                return fail(field, format!("must be finite, got {v}"));
            }
        }
        let values = match &self.sweep {
            Sweep::None => None,
            Sweep::Symbols(v) => Some(("sweep_symbols", v)),
            Sweep::Elements(v) => Some(("sweep_elements", v)),
        };
        if let Some((field, v)) = values {
            if v.is_empty() {
                return fail(field, "must not be empty".into());
            }
            if v[0] == 0 {
                return fail(field, "values must be at least 1".into());
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return fail(field, "values must be strictly increasing".into());
            }
        }
        if self.schemes.is_empty() {
            return fail("schemes", "must list at least one scheme".into());
        }
        if let Some(dup) = self
            .schemes
            .iter()
            .enumerate()
            .find(|(i, s)| self.schemes[..*i].contains(s))
        {
            return fail("schemes", format!("{} listed twice", dup.1));
        }
        if self.trials != 0 && self.trials < MIN_TRIALS {
            return fail(
                "trials",
                format!("must be 0 or at least {MIN_TRIALS}, got {}", self.trials),
            );
        }
        if self.grid_points < 2 {
            return fail(
                "grid_points",
                format!("must be at least 2, got {}", self.grid_points),
            );
        }
        for scene in self.points().into_iter().map(|(t, n)| self.scene(t, n)) {
            if let Err(e) = scene.validate() {
                let field = match &e {
                    Error::InvalidParameter { name, .. } => *name,
                    _ => "scene",
                };
                return fail(field, strip_prefix(&e));
            }
        }
        Ok(())
    }

    /// `(T, N)` for every sweep point.
    pub fn points(&self) -> Vec<(usize, usize)> {
        match &self.sweep {
            Sweep::None => vec![(self.t, self.n)],
            Sweep::Symbols(v) => v.iter().map(|&t| (t, self.n)).collect(),
            Sweep::Elements(v) => v.iter().map(|&n| (self.t, n)).collect(),
        }
    }

    /// Scene in SI units for block length `t` and `n` elements.
    pub fn scene(&self, t: usize, n: usize) -> SceneParams {
        SceneParams {
            mt: self.mt,
            mr: self.mr,
            n,
            t,
            theta0: self.theta0_deg.to_radians(),
            theta1: self.theta1_deg.to_radians(),
            theta2: self.theta2_deg.to_radians(),
            d1: self.d1_m,
            d2: self.d2_m,
            k0: db_to_power(self.k0_db),
            d_ref: self.d_ref_m,
            ple: self.ple,
            rcs: Complex64::new(self.rcs_re, self.rcs_im),
            p: dbm_to_watts(self.p_dbm),
            pa: dbm_to_watts(self.pa_dbm),
            sigma2: dbm_to_watts(self.sigma2_dbm),
            sigmaz2: dbm_to_watts(self.sigmaz2_dbm),
            amax: db_to_amplitude(self.amax_db),
            pfa: self.pfa,
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        Error::InvalidParameter { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

/// One output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scheme: SchemeId,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub a_max_db: f64,
    pub pfa: f64,
    pub a0_opt: f64,
    pub px_opt_w: f64,
    pub lambda1: Option<f64>,
    pub g: f64,
    pub pd_exact: f64,
    pub pd_approx: Option<f64>,
    pub pd_mc: Option<f64>,
    pub pd_mc_stderr: Option<f64>,
}

pub const CSV_HEADER: [&str; 13] = [
    "scheme",
    "T",
    "N",
    "a_max_db",
    "pfa",
    "a0_opt",
    "px_opt_w",
    "lambda1",
    "g",
    "pd_exact",
    "pd_approx",
    "pd_mc",
    "pd_mc_stderr",
];

/// Evaluates every `(sweep point, scheme)` pair. Rows are ordered by sweep
/// point, then by the configured scheme order.
pub fn run(config: &ExperimentConfig) -> Result<Vec<Row>> {
    config.validate()?;
    let points = config.points();
    let jobs: Vec<(usize, usize, SchemeId)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, _)| config.schemes.iter().map(move |&s| (p, s)))
        .enumerate()
        .map(|(row, (p, s))| (row, p, s))
        .collect();
    jobs.par_iter()
        .map(|&(row, p, scheme)| {
            let (t, n) = points[p];
            let scene = config.scene(t, n);
            let phase_seed = derive_seed(config.seed, 2 * p as u64);
            let result = scheme_solution(scheme, &scene, config.grid_points, phase_seed)?;
            let (pd_mc, pd_mc_stderr) = if config.trials > 0 {
                let mc_seed = derive_seed(config.seed, 2 * row as u64 + 1);
                let (_, pd) = estimate_rates(
                    &result.design,
                    result.detector,
                    scene.pfa,
                    config.trials,
                    mc_seed,
                )?;
                (Some(pd.value), Some(pd.stderr))
            } else {
                (None, None)
            };
            Ok(Row {
                scheme,
                t,
                n,
                a_max_db: config.amax_db,
                pfa: scene.pfa,
                a0_opt: result.a0,
                px_opt_w: result.px,
                lambda1: result.lambda1,
                g: result.g,
                pd_exact: result.pd,
                pd_approx: result.pd_approx,
                pd_mc,
                pd_mc_stderr,
            })
        })
        .collect()
}

/// Twelve significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[Row], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.to_string(),
            r.t.to_string(),
            r.n.to_string(),
            format_number(r.a_max_db),
            format_number(r.pfa),
            format_number(r.a0_opt),
            format_number(r.px_opt_w),
            cell(r.lambda1),
            format_number(r.g),
            format_number(r.pd_exact),
            cell(r.pd_approx),
            cell(r.pd_mc),
            cell(r.pd_mc_stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Writes rows as JSON when `path` ends in `.json`, as CSV otherwise.
pub fn write_output(rows: &[Row], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        serde_json::to_writer_pretty(&mut out, rows).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    } else {
        write_csv(rows, &mut out)?;
    }
    out.flush()?;
    Ok(())
}
