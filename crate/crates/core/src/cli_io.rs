//! Run configuration and file formats.
//!
//! Configs are TOML with strict key checking. Numbers in every CSV are
//! written with 17 significant digits so files round-trip exactly.

use crate::coupling::{Forcing, PhysicsParams, Scheme};
use crate::error::{Error, Result};
use crate::grid_space::{FieldPoint, SurfaceGrid};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Named initial profile for v₀ or v₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// amplitude · exp(−((x − center)/width)²)
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// amplitude · [exp(−((x − c)/w)²) + exp(−((x + c)/w)²)]
    EvenGaussian { amplitude: f64, center: f64, width: f64 },
    /// (even + odd·sgn x) · exp(−a(x² − 1)²); flat at the body corners.
    Bump {
        #[serde(default = "one")]
        even: f64,
        #[serde(default)]
        odd: f64,
        #[serde(default = "one")]
        sharpness: f64,
    },
    /// One value per surface node, ordered as the grid (−L … −1, 1 … L).
    Csv { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Zero
    }
}

impl Profile {
    pub fn sample(&self, grid: &SurfaceGrid) -> Result<Vec<f64>> {
        let f = |g: &dyn Fn(f64) -> f64| grid.nodes().iter().map(|&x| g(x)).collect();
        Ok(match self {
            Profile::Zero => vec![0.0; grid.len()],
            Profile::Gaussian { amplitude, center, width } => {
                f(&|x| amplitude * (-((x - center) / width).powi(2)).exp())
            }
            Profile::EvenGaussian { amplitude, center, width } => f(&|x| {
                amplitude * ((-((x - center) / width).powi(2)).exp() + (-((x + center) / width).powi(2)).exp())
            }),
            Profile::Bump { even, odd, sharpness } => {
                f(&|x| (even + odd * x.signum()) * (-sharpness * (x * x - 1.0).powi(2)).exp())
            }
            Profile::Csv { path } => {
                let v = read_vector_csv(path)?;
                if v.len() != grid.len() {
                    return Err(Error::Config {
                        key: "initial".into(),
                        msg: format!("{} has {} values, grid has {} nodes", path.display(), v.len(), grid.len()),
                    });
                }
                v
            }
        })
    }

    fn check(&self, key: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config { key: key.into(), msg: msg.into() });
        match self {
            Profile::Gaussian { width, .. } | Profile::EvenGaussian { width, .. } if !(*width > 0.0) => {
                bad("width must be positive")
            }
            Profile::Bump { sharpness, .. } if !(*sharpness > 0.0) => bad("sharpness must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub h0: f64,
    #[serde(default)]
    pub h1: f64,
    #[serde(default)]
    pub v0: Profile,
    #[serde(default)]
    pub v1: Profile,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteName {
    #[default]
    Variational,
    Reflect,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Extra matrix dump (`.csv` for text, anything else for binary).
    #[serde(default)]
    pub dtn_matrix: Option<PathBuf>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir(), dtn_matrix: None }
    }
}

/// A full run description. Top-level keys are the numerical parameters;
/// `[initial]`, `[forcing]` and `[output]` are tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
    #[serde(rename = "M", default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub line_nodes: Option<usize>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub route: RouteName,
    #[serde(default = "default_true")]
    pub coupled: bool,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub forcing: Forcing,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_g() -> f64 {
    PhysicsParams::default().g
}
fn default_rho() -> f64 {
    PhysicsParams::default().rho
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl SimConfig {
    /// Config with default physics and zero data.
    pub fn new(l: f64, n: usize, dt: f64, t_end: f64) -> Self {
        Self {
            l,
            n,
            m: None,
            line_nodes: None,
            dt,
            t_end,
            stride: 1,
            snapshot_times: vec![],
            scheme: Scheme::default(),
            route: RouteName::default(),
            coupled: true,
            g: default_g(),
            rho: default_rho(),
            seed: 0,
            initial: InitialData::default(),
            forcing: Forcing::Zero,
            output: OutputSpec::default(),
        }
    }

    pub fn physics(&self) -> PhysicsParams {
        PhysicsParams { g: self.g, rho: self.rho }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config { key: key.into(), msg });
        if !(self.l > 1.0) {
            return bad("L", format!("L must exceed 1 (got {})", self.l));
        }
        if self.n < 8 {
            return bad("n", format!("n must be at least 8 (got {})", self.n));
        }
        if !(self.dt > 0.0) {
            return bad("dt", format!("dt must be positive (got {})", self.dt));
        }
        if !(self.t_end > 0.0) {
            return bad("T", format!("T must be positive (got {})", self.t_end));
        }
        if self.stride == 0 {
            return bad("stride", "stride must be at least 1".into());
        }
        if let Some(m) = self.m {
            if !(m >= self.l) {
                return bad("M", format!("M must be at least L (got M = {m}, L = {})", self.l));
            }
        }
        if let Some(k) = self.line_nodes {
            if !k.is_power_of_two() || k < 16 {
                return bad("line_nodes", format!("line_nodes must be a power of two ≥ 16 (got {k})"));
            }
        }
        if !(self.g > 0.0) {
            return bad("g", format!("g must be positive (got {})", self.g));
        }
        if !(self.rho > 0.0) {
            return bad("rho", format!("rho must be positive (got {})", self.rho));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return bad("snapshot_times", format!("snapshot time {t} outside [0, T]"));
        }
        self.forcing
            .validate(self.t_end)
            .map_err(|e| Error::Config { key: "forcing".into(), msg: strip(e) })?;
        self.initial.v0.check("initial.v0")?;
        self.initial.v1.check("initial.v1")?;
        if !(self.initial.h0.is_finite() && self.initial.h1.is_finite()) {
            return bad("initial", "h0 and h1 must be finite".into());
        }
        let grid = SurfaceGrid::new(self.l, self.n)?;
        self.initial.v0.sample(&grid)?;
        self.initial.v1.sample(&grid)?;
        check_writable(&self.output.dir)?;
        Ok(())
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for prof in [&mut self.initial.v0, &mut self.initial.v1] {
            if let Profile::Csv { path } = prof {
                fix(path);
            }
        }
        fix(&mut self.output.dir);
        if let Some(p) = &mut self.output.dtn_matrix {
            fix(p);
        }
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidParameter(m) => m,
        e => e.to_string(),
    }
}

fn check_writable(dir: &Path) -> Result<()> {
    let mut p = dir;
    loop {
        if p.exists() {
            let md = std::fs::metadata(p)?;
            if !md.is_dir() || md.permissions().readonly() {
                return Err(Error::Config {
                    key: "output.dir".into(),
                    msg: format!("{} is not a writable directory", p.display()),
                });
            }
            return Ok(());
        }
        match p.parent() {
            Some(q) if !q.as_os_str().is_empty() => p = q,
            _ => return Ok(()),
        }
    }
}

/// Dotted key of the assignment containing byte `pos`, e.g. `initial.v0`.
fn key_path(text: &str, pos: usize) -> String {
    let start = text[..pos].rfind('\n').map_or(0, |k| k + 1);
    let line = text[start..].lines().next().unwrap_or("");
    let table = text[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    let key = match line.split_once('=') {
        Some((k, _)) => k.trim(),
        None => line.trim().trim_matches(|c| c == '[' || c == ']'),
    };
    match table {
        Some(t) if !line.trim_start().starts_with('[') => format!("{t}.{key}"),
        _ => key.to_string(),
    }
}

/// Parses and validates TOML text. Relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<SimConfig> {
    let mut cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config {
        key: e.span().map(|s| key_path(text, s.start)).unwrap_or_default(),
        msg: e.message().to_string(),
    })?;
    cfg.rebase(base);
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path, line: u64, msg: impl ToString) -> Error {
    Error::Config { key: format!("{}:{line}", path.display()), msg: msg.to_string() }
}

/// Numeric rows of a CSV file; a non-numeric first row is a header.
fn data_rows(path: &Path) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, 0, e))?;
    let mut out = vec![];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, 0, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let cells: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match cells {
            Ok(c) => out.push((line, c)),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(csv_err(path, line, e)),
        }
    }
    Ok(out)
}

/// Reads a one-column CSV (optional header); a `x,v` two-column file uses
/// the last column.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    data_rows(path)?
        .into_iter()
        .map(|(i, c)| match c.len() {
            1 | 2 => Ok(*c.last().unwrap()),
            k => Err(csv_err(path, i, format!("expected 1 or 2 columns, got {k}"))),
        })
        .collect()
}

/// Reads `x,y` field points (optional header).
pub fn read_points_csv(path: &Path) -> Result<Vec<FieldPoint>> {
    data_rows(path)?
        .into_iter()
        .map(|(i, c)| match c.as_slice() {
            [x, y] => Ok(FieldPoint::new(*x, *y)),
            _ => Err(csv_err(path, i, "expected 2 columns x,y")),
        })
        .collect()
}

/// Writes a header line and rows of numbers.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, 0, e))?;
    w.write_record(header).map_err(|e| csv_err(path, 1, e))?;
    for r in rows {
        w.write_record(r.iter().map(|x| fmt_f64(*x))).map_err(|e| csv_err(path, 0, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "L = 20.0\nn = 64\ndt = 0.01\nT = 1.0\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config_str(MINIMAL, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.g, 9.81);
        assert_eq!(cfg.route, RouteName::Variational);
        assert_eq!(cfg.steps(), 100);
        assert_eq!(cfg.output.dir, Path::new("/tmp/out"));
    }

    #[test]
    fn errors_name_the_offending_key() {
        let err = |text: &str| parse_config_str(text, Path::new(".")).unwrap_err().to_string();
        assert!(err("L = 0.5\nn = 64\ndt = 0.01\nT = 1.0\n").contains("`L`"));
        assert!(err(&format!("{MINIMAL}bogus = 1\n")).contains("bogus"));
        assert!(err("L = 20.0\nn = \"x\"\ndt = 0.01\nT = 1.0\n").contains("`n`"));
        let nested = format!("{MINIMAL}[initial]\nv0 = {{ kind = \"gaussian\", amplitude = 1.0, center = 2.0, widht = 1.0 }}\n");
        assert!(err(&nested).contains("initial.v0"), "{}", err(&nested));
        let table = format!("{MINIMAL}[forcing]\nkind = \"table\"\nt = [0.0, 0.5]\nf = [1.0, 1.0]\n");
        assert!(err(&table).contains("does not cover"));
    }

    #[test]
    fn bump_profile_is_flat_at_the_corners() {
        let grid = SurfaceGrid::new(4.0, 30).unwrap();
        let v = Profile::Bump { even: 1.0, odd: 0.5, sharpness: 1.0 }.sample(&grid).unwrap();
        let i = grid.nodes().iter().position(|&x| x == 1.0).unwrap();
        assert_eq!(v[i], 1.5);
        assert_eq!(v[grid.mirror(i)], 0.5);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let rows = vec![vec![-1.0, 0.1], vec![1.0, 1.0 / 3.0]];
        write_csv(&p, &["x", "v"], rows.clone()).unwrap();
        assert_eq!(read_vector_csv(&p).unwrap(), vec![0.1, 1.0 / 3.0]);
        let pts = read_points_csv(&p).unwrap();
        assert_eq!((pts[1].x, pts[1].y), (1.0, 1.0 / 3.0));
        std::fs::write(&p, "x,y\n1,2\n3,oops\n").unwrap();
        assert!(read_points_csv(&p).unwrap_err().to_string().contains(":3"));
    }

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(x in proptest::num::f64::NORMAL) {
            let s = fmt_f64(x);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
