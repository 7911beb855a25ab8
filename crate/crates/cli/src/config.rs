//! Experiment configuration: flags layered over an optional key=value file,
//! resolved and validated before any computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use num_complex::Complex64;
use resolvent_decay::{GridSpec, MollifierSpec, PotentialSpec, Scheme};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Profile,
    GammaSweepL,
    GammaSweepKc,
    Mollifier,
    Moments,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Profile => "profile",
            Experiment::GammaSweepL => "gamma_sweep_L",
            Experiment::GammaSweepKc => "gamma_sweep_kc",
            Experiment::Mollifier => "mollifier",
            Experiment::Moments => "moments",
            Experiment::Verify => "verify",
        }
    }

    fn default_schemes(self) -> &'static [&'static str] {
        match self {
            Experiment::Profile => &["fd2", "ps", "mps"],
            Experiment::GammaSweepL | Experiment::GammaSweepKc => &["fd2", "mps"],
            Experiment::Moments => &["mps"],
            Experiment::Mollifier | Experiment::Verify => &[],
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "profile" => Some(Experiment::Profile),
            "gamma_sweep_l" => Some(Experiment::GammaSweepL),
            "gamma_sweep_kc" => Some(Experiment::GammaSweepKc),
            "mollifier" => Some(Experiment::Mollifier),
            "moments" => Some(Experiment::Moments),
            "verify" => Some(Experiment::Verify),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Lattice,
    Mollifier,
    Leibniz,
    Moments,
    FdTheorem,
    MpsTheorems,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Lattice,
        Suite::Mollifier,
        Suite::Leibniz,
        Suite::Moments,
        Suite::FdTheorem,
        Suite::MpsTheorems,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lattice => "lattice",
            Suite::Mollifier => "mollifier",
            Suite::Leibniz => "leibniz",
            Suite::Moments => "moments",
            Suite::FdTheorem => "fd_theorem",
            Suite::MpsTheorems => "mps_theorems",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s.trim().replace('-', "_"))
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                format!("unknown suite `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Potential as written on the command line; file potentials are read during
/// resolution so that their length can be checked against each grid.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialArg {
    None,
    Gaussian {
        amplitude: f64,
        rate: f64,
        center: f64,
    },
    File {
        path: PathBuf,
        samples: Vec<f64>,
    },
}

impl PotentialArg {
    pub fn spec(&self) -> PotentialSpec {
        match self {
            PotentialArg::None => PotentialSpec::Zero,
            PotentialArg::Gaussian {
                amplitude,
                rate,
                center,
            } => PotentialSpec::Gaussian {
                amplitude: *amplitude,
                rate: *rate,
                center: *center,
            },
            PotentialArg::File { samples, .. } => PotentialSpec::Tabulated(samples.clone()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, PotentialArg::None)
    }
}

impl fmt::Display for PotentialArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialArg::None => f.write_str("none"),
            PotentialArg::Gaussian {
                amplitude,
                rate,
                center,
            } => write!(f, "gaussian:{amplitude},{rate},{center}"),
            PotentialArg::File { path, .. } => write!(f, "file:{}", path.display()),
        }
    }
}

/// Flags shared by every subcommand. All are optional so that a config file
/// can supply them; anything given here wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// key=value file; command-line flags override its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Domain length.
    #[arg(long = "L", visible_alias = "length", value_name = "L")]
    pub length: Option<String>,
    /// Grid spacing (default 0.02).
    #[arg(long, conflicts_with = "n")]
    pub dx: Option<String>,
    /// Number of grid points, instead of --dx.
    #[arg(long)]
    pub n: Option<String>,
    /// Spectral parameter, real or a+bi (default -10).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// fd2, ps or mps; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    pub scheme: Vec<String>,
    /// none, gaussian:A,ALPHA[,C] or file:PATH.
    #[arg(long, allow_hyphen_values = true)]
    pub potential: Option<String>,
    /// Start of the fitting window (default 1).
    #[arg(long)]
    pub x1: Option<String>,
    /// End of the fitting window (default 7).
    #[arg(long)]
    pub x2: Option<String>,
    /// Mollifier width as a fraction of kc (default 0.125).
    #[arg(long)]
    pub sigma: Option<String>,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweep points (default: available cores).
    #[arg(long)]
    pub workers: Option<String>,
    /// Largest N allowed on dense paths; raising it accepts O(N²) memory.
    #[arg(long = "dense-cap")]
    pub dense_cap: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepLArgs {
    /// Domain lengths, comma-separated (default 20,40,60,80).
    #[arg(long)]
    pub ls: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepKcArgs {
    /// Grid spacings, comma-separated (default 0.05,0.02,0.01).
    #[arg(long)]
    pub dxs: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MomentArgs {
    /// Highest moment order (default 10).
    #[arg(long = "m-max")]
    pub m_max: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// Suites to run; repeat or comma-separate (default all).
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
}

/// A fully resolved run; every grid it will touch has been validated.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub length: f64,
    pub grid: GridSpec,
    pub lambda: Complex64,
    pub schemes: Vec<Scheme>,
    pub potential: PotentialArg,
    pub x1: f64,
    pub x2: f64,
    pub mollifier: MollifierSpec,
    pub out: PathBuf,
    pub workers: usize,
    pub dense_cap: usize,
    pub ls: Vec<f64>,
    pub dxs: Vec<f64>,
    pub m_max: usize,
    pub suites: Vec<Suite>,
}

/// Raw string values keyed by field name, flags merged over the file.
struct Layered {
    values: BTreeMap<String, String>,
}

impl Layered {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .trim()
                .parse()
                .map_err(|e| ConfigError::field(key, format!("cannot parse `{raw}`: {e}"))),
        }
    }

    fn list(&self, key: &'static str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(raw) => parse_list(key, raw),
        }
    }
}

fn parse_list(key: &'static str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    let values = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| ConfigError::field(key, format!("cannot parse `{s}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(ConfigError::field(key, "list is empty"));
    }
    Ok(values)
}

/// Reads `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::field(
                "config",
                format!("{}:{}: expected key=value", path.display(), lineno + 1),
            )
        })?;
        let key = canonical_key(key.trim());
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::field(
                "config",
                format!("{}:{}: unknown key `{}`", path.display(), lineno + 1, key),
            ));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 17] = [
    "experiment",
    "L",
    "dx",
    "n",
    "lambda",
    "scheme",
    "potential",
    "x1",
    "x2",
    "sigma",
    "out",
    "workers",
    "dense_cap",
    "ls",
    "dxs",
    "m_max",
    "suite",
];

fn canonical_key(key: &str) -> String {
    match key {
        "length" | "l" => "L".to_string(),
        "N" => "n".to_string(),
        other => other.replace('-', "_"),
    }
}

/// Everything the subcommand contributed besides the common flags.
#[derive(Debug, Clone, Default)]
pub struct Extra {
    pub ls: Option<String>,
    pub dxs: Option<String>,
    pub m_max: Option<String>,
    pub suites: Vec<String>,
}

impl ExperimentConfig {
    pub fn resolve(
        experiment: Experiment,
        common: &CommonArgs,
        extra: &Extra,
    ) -> Result<Self, ConfigError> {
        let mut values = match &common.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        if let Some(name) = values.remove("experiment") {
            if Experiment::from_key(&name) != Some(experiment) {
                return Err(ConfigError::field(
                    "experiment",
                    format!(
                        "config file names `{name}` but the subcommand is `{}`",
                        experiment.name()
                    ),
                ));
            }
        }
        // A grid given one way on the command line replaces the other in the file.
        if common.dx.is_some() {
            values.remove("n");
        }
        if common.n.is_some() {
            values.remove("dx");
        }
        if values.contains_key("dx") && values.contains_key("n") {
            return Err(ConfigError::field("n", "give either dx or n, not both"));
        }
        let flags: [(&str, Option<String>); 13] = [
            ("L", common.length.clone()),
            ("dx", common.dx.clone()),
            ("n", common.n.clone()),
            ("lambda", common.lambda.clone()),
            (
                "scheme",
                (!common.scheme.is_empty()).then(|| common.scheme.join(",")),
            ),
            ("potential", common.potential.clone()),
            ("x1", common.x1.clone()),
            ("x2", common.x2.clone()),
            ("sigma", common.sigma.clone()),
            ("out", common.out.as_ref().map(|p| p.display().to_string())),
            ("workers", common.workers.clone()),
            ("dense_cap", common.dense_cap.clone()),
            (
                "suite",
                (!extra.suites.is_empty()).then(|| extra.suites.join(",")),
            ),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                values.insert(key.to_string(), v);
            }
        }
        for (key, v) in [
            ("ls", &extra.ls),
            ("dxs", &extra.dxs),
            ("m_max", &extra.m_max),
        ] {
            if let Some(v) = v {
                values.insert(key.to_string(), v.clone());
            }
        }
        Self::from_layered(experiment, &Layered { values })
    }

    fn from_layered(experiment: Experiment, raw: &Layered) -> Result<Self, ConfigError> {
        let length: f64 = raw.parse("L", 40.0)?;
        let grid = match raw.get("n") {
            Some(_) => GridSpec::new(length, raw.parse("n", 0usize)?),
            None => GridSpec::from_spacing(length, raw.parse("dx", 0.02)?),
        }
        .map_err(ConfigError::from_core)?;
        let lambda = parse_lambda(raw.get("lambda").unwrap_or("-10"))?;

        let scheme_names: Vec<String> = match raw.get("scheme") {
            Some(s) => s
                .split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect(),
            None => experiment
                .default_schemes()
                .iter()
                .map(|s| s.to_string())
                .collect(),
        };
        let mollifier = MollifierSpec::with_sigma(raw.parse("sigma", 0.125)?)
            .map_err(ConfigError::from_core)?;
        let mut schemes: Vec<Scheme> = Vec::new();
        for name in &scheme_names {
            let scheme = match name.parse::<Scheme>().map_err(ConfigError::from_core)? {
                Scheme::Mollified(_) => Scheme::Mollified(mollifier),
                s => s,
            };
            if !schemes.contains(&scheme) {
                schemes.push(scheme);
            }
        }
        if schemes.is_empty() && !experiment.default_schemes().is_empty() {
            return Err(ConfigError::field("scheme", "no scheme selected"));
        }

        let potential = parse_potential(raw.get("potential").unwrap_or("none"))?;
        let x1: f64 = raw.parse("x1", 1.0)?;
        let x2: f64 = raw.parse("x2", 7.0)?;
        if !(x1.is_finite() && x2.is_finite() && 0.0 <= x1 && x1 < x2) {
            return Err(ConfigError::field(
                "x2",
                format!("need 0 ≤ x1 < x2, got x1={x1}, x2={x2}"),
            ));
        }
        let workers: usize = raw.parse(
            "workers",
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        )?;
        if workers == 0 {
            return Err(ConfigError::field("workers", "must be at least 1"));
        }
        let dense_cap: usize =
            raw.parse("dense_cap", resolvent_decay::greens::DENSE_CAP_DEFAULT)?;
        let ls = raw.list("ls", &[20.0, 40.0, 60.0, 80.0])?;
        let dxs = raw.list("dxs", &[0.05, 0.02, 0.01])?;
        let m_max: usize = raw.parse("m_max", 10)?;
        let suites = match raw.get("suite") {
            None => Suite::ALL.to_vec(),
            Some(list) => {
                let mut out = Vec::new();
                for s in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let suite: Suite = s
                        .parse()
                        .map_err(|e: String| ConfigError::field("suite", e))?;
                    if !out.contains(&suite) {
                        out.push(suite);
                    }
                }
                out
            }
        };

        let config = Self {
            experiment,
            length,
            grid,
            lambda,
            schemes,
            potential,
            x1,
            x2,
            mollifier,
            out: PathBuf::from(raw.get("out").unwrap_or("out")),
            workers,
            dense_cap,
            ls,
            dxs,
            m_max,
            suites,
        };
        config.validate()?;
        Ok(config)
    }

    /// Grids the experiment will solve on, in output order.
    pub fn grids(&self) -> Result<Vec<GridSpec>, ConfigError> {
        let grids = match self.experiment {
            Experiment::GammaSweepL => self
                .ls
                .iter()
                .map(|&l| GridSpec::from_spacing(l, self.grid.dx()))
                .collect::<Result<Vec<_>, _>>(),
            Experiment::GammaSweepKc => self
                .dxs
                .iter()
                .map(|&dx| GridSpec::from_spacing(self.length, dx))
                .collect::<Result<Vec<_>, _>>(),
            Experiment::Verify => Ok(Vec::new()),
            _ => Ok(vec![self.grid]),
        };
        grids.map_err(|e| {
            let field = match self.experiment {
                Experiment::GammaSweepL => "ls",
                Experiment::GammaSweepKc => "dxs",
                _ => "L",
            };
            ConfigError::field(field, e.to_string())
        })
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let grids = self.grids()?;
        for grid in &grids {
            if self.experiment != Experiment::Mollifier {
                self.potential
                    .spec()
                    .sample(grid)
                    .map_err(ConfigError::from_core)?;
            }
            for scheme in &self.schemes {
                if scheme.is_dense() && grid.n() > self.dense_cap {
                    return Err(ConfigError::field(
                        "dense-cap",
                        format!(
                            "scheme {scheme} at L={} dx={} needs N={} > cap {}; raise --dense-cap to accept O(N²) memory",
                            grid.length(),
                            grid.dx(),
                            grid.n(),
                            self.dense_cap
                        ),
                    ));
                }
            }
            let fits_window = matches!(
                self.experiment,
                Experiment::Profile | Experiment::GammaSweepL | Experiment::GammaSweepKc
            );
            if fits_window && self.x2 > grid.length() / 2.0 {
                return Err(ConfigError::field(
                    "x2",
                    format!(
                        "{} exceeds half the domain ({})",
                        self.x2,
                        grid.length() / 2.0
                    ),
                ));
            }
            if self.experiment == Experiment::Moments && self.m_max > grid.n() / 16 {
                return Err(ConfigError::field(
                    "m-max",
                    format!("{} exceeds N/16 = {}", self.m_max, grid.n() / 16),
                ));
            }
        }
        Ok(())
    }

    /// Resolved parameters for `run.meta`.
    pub fn meta(&self) -> BTreeMap<String, String> {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.experiment.name().into());
        m.insert("L".into(), self.length.to_string());
        m.insert("dx".into(), self.grid.dx().to_string());
        m.insert("n".into(), self.grid.n().to_string());
        m.insert("kc".into(), self.grid.kc().to_string());
        m.insert("lambda".into(), format_complex(self.lambda));
        m.insert(
            "schemes".into(),
            self.schemes
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("potential".into(), self.potential.to_string());
        m.insert("x1".into(), self.x1.to_string());
        m.insert("x2".into(), self.x2.to_string());
        m.insert("sigma".into(), self.mollifier.sigma().to_string());
        m.insert(
            "quad_rel_tol".into(),
            format!("{:e}", self.mollifier.quad_rel_tol()),
        );
        m.insert("workers".into(), self.workers.to_string());
        m.insert("dense_cap".into(), self.dense_cap.to_string());
        match self.experiment {
            Experiment::GammaSweepL => {
                m.insert("ls".into(), join(&self.ls));
            }
            Experiment::GammaSweepKc => {
                m.insert("dxs".into(), join(&self.dxs));
            }
            Experiment::Moments => {
                m.insert("m_max".into(), self.m_max.to_string());
            }
            Experiment::Verify => {
                m.insert(
                    "suites".into(),
                    self.suites
                        .iter()
                        .map(|s| s.name())
                        .collect::<Vec<_>>()
                        .join(","),
                );
            }
            _ => {}
        }
        m
    }
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        z.re.to_string()
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn parse_lambda(raw: &str) -> Result<Complex64, ConfigError> {
    let cleaned: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    let z = Complex64::from_str(&cleaned).map_err(|_| {
        ConfigError::field("lambda", format!("cannot parse `{raw}` as a real or a+bi"))
    })?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(ConfigError::field("lambda", "must be finite"));
    }
    Ok(z)
}

fn parse_potential(raw: &str) -> Result<PotentialArg, ConfigError> {
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("none") {
        return Ok(PotentialArg::None);
    }
    if let Some(params) = raw.strip_prefix("gaussian:") {
        let v = parse_list("potential", params)?;
        let (amplitude, rate, center) = match v[..] {
            [a, r] => (a, r, 0.0),
            [a, r, c] => (a, r, c),
            _ => {
                return Err(ConfigError::field(
                    "potential",
                    format!("gaussian takes A,ALPHA[,C], got {} values", v.len()),
                ))
            }
        };
        if rate.is_nan() || rate <= 0.0 {
            return Err(ConfigError::field(
                "potential",
                format!("gaussian rate must be positive, got {rate}"),
            ));
        }
        return Ok(PotentialArg::Gaussian {
            amplitude,
            rate,
            center,
        });
    }
    if let Some(path) = raw.strip_prefix("file:") {
        let path = PathBuf::from(path);
        let samples = read_potential_file(&path)?;
        return Ok(PotentialArg::File { path, samples });
    }
    Err(ConfigError::field(
        "potential",
        format!("expected none, gaussian:A,ALPHA[,C] or file:PATH, got `{raw}`"),
    ))
}

/// One sample per line; the last comma-separated field is the value, so
/// `x,V` files written by the `profile` experiment read back directly.
fn read_potential_file(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        match field.parse::<f64>() {
            Ok(v) => samples.push(v),
            Err(_) if samples.is_empty() && lineno == 0 => {} // header row
            Err(_) => {
                return Err(ConfigError::field(
                    "potential",
                    format!("{}:{}: cannot parse `{field}`", path.display(), lineno + 1),
                ))
            }
        }
    }
    Ok(samples)
}
