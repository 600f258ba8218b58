//! Scenario configuration: flat `key = value` text, one entry per line.
//!
//! Blank lines and `#` comments are ignored. Unknown and duplicate keys are
//! errors. Reals are sums of plain numbers and `pi` terms (`2pi`, `pi/2`, `pi - 0.1`);
//! `theta` also accepts `tycko`. Lists are comma separated.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use holonomy::propagate::Method;
use holonomy::quadrupole::{self, PrecessionScenario};
use holonomy::study::ConnectionModel;

pub const MIN_GRID: usize = 16;
pub const DEFAULT_GRID: usize = 1000;
pub const DEFAULT_GAUGE_COUNT: u64 = 100;
pub const DEFAULT_WARNING: f64 = 0.1;

const KEYS: &[&str] = &[
    "system",
    "lambda",
    "rho",
    "theta",
    "phi0",
    "omega",
    "phi_final",
    "duration",
    "connection",
    "generators",
    "curve",
    "cyclic",
    "degeneracy_tol",
    "grid",
    "method",
    "levels",
    "seed",
    "gauge_count",
    "taus",
    "warning",
    "sweep_parameter",
    "sweep_start",
    "sweep_end",
    "sweep_count",
    "out",
    "workers",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// A sum of terms `x`, `xpi`, `x*pi`, `pi/y`, `xpi/y`, e.g. `pi - 0.1`.
pub fn parse_real(raw: &str) -> Parsed<f64> {
    let s: String = raw.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    let invalid = || bad(format!("'{raw}' is not a number"));
    if s.is_empty() {
        return Err(invalid());
    }
    let bytes = s.as_bytes();
    let mut cuts = vec![0];
    for k in 1..bytes.len() {
        if matches!(bytes[k], b'+' | b'-') && bytes[k - 1] != b'e' && bytes[k - 1] != b'*' && bytes[k - 1] != b'/' {
            cuts.push(k);
        }
    }
    cuts.push(bytes.len());
    let total: f64 = cuts.windows(2).map(|w| parse_term(&s[w[0]..w[1]]).ok_or_else(invalid)).sum::<Parsed<f64>>()?;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(bad(format!("'{raw}' is not a finite number")))
    }
}

fn parse_term(s: &str) -> Option<f64> {
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let at = s.find("pi")?;
    let factor = match s[..at].trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().ok()?,
    };
    let divisor = match &s[at + 2..] {
        "" => 1.0,
        t => t.strip_prefix('/')?.parse::<f64>().ok().filter(|d| *d != 0.0)?,
    };
    Some(factor * PI / divisor)
}

fn parse_uint<T: std::str::FromStr>(key: &str, raw: &str) -> Parsed<T> {
    raw.trim().parse::<T>().map_err(|_| bad(format!("{key}: '{raw}' is not a non-negative integer")))
}

fn parse_bool(key: &str, raw: &str) -> Parsed<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(format!("{key}: '{raw}' is not a boolean"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Theta,
    PhiFinal,
    Omega,
    Tau,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Theta => "theta",
            SweepParameter::PhiFinal => "phi_final",
            SweepParameter::Omega => "omega",
            SweepParameter::Tau => "tau",
        }
    }

    fn parse(raw: &str) -> Parsed<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "theta" | "θ" => Ok(SweepParameter::Theta),
            "phi_final" | "phi_f" | "φ_f" => Ok(SweepParameter::PhiFinal),
            "omega" | "ω" => Ok(SweepParameter::Omega),
            "tau" | "duration" | "τ" => Ok(SweepParameter::Tau),
            other => Err(bad(format!("sweep_parameter must be theta, phi_final, omega or tau, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count).map(|k| self.start + (self.end - self.start) * k as f64 / (self.count - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrupole {
    pub lambda: f64,
    pub rho: f64,
    pub theta: f64,
    pub phi0: f64,
    pub omega: f64,
    pub phi_final: f64,
}

impl Quadrupole {
    pub fn scenario(&self) -> Parsed<PrecessionScenario> {
        PrecessionScenario::new(self.lambda, self.rho, self.theta, self.phi0, self.omega, self.phi_final)
            .map_err(|e| bad(format!("invalid quadrupole scenario: {e}")))
    }

    /// The same scenario with one parameter replaced; `tau` keeps `φ_f`
    /// and adjusts `ω`.
    pub fn with(&self, parameter: SweepParameter, value: f64) -> Parsed<Self> {
        let mut q = *self;
        match parameter {
            SweepParameter::Theta => q.theta = value,
            SweepParameter::PhiFinal => q.phi_final = value,
            SweepParameter::Omega => q.omega = value,
            SweepParameter::Tau => {
                if !(value > 0.0) {
                    return Err(bad(format!("duration τ = {value} must be positive")));
                }
                q.omega = (q.phi_final - q.phi0) / value;
            }
        }
        q.scenario()?;
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Custom {
    pub generators: PathBuf,
    pub curve: PathBuf,
    pub cyclic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Quadrupole(Quadrupole),
    Custom(Custom),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub system: System,
    pub connection: ConnectionModel,
    pub degeneracy_tol: Option<f64>,
    pub grid: usize,
    pub method: Method,
    /// Zero-based level indices; `None` means every level.
    pub levels: Option<Vec<usize>>,
    pub seed: u64,
    pub gauge_count: u64,
    pub taus: Option<Vec<f64>>,
    pub warning: f64,
    pub sweep: Option<Sweep>,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub method: Option<Method>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

pub fn parse_entries(text: &str) -> Parsed<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected 'key = value'", n + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(bad(format!("line {}: unknown key '{key}'", n + 1)));
        }
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(bad(format!("line {}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(entries)
}

impl ScenarioConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Parsed<Self> {
        let (entries, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| bad(format!("cannot read {}: {e}", p.display())))?;
                (parse_entries(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        Self::from_entries(&entries, &base, overrides)
    }

    pub fn from_entries(entries: &BTreeMap<String, String>, base: &Path, overrides: &Overrides) -> Parsed<Self> {
        let get = |k: &str| entries.get(k).map(String::as_str);
        let real = |k: &str, default: f64| get(k).map(|v| parse_real(v).map_err(|e| bad(format!("{k}: {e}")))).unwrap_or(Ok(default));
        let system_kind = get("system").unwrap_or("quadrupole").to_ascii_lowercase();
        let quad_keys = ["lambda", "rho", "theta", "phi0", "omega", "phi_final", "duration"];
        let custom_keys = ["generators", "curve", "cyclic"];
        let system = match system_kind.as_str() {
            "quadrupole" => {
                if let Some(k) = custom_keys.iter().find(|k| entries.contains_key(**k)) {
                    return Err(bad(format!("key '{k}' applies only to system = custom-family")));
                }
                let theta = match get("theta") {
                    Some(v) if v.trim().eq_ignore_ascii_case("tycko") => quadrupole::tycko_theta(),
                    Some(v) => parse_real(v).map_err(|e| bad(format!("theta: {e}")))?,
                    None => quadrupole::tycko_theta(),
                };
                let phi0 = real("phi0", 0.0)?;
                let phi_final = real("phi_final", phi0 + 2.0 * PI)?;
                let omega = match (get("omega"), get("duration")) {
                    (Some(_), Some(_)) => return Err(bad("give either omega or duration, not both")),
                    (_, Some(_)) => {
                        let tau = real("duration", 1.0)?;
                        if !(tau > 0.0) {
                            return Err(bad(format!("duration must be positive, got {tau}")));
                        }
                        (phi_final - phi0) / tau
                    }
                    _ => real("omega", 1.0)?,
                };
                let q = Quadrupole { lambda: real("lambda", 1.0)?, rho: real("rho", 1.0)?, theta, phi0, omega, phi_final };
                q.scenario()?;
                System::Quadrupole(q)
            }
            "custom-family" | "custom" => {
                if let Some(k) = quad_keys.iter().find(|k| entries.contains_key(**k)) {
                    return Err(bad(format!("key '{k}' applies only to system = quadrupole")));
                }
                let file = |k: &str| {
                    get(k).map(|v| base.join(v)).ok_or_else(|| bad(format!("system = custom-family requires '{k}'")))
                };
                System::Custom(Custom {
                    generators: file("generators")?,
                    curve: file("curve")?,
                    cyclic: get("cyclic").map(|v| parse_bool("cyclic", v)).transpose()?,
                })
            }
            other => return Err(bad(format!("system must be quadrupole or custom-family, got '{other}'"))),
        };

        let connection = match get("connection") {
            Some(v) => v.parse::<ConnectionModel>().map_err(|e| bad(e.to_string()))?,
            None => ConnectionModel::Transported,
        };
        if connection == ConnectionModel::ClosedForm && matches!(system, System::Custom(_)) {
            return Err(bad("connection = closed-form exists only for the quadrupole system"));
        }
        let grid = match overrides.grid {
            Some(g) => g,
            None => get("grid").map(|v| parse_uint::<usize>("grid", v)).transpose()?.unwrap_or(DEFAULT_GRID),
        };
        if grid < MIN_GRID {
            return Err(bad(format!("grid must be at least {MIN_GRID}, got {grid}")));
        }
        let method = match overrides.method {
            Some(m) => m,
            None => get("method")
                .map(|v| v.parse::<Method>().map_err(|e| bad(format!("method: {e}"))))
                .transpose()?
                .unwrap_or_default(),
        };
        let levels = get("levels")
            .map(|v| {
                v.split(',')
                    .map(|s| match parse_uint::<usize>("levels", s)? {
                        0 => Err(bad("levels are numbered from 1")),
                        n => Ok(n - 1),
                    })
                    .collect::<Parsed<Vec<usize>>>()
            })
            .transpose()?;
        let seed = match overrides.seed {
            Some(s) => s,
            None => get("seed").map(|v| parse_uint::<u64>("seed", v)).transpose()?.unwrap_or(0),
        };
        let gauge_count =
            get("gauge_count").map(|v| parse_uint::<u64>("gauge_count", v)).transpose()?.unwrap_or(DEFAULT_GAUGE_COUNT);
        let taus = get("taus")
            .map(|v| v.split(',').map(|s| parse_real(s).map_err(|e| bad(format!("taus: {e}")))).collect::<Parsed<Vec<f64>>>())
            .transpose()?;
        if let Some(t) = &taus {
            if t.is_empty() || t.iter().any(|x| !(*x > 0.0)) || t.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(bad("taus must be positive and strictly increasing"));
            }
        }
        let warning = real("warning", DEFAULT_WARNING)?;
        let degeneracy_tol = get("degeneracy_tol").map(|v| parse_real(v)).transpose()?;
        let sweep = match get("sweep_parameter") {
            Some(p) => {
                let count = get("sweep_count").map(|v| parse_uint::<usize>("sweep_count", v)).transpose()?.unwrap_or(1);
                if count == 0 {
                    return Err(bad("sweep_count must be at least 1"));
                }
                let start = get("sweep_start").ok_or_else(|| bad("a sweep needs sweep_start"))?;
                let start = parse_real(start).map_err(|e| bad(format!("sweep_start: {e}")))?;
                let end = match get("sweep_end") {
                    Some(v) => parse_real(v).map_err(|e| bad(format!("sweep_end: {e}")))?,
                    None if count == 1 => start,
                    None => return Err(bad("a sweep of several points needs sweep_end")),
                };
                Some(Sweep { parameter: SweepParameter::parse(p)?, start, end, count })
            }
            None => {
                if let Some(k) = ["sweep_start", "sweep_end", "sweep_count"].iter().find(|k| entries.contains_key(**k)) {
                    return Err(bad(format!("'{k}' requires sweep_parameter")));
                }
                None
            }
        };
        let out = match &overrides.out {
            Some(o) => o.clone(),
            None => get("out").map(|v| base.join(v)).unwrap_or_else(|| PathBuf::from("holonomy-out")),
        };
        let workers = match overrides.workers {
            Some(w) => Some(w),
            None => get("workers").map(|v| parse_uint::<usize>("workers", v)).transpose()?,
        };
        if workers == Some(0) {
            return Err(bad("workers must be at least 1"));
        }
        Ok(Self { system, connection, degeneracy_tol, grid, method, levels, seed, gauge_count, taus, warning, sweep, out, workers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Parsed<ScenarioConfig> {
        ScenarioConfig::from_entries(&parse_entries(text)?, Path::new(""), &Overrides::default())
    }

    #[test]
    fn reals_with_pi() {
        assert_eq!(parse_real("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_real("-0.5*pi").unwrap(), -0.5 * PI);
        assert_eq!(parse_real(" 1.25 ").unwrap(), 1.25);
        assert_eq!(parse_real("pi - 0.1").unwrap(), PI - 0.1);
        assert_eq!(parse_real("2pi/50").unwrap(), 2.0 * PI / 50.0);
        assert_eq!(parse_real("1e-3+pi").unwrap(), 1e-3 + PI);
        assert!(parse_real("1-").is_err());
        assert!(parse_real("pie").is_err());
        assert!(parse_real("inf").is_err());
    }

    #[test]
    fn defaults_are_the_tycko_precession() {
        let c = load("").unwrap();
        match c.system {
            System::Quadrupole(q) => {
                assert_eq!(q.theta, quadrupole::tycko_theta());
                assert_eq!(q.phi_final, 2.0 * PI);
            }
            _ => panic!("expected quadrupole"),
        }
        assert_eq!(c.grid, DEFAULT_GRID);
        assert_eq!(c.method, Method::Magnus4);
    }

    #[test]
    fn rejections() {
        assert!(load("colour = red").is_err());
        assert!(load("grid = 8").is_err());
        assert!(load("grid = 20\ngrid = 30").is_err());
        assert!(load("seed = -1").is_err());
        assert!(load("omega = 1\nduration = 2").is_err());
        assert!(load("rho = 0").is_err());
        assert!(load("system = custom-family").is_err());
        assert!(load("system = quadrupole\ncurve = c.csv").is_err());
        assert!(load("levels = 0").is_err());
        assert!(load("taus = 2, 1").is_err());
        assert!(load("sweep_start = 1").is_err());
        assert!(load("method = rk4").is_err());
    }

    #[test]
    fn duration_sets_the_rate() {
        let c = load("phi0 = 0\nphi_final = pi\nduration = 4 # seconds").unwrap();
        let System::Quadrupole(q) = c.system else { panic!() };
        assert_eq!(q.omega, PI / 4.0);
    }

    #[test]
    fn overrides_win() {
        let entries = parse_entries("grid = 64\nseed = 3").unwrap();
        let o = Overrides { grid: Some(128), seed: Some(9), ..Default::default() };
        let c = ScenarioConfig::from_entries(&entries, Path::new(""), &o).unwrap();
        assert_eq!((c.grid, c.seed), (128, 9));
    }

    #[test]
    fn sweep_points() {
        let c = load("sweep_parameter = theta\nsweep_start = 0.1\nsweep_end = 0.5\nsweep_count = 5").unwrap();
        let v = c.sweep.unwrap().values();
        assert_eq!(v.len(), 5);
        assert!((v[4] - 0.5).abs() < 1e-15 && (v[1] - 0.2).abs() < 1e-15);
    }
}
