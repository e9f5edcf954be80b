//! Flat `key=value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::diagnostics::IdentityKind;
use crate::onedim;
use crate::quad::QuadTolerance;
use crate::sets::{Params, SetGeometry};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Energy,
    Curvature,
    Potential,
    Diagnose,
    OnedimRoot,
    OnedimSweep,
    Optimize2d,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Energy,
        Command::Curvature,
        Command::Potential,
        Command::Diagnose,
        Command::OnedimRoot,
        Command::OnedimSweep,
        Command::Optimize2d,
        Command::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Curvature => "curvature",
            Command::Potential => "potential",
            Command::Diagnose => "diagnose",
            Command::OnedimRoot => "onedim-root",
            Command::OnedimSweep => "onedim-sweep",
            Command::Optimize2d => "optimize2d",
            Command::Calibrate => "calibrate",
        }
    }

    fn needs_geometry(self) -> bool {
        matches!(self, Command::Energy | Command::Curvature | Command::Potential | Command::Diagnose)
    }

    fn default_dim(self) -> Option<usize> {
        match self {
            Command::OnedimRoot | Command::OnedimSweep => Some(1),
            Command::Optimize2d | Command::Calibrate => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Every accepted key, for the unknown-key check.
pub const KEYS: &[&str] = &[
    "command",
    "n",
    "s",
    "alpha",
    "eps",
    "mass",
    "c_coupling",
    "c_var",
    "input",
    "out_dir",
    "rel_tol",
    "abs_tol",
    "max_subdivisions",
    "resolution",
    "tol",
    "sweep_start",
    "sweep_end",
    "sweep_step",
    "eps_grid",
    "modes",
    "max_iter",
    "initial_step",
    "identities",
    "mu_gate",
    "points",
    "init_mode",
    "init_amplitude",
];

/// Where a value came from, for error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

/// Raw entries, later ones overriding earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Entries {
    map: BTreeMap<String, (String, Origin)>,
}

impl Entries {
    /// Parse `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut out = Entries::default();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::File { path: path.to_path_buf(), line: i + 1 };
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Parse { origin, msg: format!("expected key=value, got `{line}`") });
            };
            out.insert(k.trim(), v.trim(), origin)?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::UnknownKey { key: key.to_string(), origin });
        }
        if value.is_empty() {
            return Err(CliError::Parse { origin, msg: format!("empty value for `{key}`") });
        }
        self.map.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    /// `KEY=VALUE` from a `--set` flag.
    pub fn insert_assignment(&mut self, assignment: &str) -> Result<(), CliError> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(CliError::Parse {
                origin: Origin::Flag,
                msg: format!("expected key=value, got `{assignment}`"),
            });
        };
        self.insert(k.trim(), v.trim(), Origin::Flag)
    }

    pub fn merge(&mut self, other: Entries) {
        self.map.extend(other.map);
    }

    pub fn raw(&self) -> BTreeMap<String, String> {
        self.map.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, origin)) => v.parse().map(Some).map_err(|e| CliError::Parse {
                origin: origin.clone(),
                msg: format!("bad value `{v}` for `{key}`: {e}"),
            }),
        }
    }

    fn list<T: FromStr>(&self, key: &str, sep: char) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, origin)) => v
                .split(sep)
                .map(|item| {
                    item.trim().parse().map_err(|e| CliError::Parse {
                        origin: origin.clone(),
                        msg: format!("bad item `{item}` in `{key}`: {e}"),
                    })
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }
}

/// Everything a command needs, validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub params: Params,
    pub input: Option<PathBuf>,
    /// Parsed contents of `input`.
    pub geometry: Option<SetGeometry>,
    pub out_dir: PathBuf,
    pub tolerance: QuadTolerance,
    pub resolution: usize,
    /// Root tolerance `|f(d*)|` for the one-dimensional commands and the
    /// Euler–Lagrange residual target for `optimize2d`.
    pub tol: f64,
    pub eps_grid: Vec<f64>,
    pub modes: usize,
    pub max_iter: usize,
    pub initial_step: f64,
    pub identities: Vec<IdentityKind>,
    pub mu_gate: f64,
    pub points: Vec<Vec<f64>>,
    pub init_mode: usize,
    pub init_amplitude: f64,
    /// The entries as given, echoed into the metadata sidecar.
    pub entries: BTreeMap<String, String>,
}

/// Read a configuration file. A missing file is reported as
/// [`CliError::NotFound`].
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    RunConfig::from_entries(read_entries(path)?)
}

pub fn read_entries(path: &Path) -> Result<Entries, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::NotFound(path.to_path_buf()),
        _ => CliError::Io(format!("{}: {e}", path.display())),
    })?;
    Entries::parse(&text, path)
}

fn range(e: Error) -> CliError {
    match e {
        Error::InvalidParams { key, msg } => CliError::Range { key: key.to_string(), msg },
        other => CliError::Range { key: "input".into(), msg: other.to_string() },
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Range { key: key.into(), msg: format!("must be positive and finite, got {v}") })
    }
}

impl RunConfig {
    pub fn from_entries(e: Entries) -> Result<Self, CliError> {
        let command: Option<Command> = e.get("command")?;
        let input: Option<PathBuf> = e.get("input")?;
        let geometry = match &input {
            Some(path) => Some(read_geometry(path)?),
            None => None,
        };
        let n = match (e.get::<usize>("n")?, &geometry) {
            (Some(n), Some(g)) if n != g.dim() => {
                return Err(CliError::Range {
                    key: "n".into(),
                    msg: format!("n = {n} but the input geometry has dimension {}", g.dim()),
                })
            }
            (Some(n), _) => n,
            (None, Some(g)) => g.dim(),
            (None, None) => command.and_then(Command::default_dim).unwrap_or(2),
        };
        let s = e.get("s")?.unwrap_or(0.5);
        let alpha = e.get("alpha")?.unwrap_or(0.5);
        let mut params = match (e.get::<f64>("eps")?, e.get::<f64>("mass")?) {
            (Some(_), Some(_)) => {
                return Err(CliError::Range { key: "eps".into(), msg: "give either eps or mass, not both".into() })
            }
            (_, Some(m)) => Params::from_mass(n, s, alpha, m).map_err(range)?,
            (eps, None) => Params::new(n, s, alpha, eps.unwrap_or(0.0)).map_err(range)?,
        };
        if let Some(c) = e.get("c_coupling")? {
            params.c_coupling = c;
        }
        if let Some(c) = e.get("c_var")? {
            params.c_var = c;
        }
        params.validate().map_err(range)?;

        let mut tolerance = QuadTolerance::default();
        if let Some(v) = e.get("rel_tol")? {
            tolerance.rel_tol = v;
        }
        if let Some(v) = e.get("abs_tol")? {
            tolerance.abs_tol = v;
        }
        if let Some(v) = e.get("max_subdivisions")? {
            tolerance.max_subdivisions = v;
        }
        tolerance.validate().map_err(range)?;

        let resolution = e.get("resolution")?.unwrap_or(256usize);
        if resolution < 8 {
            return Err(CliError::Range {
                key: "resolution".into(),
                msg: format!("need at least 8 nodes, got {resolution}"),
            });
        }
        let default_tol = if command == Some(Command::Optimize2d) { 1e-3 } else { 1e-10 };
        let tol = e.get("tol")?.unwrap_or(default_tol);
        if !(tol > 0.0) {
            return Err(CliError::Range { key: "tol".into(), msg: format!("must be positive, got {tol}") });
        }

        let eps_grid = match e.list::<f64>("eps_grid", ',')? {
            Some(grid) => {
                for &v in &grid {
                    positive("eps_grid", v)?;
                }
                grid
            }
            None => {
                let start = e.get("sweep_start")?.unwrap_or(-3.0);
                let end = e.get("sweep_end")?.unwrap_or(-6.0);
                let step = positive("sweep_step", e.get("sweep_step")?.unwrap_or(0.5))?;
                if !(end <= start) {
                    return Err(CliError::Range {
                        key: "sweep_end".into(),
                        msg: format!("sweep runs from 10^start down to 10^end, got start {start}, end {end}"),
                    });
                }
                onedim::geometric_grid(start, end, step)
            }
        };

        let modes = e.get("modes")?.unwrap_or(12usize);
        if modes == 0 || 2 * modes >= resolution {
            return Err(CliError::Range {
                key: "modes".into(),
                msg: format!("need 1 ≤ modes < resolution/2, got {modes} at resolution {resolution}"),
            });
        }
        let identities = match e.list::<String>("identities", ',')? {
            Some(names) => {
                names.iter().map(|n| n.parse::<IdentityKind>().map_err(range)).collect::<Result<Vec<_>, _>>()?
            }
            None => vec![IdentityKind::Minkowski, IdentityKind::Au2],
        };
        let points = match e.list::<String>("points", ';')? {
            Some(items) => items
                .iter()
                .map(|item| {
                    item.split(',')
                        .map(|c| c.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .ok()
                        .filter(|pt| pt.len() == n)
                        .ok_or_else(|| CliError::Range {
                            key: "points".into(),
                            msg: format!("`{item}` is not a point of dimension {n}"),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let init_mode = e.get("init_mode")?.unwrap_or(3usize);
        let init_amplitude: f64 = e.get("init_amplitude")?.unwrap_or(0.05);
        if !(init_amplitude.abs() < 1.0) {
            return Err(CliError::Range {
                key: "init_amplitude".into(),
                msg: format!("need |a| < 1, got {init_amplitude}"),
            });
        }

        Ok(RunConfig {
            command,
            params,
            input,
            geometry,
            out_dir: e.get("out_dir")?.unwrap_or_else(|| PathBuf::from(".")),
            tolerance,
            resolution,
            tol,
            eps_grid,
            modes,
            max_iter: e.get("max_iter")?.unwrap_or(500),
            initial_step: positive("initial_step", e.get("initial_step")?.unwrap_or(1e-2))?,
            identities,
            mu_gate: positive("mu_gate", e.get("mu_gate")?.unwrap_or(0.25))?,
            points,
            init_mode,
            init_amplitude,
            entries: e.raw(),
        })
    }

    /// The command, or a usage error when none was given.
    pub fn command(&self) -> Result<Command, CliError> {
        let c = self.command.ok_or_else(|| CliError::Usage("no command given".into()))?;
        if c.needs_geometry() && self.geometry.is_none() {
            return Err(CliError::Usage(format!("`{c}` needs an input geometry (`input` or --input)")));
        }
        Ok(c)
    }
}

/// Geometry JSON as written by the `sets` serializers.
pub fn read_geometry(path: &Path) -> Result<SetGeometry, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::NotFound(path.to_path_buf()),
        _ => CliError::Io(format!("{}: {e}", path.display())),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        origin: Origin::File { path: path.to_path_buf(), line: e.line() },
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(text: &str) -> Result<Entries, CliError> {
        Entries::parse(text, Path::new("test.cfg"))
    }

    #[test]
    fn params_from_text() {
        let cfg = RunConfig::from_entries(entries("s=0.5\nalpha=0.5\neps=1e-3").unwrap()).unwrap();
        assert_eq!((cfg.params.s, cfg.params.alpha, cfg.params.eps), (0.5, 0.5, 1e-3));
        assert_eq!(cfg.params.c_coupling, 2.0);
        assert_eq!(cfg.eps_grid.len(), 7);
    }

    #[test]
    fn range_error_names_the_key() {
        let err = RunConfig::from_entries(entries("s=1.5").unwrap()).unwrap_err();
        match &err {
            CliError::Range { key, msg } => {
                assert_eq!(key, "s");
                assert!(msg.contains("(0,1)"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = entries("# header\ns=0.5\n\nalpha 0.5\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { origin: Origin::File { line: 4, .. }, .. }), "{err:?}");
        let err = RunConfig::from_entries(entries("s=0.5\neps=abc").unwrap()).unwrap_err();
        assert!(err.to_string().contains("test.cfg:2"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = entries("s=0.5\nsigma=1").unwrap_err();
        assert!(matches!(err, CliError::UnknownKey { ref key, .. } if key == "sigma"));
    }

    #[test]
    fn comments_and_overrides() {
        let mut e = entries("s=0.25 # trailing\n# eps=9\neps=1e-2").unwrap();
        e.insert_assignment("eps=1e-4").unwrap();
        let cfg = RunConfig::from_entries(e).unwrap();
        assert_eq!((cfg.params.s, cfg.params.eps), (0.25, 1e-4));
    }

    #[test]
    fn missing_file_is_distinct() {
        let err = load_config(Path::new("/nonexistent/run.cfg")).unwrap_err();
        assert!(matches!(err, CliError::NotFound(_)));
    }

    #[test]
    fn dimension_defaults_follow_command() {
        let cfg = RunConfig::from_entries(entries("command=onedim-root\neps=1e-3").unwrap()).unwrap();
        assert_eq!(cfg.params.n, 1);
        let cfg = RunConfig::from_entries(entries("command=optimize2d").unwrap()).unwrap();
        assert_eq!((cfg.params.n, cfg.tol), (2, 1e-3));
    }

    #[test]
    fn lists() {
        let cfg = RunConfig::from_entries(
            entries("n=2\neps_grid=1e-3, 1e-4\nidentities=au1,lal\npoints=0,0; 0.1,0.2").unwrap(),
        )
        .unwrap();
        assert_eq!(cfg.eps_grid, vec![1e-3, 1e-4]);
        assert_eq!(cfg.identities, vec![IdentityKind::Au1, IdentityKind::Lal]);
        assert_eq!(cfg.points, vec![vec![0.0, 0.0], vec![0.1, 0.2]]);
        assert!(RunConfig::from_entries(entries("n=2\npoints=0.1").unwrap()).is_err());
    }
}
