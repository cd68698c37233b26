//! Flat `key = value` experiment configuration.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank lines
//! are ignored; keys may repeat only through `--set` overrides, which win.
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qgep_core::fem::PlaneCondition;
use qgep_core::seqopt::SweepOrder;
use qgep_core::statevector::AnsatzKind;
use qgep_core::{InitStrategy, OptimizerKind, PadRegime, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Poisson,
    Beam,
    CustomGep,
    BiasStudy,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Poisson => "poisson",
            ExperimentKind::Beam => "beam",
            ExperimentKind::CustomGep => "custom-gep",
            ExperimentKind::BiasStudy => "bias-study",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "poisson" => Ok(ExperimentKind::Poisson),
            "beam" => Ok(ExperimentKind::Beam),
            "custom-gep" => Ok(ExperimentKind::CustomGep),
            "bias-study" => Ok(ExperimentKind::BiasStudy),
            _ => Err("expected poisson | beam | custom-gep | bias-study".into()),
        }
    }
}

/// Where the pencil comes from; a bias study reuses one of the other three.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemSource {
    Poisson,
    Beam,
    CustomGep,
}

impl fmt::Display for ProblemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemSource::Poisson => "poisson",
            ProblemSource::Beam => "beam",
            ProblemSource::CustomGep => "custom-gep",
        })
    }
}

impl FromStr for ProblemSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "poisson" => Ok(ProblemSource::Poisson),
            "beam" => Ok(ProblemSource::Beam),
            "custom-gep" => Ok(ProblemSource::CustomGep),
            _ => Err("expected poisson | beam | custom-gep".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonParams {
    pub nodes: usize,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamParams {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub youngs: f64,
    pub poisson: f64,
    pub density: f64,
    pub plane: PlaneCondition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasParams {
    pub problem: ProblemSource,
    pub gate: usize,
    pub shots: Vec<u64>,
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ansatz: AnsatzKind,
    pub layers: usize,
    pub optimizer: OptimizerKind,
    pub init: InitStrategy,
    /// `None` picks the natural sense of the problem.
    pub sense: Option<Sense>,
    /// `None` is the exact backend.
    pub shots: Option<u64>,
    pub trials: usize,
    pub seed: u64,
    pub eps_tol: f64,
    pub max_iters: usize,
    pub reg_eps: Option<f64>,
    pub order: SweepOrder,
    /// 0 uses every available core.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub pad_regime: Option<PadRegime>,
    pub pencil_a: Option<PathBuf>,
    pub pencil_b: Option<PathBuf>,
    pub poisson: PoissonParams,
    pub beam: BeamParams,
    pub bias: BiasParams,
}

/// A config problem, pointing at the offending line when there is one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "config line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "config line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "config key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    /// `None` for command-line overrides.
    line: Option<usize>,
    base: PathBuf,
}

const KEYS: &[&str] = &[
    "experiment",
    "ansatz",
    "layers",
    "optimizer",
    "init",
    "sense",
    "shots",
    "trials",
    "seed",
    "eps_tol",
    "max_iters",
    "reg_eps",
    "sweep_order",
    "workers",
    "output_dir",
    "pad_regime",
    "pencil.a",
    "pencil.b",
    "poisson.nodes",
    "poisson.h",
    "beam.width",
    "beam.height",
    "beam.nx",
    "beam.ny",
    "beam.youngs",
    "beam.poisson",
    "beam.density",
    "beam.plane",
    "bias.problem",
    "bias.gate",
    "bias.shots",
    "bias.repeats",
];

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.0.get(key).and_then(|e| e.line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|err: T::Err| self.err(key, format!("invalid value `{}`: {err}", e.value))),
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(e) => parse_number(&e.value).ok_or_else(|| self.err(key, format!("invalid number `{}`", e.value))),
        }
    }

    /// `auto` (or absence) maps to `None`.
    fn auto<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            Some(e) if e.value != "auto" => e
                .value
                .parse()
                .map(Some)
                .map_err(|err: T::Err| self.err(key, format!("invalid value `{}`: {err}", e.value))),
            _ => Ok(None),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.0.get(key).map(|e| {
            if e.base.as_os_str().is_empty() || e.base == Path::new(".") {
                PathBuf::from(&e.value)
            } else {
                e.base.join(&e.value)
            }
        })
    }
}

/// Plain floats or a ratio `a/b`, so heights like `3/17` can be written exactly.
pub fn parse_number(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_lines(text: &str, base: &Path) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError {
                line: Some(line),
                key: Some(k.into()),
                message: "unknown key".into(),
            });
        }
        if map.contains_key(k) {
            return Err(ConfigError {
                line: Some(line),
                key: Some(k.into()),
                message: "duplicate key".into(),
            });
        }
        map.insert(
            k.to_string(),
            Entry {
                value: v.to_string(),
                line: Some(line),
                base: base.to_path_buf(),
            },
        );
    }
    Ok(map)
}

impl ExperimentConfig {
    /// Parses config text, then applies `key=value` overrides.
    pub fn parse(text: &str, base: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut map = parse_lines(text, base)?;
        for o in overrides {
            let Some((k, v)) = o.split_once('=') else {
                return Err(ConfigError {
                    line: None,
                    key: None,
                    message: format!("override `{o}` is not `key=value`"),
                });
            };
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(ConfigError {
                    line: None,
                    key: Some(k.into()),
                    message: "unknown key".into(),
                });
            }
            map.insert(
                k.to_string(),
                Entry {
                    value: v.trim().to_string(),
                    line: None,
                    base: PathBuf::from("."),
                },
            );
        }
        Self::from_entries(&Entries(map))
    }

    pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(Self::parse(&text, base, overrides)?)
    }

    fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let experiment: ExperimentKind = match e.0.get("experiment") {
            Some(_) => e.get("experiment", ExperimentKind::Poisson)?,
            None => {
                return Err(ConfigError {
                    line: None,
                    key: Some("experiment".into()),
                    message: "missing required key".into(),
                })
            }
        };
        let shots = match e.0.get("shots").map(|x| x.value.as_str()) {
            None | Some("exact") => None,
            Some(_) => Some(e.get::<u64>("shots", 0)?),
        };
        let order = match e.0.get("sweep_order").map(|x| x.value.as_str()) {
            None | Some("ascending") => SweepOrder::Ascending,
            Some("random") => SweepOrder::RandomPermutation,
            Some(other) => return Err(e.err("sweep_order", format!("`{other}`: expected ascending | random"))),
        };
        let reg_eps = match e.0.get("reg_eps").map(|x| x.value.as_str()) {
            None | Some("auto") => None,
            Some(_) => Some(e.number("reg_eps", 0.0)?),
        };
        let bias_shots = match e.0.get("bias.shots") {
            None => vec![100, 1_000, 10_000],
            Some(entry) => entry
                .value
                .split(',')
                .map(|t| t.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|err| e.err("bias.shots", format!("invalid shot list `{}`: {err}", entry.value)))?,
        };

        let cfg = ExperimentConfig {
            experiment,
            ansatz: e.get("ansatz", AnsatzKind::AlternatingLayered)?,
            layers: e.get("layers", 2)?,
            optimizer: e.get("optimizer", OptimizerKind::Fqs)?,
            init: e.get("init", InitStrategy::ComplexSpace)?,
            sense: e.auto("sense")?,
            shots,
            trials: e.get("trials", 30)?,
            seed: e.get("seed", 0)?,
            eps_tol: e.number("eps_tol", 1e-6)?,
            max_iters: e.get("max_iters", 200)?,
            reg_eps,
            order,
            workers: e.get("workers", 0)?,
            output_dir: e.path("output_dir").unwrap_or_else(|| PathBuf::from("out")),
            pad_regime: e.auto("pad_regime")?,
            pencil_a: e.path("pencil.a"),
            pencil_b: e.path("pencil.b"),
            poisson: PoissonParams {
                nodes: e.get("poisson.nodes", 32)?,
                h: e.number("poisson.h", 1.0)?,
            },
            beam: BeamParams {
                width: e.number("beam.width", 1.0)?,
                height: e.number("beam.height", 3.0 / 17.0)?,
                nx: e.get("beam.nx", 18)?,
                ny: e.get("beam.ny", 4)?,
                youngs: e.number("beam.youngs", 200e9)?,
                poisson: e.number("beam.poisson", 0.3)?,
                density: e.number("beam.density", 7850.0)?,
                plane: e.get("beam.plane", PlaneCondition::Stress)?,
            },
            bias: BiasParams {
                problem: e.get("bias.problem", ProblemSource::CustomGep)?,
                gate: e.get("bias.gate", 0)?,
                shots: bias_shots,
                repeats: e.get("bias.repeats", 500)?,
            },
        };
        cfg.validate(e)?;
        Ok(cfg)
    }

    fn validate(&self, e: &Entries) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(e.err("trials", "must be at least 1"));
        }
        if !(self.eps_tol > 0.0) {
            return Err(e.err("eps_tol", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(e.err("max_iters", "must be at least 1"));
        }
        if self.layers == 0 {
            return Err(e.err("layers", "must be at least 1"));
        }
        if self.shots == Some(0) {
            return Err(e.err("shots", "must be positive or `exact`"));
        }
        if let Some(eps) = self.reg_eps {
            if !(eps > 0.0) {
                return Err(e.err("reg_eps", "must be positive or `auto`"));
            }
        }
        if self.bias.repeats < 2 {
            return Err(e.err("bias.repeats", "must be at least 2"));
        }
        if self.bias.shots.is_empty() || self.bias.shots.contains(&0) {
            return Err(e.err("bias.shots", "shot counts must be positive"));
        }
        if self.source() == ProblemSource::CustomGep {
            for (key, path) in [("pencil.a", &self.pencil_a), ("pencil.b", &self.pencil_b)] {
                match path {
                    None => return Err(e.err(key, "required for custom pencils")),
                    Some(p) if !p.is_file() => {
                        return Err(e.err(key, format!("file {} does not exist", p.display())))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Problem that the experiment optimizes or samples.
    pub fn source(&self) -> ProblemSource {
        match self.experiment {
            ExperimentKind::Poisson => ProblemSource::Poisson,
            ExperimentKind::Beam => ProblemSource::Beam,
            ExperimentKind::CustomGep => ProblemSource::CustomGep,
            ExperimentKind::BiasStudy => self.bias.problem,
        }
    }

    /// Every key with its resolved value, in the documented key order.
    pub fn echo(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.to_string()),
            ("ansatz", self.ansatz.to_string()),
            ("layers", self.layers.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("init", self.init.to_string()),
            ("sense", opt(self.sense.map(|s| s.to_string()))),
            ("shots", self.shots.map_or("exact".into(), |s| s.to_string())),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("eps_tol", self.eps_tol.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("reg_eps", opt(self.reg_eps.map(|x| x.to_string()))),
            (
                "sweep_order",
                match self.order {
                    SweepOrder::Ascending => "ascending".into(),
                    SweepOrder::RandomPermutation => "random".into(),
                },
            ),
            ("workers", self.workers.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("pad_regime", opt(self.pad_regime.map(|r| r.to_string()))),
            ("pencil.a", path(&self.pencil_a)),
            ("pencil.b", path(&self.pencil_b)),
            ("poisson.nodes", self.poisson.nodes.to_string()),
            ("poisson.h", self.poisson.h.to_string()),
            ("beam.width", self.beam.width.to_string()),
            ("beam.height", self.beam.height.to_string()),
            ("beam.nx", self.beam.nx.to_string()),
            ("beam.ny", self.beam.ny.to_string()),
            ("beam.youngs", self.beam.youngs.to_string()),
            ("beam.poisson", self.beam.poisson.to_string()),
            ("beam.density", self.beam.density.to_string()),
            ("beam.plane", self.beam.plane.to_string()),
            ("bias.problem", self.bias.problem.to_string()),
            ("bias.gate", self.bias.gate.to_string()),
            (
                "bias.shots",
                self.bias.shots.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
            ),
            ("bias.repeats", self.bias.repeats.to_string()),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
