use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analog_pm::DEFAULT_OUTER_CAP;
use crate::codebook::MAX_BITS;
use crate::config::DEFAULT_SPACING;
use crate::design::Algorithm;
use crate::multiuser::Engine;
use crate::{Error, MultiuserConfig, Result, SystemConfig};

/// Largest trial count accepted from a configuration.
pub const MAX_TRIALS: usize = 10_000_000;
/// Largest array size accepted for swept antenna counts.
pub const MAX_ANTENNAS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SuSnrSweep,
    SuAntennaSweep,
    SuIterationTrace,
    SuBitSweep,
    SuOracleCompare,
    MuSnrSweep,
    MuUserSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SuSnrSweep,
        ExperimentKind::SuAntennaSweep,
        ExperimentKind::SuIterationTrace,
        ExperimentKind::SuBitSweep,
        ExperimentKind::SuOracleCompare,
        ExperimentKind::MuSnrSweep,
        ExperimentKind::MuUserSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SuSnrSweep => "su-snr-sweep",
            ExperimentKind::SuAntennaSweep => "su-antenna-sweep",
            ExperimentKind::SuIterationTrace => "su-iteration-trace",
            ExperimentKind::SuBitSweep => "su-bit-sweep",
            ExperimentKind::SuOracleCompare => "su-oracle-compare",
            ExperimentKind::MuSnrSweep => "mu-snr-sweep",
            ExperimentKind::MuUserSweep => "mu-user-sweep",
        }
    }

    pub fn is_multiuser(self) -> bool {
        matches!(self, ExperimentKind::MuSnrSweep | ExperimentKind::MuUserSweep)
    }

    /// Name of the swept quantity, as written to the `sweep_name` column.
    pub fn sweep_name(self) -> &'static str {
        match self {
            ExperimentKind::SuSnrSweep | ExperimentKind::SuOracleCompare | ExperimentKind::MuSnrSweep => "snr_db",
            ExperimentKind::SuAntennaSweep => "n_antennas",
            ExperimentKind::SuIterationTrace => "outer_iterations",
            ExperimentKind::SuBitSweep => "bits",
            ExperimentKind::MuUserSweep => "users",
        }
    }

    fn sweeps_integer(self) -> bool {
        !matches!(self.sweep_name(), "snr_db")
    }

    pub fn default_base(self) -> BaseConfig {
        let su = |n: usize, ns: usize, bits: u32| BaseConfig {
            n_tx: n,
            n_rx: n,
            n_streams: ns,
            users: 1,
            bits,
            n_paths: 6,
            snr_db: 20.0,
            seed: 1,
            spacing_over_lambda: DEFAULT_SPACING,
        };
        match self {
            ExperimentKind::SuSnrSweep => su(64, 6, 2),
            ExperimentKind::SuAntennaSweep | ExperimentKind::SuIterationTrace | ExperimentKind::SuBitSweep => {
                su(64, 4, 2)
            }
            ExperimentKind::SuOracleCompare => su(8, 1, 1),
            ExperimentKind::MuSnrSweep | ExperimentKind::MuUserSweep => BaseConfig {
                n_tx: 16,
                n_rx: 64,
                users: 4,
                n_streams: 1,
                ..su(0, 1, 2)
            },
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            ExperimentKind::SuSnrSweep | ExperimentKind::MuSnrSweep => {
                vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
            }
            ExperimentKind::SuOracleCompare => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            ExperimentKind::SuAntennaSweep => vec![16.0, 32.0, 48.0, 64.0],
            ExperimentKind::SuIterationTrace => (1..=8).map(f64::from).collect(),
            ExperimentKind::SuBitSweep => (1..=6).map(f64::from).collect(),
            ExperimentKind::MuUserSweep => vec![2.0, 4.0, 6.0, 8.0],
        }
    }

    pub fn default_methods(self) -> Vec<Method> {
        use Method::*;
        match self {
            ExperimentKind::SuSnrSweep | ExperimentKind::SuAntennaSweep => vec![
                Hybrid(Algorithm::Pm),
                Hybrid(Algorithm::OneBit),
                Hybrid(Algorithm::QuantizedBaseline),
                FullDigital,
            ],
            ExperimentKind::SuIterationTrace => vec![Hybrid(Algorithm::Pm), Hybrid(Algorithm::OneBit)],
            ExperimentKind::SuBitSweep => {
                vec![Hybrid(Algorithm::Pm), Hybrid(Algorithm::QuantizedBaseline), FullDigital]
            }
            ExperimentKind::SuOracleCompare => vec![
                Hybrid(Algorithm::OneBit),
                Hybrid(Algorithm::Pm),
                Hybrid(Algorithm::Exhaustive),
                FullDigital,
            ],
            ExperimentKind::MuSnrSweep | ExperimentKind::MuUserSweep => vec![
                Multiuser {
                    engine: Engine::PhaseMatching,
                    matched_filter: false,
                },
                Multiuser {
                    engine: Engine::OneBit,
                    matched_filter: false,
                },
                Multiuser {
                    engine: Engine::PhaseMatching,
                    matched_filter: true,
                },
            ],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// A method evaluated per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Single-user hybrid design followed by the SVD baseband stage.
    Hybrid(Algorithm),
    /// Unconstrained SVD beamforming (single user only).
    FullDigital,
    /// Successive multiuser design; `matched_filter` replaces the MMSE
    /// baseband combiners by `w_BB,k = e_k`.
    Multiuser { engine: Engine, matched_filter: bool },
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Hybrid(a) => a.name().to_string(),
            Method::FullDigital => "full-digital".to_string(),
            Method::Multiuser { engine, matched_filter } => {
                let base = match engine {
                    Engine::PhaseMatching => "pm",
                    Engine::OneBit => "onebit",
                };
                if matched_filter {
                    format!("{base}-matched-filter")
                } else {
                    base.to_string()
                }
            }
        }
    }

    /// Parses a method name in the context of an experiment kind.
    pub fn parse(name: &str, kind: ExperimentKind) -> Result<Self> {
        let unknown = || Error::Config(format!("method `{name}` is not available for {kind}"));
        if kind.is_multiuser() {
            let (base, matched_filter) = match name.strip_suffix("-matched-filter") {
                Some(b) => (b, true),
                None => (name, false),
            };
            let engine = match base {
                "pm" => Engine::PhaseMatching,
                "onebit" => Engine::OneBit,
                _ => return Err(unknown()),
            };
            Ok(Method::Multiuser { engine, matched_filter })
        } else if name == "full-digital" {
            Ok(Method::FullDigital)
        } else {
            name.parse::<Algorithm>().map(Method::Hybrid).map_err(|_| unknown())
        }
    }

    /// Resolution the method runs at for a configured `bits`.
    pub fn effective_bits(self, bits: u32) -> u32 {
        match self {
            Method::Hybrid(a) => a.effective_bits(bits),
            Method::Multiuser {
                engine: Engine::OneBit, ..
            } => 1,
            _ => bits,
        }
    }
}

/// Base configuration shared by all sweep points. Single-user kinds ignore
/// `users`; multiuser kinds ignore `n_streams` (one stream per user) and
/// read `n_tx` as the per-user array and `n_rx` as the base-station array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_streams: usize,
    pub users: usize,
    pub bits: u32,
    pub n_paths: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub spacing_over_lambda: f64,
}

/// Optional form of [`BaseConfig`] as read from a file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseSection {
    n_tx: Option<usize>,
    n_rx: Option<usize>,
    n_streams: Option<usize>,
    users: Option<usize>,
    bits: Option<u32>,
    n_paths: Option<usize>,
    snr_db: Option<f64>,
    seed: Option<u64>,
    spacing_over_lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    kind: String,
    trials: Option<usize>,
    algorithms: Option<Vec<String>>,
    workers: Option<usize>,
    record_timing: Option<bool>,
    #[serde(default)]
    base: BaseSection,
    #[serde(default)]
    sweep: SweepSection,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub base: BaseConfig,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Worker threads; `None` uses one per available core.
    pub workers: Option<usize>,
    /// Measure design wall time. Disable for byte-reproducible output.
    pub record_timing: bool,
}

/// Configuration of a single sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointConfig {
    SingleUser { config: SystemConfig, outer_cap: usize },
    Multiuser(MultiuserConfig),
}

/// Command-line overrides; `None` keeps the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub snr_list: Option<Vec<f64>>,
    pub sweep_values: Option<Vec<f64>>,
    pub bits: Option<u32>,
    pub n_tx: Option<usize>,
    pub n_rx: Option<usize>,
    pub n_streams: Option<usize>,
    pub users: Option<usize>,
    pub algorithms: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub record_timing: Option<bool>,
}

impl ExperimentSpec {
    /// Defaults for `kind`: 200 trials, all cores, timing on.
    pub fn defaults(kind: ExperimentKind) -> Self {
        Self {
            kind,
            base: kind.default_base(),
            values: kind.default_values(),
            trials: 200,
            methods: kind.default_methods(),
            workers: None,
            record_timing: true,
        }
    }

    /// Parses and validates a TOML experiment description. Absent fields
    /// take the defaults of the named kind.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let kind: ExperimentKind = file.kind.parse()?;
        let mut spec = Self::defaults(kind);
        let b = file.base;
        let base = &mut spec.base;
        base.n_tx = b.n_tx.unwrap_or(base.n_tx);
        base.n_rx = b.n_rx.unwrap_or(base.n_rx);
        base.n_streams = b.n_streams.unwrap_or(base.n_streams);
        base.users = b.users.unwrap_or(base.users);
        base.bits = b.bits.unwrap_or(base.bits);
        base.n_paths = b.n_paths.unwrap_or(base.n_paths);
        base.snr_db = b.snr_db.unwrap_or(base.snr_db);
        base.seed = b.seed.unwrap_or(base.seed);
        base.spacing_over_lambda = b.spacing_over_lambda.unwrap_or(base.spacing_over_lambda);
        if let Some(v) = file.sweep.values {
            spec.values = v;
        }
        if let Some(t) = file.trials {
            spec.trials = t;
        }
        if let Some(names) = file.algorithms {
            spec.methods = parse_methods(&names, kind)?;
        }
        spec.workers = file.workers.or(spec.workers);
        spec.record_timing = file.record_timing.unwrap_or(spec.record_timing);
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Applies command-line overrides and revalidates.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.seed {
            self.base.seed = s;
        }
        if let Some(b) = o.bits {
            self.base.bits = b;
        }
        if let Some(n) = o.n_tx {
            self.base.n_tx = n;
        }
        if let Some(n) = o.n_rx {
            self.base.n_rx = n;
        }
        if let Some(n) = o.n_streams {
            self.base.n_streams = n;
        }
        if let Some(k) = o.users {
            self.base.users = k;
        }
        if let Some(list) = &o.snr_list {
            if self.kind.sweep_name() == "snr_db" {
                self.values = list.clone();
            } else if let [single] = list.as_slice() {
                self.base.snr_db = *single;
            } else {
                return Err(Error::Config(format!(
                    "{} sweeps {}; --snr-list takes a single value here",
                    self.kind,
                    self.kind.sweep_name()
                )));
            }
        }
        if let Some(v) = &o.sweep_values {
            self.values = v.clone();
        }
        if let Some(names) = &o.algorithms {
            self.methods = parse_methods(names, self.kind)?;
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(t) = o.record_timing {
            self.record_timing = t;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 || self.trials > MAX_TRIALS {
            return fail(format!("trials must be in 1..={MAX_TRIALS}, got {}", self.trials));
        }
        if self.values.is_empty() {
            return fail("sweep values must not be empty".into());
        }
        if self.methods.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return fail(format!("algorithm `{}` listed twice", m.name()));
            }
            // re-parse to reject methods built programmatically for the wrong kind
            Method::parse(&m.name(), self.kind)?;
        }
        if self.workers == Some(0) {
            return fail("workers must be positive".into());
        }
        for &v in &self.values {
            self.point(v)?;
        }
        Ok(())
    }

    /// Resolves the configuration of one sweep point.
    pub fn point(&self, value: f64) -> Result<PointConfig> {
        let b = &self.base;
        let integer = |what: &str, max: f64| -> Result<usize> {
            if value.fract() != 0.0 || !(value >= 1.0 && value <= max) {
                return Err(Error::Config(format!(
                    "{what} must be an integer in 1..={max}, got {value}"
                )));
            }
            Ok(value as usize)
        };
        if !value.is_finite() {
            return Err(Error::Config(format!("sweep value {value} is not finite")));
        }
        if self.kind.sweeps_integer() {
            integer(self.kind.sweep_name(), MAX_ANTENNAS as f64)?;
        }
        for n in [b.n_tx, b.n_rx] {
            if n > MAX_ANTENNAS {
                return Err(Error::Config(format!("antenna count {n} exceeds {MAX_ANTENNAS}")));
            }
        }
        if self.kind.is_multiuser() {
            let mut cfg = MultiuserConfig {
                n_tx: b.n_tx,
                n_rx: b.n_rx,
                users: b.users,
                bits: b.bits,
                n_paths: b.n_paths,
                snr_db: b.snr_db,
                seed: b.seed,
                spacing_over_lambda: b.spacing_over_lambda,
            };
            match self.kind {
                ExperimentKind::MuSnrSweep => cfg.snr_db = value,
                _ => cfg.users = value as usize,
            }
            check_bits(cfg.bits)?;
            cfg.validate()?;
            Ok(PointConfig::Multiuser(cfg))
        } else {
            let mut cfg = SystemConfig::new(b.n_tx, b.n_rx, b.n_streams, b.bits)
                .with_paths(b.n_paths)
                .with_snr_db(b.snr_db)
                .with_seed(b.seed);
            cfg.spacing_over_lambda = b.spacing_over_lambda;
            let mut outer_cap = DEFAULT_OUTER_CAP;
            match self.kind {
                ExperimentKind::SuSnrSweep | ExperimentKind::SuOracleCompare => cfg.snr_db = value,
                ExperimentKind::SuAntennaSweep => {
                    cfg.n_tx = value as usize;
                    cfg.n_rx = value as usize;
                }
                ExperimentKind::SuIterationTrace => outer_cap = value as usize,
                ExperimentKind::SuBitSweep => cfg.bits = integer("bits", f64::from(MAX_BITS))? as u32,
                _ => unreachable!("multiuser kinds handled above"),
            }
            check_bits(cfg.bits)?;
            cfg.validate()?;
            Ok(PointConfig::SingleUser { config: cfg, outer_cap })
        }
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::Config(format!("bits must be in 1..={MAX_BITS}, got {bits}")));
    }
    Ok(())
}

fn parse_methods(names: &[String], kind: ExperimentKind) -> Result<Vec<Method>> {
    names.iter().map(|n| Method::parse(n.trim(), kind)).collect()
}
