//! Experiment configuration file.
//!
//! A flat `key = value` file. Every key is optional and unknown keys are
//! rejected. Example:
//!
//! ```text
//! # model
//! classes = 2
//! features = 40
//! profile = geometric:1.25:0.95     # or a comma-separated list of gains
//! # model_file = model.txt          # overrides classes/features/profile
//! model_seed = 0                    # centroid draw for three or more classes
//!
//! # channel
//! channel = gaussian                # or fading
//! bandwidth_hz = 20000
//! slot_s = 0.01
//! snr_db = 4
//! bits_per_feature = 64
//! features_per_slot = 5             # fading only
//! outage_prob = 0.1                 # fading only
//!
//! # control
//! schemes = progressftx, random, oneshot
//! horizon = 5
//! c0 = logspace(-3, 0, 10)          # or a list
//! h_target = 0.05                   # optional early stop
//! h0 = 0.5, 0.3, 0.2, 0.1, 0.05     # one-shot targets
//! bound_fit = fitted                # or fixed
//! quad_tol = 1e-9
//!
//! # run
//! trials = 1000
//! seed = 1
//! workers = 1                       # 0 uses every core
//! out = results.csv
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::bounds::{BoundFit, DEFAULT_QUAD_TOL};
use crate::channel::{db_to_linear, ChannelModel};
use crate::error::{Error, Result};
use crate::kv::{Entry, KvFile};
use crate::statmodel::{
    geometric_profile, GmModel, DEFAULT_DIM, DEFAULT_PROFILE_FIRST, DEFAULT_PROFILE_RATIO,
};

const KEYS: &[&str] = &[
    "classes",
    "features",
    "profile",
    "model_file",
    "model_seed",
    "channel",
    "bandwidth_hz",
    "slot_s",
    "snr_db",
    "bits_per_feature",
    "features_per_slot",
    "outage_prob",
    "schemes",
    "horizon",
    "c0",
    "h_target",
    "h0",
    "bound_fit",
    "quad_tol",
    "trials",
    "seed",
    "workers",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeName {
    ProgressFtx,
    Random,
    OneShot,
}

impl SchemeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeName::ProgressFtx => "progressftx",
            SchemeName::Random => "random",
            SchemeName::OneShot => "oneshot",
        }
    }
}

impl std::str::FromStr for SchemeName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "progressftx" => Ok(SchemeName::ProgressFtx),
            "random" => Ok(SchemeName::Random),
            "oneshot" => Ok(SchemeName::OneShot),
            other => Err(format!("unknown scheme `{other}` (expected progressftx, random or oneshot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Synthetic {
        classes: usize,
        profile: Vec<f64>,
        seed: u64,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub channel: ChannelModel,
    pub schemes: Vec<SchemeName>,
    pub horizon: usize,
    pub c0: Vec<f64>,
    pub h_target: Option<f64>,
    pub h0: Vec<f64>,
    pub bound_fit: BoundFit,
    pub quad_tol: f64,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelSpec::Synthetic {
                classes: 2,
                profile: geometric_profile(DEFAULT_PROFILE_FIRST, DEFAULT_PROFILE_RATIO, DEFAULT_DIM),
                seed: 0,
            },
            channel: ChannelModel::Gaussian {
                bandwidth_hz: 20_000.0,
                slot_s: 0.01,
                snr: db_to_linear(4.0),
                bits_per_feature: 64.0,
            },
            schemes: vec![SchemeName::ProgressFtx, SchemeName::Random, SchemeName::OneShot],
            horizon: 5,
            c0: logspace(-3.0, 0.0, 10),
            h_target: None,
            h0: vec![0.5, 0.3, 0.2, 0.1, 0.05],
            bound_fit: BoundFit::default(),
            quad_tol: DEFAULT_QUAD_TOL,
            trials: 1000,
            seed: 1,
            workers: 1,
            out: None,
        }
    }
}

/// `n` points evenly spaced in `log10` from `10^a` to `10^b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![10f64.powf(a)],
        _ => (0..n)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&path.display().to_string(), &text, base)
    }

    /// Relative `model_file` and `out` paths are resolved against `base`.
    pub fn parse(origin: &str, text: &str, base: &Path) -> Result<Self> {
        let kv = KvFile::parse(origin, text)?;
        kv.reject_unknown(KEYS)?;
        let mut cfg = ExperimentConfig::default();

        if let Some(e) = kv.get("model_file") {
            for other in ["classes", "features", "profile", "model_seed"] {
                if let Some(o) = kv.get(other) {
                    return Err(kv.error(o, format!("`{other}` conflicts with `model_file`")));
                }
            }
            let path = base.join(&e.value);
            if !path.is_file() {
                return Err(kv.error(e, format!("model file `{}` not found", path.display())));
            }
            cfg.model = ModelSpec::File(path);
        } else {
            let classes = opt(&kv, "classes")?.unwrap_or(2usize);
            if classes < 2 {
                return Err(kv.error(kv.get("classes").unwrap(), "need at least 2 classes"));
            }
            let features: Option<usize> = opt(&kv, "features")?;
            let profile = match kv.get("profile") {
                Some(e) => parse_profile(&kv, e, features)?,
                None => geometric_profile(
                    DEFAULT_PROFILE_FIRST,
                    DEFAULT_PROFILE_RATIO,
                    features.unwrap_or(DEFAULT_DIM),
                ),
            };
            if profile.is_empty() {
                return Err(Error::ConfigValue("gain profile is empty".into()));
            }
            cfg.model = ModelSpec::Synthetic {
                classes,
                profile,
                seed: opt(&kv, "model_seed")?.unwrap_or(0),
            };
        }

        cfg.channel = parse_channel(&kv)?;

        if let Some(e) = kv.get("schemes") {
            cfg.schemes = e
                .value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<SchemeName>().map_err(|m| kv.error(e, m)))
                .collect::<Result<_>>()?;
            if cfg.schemes.is_empty() {
                return Err(kv.error(e, "no schemes listed"));
            }
        }
        if let Some(h) = opt(&kv, "horizon")? {
            cfg.horizon = h;
        }
        if let Some(e) = kv.get("c0") {
            cfg.c0 = parse_grid(&kv, e)?;
            if let Some(bad) = cfg.c0.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
                return Err(kv.error(e, format!("c0 values must be positive, got {bad}")));
            }
        }
        cfg.h_target = opt(&kv, "h_target")?;
        if let Some(e) = kv.get("h0") {
            cfg.h0 = parse_grid(&kv, e)?;
            if let Some(bad) = cfg.h0.iter().find(|h| !(**h > 0.0)) {
                return Err(kv.error(e, format!("h0 values must be positive, got {bad}")));
            }
        }
        if let Some(e) = kv.get("bound_fit") {
            cfg.bound_fit = e.value.parse().map_err(|m: String| kv.error(e, m))?;
        }
        if let Some(t) = opt(&kv, "quad_tol")? {
            cfg.quad_tol = t;
        }
        if let Some(t) = opt(&kv, "trials")? {
            cfg.trials = t;
        }
        if let Some(s) = opt(&kv, "seed")? {
            cfg.seed = s;
        }
        if let Some(w) = opt(&kv, "workers")? {
            cfg.workers = w;
        }
        if let Some(e) = kv.get("out") {
            cfg.out = Some(base.join(&e.value));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::ConfigValue("trials must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::ConfigValue("horizon must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::ConfigValue("no schemes configured".into()));
        }
        let uses_c0 = self.schemes.iter().any(|s| *s != SchemeName::OneShot);
        if uses_c0 && self.c0.is_empty() {
            return Err(Error::ConfigValue("c0 grid is empty".into()));
        }
        if self.schemes.contains(&SchemeName::OneShot) && self.h0.is_empty() {
            return Err(Error::ConfigValue("h0 grid is empty".into()));
        }
        if let Some(t) = self.h_target {
            if !(t >= 0.0) {
                return Err(Error::ConfigValue(format!("h_target must be non-negative, got {t}")));
            }
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::ConfigValue("quad_tol must be positive".into()));
        }
        self.channel.features_per_slot()?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<GmModel> {
        match &self.model {
            ModelSpec::File(path) => GmModel::read(path),
            ModelSpec::Synthetic {
                classes,
                profile,
                seed,
            } => GmModel::synthesize(*classes, profile, &mut ChaCha8Rng::seed_from_u64(*seed)),
        }
    }

    /// Every setting that affects results except `seed`, one `key = value`
    /// per line, with the model spelled out in full.
    pub fn canonical(&self, model: &GmModel) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        match self.channel {
            ChannelModel::Gaussian {
                bandwidth_hz,
                slot_s,
                snr,
                bits_per_feature,
            } => {
                writeln!(s, "channel = gaussian").unwrap();
                writeln!(s, "bandwidth_hz = {bandwidth_hz:e}").unwrap();
                writeln!(s, "slot_s = {slot_s:e}").unwrap();
                writeln!(s, "snr = {snr:e}").unwrap();
                writeln!(s, "bits_per_feature = {bits_per_feature:e}").unwrap();
            }
            ChannelModel::Fading {
                features_per_slot,
                outage_prob,
            } => {
                writeln!(s, "channel = fading").unwrap();
                writeln!(s, "features_per_slot = {features_per_slot}").unwrap();
                writeln!(s, "outage_prob = {outage_prob:e}").unwrap();
            }
        }
        let schemes: Vec<&str> = self.schemes.iter().map(SchemeName::as_str).collect();
        writeln!(s, "schemes = {}", schemes.join(",")).unwrap();
        writeln!(s, "horizon = {}", self.horizon).unwrap();
        writeln!(s, "c0 = {}", list(&self.c0)).unwrap();
        match self.h_target {
            Some(t) => writeln!(s, "h_target = {t:e}").unwrap(),
            None => writeln!(s, "h_target = none").unwrap(),
        }
        writeln!(s, "h0 = {}", list(&self.h0)).unwrap();
        writeln!(s, "bound_fit = {}", self.bound_fit).unwrap();
        writeln!(s, "quad_tol = {:e}", self.quad_tol).unwrap();
        writeln!(s, "trials = {}", self.trials).unwrap();
        s.push_str(&model.to_text());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self, model: &GmModel) -> String {
        let digest = Sha256::digest(self.canonical(model).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn opt<T: std::str::FromStr>(kv: &KvFile, key: &str) -> Result<Option<T>> {
    kv.get(key).map(|e| kv.parse_value(e)).transpose()
}

fn parse_profile(kv: &KvFile, e: &Entry, features: Option<usize>) -> Result<Vec<f64>> {
    if let Some(rest) = e.value.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').map(str::trim).collect();
        let [first, ratio] = parts[..] else {
            return Err(kv.error(e, "expected `geometric:<first>:<ratio>`"));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| kv.error(e, format!("`{s}` is not a number")))
        };
        return Ok(geometric_profile(num(first)?, num(ratio)?, features.unwrap_or(DEFAULT_DIM)));
    }
    let profile = kv.parse_list(e)?;
    if let Some(n) = features {
        if n != profile.len() {
            return Err(kv.error(
                e,
                format!("profile has {} entries but features = {n}", profile.len()),
            ));
        }
    }
    if let Some(bad) = profile.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(kv.error(e, format!("gains must be non-negative, got {bad}")));
    }
    Ok(profile)
}

/// A comma-separated list or `logspace(a, b, n)`.
fn parse_grid(kv: &KvFile, e: &Entry) -> Result<Vec<f64>> {
    let v = e.value.trim();
    if let Some(inner) = v.strip_prefix("logspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [a, b, n] = parts[..] else {
            return Err(kv.error(e, "expected `logspace(a, b, n)`"));
        };
        let bad = |s: &str| kv.error(e, format!("bad logspace argument `{s}`"));
        let a: f64 = a.parse().map_err(|_| bad(a))?;
        let b: f64 = b.parse().map_err(|_| bad(b))?;
        let n: usize = n.parse().map_err(|_| bad(n))?;
        return Ok(logspace(a, b, n));
    }
    kv.parse_list(e)
}

fn parse_channel(kv: &KvFile) -> Result<ChannelModel> {
    let kind = kv.get("channel").map_or("gaussian", |e| e.value.as_str());
    let gaussian_keys = ["bandwidth_hz", "slot_s", "snr_db", "bits_per_feature"];
    let fading_keys = ["features_per_slot", "outage_prob"];
    let (ignored, build): (&[&str], fn(&KvFile) -> Result<ChannelModel>) = match kind {
        "gaussian" => (&fading_keys, |kv| {
            let b = opt(kv, "bandwidth_hz")?.unwrap_or(20_000.0);
            let t = opt(kv, "slot_s")?.unwrap_or(0.01);
            let snr_db = opt(kv, "snr_db")?.unwrap_or(4.0);
            let q = opt(kv, "bits_per_feature")?.unwrap_or(64.0);
            ChannelModel::gaussian(b, t, db_to_linear(snr_db), q)
        }),
        "fading" => (&gaussian_keys, |kv| {
            let y0 = opt(kv, "features_per_slot")?.unwrap_or(5);
            let p = opt(kv, "outage_prob")?.unwrap_or(0.1);
            ChannelModel::fading(y0, p)
        }),
        other => {
            let e = kv.get("channel").unwrap();
            return Err(kv.error(e, format!("unknown channel `{other}` (expected gaussian or fading)")));
        }
    };
    if let Some(e) = ignored.iter().find_map(|k| kv.get(k)) {
        return Err(kv.error(e, format!("`{}` does not apply to a {kind} channel", e.key)));
    }
    build(kv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse("test.cfg", text, Path::new("."))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.channel.features_per_slot().unwrap(), 5);
    }

    #[test]
    fn unknown_key_names_its_line() {
        let err = parse("trials = 5\nbogus = 1\n").unwrap_err();
        assert_eq!(err.to_string(), "test.cfg:2: unknown key `bogus`");
    }

    #[test]
    fn grids() {
        let cfg = parse("c0 = logspace(-2, 0, 3)\nh0 = 0.4, 0.2").unwrap();
        assert_eq!(cfg.c0.len(), 3);
        assert!((cfg.c0[0] - 0.01).abs() < 1e-15 && (cfg.c0[2] - 1.0).abs() < 1e-15);
        assert_eq!(cfg.h0, vec![0.4, 0.2]);
        assert!(parse("c0 = 0.1, -1").is_err());
        assert!(parse("c0 = logspace(1, 2)").is_err());
    }

    #[test]
    fn profiles() {
        let cfg = parse("features = 3\nprofile = geometric:8:0.5").unwrap();
        let ModelSpec::Synthetic { profile, .. } = cfg.model else { panic!() };
        assert_eq!(profile, vec![8.0, 4.0, 2.0]);
        assert!(parse("features = 2\nprofile = 1, 2, 3").is_err());
        assert!(parse("profile = 1, -2").is_err());
    }

    #[test]
    fn channel_keys_must_match_kind() {
        let cfg = parse("channel = fading\noutage_prob = 0.3\nfeatures_per_slot = 4").unwrap();
        assert_eq!(cfg.channel, ChannelModel::fading(4, 0.3).unwrap());
        assert!(parse("channel = fading\nsnr_db = 3").is_err());
        assert!(parse("outage_prob = 0.1").is_err());
        assert!(parse("channel = rayleigh").is_err());
        assert!(parse("snr_db = -40").is_err());
    }

    #[test]
    fn missing_model_file() {
        let err = parse("model_file = /nonexistent/model.txt").unwrap_err();
        assert!(err.to_string().contains("not found"));
    }

    #[test]
    fn hash_ignores_run_plumbing() {
        let a = parse("seed = 1\nworkers = 1").unwrap();
        let b = parse("seed = 9\nworkers = 4\nout = x.csv").unwrap();
        let c = parse("trials = 7").unwrap();
        let m = a.build_model().unwrap();
        assert_eq!(a.hash(&m), b.hash(&m));
        assert_ne!(a.hash(&m), c.hash(&m));
        assert_eq!(a.hash(&m).len(), 16);
    }
}
