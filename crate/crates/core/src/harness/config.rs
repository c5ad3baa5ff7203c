use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, UqError};
use crate::geometry::DeformationSpec;
use crate::perturbation::Method;

/// Environment variable that overrides the configured thread count.
pub const THREADS_ENV: &str = "UQ_THREADS";

/// Where reference statistics come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    None,
    /// A single cache file written by the reference oracle.
    CacheFile(PathBuf),
    /// Full-dimensional collocation at level `w_ref`.
    Collocation {
        w_ref: usize,
    },
    /// Full-dimensional Monte Carlo.
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl fmt::Display for ReferenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceSource::None => f.write_str("none"),
            ReferenceSource::CacheFile(p) => write!(f, "cache:{}", p.display()),
            ReferenceSource::Collocation { w_ref } => write!(f, "wref:{w_ref}"),
            ReferenceSource::MonteCarlo { samples, seed } => write!(f, "mc:{samples},{seed}"),
        }
    }
}

/// A sweep over `N_s × method × w` on one mesh and one map family.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub amplitude: f64,
    pub decay: f64,
    pub corr_len: f64,
    pub period: f64,
    /// Total parameter count `N`.
    pub total_dims: usize,
    pub n_large: Vec<usize>,
    pub mesh_m: usize,
    pub levels: Vec<usize>,
    /// Level of the correction grid, capped at each row's `w`. `None` uses `w`.
    pub w_corr: Option<usize>,
    pub methods: Vec<Method>,
    pub reference: ReferenceSource,
    /// Directory for collocation reference caches.
    pub reference_cache: Option<PathBuf>,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub normalize: bool,
    pub mc_samples: usize,
    pub mc_seed: u64,
    /// Fill the `wall_ms` column (makes reruns differ).
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            amplitude: 1.0 / 15.0,
            decay: 3.0,
            corr_len: 0.5,
            period: 1.0,
            total_dims: 15,
            n_large: vec![4],
            mesh_m: 129,
            levels: vec![0, 1, 2, 3],
            w_corr: None,
            methods: vec![Method::Collocation, Method::Hybrid],
            reference: ReferenceSource::None,
            reference_cache: None,
            output: PathBuf::from("uq-output"),
            threads: None,
            normalize: true,
            mc_samples: 1000,
            mc_seed: 1,
            record_wall_time: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| UqError::Config(format!("{key}: cannot parse '{v}'")))
}

/// Accepts plain decimals and fractions such as `1/15`.
fn parse_real(key: &str, v: &str) -> Result<f64> {
    match v.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (parse_num(key, a)?, parse_num(key, b)?);
            if b == 0.0 {
                return Err(UqError::Config(format!("{key}: division by zero")));
            }
            Ok(a / b)
        }
        None => parse_num(key, v),
    }
}

/// Comma separated values; `a..b` expands to the inclusive range.
fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse_num(key, a)?, parse_num(key, b)?);
                if b < a {
                    return Err(UqError::Config(format!("{key}: empty range {item}")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_num(key, item)?),
        }
    }
    if out.is_empty() {
        return Err(UqError::Config(format!("{key}: empty list")));
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(UqError::Config(format!(
            "{key}: expected true/false, got '{other}'"
        ))),
    }
}

fn parse_reference(v: &str) -> Result<ReferenceSource> {
    let v = v.trim();
    if v == "none" {
        return Ok(ReferenceSource::None);
    }
    let (kind, arg) = v
        .split_once(':')
        .ok_or_else(|| UqError::Config(format!("reference: cannot parse '{v}'")))?;
    match kind.trim() {
        "cache" => Ok(ReferenceSource::CacheFile(PathBuf::from(arg.trim()))),
        "wref" => Ok(ReferenceSource::Collocation {
            w_ref: parse_num("reference", arg)?,
        }),
        "mc" => {
            let (m, seed) = arg
                .split_once(',')
                .ok_or_else(|| UqError::Config("reference: expected mc:<samples>,<seed>".into()))?;
            Ok(ReferenceSource::MonteCarlo {
                samples: parse_num("reference", m)?,
                seed: parse_num("reference", seed)?,
            })
        }
        other => Err(UqError::Config(format!(
            "reference: unknown source '{other}'"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults. Relative paths are kept as written.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                UqError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "c" => cfg.amplitude = parse_real(key, value)?,
                "k" => cfg.decay = parse_real(key, value)?,
                "L" => cfg.corr_len = parse_real(key, value)?,
                "L_p" => cfg.period = parse_real(key, value)?,
                "N" => cfg.total_dims = parse_num(key, value)?,
                "N_s" => cfg.n_large = parse_list(key, value)?,
                "m" => cfg.mesh_m = parse_num(key, value)?,
                "levels" => cfg.levels = parse_list(key, value)?,
                "w_corr" => cfg.w_corr = Some(parse_num(key, value)?),
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "reference" => cfg.reference = parse_reference(value)?,
                "reference_cache" => cfg.reference_cache = Some(PathBuf::from(value)),
                "output" => cfg.output = PathBuf::from(value),
                "threads" => cfg.threads = Some(parse_num(key, value)?),
                "normalize" => cfg.normalize = parse_bool(key, value)?,
                "mc_samples" => cfg.mc_samples = parse_num(key, value)?,
                "mc_seed" => cfg.mc_seed = parse_num(key, value)?,
                "record_wall_time" => cfg.record_wall_time = parse_bool(key, value)?,
                other => {
                    return Err(UqError::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads and parses a config file. Relative `output`, `reference_cache`
    /// and cache-file paths resolve against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| UqError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| {
            if p.is_relative() {
                base.join(p)
            } else {
                p.to_path_buf()
            }
        };
        cfg.output = resolve(&cfg.output);
        cfg.reference_cache = cfg.reference_cache.as_deref().map(resolve);
        if let ReferenceSource::CacheFile(p) = &cfg.reference {
            cfg.reference = ReferenceSource::CacheFile(resolve(p));
        }
        Ok(cfg)
    }

    /// Structural checks; every violation is a configuration error.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(UqError::Config(msg));
        if self.mesh_m < 3 {
            return bad(format!("m = {} is below 3", self.mesh_m));
        }
        if self.total_dims == 0 {
            return bad("N must be positive".into());
        }
        if let Some(&n_s) = self
            .n_large
            .iter()
            .find(|&&n| n == 0 || n > self.total_dims)
        {
            return bad(format!("N_s = {n_s} outside 1..={}", self.total_dims));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if self.methods.contains(&Method::MonteCarlo) && self.mc_samples < 2 {
            return bad("mc_samples must be at least 2".into());
        }
        if let ReferenceSource::MonteCarlo { samples, .. } = self.reference {
            if samples < 2 {
                return bad("reference Monte Carlo needs at least 2 samples".into());
            }
        }
        for &n_s in &self.n_large {
            self.spec_for(n_s)?;
        }
        Ok(())
    }

    /// Map family with `N_s = n_large`.
    pub fn spec_for(&self, n_large: usize) -> Result<DeformationSpec> {
        if n_large > self.total_dims {
            return Err(UqError::Config(format!(
                "N_s = {n_large} exceeds N = {}",
                self.total_dims
            )));
        }
        DeformationSpec::new(
            self.amplitude,
            self.decay,
            self.corr_len,
            self.period,
            n_large,
            self.total_dims - n_large,
        )
        .map_err(|e| UqError::Config(e.to_string()))
    }

    /// Worker threads: `UQ_THREADS` if set, else the config value, else the
    /// runtime default.
    pub fn thread_count(&self) -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => {
                let n: usize = parse_num(THREADS_ENV, &v)?;
                if n == 0 {
                    return Err(UqError::Config(format!("{THREADS_ENV} must be positive")));
                }
                Ok(Some(n))
            }
            _ => Ok(self.threads),
        }
    }

    /// Correction level used with main level `w`.
    pub fn correction_level(&self, w: usize) -> usize {
        self.w_corr.map_or(w, |c| c.min(w))
    }

    /// The config as `key = value` lines, re-parseable by [`Self::parse`].
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let methods: Vec<String> = self.methods.iter().map(Method::to_string).collect();
        let mut s = format!(
            "c = {:?}\nk = {:?}\nL = {:?}\nL_p = {:?}\nN = {}\nN_s = {}\nm = {}\nlevels = {}\n",
            self.amplitude,
            self.decay,
            self.corr_len,
            self.period,
            self.total_dims,
            list(&self.n_large),
            self.mesh_m,
            list(&self.levels)
        );
        if let Some(w) = self.w_corr {
            s += &format!("w_corr = {w}\n");
        }
        s += &format!(
            "methods = {}\nreference = {}\n",
            methods.join(","),
            self.reference
        );
        if let Some(p) = &self.reference_cache {
            s += &format!("reference_cache = {}\n", p.display());
        }
        s += &format!("output = {}\n", self.output.display());
        if let Some(t) = self.threads {
            s += &format!("threads = {t}\n");
        }
        s += &format!(
            "normalize = {}\nmc_samples = {}\nmc_seed = {}\nrecord_wall_time = {}\n",
            self.normalize, self.mc_samples, self.mc_seed, self.record_wall_time
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_experiment() {
        let cfg = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(
            cfg.spec_for(4).unwrap(),
            DeformationSpec::experiment(4).unwrap()
        );
    }

    #[test]
    fn parses_every_key() {
        let text = "c = 1/10\nk = 4\nL = 0.5\nL_p = 2\nN = 8\nN_s = 2..4\nm = 17\n\
                    levels = 0,2\nw_corr = 1\nmethods = hybrid, mc\nreference = mc:200,7\n\
                    reference_cache = refs\noutput = out  # trailing comment\nthreads = 3\n\
                    normalize = false\nmc_samples = 50\nmc_seed = 9\nrecord_wall_time = yes\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.amplitude, 0.1);
        assert_eq!(cfg.n_large, vec![2, 3, 4]);
        assert_eq!(cfg.levels, vec![0, 2]);
        assert_eq!(cfg.methods, vec![Method::Hybrid, Method::MonteCarlo]);
        assert_eq!(
            cfg.reference,
            ReferenceSource::MonteCarlo {
                samples: 200,
                seed: 7
            }
        );
        assert_eq!(cfg.output, PathBuf::from("out"));
        assert_eq!(cfg.threads, Some(3));
        assert!(!cfg.normalize && cfg.record_wall_time);
        assert_eq!(cfg.correction_level(0), 0);
        assert_eq!(cfg.correction_level(2), 1);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "N_s = 16",
            "N = 3\nN_s = 4",
            "m = 2",
            "c = abc",
            "bogus = 1",
            "no equals sign",
            "methods = simulated-annealing",
            "reference = wref",
            "threads = 0",
            "c = 1/0",
            "levels = 3..1",
            "c = -1",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(text), Err(UqError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        fs::write(&path, "output = run1\nreference = cache:ref.txt\n").unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.output, dir.path().join("run1"));
        assert_eq!(
            cfg.reference,
            ReferenceSource::CacheFile(dir.path().join("ref.txt"))
        );
    }
}
