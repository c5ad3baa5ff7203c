use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Result, UqError};
use crate::fem::FemModel;
use crate::perturbation::run_collocation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceStats {
    pub mean: f64,
    pub variance: f64,
}

/// Canonical description of a reference run. Assumes the default problem
/// data (unit diffusion, no source, bump on the top edge, bump QoI).
pub fn reference_cache_key(model: &FemModel, w_ref: usize) -> String {
    let s = model.spec();
    format!(
        "c={:?};k={:?};L={:?};Lp={:?};N={};m={};w_ref={};tol={:?}",
        s.amplitude,
        s.decay,
        s.corr_len,
        s.period,
        s.total_dims(),
        model.mesh().m,
        w_ref,
        model.solver_options().rel_tol
    )
}

fn cache_file(dir: &Path, key: &str) -> std::path::PathBuf {
    let digest = Sha256::digest(key.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("reference-{hex}.txt"))
}

fn read_cache(path: &Path, key: &str) -> Result<Option<ReferenceStats>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = text.lines();
    if lines.next() != Some(&format!("key {key}")) {
        return Ok(None);
    }
    let mut num = || -> Result<f64> {
        lines
            .next()
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| UqError::Config(format!("malformed reference cache {}", path.display())))
    };
    Ok(Some(ReferenceStats {
        mean: num()?,
        variance: num()?,
    }))
}

/// Reads a cache file written by [`reference_statistics`], checking that it
/// was computed for `model`'s map family and mesh (any `w_ref`).
pub fn load_reference(path: &Path, model: &FemModel) -> Result<ReferenceStats> {
    let text = fs::read_to_string(path)?;
    let key = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("key "))
        .ok_or_else(|| UqError::Config(format!("{} is not a reference cache", path.display())))?;
    let problem = |k: &str| k.split(";w_ref=").next().map(str::to_string);
    if problem(key) != problem(&reference_cache_key(model, 0)) {
        return Err(UqError::Config(format!(
            "{} was computed for a different problem ({key})",
            path.display()
        )));
    }
    read_cache(path, key)?
        .ok_or_else(|| UqError::Config(format!("malformed reference cache {}", path.display())))
}

/// Full-dimensional isotropic collocation at level `w_ref`. With a cache
/// directory, results are stored as one text file per key: a `key …` header
/// line followed by the mean and the variance in shortest round-trip form.
pub fn reference_statistics(
    model: &FemModel,
    w_ref: usize,
    cache_dir: Option<&Path>,
) -> Result<ReferenceStats> {
    let key = reference_cache_key(model, w_ref);
    if let Some(dir) = cache_dir {
        if let Some(hit) = read_cache(&cache_file(dir, &key), &key)? {
            return Ok(hit);
        }
    }
    let report = run_collocation(model, w_ref, model.spec().total_dims())?;
    let stats = ReferenceStats {
        mean: report.mean,
        variance: report.variance,
    };
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir)?;
        fs::write(
            cache_file(dir, &key),
            format!("key {key}\n{:?}\n{:?}\n", stats.mean, stats.variance),
        )?;
    }
    Ok(stats)
}
