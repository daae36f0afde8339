//! Fractional heat kernel `G_theta` and its derivatives.
//!
//! Every derivative is reduced to a unit-time profile by self-similarity and
//! tabulated once by Fourier inversion. A [`Kernel`] memoizes profiles per
//! `(alpha, m)` and optionally persists them as JSON in a cache directory.

mod bessel;
mod oracle;
mod profile;
mod series;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

pub use bessel::j0;
pub use oracle::closed_form_oracle;
pub use profile::{default_grid, tabulate_profile, KernelProfile, QuadParams, PROFILE_VERSION};
pub use series::TailSeries;
pub(crate) use profile::validate_theta_dim;

use crate::error::{Error, Result};
use crate::index::MultiIndex;

/// Environment variable naming the profile cache directory.
pub const CACHE_ENV: &str = "FRACHEAT_CACHE_DIR";

/// `d_t^m d_x^alpha G(x, t)` from a tabulated profile.
pub fn eval_kernel_derivative(profile: &KernelProfile, x: f64, t: f64) -> Result<f64> {
    profile.eval(x, t)
}

/// Shared bank of profiles for one `(theta, dim)`.
#[derive(Debug)]
pub struct Kernel {
    theta: f64,
    dim: usize,
    cache_dir: Option<PathBuf>,
    profiles: Mutex<HashMap<(Vec<u32>, u32), Arc<KernelProfile>>>,
}

impl Kernel {
    /// A bank that uses the cache directory from [`CACHE_ENV`] when set.
    pub fn new(theta: f64, dim: usize) -> Result<Self> {
        let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        Self::with_cache(theta, dim, dir)
    }

    pub fn with_cache(theta: f64, dim: usize, cache_dir: Option<PathBuf>) -> Result<Self> {
        profile::validate_theta_dim(theta, dim)?;
        Ok(Kernel {
            theta,
            dim,
            cache_dir,
            profiles: Mutex::new(HashMap::new()),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Profile of `d_t^m d_x^alpha G`, tabulating (or loading) on first use.
    pub fn profile(&self, alpha: &MultiIndex, m: u32) -> Result<Arc<KernelProfile>> {
        let key = (alpha.0.clone(), m);
        if let Some(p) = self.profiles.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let (z_max, res) = default_grid(self.theta, self.dim, alpha, m);
        let p = Arc::new(self.load_or_tabulate(alpha, m, z_max, res)?);
        self.profiles
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| p.clone());
        Ok(p)
    }

    /// 1-D shorthand for `profile(&MultiIndex::d1(alpha), m)`.
    pub fn profile1(&self, alpha: u32, m: u32) -> Result<Arc<KernelProfile>> {
        self.profile(&MultiIndex::d1(alpha), m)
    }

    /// `G(x, t)` in 1-D.
    pub fn g(&self, x: f64, t: f64) -> Result<f64> {
        self.profile1(0, 0)?.eval(x, t)
    }

    fn cache_path(&self, dir: &Path, alpha: &MultiIndex, m: u32, z_max: f64, res: usize) -> PathBuf {
        let a: Vec<String> = alpha.0.iter().map(|v| v.to_string()).collect();
        dir.join(format!(
            "profile_v{}_th{}_n{}_a{}_m{}_z{}_r{}.json",
            PROFILE_VERSION,
            self.theta,
            self.dim,
            a.join("-"),
            m,
            z_max,
            res
        ))
    }

    fn load_or_tabulate(&self, alpha: &MultiIndex, m: u32, z_max: f64, res: usize) -> Result<KernelProfile> {
        let Some(dir) = &self.cache_dir else {
            return tabulate_profile(self.theta, self.dim, alpha, m, z_max, res);
        };
        let path = self.cache_path(dir, alpha, m, z_max, res);
        if let Ok(text) = std::fs::read_to_string(&path) {
            match serde_json::from_str::<KernelProfile>(&text) {
                Ok(p) if p.version == PROFILE_VERSION => return Ok(p),
                Ok(_) => log::info!("stale profile cache {}", path.display()),
                Err(e) => log::warn!("ignoring unreadable cache {}: {e}", path.display()),
            }
        }
        let p = tabulate_profile(self.theta, self.dim, alpha, m, z_max, res)?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let text = serde_json::to_string(&p).map_err(|e| Error::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let k = Kernel::with_cache(1.0, 1, Some(dir.path().to_path_buf())).unwrap();
        let a = k.profile1(1, 0).unwrap();
        let k2 = Kernel::with_cache(1.0, 1, Some(dir.path().to_path_buf())).unwrap();
        let b = k2.profile1(1, 0).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn spec_examples() {
        let k = Kernel::with_cache(1.0, 1, None).unwrap();
        assert!((k.g(0.0, 4.0).unwrap() - 0.0795775).abs() < 1e-7);
        assert!(k.profile1(1, 0).unwrap().eval(0.0, 3.0).unwrap().abs() < 1e-15);
        assert!(k.g(0.0, 0.0).is_err());
    }
}
