//! Run configuration: a JSON document overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::manifold::Flavor;
use crate::presets::Example;

pub const CONFIG_ENV: &str = "VORTEX_SPECTRA_CONFIG";

/// `start:stop:factor`, geometric, both ends inclusive when hit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub factor: f64,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::Config(format!("grid `{s}` is not start:stop:factor")));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number `{t}` in grid `{s}`")));
        Ok(Self { start: num(a)?, stop: num(b)?, factor: num(c)? })
    }

    /// Points `start·factorᵏ` not past `stop`. Empty when the factor walks away from `stop`.
    pub fn points(&self) -> Result<Vec<f64>> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.start) || !ok(self.stop) || !ok(self.factor) || self.factor == 1.0 {
            return Err(Error::Config(format!("grid {self:?} needs positive finite ends and a factor other than 1")));
        }
        let down = self.factor < 1.0;
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            // 15 significant digits drop the rounding noise of repeated products
            let v: f64 = format!("{:.14e}", self.start * self.factor.powi(k)).parse().expect("float round-trips");
            // tolerate the rounding of start·factorᵏ landing just past stop
            let past = if down { v < self.stop * (1.0 - 1e-12) } else { v > self.stop * (1.0 + 1e-12) };
            if past || out.len() > 10_000 {
                break;
            }
            out.push(v);
            k += 1;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub example: Example,
    /// Aspect ratio; Example 1 only.
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub nu_grid: Option<GridSpec>,
    pub khat: Option<LatticeVector>,
    /// Maximal continued-fraction depth.
    pub depth: usize,
    /// Galerkin truncation `|k|_∞ ≤ K`.
    pub lattice: usize,
    pub ell: u32,
    pub tol: f64,
    /// Fiber truncation of the matrix cross-check; 0 skips it.
    pub oracle_n: usize,
    pub flavor: Flavor,
    pub samples: usize,
    pub seed: u64,
    /// Also run the manifold size sweep in `sweep`.
    pub manifold_sweep: bool,
    /// Write `fiber.mtx` with this many modes per side.
    pub dump_matrix: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: Example::Example1,
            alpha: None,
            nu: None,
            nu_grid: None,
            khat: None,
            depth: 10_000,
            lattice: 8,
            ell: 3,
            tol: 1e-13,
            oracle_n: 200,
            flavor: Flavor::CenterStable,
            samples: 4,
            seed: 1,
            manifold_sweep: false,
            dump_matrix: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The file named by `explicit`, else by the environment variable, else defaults.
    pub fn base(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn alpha(&self) -> f64 {
        match self.example {
            Example::Example1 => self.alpha.unwrap_or(0.7),
            _ => 1.0,
        }
    }

    pub fn khat(&self) -> LatticeVector {
        self.khat.unwrap_or_else(|| self.example.default_khat())
    }

    /// Viscosities in run order: the grid if given, else the single value.
    pub fn nus(&self) -> Result<Vec<f64>> {
        let v = match (&self.nu_grid, self.nu) {
            (Some(g), _) => g.points()?,
            (None, Some(nu)) => vec![nu],
            (None, None) => return Err(Error::Config("set --nu or --nu-grid".into())),
        };
        if v.is_empty() {
            return Err(Error::Config("empty viscosity grid".into()));
        }
        if v.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(Error::Config("viscosities must be finite and non-negative".into()));
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        match self.alpha {
            Some(a) if self.example != Example::Example1 => {
                return Err(Error::Config(format!("{} lives on the square torus; alpha {a} is not used", self.example.name())))
            }
            Some(a) if !(a.is_finite() && a > 0.0) => return Err(Error::Config(format!("alpha must be positive, got {a}"))),
            _ => {}
        }
        if self.depth < 2 {
            return Err(Error::Config("depth must be at least 2".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.lattice == 0 || self.ell == 0 {
            return Err(Error::Config("lattice and ell must be at least 1".into()));
        }
        if self.khat.is_some_and(|k| k.is_zero()) {
            return Err(Error::Config("khat must be nonzero".into()));
        }
        Ok(())
    }
}

pub fn parse_khat(s: &str) -> Result<LatticeVector> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b] = parts.as_slice() else {
        return Err(Error::Config(format!("khat `{s}` is not k1,k2")));
    };
    let num = |t: &str| t.trim().parse::<i64>().map_err(|_| Error::Config(format!("bad integer `{t}` in khat")));
    Ok(LatticeVector::new(num(a)?, num(b)?))
}
