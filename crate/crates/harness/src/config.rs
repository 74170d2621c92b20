//! Experiment configuration: a flat `key = value` file plus overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pseudoloc_core::kernel::{KernelFamily, KernelSpec};
use pseudoloc_core::sigma::{conjugate, decay_exponent};

use crate::error::{HarnessError, Result};
use crate::family::Profile;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelFamily,
    pub scale: f64,
    pub dim: usize,
    pub ps: Vec<f64>,
    pub s_min: u32,
    pub s_max: u32,
    pub family_size: usize,
    pub profile: Profile,
    pub seed: u64,
    /// Radius `M` of the truncated `m`-sums.
    pub m_radius: i64,
    /// Box radius for the restricted norms; `None` picks twice the hull of `Σ`.
    pub radius: Option<f64>,
    pub tol: f64,
    pub q_cube: bool,
    /// Adds the `L¹` rows (`p = 1`, decay `2^{-sγ}`).
    pub l1: bool,
    pub verify_samples: usize,
    pub output: Option<PathBuf>,
}

/// `p`, `p'` and `e(p, γ) = min(γ, 1/2, 1/p')`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derived {
    pub p: f64,
    pub p_conj: f64,
    pub e: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kernel: KernelFamily::Hilbert1d,
            scale: 1.0,
            dim: 1,
            ps: vec![1.5, 2.0, 3.0, 4.0],
            s_min: 0,
            s_max: 8,
            family_size: 20,
            profile: Profile::RandomSparse,
            seed: 1,
            m_radius: 64,
            radius: None,
            tol: 1e-9,
            q_cube: false,
            l1: false,
            verify_samples: 256,
            output: None,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(HarnessError::Config(format!("not a boolean: {v:?}"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| HarnessError::Config(format!("bad value for {key}: {v:?}")))
}

impl ExperimentConfig {
    /// Defaults for dimension `n` (two dimensions run at `s ≤ 4`, `M = 16`).
    pub fn for_dim(n: usize) -> Self {
        let mut c = ExperimentConfig::default();
        if n == 2 {
            c.dim = 2;
            c.kernel = KernelFamily::Smooth2d;
            c.s_max = 4;
            c.m_radius = 16;
        }
        c
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.set_pair(line)
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", no + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "kernel" => {
                let gamma = self.kernel.gamma();
                self.kernel = KernelFamily::parse(v, gamma)?;
                self.dim = self.kernel.dim();
            }
            "gamma" => {
                let g: f64 = parse_num(key, v)?;
                self.kernel = match self.kernel {
                    KernelFamily::Weierstrass1d { .. } => KernelFamily::parse("weierstrass1d", g)?,
                    other if (g - 1.0).abs() < 1e-15 => other,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "{} has γ = 1; got gamma = {g}",
                            other.name()
                        )));
                    }
                };
            }
            "scale" => self.scale = parse_num(key, v)?,
            "n" | "dim" => self.dim = parse_num(key, v)?,
            "p" => {
                self.ps = v
                    .split(',')
                    .map(|t| parse_num(key, t.trim()))
                    .collect::<Result<_>>()?;
            }
            "s_min" => self.s_min = parse_num(key, v)?,
            "s_max" => self.s_max = parse_num(key, v)?,
            "s" => {
                let (a, b) = v
                    .split_once("..")
                    .ok_or_else(|| HarnessError::Config(format!("expected a..b, got {v:?}")))?;
                self.s_min = parse_num(key, a)?;
                self.s_max = parse_num(key, b)?;
            }
            "family_size" | "count" => self.family_size = parse_num(key, v)?,
            "profile" => self.profile = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "m_radius" | "M" => self.m_radius = parse_num(key, v)?,
            "radius" | "R" => {
                self.radius = if v == "auto" {
                    None
                } else {
                    Some(parse_num(key, v)?)
                };
            }
            "tol" => self.tol = parse_num(key, v)?,
            "q_cube" => self.q_cube = parse_bool(v)?,
            "l1" => self.l1 = parse_bool(v)?,
            "verify_samples" => self.verify_samples = parse_num(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            other => return Err(HarnessError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ps.is_empty() {
            return Err(HarnessError::Config("no exponents p".into()));
        }
        if let Some(p) = self.ps.iter().find(|p| !(**p > 1.0) || !p.is_finite()) {
            return Err(HarnessError::Config(format!(
                "exponent p = {p} must exceed 1"
            )));
        }
        if self.s_min > self.s_max {
            return Err(HarnessError::Config(format!(
                "empty s range {}..{}",
                self.s_min, self.s_max
            )));
        }
        if self.dim != self.kernel.dim() {
            return Err(HarnessError::Config(format!(
                "{} lives in dimension {}, not {}",
                self.kernel,
                self.kernel.dim(),
                self.dim
            )));
        }
        if self.family_size == 0 {
            return Err(HarnessError::Config(
                "family_size must be at least 1".into(),
            ));
        }
        if self.m_radius < 1 {
            return Err(HarnessError::Config("m_radius must be at least 1".into()));
        }
        if self.q_cube && self.dim != 1 {
            return Err(HarnessError::Config(
                "the Q-cube variant uses the Hilbert transform (n = 1)".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(HarnessError::Config("tol must be positive".into()));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.kernel.gamma()
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec::new(self.kernel, self.scale)
    }

    pub fn derived(&self) -> Vec<Derived> {
        self.ps
            .iter()
            .map(|&p| Derived {
                p,
                p_conj: conjugate(p),
                e: decay_exponent(p, self.gamma()),
            })
            .collect()
    }

    pub fn s_values(&self) -> std::ops::RangeInclusive<u32> {
        self.s_min..=self.s_max
    }

    /// The configuration as `key=value` lines (parsable by [`ExperimentConfig::parse`]).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kernel={}\n", self.kernel.name()));
        out.push_str(&format!("gamma={}\n", self.gamma()));
        out.push_str(&format!("scale={}\n", self.scale));
        out.push_str(&format!("n={}\n", self.dim));
        let ps: Vec<String> = self.ps.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("p={}\n", ps.join(",")));
        out.push_str(&format!("s={}..{}\n", self.s_min, self.s_max));
        out.push_str(&format!(
            "family_size={}\nprofile={}\nseed={}\n",
            self.family_size, self.profile, self.seed
        ));
        out.push_str(&format!("m_radius={}\n", self.m_radius));
        match self.radius {
            Some(r) => out.push_str(&format!("radius={r}\n")),
            None => out.push_str("radius=auto\n"),
        }
        out.push_str(&format!(
            "tol={}\nq_cube={}\nl1={}\nverify_samples={}\n",
            self.tol, self.q_cube, self.l1, self.verify_samples
        ));
        if let Some(o) = &self.output {
            out.push_str(&format!("output={}\n", o.display()));
        }
        out
    }
}

impl fmt::Display for Derived {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} p'={} e={}", self.p, self.p_conj, self.e)
    }
}
