//! Plain-text `key = value` run configuration.
//!
//! Stress-like values accept `Pa`, `kPa`, `MPa` and `GPa` suffixes, lengths
//! `m` and `mm`, and `kappa2` an optional `J/m`. A bare number is in SI
//! units. `#` starts a comment.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::SolverOptions;
use crate::fields::{LoadProgram, Model};
use crate::material::{lame_from_young_poisson, MaterialParams, REFERENCE_POISSON, REFERENCE_YOUNG};
use crate::mesh::Variant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: MaterialParams,
    pub load: LoadProgram,
    pub n_sub: usize,
    pub out_dir: PathBuf,
    /// Write a field snapshot every this many steps; 0 writes only the
    /// final state.
    pub snapshot_every: usize,
    pub solver: SolverOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::preset(Variant::Asymmetric)
    }
}

/// Every accepted key, in emission order.
pub const KEYS: &[&str] = &[
    "preset",
    "young",
    "poisson",
    "lambda1",
    "mu1",
    "lambda0",
    "mu0",
    "hardening",
    "sigma_y",
    "a",
    "b",
    "kappa2",
    "t_end",
    "tau",
    "ramp_rate",
    "body_force_x",
    "body_force_y",
    "n_sub",
    "out",
    "snapshot_every",
    "plastic_tol",
    "plastic_max_iter",
    "damage_tol",
    "damage_max_iter",
];

const STRESS: &[(&str, f64)] = &[("GPa", 1e9), ("MPa", 1e6), ("kPa", 1e3), ("Pa", 1.0)];
const LENGTH: &[(&str, f64)] = &[("mm", 1e-3), ("m", 1.0)];
const GRADIENT: &[(&str, f64)] = &[("J/m", 1.0)];
const BODY: &[(&str, f64)] = &[("N/m3", 1.0)];
const PLAIN: &[(&str, f64)] = &[];

fn parse_quantity(key: &str, value: &str, units: &[(&str, f64)]) -> Result<f64> {
    let value = value.trim();
    let (number, scale) = units
        .iter()
        .find_map(|(suffix, scale)| value.strip_suffix(suffix).map(|n| (n.trim_end(), *scale)))
        .unwrap_or((value, 1.0));
    let x: f64 = number.parse().map_err(|_| {
        let accepted: Vec<&str> = units.iter().map(|(s, _)| *s).collect();
        let hint = if accepted.is_empty() {
            String::new()
        } else {
            format!(" (units: {})", accepted.join(", "))
        };
        Error::config(key, format!("cannot parse `{value}` as a number{hint}"))
    })?;
    if !x.is_finite() {
        return Err(Error::config(key, "value must be finite"));
    }
    Ok(x * scale)
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("`{value}` is not a nonnegative integer")))
}

impl RunConfig {
    /// Reference experiment with the given geometry variant.
    pub fn preset(variant: Variant) -> RunConfig {
        RunConfig {
            params: MaterialParams::reference(),
            load: LoadProgram::reference(variant),
            n_sub: 24,
            out_dir: PathBuf::from("out"),
            snapshot_every: 0,
            solver: SolverOptions::default(),
        }
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        let l = &mut self.load;
        match key {
            "preset" => {
                l.variant = value
                    .trim()
                    .parse()
                    .map_err(|e: String| Error::config(key, e))?
            }
            "young" | "poisson" => {
                // recover the pair currently in force, then replace one half
                let (e, nu) = young_poisson(p.lambda1, p.mu1);
                let (e, nu) = if key == "young" {
                    (parse_quantity(key, value, STRESS)?, nu)
                } else {
                    (e, parse_quantity(key, value, PLAIN)?)
                };
                let (lambda, mu) =
                    lame_from_young_poisson(e, nu).map_err(|err| Error::config(key, err.to_string()))?;
                p.lambda1 = lambda;
                p.mu1 = mu;
            }
            "lambda1" => p.lambda1 = parse_quantity(key, value, STRESS)?,
            "mu1" => p.mu1 = parse_quantity(key, value, STRESS)?,
            "lambda0" => p.lambda0 = parse_quantity(key, value, STRESS)?,
            "mu0" => p.mu0 = parse_quantity(key, value, STRESS)?,
            "hardening" => p.hardening = parse_quantity(key, value, STRESS)?,
            "sigma_y" => p.sigma_y = parse_quantity(key, value, STRESS)?,
            "a" => p.a = parse_quantity(key, value, STRESS)?,
            "b" => p.b = parse_quantity(key, value, STRESS)?,
            "kappa2" => p.kappa2 = parse_quantity(key, value, GRADIENT)?,
            "t_end" => l.t_end = parse_quantity(key, value, PLAIN)?,
            "tau" => l.tau = parse_quantity(key, value, PLAIN)?,
            "ramp_rate" => l.ramp_rate = parse_quantity(key, value, LENGTH)?,
            "body_force_x" => l.body_force[0] = parse_quantity(key, value, BODY)?,
            "body_force_y" => l.body_force[1] = parse_quantity(key, value, BODY)?,
            "n_sub" => self.n_sub = parse_count(key, value)?,
            "out" => self.out_dir = PathBuf::from(value.trim()),
            "snapshot_every" => self.snapshot_every = parse_count(key, value)?,
            "plastic_tol" => self.solver.plastic.tol = parse_quantity(key, value, PLAIN)?,
            "plastic_max_iter" => self.solver.plastic.max_iter = parse_count(key, value)?,
            "damage_tol" => self.solver.damage.tol = parse_quantity(key, value, PLAIN)?,
            "damage_max_iter" => self.solver.damage.max_iter = parse_count(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `KEY=VALUE` string as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(pair.trim(), "expected KEY=VALUE"))?;
        self.set(key.trim(), value)
    }

    /// Applies every assignment of a config text; a key may appear once.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<String> = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::config(key, "given more than once"));
            }
            self.set(key, value)?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    /// Checks everything a run needs; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let checks: [(&str, bool, &str); 10] = [
            ("lambda1", p.lambda1 >= p.lambda0, "must be at least lambda0"),
            ("lambda0", p.lambda0 >= 0.0, "must be nonnegative"),
            ("mu1", p.mu1 >= p.mu0, "must be at least mu0"),
            ("mu0", p.mu0 > 0.0, "must be positive"),
            ("sigma_y", p.sigma_y > 0.0, "must be positive"),
            ("hardening", p.hardening > 0.0, "must be positive"),
            ("a", p.a > 0.0, "must be positive"),
            ("b", p.b >= p.a, "must be at least a"),
            ("kappa2", p.kappa2 > 0.0, "must be positive"),
            ("n_sub", self.n_sub >= 1, "must be at least 1"),
        ];
        if let Some((key, _, msg)) = checks.iter().find(|c| !c.1) {
            return Err(Error::config(*key, *msg));
        }
        p.validate().map_err(|e| Error::config("params", e.to_string()))?;
        let l = &self.load;
        if !(l.t_end > 0.0) {
            return Err(Error::config("t_end", "must be positive"));
        }
        if !(l.tau > 0.0) {
            return Err(Error::config("tau", "must be positive"));
        }
        if l.ramp_rate < 0.0 {
            return Err(Error::config("ramp_rate", "must be nonnegative"));
        }
        l.n_steps().map_err(|e| Error::config("tau", e.to_string()))?;
        if l.variant == Variant::Asymmetric && self.n_sub % 6 != 0 {
            return Err(Error::config(
                "n_sub",
                format!("asymmetric preset needs a multiple of 6, got {}", self.n_sub),
            ));
        }
        let s = &self.solver;
        if !(s.plastic.tol > 0.0) {
            return Err(Error::config("plastic_tol", "must be positive"));
        }
        if !(s.damage.tol > 0.0) {
            return Err(Error::config("damage_tol", "must be positive"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        self.validate()?;
        Model::tension(self.n_sub, self.params, self.load)
    }

    pub fn n_steps(&self) -> Result<usize> {
        self.load.n_steps().map_err(|e| Error::config("tau", e.to_string()))
    }

    /// Config text that parses back to `self`. Values are written in SI
    /// units with shortest round-trip precision.
    pub fn to_config_text(&self) -> String {
        let p = &self.params;
        let l = &self.load;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("preset", l.variant.name().to_string());
        put("lambda1", format!("{:?}", p.lambda1));
        put("mu1", format!("{:?}", p.mu1));
        put("lambda0", format!("{:?}", p.lambda0));
        put("mu0", format!("{:?}", p.mu0));
        put("hardening", format!("{:?}", p.hardening));
        put("sigma_y", format!("{:?}", p.sigma_y));
        put("a", format!("{:?}", p.a));
        put("b", format!("{:?}", p.b));
        put("kappa2", format!("{:?}", p.kappa2));
        put("t_end", format!("{:?}", l.t_end));
        put("tau", format!("{:?}", l.tau));
        put("ramp_rate", format!("{:?}", l.ramp_rate));
        put("body_force_x", format!("{:?}", l.body_force[0]));
        put("body_force_y", format!("{:?}", l.body_force[1]));
        put("n_sub", self.n_sub.to_string());
        put("out", self.out_dir.display().to_string());
        put("snapshot_every", self.snapshot_every.to_string());
        put("plastic_tol", format!("{:?}", self.solver.plastic.tol));
        put("plastic_max_iter", self.solver.plastic.max_iter.to_string());
        put("damage_tol", format!("{:?}", self.solver.damage.tol));
        put("damage_max_iter", self.solver.damage.max_iter.to_string());
        s
    }
}

/// Young's modulus and Poisson ratio of a Lamé pair.
fn young_poisson(lambda: f64, mu: f64) -> (f64, f64) {
    if lambda + mu > 0.0 {
        let nu = lambda / (2.0 * (lambda + mu));
        (2.0 * mu * (1.0 + nu), nu)
    } else {
        (REFERENCE_YOUNG, REFERENCE_POISSON)
    }
}

/// Parses a config text on top of the reference defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    c.apply_text(text)?;
    c.validate()?;
    Ok(c)
}
