//! Flat key-value run configuration shared by the CLI subcommands.
//!
//! The file format is one `key = value` pair per line, `#` starts a
//! comment. Recognized keys: `a`, `b`, `c`, `epsilon`, `L`, `regime`, `n`,
//! `dt`, `T`, `snapshot_stride`, `weight_beta`, `seed`. CLI flags override
//! file values; `dt` left unset falls back to the fast-scale step rule.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::integrator;
use crate::model::{Grid, Regime, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub epsilon: f64,
    pub l: f64,
    pub regime: Regime,
    pub n: usize,
    /// Time step; `None` resolves to `dt_rule(epsilon)`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub weight_beta: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 0.1,
            b: -1.0,
            c: 1.0,
            epsilon: 0.1,
            l: 3.0,
            regime: Regime::FastKdv,
            n: 200,
            dt: None,
            t_final: 5.0,
            snapshot_stride: 10,
            weight_beta: 1.0,
            seed: 42,
        }
    }
}

impl RunConfig {
    /// Parses a config file body, overriding defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_lines(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_lines(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| {
                    Error::Config(format!("line {}: expected `key = value`", lineno + 1))
                })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{v}` is not a number")))
        };
        match key {
            "a" => self.a = parse_f64(value)?,
            "b" => self.b = parse_f64(value)?,
            "c" => self.c = parse_f64(value)?,
            "epsilon" => self.epsilon = parse_f64(value)?,
            "L" | "l" => self.l = parse_f64(value)?,
            "regime" => self.regime = Regime::parse(value)?,
            "n" => {
                self.n = value
                    .parse()
                    .map_err(|_| Error::Config(format!("key `n`: `{value}` is not an integer")))?
            }
            "dt" => self.dt = Some(parse_f64(value)?),
            "T" | "t" => self.t_final = parse_f64(value)?,
            "snapshot_stride" => {
                self.snapshot_stride = value.parse().map_err(|_| {
                    Error::Config(format!(
                        "key `snapshot_stride`: `{value}` is not an integer"
                    ))
                })?
            }
            "weight_beta" => self.weight_beta = parse_f64(value)?,
            "seed" => {
                self.seed = value.parse().map_err(|_| {
                    Error::Config(format!("key `seed`: `{value}` is not an integer"))
                })?
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}` (valid keys: a, b, c, epsilon, L, regime, n, dt, T, \
                     snapshot_stride, weight_beta, seed)"
                )))
            }
        }
        Ok(())
    }

    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.a, self.b, self.c, self.epsilon, self.l, self.regime)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.l, self.n)
    }

    pub fn resolved_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| integrator::dt_rule(self.epsilon))
    }

    /// Canonical sorted `key = value` rendering; identical configs render
    /// identically, which backs the manifest hash.
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("a", format!("{:?}", self.a));
        map.insert("b", format!("{:?}", self.b));
        map.insert("c", format!("{:?}", self.c));
        map.insert("epsilon", format!("{:?}", self.epsilon));
        map.insert("L", format!("{:?}", self.l));
        map.insert("regime", self.regime.label().to_string());
        map.insert("n", self.n.to_string());
        map.insert("dt", format!("{:?}", self.resolved_dt()));
        map.insert("T", format!("{:?}", self.t_final));
        map.insert("snapshot_stride", self.snapshot_stride.to_string());
        map.insert("weight_beta", format!("{:?}", self.weight_beta));
        map.insert("seed", self.seed.to_string());
        map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
