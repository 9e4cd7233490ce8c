//! Run configuration: defaults, flat `key = value` files and validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coin::{BiasParams, CoinMode, InitialCoinSpec, Variant};
use crate::error::{Result, WalkError};
use crate::recurrence::{Engine, ScanGrid};

/// Every setting a subcommand may read. `None` fields fall back to values
/// derived from the others.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub p: f64,
    pub r: u32,
    pub a: f64,
    pub phi: f64,
    pub variant: Variant,
    pub coin_mode: CoinMode,
    /// Allow evolution with the uncorrected coin.
    pub force: bool,
    pub t_max: usize,
    pub grid_n: Option<usize>,
    pub engine: Engine,
    pub output_path: PathBuf,
    pub export_floor: f64,
    pub threshold_fraction: f64,
    pub fit_window: Option<(usize, usize)>,
    pub seeds: usize,
    pub samples: usize,
    pub scan_p: Vec<f64>,
    pub scan_r: Vec<u32>,
    pub scan_a: Vec<f64>,
    pub scan_phi: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 0.5,
            r: 1,
            a: 1.0,
            phi: 0.0,
            variant: Variant::AsPrinted,
            coin_mode: CoinMode::Corrected,
            force: false,
            t_max: 256,
            grid_n: None,
            engine: Engine::Fourier,
            output_path: PathBuf::from("results"),
            export_floor: 1e-15,
            threshold_fraction: 0.5,
            fit_window: None,
            seeds: 16,
            samples: 200,
            scan_p: vec![0.5],
            scan_r: vec![1],
            scan_a: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            scan_phi: vec![0.0, 0.5 * PI, PI],
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<BiasParams> {
        BiasParams::new(self.p, self.r)
    }

    pub fn initial(&self) -> Result<InitialCoinSpec> {
        InitialCoinSpec::new(self.a, self.phi, self.variant)
    }

    /// Configured grid, or the smallest power of two `≥ (r+1)·t_max + 1`.
    pub fn grid_n(&self) -> usize {
        self.grid_n
            .unwrap_or_else(|| ((self.r as usize + 1) * self.t_max + 1).next_power_of_two())
    }

    pub fn fit_window(&self) -> (usize, usize) {
        self.fit_window
            .unwrap_or_else(|| crate::recurrence::default_window(self.t_max))
    }

    pub fn scan_grid(&self) -> ScanGrid {
        ScanGrid {
            p: self.scan_p.clone(),
            r: self.scan_r.clone(),
            a: self.scan_a.clone(),
            phi: self.scan_phi.clone(),
            variant: self.variant,
        }
    }

    /// The symmetric probe `a = 1/2`, `φ = π/2`.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "symmetric" => {
                self.a = 0.5;
                self.phi = 0.5 * PI;
                Ok(())
            }
            other => Err(WalkError::Invalid(format!("unknown preset `{other}`"))),
        }
    }

    /// Checks every field against the preconditions of the code that
    /// consumes it.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.initial()?;
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return Err(WalkError::OutOfRange {
                name: "threshold_fraction",
                value: self.threshold_fraction,
                expected: "0 < threshold_fraction <= 1",
            });
        }
        if self.export_floor.is_nan() || self.export_floor < 0.0 {
            return Err(WalkError::OutOfRange {
                name: "export_floor",
                value: self.export_floor,
                expected: "export_floor >= 0",
            });
        }
        if self.grid_n == Some(0) {
            return Err(WalkError::OutOfRange {
                name: "grid_n",
                value: 0.0,
                expected: "grid_n >= 1",
            });
        }
        if let Some((lo, hi)) = self.fit_window {
            if lo >= hi {
                return Err(WalkError::Invalid(format!("fit_window: lower bound {lo} must be below {hi}")));
            }
        }
        if self.seeds < 8 {
            return Err(WalkError::OutOfRange {
                name: "seeds",
                value: self.seeds as f64,
                expected: "seeds >= 8",
            });
        }
        if self.samples == 0 {
            return Err(WalkError::OutOfRange {
                name: "samples",
                value: 0.0,
                expected: "samples >= 1",
            });
        }
        for &p in &self.scan_p {
            BiasParams::new(p, 1)?;
        }
        for &r in &self.scan_r {
            BiasParams::new(0.5, r)?;
        }
        for &a in &self.scan_a {
            for &phi in &self.scan_phi {
                InitialCoinSpec::new(a, phi, self.variant)?;
            }
        }
        Ok(())
    }

    /// Sets one field from its textual form, as used by config files.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), SetError> {
        match key {
            "p" => self.p = parse_f64(value)?,
            "r" => self.r = parse_num(value)?,
            "a" => self.a = parse_f64(value)?,
            "phi" => self.phi = parse_angle(value)?,
            "variant" => self.variant = parse_variant(value)?,
            "coin_mode" => self.coin_mode = parse_coin_mode(value)?,
            "force" => self.force = parse_num(value)?,
            "t_max" => self.t_max = parse_num(value)?,
            "grid_n" => self.grid_n = Some(parse_num(value)?),
            "engine" => self.engine = parse_engine(value)?,
            "output_path" | "out" => self.output_path = PathBuf::from(value),
            "export_floor" => self.export_floor = parse_f64(value)?,
            "threshold_fraction" => self.threshold_fraction = parse_f64(value)?,
            "fit_window" => self.fit_window = Some(parse_window(value)?),
            "seeds" => self.seeds = parse_num(value)?,
            "samples" => self.samples = parse_num(value)?,
            "scan_p" => self.scan_p = parse_list(value, parse_f64)?,
            "scan_r" => self.scan_r = parse_list(value, parse_num)?,
            "scan_a" => self.scan_a = parse_list(value, parse_f64)?,
            "scan_phi" => self.scan_phi = parse_list(value, parse_angle)?,
            "preset" => self.apply_preset(value).map_err(|e| SetError::Value(e.to_string()))?,
            _ => return Err(SetError::UnknownKey),
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum SetError {
    UnknownKey,
    Value(String),
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, SetError> {
    s.parse()
        .map_err(|_| SetError::Value(format!("cannot parse `{s}`")))
}

fn parse_f64(s: &str) -> std::result::Result<f64, SetError> {
    parse_num(s)
}

/// A number, or a multiple of π written as `pi`, `pi/2`, `3*pi/4`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, SetError> {
    let t = s.trim();
    let Some(pos) = t.find("pi") else {
        return parse_f64(t);
    };
    let bad = || SetError::Value(format!("cannot parse angle `{s}`"));
    let head = t[..pos].trim();
    let tail = t[pos + 2..].trim();
    let mult = if head.is_empty() {
        1.0
    } else {
        head.strip_suffix('*')
            .ok_or_else(bad)?
            .trim()
            .parse::<f64>()
            .map_err(|_| bad())?
    };
    let div = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/')
            .ok_or_else(bad)?
            .trim()
            .parse::<f64>()
            .map_err(|_| bad())?
    };
    Ok(mult * PI / div)
}

pub fn parse_variant(s: &str) -> std::result::Result<Variant, SetError> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "asprinted" => Ok(Variant::AsPrinted),
        "tensorproduct" => Ok(Variant::TensorProduct),
        _ => Err(SetError::Value(format!("unknown variant `{s}`"))),
    }
}

pub fn parse_coin_mode(s: &str) -> std::result::Result<CoinMode, SetError> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "corrected" => Ok(CoinMode::Corrected),
        "asprinted" => Ok(CoinMode::AsPrinted),
        _ => Err(SetError::Value(format!("unknown coin mode `{s}`"))),
    }
}

pub fn parse_engine(s: &str) -> std::result::Result<Engine, SetError> {
    match s.to_ascii_lowercase().as_str() {
        "direct" => Ok(Engine::Direct),
        "fourier" => Ok(Engine::Fourier),
        _ => Err(SetError::Value(format!("unknown engine `{s}`"))),
    }
}

pub fn parse_window(s: &str) -> std::result::Result<(usize, usize), SetError> {
    let v: Vec<usize> = parse_list(s, parse_num)?;
    match v.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(SetError::Value(format!("fit window `{s}` must be `lo,hi`"))),
    }
}

fn parse_list<T>(
    s: &str,
    item: impl Fn(&str) -> std::result::Result<T, SetError>,
) -> std::result::Result<Vec<T>, SetError> {
    s.split(',').map(|x| item(x.trim())).collect()
}

/// Reads a flat `key = value` file onto the defaults. Blank lines and
/// lines starting with `#` are skipped.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = RunConfig::default();
    apply_config_text(&mut cfg, &text)?;
    Ok(cfg)
}

pub fn apply_config_text(cfg: &mut RunConfig, text: &str) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| WalkError::Config {
            line,
            message: format!("expected `key = value`, found `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        cfg.set(key, value).map_err(|e| match e {
            SetError::UnknownKey => WalkError::UnknownKey {
                line,
                key: key.to_string(),
            },
            SetError::Value(message) => WalkError::Config {
                line,
                message: format!("{key}: {message}"),
            },
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        apply_config_text(&mut cfg, text)?;
        Ok(cfg)
    }

    #[test]
    fn empty_gives_defaults() {
        let cfg = from_text("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.grid_n(), 1024);
        assert_eq!(cfg.fit_window(), (32, 256));
    }

    #[test]
    fn comments_and_values() {
        let cfg = from_text("# run\np = 0.3\n\nphi = 3*pi/4\nscan_a = 0, 0.5\nfit_window = 8,64\n").unwrap();
        assert_eq!(cfg.p, 0.3);
        assert!((cfg.phi - 0.75 * PI).abs() < 1e-15);
        assert_eq!(cfg.scan_a, [0.0, 0.5]);
        assert_eq!(cfg.fit_window, Some((8, 64)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match from_text("p = 0.3\nbogus = 1\n") {
            Err(WalkError::UnknownKey { line: 2, key }) => assert_eq!(key, "bogus"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(from_text("\n\nr = x"), Err(WalkError::Config { line: 3, .. })));
        assert!(matches!(from_text("p 0.3"), Err(WalkError::Config { line: 1, .. })));
    }

    #[test]
    fn range_error_names_key() {
        let cfg = from_text("p = 1.5").unwrap();
        match cfg.validate() {
            Err(WalkError::OutOfRange { name, .. }) => assert_eq!(name, "p"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert!(parse_angle("2pi").is_err());
    }

    #[test]
    fn grid_follows_step_length() {
        let cfg = from_text("r = 2\nt_max = 100").unwrap();
        assert_eq!(cfg.grid_n(), 512);
    }
}
