//! Position-space evolution on a dense window that grows with the walk's
//! reachable support: after `t` steps the window is `[−t, r·t]²`.
//!
//! One step gathers, for every output site,
//! `ψ'(x,y) = C_R ψ(x−r,y) + C_L ψ(x+1,y) + C_U ψ(x,y−r) + C_D ψ(x,y+1)`,
//! i.e. the coin is applied at the source site and each chirality component
//! is read from the site its shift originates from.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coin::{BiasParams, CoinMatrix, CoinState4};
use crate::error::{Result, WalkError};
use crate::linalg::{self, fmt_num, mat_vec, Vec4, ZERO};

/// Amplitude components below this magnitude are flushed to zero, which keeps
/// probabilities clear of the subnormal range (|z|² < 1e-300).
const AMPLITUDE_FLUSH: f64 = 1e-150;

/// Inclusive integer rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl Window {
    pub fn origin() -> Self {
        Self {
            x_min: 0,
            x_max: 0,
            y_min: 0,
            y_max: 0,
        }
    }

    /// The reachable window `[−t, r·t]²`.
    pub fn reachable(r: u32, t: usize) -> Self {
        let t = t as i64;
        let hi = r as i64 * t;
        Self {
            x_min: -t,
            x_max: hi,
            y_min: -t,
            y_max: hi,
        }
    }

    pub fn width(&self) -> usize {
        (self.x_max - self.x_min + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_max - self.y_min + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    #[inline]
    pub fn index(&self, x: i64, y: i64) -> Option<usize> {
        if self.contains(x, y) {
            Some((y - self.y_min) as usize * self.width() + (x - self.x_min) as usize)
        } else {
            None
        }
    }

    fn grown(&self, r: u32) -> Self {
        let r = r as i64;
        Self {
            x_min: self.x_min - 1,
            x_max: self.x_max + r,
            y_min: self.y_min - 1,
            y_max: self.y_max + r,
        }
    }
}

/// Dense per-site amplitudes in (R, L, U, D) order, stored row-major in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeField {
    params: BiasParams,
    window: Window,
    t: usize,
    data: Vec<Vec4>,
}

impl AmplitudeField {
    pub fn new_localized(params: BiasParams, coin_state: CoinState4) -> Result<Self> {
        let norm_sq = coin_state.norm_sq();
        if (norm_sq - 1.0).abs() > 1e-9 {
            return Err(WalkError::NotNormalized { norm_sq });
        }
        Ok(Self {
            params,
            window: Window::origin(),
            t: 0,
            data: vec![coin_state.0],
        })
    }

    /// Builds a field from raw data laid out row-major in `y`.
    pub fn from_parts(params: BiasParams, window: Window, t: usize, data: Vec<Vec4>) -> Result<Self> {
        if data.len() != window.len() {
            return Err(WalkError::Invalid(format!(
                "field data has {} sites, window holds {}",
                data.len(),
                window.len()
            )));
        }
        Ok(Self {
            params,
            window,
            t,
            data,
        })
    }

    pub fn params(&self) -> &BiasParams {
        &self.params
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn data(&self) -> &[Vec4] {
        &self.data
    }

    pub fn amplitude_at(&self, x: i64, y: i64) -> Vec4 {
        self.window.index(x, y).map_or([ZERO; 4], |i| self.data[i])
    }

    pub fn probability_at(&self, x: i64, y: i64) -> f64 {
        linalg::norm_sq(&self.amplitude_at(x, y))
    }

    pub fn probability_field(&self) -> ProbabilityField {
        let values = self
            .data
            .iter()
            .map(|v| {
                let p = linalg::norm_sq(v);
                if p < 1e-300 {
                    0.0
                } else {
                    p
                }
            })
            .collect();
        ProbabilityField {
            window: self.window,
            t: self.t,
            values,
        }
    }

    pub fn total_probability(&self) -> f64 {
        let p: Vec<f64> = self.data.iter().map(linalg::norm_sq).collect();
        linalg::pairwise_sum(&p)
    }

    pub fn mean_position(&self) -> (f64, f64) {
        self.probability_field().mean_position()
    }

    /// `alpha·self + beta·other`; both fields must share window and time.
    pub fn linear_combination(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        if self.window != other.window || self.t != other.t {
            return Err(WalkError::Invalid(
                "linear combination needs identical windows and times".into(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let mut out = [ZERO; 4];
                for c in 0..4 {
                    out[c] = alpha * a[c] + beta * b[c];
                }
                out
            })
            .collect();
        Ok(Self {
            data,
            ..self.clone()
        })
    }

    /// Largest componentwise amplitude difference over the union of windows.
    pub fn max_amplitude_diff(&self, other: &Self) -> f64 {
        let w = Window {
            x_min: self.window.x_min.min(other.window.x_min),
            x_max: self.window.x_max.max(other.window.x_max),
            y_min: self.window.y_min.min(other.window.y_min),
            y_max: self.window.y_max.max(other.window.y_max),
        };
        let mut worst = 0.0f64;
        for y in w.y_min..=w.y_max {
            for x in w.x_min..=w.x_max {
                let a = self.amplitude_at(x, y);
                let b = other.amplitude_at(x, y);
                for c in 0..4 {
                    worst = worst.max((a[c] - b[c]).norm());
                }
            }
        }
        worst
    }
}

/// One application of `S·(I ⊗ C)`.
pub fn step(field: &AmplitudeField, coin: &CoinMatrix) -> Result<AmplitudeField> {
    if !coin.evolution_allowed() {
        return Err(WalkError::NotUnitary {
            defect: crate::coin::unitarity_certificate(coin),
        });
    }
    let c = coin.entries();
    let r = field.params.r() as i64;
    let old = field.window;
    let new = old.grown(field.params.r());

    let coined: Vec<Vec4> = field.data.par_iter().map(|v| mat_vec(c, v)).collect();

    let old_w = old.width();
    let new_w = new.width();
    let row_of = |y: i64| -> Option<&[Vec4]> {
        if y < old.y_min || y > old.y_max {
            None
        } else {
            let start = (y - old.y_min) as usize * old_w;
            Some(&coined[start..start + old_w])
        }
    };
    let pick = |row: Option<&[Vec4]>, x: i64, comp: usize| -> Complex64 {
        match row {
            Some(row) if x >= old.x_min && x <= old.x_max => row[(x - old.x_min) as usize][comp],
            _ => ZERO,
        }
    };

    let mut data = vec![[ZERO; 4]; new.len()];
    data.par_chunks_mut(new_w)
        .enumerate()
        .for_each(|(iy, out_row)| {
            let y = new.y_min + iy as i64;
            let same = row_of(y);
            let below = row_of(y - r);
            let above = row_of(y + 1);
            for (ix, out) in out_row.iter_mut().enumerate() {
                let x = new.x_min + ix as i64;
                let mut v = [
                    pick(same, x - r, 0),
                    pick(same, x + 1, 1),
                    pick(below, x, 2),
                    pick(above, x, 3),
                ];
                for z in v.iter_mut() {
                    if z.re.abs() < AMPLITUDE_FLUSH {
                        z.re = 0.0;
                    }
                    if z.im.abs() < AMPLITUDE_FLUSH {
                        z.im = 0.0;
                    }
                }
                *out = v;
            }
        });

    Ok(AmplitudeField {
        params: field.params,
        window: new,
        t: field.t + 1,
        data,
    })
}

pub fn evolve(field: &AmplitudeField, coin: &CoinMatrix, steps: usize) -> Result<AmplitudeField> {
    let mut current = field.clone();
    for _ in 0..steps {
        current = step(&current, coin)?;
    }
    Ok(current)
}

/// Evolves for `steps` steps, handing every intermediate field (including
/// the start) to `visit`.
pub fn evolve_with<F>(field: &AmplitudeField, coin: &CoinMatrix, steps: usize, mut visit: F) -> Result<AmplitudeField>
where
    F: FnMut(&AmplitudeField),
{
    let mut current = field.clone();
    visit(&current);
    for _ in 0..steps {
        current = step(&current, coin)?;
        visit(&current);
    }
    Ok(current)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub x: i64,
    pub y: i64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    window: Window,
    t: usize,
    values: Vec<f64>,
}

impl ProbabilityField {
    pub fn from_values(window: Window, t: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(WalkError::Invalid("probability data does not fill the window".into()));
        }
        Ok(Self { window, t, values })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn probability_at(&self, x: i64, y: i64) -> f64 {
        self.window.index(x, y).map_or(0.0, |i| self.values[i])
    }

    pub fn total(&self) -> f64 {
        linalg::pairwise_sum(&self.values)
    }

    pub fn mean_position(&self) -> (f64, f64) {
        let w = self.window;
        let mut xs = Vec::with_capacity(self.values.len());
        let mut ys = Vec::with_capacity(self.values.len());
        for (i, &p) in self.values.iter().enumerate() {
            let x = w.x_min + (i % w.width()) as i64;
            let y = w.y_min + (i / w.width()) as i64;
            xs.push(x as f64 * p);
            ys.push(y as f64 * p);
        }
        (linalg::pairwise_sum(&xs), linalg::pairwise_sum(&ys))
    }

    /// Local maxima over the 8-neighborhood with `P ≥ threshold_fraction·max P`,
    /// merged into 8-connected clusters. Each cluster reports its largest
    /// site; ties go to the lexicographically smallest `(x, y)`. Sorted by
    /// decreasing probability.
    pub fn peak_positions(&self, threshold_fraction: f64) -> Result<Vec<Peak>> {
        if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
            return Err(WalkError::OutOfRange {
                name: "threshold_fraction",
                value: threshold_fraction,
                expected: "0 < threshold_fraction <= 1",
            });
        }
        let w = self.window;
        let max = self.values.iter().cloned().fold(0.0f64, f64::max);
        if max <= 0.0 {
            return Ok(Vec::new());
        }
        let cut = threshold_fraction * max;
        let (width, height) = (w.width() as i64, w.height() as i64);
        let at = |ix: i64, iy: i64| -> f64 {
            if ix < 0 || iy < 0 || ix >= width || iy >= height {
                0.0
            } else {
                self.values[(iy * width + ix) as usize]
            }
        };

        let mut is_max = vec![false; self.values.len()];
        for iy in 0..height {
            for ix in 0..width {
                let v = at(ix, iy);
                if v < cut || v <= 0.0 {
                    continue;
                }
                let mut local = true;
                'nb: for dy in -1..=1 {
                    for dx in -1..=1 {
                        if (dx, dy) != (0, 0) && at(ix + dx, iy + dy) > v {
                            local = false;
                            break 'nb;
                        }
                    }
                }
                is_max[(iy * width + ix) as usize] = local;
            }
        }

        let mut seen = vec![false; self.values.len()];
        let mut peaks = Vec::new();
        let mut stack = Vec::new();
        // x-major scan so the first site of a cluster is its lexicographic minimum
        for ix in 0..width {
            for iy in 0..height {
                let start = (iy * width + ix) as usize;
                if !is_max[start] || seen[start] {
                    continue;
                }
                seen[start] = true;
                stack.push((ix, iy));
                let mut best = (ix, iy, at(ix, iy));
                while let Some((cx, cy)) = stack.pop() {
                    let v = at(cx, cy);
                    if v > best.2 || (v == best.2 && (cx, cy) < (best.0, best.1)) {
                        best = (cx, cy, v);
                    }
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            let (nx, ny) = (cx + dx, cy + dy);
                            if nx < 0 || ny < 0 || nx >= width || ny >= height {
                                continue;
                            }
                            let ni = (ny * width + nx) as usize;
                            if is_max[ni] && !seen[ni] {
                                seen[ni] = true;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
                peaks.push(Peak {
                    x: w.x_min + best.0,
                    y: w.y_min + best.1,
                    p: best.2,
                });
            }
        }
        peaks.sort_by(|a, b| b.p.total_cmp(&a.p).then((a.x, a.y).cmp(&(b.x, b.y))));
        Ok(peaks)
    }

    /// CSV `x,y,p` over sites with `P > export_floor`, ordered by `(x, y)`.
    pub fn to_csv(&self, export_floor: f64) -> String {
        let w = self.window;
        let mut out = String::from("x,y,p\n");
        for x in w.x_min..=w.x_max {
            for y in w.y_min..=w.y_max {
                let p = self.probability_at(x, y);
                if p > export_floor {
                    let _ = writeln!(out, "{x},{y},{}", fmt_num(p));
                }
            }
        }
        out
    }
}
