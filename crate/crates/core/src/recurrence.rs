//! Return probabilities, their decay exponent, Pólya partial products and
//! the mean-position probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::coin::{build_coin, build_initial_state, BiasParams, CoinMatrix, CoinMode, InitialCoinSpec, Variant};
use crate::error::{Result, WalkError};
use crate::evolution::{evolve_with, AmplitudeField};
use crate::linalg::{self, fmt_num};
use crate::spectral::amplitude_at_origin_series;
use crate::stationary::{peak_velocities_analytic, velocity_recurrence_criterion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Engine {
    Direct,
    #[default]
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnPoint {
    pub t: usize,
    pub p0: f64,
}

/// `P(0,0,t)` at the times the walker can be at the origin, `t ≡ 0 mod (r+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    pub params: BiasParams,
    pub initial: InitialCoinSpec,
    pub entries: Vec<ReturnPoint>,
}

impl ReturnSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p0\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.t, fmt_num(e.p0)));
        }
        out
    }
}

/// `0, r+1, 2(r+1), …` up to `t_max`.
pub fn admissible_times(r: u32, t_max: usize) -> Vec<usize> {
    (0..=t_max).step_by(r as usize + 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanPoint {
    pub t: usize,
    pub mean_x: f64,
    pub mean_y: f64,
}

struct DirectRun {
    returns: Vec<ReturnPoint>,
    means: Vec<MeanPoint>,
}

fn direct_run(params: &BiasParams, initial: &InitialCoinSpec, coin: &CoinMatrix, t_max: usize) -> Result<DirectRun> {
    let start = AmplitudeField::new_localized(*params, build_initial_state(initial))?;
    let period = params.r() as usize + 1;
    let mut returns = Vec::new();
    let mut means = Vec::with_capacity(t_max + 1);
    evolve_with(&start, coin, t_max, |field| {
        let t = field.t();
        if t % period == 0 {
            returns.push(ReturnPoint {
                t,
                p0: field.probability_at(0, 0),
            });
        }
        let (mean_x, mean_y) = field.mean_position();
        means.push(MeanPoint { t, mean_x, mean_y });
    })?;
    Ok(DirectRun { returns, means })
}

/// Return-probability series from either engine. The Fourier engine needs a
/// grid of at least `max(r,1)·t_max + 1` points per axis.
pub fn return_probability_series(
    params: &BiasParams,
    initial: &InitialCoinSpec,
    coin: &CoinMatrix,
    t_max: usize,
    engine: Engine,
    grid_n: usize,
) -> Result<ReturnSeries> {
    let period = params.r() as usize + 1;
    if t_max < period {
        return Err(WalkError::OutOfRange {
            name: "t_max",
            value: t_max as f64,
            expected: "t_max >= r + 1",
        });
    }
    let entries = match engine {
        Engine::Direct => direct_run(params, initial, coin, t_max)?.returns,
        Engine::Fourier => {
            if !coin.evolution_allowed() {
                return Err(WalkError::NotUnitary {
                    defect: crate::coin::unitarity_certificate(coin),
                });
            }
            let psi0 = build_initial_state(initial);
            let times = admissible_times(params.r(), t_max);
            let amps = amplitude_at_origin_series(&psi0, params, coin, &times, grid_n)?;
            // t = 0 is the initial state itself; the transform would only
            // reproduce it to rounding
            times
                .iter()
                .zip(amps)
                .map(|(&t, a)| ReturnPoint {
                    t,
                    p0: if t == 0 { psi0.norm_sq() } else { linalg::norm_sq(&a) },
                })
                .collect()
        }
    };
    Ok(ReturnSeries {
        params: *params,
        initial: *initial,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// `η` in `p0 ~ t^(−η)`.
    pub exponent: f64,
    /// Intercept of the line in `(ln t, ln p0)`.
    pub intercept: f64,
    pub t_lo: usize,
    pub t_hi: usize,
    /// RMS residual in log–log space.
    pub residual: f64,
    pub points_used: usize,
}

/// Upper envelope: the largest entry of each run of four consecutive points.
pub fn envelope(points: &[ReturnPoint]) -> Vec<ReturnPoint> {
    points
        .chunks(4)
        .map(|run| {
            *run.iter()
                .reduce(|best, e| if e.p0 > best.p0 { e } else { best })
                .expect("chunks are nonempty")
        })
        .collect()
}

/// Least-squares power law through the upper envelope of the positive
/// entries with `t_lo ≤ t ≤ t_hi`. Needs at least eight envelope points.
pub fn fit_decay_exponent(entries: &[ReturnPoint], window: (usize, usize)) -> Result<DecayFit> {
    let (t_lo, t_hi) = window;
    let inside: Vec<ReturnPoint> = entries
        .iter()
        .filter(|e| e.t >= t_lo.max(1) && e.t <= t_hi && e.p0 > 0.0)
        .copied()
        .collect();
    let env = envelope(&inside);
    if env.len() < 8 {
        return Err(WalkError::InsufficientPoints {
            found: env.len(),
            required: 8,
        });
    }
    let xs: Vec<f64> = env.iter().map(|e| (e.t as f64).ln()).collect();
    let ys: Vec<f64> = env.iter().map(|e| e.p0.ln()).collect();
    let n = xs.len() as f64;
    let mx = linalg::pairwise_sum(&xs) / n;
    let my = linalg::pairwise_sum(&ys) / n;
    let sxy: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx).powi(2)).collect();
    let slope = linalg::pairwise_sum(&sxy) / linalg::pairwise_sum(&sxx);
    let intercept = my - slope * mx;
    let sq: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).collect();
    Ok(DecayFit {
        exponent: -slope,
        intercept,
        t_lo,
        t_hi,
        residual: (linalg::pairwise_sum(&sq) / n).sqrt(),
        points_used: env.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyaEstimate {
    /// `(T, Π_{1≤t≤T} (1 − p0(t)))`.
    pub partial_products: Vec<(usize, f64)>,
    /// `(T, 1 − Π)`.
    pub polya_partial: Vec<(usize, f64)>,
    /// Limit estimate with the power-law tail folded in; absent when the
    /// tail diverges (`η ≤ 1`) or no fit was supplied.
    pub extrapolated: Option<f64>,
    /// Half-width between the upper and lower tail-sum bounds.
    pub extrapolation_error: Option<f64>,
}

impl PolyaEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,partial_product,polya_partial\n");
        for ((t, prod), (_, polya)) in self.partial_products.iter().zip(&self.polya_partial) {
            out.push_str(&format!("{},{},{}\n", t, fmt_num(*prod), fmt_num(*polya)));
        }
        out
    }

    pub fn last_partial(&self) -> f64 {
        self.polya_partial.last().map_or(0.0, |&(_, v)| v)
    }
}

/// Running `Π(1 − p0(t))` over `t ≥ 1`. With a fit, the tail
/// `Σ_{t>T} p0(t)` is bounded by integrals of the fitted power law over
/// `[T, ∞)` and `[T+r+1, ∞)`, and the midpoint is reported.
pub fn polya_partial_products(series: &ReturnSeries, fit: Option<&DecayFit>) -> PolyaEstimate {
    let mut prod = 1.0f64;
    let mut partial_products = Vec::new();
    let mut polya_partial = Vec::new();
    for e in series.entries.iter().filter(|e| e.t >= 1) {
        prod *= (1.0 - e.p0).clamp(0.0, 1.0);
        partial_products.push((e.t, prod));
        polya_partial.push((e.t, 1.0 - prod));
    }
    let mut extrapolated = None;
    let mut extrapolation_error = None;
    if let (Some(fit), Some(&(t_last, _))) = (fit, partial_products.last()) {
        if fit.exponent > 1.0 && t_last > 0 {
            let step = series.params.r() as f64 + 1.0;
            let amp = fit.intercept.exp();
            let eta = fit.exponent;
            let tail = |from: f64| amp * from.powf(1.0 - eta) / ((eta - 1.0) * step);
            let upper = tail(t_last as f64);
            let lower = tail(t_last as f64 + step);
            let at = |s: f64| 1.0 - prod * (-s).exp();
            extrapolated = Some(at(0.5 * (upper + lower)));
            extrapolation_error = Some(0.5 * (at(upper) - at(lower)).abs());
        }
    }
    PolyaEstimate {
        partial_products,
        polya_partial,
        extrapolated,
        extrapolation_error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanTrajectory {
    pub initial: InitialCoinSpec,
    pub points: Vec<MeanPoint>,
}

impl MeanTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean_x,mean_y\n");
        for m in &self.points {
            out.push_str(&format!("{},{},{}\n", m.t, fmt_num(m.mean_x), fmt_num(m.mean_y)));
        }
        out
    }
}

/// `(⟨x⟩, ⟨y⟩)` at every step up to `t_max`, from direct evolution.
pub fn mean_value_probe(
    params: &BiasParams,
    initial: &InitialCoinSpec,
    coin: &CoinMatrix,
    t_max: usize,
) -> Result<MeanTrajectory> {
    if t_max < 1 {
        return Err(WalkError::OutOfRange {
            name: "t_max",
            value: 0.0,
            expected: "t_max >= 1",
        });
    }
    Ok(MeanTrajectory {
        initial: *initial,
        points: direct_run(params, initial, coin, t_max)?.means,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanGrid {
    pub p: Vec<f64>,
    pub r: Vec<u32>,
    pub a: Vec<f64>,
    pub phi: Vec<f64>,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub p: f64,
    pub r: u32,
    pub a: f64,
    pub phi: f64,
    pub variant: Variant,
    pub t_max: usize,
    pub eta: f64,
    pub eta_residual: f64,
    pub polya_partial: f64,
    pub mean_x_over_t: f64,
    pub mean_y_over_t: f64,
    pub hull_criterion: bool,
}

pub const SCAN_HEADER: &str =
    "p,r,a,phi,variant,t_max,eta,eta_residual,polya_partial,mean_x_over_t,mean_y_over_t,hull_criterion";

impl ScanRow {
    pub fn to_csv_line(&self) -> String {
        [
            fmt_num(self.p),
            self.r.to_string(),
            fmt_num(self.a),
            fmt_num(self.phi),
            self.variant.to_string(),
            self.t_max.to_string(),
            fmt_num(self.eta),
            fmt_num(self.eta_residual),
            fmt_num(self.polya_partial),
            fmt_num(self.mean_x_over_t),
            fmt_num(self.mean_y_over_t),
            self.hull_criterion.to_string(),
        ]
        .join(",")
    }
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = format!("{SCAN_HEADER}\n");
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn scan_jsonl(rows: &[ScanRow]) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    Ok(out)
}

/// Default fit window `[t_max/8, t_max]`.
pub fn default_window(t_max: usize) -> (usize, usize) {
    (t_max / 8, t_max)
}

/// One direct simulation with the corrected coin per grid cell; rows come
/// back in grid order (p, then r, a, φ). A cell whose decay fit has too few
/// points reports `NaN` for η and its residual.
pub fn conjecture_scan(grid: &ScanGrid, t_max: usize, window: Option<(usize, usize)>) -> Result<Vec<ScanRow>> {
    if grid.p.is_empty() || grid.r.is_empty() || grid.a.is_empty() || grid.phi.is_empty() {
        return Err(WalkError::Invalid("scan grid has an empty axis".into()));
    }
    if t_max < 1 {
        return Err(WalkError::OutOfRange {
            name: "t_max",
            value: 0.0,
            expected: "t_max >= 1",
        });
    }
    let mut cells = Vec::new();
    for &p in &grid.p {
        for &r in &grid.r {
            for &a in &grid.a {
                for &phi in &grid.phi {
                    cells.push((BiasParams::new(p, r)?, InitialCoinSpec::new(a, phi, grid.variant)?));
                }
            }
        }
    }
    let window = window.unwrap_or_else(|| default_window(t_max));
    cells
        .par_iter()
        .map(|(params, initial)| scan_cell(params, initial, t_max, window))
        .collect()
}

fn scan_cell(params: &BiasParams, initial: &InitialCoinSpec, t_max: usize, window: (usize, usize)) -> Result<ScanRow> {
    let coin = build_coin(params, CoinMode::Corrected);
    let run = direct_run(params, initial, &coin, t_max)?;
    let series = ReturnSeries {
        params: *params,
        initial: *initial,
        entries: run.returns,
    };
    let fit = fit_decay_exponent(&series.entries, window).ok();
    let polya = polya_partial_products(&series, fit.as_ref());
    let last = run.means.last().expect("t_max >= 1");
    let t = last.t as f64;
    Ok(ScanRow {
        p: params.p(),
        r: params.r(),
        a: initial.a(),
        phi: initial.phi(),
        variant: initial.variant(),
        t_max,
        eta: fit.map_or(f64::NAN, |f| f.exponent),
        eta_residual: fit.map_or(f64::NAN, |f| f.residual),
        polya_partial: polya.last_partial(),
        mean_x_over_t: (last.mean_x / t).abs(),
        mean_y_over_t: (last.mean_y / t).abs(),
        hull_criterion: velocity_recurrence_criterion(&peak_velocities_analytic(params)).origin_inside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::Chirality;
    use crate::evolution::step;
    use crate::spectral::min_grid_origin;

    fn synthetic(f: impl Fn(f64) -> f64, t_max: usize) -> Vec<ReturnPoint> {
        (1..=t_max)
            .map(|t| ReturnPoint {
                t,
                p0: f(t as f64),
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        for eta in [0.5, 1.0, 2.0, 3.0] {
            let pts = synthetic(|t| 5.0 * t.powf(-eta), 4096);
            let fit = fit_decay_exponent(&pts, (16, 4096)).unwrap();
            assert!((fit.exponent - eta).abs() < 1e-6, "{fit:?}");
            assert!((fit.intercept - 5f64.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn oscillating_power_laws() {
        for eta in [0.5, 1.0, 2.0, 3.0] {
            let pts = synthetic(|t| t.powf(-eta) * (1.0 + 0.5 * t.sin()), 4096);
            let fit = fit_decay_exponent(&pts, (16, 4096)).unwrap();
            assert!((fit.exponent - eta).abs() < 0.05, "{fit:?}");
        }
    }

    #[test]
    fn fit_needs_points() {
        let pts = synthetic(|t| t.powi(-2), 20);
        assert!(matches!(
            fit_decay_exponent(&pts, (1, 20)),
            Err(WalkError::InsufficientPoints { found: 5, .. })
        ));
    }

    fn series_of(values: &[f64]) -> ReturnSeries {
        ReturnSeries {
            params: BiasParams::new(0.5, 1).unwrap(),
            initial: InitialCoinSpec::new(1.0, 0.0, Variant::AsPrinted).unwrap(),
            entries: values
                .iter()
                .enumerate()
                .map(|(i, &p0)| ReturnPoint { t: 2 * i, p0 })
                .collect(),
        }
    }

    #[test]
    fn absorbing_and_empty_polya() {
        let est = polya_partial_products(&series_of(&[1.0, 0.2, 1.0, 0.3]), None);
        assert_eq!(est.polya_partial.last().unwrap().1, 1.0);
        assert_eq!(est.partial_products[1].1, 0.0);
        let est = polya_partial_products(&series_of(&[1.0, 0.0, 0.0, 0.0]), None);
        assert!(est.polya_partial.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn divergent_tail_is_not_extrapolated() {
        let s = series_of(&[1.0, 0.1, 0.05]);
        let fit = DecayFit {
            exponent: 0.9,
            intercept: 0.0,
            t_lo: 1,
            t_hi: 4,
            residual: 0.0,
            points_used: 8,
        };
        assert_eq!(polya_partial_products(&s, Some(&fit)).extrapolated, None);
        let fit = DecayFit { exponent: 2.0, ..fit };
        let est = polya_partial_products(&s, Some(&fit));
        let x = est.extrapolated.unwrap();
        assert!(x > est.last_partial() && x <= 1.0);
        assert!(est.extrapolation_error.unwrap() > 0.0);
    }

    #[test]
    fn two_step_return_by_path_sum() {
        // every two-step path back to the origin is one step out and one
        // step back: R then L, L then R, U then D, D then U
        let params = BiasParams::new(0.5, 1).unwrap();
        let coin = build_coin(&params, CoinMode::Corrected);
        let c = coin.entries();
        let initial = InitialCoinSpec::new(1.0, 0.0, Variant::AsPrinted).unwrap();
        let psi0 = build_initial_state(&initial).0;
        assert_eq!(psi0, crate::coin::CoinState4::basis(Chirality::R).0);
        let mut amp = [linalg::ZERO; 4];
        for (first, back) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            let a1 = c[first][0];
            for i in 0..4 {
                if i == back {
                    amp[i] += c[i][first] * a1;
                }
            }
        }
        let expect = linalg::norm_sq(&amp);
        for engine in [Engine::Direct, Engine::Fourier] {
            let s = return_probability_series(&params, &initial, &coin, 2, engine, 8).unwrap();
            assert_eq!(s.entries[0].p0, 1.0);
            assert!((s.entries[1].p0 - expect).abs() < 1e-12, "{engine:?} {}", s.entries[1].p0);
        }
    }

    #[test]
    fn long_step_series_uses_multiples() {
        let params = BiasParams::new(0.5, 2).unwrap();
        let coin = build_coin(&params, CoinMode::Corrected);
        let initial = InitialCoinSpec::new(0.5, 1.0, Variant::AsPrinted).unwrap();
        let s = return_probability_series(&params, &initial, &coin, 12, Engine::Direct, 0).unwrap();
        let ts: Vec<usize> = s.entries.iter().map(|e| e.t).collect();
        assert_eq!(ts, [0, 3, 6, 9, 12]);
        // the skipped times really are empty
        let mut f = AmplitudeField::new_localized(params, build_initial_state(&initial)).unwrap();
        for t in 1..=12 {
            f = step(&f, &coin).unwrap();
            if t % 3 != 0 {
                assert!(f.probability_at(0, 0) < 1e-14);
            }
        }
    }

    #[test]
    fn engines_agree_short() {
        let params = BiasParams::new(0.7, 2).unwrap();
        let coin = build_coin(&params, CoinMode::Corrected);
        let initial = InitialCoinSpec::new(0.3, 2.0, Variant::TensorProduct).unwrap();
        let n = min_grid_origin(2, 30);
        let d = return_probability_series(&params, &initial, &coin, 30, Engine::Direct, n).unwrap();
        let f = return_probability_series(&params, &initial, &coin, 30, Engine::Fourier, n).unwrap();
        for (a, b) in d.entries.iter().zip(&f.entries) {
            assert_eq!(a.t, b.t);
            assert!((a.p0 - b.p0).abs() < 1e-12);
        }
        assert!(return_probability_series(&params, &initial, &coin, 30, Engine::Fourier, n - 1).is_err());
        assert!(return_probability_series(&params, &initial, &coin, 2, Engine::Direct, n).is_err());
    }

    #[test]
    fn mean_probe_first_step() {
        let params = BiasParams::new(0.5, 1).unwrap();
        let coin = build_coin(&params, CoinMode::Corrected);
        let initial = InitialCoinSpec::new(1.0, 0.0, Variant::AsPrinted).unwrap();
        let m = mean_value_probe(&params, &initial, &coin, 1).unwrap();
        assert_eq!(m.points[0].mean_x, 0.0);
        assert!(m.points[1].mean_x.abs() < 1e-15 && m.points[1].mean_y.abs() < 1e-15);
        assert!(mean_value_probe(&params, &initial, &coin, 0).is_err());
    }

    #[test]
    fn scan_cell_matches_ops() {
        let grid = ScanGrid {
            p: vec![0.5],
            r: vec![1],
            a: vec![0.5],
            phi: vec![1.5],
            variant: Variant::AsPrinted,
        };
        let rows = conjecture_scan(&grid, 64, None).unwrap();
        assert_eq!(rows.len(), 1);
        let params = BiasParams::new(0.5, 1).unwrap();
        let coin = build_coin(&params, CoinMode::Corrected);
        let initial = InitialCoinSpec::new(0.5, 1.5, Variant::AsPrinted).unwrap();
        let s = return_probability_series(&params, &initial, &coin, 64, Engine::Direct, 0).unwrap();
        let fit = fit_decay_exponent(&s.entries, default_window(64)).unwrap();
        let polya = polya_partial_products(&s, Some(&fit));
        let mean = mean_value_probe(&params, &initial, &coin, 64).unwrap();
        let row = rows[0];
        assert_eq!(row.eta.to_bits(), fit.exponent.to_bits());
        assert_eq!(row.eta_residual.to_bits(), fit.residual.to_bits());
        assert_eq!(row.polya_partial.to_bits(), polya.last_partial().to_bits());
        let last = mean.points.last().unwrap();
        assert_eq!(row.mean_x_over_t.to_bits(), (last.mean_x / 64.0).abs().to_bits());
        assert!(scan_csv(&rows).starts_with(SCAN_HEADER));
    }
}
