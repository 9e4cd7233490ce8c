//! Stationary-phase analysis of the four phase surfaces
//! `w_j(k) = w_a(u⁺) + w_b(u⁻)`, `u± = (kₓ ± k_y)/2`.
//!
//! Every closed form here has a numeric counterpart: gradients and Hessian
//! blocks are checked against central differences, saddle points against
//! multi-start Newton, velocities against the modified-phase construction.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::coin::BiasParams;
use crate::error::{Result, WalkError};
use crate::spectral::{phase_w, surface_phase, theta, Branch, MomentumPoint, SURFACE_BRANCHES};

/// Surface index `j ∈ {1,2,3,4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PhaseSurfaceId(u8);

impl PhaseSurfaceId {
    pub const ALL: [PhaseSurfaceId; 4] = [PhaseSurfaceId(1), PhaseSurfaceId(2), PhaseSurfaceId(3), PhaseSurfaceId(4)];

    pub fn new(j: u8) -> Result<Self> {
        if (1..=4).contains(&j) {
            Ok(Self(j))
        } else {
            Err(WalkError::OutOfRange {
                name: "j",
                value: j as f64,
                expected: "j in {1,2,3,4}",
            })
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    fn branches(self) -> (Branch, Branch) {
        SURFACE_BRANCHES[self.0 as usize - 1]
    }
}

fn sign(branch: Branch) -> f64 {
    match branch {
        Branch::One => 1.0,
        Branch::Two => -1.0,
    }
}

/// `dw/du` of one branch.
pub fn dphase(u: f64, params: &BiasParams, branch: Branch) -> f64 {
    let rf = params.rf();
    let th = theta(u, params);
    let q = 1.0 - params.p() * th.sin().powi(2);
    0.5 * (rf - 1.0) + sign(branch) * params.p().sqrt() * th.cos() * 0.5 * (rf + 1.0) / q.sqrt()
}

/// `d²w/du²` of one branch.
pub fn d2phase(u: f64, params: &BiasParams, branch: Branch) -> f64 {
    let rf = params.rf();
    let p = params.p();
    let th = theta(u, params);
    let q = 1.0 - p * th.sin().powi(2);
    -sign(branch) * 0.25 * (rf + 1.0).powi(2) * p.sqrt() * th.sin() * (1.0 - p) / q.powf(1.5)
}

pub fn grad_w_analytic(j: PhaseSurfaceId, k: MomentumPoint, params: &BiasParams) -> (f64, f64) {
    let (a, b) = j.branches();
    let dp = dphase(k.u_plus(), params, a);
    let dm = dphase(k.u_minus(), params, b);
    (0.5 * (dp + dm), 0.5 * (dp - dm))
}

/// Exact Hessian `[[∂ₓₓ, ∂ₓᵧ], [∂ᵧₓ, ∂ᵧᵧ]]` from the chain rule.
pub fn hessian_exact(j: PhaseSurfaceId, k: MomentumPoint, params: &BiasParams) -> [[f64; 2]; 2] {
    let (a, b) = j.branches();
    let hp = d2phase(k.u_plus(), params, a);
    let hm = d2phase(k.u_minus(), params, b);
    let diag = 0.25 * (hp + hm);
    let off = 0.25 * (hp - hm);
    [[diag, off], [off, diag]]
}

fn grad_norm(g: (f64, f64)) -> f64 {
    g.0.hypot(g.1)
}

/// `f(k) = √p cos θ⁺ ((r+1)/4) / √(1 − p sin²θ⁺)`, the `u⁺` half of the
/// first derivative; [`g_term`] is the same in `u⁻`.
pub fn f_term(k: MomentumPoint, params: &BiasParams) -> f64 {
    half_slope(k.u_plus(), params)
}

pub fn g_term(k: MomentumPoint, params: &BiasParams) -> f64 {
    half_slope(k.u_minus(), params)
}

fn half_slope(u: f64, params: &BiasParams) -> f64 {
    let th = theta(u, params);
    let q = 1.0 - params.p() * th.sin().powi(2);
    params.p().sqrt() * th.cos() * 0.25 * (params.rf() + 1.0) / q.sqrt()
}

/// The four displayed second-derivative building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianTerms {
    pub df_dkx: f64,
    pub df_dky: f64,
    pub dg_dkx: f64,
    pub dg_dky: f64,
}

/// `(r+1)²/16 · √p sin θ / √Q` and `(r+1)²/16 · p√p cos²θ sin θ / Q^{3/2}`.
fn block_parts(u: f64, params: &BiasParams) -> (f64, f64) {
    let p = params.p();
    let th = theta(u, params);
    let (s, c) = th.sin_cos();
    let q = 1.0 - p * s * s;
    let scale = (params.rf() + 1.0).powi(2) / 16.0;
    let lin = scale * p.sqrt() * s / q.sqrt();
    let cubic = scale * p * p.sqrt() * c * c * s / q.powf(1.5);
    (lin, cubic)
}

/// Literal evaluation of the displayed blocks, with their printed signs:
/// `∂f/∂kₓ = −A⁺ − B⁺`, `∂f/∂k_y = A⁺ + B⁺`, `∂g/∂kₓ = −A⁻ + B⁻`,
/// `∂g/∂k_y = A⁻ − B⁻`.
pub fn hessian_terms(k: MomentumPoint, params: &BiasParams) -> HessianTerms {
    let (ap, bp) = block_parts(k.u_plus(), params);
    let (am, bm) = block_parts(k.u_minus(), params);
    HessianTerms {
        df_dkx: -ap - bp,
        df_dky: ap + bp,
        dg_dkx: -am + bm,
        dg_dky: am - bm,
    }
}

/// The same blocks obtained by differentiating `f` and `g` exactly.
pub fn hessian_terms_exact(k: MomentumPoint, params: &BiasParams) -> HessianTerms {
    let (ap, bp) = block_parts(k.u_plus(), params);
    let (am, bm) = block_parts(k.u_minus(), params);
    HessianTerms {
        df_dkx: -ap + bp,
        df_dky: -ap + bp,
        dg_dkx: -am + bm,
        dg_dky: am - bm,
    }
}

/// Second derivatives of surface `j` assembled from blocks by the displayed
/// ± combinations. `yx` is `∂/∂k_y(∂w/∂kₓ)`, `xy` is `∂/∂kₓ(∂w/∂k_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssembledSecondDerivatives {
    pub xx: f64,
    pub yy: f64,
    pub yx: f64,
    pub xy: f64,
}

pub fn assemble_second_derivatives(j: PhaseSurfaceId, t: &HessianTerms) -> AssembledSecondDerivatives {
    let (fx, fy, gx, gy) = (t.df_dkx, t.df_dky, t.dg_dkx, t.dg_dky);
    match j.get() {
        1 => AssembledSecondDerivatives {
            xx: fx + gx,
            yy: fy - gy,
            yx: fy + gx,
            xy: fx - gx,
        },
        2 => AssembledSecondDerivatives {
            xx: fx - gx,
            yy: fy + gy,
            yx: fy - gx,
            xy: fx + gx,
        },
        3 => AssembledSecondDerivatives {
            xx: gx - fx,
            yy: -gy - fy,
            yx: gy - fy,
            xy: -gx - fx,
        },
        _ => AssembledSecondDerivatives {
            xx: -fx - gx,
            yy: -fy + gy,
            yx: -gy - fy,
            xy: -fx + gx,
        },
    }
}

/// Deterministic low-discrepancy sample of `count` momenta in `[−π, π)²`.
pub fn audit_points(count: usize) -> Vec<MomentumPoint> {
    // additive recurrence on the plastic number
    const G: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / G, 1.0 / (G * G));
    (0..count)
        .map(|i| {
            let n = i as f64 + 1.0;
            let fx = (0.5 + a1 * n).fract();
            let fy = (0.5 + a2 * n).fract();
            MomentumPoint {
                kx: -PI + 2.0 * PI * fx,
                ky: -PI + 2.0 * PI * fy,
            }
        })
        .collect()
}

fn central<F: Fn(f64, f64) -> f64>(f: F, k: MomentumPoint, h: f64) -> (f64, f64) {
    let dx = (f(k.kx + h, k.ky) - f(k.kx - h, k.ky)) / (2.0 * h);
    let dy = (f(k.kx, k.ky + h) - f(k.kx, k.ky - h)) / (2.0 * h);
    (dx, dy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub matches_fd: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_error,
            tolerance,
            matches_fd: max_error < tolerance,
        }
    }
}

/// Max componentwise gap between [`grad_w_analytic`] and central
/// differences (step 1e-6) of the phase surface, per surface.
pub fn gradient_audit(params: &BiasParams, points: &[MomentumPoint]) -> Vec<CheckResult> {
    const H: f64 = 1e-6;
    PhaseSurfaceId::ALL
        .iter()
        .map(|&j| {
            let idx = j.get() as usize - 1;
            let mut worst = 0.0f64;
            for &k in points {
                let (ax, ay) = grad_w_analytic(j, k, params);
                let (nx, ny) = central(|kx, ky| surface_phase(idx, MomentumPoint { kx, ky }, params), k, H);
                worst = worst.max((ax - nx).abs()).max((ay - ny).abs());
            }
            CheckResult::new(format!("grad_w{}", j.get()), worst, 1e-6)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianAudit {
    /// Displayed blocks against differences of `f` and `g`.
    pub blocks: Vec<CheckResult>,
    /// Exactly differentiated blocks against the same differences.
    pub exact_blocks: Vec<CheckResult>,
    /// Displayed combinations (with displayed blocks) against differences
    /// of the analytic gradient.
    pub assembled: Vec<CheckResult>,
    /// Displayed combinations fed with exactly differentiated blocks.
    pub assembled_exact_blocks: Vec<CheckResult>,
    /// Whether the two mixed partials of each surface agree numerically.
    pub mixed_symmetry: Vec<CheckResult>,
}

/// Finite-difference audit (step 1e-5, tolerance 1e-5) of the Hessian blocks
/// and of the second derivatives assembled from them.
pub fn hessian_audit(params: &BiasParams, points: &[MomentumPoint]) -> HessianAudit {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-5;
    let mut block_err = [0.0f64; 4];
    let mut exact_err = [0.0f64; 4];
    for &k in points {
        let t = hessian_terms(k, params);
        let e = hessian_terms_exact(k, params);
        let (fx, fy) = central(|kx, ky| f_term(MomentumPoint { kx, ky }, params), k, H);
        let (gx, gy) = central(|kx, ky| g_term(MomentumPoint { kx, ky }, params), k, H);
        let errs = [
            (t.df_dkx - fx).abs(),
            (t.df_dky - fy).abs(),
            (t.dg_dkx - gx).abs(),
            (t.dg_dky - gy).abs(),
        ];
        let exact = [
            (e.df_dkx - fx).abs(),
            (e.df_dky - fy).abs(),
            (e.dg_dkx - gx).abs(),
            (e.dg_dky - gy).abs(),
        ];
        for i in 0..4 {
            block_err[i] = block_err[i].max(errs[i]);
            exact_err[i] = exact_err[i].max(exact[i]);
        }
    }
    const NAMES: [&str; 4] = ["df_dkx", "df_dky", "dg_dkx", "dg_dky"];
    let blocks = NAMES.iter().zip(block_err).map(|(n, e)| CheckResult::new(*n, e, TOL)).collect();
    let exact_blocks = NAMES.iter().zip(exact_err).map(|(n, e)| CheckResult::new(*n, e, TOL)).collect();

    let mut assembled = Vec::new();
    let mut assembled_exact_blocks = Vec::new();
    let mut mixed_symmetry = Vec::new();
    for &j in &PhaseSurfaceId::ALL {
        let mut err = [0.0f64; 4];
        let mut err_exact = [0.0f64; 4];
        let mut sym = 0.0f64;
        for &k in points {
            let (xx, yx) = central(|kx, ky| grad_w_analytic(j, MomentumPoint { kx, ky }, params).0, k, H);
            let (xy, yy) = central(|kx, ky| grad_w_analytic(j, MomentumPoint { kx, ky }, params).1, k, H);
            let fd = [xx, yy, yx, xy];
            let printed = assemble_second_derivatives(j, &hessian_terms(k, params));
            let exact = assemble_second_derivatives(j, &hessian_terms_exact(k, params));
            for (i, (pv, ev)) in [
                (printed.xx, exact.xx),
                (printed.yy, exact.yy),
                (printed.yx, exact.yx),
                (printed.xy, exact.xy),
            ]
            .into_iter()
            .enumerate()
            {
                err[i] = err[i].max((pv - fd[i]).abs());
                err_exact[i] = err_exact[i].max((ev - fd[i]).abs());
            }
            sym = sym.max((yx - xy).abs());
        }
        for (i, name) in ["xx", "yy", "yx", "xy"].iter().enumerate() {
            assembled.push(CheckResult::new(format!("w{}_{}", j.get(), name), err[i], TOL));
            assembled_exact_blocks.push(CheckResult::new(format!("w{}_{}", j.get(), name), err_exact[i], TOL));
        }
        mixed_symmetry.push(CheckResult::new(format!("w{}_mixed", j.get()), sym, TOL));
    }
    HessianAudit {
        blocks,
        exact_blocks,
        assembled,
        assembled_exact_blocks,
        mixed_symmetry,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Saddle,
    Extremum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddlePoint {
    pub k0: MomentumPoint,
    pub surface: PhaseSurfaceId,
    pub grad_norm: f64,
    /// `D = ∂ₓₓ∂ᵧᵧ − (∂ₓᵧ)²`.
    pub hessian_det: f64,
    pub classification: Classification,
}

fn classify(j: PhaseSurfaceId, k: MomentumPoint, params: &BiasParams) -> SaddlePoint {
    let h = hessian_exact(j, k, params);
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let classification = if det.abs() < 1e-12 {
        Classification::Degenerate
    } else if det < 0.0 {
        Classification::Saddle
    } else {
        Classification::Extremum
    };
    SaddlePoint {
        k0: k,
        surface: j,
        grad_norm: grad_norm(grad_w_analytic(j, k, params)),
        hessian_det: det,
        classification,
    }
}

/// `(p(r+1)² − (r−1)²) / (p(r+1)² − p(r−1)²)`.
pub fn saddle_radicand(params: &BiasParams) -> f64 {
    let p = params.p();
    let rf = params.rf();
    let (a, b) = ((rf + 1.0).powi(2), (rf - 1.0).powi(2));
    (p * a - b) / (p * a - p * b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticSaddles {
    pub radicand: f64,
    /// The arcsin argument `√radicand` is not a real number in `[0, 1]`.
    pub complex_valued: bool,
    pub points: Vec<SaddlePoint>,
}

/// Closed-form candidates `u± = (2/(r+1))·arcsin(±√radicand)` with the
/// signs of `u⁺` and `u⁻` chosen independently: `(±kₓ₀, 0)` and `(0, ±kₓ₀)`.
/// Each point is attributed to the surface where its gradient is smallest.
pub fn saddle_points_analytic(params: &BiasParams) -> AnalyticSaddles {
    let radicand = saddle_radicand(params);
    if !(0.0..=1.0).contains(&radicand) {
        return AnalyticSaddles {
            radicand,
            complex_valued: true,
            points: Vec::new(),
        };
    }
    let half = 2.0 / (params.rf() + 1.0) * radicand.sqrt().asin();
    let mut points: Vec<SaddlePoint> = Vec::new();
    for (sp, sm) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        let (up, um) = (sp * half, sm * half);
        let k = MomentumPoint {
            kx: up + um,
            ky: up - um,
        };
        if points.iter().any(|q| q.k0 == k) {
            continue;
        }
        let best = PhaseSurfaceId::ALL
            .iter()
            .map(|&j| classify(j, k, params))
            .min_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm))
            .expect("four surfaces");
        points.push(best);
    }
    AnalyticSaddles {
        radicand,
        complex_valued: false,
        points,
    }
}

fn wrap_diff(d: f64) -> f64 {
    let m = (d + PI).rem_euclid(2.0 * PI) - PI;
    m.abs()
}

/// Distance on the 2π-periodic torus.
pub fn periodic_distance(a: MomentumPoint, b: MomentumPoint) -> f64 {
    wrap_diff(a.kx - b.kx).hypot(wrap_diff(a.ky - b.ky))
}

/// Damped Newton on `∇w_j` from a `seeds × seeds` grid of cell centres.
/// Steps are halved (up to 30 times) while the gradient norm would grow;
/// iteration stops at `‖∇w‖ < 1e-12` or after 100 steps. Converged points
/// (`‖∇w‖ < 1e-8`, inside `[−π, π]²`) are sorted and deduplicated modulo 2π.
pub fn saddle_points_numeric(j: PhaseSurfaceId, params: &BiasParams, seeds: usize) -> Result<Vec<SaddlePoint>> {
    if seeds < 8 {
        return Err(WalkError::OutOfRange {
            name: "seeds",
            value: seeds as f64,
            expected: "seeds >= 8",
        });
    }
    const SLACK: f64 = 1e-9;
    let mut found: Vec<MomentumPoint> = (0..seeds * seeds)
        .into_par_iter()
        .filter_map(|i| {
            let start = MomentumPoint {
                kx: -PI + 2.0 * PI * ((i % seeds) as f64 + 0.5) / seeds as f64,
                ky: -PI + 2.0 * PI * ((i / seeds) as f64 + 0.5) / seeds as f64,
            };
            newton(j, start, params).filter(|k| k.kx.abs() <= PI + SLACK && k.ky.abs() <= PI + SLACK)
        })
        .collect();
    found.sort_by(|a, b| a.kx.total_cmp(&b.kx).then(a.ky.total_cmp(&b.ky)));
    let mut unique: Vec<MomentumPoint> = Vec::new();
    for k in found {
        if !unique.iter().any(|u| periodic_distance(*u, k) < 1e-6) {
            unique.push(k);
        }
    }
    Ok(unique.into_iter().map(|k| classify(j, k, params)).collect())
}

fn newton(j: PhaseSurfaceId, start: MomentumPoint, params: &BiasParams) -> Option<MomentumPoint> {
    let mut k = start;
    let mut g = grad_w_analytic(j, k, params);
    let mut norm = grad_norm(g);
    for _ in 0..100 {
        if norm < 1e-12 {
            break;
        }
        let h = hessian_exact(j, k, params);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return None;
        }
        let dx = -(h[1][1] * g.0 - h[0][1] * g.1) / det;
        let dy = -(-h[1][0] * g.0 + h[0][0] * g.1) / det;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial = MomentumPoint {
                kx: k.kx + scale * dx,
                ky: k.ky + scale * dy,
            };
            let tg = grad_w_analytic(j, trial, params);
            let tn = grad_norm(tg);
            if tn <= norm {
                k = trial;
                g = tg;
                norm = tn;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm < 1e-8).then_some(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceCondition {
    pub recurrent_by_paper: bool,
    pub radicand: f64,
}

/// Whether the saddle radicand is `≤ 1`, which reduces to `p ≤ 1`.
pub fn recurrence_condition(params: &BiasParams) -> RecurrenceCondition {
    let radicand = saddle_radicand(params);
    RecurrenceCondition {
        recurrent_by_paper: radicand <= 1.0,
        radicand,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

/// Peak velocities under the labels R, L, U, D as they are carried by the
/// closed forms (the labels are not compass directions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityProfile {
    pub r: Velocity,
    pub l: Velocity,
    pub u: Velocity,
    pub d: Velocity,
}

impl VelocityProfile {
    pub fn labeled(&self) -> [(&'static str, Velocity); 4] {
        [("R", self.r), ("L", self.l), ("U", self.u), ("D", self.d)]
    }
}

pub fn peak_velocities_analytic(params: &BiasParams) -> VelocityProfile {
    let rf = params.rf();
    let drift = 0.5 * (rf - 1.0);
    let spread = params.p().sqrt() * 0.5 * (rf + 1.0);
    VelocityProfile {
        r: Velocity { vx: drift + spread, vy: 0.0 },
        l: Velocity { vx: drift, vy: spread },
        d: Velocity { vx: drift, vy: -spread },
        u: Velocity { vx: drift - spread, vy: 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HullCriterion {
    pub origin_inside: bool,
    pub degenerate: bool,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Whether the origin lies strictly inside the convex hull of the four
/// velocity points. Collinear points give `false` with `degenerate` set.
pub fn velocity_recurrence_criterion(profile: &VelocityProfile) -> HullCriterion {
    let mut pts: Vec<(f64, f64)> = profile.labeled().iter().map(|(_, v)| (v.vx, v.vy)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();

    // monotone chain, counter-clockwise, collinear points dropped
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &pt in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
                hull.pop();
            }
            hull.push(pt);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return HullCriterion {
            origin_inside: false,
            degenerate: true,
        };
    }
    let inside = (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], (0.0, 0.0)) > 0.0);
    HullCriterion {
        origin_inside: inside,
        degenerate: false,
    }
}

/// Roots of `d²w/du²` on `[−π, π]` (the same for both branches), located by
/// a sign-change scan refined with bisection.
pub fn inflection_roots(params: &BiasParams) -> Vec<f64> {
    const CELLS: usize = 4096;
    let f = |u: f64| d2phase(u, params, Branch::One);
    let at = |i: usize| -PI + 2.0 * PI * i as f64 / CELLS as f64;
    let mut roots: Vec<f64> = Vec::new();
    let push = |u: f64, roots: &mut Vec<f64>| {
        if !roots.iter().any(|r| (r - u).abs() < 1e-9) {
            roots.push(u);
        }
    };
    for i in 0..CELLS {
        let (a, b) = (at(i), at(i + 1));
        let (fa, fb) = (f(a), f(b));
        if fa.abs() < 1e-14 {
            push(a, &mut roots);
        }
        if fb.abs() < 1e-14 {
            push(b, &mut roots);
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 || hi - lo < 1e-15 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            push(0.5 * (lo + hi), &mut roots);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Group velocities at which a peak of the modified phase can sit: the
/// gradients of every surface at every pair of inflection roots `(u⁺, u⁻)`.
pub fn modified_phase_velocities(params: &BiasParams) -> Vec<Velocity> {
    let roots = inflection_roots(params);
    let mut out: Vec<Velocity> = Vec::new();
    for &up in &roots {
        for &um in &roots {
            let k = MomentumPoint {
                kx: up + um,
                ky: up - um,
            };
            for &j in &PhaseSurfaceId::ALL {
                let (vx, vy) = grad_w_analytic(j, k, params);
                if !out.iter().any(|v| (v.vx - vx).abs() < 1e-9 && (v.vy - vy).abs() < 1e-9) {
                    out.push(Velocity { vx, vy });
                }
            }
        }
    }
    out.sort_by(|a, b| a.vx.total_cmp(&b.vx).then(a.vy.total_cmp(&b.vy)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleAudit {
    pub p: f64,
    pub r: u32,
    pub radicand: f64,
    pub complex_valued: bool,
    pub analytic_saddles: Vec<SaddlePoint>,
    pub numeric_saddles: Vec<SaddlePoint>,
    /// Numeric stationary points with no closed-form partner.
    pub extras: Vec<SaddlePoint>,
    pub velocity_profile: VelocityProfile,
    pub modified_phase_velocities: Vec<Velocity>,
    pub hull_criterion: HullCriterion,
    pub recurrence_condition: RecurrenceCondition,
    pub gradient_audit: Vec<CheckResult>,
    pub hessian_audit: HessianAudit,
}

pub fn saddle_audit(params: &BiasParams, seeds: usize, samples: usize) -> Result<SaddleAudit> {
    let analytic = saddle_points_analytic(params);
    let mut numeric = Vec::new();
    for &j in &PhaseSurfaceId::ALL {
        numeric.extend(saddle_points_numeric(j, params, seeds)?);
    }
    let extras = numeric
        .iter()
        .filter(|n| !analytic.points.iter().any(|a| periodic_distance(a.k0, n.k0) < 1e-6))
        .copied()
        .collect();
    let points = audit_points(samples);
    let profile = peak_velocities_analytic(params);
    Ok(SaddleAudit {
        p: params.p(),
        r: params.r(),
        radicand: analytic.radicand,
        complex_valued: analytic.complex_valued,
        analytic_saddles: analytic.points,
        numeric_saddles: numeric,
        extras,
        velocity_profile: profile,
        modified_phase_velocities: modified_phase_velocities(params),
        hull_criterion: velocity_recurrence_criterion(&profile),
        recurrence_condition: recurrence_condition(params),
        gradient_audit: gradient_audit(params, &points),
        hessian_audit: hessian_audit(params, &points),
    })
}

/// Phase of surface `j` at `k`, `w_a(u⁺) + w_b(u⁻)`.
pub fn phase(j: PhaseSurfaceId, k: MomentumPoint, params: &BiasParams) -> f64 {
    let (a, b) = j.branches();
    phase_w(k.u_plus(), params, a) + phase_w(k.u_minus(), params, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, r: u32) -> BiasParams {
        BiasParams::new(p, r).unwrap()
    }

    fn j(n: u8) -> PhaseSurfaceId {
        PhaseSurfaceId::new(n).unwrap()
    }

    #[test]
    fn gradient_at_origin() {
        for &(p, r) in &[(0.3, 1), (0.5, 2), (0.8, 5)] {
            let bp = params(p, r);
            let (gx, gy) = grad_w_analytic(j(1), MomentumPoint { kx: 0.0, ky: 0.0 }, &bp);
            let rf = r as f64;
            assert!((gx - ((rf - 1.0) / 2.0 + p.sqrt() * (rf + 1.0) / 2.0)).abs() < 1e-15);
            assert_eq!(gy, 0.0);
        }
    }

    #[test]
    fn gradient_vanishes_at_pi() {
        let (gx, gy) = grad_w_analytic(j(1), MomentumPoint { kx: PI, ky: 0.0 }, &params(0.5, 1));
        assert!(gx.abs() < 1e-15 && gy.abs() < 1e-15);
    }

    #[test]
    fn hessian_blocks_vanish_at_origin() {
        let t = hessian_terms(MomentumPoint { kx: 0.0, ky: 0.0 }, &params(0.4, 3));
        assert_eq!([t.df_dkx, t.df_dky, t.dg_dkx, t.dg_dky], [0.0; 4]);
    }

    #[test]
    fn surface_id_range() {
        assert!(PhaseSurfaceId::new(0).is_err());
        assert!(PhaseSurfaceId::new(5).is_err());
    }

    #[test]
    fn radicand_examples() {
        let c = recurrence_condition(&params(0.5, 1));
        assert!(c.recurrent_by_paper);
        assert!((c.radicand - 1.0).abs() < 1e-15);
        let c = recurrence_condition(&params(0.2, 2));
        assert!((c.radicand - 0.5).abs() < 1e-15);
        assert!(c.recurrent_by_paper);
        assert!(recurrence_condition(&params(0.9, 5)).recurrent_by_paper);
    }

    #[test]
    fn closed_form_saddles_half_bias() {
        let s = saddle_points_analytic(&params(0.5, 1));
        assert!(!s.complex_valued);
        let mut ks: Vec<(f64, f64)> = s.points.iter().map(|p| (p.k0.kx, p.k0.ky)).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [(-PI, 0.0), (0.0, -PI), (0.0, PI), (PI, 0.0)];
        for (got, want) in ks.iter().zip(expect) {
            assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12, "{got:?}");
        }
        assert!(s.points.iter().all(|p| p.grad_norm < 1e-8));
    }

    #[test]
    fn negative_radicand_is_complex() {
        let s = saddle_points_analytic(&params(0.3, 5));
        assert!(s.radicand < 0.0);
        assert!(s.complex_valued && s.points.is_empty());
    }

    #[test]
    fn velocity_examples() {
        let v = peak_velocities_analytic(&params(0.5, 1));
        let h = 0.5f64.sqrt();
        assert!((v.r.vx - h).abs() < 1e-15 && v.r.vy == 0.0);
        assert!(v.l.vx == 0.0 && (v.l.vy - h).abs() < 1e-15);
        assert!(v.d.vx == 0.0 && (v.d.vy + h).abs() < 1e-15);
        assert!((v.u.vx + h).abs() < 1e-15 && v.u.vy == 0.0);
        assert_eq!(
            velocity_recurrence_criterion(&v),
            HullCriterion {
                origin_inside: true,
                degenerate: false
            }
        );
        let near_one = peak_velocities_analytic(&params(1.0 - 1e-12, 1));
        assert!((near_one.r.vx - 1.0).abs() < 1e-9);
        assert!(velocity_recurrence_criterion(&near_one).origin_inside);
    }

    #[test]
    fn hull_rejects_right_half_plane_and_collinear() {
        let v = |vx, vy| Velocity { vx, vy };
        let right = VelocityProfile {
            r: v(1.0, 0.0),
            l: v(0.5, 1.0),
            u: v(0.2, 0.0),
            d: v(0.5, -1.0),
        };
        assert!(!velocity_recurrence_criterion(&right).origin_inside);
        let line = VelocityProfile {
            r: v(1.0, 0.0),
            l: v(-1.0, 0.0),
            u: v(0.5, 0.0),
            d: v(-0.5, 0.0),
        };
        assert_eq!(
            velocity_recurrence_criterion(&line),
            HullCriterion {
                origin_inside: false,
                degenerate: true
            }
        );
        // origin on an edge is not strictly inside
        let edge = VelocityProfile {
            r: v(1.0, 1.0),
            l: v(-1.0, 1.0),
            u: v(-1.0, 0.0),
            d: v(1.0, 0.0),
        };
        assert!(!velocity_recurrence_criterion(&edge).origin_inside);
    }

    #[test]
    fn newton_needs_enough_seeds() {
        assert!(saddle_points_numeric(j(1), &params(0.5, 1), 4).is_err());
    }

    #[test]
    fn inflection_roots_half_bias() {
        let roots = inflection_roots(&params(0.5, 1));
        let expect = [-PI, 0.0, PI];
        assert_eq!(roots.len(), 3, "{roots:?}");
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_recovers_closed_form_half_bias() {
        let bp = params(0.5, 1);
        let analytic = saddle_points_analytic(&bp);
        let numeric = saddle_points_numeric(j(1), &bp, 16).unwrap();
        // (π,0) and (−π,0) are one point on the torus
        assert_eq!(numeric.len(), 2, "{numeric:?}");
        for a in &analytic.points {
            assert!(numeric.iter().any(|n| periodic_distance(a.k0, n.k0) < 1e-8));
        }
        let four = saddle_points_numeric(j(4), &bp, 16).unwrap();
        assert_eq!(four.len(), numeric.len());
        for n in &four {
            assert!(numeric.iter().any(|m| periodic_distance(m.k0, n.k0) < 1e-8));
        }
    }

    #[test]
    fn stationary_sets_are_symmetric() {
        for &(p, r) in &[(0.5, 1), (0.3, 2), (0.8, 3)] {
            let bp = params(p, r);
            for &s in &PhaseSurfaceId::ALL {
                let pts = saddle_points_numeric(s, &bp, 12).unwrap();
                for a in &pts {
                    let neg = MomentumPoint {
                        kx: -a.k0.kx,
                        ky: -a.k0.ky,
                    };
                    assert!(
                        pts.iter().any(|b| periodic_distance(b.k0, neg) < 1e-6),
                        "p={p} r={r} j={} {:?}",
                        s.get(),
                        a.k0
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_velocities_are_inflection_gradients() {
        let bp = params(0.5, 1);
        let found = modified_phase_velocities(&bp);
        for (_, v) in peak_velocities_analytic(&bp).labeled() {
            assert!(found.iter().any(|w| (w.vx - v.vx).abs() < 1e-12 && (w.vy - v.vy).abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_matches_differences() {
        for &p in &[0.3, 0.5, 0.8] {
            for r in [1, 2] {
                for c in gradient_audit(&params(p, r), &audit_points(200)) {
                    assert!(c.matches_fd, "p={p} r={r} {c:?}");
                }
            }
        }
    }

    #[test]
    fn exact_blocks_match_differences() {
        let audit = hessian_audit(&params(0.6, 2), &audit_points(100));
        assert!(audit.exact_blocks.iter().all(|c| c.matches_fd), "{audit:#?}");
        assert!(audit.mixed_symmetry.iter().all(|c| c.matches_fd));
        // the g blocks are printed correctly, the f blocks are not
        let ok: Vec<bool> = audit.blocks.iter().map(|c| c.matches_fd).collect();
        assert_eq!(ok, [false, false, true, true]);
        // with exact blocks the xx, yy and xy combinations hold everywhere,
        // while the yx combination only holds on surfaces 3 and 4
        for c in &audit.assembled_exact_blocks {
            let expect = !(c.name == "w1_yx" || c.name == "w2_yx");
            assert_eq!(c.matches_fd, expect, "{c:?}");
        }
    }

    #[test]
    fn audit_points_in_range() {
        let pts = audit_points(500);
        assert!(pts.iter().all(|k| k.kx >= -PI && k.kx < PI && k.ky >= -PI && k.ky < PI));
    }
}
