//! Momentum-space machinery.
//!
//! Conventions: forward transform `ψ̃(k) = Σ ψ(x,y) e^{+i(kₓx + k_y y)}`,
//! inverse `ψ(x,y) = (1/N²) Σ_k ψ̃(k) e^{−i(kₓx + k_y y)}` on the uniform grid
//! `k_m = −π + 2πm/N`. The one-step operator is
//! `Ũ(k) = diag(e^{irkₓ}, e^{−ikₓ}, e^{irk_y}, e^{−ik_y}) · C`.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coin::{build_coin, BiasParams, CoinMatrix, CoinMode, CoinState4};
use crate::error::{Result, WalkError};
use crate::evolution::{self, AmplitudeField, Window};
use crate::linalg::{self, mat_vec, Mat4, Vec4, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumPoint {
    pub kx: f64,
    pub ky: f64,
}

impl MomentumPoint {
    pub fn new(kx: f64, ky: f64) -> Result<Self> {
        for (name, v) in [("kx", kx), ("ky", ky)] {
            if !(-PI..=PI).contains(&v) {
                return Err(WalkError::OutOfRange {
                    name,
                    value: v,
                    expected: "-π <= k <= π",
                });
            }
        }
        Ok(Self { kx, ky })
    }

    /// `(kₓ + k_y)/2`.
    pub fn u_plus(&self) -> f64 {
        0.5 * (self.kx + self.ky)
    }

    /// `(kₓ − k_y)/2`.
    pub fn u_minus(&self) -> f64 {
        0.5 * (self.kx - self.ky)
    }
}

/// Grid momentum `−π + 2πm/N`.
pub fn grid_momentum(m: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * m as f64 / n as f64
}

pub fn momentum_operator(params: &BiasParams, k: MomentumPoint, coin: &CoinMatrix) -> Mat4 {
    let r = params.rf();
    let phases = [
        Complex64::from_polar(1.0, r * k.kx),
        Complex64::from_polar(1.0, -k.kx),
        Complex64::from_polar(1.0, r * k.ky),
        Complex64::from_polar(1.0, -k.ky),
    ];
    let c = coin.entries();
    let mut out = linalg::zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = phases[i] * c[i][j];
        }
    }
    out
}

/// The two branches of the one-dimensional dispersion phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    One,
    Two,
}

/// Branches `(for u⁺, for u⁻)` composing the four phase surfaces, in the
/// order λ₁..λ₄.
pub const SURFACE_BRANCHES: [(Branch, Branch); 4] = [
    (Branch::One, Branch::One),
    (Branch::One, Branch::Two),
    (Branch::Two, Branch::One),
    (Branch::Two, Branch::Two),
];

/// `θ = ((r+1)/2)·u`
#[inline]
pub fn theta(u: f64, params: &BiasParams) -> f64 {
    0.5 * (params.rf() + 1.0) * u
}

/// Branch 1: `((r−1)/2)u + arcsin(√p·sin θ)`;
/// branch 2: `((r−1)/2)u − π − arcsin(√p·sin θ)`.
pub fn phase_w(u: f64, params: &BiasParams, branch: Branch) -> f64 {
    let lin = 0.5 * (params.rf() - 1.0) * u;
    let arc = (params.p().sqrt() * theta(u, params).sin()).asin();
    match branch {
        Branch::One => lin + arc,
        Branch::Two => lin - PI - arc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePair {
    pub u: f64,
    pub w1: f64,
    pub w2: f64,
}

pub fn phase_pair(u: f64, params: &BiasParams) -> PhasePair {
    PhasePair {
        u,
        w1: phase_w(u, params, Branch::One),
        w2: phase_w(u, params, Branch::Two),
    }
}

/// Phase of surface `j ∈ 0..4`: `w_a(u⁺) + w_b(u⁻)`.
pub fn surface_phase(j: usize, k: MomentumPoint, params: &BiasParams) -> f64 {
    let (a, b) = SURFACE_BRANCHES[j];
    phase_w(k.u_plus(), params, a) + phase_w(k.u_minus(), params, b)
}

/// The four closed-form eigenvalues `e^{i[w_a(u⁺) + w_b(u⁻)]}`, λ₁..λ₄.
pub fn eigenvalues_analytic(k: MomentumPoint, params: &BiasParams) -> [Complex64; 4] {
    let mut out = [ZERO; 4];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = Complex64::from_polar(1.0, surface_phase(j, k, params));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationFactors {
    pub n1_plus: f64,
    pub n1_minus: f64,
    pub n2_plus: f64,
    pub n2_minus: f64,
}

fn n1(theta: f64, sqrt_p: f64) -> f64 {
    2.0 - 2.0 * sqrt_p * (theta - (sqrt_p * theta.sin()).asin()).cos()
}

fn n2(theta: f64, sqrt_p: f64) -> f64 {
    2.0 + 2.0 * sqrt_p * (theta + (sqrt_p * theta.sin()).asin()).cos()
}

/// `n₁, n₂` evaluated at `(kₓ ± k_y)(r+1)/4`.
pub fn normalization_factors(k: MomentumPoint, params: &BiasParams) -> NormalizationFactors {
    let sp = params.p().sqrt();
    let tp = theta(k.u_plus(), params);
    let tm = theta(k.u_minus(), params);
    NormalizationFactors {
        n1_plus: n1(tp, sp),
        n1_minus: n1(tm, sp),
        n2_plus: n2(tp, sp),
        n2_minus: n2(tm, sp),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticEigenvectors {
    /// Closed-form vectors rescaled to unit norm.
    pub vectors: [Vec4; 4],
    /// The displayed `n·n` prefactor of each vector.
    pub prefactors: [f64; 4],
    /// Squared norm of each vector before rescaling.
    pub raw_norm_sq: [f64; 4],
    /// `‖Ũv − λv‖/‖v‖` against the matching closed-form eigenvalue.
    pub residuals: [f64; 4],
    /// Largest off-diagonal magnitude of the Gram matrix of `vectors`.
    pub gram_max_offdiag: f64,
}

/// Evaluates the closed-form eigenvector components and audits them against
/// `Ũ(k)` built with the corrected coin.
pub fn eigenvectors_analytic(k: MomentumPoint, params: &BiasParams) -> AnalyticEigenvectors {
    let p = params.p();
    let sp = p.sqrt();
    let sq = (1.0 - p).sqrt();
    let cross = params.cross();
    let r = params.rf();
    let (up, um) = (k.u_plus(), k.u_minus());
    let nf = normalization_factors(k, params);
    let prefactors = [
        nf.n1_plus * nf.n1_minus,
        nf.n1_plus * nf.n2_minus,
        nf.n1_minus * nf.n2_plus,
        nf.n2_minus * nf.n2_plus,
    ];

    let coin = build_coin(params, CoinMode::Corrected);
    let u = momentum_operator(params, k, &coin);
    let lambdas = eigenvalues_analytic(k, params);

    let mut vectors = [[ZERO; 4]; 4];
    let mut raw_norm_sq = [0.0; 4];
    let mut residuals = [0.0; 4];
    for (j, &(a, b)) in SURFACE_BRANCHES.iter().enumerate() {
        let wa = phase_w(up, params, a);
        let wb = phase_w(um, params, b);
        let e_minus = Complex64::from_polar(1.0, wb - r * um);
        let e_plus = Complex64::from_polar(1.0, wa - r * up);
        let both = Complex64::from_polar(1.0, wa + wb - r * k.kx);
        let v = [
            Complex64::new(1.0 - p, 0.0),
            -cross + sq * e_minus,
            -cross + sq * e_plus,
            p - sp * e_minus - sp * e_plus + both,
        ];
        let nsq = linalg::norm_sq(&v);
        raw_norm_sq[j] = nsq;
        let norm = nsq.sqrt();
        let unit = if norm > 0.0 { v.map(|z| z / norm) } else { v };
        let uv = mat_vec(&u, &unit);
        let mut res = [ZERO; 4];
        for c in 0..4 {
            res[c] = uv[c] - lambdas[j] * unit[c];
        }
        residuals[j] = if norm > 0.0 { linalg::vec_norm(&res) } else { f64::NAN };
        vectors[j] = unit;
    }
    let mut gram_max_offdiag = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                gram_max_offdiag = gram_max_offdiag.max(linalg::inner(&vectors[i], &vectors[j]).norm());
            }
        }
    }
    AnalyticEigenvectors {
        vectors,
        prefactors,
        raw_norm_sq,
        residuals,
        gram_max_offdiag,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericEigen {
    /// Unit-modulus eigenvalues.
    pub values: [Complex64; 4],
    /// Orthonormal eigenvectors; `vectors[j]` belongs to `values[j]`.
    pub vectors: [Vec4; 4],
    /// Largest `‖Uv − λv‖`.
    pub residual_max: f64,
}

fn to_na(m: &Mat4) -> Matrix4<Complex64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

/// Complex Schur decomposition of a unitary matrix; for normal matrices the
/// triangular factor is diagonal, so the Schur vectors are eigenvectors.
pub fn eigendecompose_numeric(m: &Mat4) -> Result<NumericEigen> {
    let defect = linalg::unitarity_defect(m);
    if defect.is_nan() || defect > 1e-10 {
        return Err(WalkError::NotUnitary { defect });
    }
    let (q, t) = Schur::new(to_na(m)).unpack();
    let mut values = [ZERO; 4];
    let mut vectors = [[ZERO; 4]; 4];
    for j in 0..4 {
        let lam = t[(j, j)];
        values[j] = lam / lam.norm();
        for i in 0..4 {
            vectors[j][i] = q[(i, j)];
        }
    }
    let mut residual_max = 0.0f64;
    for j in 0..4 {
        let mv = mat_vec(m, &vectors[j]);
        let mut res = [ZERO; 4];
        for i in 0..4 {
            res[i] = mv[i] - values[j] * vectors[j][i];
        }
        residual_max = residual_max.max(linalg::vec_norm(&res));
    }
    Ok(NumericEigen {
        values,
        vectors,
        residual_max,
    })
}

pub fn determinant(m: &Mat4) -> Complex64 {
    to_na(m).determinant()
}

/// Distance of unit vector `v` from the span of orthonormal `basis`:
/// the sine of the principal angle.
pub fn subspace_distance(v: &Vec4, basis: &[Vec4]) -> f64 {
    let captured: f64 = basis.iter().map(|b| linalg::inner(b, v).norm_sqr()).sum();
    (1.0 - captured.min(1.0)).max(0.0).sqrt()
}

/// `Ũ(k)ᵗ ψ̃₀` at every point of an `N × N` momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    params: BiasParams,
    t: usize,
    n: usize,
    /// Row-major in `k_y`: index `iy·N + ix`.
    grid: Vec<Vec4>,
}

impl MomentumState {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &BiasParams {
        &self.params
    }

    pub fn at(&self, ix: usize, iy: usize) -> Vec4 {
        self.grid[iy * self.n + ix]
    }

    /// `(1/N²) Σ ‖ψ̃‖²`, which equals the total probability.
    pub fn parseval_norm(&self) -> f64 {
        let sq: Vec<f64> = self.grid.iter().map(linalg::norm_sq).collect();
        linalg::pairwise_sum(&sq) / (self.n * self.n) as f64
    }
}

/// Smallest grid that holds the full support after `t` steps without
/// wrap-around.
pub fn min_grid_full(r: u32, t: usize) -> usize {
    (r as usize + 1) * t + 1
}

/// Smallest grid for which no lattice site aliases onto the origin after `t`
/// steps (the support spans `[−t, r·t]` per axis).
pub fn min_grid_origin(r: u32, t: usize) -> usize {
    r.max(1) as usize * t + 1
}

/// Applies `λ^t` through the numeric eigendecomposition at each grid point,
/// starting from a walker localized at the origin with `initial` coin state.
pub fn fourier_evolve(
    initial: &CoinState4,
    params: &BiasParams,
    coin: &CoinMatrix,
    t: usize,
    n: usize,
) -> Result<MomentumState> {
    let required = min_grid_full(params.r(), t);
    if n < required {
        return Err(WalkError::GridTooSmall { grid_n: n, required });
    }
    let psi0 = initial.0;
    let rows: Result<Vec<Vec<Vec4>>> = (0..n)
        .into_par_iter()
        .map(|iy| {
            let ky = grid_momentum(iy, n);
            (0..n)
                .map(|ix| {
                    let k = MomentumPoint {
                        kx: grid_momentum(ix, n),
                        ky,
                    };
                    let eig = eigendecompose_numeric(&momentum_operator(params, k, coin))?;
                    let mut out = [ZERO; 4];
                    for j in 0..4 {
                        let c = linalg::inner(&eig.vectors[j], &psi0)
                            * Complex64::from_polar(1.0, t as f64 * eig.values[j].arg());
                        for i in 0..4 {
                            out[i] += c * eig.vectors[j][i];
                        }
                    }
                    Ok(out)
                })
                .collect()
        })
        .collect();
    let grid = rows?.into_iter().flatten().collect();
    Ok(MomentumState {
        params: *params,
        t,
        n,
        grid,
    })
}

/// Exact inverse transform onto the reachable window `[−t, r·t]²`.
pub fn inverse_transform(ms: &MomentumState) -> AmplitudeField {
    let n = ms.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);

    // one scalar plane per chirality, transformed along x then y
    let mut planes: Vec<Vec<Complex64>> = (0..4)
        .map(|c| ms.grid.iter().map(|v| v[c]).collect())
        .collect();
    for plane in planes.iter_mut() {
        for row in plane.chunks_mut(n) {
            fft.process(row);
        }
        let mut column = vec![ZERO; n];
        for ix in 0..n {
            for iy in 0..n {
                column[iy] = plane[iy * n + ix];
            }
            fft.process(&mut column);
            for iy in 0..n {
                plane[iy * n + ix] = column[iy];
            }
        }
    }

    let window = Window::reachable(ms.params.r(), ms.t);
    let scale = 1.0 / (n * n) as f64;
    let wrap = |v: i64| v.rem_euclid(n as i64) as usize;
    let mut data = Vec::with_capacity(window.len());
    for y in window.y_min..=window.y_max {
        for x in window.x_min..=window.x_max {
            let sign = if (x + y).rem_euclid(2) == 0 { scale } else { -scale };
            let idx = wrap(y) * n + wrap(x);
            data.push([
                planes[0][idx] * sign,
                planes[1][idx] * sign,
                planes[2][idx] * sign,
                planes[3][idx] * sign,
            ]);
        }
    }
    AmplitudeField::from_parts(ms.params, window, ms.t, data).expect("window and data sizes agree")
}

/// `ψ(0,0,t)` for each requested `t`: the grid average of `Ũ(k)ᵗψ̃₀`.
/// The grid must satisfy `N ≥ max(r,1)·t_max + 1` so that no other site
/// aliases onto the origin.
pub fn amplitude_at_origin_series(
    initial: &CoinState4,
    params: &BiasParams,
    coin: &CoinMatrix,
    t_list: &[usize],
    n: usize,
) -> Result<Vec<Vec4>> {
    let t_max = t_list.iter().copied().max().unwrap_or(0);
    let required = min_grid_origin(params.r(), t_max);
    if n < required {
        return Err(WalkError::GridTooSmall { grid_n: n, required });
    }
    let mut order: Vec<usize> = (0..t_list.len()).collect();
    order.sort_by_key(|&i| t_list[i]);
    let psi0 = initial.0;
    let nt = t_list.len();

    let row_sums: Result<Vec<Vec<Vec4>>> = (0..n)
        .into_par_iter()
        .map(|iy| {
            let ky = grid_momentum(iy, n);
            let mut acc = vec![[ZERO; 4]; nt];
            for ix in 0..n {
                let k = MomentumPoint {
                    kx: grid_momentum(ix, n),
                    ky,
                };
                let eig = eigendecompose_numeric(&momentum_operator(params, k, coin))?;
                let mut weighted = [[ZERO; 4]; 4];
                let mut args = [0.0; 4];
                for j in 0..4 {
                    let c = linalg::inner(&eig.vectors[j], &psi0);
                    weighted[j] = eig.vectors[j].map(|z| c * z);
                    args[j] = eig.values[j].arg();
                }
                let mut power = [Complex64::new(1.0, 0.0); 4];
                let mut factor = [Complex64::new(1.0, 0.0); 4];
                let mut last_t = 0usize;
                let mut last_delta = 0usize;
                for &slot in &order {
                    let t = t_list[slot];
                    let delta = t - last_t;
                    if delta != 0 {
                        if delta != last_delta {
                            for j in 0..4 {
                                factor[j] = Complex64::from_polar(1.0, delta as f64 * args[j]);
                            }
                            last_delta = delta;
                        }
                        for j in 0..4 {
                            power[j] *= factor[j];
                        }
                        last_t = t;
                    }
                    let out = &mut acc[slot];
                    for j in 0..4 {
                        for i in 0..4 {
                            out[i] += power[j] * weighted[j][i];
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let row_sums = row_sums?;

    let scale = 1.0 / (n * n) as f64;
    let mut result = Vec::with_capacity(nt);
    let mut column = vec![ZERO; n];
    for slot in 0..nt {
        let mut v = [ZERO; 4];
        for (i, out) in v.iter_mut().enumerate() {
            for (iy, row) in row_sums.iter().enumerate() {
                column[iy] = row[slot][i];
            }
            *out = linalg::pairwise_sum_complex(&column) * scale;
        }
        result.push(v);
    }
    Ok(result)
}

/// Machine-readable summary of the spectral formula audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralAudit {
    pub p: f64,
    pub r: u32,
    pub grid_n: usize,
    /// Max multiset distance between closed-form and numeric eigenvalues.
    pub eigenvalue_max_mismatch: f64,
    /// Max `‖Ũv − λv‖` of the unit-normalized closed-form eigenvectors.
    pub eigenvector_max_residual: f64,
    /// Max `|det Ũ(k) − e^{i(r−1)(kₓ+k_y)}|`.
    pub det_identity_max_error: f64,
    /// Max amplitude difference between direct and Fourier propagation.
    pub fourier_oracle_max_error: f64,
    pub fourier_oracle_t: usize,
    /// Max `|Π λⱼ(closed form) − det Ũ(k)|`.
    pub analytic_det_max_error: f64,
    /// Max `|Π λⱼ(closed form) − e^{2i(r−1)kₓ}|`.
    pub analytic_det_identity_max_error: f64,
    pub numeric_residual_max: f64,
    pub unitarity_max_defect: f64,
    /// Max principal-angle sine between a closed-form eigenvector and the
    /// numeric eigenspace of its matched eigenvalue.
    pub eigenvector_max_subspace_angle: f64,
    pub eigenvector_gram_max_offdiag: f64,
    /// Max relative gap between the displayed `n·n` prefactor and the
    /// squared norm of the raw closed-form vector.
    pub prefactor_vs_norm_sq_max_rel_error: f64,
}

/// Audits the closed-form spectrum over an `N × N` grid and runs the
/// direct-vs-Fourier oracle at `oracle_t` (largest time the grid allows,
/// capped at 64, when `None`).
pub fn spectral_audit(params: &BiasParams, grid_n: usize, oracle_t: Option<usize>) -> Result<SpectralAudit> {
    let coin = build_coin(params, CoinMode::Corrected);
    let r = params.r();

    #[derive(Default, Clone, Copy)]
    struct Acc {
        mismatch: f64,
        vec_res: f64,
        det_id: f64,
        an_det: f64,
        an_det_id: f64,
        num_res: f64,
        unit: f64,
        angle: f64,
        gram: f64,
        prefactor: f64,
    }
    fn merge(a: Acc, b: Acc) -> Acc {
        Acc {
            mismatch: a.mismatch.max(b.mismatch),
            vec_res: a.vec_res.max(b.vec_res),
            det_id: a.det_id.max(b.det_id),
            an_det: a.an_det.max(b.an_det),
            an_det_id: a.an_det_id.max(b.an_det_id),
            num_res: a.num_res.max(b.num_res),
            unit: a.unit.max(b.unit),
            angle: a.angle.max(b.angle),
            gram: a.gram.max(b.gram),
            prefactor: a.prefactor.max(b.prefactor),
        }
    }

    let rows: Result<Vec<Acc>> = (0..grid_n)
        .into_par_iter()
        .map(|iy| {
            let mut acc = Acc::default();
            let ky = grid_momentum(iy, grid_n);
            for ix in 0..grid_n {
                let k = MomentumPoint {
                    kx: grid_momentum(ix, grid_n),
                    ky,
                };
                let u = momentum_operator(params, k, &coin);
                let eig = eigendecompose_numeric(&u)?;
                let an = eigenvalues_analytic(k, params);
                let vecs = eigenvectors_analytic(k, params);
                let det = determinant(&u);
                let det_expect = Complex64::from_polar(1.0, (r as f64 - 1.0) * (k.kx + k.ky));
                let an_prod: Complex64 = an.iter().product();
                let an_expect = Complex64::from_polar(1.0, 2.0 * (r as f64 - 1.0) * k.kx);

                // eigenspace comparison: numeric vectors whose eigenvalue
                // clusters with the numeric partner of each analytic value
                let matching = linalg::best_matching(&an, &eig.values);
                let mut angle = 0.0f64;
                for j in 0..4 {
                    let partner = eig.values[matching[j]];
                    let basis: Vec<Vec4> = (0..4)
                        .filter(|&m| (eig.values[m] - partner).norm() < 1e-8)
                        .map(|m| eig.vectors[m])
                        .collect();
                    angle = angle.max(subspace_distance(&vecs.vectors[j], &basis));
                }
                let mut prefactor = 0.0f64;
                for j in 0..4 {
                    let rel = (vecs.prefactors[j] - vecs.raw_norm_sq[j]).abs() / vecs.raw_norm_sq[j].max(1e-300);
                    prefactor = prefactor.max(rel);
                }

                acc = merge(
                    acc,
                    Acc {
                        mismatch: linalg::multiset_distance(&an, &eig.values),
                        vec_res: vecs.residuals.iter().cloned().fold(0.0, f64::max),
                        det_id: (det - det_expect).norm(),
                        an_det: (an_prod - det).norm(),
                        an_det_id: (an_prod - an_expect).norm(),
                        num_res: eig.residual_max,
                        unit: linalg::unitarity_defect(&u),
                        angle,
                        gram: vecs.gram_max_offdiag,
                        prefactor,
                    },
                );
            }
            Ok(acc)
        })
        .collect();
    let acc = rows?.into_iter().fold(Acc::default(), merge);

    let oracle_t = oracle_t.unwrap_or_else(|| ((grid_n.saturating_sub(1)) / (r as usize + 1)).min(64));
    let initial = CoinState4::basis(crate::coin::Chirality::R);
    let fourier_oracle_max_error = fourier_oracle_error(params, &coin, &initial, oracle_t, grid_n)?;

    Ok(SpectralAudit {
        p: params.p(),
        r,
        grid_n,
        eigenvalue_max_mismatch: acc.mismatch,
        eigenvector_max_residual: acc.vec_res,
        det_identity_max_error: acc.det_id,
        fourier_oracle_max_error,
        fourier_oracle_t: oracle_t,
        analytic_det_max_error: acc.an_det,
        analytic_det_identity_max_error: acc.an_det_id,
        numeric_residual_max: acc.num_res,
        unitarity_max_defect: acc.unit,
        eigenvector_max_subspace_angle: acc.angle,
        eigenvector_gram_max_offdiag: acc.gram,
        prefactor_vs_norm_sq_max_rel_error: acc.prefactor,
    })
}

/// Max amplitude difference between direct evolution and Fourier
/// propagation after `t` steps from a localized start.
pub fn fourier_oracle_error(
    params: &BiasParams,
    coin: &CoinMatrix,
    initial: &CoinState4,
    t: usize,
    n: usize,
) -> Result<f64> {
    let start = AmplitudeField::new_localized(*params, *initial)?;
    let direct = evolution::evolve(&start, coin, t)?;
    let fourier = inverse_transform(&fourier_evolve(initial, params, coin, t, n)?);
    Ok(direct.max_amplitude_diff(&fourier))
}
