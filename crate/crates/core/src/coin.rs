//! The one-parameter 4×4 coin family, its row projectors and the
//! parameterized initial coin state.
//!
//! Basis order is (R, L, U, D) throughout the crate.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkError};
use crate::linalg::{self, fmt_num, Mat4, Vec4, ZERO};

/// Coin bias `p ∈ (0,1)` and the length `r ≥ 1` of the rightward/upward jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    p: f64,
    r: u32,
}

impl BiasParams {
    pub fn new(p: f64, r: u32) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(WalkError::OutOfRange {
                name: "p",
                value: p,
                expected: "0 < p < 1",
            });
        }
        if r < 1 {
            return Err(WalkError::OutOfRange {
                name: "r",
                value: r as f64,
                expected: "r >= 1",
            });
        }
        Ok(Self { p, r })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn rf(&self) -> f64 {
        self.r as f64
    }

    /// √(p − p²), evaluated as √(p·(1−p)) with no subtraction of nearby terms.
    pub fn cross(&self) -> f64 {
        (self.p * (1.0 - self.p)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    R,
    L,
    U,
    D,
}

impl Chirality {
    pub const ALL: [Chirality; 4] = [Chirality::R, Chirality::L, Chirality::U, Chirality::D];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CoinMode {
    /// Entry (4,4) is `+p`; unitary, symmetric and involutory.
    #[default]
    Corrected,
    /// The literal matrix with entry (4,4) = `−p`. Not unitary.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinMatrix {
    entries: Mat4,
    mode: CoinMode,
    forced: bool,
}

impl CoinMatrix {
    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }

    pub fn mode(&self) -> CoinMode {
        self.mode
    }

    /// Whether evolution may use this coin.
    pub fn evolution_allowed(&self) -> bool {
        self.mode == CoinMode::Corrected || self.forced
    }

    /// Explicitly allows a non-unitary coin to drive evolution (diagnostics).
    pub fn force(mut self) -> Self {
        self.forced = true;
        self
    }

    pub fn from_entries(entries: Mat4) -> Self {
        Self {
            entries,
            mode: CoinMode::Corrected,
            forced: false,
        }
    }

    /// Row-major CSV block of the real parts.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(|z| fmt_num(z.re)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for CoinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

pub fn build_coin(params: &BiasParams, mode: CoinMode) -> CoinMatrix {
    let p = params.p();
    let q = 1.0 - p;
    let s = params.cross();
    let last = match mode {
        CoinMode::Corrected => p,
        CoinMode::AsPrinted => -p,
    };
    let rows = [
        [p, s, s, q],
        [s, -p, q, -s],
        [s, q, -p, -s],
        [q, -s, -s, last],
    ];
    let mut entries = linalg::zero_mat();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            entries[i][j] = Complex64::new(v, 0.0);
        }
    }
    CoinMatrix {
        entries,
        mode,
        forced: false,
    }
}

/// ‖C·C† − I‖ in the entrywise max norm.
pub fn unitarity_certificate(coin: &CoinMatrix) -> f64 {
    linalg::unitarity_defect(coin.entries())
}

/// Each row of the coin embedded at its own row position.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinProjectors {
    parts: [Mat4; 4],
}

impl CoinProjectors {
    pub fn get(&self, c: Chirality) -> &Mat4 {
        &self.parts[c.index()]
    }

    pub fn sum(&self) -> Mat4 {
        let mut out = linalg::zero_mat();
        for part in &self.parts {
            for i in 0..4 {
                for j in 0..4 {
                    out[i][j] += part[i][j];
                }
            }
        }
        out
    }
}

pub fn split_projectors(coin: &CoinMatrix) -> CoinProjectors {
    let mut parts = [linalg::zero_mat(); 4];
    for (row, part) in parts.iter_mut().enumerate() {
        part[row] = coin.entries()[row];
    }
    CoinProjectors { parts }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Variant {
    /// Fourth entry `(1−a)e^{iφ}`.
    #[default]
    AsPrinted,
    /// Fourth entry `(1−a)e^{2iφ}`.
    TensorProduct,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::AsPrinted => f.write_str("AsPrinted"),
            Variant::TensorProduct => f.write_str("TensorProduct"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCoinSpec {
    a: f64,
    phi: f64,
    variant: Variant,
}

impl InitialCoinSpec {
    pub fn new(a: f64, phi: f64, variant: Variant) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(WalkError::OutOfRange {
                name: "a",
                value: a,
                expected: "0 <= a <= 1",
            });
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(WalkError::OutOfRange {
                name: "phi",
                value: phi,
                expected: "0 <= phi < 2π",
            });
        }
        Ok(Self { a, phi, variant })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
}

/// A coin-space 4-vector in (R, L, U, D) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinState4(pub Vec4);

impl CoinState4 {
    pub fn basis(c: Chirality) -> Self {
        let mut v = [ZERO; 4];
        v[c.index()] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.0)
    }

    pub fn amplitudes(&self) -> &Vec4 {
        &self.0
    }
}

pub fn build_initial_state(spec: &InitialCoinSpec) -> CoinState4 {
    let a = spec.a;
    let mixed = (a * (1.0 - a)).sqrt();
    let phase = Complex64::from_polar(1.0, spec.phi);
    let last_phase = match spec.variant {
        Variant::AsPrinted => phase,
        Variant::TensorProduct => Complex64::from_polar(1.0, 2.0 * spec.phi),
    };
    CoinState4([
        Complex64::new(a, 0.0),
        phase * mixed,
        phase * mixed,
        last_phase * (1.0 - a),
    ])
}
