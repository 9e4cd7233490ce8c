//! Fixed-size 4×4 complex helpers, deterministic reductions and number
//! formatting shared by the analysis modules.

use num_complex::Complex64;

pub type Vec4 = [Complex64; 4];
pub type Mat4 = [[Complex64; 4]; 4];

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn zero_mat() -> Mat4 {
    [[ZERO; 4]; 4]
}

pub fn identity() -> Mat4 {
    let mut m = zero_mat();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

#[inline]
pub fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [ZERO; 4];
    for (o, row) in out.iter_mut().zip(m.iter()) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

pub fn adjoint(m: &Mat4) -> Mat4 {
    let mut out = zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[j][i].conj();
        }
    }
    out
}

pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

/// ‖M·M† − I‖ in the entrywise max norm.
pub fn unitarity_defect(m: &Mat4) -> f64 {
    max_abs_diff(&mat_mul(m, &adjoint(m)), &identity())
}

/// ⟨a|b⟩, conjugate-linear in the first argument.
#[inline]
pub fn inner(a: &Vec4, b: &Vec4) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sq(v: &Vec4) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vec_norm(v: &Vec4) -> f64 {
    norm_sq(v).sqrt()
}

/// Pairwise summation with a fixed recursion tree, so the result depends only
/// on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Largest pair distance of the minimum-total-distance matching between two
/// four-element multisets (brute force over all 24 permutations).
pub fn multiset_distance(a: &[Complex64; 4], b: &[Complex64; 4]) -> f64 {
    let mut best_total = f64::INFINITY;
    let mut best_max = f64::INFINITY;
    for perm in PERMUTATIONS_4.iter() {
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for (i, &j) in perm.iter().enumerate() {
            let d = (a[i] - b[j]).norm();
            total += d;
            worst = worst.max(d);
        }
        if total < best_total {
            best_total = total;
            best_max = worst;
        }
    }
    best_max
}

/// Optimal assignment `a[i] ↔ b[perm[i]]` under the same criterion as
/// [`multiset_distance`].
pub fn best_matching(a: &[Complex64; 4], b: &[Complex64; 4]) -> [usize; 4] {
    let mut best_total = f64::INFINITY;
    let mut best = PERMUTATIONS_4[0];
    for perm in PERMUTATIONS_4.iter() {
        let total: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| (a[i] - b[j]).norm())
            .sum();
        if total < best_total {
            best_total = total;
            best = *perm;
        }
    }
    best
}

const PERMUTATIONS_4: [[usize; 4]; 24] = [
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [0, 2, 1, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [0, 3, 2, 1],
    [1, 0, 2, 3],
    [1, 0, 3, 2],
    [1, 2, 0, 3],
    [1, 2, 3, 0],
    [1, 3, 0, 2],
    [1, 3, 2, 0],
    [2, 0, 1, 3],
    [2, 0, 3, 1],
    [2, 1, 0, 3],
    [2, 1, 3, 0],
    [2, 3, 0, 1],
    [2, 3, 1, 0],
    [3, 0, 1, 2],
    [3, 0, 2, 1],
    [3, 1, 0, 2],
    [3, 1, 2, 0],
    [3, 2, 0, 1],
    [3, 2, 1, 0],
];

/// Shortest round-trip decimal form (never more than 17 significant digits).
/// Integral values print without a fractional part; very small or very large
/// magnitudes switch to exponent notation.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }

    #[test]
    fn multiset_distance_ignores_order() {
        let a = [ONE, -ONE, Complex64::i(), -Complex64::i()];
        let b = [-Complex64::i(), Complex64::i(), -ONE, ONE];
        assert_eq!(multiset_distance(&a, &b), 0.0);
        let c = [ONE, ONE, ONE, -ONE];
        assert!((multiset_distance(&a, &c) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-3.0), "-3");
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1.5e-20), "1.5e-20");
        let x = std::f64::consts::PI / 7.0;
        assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn identity_is_unitary() {
        assert_eq!(unitarity_defect(&identity()), 0.0);
    }
}
