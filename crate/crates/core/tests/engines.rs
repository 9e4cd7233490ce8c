//! Direct simulation against the Fourier engine on long return series.

use planar_walk::coin::{build_coin, BiasParams, CoinMode, InitialCoinSpec, Variant};
use planar_walk::recurrence::{return_probability_series, Engine};
use planar_walk::spectral::min_grid_origin;

fn agree(p: f64, r: u32, t_max: usize, spec: InitialCoinSpec) {
    let bp = BiasParams::new(p, r).unwrap();
    let coin = build_coin(&bp, CoinMode::Corrected);
    let n = min_grid_origin(r, t_max);
    let direct = return_probability_series(&bp, &spec, &coin, t_max, Engine::Direct, n).unwrap();
    let fourier = return_probability_series(&bp, &spec, &coin, t_max, Engine::Fourier, n).unwrap();
    assert_eq!(direct.entries.len(), fourier.entries.len());
    let worst = direct
        .entries
        .iter()
        .zip(&fourier.entries)
        .map(|(a, b)| {
            assert_eq!(a.t, b.t);
            (a.p0 - b.p0).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "p={p} r={r}: {worst:e}");
}

#[test]
fn engines_agree_unit_jump() {
    agree(0.5, 1, 256, InitialCoinSpec::new(1.0, 0.0, Variant::AsPrinted).unwrap());
}

#[test]
fn engines_agree_long_jump() {
    agree(0.3, 2, 256, InitialCoinSpec::new(0.5, std::f64::consts::FRAC_PI_2, Variant::AsPrinted).unwrap());
}

#[test]
fn engines_agree_tensor_variant() {
    agree(0.8, 3, 120, InitialCoinSpec::new(0.25, 2.0, Variant::TensorProduct).unwrap());
}

#[test]
fn long_jump_returns_only_at_multiples() {
    for r in 1..=3u32 {
        let bp = BiasParams::new(0.6, r).unwrap();
        let coin = build_coin(&bp, CoinMode::Corrected);
        let spec = InitialCoinSpec::new(0.5, 0.7, Variant::AsPrinted).unwrap();
        let s = return_probability_series(&bp, &spec, &coin, 60, Engine::Direct, 0).unwrap();
        assert!(s.entries.iter().all(|e| e.t % (r as usize + 1) == 0));
        assert_eq!(s.entries.len(), 60 / (r as usize + 1) + 1);
    }
}
