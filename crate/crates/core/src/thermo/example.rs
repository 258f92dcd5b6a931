//! Closed forms for the cycles-only Gaussian example.

use super::ThermoError;
use crate::numerics::series::{alternating_power_tail, TailSum};

fn tail(s: f64, gamma: f64) -> Result<f64, ThermoError> {
    if !(gamma >= 0.0) {
        return Err(ThermoError::Domain(format!("γ must be nonnegative, got {gamma}")));
    }
    match alternating_power_tail(s, (-gamma).exp(), 3) {
        TailSum::Finite(v) => Ok(v),
        TailSum::Divergent => Err(ThermoError::Divergent(format!("Σ (-1)^n n^{} diverges at γ = 0", -s))),
    }
}

/// `B(γ) = e^{-γ} + ½ Σ_{n≥3} (-1)^n n^{-d/2} e^{-nγ}`.
#[allow(non_snake_case)]
pub fn example_B(gamma: f64, d: usize) -> Result<f64, ThermoError> {
    Ok((-gamma).exp() + 0.5 * tail(0.5 * d as f64, gamma)?)
}

/// `dB/dγ`; the value at `γ = 0` is the one-sided limit. Diverges there for `d = 1`.
#[allow(non_snake_case)]
pub fn example_dB(gamma: f64, d: usize) -> Result<f64, ThermoError> {
    Ok(-(-gamma).exp() - 0.5 * tail(0.5 * d as f64 - 1.0, gamma)?)
}

/// Checks `dB/dγ < 0` on the grid, as needed for a monotone density equation.
pub fn example_consistency(d: usize, grid: &[f64]) -> Result<(), ThermoError> {
    for &g in grid {
        let db = example_dB(g, d)?;
        if !(db < 0.0) {
            return Err(ThermoError::Inconsistent(format!("dB/dγ = {db:e} at γ = {g} in d = {d}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        let expect = [0.843_997_287_695_91, 0.903_426_409_720_027, 0.940_649_792_390_659, 0.963_766_483_287_943];
        for (d, e) in (1..=4).zip(expect) {
            assert!((example_B(0.0, d).unwrap() - e).abs() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn values_at_half() {
        assert!((example_B(0.5, 2).unwrap() - 0.580_787_637_186_036).abs() < 1e-12);
        assert!((example_dB(0.5, 2).unwrap() + 0.537_085_934_584_156).abs() < 1e-12);
        assert!((example_B(0.5, 3).unwrap() - 0.590_994_925_913_770).abs() < 1e-12);
        assert!((example_dB(0.5, 3).unwrap() + 0.564_115_244_850_029).abs() < 1e-12);
    }

    #[test]
    fn derivative_limits() {
        assert!((example_dB(0.0, 2).unwrap() + 0.75).abs() < 1e-12);
        assert!((example_dB(1e-9, 2).unwrap() + 0.75).abs() < 1e-8);
        assert!(matches!(example_dB(0.0, 1), Err(ThermoError::Divergent(_))));
        assert!(example_dB(1e-3, 1).unwrap().is_finite());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for d in 1..=4 {
            for g in [0.05, 0.5, 3.0] {
                let h = 1e-5;
                let fd = (example_B(g + h, d).unwrap() - example_B(g - h, d).unwrap()) / (2.0 * h);
                assert!((fd - example_dB(g, d).unwrap()).abs() < 1e-8, "d = {d}, γ = {g}");
            }
        }
    }

    #[test]
    fn monotone_in_dimensions_two_and_up() {
        let grid: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
        for d in 2..=6 {
            example_consistency(d, &grid).unwrap();
        }
        assert!(example_B(-0.1, 2).is_err());
    }
}
