//! Text rendering shared by the CSV writers.

/// Formats `x` with 17 significant digits, enough to round-trip every f64.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Parses a field written by [`sig17`] (or any other decimal form).
pub fn parse_f64(field: &str) -> Option<f64> {
    field.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(sig17(0.1), "1.0000000000000001e-1");
        assert_eq!(sig17(-2.5), "-2.5000000000000000e0");
        assert_eq!(sig17(f64::INFINITY), "inf");
    }

    proptest! {
        #[test]
        fn round_trips_bit_for_bit(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(parse_f64(&sig17(x)).unwrap().to_bits(), x.to_bits());
        }
    }
}
