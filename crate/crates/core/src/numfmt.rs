//! Locale-free float text for tables: shortest round-trip digits.

/// Shortest representation that parses back to the same `f64`.
///
/// Uses exponent notation outside 1e-5..1e16; `nan`, `inf` and `-inf` for
/// non-finite values.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}

/// Empty cell for a missing value.
pub fn float_opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1 + 0.2, 1e-300, 2.5e16, -0.0, 1.0, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(float(1.0), "1.0");
        assert_eq!(float(1e-12), "1e-12");
        assert_eq!(float_opt(None), "");
    }
}
