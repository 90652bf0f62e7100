/// Formats `v` with 12 significant digits in scientific notation. Decimal
/// inputs of up to 12 significant digits survive a write/parse round trip
/// bit for bit.
pub fn sig12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(-0.00123456789012345), "-1.23456789012e-3");
        assert_eq!("0.1".parse::<f64>().unwrap(), sig12(0.1).parse::<f64>().unwrap());
    }
}
