/// Nine significant digits, independent of locale. Very small or very large
/// magnitudes switch to exponent notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..9).contains(&mag) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(0.5), "0.500000000");
        assert_eq!(sig9(1.0 / 3f64.sqrt()), "0.577350269");
        assert_eq!(sig9(12.5), "12.5000000");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.5e-7), "1.50000000e-7");
        assert_eq!(sig9(-0.25), "-0.250000000");
        assert_eq!(opt(None), "");
    }
}
