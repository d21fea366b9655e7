//! Deterministic six-significant-digit formatting for tables and profiles.

/// Format with six significant digits, plain decimal where reasonable and
/// scientific for extreme magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}
