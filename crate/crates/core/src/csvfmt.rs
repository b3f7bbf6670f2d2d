//! Deterministic float formatting for CSV output.

/// Formats with 12 significant digits in fixed notation, so equal values
/// always produce identical bytes regardless of platform.
pub(crate) fn format_float(value: f64) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    if value == 0.0 {
        return format!("{:.12}", 0.0);
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 20) as usize;
    format!("{value:.decimals$}")
}
