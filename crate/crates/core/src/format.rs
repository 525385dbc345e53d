//! Number formatting shared by every CSV writer.

/// Fixed-decimal rendering rounded to six significant digits.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 5 - magnitude;
    if decimals >= 0 {
        let s = format!("{:.*}", decimals as usize, x);
        // Rounding can carry into a new leading digit (9.999995 -> 10.00000).
        let rounded: f64 = s.parse().unwrap_or(x);
        if rounded != 0.0 && (rounded.abs().log10().floor() as i32) > magnitude && decimals > 0 {
            return format!("{:.*}", decimals as usize - 1, x);
        }
        s
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}
