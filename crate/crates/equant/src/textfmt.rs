//! Deterministic numeric text formatting shared by CSV export paths.

/// 17 significant digits, lowercase scientific notation, `.` decimal
/// separator. Bit-stable: the same f64 always produces the same bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
