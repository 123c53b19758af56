//! Numeric text formatting shared by the CSV writers.

/// 17 significant digits in scientific notation; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
