//! CSV formatting shared by the table emitters.
//!
//! Reals are written with 17 significant digits ('.' decimal separator)
//! so every value round-trips bit-exactly; lines end with LF.

/// 17 significant digits: one leading digit plus 16 after the point.
pub fn fmt_real(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Assemble a CSV document from a header and preformatted rows.
pub fn csv_document(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}
