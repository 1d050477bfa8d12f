//! Output assembly. CSV floats are printed with 16 fractional digits of
//! scientific notation (17 significant digits), enough to round-trip any
//! f64 exactly, so repeated runs of the same scenario are byte-identical.

use std::fmt::Write as _;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a fixed header, built row by row.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self { buf, columns: header.len() }
    }

    /// Append one row; cell counts are checked, commas in cells are not
    /// allowed (every writer emits numbers or plain labels).
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch");
        debug_assert!(cells.iter().all(|c| !c.contains(',')), "cell with a comma");
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Strip commas so free-text diagnostics can sit in a CSV cell.
pub fn csv_safe(text: &str) -> String {
    text.replace(',', ";")
}
