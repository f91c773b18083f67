//! CSV documents with a `# key = value` metadata header.

use std::fmt::Write;

use crate::config::Resolved;

/// Numbers are written with 13 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Default)]
pub struct Document {
    text: String,
}

impl Document {
    /// Starts a document with the resolved configuration and run metadata.
    pub fn new(res: &Resolved, command: &str, extra: &[(String, String)]) -> Self {
        let mut d = Self::default();
        for (k, v) in res.run.dotted_lines() {
            d.comment(&format!("{k} = {v}"));
        }
        d.comment(&format!("meta.command = \"{command}\""));
        for (k, v) in res.meta.iter().chain(extra) {
            d.comment(&format!("{k} = {v}"));
        }
        d
    }

    pub fn comment(&mut self, s: &str) {
        let _ = writeln!(self.text, "# {s}");
    }

    /// Marker between blocks of a stacked table.
    pub fn block(&mut self, label: &str) {
        let _ = writeln!(self.text, "#> {label}");
    }

    pub fn columns(&mut self, names: &[&str]) {
        let _ = writeln!(self.text, "{}", names.join(","));
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&x| num(x)).collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn labeled_row(&mut self, label: &str, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&x| num(x)).collect();
        let _ = writeln!(self.text, "{label},{}", cells.join(","));
    }

    pub fn raw_row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_thirteen_digits() {
        assert_eq!(num(1.0), "1.000000000000e0");
        assert_eq!(num(-2.5e-48), "-2.500000000000e-48");
        let x = 0.123_456_789_012_345_f64;
        assert!((num(x).parse::<f64>().unwrap() - x).abs() < 1e-13);
    }
}
