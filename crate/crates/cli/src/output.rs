//! Output rendering: fixed-schema CSV tables or pretty-printed JSON,
//! written to stdout or a file. Numeric cells use the shortest decimal
//! form that round-trips the exact binary value.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        self.rows.push(cells);
    }

    // Cells here are numbers, identifiers, and booleans, so no quoting or
    // escaping is ever needed.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn int<T: Display>(x: T) -> String {
    x.to_string()
}

pub fn blank() -> String {
    String::new()
}

pub fn emit(text: &str, out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}
