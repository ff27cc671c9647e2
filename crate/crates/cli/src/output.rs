//! Table assembly and the three emitters: aligned human tables, CSV, and
//! line-oriented `key=value` records. Column order is fixed by the caller
//! and numbers carry 12 significant digits, so output is byte-stable.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Csv,
    Records,
}

impl Format {
    pub fn parse(text: &str) -> Option<Format> {
        match text {
            "human" | "table" => Some(Format::Human),
            "csv" => Some(Format::Csv),
            "records" => Some(Format::Records),
            _ => None,
        }
    }
}

/// 12 significant digits; plain decimal in a sane range, e-notation outside.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.11e}", x)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub title: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: Vec<&'static str>) -> Table {
        Table {
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Human => self.render_human(),
            Format::Csv => self.render_csv(),
            Format::Records => self.render_records(),
        }
    }

    fn render_human(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "# {}", self.title);
        }
        let header: Vec<String> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect();
        let _ = writeln!(out, "{}", header.join("  ").trim_end());
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(c)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn render_records(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| format!("{}={}", c, record_escape(v)))
                .collect();
            let _ = writeln!(out, "{}", fields.join(" "));
        }
        out
    }
}

fn csv_escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn record_escape(cell: &str) -> String {
    if cell.contains([' ', '=']) {
        format!("\"{}\"", cell.replace('"', "'"))
    } else {
        cell.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(8.0 / 15.0), "0.533333333333");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1.00000000000");
        assert_eq!(num(2f64.powi(-60)), "8.67361737988e-19");
    }

    #[test]
    fn formats_are_deterministic() {
        let mut t = Table::new("demo", vec!["a", "b"]);
        t.push(vec!["1".into(), "x y".into()]);
        assert_eq!(t.render(Format::Csv), "a,b\n1,x y\n");
        assert_eq!(t.render(Format::Records), "a=1 b=\"x y\"\n");
        let human = t.render(Format::Human);
        assert!(human.starts_with("# demo\n"));
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("", vec!["col"]);
        assert_eq!(t.render(Format::Csv), "col\n");
    }
}
