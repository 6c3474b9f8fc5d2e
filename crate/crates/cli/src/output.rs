//! Number formatting and table rendering shared by all subcommands.

use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Tab-separated, for scripts.
    Tsv,
    /// Column-aligned, for people.
    Table,
}

/// Scalars print with 6 significant digits unless a fixed number of decimals is requested.
#[derive(Debug, Clone, Copy, Default)]
pub struct Numbers {
    pub decimals: Option<usize>,
}

impl Numbers {
    pub fn fmt(&self, x: f64) -> String {
        match self.decimals {
            Some(d) => fixed(x, d),
            None => significant(x, 6),
        }
    }
}

pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    // Avoid "-0.0000".
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return fixed(0.0, digits - 1);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    fixed(x, decimals)
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: Option<String>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self { title: None, headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn render(&self, format: Format, out: &mut String) {
        match format {
            Format::Tsv => {
                out.push_str(&self.headers.join("\t"));
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.join("\t"));
                    out.push('\n');
                }
            }
            Format::Table => {
                if let Some(title) = &self.title {
                    let _ = writeln!(out, "{title}");
                }
                let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
                for row in &self.rows {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(cell.chars().count());
                    }
                }
                let numeric: Vec<bool> = (0..widths.len())
                    .map(|c| {
                        !self.rows.is_empty() && self.rows.iter().all(|r| r.get(c).is_some_and(|s| looks_numeric(s)))
                    })
                    .collect();
                let line = |cells: &[String], out: &mut String| {
                    let parts: Vec<String> = cells
                        .iter()
                        .enumerate()
                        .map(|(c, s)| {
                            let pad = widths[c].saturating_sub(s.chars().count());
                            if numeric[c] {
                                format!("{}{s}", " ".repeat(pad))
                            } else {
                                format!("{s}{}", " ".repeat(pad))
                            }
                        })
                        .collect();
                    out.push_str(parts.join("  ").trim_end());
                    out.push('\n');
                };
                line(&self.headers, out);
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                out.push_str(&rule.join("  "));
                out.push('\n');
                for row in &self.rows {
                    line(row, out);
                }
            }
        }
    }
}

fn looks_numeric(s: &str) -> bool {
    !s.is_empty() && s.parse::<f64>().is_ok()
}

/// Renders tables one after another, separated by a blank line.
pub fn render_all(tables: &[Table], format: Format) -> String {
    let mut out = String::new();
    for (n, t) in tables.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        t.render(format, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(significant(0.32271234, 6), "0.322712");
        assert_eq!(significant(1.23456789, 6), "1.23457");
        assert_eq!(significant(0.0, 6), "0.00000");
        assert_eq!(significant(-0.000012345678, 6), "-0.0000123457");
        assert_eq!(significant(1234567.0, 6), "1234567");
        assert_eq!(fixed(-0.00001, 4), "0.0000");
        assert_eq!(Numbers { decimals: Some(4) }.fmt(0.32271), "0.3227");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(["Model", "score"]);
        t.push(["a", "0.5"]);
        t.push(["long-name", "10.25"]);
        let mut s = String::new();
        t.render(Format::Table, &mut s);
        assert_eq!(s, "Model      score\n---------  -----\na            0.5\nlong-name  10.25\n");
        let mut s = String::new();
        t.render(Format::Tsv, &mut s);
        assert_eq!(s, "Model\tscore\na\t0.5\nlong-name\t10.25\n");
    }
}
