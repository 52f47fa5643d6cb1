//! Plain-text tables with six significant digits.

use std::fmt::Write;

/// `x` to six significant digits, switching to exponent notation outside
/// `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let exp = a.log10().floor() as i32;
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit, e.g. 9.999995 -> 10.00000
        if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > (exp + 1).max(1) as usize {
            let decimals = decimals.saturating_sub(1);
            return format!("{x:.decimals$}");
        }
        s
    } else {
        format!("{x:.5e}")
    }
}

pub fn opt6(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), sig6)
}

pub fn vec6(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| sig6(x)).collect();
    format!("({})", parts.join(", "))
}

pub struct Table {
    title: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            title: title.into(),
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    pub fn render(&self) -> String {
        let n = self.headers.len();
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (i, c) in r.iter().enumerate().take(n) {
                width[i] = width[i].max(c.chars().count());
            }
        }
        let mut out = String::new();
        if !self.title.is_empty() {
            writeln!(out, "{}", self.title).unwrap();
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:<w$}", c, w = width[i]))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        writeln!(out, "{}", line(&self.headers)).unwrap();
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(out, "{}", rule.join("  ")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", line(r)).unwrap();
        }
        out
    }
}

/// Two-column key/value table.
pub fn kv(title: &str, pairs: &[(&str, String)]) -> String {
    let mut t = Table::new(title, &["quantity", "value"]);
    for (k, v) in pairs {
        t.row(vec![k.to_string(), v.clone()]);
    }
    t.render()
}
