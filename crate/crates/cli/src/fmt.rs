//! Number formatting shared by TSV tables and SVG `data-value` attributes.

/// Shortest representation that parses back to the same `f64`. Integral
/// values print without a fractional part; non-finite values print as
/// `inf`, `-inf` and `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

/// Parses a value written by [`num`].
pub fn parse_num(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

/// Tab-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Value of column `col` in every row.
    pub fn column(&self, col: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == col)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn parse(text: &str) -> Option<Table> {
        let mut lines = text.lines();
        let header: Vec<String> = lines.next()?.split('\t').map(String::from).collect();
        let rows = lines.map(|l| l.split('\t').map(String::from).collect()).collect();
        Some(Table { header, rows })
    }
}

/// `*`, `**`, `***` for p below 0.05, 0.01, 0.001.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "n.s."
    }
}
