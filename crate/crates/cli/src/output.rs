use crate::args::Format;

/// Rows of `(key, value)` fields. Machine output prints one row per line as
/// space-separated `key=value` fields; table output aligns columns.
#[derive(Debug, Default)]
pub struct Output {
    rows: Vec<Vec<(String, String)>>,
    list: bool,
}

impl Output {
    pub fn record() -> Self {
        Output::default()
    }

    pub fn list() -> Self {
        Output {
            rows: Vec::new(),
            list: true,
        }
    }

    pub fn row(&mut self) -> Row<'_> {
        self.rows.push(Vec::new());
        Row(self.rows.last_mut().expect("just pushed"))
    }

    /// Field on the single row of a record output.
    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        if self.rows.is_empty() {
            self.rows.push(Vec::new());
        }
        self.rows[0].push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Machine => {
                let mut out = String::new();
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(|(k, v)| format!("{k}={}", machine_value(v))).collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
                out
            }
            Format::Table if !self.list => {
                let width = self.rows.iter().flatten().map(|(k, _)| k.len()).max().unwrap_or(0);
                let mut out = String::new();
                for (k, v) in self.rows.iter().flatten() {
                    out.push_str(&format!("{k:<width$}  {v}\n"));
                }
                out
            }
            Format::Table => {
                let Some(first) = self.rows.first() else {
                    return String::new();
                };
                let keys: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
                let mut widths: Vec<usize> = keys.iter().map(|k| k.len()).collect();
                for row in &self.rows {
                    for (i, (_, v)) in row.iter().enumerate().take(widths.len()) {
                        widths[i] = widths[i].max(v.len());
                    }
                }
                let line = |cells: Vec<&str>| {
                    let padded: Vec<String> = cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:<w$}"))
                        .collect();
                    format!("{}\n", padded.join("  ").trim_end())
                };
                let mut out = line(keys.clone());
                for row in &self.rows {
                    out.push_str(&line(row.iter().map(|(_, v)| v.as_str()).collect()));
                }
                out
            }
        }
    }
}

pub struct Row<'a>(&'a mut Vec<(String, String)>);

impl Row<'_> {
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }
}

fn machine_value(v: &str) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.replace(char::is_whitespace, "_")
    }
}
