//! Line-oriented sectioned text: a magic/version line, `[section]`
//! headers, whitespace-separated rows and `#` comments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub text: String,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub line: usize,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub path: String,
    pub version: u32,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(path: &str, text: &str, magic: &str, supported: u32) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        let mut version = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let fields: Vec<Field> = tokens(content);
            let first = &fields[0];
            if version.is_none() {
                if first.text != magic || fields.len() != 2 {
                    return Err(parse_error(
                        path,
                        line,
                        first.column,
                        format!("expected '{magic} <version>'"),
                    ));
                }
                let v: u32 = fields[1]
                    .text
                    .parse()
                    .map_err(|_| parse_error(path, line, fields[1].column, "version must be an integer"))?;
                if v != supported {
                    return Err(parse_error(
                        path,
                        line,
                        fields[1].column,
                        format!("unsupported version {v}"),
                    ));
                }
                version = Some(v);
                continue;
            }
            if first.text.starts_with('[') {
                let name = content.trim();
                if fields.len() != 1 || !name.ends_with(']') || name.len() < 3 {
                    return Err(parse_error(path, line, first.column, "malformed section header"));
                }
                let name = name[1..name.len() - 1].to_string();
                if sections.iter().any(|s| s.name == name) {
                    return Err(parse_error(
                        path,
                        line,
                        first.column,
                        format!("duplicate section [{name}]"),
                    ));
                }
                sections.push(Section {
                    name,
                    line,
                    rows: Vec::new(),
                });
                continue;
            }
            match sections.last_mut() {
                Some(s) => s.rows.push(Row { line, fields }),
                None => return Err(parse_error(path, line, first.column, "row outside of any section")),
            }
        }
        let version = version.ok_or_else(|| parse_error(path, 1, 1, format!("missing '{magic}' header")))?;
        Ok(Self {
            path: path.to_string(),
            version,
            sections,
        })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn rows(&self, name: &str) -> &[Row] {
        self.section(name).map_or(&[], |s| &s.rows)
    }

    /// Fails on sections outside the known list.
    pub fn expect_sections(&self, known: &[&str]) -> Result<()> {
        for s in &self.sections {
            if !known.contains(&s.name.as_str()) {
                return Err(parse_error(
                    &self.path,
                    s.line,
                    1,
                    format!("unknown section [{}]", s.name),
                ));
            }
        }
        Ok(())
    }

    pub fn error(&self, row: &Row, k: usize, message: impl Into<String>) -> Error {
        let column = row
            .fields
            .get(k)
            .map_or_else(|| row.fields.last().map_or(1, |f| f.column), |f| f.column);
        parse_error(&self.path, row.line, column, message)
    }

    pub fn arity(&self, row: &Row, min: usize, max: usize) -> Result<()> {
        let n = row.fields.len();
        if n < min || n > max {
            let want = if min == max {
                format!("{min}")
            } else {
                format!("{min} to {max}")
            };
            return Err(self.error(row, n.min(max), format!("expected {want} fields, found {n}")));
        }
        Ok(())
    }

    pub fn str<'r>(&self, row: &'r Row, k: usize) -> &'r str {
        &row.fields[k].text
    }

    /// A finite number.
    pub fn number(&self, row: &Row, k: usize) -> Result<f64> {
        let v = self.number_or_inf(row, k)?;
        if !v.is_finite() {
            return Err(self.error(row, k, "expected a finite number"));
        }
        Ok(v)
    }

    /// A number that may be `inf`.
    pub fn number_or_inf(&self, row: &Row, k: usize) -> Result<f64> {
        let text = self.str(row, k);
        let v: f64 = text
            .parse()
            .map_err(|_| self.error(row, k, format!("'{text}' is not a number")))?;
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(self.error(row, k, format!("'{text}' is not allowed")));
        }
        Ok(v)
    }

    /// `-` for absent, otherwise a number (or `inf` when allowed).
    pub fn optional_number(&self, row: &Row, k: usize, allow_inf: bool) -> Result<Option<f64>> {
        if row.fields.len() <= k || self.str(row, k) == "-" {
            return Ok(None);
        }
        let v = if allow_inf {
            self.number_or_inf(row, k)?
        } else {
            self.number(row, k)?
        };
        Ok(Some(v))
    }

    pub fn count(&self, row: &Row, k: usize) -> Result<usize> {
        let text = self.str(row, k);
        text.parse()
            .map_err(|_| self.error(row, k, format!("'{text}' is not a nonnegative integer")))
    }
}

fn tokens(content: &str) -> Vec<Field> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(pos),
            (true, Some(s)) => {
                out.push(Field {
                    text: content[s..pos].to_string(),
                    column: content[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

pub(crate) fn parse_error(path: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Shortest text that parses back to the same value.
pub fn format_number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}
