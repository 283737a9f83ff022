//! Rendering of records and tables as aligned text, CSV or JSON lines.

use std::io::Write;

use clap::ValueEnum;
use ctxphase::hilbert::Scalar;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pretty,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Complex(Scalar),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Str(s)
    }
}

fn complex_text(z: Scalar) -> String {
    format!("{}{:+}i", z.re, z.im)
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Complex(z) => complex_text(*z),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Complex(z) => Value::String(complex_text(*z)),
        }
    }
}

/// Buffered command output.
pub struct Out {
    format: Format,
    buf: Vec<u8>,
}

impl Out {
    pub fn new(format: Format) -> Out {
        Out {
            format,
            buf: Vec::new(),
        }
    }

    pub fn header(&mut self, seed: u64, version: &str, command: &str) {
        let _ = writeln!(
            self.buf,
            "# seed={seed} version={version} command={command}"
        );
    }

    /// A comment line in every format.
    pub fn note(&mut self, text: &str) {
        let _ = writeln!(self.buf, "# {text}");
    }

    pub fn raw(&mut self, text: &str) {
        let _ = writeln!(self.buf, "{text}");
    }

    /// One named group of fields.
    pub fn record(&mut self, name: &str, fields: Vec<(&str, Cell)>) {
        match self.format {
            Format::Pretty => {
                let _ = writeln!(self.buf, "[{name}]");
                let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &fields {
                    let _ = writeln!(self.buf, "  {k:<width$}  {}", v.text());
                }
            }
            Format::Csv | Format::Jsonl => {
                let (keys, cells): (Vec<&str>, Vec<Cell>) = fields.into_iter().unzip();
                self.table(name, &keys, vec![cells]);
            }
        }
    }

    /// Rows under fixed column names.
    pub fn table(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<Cell>>) {
        match self.format {
            Format::Pretty => {
                let texts: Vec<Vec<String>> = rows
                    .iter()
                    .map(|r| r.iter().map(Cell::text).collect())
                    .collect();
                let widths: Vec<usize> = columns
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        texts
                            .iter()
                            .map(|r| r[i].len())
                            .chain([c.len()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let _ = writeln!(self.buf, "[{name}]");
                let line = |cells: Vec<&str>| {
                    cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:>w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                let _ = writeln!(self.buf, "{}", line(columns.to_vec()));
                for r in &texts {
                    let _ = writeln!(self.buf, "{}", line(r.iter().map(String::as_str).collect()));
                }
            }
            Format::Csv => {
                let _ = writeln!(self.buf, "# {name}");
                let mut w = csv::Writer::from_writer(&mut self.buf);
                let _ = w.write_record(columns);
                for r in &rows {
                    let _ = w.write_record(r.iter().map(Cell::text));
                }
                let _ = w.flush();
            }
            Format::Jsonl => {
                for r in rows {
                    let mut m = Map::new();
                    m.insert("record".into(), Value::String(name.to_string()));
                    for (c, v) in columns.iter().zip(r) {
                        m.insert(c.to_string(), v.json());
                    }
                    let _ = writeln!(self.buf, "{}", Value::Object(m));
                }
            }
        }
    }

    pub fn flush(&mut self) {
        let mut stdout = std::io::stdout().lock();
        let _ = stdout.write_all(&self.buf);
        let _ = stdout.flush();
        self.buf.clear();
    }
}
