//! Rendering command results as aligned tables, CSV or JSON lines.
//!
//! A report is a list of named sections, each a small table. All three
//! renderings walk the sections in order and never consult a hash map, so the
//! same report always renders to the same bytes.

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn plain(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn short(&self) -> String {
        match self {
            Cell::Float(v) => {
                let s = format!("{v:.6}");
                let s = s.trim_end_matches('0').trim_end_matches('.');
                if s == "-0" { "0".into() } else { s.into() }
            }
            Cell::Empty => "-".into(),
            other => other.plain(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Section {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Section {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width in section {}", self.name);
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub sections: Vec<Section>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::JsonLines => self.json_lines(),
        }
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    fn table(&self) -> String {
        let mut out = String::new();
        for (k, s) in self.sections.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            out.push_str(&format!("[{}]\n", s.name));
            let cells: Vec<Vec<String>> = s.rows.iter().map(|r| r.iter().map(Cell::short).collect()).collect();
            let widths: Vec<usize> = s
                .columns
                .iter()
                .enumerate()
                .map(|(c, h)| cells.iter().map(|r| r[c].chars().count()).chain([h.len()]).max().unwrap_or(0))
                .collect();
            let line = |fields: &[String]| {
                let padded: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:<w$}")).collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            out.push_str(&line(&s.columns));
            out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
            for r in &cells {
                out.push_str(&line(r));
            }
        }
        out
    }

    /// One CSV block per section, separated by blank lines. Each block starts
    /// with its header row; the first column names the section.
    fn csv(&self) -> String {
        let mut blocks = Vec::new();
        for s in &self.sections {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            let header = std::iter::once("section".to_string()).chain(s.columns.iter().cloned());
            w.write_record(header).expect("writing to memory");
            for r in &s.rows {
                let fields = std::iter::once(s.name.clone()).chain(r.iter().map(Cell::plain));
                w.write_record(fields).expect("writing to memory");
            }
            let bytes = w.into_inner().expect("writing to memory");
            blocks.push(String::from_utf8(bytes).expect("csv of utf-8 fields"));
        }
        blocks.join("\n")
    }

    fn json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            for r in &s.rows {
                let mut obj = Map::new();
                obj.insert("section".into(), Value::from(s.name.as_str()));
                for (c, v) in s.columns.iter().zip(r) {
                    obj.insert(c.clone(), v.json());
                }
                out.push_str(&Value::Object(obj).to_string());
                out.push('\n');
            }
        }
        out
    }
}
