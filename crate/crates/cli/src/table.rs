//! Column tables and their CSV / JSON encodings.

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64.
            Cell::F(x) => format!("{x:.16e}"),
            Cell::I(n) => n.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => Value::from(*x),
            Cell::I(n) => Value::from(*n),
            Cell::B(b) => Value::from(*b),
            Cell::S(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let mut obj = Map::new();
                for (k, name) in self.columns.iter().enumerate() {
                    let col = self.rows.iter().map(|r| r[k].json()).collect();
                    obj.insert(name.to_string(), Value::Array(col));
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
                s.push('\n');
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_formats() {
        let mut t = Table::new(vec!["x", "n", "ok", "tag"]);
        t.push(vec![Cell::F(0.1), Cell::I(3), Cell::B(true), Cell::S("caustic".into())]);
        t.push(vec![Cell::F(f64::NAN), Cell::I(4), Cell::B(false), Cell::S("ok".into())]);
        assert_eq!(
            t.render(Format::Csv),
            "x,n,ok,tag\n1.0000000000000001e-1,3,true,caustic\nNaN,4,false,ok\n"
        );
        let v: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v["x"][0], 0.1);
        assert!(v["x"][1].is_null());
        assert_eq!(v["tag"][1], "ok");
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["x", "n", "ok", "tag"]);
    }
}
