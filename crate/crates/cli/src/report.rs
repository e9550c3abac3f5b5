use std::fmt::Write as _;

use gerbecalc::Error;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// The invariant that failed and the detail naming the indices.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub invariant: String,
    pub detail: String,
}

impl Witness {
    pub fn of(e: &Error) -> Self {
        let dbg = format!("{e:?}");
        let invariant = dbg.split(['(', ' ', '{']).next().unwrap_or("").to_string();
        Witness { invariant, detail: e.to_string() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Value,
    pub status: &'static str,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u128>,
}

impl Report {
    pub fn new(command: Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: "gerbecalc",
            version: env!("CARGO_PKG_VERSION"),
            command,
            status: "pass",
            checks: Vec::new(),
            result: Value::Null,
            output: None,
            wall_ms: None,
        }
    }

    /// Records a check; the first failure sets the status.
    pub fn check<T>(&mut self, name: &str, r: &gerbecalc::Result<T>) -> bool {
        let witness = r.as_ref().err().map(Witness::of);
        let pass = witness.is_none();
        if !pass {
            self.status = "fail";
        }
        self.checks.push(Check { name: name.into(), pass, witness });
        pass
    }

    pub fn flag(&mut self, name: &str, pass: bool, detail: &str) {
        let witness = (!pass).then(|| Witness { invariant: name.into(), detail: detail.into() });
        if !pass {
            self.status = "fail";
        }
        self.checks.push(Check { name: name.into(), pass, witness });
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gerbecalc {} (schema {})", self.version, self.schema_version);
        let _ = writeln!(s, "command  {}", self.command);
        let _ = writeln!(s, "status   {}", self.status);
        for c in &self.checks {
            let _ = writeln!(s, "  [{}] {}", if c.pass { "pass" } else { "FAIL" }, c.name);
            if let Some(w) = &c.witness {
                let _ = writeln!(s, "         {}: {}", w.invariant, w.detail);
            }
        }
        table_value(&mut s, &self.result);
        if let Some(ms) = self.wall_ms {
            let _ = writeln!(s, "wall     {ms} ms");
        }
        if self.output.is_some() {
            let _ = writeln!(s, "output   (use --format json or --output FILE for the object)");
        }
        s
    }
}

/// Rows of arrays render as aligned tables, everything else as key/value.
fn table_value(s: &mut String, v: &Value) {
    let Value::Object(m) = v else { return };
    for (k, v) in m {
        match v {
            Value::Array(rows) if rows.iter().all(Value::is_object) && !rows.is_empty() => {
                let _ = writeln!(s, "{k}:");
                let cols: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
                let cell = |r: &Value, c: &str| r.get(c).map(compact).unwrap_or_default();
                let widths: Vec<usize> =
                    cols.iter().map(|c| rows.iter().map(|r| cell(r, c).len()).chain([c.len()]).max().unwrap()).collect();
                let line = |cells: Vec<String>| {
                    cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
                };
                let _ = writeln!(s, "  {}", line(cols.iter().map(|c| c.to_string()).collect()));
                for r in rows {
                    let _ = writeln!(s, "  {}", line(cols.iter().map(|c| cell(r, c)).collect()));
                }
            }
            _ => {
                let _ = writeln!(s, "{k:<8} {}", compact(v));
            }
        }
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        _ => v.to_string(),
    }
}
