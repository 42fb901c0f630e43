use std::fmt::Write as _;

use pdcrys::chart::PolyMat;
use pdcrys::ring::{Elem, Ring};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Math,
    Cap,
    Schema,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub kind: Kind,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub checks: Vec<Check>,
    pub data: Map<String, Value>,
    pub sections: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.to_string(),
            checks: Vec::new(),
            data: Map::new(),
            sections: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            kind: Kind::Math,
            detail: detail.into(),
        });
    }

    pub fn cap_check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            kind: Kind::Cap,
            detail: detail.into(),
        });
    }

    pub fn schema_error(&mut self, detail: impl Into<String>) {
        self.checks.push(Check {
            name: "job".into(),
            pass: false,
            kind: Kind::Schema,
            detail: detail.into(),
        });
    }

    pub fn put(&mut self, key: &str, v: Value) {
        self.data.insert(key.to_string(), v);
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// 0 when every check passes, 2 for a malformed job, 3 when a cap check
    /// fails, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let failed = |k: Kind| self.checks.iter().any(|c| !c.pass && c.kind == k);
        if self.ok() {
            0
        } else if failed(Kind::Schema) {
            2
        } else if failed(Kind::Cap) {
            3
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "pass": c.pass,
                    "kind": match c.kind { Kind::Math => "assertion", Kind::Cap => "cap", Kind::Schema => "schema" },
                    "detail": c.detail,
                })
            })
            .collect();
        json!({
            "command": self.command,
            "ok": self.ok(),
            "exit_code": self.exit_code(),
            "checks": checks,
            "data": Value::Object(self.data.clone()),
        })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# pdcrys {}\n", self.command);
        let _ = writeln!(s, "Result: **{}** (exit code {})\n", if self.ok() { "PASS" } else { "FAIL" }, self.exit_code());
        if !self.checks.is_empty() {
            s.push_str("| check | result | detail |\n|---|---|---|\n");
            for c in &self.checks {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} |",
                    c.name,
                    if c.pass { "pass" } else { "FAIL" },
                    c.detail.replace('|', "\\|")
                );
            }
            s.push('\n');
        }
        for sec in &self.sections {
            s.push_str(sec);
            if !sec.ends_with('\n') {
                s.push('\n');
            }
            s.push('\n');
        }
        s
    }
}

pub fn elem(r: &Ring, x: Elem) -> Value {
    if r.s() == 1 {
        json!(x)
    } else {
        json!(r.coords(x))
    }
}

pub fn elem_matrix(r: &Ring, cols: &[Vec<Elem>]) -> Value {
    Value::Array(
        cols.iter()
            .map(|c| Value::Array(c.iter().map(|&x| elem(r, x)).collect()))
            .collect(),
    )
}

/// Sparse terms `[exponents, row, col, coefficient]`, row-major.
pub fn matrix_terms(m: &PolyMat) -> Value {
    let mut out = Vec::new();
    for i in 0..m.rows {
        for j in 0..m.cols {
            for (e, &c) in m.get(i, j).terms() {
                out.push(json!([e.to_vec(), i, j, elem(&m.ring, c)]));
            }
        }
    }
    Value::Array(out)
}

pub fn matrix_display(m: &PolyMat, names: &[String]) -> String {
    let rows: Vec<String> = (0..m.rows)
        .map(|i| {
            (0..m.cols)
                .map(|j| m.get(i, j).display(names))
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect();
    format!("[{}]", rows.join("; "))
}

/// Z/p^e factors of a finite Z/p^n-module, e.g. `Z/5^2 ⊕ Z/5`.
pub fn group_display(p: u64, exps: &[u32]) -> String {
    if exps.is_empty() {
        return "0".into();
    }
    exps.iter()
        .map(|&e| if e == 1 { format!("Z/{p}") } else { format!("Z/{p}^{e}") })
        .collect::<Vec<_>>()
        .join(" ⊕ ")
}
