//! Computed-versus-reference comparison reports.

use std::fmt::Write;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Value printed in the published tables or text.
    Published,
    /// Value fixed by algebra or by construction.
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tolerance {
    Abs(f64),
    Within([f64; 2]),
}

impl Tolerance {
    fn accepts(self, reference: Option<f64>, x: f64) -> bool {
        match (self, reference) {
            (Tolerance::Abs(t), Some(r)) => (x - r).abs() <= t,
            (Tolerance::Abs(_), None) => false,
            (Tolerance::Within([lo, hi]), _) => (lo..=hi).contains(&x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub computed: f64,
    pub reference: Option<f64>,
    pub source: Option<Source>,
    pub tolerance: Option<Tolerance>,
    /// `None` for rows reported for information only.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub report: String,
    pub rows: Vec<Row>,
    pub checked: usize,
    pub failed: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(name: &str) -> Self {
        Self {
            schema: aklt_core::io::SCHEMA,
            report: name.into(),
            rows: Vec::new(),
            checked: 0,
            failed: 0,
            pass: true,
            notes: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        quantity: impl Into<String>,
        computed: f64,
        reference: Option<f64>,
        source: Source,
        tolerance: Tolerance,
    ) {
        let pass = computed.is_finite() && tolerance.accepts(reference, computed);
        self.checked += 1;
        if !pass {
            self.failed += 1;
            self.pass = false;
        }
        self.rows.push(Row {
            quantity: quantity.into(),
            computed,
            reference,
            source: Some(source),
            tolerance: Some(tolerance),
            pass: Some(pass),
        });
    }

    pub fn info(&mut self, quantity: impl Into<String>, computed: f64, published: Option<f64>) {
        self.rows.push(Row {
            quantity: quantity.into(),
            computed,
            reference: published,
            source: published.map(|_| Source::Published),
            tolerance: None,
            pass: None,
        });
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("quantity,computed,reference,source,tolerance,pass\n");
        for r in &self.rows {
            let source = match r.source {
                Some(Source::Published) => "published",
                Some(Source::Derived) => "derived",
                None => "",
            };
            let tol = match r.tolerance {
                Some(Tolerance::Abs(t)) => format!("±{t}"),
                Some(Tolerance::Within([lo, hi])) => format!("[{lo} {hi}]"),
                None => String::new(),
            };
            let pass = match r.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "info",
            };
            let _ = writeln!(
                out,
                "\"{}\",{},{},{source},{tol},{pass}",
                r.quantity.replace('"', "\"\""),
                r.computed,
                opt(r.reference)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tallies_failures() {
        let mut r = Report::new("t");
        r.check("a", 1.0, Some(1.0), Source::Derived, Tolerance::Abs(1e-9));
        r.check(
            "b",
            0.5,
            None,
            Source::Published,
            Tolerance::Within([0.6, 0.7]),
        );
        r.check(
            "c",
            f64::NAN,
            Some(0.0),
            Source::Derived,
            Tolerance::Abs(1.0),
        );
        r.info("d", 0.9, Some(0.92));
        assert_eq!((r.checked, r.failed, r.pass), (3, 2, false));
        assert_eq!(r.to_csv().lines().count(), 5);
    }
}
