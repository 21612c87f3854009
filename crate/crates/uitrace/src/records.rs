//! Comparison record files and the pairs manifest.
//!
//! Both are line-delimited JSON. A manifest line names one head-to-head
//! comparison on one site:
//!
//! ```text
//! {"pair_id":"p-17","site_id":"todo","model_a":"m1","model_b":"m2",
//!  "output_a":"m1-run3","output_b":"m2-run1","description":"A todo list app"}
//! ```
//!
//! `output_a`/`output_b` are the generator ids used in the trace corpus for
//! the specific outputs being compared, and name the preview directories in
//! the arena. They default to the model ids.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uitrace_core::ranking::ComparisonRecord;

use crate::error::{Error, Result};
use crate::jsonl;

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    /// Unique pair id.
    pub pair_id: String,
    /// Site (prompt) id.
    pub site_id: String,
    /// First model.
    pub model_a: String,
    /// Second model.
    pub model_b: String,
    /// Output of `model_a`; defaults to `model_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_a: Option<String>,
    /// Output of `model_b`; defaults to `model_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_b: Option<String>,
    /// Natural-language site description shown to raters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl PairSpec {
    /// Output id compared on side A.
    pub fn output_a(&self) -> &str {
        self.output_a.as_deref().unwrap_or(&self.model_a)
    }

    /// Output id compared on side B.
    pub fn output_b(&self) -> &str {
        self.output_b.as_deref().unwrap_or(&self.model_b)
    }

    fn check(&self) -> std::result::Result<(), String> {
        for (name, value) in [
            ("pair_id", &self.pair_id),
            ("site_id", &self.site_id),
            ("model_a", &self.model_a),
            ("model_b", &self.model_b),
        ] {
            if value.is_empty() {
                return Err(format!("`{name}` is empty"));
            }
        }
        if self.model_a == self.model_b {
            return Err(format!(
                "pair `{}` compares `{}` with itself",
                self.pair_id, self.model_a
            ));
        }
        if self.output_a() == self.output_b() {
            return Err(format!(
                "pair `{}` uses output `{}` on both sides",
                self.pair_id,
                self.output_a()
            ));
        }
        Ok(())
    }
}

/// Reads a manifest, rejecting empty fields and repeated pair ids.
pub fn read_pairs(path: &Path) -> Result<Vec<PairSpec>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, text) in jsonl::read_raw_lines(path)? {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let spec: PairSpec = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        spec.check().map_err(bad)?;
        if !seen.insert(spec.pair_id.clone()) {
            return Err(bad(format!("duplicate pair id `{}`", spec.pair_id)));
        }
        out.push(spec);
    }
    Ok(out)
}

/// Writes a manifest.
pub fn write_pairs(path: &Path, pairs: &[PairSpec]) -> Result<()> {
    jsonl::write(path, pairs)
}

/// Reads comparison records, rejecting self-comparisons with a line number.
pub fn read_records(path: &Path) -> Result<Vec<ComparisonRecord>> {
    let mut out = Vec::new();
    for (line, text) in jsonl::read_raw_lines(path)? {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let record: ComparisonRecord = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if record.model_a == record.model_b {
            return Err(bad(format!("pair `{}` compares a model with itself", record.pair_id)));
        }
        out.push(record);
    }
    Ok(out)
}

/// Writes comparison records.
pub fn write_records(path: &Path, records: &[ComparisonRecord]) -> Result<()> {
    jsonl::write(path, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use uitrace_core::ranking::{BlindedAssignment, Rater, Verdict};

    #[test]
    fn outputs_default_to_models() {
        let spec: PairSpec =
            serde_json::from_str(r#"{"pair_id":"p","site_id":"s","model_a":"x","model_b":"y"}"#).unwrap();
        assert_eq!((spec.output_a(), spec.output_b()), ("x", "y"));
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            r#"{"pair_id":"p","site_id":"s","model_a":"x","model_b":"y"}"#
        );
    }

    #[test]
    fn record_wire_format() {
        let mut r = ComparisonRecord::new("p1", "s", "x", "y", Verdict::Tie, Rater::Metric("wmd".into()));
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"pair_id":"p1","site_id":"s","model_a":"x","model_b":"y","verdict":"tie","rater":"metric:wmd"}"#
        );
        r.rater = Rater::Human;
        r.blinded_assignment = Some(BlindedAssignment::ARight);
        let text = serde_json::to_string(&r).unwrap();
        assert!(
            text.ends_with(r#""rater":"human","blinded_assignment":"a_right"}"#),
            "{text}"
        );
        assert_eq!(serde_json::from_str::<ComparisonRecord>(&text).unwrap(), r);
    }

    #[test]
    fn duplicate_pair_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.jsonl");
        let line = r#"{"pair_id":"p","site_id":"s","model_a":"x","model_b":"y"}"#;
        std::fs::write(&p, format!("{line}\n\n{line}\n")).unwrap();
        let err = read_pairs(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn self_comparison_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        std::fs::write(
            &p,
            r#"{"pair_id":"p","site_id":"s","model_a":"x","model_b":"x","verdict":"a_wins","rater":"human"}"#,
        )
        .unwrap();
        assert!(matches!(read_records(&p), Err(Error::Parse { line: 1, .. })));
    }
}
