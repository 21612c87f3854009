//! The trace file: one JSON object per line, one trace per object.
//!
//! ```text
//! {"trace_id":"s1/t1/ref/0","site_id":"s1","task_id":"t1","source":"reference",
//!  "generator_model_id":"","run_index":0,"dim":4,"frames":[[0.5,0.5,0.5,0.5]]}
//! ```
//!
//! Values are written with 9 significant digits. Keys other than the eight
//! above are ignored with a warning.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uitrace_core::trace::{CorpusOptions, Source, Trace, TraceCorpus, TraceError, TraceMeta};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Deserialize)]
struct TraceLine {
    trace_id: String,
    site_id: String,
    task_id: String,
    source: Source,
    #[serde(default)]
    generator_model_id: String,
    run_index: u32,
    dim: usize,
    frames: Vec<Vec<f64>>,
    #[serde(flatten)]
    unknown: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct TraceLineOut<'a> {
    trace_id: &'a str,
    site_id: &'a str,
    task_id: &'a str,
    source: Source,
    generator_model_id: &'a str,
    run_index: u32,
    dim: usize,
    frames: Vec<Vec<f64>>,
}

/// Rounds to the 9 significant digits stored on disk.
///
/// Quantizing an already quantized value returns it unchanged, so a saved and
/// reloaded corpus saves to the same bytes.
pub fn quantize(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn parse_line(path: &Path, line: usize, text: &str) -> Result<Trace> {
    let bad = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let raw: TraceLine = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    for key in raw.unknown.keys() {
        log::warn!("{}:{line}: ignoring unknown key `{key}`", path.display());
    }
    if let Some(found) = raw.frames.iter().map(Vec::len).find(|&len| len != raw.dim) {
        return Err(bad(TraceError::DimensionMismatch {
            trace_id: raw.trace_id,
            expected: raw.dim,
            found,
        }
        .to_string()));
    }
    let meta = TraceMeta {
        trace_id: raw.trace_id,
        site_id: raw.site_id,
        task_id: raw.task_id,
        source: raw.source,
        generator_model_id: raw.generator_model_id,
        run_index: raw.run_index,
    };
    Trace::from_vectors(meta, raw.frames).map_err(|e| bad(e.to_string()))
}

/// Reads every trace of a trace file, checking each line on its own.
pub fn read_traces(path: &Path) -> Result<Vec<Trace>> {
    jsonl::read_raw_lines(path)?
        .into_iter()
        .map(|(line, text)| parse_line(path, line, &text))
        .collect()
}

/// Reads and validates a corpus.
pub fn load_corpus(path: &Path, options: &CorpusOptions) -> Result<TraceCorpus> {
    let traces = read_traces(path)?;
    if traces.is_empty() {
        return Err(Error::Trace(TraceError::EmptyCorpus));
    }
    Ok(TraceCorpus::from_traces(traces, options)?)
}

/// Renders traces in the on-disk format.
pub fn traces_to_string<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> String {
    let mut out = String::new();
    for t in traces {
        let m = t.meta();
        let line = TraceLineOut {
            trace_id: &m.trace_id,
            site_id: &m.site_id,
            task_id: &m.task_id,
            source: m.source,
            generator_model_id: &m.generator_model_id,
            run_index: m.run_index,
            dim: t.dim(),
            frames: t
                .frames()
                .iter()
                .map(|e| e.as_slice().iter().copied().map(quantize).collect())
                .collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("trace serializes"));
        out.push('\n');
    }
    out
}

/// Writes traces to `path`.
pub fn write_traces<'a>(path: &Path, traces: impl IntoIterator<Item = &'a Trace>) -> Result<()> {
    jsonl::write_text(path, &traces_to_string(traces))
}

/// Writes a corpus in bundle order.
pub fn save_corpus(path: &Path, corpus: &TraceCorpus) -> Result<()> {
    write_traces(path, corpus.traces())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"trace_id":"r0","site_id":"s","task_id":"t","source":"reference","generator_model_id":"","run_index":0,"dim":4,"frames":[[1,0,0,0],[0,1,0,0]]}
{"trace_id":"r1","site_id":"s","task_id":"t","source":"reference","generator_model_id":"","run_index":1,"dim":4,"frames":[[0,0,1,0]]}
{"trace_id":"g0","site_id":"s","task_id":"t","source":"generated","generator_model_id":"m","run_index":0,"dim":4,"frames":[[0.5,0.5,0.5,0.5]],"note":"extra"}
{"trace_id":"g1","site_id":"s","task_id":"t","source":"generated","generator_model_id":"m","run_index":1,"dim":4,"frames":[[1,1,0,0]]}
"#;

    fn write(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let p = dir.path().join("traces.jsonl");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_two_bundles() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = load_corpus(&write(&dir, SAMPLE), &CorpusOptions::default()).unwrap();
        assert_eq!(corpus.dimension(), 4);
        assert_eq!(corpus.bundles().count(), 2);
        assert_eq!(corpus.generated("s", "t", "m").unwrap().runs().len(), 2);
    }

    #[test]
    fn short_frame_names_trace_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let text = SAMPLE.replace("[[1,1,0,0]]", "[[1,1,0]]");
        let err = load_corpus(&write(&dir, &text), &CorpusOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":4:") && msg.contains("`g1`"), "{msg}");
        assert_eq!(err.exit_code(), crate::EXIT_VALIDATION);
    }

    #[test]
    fn nan_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = SAMPLE.replace("[[0,0,1,0]]", "[[0,0,NaN,0]]");
        let err = load_corpus(&write(&dir, &text), &CorpusOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn orphan_generated_bundle_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text: String = SAMPLE.lines().skip(2).map(|l| format!("{l}\n")).collect();
        let err = load_corpus(&write(&dir, &text), &CorpusOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Trace(TraceError::MissingReference { .. })));
    }

    #[test]
    fn quantize_is_idempotent() {
        for x in [0.1, 1.0 / 3.0, -2.0e-7, 123456789.123, 5e-324, f64::MAX] {
            let q = quantize(x);
            assert_eq!(quantize(q).to_bits(), q.to_bits());
        }
        assert_eq!(quantize(1.0 / 3.0), 0.333333333);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = load_corpus(&write(&dir, SAMPLE), &CorpusOptions::default()).unwrap();
        let out = dir.path().join("again.jsonl");
        save_corpus(&out, &corpus).unwrap();
        let again = load_corpus(&out, &CorpusOptions::default()).unwrap();
        assert_eq!(again, corpus);
    }
}
