//! Canonical model file format (JSON) and the TSV count export.
//!
//! Serialization is canonical — fixed key order, vocabulary sorted by word,
//! LF line endings — so saving the same counts always produces the same
//! bytes, and save∘load is the identity on files this module wrote.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContextSpec, EmpiricalModel, ModelError, WordCounts};

const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    spec: ContextSpec,
    features: Vec<String>,
    tasks: Vec<String>,
    total_tokens: u64,
    vocab: Vec<VocabEntry>,
}

#[derive(Serialize, Deserialize)]
struct VocabEntry {
    w: String,
    n: u64,
    c: Vec<u64>,
    y: Vec<u64>,
}

/// Render a model to its canonical JSON text.
pub fn model_to_json(model: &EmpiricalModel) -> String {
    let file = ModelFile {
        version: FORMAT_VERSION,
        spec: model.spec().clone(),
        features: model.features().to_vec(),
        tasks: model.tasks().to_vec(),
        total_tokens: model.total_tokens(),
        vocab: model
            .words()
            .iter()
            .map(|r| VocabEntry {
                w: r.word.clone(),
                n: r.n,
                c: r.c.clone(),
                y: r.y.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("count model serializes");
    text.push('\n');
    text
}

/// Parse and fully validate a model from JSON text.
pub fn model_from_json(text: &str) -> Result<EmpiricalModel, ModelError> {
    let file: ModelFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            // A newer format may not even share the schema; report the
            // version mismatch rather than the incidental parse failure.
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(text) {
                if let Some(version) = v.get("version").and_then(|x| x.as_u64()) {
                    if version != FORMAT_VERSION {
                        return Err(ModelError::VersionMismatch { found: version });
                    }
                }
            }
            return Err(ModelError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            });
        }
    };
    if file.version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: file.version,
        });
    }
    let rows: Vec<WordCounts> = file
        .vocab
        .into_iter()
        .map(|v| WordCounts {
            word: v.w,
            n: v.n,
            c: v.c,
            y: v.y,
        })
        .collect();
    let model = EmpiricalModel::from_rows(file.spec, file.features, file.tasks, rows)?;
    if model.total_tokens() != file.total_tokens {
        return Err(ModelError::Parse {
            line: 0,
            column: 0,
            message: format!(
                "total_tokens is {} but vocabulary counts sum to {}",
                file.total_tokens,
                model.total_tokens()
            ),
        });
    }
    Ok(model)
}

/// Write a model to disk in canonical form.
pub fn save_model(model: &EmpiricalModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, model_to_json(model)).map_err(|e| ModelError::Io(e.to_string()))
}

/// Read and validate a model file.
pub fn load_model(path: &Path) -> Result<EmpiricalModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(e.to_string()))?;
    model_from_json(&text)
}

/// Tab-separated count export: `word n y_<task>… c_<feature>…`, LF endings.
pub fn export_tsv(model: &EmpiricalModel) -> String {
    let mut out = String::from("word\tn");
    for t in model.tasks() {
        out.push_str("\ty_");
        out.push_str(t);
    }
    for f in model.features() {
        out.push_str("\tc_");
        out.push_str(f);
    }
    out.push('\n');
    for row in model.words() {
        out.push_str(&row.word);
        out.push('\t');
        out.push_str(&row.n.to_string());
        for y in &row.y {
            out.push('\t');
            out.push_str(&y.to_string());
        }
        for c in &row.c {
            out.push('\t');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::{animal_lexicon, CORPUS};
    use super::super::{build_model, ContextSpec};
    use super::*;

    fn sample() -> EmpiricalModel {
        let spec = ContextSpec {
            window: 2,
            ..ContextSpec::default()
        };
        build_model(CORPUS, &spec, &["softly".to_string()], &animal_lexicon())
            .unwrap()
            .0
    }

    #[test]
    fn json_round_trip_is_identity_on_models_and_bytes() {
        let m = sample();
        let text = model_to_json(&m);
        let back = model_from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_json(&back), text);
    }

    #[test]
    fn json_has_the_documented_shape() {
        let text = model_to_json(&sample());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["spec"]["window"], 2);
        assert_eq!(v["spec"]["boundary"], true);
        assert_eq!(v["total_tokens"], 9);
        assert_eq!(v["vocab"][0]["w"], "barks"); // sorted ascending
        assert!(v["vocab"][0]["c"].is_array());
    }

    #[test]
    fn count_exceeding_n_fails_to_parse() {
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&sample())).unwrap();
        v["vocab"][0]["c"][0] = serde_json::json!(999);
        let err = model_from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::Parse { .. }), "{err}");
    }

    #[test]
    fn wrong_total_fails_to_parse() {
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&sample())).unwrap();
        v["total_tokens"] = serde_json::json!(1);
        let err = model_from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::Parse { .. }), "{err}");
    }

    #[test]
    fn truncated_file_reports_line_and_column() {
        let text = model_to_json(&sample());
        let err = model_from_json(&text[..text.len() / 2]).unwrap_err();
        match err {
            ModelError::Parse { line, .. } => assert!(line > 0),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn unknown_version_is_reported_as_such() {
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&sample())).unwrap();
        v["version"] = serde_json::json!(2);
        let err = model_from_json(&v.to_string()).unwrap_err();
        assert_eq!(err, ModelError::VersionMismatch { found: 2 });
        // Even when the rest of the schema has drifted.
        let err = model_from_json(r#"{"version": 3, "something": []}"#).unwrap_err();
        assert_eq!(err, ModelError::VersionMismatch { found: 3 });
    }

    #[test]
    fn tsv_export_matches_hand_layout() {
        let tsv = export_tsv(&sample());
        let mut lines = tsv.lines();
        assert_eq!(lines.next().unwrap(), "word\tn\ty_animal\tc_softly");
        assert_eq!(lines.next().unwrap(), "barks\t1\t0\t0");
        let cat = lines.find(|l| l.starts_with("cat\t")).unwrap();
        assert_eq!(cat, "cat\t2\t2\t2");
        assert!(tsv.ends_with('\n') && !tsv.contains('\r'));
    }

    #[test]
    fn save_and_load_round_trip_through_disk() {
        let m = sample();
        let dir = std::env::temp_dir().join(format!("cooccur-io-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
