//! Frame-level precision, recall and F-measure per scene.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::{FrameLabel, Label};

/// Which ratios had a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub f_measure: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f_measure
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneScore {
    pub scene: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub degenerate: Degenerate,
}

impl SceneScore {
    /// `P = TP/(TP+FP)`, `R = TP/(TP+FN)`, `FM = 2PR/(P+R)`; empty denominators give 0.
    pub fn from_counts(scene: impl Into<String>, tp: usize, fp: usize, fn_: usize) -> Self {
        let mut degenerate = Degenerate::default();
        let ratio = |num: usize, den: usize, flag: &mut bool| {
            if den == 0 {
                *flag = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp, &mut degenerate.precision);
        let recall = ratio(tp, tp + fn_, &mut degenerate.recall);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            degenerate.f_measure = true;
            0.0
        };
        SceneScore {
            scene: scene.into(),
            tp,
            fp,
            fn_,
            precision,
            recall,
            f_measure,
            degenerate,
        }
    }
}

/// Ground-truth row.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthLabel {
    pub frame_id: String,
    pub label: Label,
}

/// Counts one scene's true/false positives and false negatives over frames.
pub fn evaluate_scene(predicted: &[FrameLabel], truth: &[TruthLabel], scene: &str) -> Result<SceneScore> {
    let truth_map: HashMap<&str, &Label> = truth.iter().map(|t| (t.frame_id.as_str(), &t.label)).collect();
    let pred_ids: HashSet<&str> = predicted.iter().map(|p| p.frame_id.as_str()).collect();
    let missing_truth: Vec<&str> = predicted
        .iter()
        .map(|p| p.frame_id.as_str())
        .filter(|id| !truth_map.contains_key(id))
        .collect();
    let missing_pred: Vec<&str> = truth
        .iter()
        .map(|t| t.frame_id.as_str())
        .filter(|id| !pred_ids.contains(id))
        .collect();
    if !missing_truth.is_empty() || !missing_pred.is_empty() {
        return Err(Error::input(format!(
            "frame sets differ; missing from truth: [{}]; missing from predictions: [{}]",
            missing_truth.join(", "),
            missing_pred.join(", ")
        )));
    }

    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for p in predicted {
        let predicted_here = p.label.as_scene() == Some(scene);
        let truly_here = truth_map[p.frame_id.as_str()].as_scene() == Some(scene);
        match (predicted_here, truly_here) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(SceneScore::from_counts(scene, tp, fp, fn_))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub scenes: Vec<SceneScore>,
    pub macro_average_f: f64,
}

/// Unweighted mean of the per-scene F-measures.
pub fn summary_report(scenes: Vec<SceneScore>) -> Result<EvalReport> {
    if scenes.is_empty() {
        return Err(Error::input("evaluation needs at least one scene"));
    }
    let macro_average_f = scenes.iter().map(|s| s.f_measure).sum::<f64>() / scenes.len() as f64;
    Ok(EvalReport {
        scenes,
        macro_average_f,
    })
}

impl EvalReport {
    /// Aligned text table with two-decimal ratios.
    pub fn to_table(&self) -> String {
        let width = self
            .scenes
            .iter()
            .map(|s| s.scene.len())
            .chain(["Scene".len(), "Macro".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>6}  {:>9}  {:>6}  {:>9}",
            "Scene", "TP", "FN", "FP", "Precision", "Recall", "F-Measure"
        );
        for s in &self.scenes {
            let flag = if s.degenerate.any() { " *" } else { "" };
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>6}  {:>6}  {:>9.2}  {:>6.2}  {:>9.2}{flag}",
                s.scene, s.tp, s.fn_, s.fp, s.precision, s.recall, s.f_measure
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>6}  {:>9}  {:>6}  {:>9.2}",
            "Macro", "", "", "", "", "", self.macro_average_f
        );
        if self.scenes.iter().any(|s| s.degenerate.any()) {
            out.push_str("* zero denominator; ratio reported as 0\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
