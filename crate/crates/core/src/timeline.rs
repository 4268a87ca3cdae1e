//! Temporal post-processing: filling short labelling holes and grouping
//! frames into timed events.

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::scene::{FrameLabel, Label};

/// Default half-width of the decision window, in frames.
pub const DEFAULT_WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingParams {
    /// Frames considered on each side of a hole.
    pub k: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { k: DEFAULT_WINDOW }
    }
}

impl SmoothingParams {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("window size k must be >= 1"));
        }
        Ok(SmoothingParams { k })
    }
}

/// One pass of the sliding decision window over `labels`.
///
/// An `Unknown` at `i` becomes scene `s` when both `[i-k, i-1]` and
/// `[i+1, i+k]` (clipped to the sequence) contain `s` and no other scene
/// appears anywhere in those windows. Every decision reads the input, never
/// a label filled in the same pass.
pub fn fill_label_holes(labels: &[Label], params: SmoothingParams) -> Vec<Label> {
    let k = params.k;
    let n = labels.len();
    labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            if !label.is_unknown() || i == 0 || i + 1 >= n {
                return label.clone();
            }
            let left = &labels[i.saturating_sub(k)..i];
            let right = &labels[i + 1..(i + 1 + k).min(n)];
            let mut scene: Option<&str> = None;
            for l in left.iter().chain(right) {
                if let Some(s) = l.as_scene() {
                    match scene {
                        None => scene = Some(s),
                        Some(prev) if prev != s => return label.clone(),
                        _ => {}
                    }
                }
            }
            match scene {
                Some(s)
                    if left.iter().any(|l| l.as_scene() == Some(s))
                        && right.iter().any(|l| l.as_scene() == Some(s)) =>
                {
                    Label::Scene(s.to_string())
                }
                _ => label.clone(),
            }
        })
        .collect()
}

/// [`fill_label_holes`] applied to frame labels; ids, timestamps and tallies are kept.
pub fn fill_holes(labels: &[FrameLabel], params: SmoothingParams) -> Vec<FrameLabel> {
    let raw: Vec<Label> = labels.iter().map(|l| l.label.clone()).collect();
    labels
        .iter()
        .zip(fill_label_holes(&raw, params))
        .map(|(frame, label)| FrameLabel {
            label,
            ..frame.clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSegment {
    pub scene: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub frame_ids: Vec<String>,
}

impl EventSegment {
    /// `end − start` in seconds; frames are instants, so a one-frame event lasts 0 s.
    pub fn duration_seconds(&self) -> f64 {
        (self.end - self.start).num_milliseconds() as f64 / 1000.0
    }
}

/// Maximal runs of consecutive frames sharing a scene label.
pub fn segment_events(labels: &[FrameLabel]) -> Vec<EventSegment> {
    let mut events: Vec<EventSegment> = Vec::new();
    let mut open = false;
    for frame in labels {
        match frame.label.as_scene() {
            None => open = false,
            Some(scene) => match events.last_mut() {
                Some(ev) if open && ev.scene == scene => {
                    ev.end = frame.timestamp;
                    ev.frame_ids.push(frame.frame_id.clone());
                }
                _ => {
                    events.push(EventSegment {
                        scene: scene.to_string(),
                        start: frame.timestamp,
                        end: frame.timestamp,
                        frame_ids: vec![frame.frame_id.clone()],
                    });
                    open = true;
                }
            },
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn seq(s: &str) -> Vec<Label> {
        s.split_whitespace()
            .map(|t| if t == "_" { Label::Unknown } else { Label::scene(t) })
            .collect()
    }

    fn k2() -> SmoothingParams {
        SmoothingParams::new(2).unwrap()
    }

    #[test]
    fn single_hole_filled() {
        assert_eq!(fill_label_holes(&seq("A _ A"), k2()), seq("A A A"));
    }

    #[test]
    fn conflicting_sides_left_alone() {
        assert_eq!(fill_label_holes(&seq("A _ B"), k2()), seq("A _ B"));
    }

    #[test]
    fn double_hole_and_open_end() {
        assert_eq!(fill_label_holes(&seq("A _ _ A _"), k2()), seq("A A A A _"));
    }

    #[test]
    fn hole_wider_than_window_stays() {
        assert_eq!(fill_label_holes(&seq("A _ _ _ A"), SmoothingParams::new(1).unwrap()), seq("A _ _ _ A"));
    }

    #[test]
    fn foreign_scene_inside_window_blocks() {
        assert_eq!(fill_label_holes(&seq("B A _ A"), k2()), seq("B A _ A"));
    }

    #[test]
    fn zero_window_rejected() {
        assert!(SmoothingParams::new(0).is_err());
    }

    fn frames(labels: &str, times: &[i64]) -> Vec<FrameLabel> {
        seq(labels)
            .into_iter()
            .zip(times)
            .enumerate()
            .map(|(i, (label, &t))| FrameLabel {
                frame_id: format!("f{i}"),
                timestamp: Utc.timestamp_opt(t, 0).unwrap(),
                label,
                tallies: vec![],
            })
            .collect()
    }

    #[test]
    fn events_from_runs() {
        let ev = segment_events(&frames("A A A B B", &[0, 30, 60, 90, 120]));
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].scene.as_str(), ev[0].duration_seconds(), ev[0].frame_ids.len()), ("A", 60.0, 3));
        assert_eq!((ev[1].scene.as_str(), ev[1].duration_seconds(), ev[1].frame_ids.len()), ("B", 30.0, 2));
    }

    #[test]
    fn unknown_only_gives_no_events() {
        assert!(segment_events(&frames("_ _ _", &[0, 1, 2])).is_empty());
    }

    #[test]
    fn single_frame_event_has_zero_duration() {
        let ev = segment_events(&frames("_ A _ A", &[0, 30, 60, 90]));
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].duration_seconds(), 0.0);
        assert_eq!(ev[0].frame_ids, vec!["f1".to_string()]);
    }
}
