//! Per-scene filter banks and the frame labelling vote.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::cosfire::{rotation_tolerant_apply, BankContext, CosfireFilter, SubunitCache};
use crate::error::{Error, Result};
use crate::gabor::GaborBank;
use crate::imaging::Image;
use crate::inhibition::InhibitionParams;
use crate::scalar::Real;

/// Reserved label for frames no scene claims.
pub const UNKNOWN: &str = "unknown";

/// Default fraction of a filter's prototype response that counts as a detection.
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Unknown,
    Scene(String),
}

impl Label {
    pub fn scene(name: impl Into<String>) -> Self {
        let name = name.into();
        if name == UNKNOWN {
            Label::Unknown
        } else {
            Label::Scene(name)
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Label::Unknown)
    }

    pub fn as_scene(&self) -> Option<&str> {
        match self {
            Label::Scene(s) => Some(s),
            Label::Unknown => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Unknown => f.write_str(UNKNOWN),
            Label::Scene(s) => f.write_str(s),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::input("empty label"));
        }
        Ok(Label::scene(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub name: String,
    /// Fraction of each filter's prototype response required to count it as responding.
    pub detection_threshold: T,
    pub filters: Vec<CosfireFilter<T>>,
}

/// Named scenes with their filters, plus the Gabor bank the filters were
/// configured against.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBank<T> {
    pub context: BankContext<T>,
    pub scenes: Vec<Scene<T>>,
}

impl<T: Real> SceneBank<T> {
    pub fn new(gabor: GaborBank<T>, inhibition: Option<InhibitionParams<T>>) -> Self {
        SceneBank {
            context: BankContext { gabor, inhibition },
            scenes: Vec::new(),
        }
    }

    pub fn scene(&self, name: &str) -> Option<&Scene<T>> {
        self.scenes.iter().find(|s| s.name == name)
    }

    pub fn filter_count(&self) -> usize {
        self.scenes.iter().map(|s| s.filters.len()).sum()
    }

    pub fn scene_names(&self) -> Vec<String> {
        self.scenes.iter().map(|s| s.name.clone()).collect()
    }

    /// Appends `filter` to the scene named by `filter.scene`, creating that
    /// scene with `detection_threshold` if it does not exist yet.
    pub fn add_filter(&mut self, filter: CosfireFilter<T>, detection_threshold: T) -> Result<()> {
        if filter.scene.is_empty() || filter.scene == UNKNOWN {
            return Err(Error::input(format!("invalid scene name '{}'", filter.scene)));
        }
        if self
            .scenes
            .iter()
            .flat_map(|s| &s.filters)
            .any(|f| f.name == filter.name)
        {
            return Err(Error::input(format!("duplicate filter name '{}'", filter.name)));
        }
        match self.scenes.iter_mut().find(|s| s.name == filter.scene) {
            Some(scene) => scene.filters.push(filter),
            None => self.scenes.push(Scene {
                name: filter.scene.clone(),
                detection_threshold,
                filters: vec![filter],
            }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.context.validate()?;
        let mut filter_names = std::collections::HashSet::new();
        for (i, scene) in self.scenes.iter().enumerate() {
            if scene.name.is_empty() || scene.name == UNKNOWN {
                return Err(Error::input(format!("scene {i}: invalid name '{}'", scene.name)));
            }
            if self.scenes[..i].iter().any(|s| s.name == scene.name) {
                return Err(Error::input(format!("duplicate scene '{}'", scene.name)));
            }
            let t = scene.detection_threshold;
            if !(t > T::zero() && t <= T::one()) {
                return Err(Error::input(format!(
                    "scene '{}': detection threshold {t} outside (0, 1]",
                    scene.name
                )));
            }
            if scene.filters.is_empty() {
                return Err(Error::input(format!("scene '{}' has no filters", scene.name)));
            }
            for f in &scene.filters {
                if f.scene != scene.name {
                    return Err(Error::input(format!(
                        "filter '{}' claims scene '{}' but belongs to '{}'",
                        f.name, f.scene, scene.name
                    )));
                }
                if !filter_names.insert(f.name.as_str()) {
                    return Err(Error::input(format!("duplicate filter name '{}'", f.name)));
                }
                f.validate()?;
            }
        }
        Ok(())
    }
}

/// Outcome of testing one filter against one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterVerdict<T> {
    pub responds: bool,
    /// Peak response divided by the prototype response.
    pub normalized: T,
}

/// Whether `filter` responds significantly: its rotation-tolerant peak must
/// reach `threshold ×` its prototype response.
pub fn filter_responds<T: Real>(
    cache: &SubunitCache<'_, T>,
    filter: &CosfireFilter<T>,
    threshold: T,
    psis: &[T],
) -> Result<FilterVerdict<T>> {
    if !(threshold > T::zero() && threshold <= T::one()) {
        return Err(Error::param(format!("detection threshold {threshold} outside (0, 1]")));
    }
    if !(filter.prototype_response > T::zero()) {
        return Err(Error::CorruptFilter(filter.name.clone()));
    }
    let peak = rotation_tolerant_apply(cache, filter, psis)?.max_value();
    let normalized = peak / filter.prototype_response;
    Ok(FilterVerdict {
        responds: normalized >= threshold,
        normalized,
    })
}

/// Responding-filter count and best normalised response of one scene on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTally {
    pub scene: String,
    pub count: usize,
    pub max_response: f64,
}

/// Majority vote over scenes: most responding filters wins; equal counts fall
/// back to the higher best response; a tie on both, or no responders, is unknown.
pub fn decide_label(tallies: &[SceneTally]) -> Label {
    let mut best: Option<&SceneTally> = None;
    let mut tied = false;
    for t in tallies.iter().filter(|t| t.count > 0) {
        match best {
            None => best = Some(t),
            Some(b) => {
                if t.count > b.count
                    || (t.count == b.count && t.max_response > b.max_response + 1e-9)
                {
                    best = Some(t);
                    tied = false;
                } else if t.count == b.count && (t.max_response - b.max_response).abs() <= 1e-9 {
                    tied = true;
                }
            }
        }
    }
    match best {
        Some(b) if !tied => Label::Scene(b.scene.clone()),
        _ => Label::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabel {
    pub frame_id: String,
    pub timestamp: DateTime<Utc>,
    pub label: Label,
    /// One entry per bank scene, in bank order.
    pub tallies: Vec<SceneTally>,
}

impl FrameLabel {
    /// Label carrying zero tallies for every scene, used for frames that could not be read.
    pub fn unknown(frame_id: impl Into<String>, timestamp: DateTime<Utc>, scenes: &[String]) -> Self {
        FrameLabel {
            frame_id: frame_id.into(),
            timestamp,
            label: Label::Unknown,
            tallies: scenes
                .iter()
                .map(|s| SceneTally {
                    scene: s.clone(),
                    count: 0,
                    max_response: 0.0,
                })
                .collect(),
        }
    }

    pub fn tally(&self, scene: &str) -> Option<&SceneTally> {
        self.tallies.iter().find(|t| t.scene == scene)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOptions<T> {
    /// Rotations tried for every filter; must contain 0.
    pub psis: Vec<T>,
    /// Overrides every scene's own detection threshold when set.
    pub detection_threshold: Option<T>,
}

impl<T: Real> Default for LabelOptions<T> {
    fn default() -> Self {
        LabelOptions {
            psis: vec![T::zero()],
            detection_threshold: None,
        }
    }
}

impl<T: Real> LabelOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.psis.iter().any(|&p| p == T::zero()) {
            return Err(Error::param("rotation set must contain 0"));
        }
        if let Some(t) = self.detection_threshold {
            if !(t > T::zero() && t <= T::one()) {
                return Err(Error::param(format!("detection threshold {t} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-scene tallies for one image.
pub fn scene_tallies<T: Real>(
    image: &Image<T>,
    bank: &SceneBank<T>,
    options: &LabelOptions<T>,
) -> Result<Vec<SceneTally>> {
    options.validate()?;
    if bank.scenes.is_empty() {
        return Ok(Vec::new());
    }
    let stack = bank.context.responses(image)?;
    let cache = SubunitCache::new(&stack);
    let mut tallies = Vec::with_capacity(bank.scenes.len());
    for scene in &bank.scenes {
        let threshold = options.detection_threshold.unwrap_or(scene.detection_threshold);
        let mut tally = SceneTally {
            scene: scene.name.clone(),
            count: 0,
            max_response: 0.0,
        };
        for filter in &scene.filters {
            let verdict = filter_responds(&cache, filter, threshold, &options.psis)?;
            if verdict.responds {
                tally.count += 1;
            }
            tally.max_response = tally.max_response.max(verdict.normalized.as_f64());
        }
        tallies.push(tally);
    }
    Ok(tallies)
}

pub fn label_frame<T: Real>(
    frame_id: &str,
    timestamp: DateTime<Utc>,
    image: &Image<T>,
    bank: &SceneBank<T>,
    options: &LabelOptions<T>,
) -> Result<FrameLabel> {
    let tallies = scene_tallies(image, bank, options)?;
    Ok(FrameLabel {
        frame_id: frame_id.to_string(),
        timestamp,
        label: decide_label(&tallies),
        tallies,
    })
}

/// One frame of an egocentric stream.
#[derive(Debug, Clone)]
pub struct Frame<T> {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub image: Image<T>,
}

/// Labels frames independently (in parallel); output keeps input order.
pub fn label_sequence<T: Real>(
    frames: &[Frame<T>],
    bank: &SceneBank<T>,
    options: &LabelOptions<T>,
) -> Result<Vec<FrameLabel>> {
    if let Some(w) = frames.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::InvalidSequence(format!(
            "timestamp of '{}' precedes that of '{}'",
            w[1].id, w[0].id
        )));
    }
    frames
        .par_iter()
        .map(|f| label_frame(&f.id, f.timestamp, &f.image, bank, options))
        .collect()
}
