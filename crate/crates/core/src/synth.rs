//! Synthetic stand-ins for egocentric frames: line-drawing "background
//! patterns" that can be placed at any position and rotation, texture and
//! blank distractors, and a whole labelled corpus on disk.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formats::{write_file, write_manifest, write_prototypes, write_truth, ManifestEntry, PrototypeEntry};
use crate::imaging::{save_gray_png, Image};
use crate::metrics::TruthLabel;
use crate::scene::Label;

pub const BACKGROUND: f64 = 0.2;
pub const FOREGROUND: f64 = 0.8;

/// Anti-aliased bright stroke primitive in pattern-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stroke {
    Segment { from: (f64, f64), to: (f64, f64), half_width: f64 },
    Ring { center: (f64, f64), radius: f64, half_width: f64 },
}

impl Stroke {
    fn distance(&self, p: (f64, f64)) -> (f64, f64) {
        match *self {
            Stroke::Segment { from, to, half_width } => {
                let (dx, dy) = (to.0 - from.0, to.1 - from.1);
                let len2 = dx * dx + dy * dy;
                let t = if len2 > 0.0 {
                    (((p.0 - from.0) * dx + (p.1 - from.1) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (cx, cy) = (from.0 + t * dx, from.1 + t * dy);
                (((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt(), half_width)
            }
            Stroke::Ring { center, radius, half_width } => {
                let r = ((p.0 - center.0).powi(2) + (p.1 - center.1).powi(2)).sqrt();
                ((r - radius).abs(), half_width)
            }
        }
    }

    /// Pixel coverage in `[0, 1]` of a unit pixel centred at `p`.
    fn coverage(&self, p: (f64, f64)) -> f64 {
        let (d, hw) = self.distance(p);
        (hw + 0.5 - d).clamp(0.0, 1.0)
    }
}

/// A line drawing with named keypoints, both in local coordinates around the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub name: String,
    pub strokes: Vec<Stroke>,
    pub keypoints: Vec<(f64, f64)>,
}

fn seg(from: (f64, f64), to: (f64, f64)) -> Stroke {
    Stroke::Segment { from, to, half_width: 1.0 }
}

impl Pattern {
    /// Horizontal arm toward `+x` and vertical arm toward `+y` meeting at the origin,
    /// which is the single keypoint.
    pub fn l_corner(arm: f64) -> Self {
        Pattern {
            name: "l-corner".into(),
            strokes: vec![seg((0.0, 0.0), (arm, 0.0)), seg((0.0, 0.0), (0.0, arm))],
            keypoints: vec![(0.0, 0.0)],
        }
    }

    /// Cabinet-like frame: outer rectangle, a vertical divider and a half shelf.
    /// Keypoints are its four corners and four T-junctions.
    pub fn cabinet() -> Self {
        let (hx, hy) = (24.0, 18.0);
        Pattern {
            name: "cabinet".into(),
            strokes: vec![
                seg((-hx, -hy), (hx, -hy)),
                seg((hx, -hy), (hx, hy)),
                seg((hx, hy), (-hx, hy)),
                seg((-hx, hy), (-hx, -hy)),
                seg((0.0, -hy), (0.0, hy)),
                seg((-hx, 0.0), (0.0, 0.0)),
            ],
            keypoints: vec![
                (-hx, -hy),
                (hx, -hy),
                (hx, hy),
                (-hx, hy),
                (0.0, -hy),
                (0.0, hy),
                (-hx, 0.0),
                (0.0, 0.0),
            ],
        }
    }

    /// Ring of radius 18 with three spokes from the centre at 90°, 210° and 330°.
    /// Keypoints: the hub and two spoke/ring junctions.
    pub fn spoked_ring() -> Self {
        let r = 18.0;
        let rim = |deg: f64| {
            let (s, c) = deg.to_radians().sin_cos();
            (r * c, r * s)
        };
        let mut strokes = vec![Stroke::Ring { center: (0.0, 0.0), radius: r, half_width: 1.0 }];
        strokes.extend([90.0, 210.0, 330.0].map(|a| seg((0.0, 0.0), rim(a))));
        Pattern {
            name: "spoked-ring".into(),
            strokes,
            keypoints: vec![(0.0, 0.0), rim(90.0), rim(210.0)],
        }
    }

    /// Position of local point `p` after rotating by `rotation` and translating to `center`.
    pub fn place(p: (f64, f64), center: (f64, f64), rotation: f64) -> (f64, f64) {
        let (s, c) = rotation.sin_cos();
        (center.0 + c * p.0 - s * p.1, center.1 + s * p.0 + c * p.1)
    }

    /// Draws the pattern rotated by `rotation` about its origin, placed at `center`.
    /// `contrast` scales the stroke intensity above the existing pixel value toward `FOREGROUND`.
    pub fn render(&self, canvas: &mut Image<f64>, center: (f64, f64), rotation: f64, contrast: f64) {
        let (s, c) = rotation.sin_cos();
        for y in 0..canvas.height() {
            for x in 0..canvas.width() {
                let (px, py) = (x as f64 - center.0, y as f64 - center.1);
                let local = (c * px + s * py, -s * px + c * py);
                let cov = self.strokes.iter().map(|st| st.coverage(local)).fold(0.0, f64::max);
                if cov > 0.0 {
                    let base = canvas.get(x, y);
                    let target = base + contrast * (FOREGROUND - base);
                    canvas.set(x, y, base + cov * (target - base));
                }
            }
        }
    }
}

pub fn blank(width: usize, height: usize) -> Image<f64> {
    Image::filled(width, height, BACKGROUND)
}

/// Sinusoidal grating `mean + amplitude·cos(2π(x cosθ + y sinθ)/λ + phase)`.
pub fn grating(width: usize, height: usize, wavelength: f64, theta: f64, phase: f64, mean: f64, amplitude: f64) -> Image<f64> {
    let (s, c) = theta.sin_cos();
    let k = 2.0 * std::f64::consts::PI / wavelength;
    Image::from_fn(width, height, |x, y| {
        mean + amplitude * (k * (x as f64 * c + y as f64 * s) + phase).cos()
    })
}

/// Uniform noise in `[-amplitude, amplitude]` added in place, clamped to `[0, 1]`.
pub fn add_noise(image: &mut Image<f64>, amplitude: f64, rng: &mut impl Rng) {
    for v in image.data_mut() {
        *v = (*v + rng.gen_range(-amplitude..=amplitude)).clamp(0.0, 1.0);
    }
}

/// Scattered short strokes of random orientation: dense clutter texture.
pub fn stroke_texture(width: usize, height: usize, count: usize, rng: &mut impl Rng) -> Image<f64> {
    let mut img = blank(width, height);
    let strokes: Vec<Stroke> = (0..count)
        .map(|_| {
            let cx = rng.gen_range(0.0..width as f64);
            let cy = rng.gen_range(0.0..height as f64);
            let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let l = rng.gen_range(3.0..7.0);
            seg((cx - l * a.cos(), cy - l * a.sin()), (cx + l * a.cos(), cy + l * a.sin()))
        })
        .collect();
    for y in 0..height {
        for x in 0..width {
            let cov = strokes.iter().map(|s| s.coverage((x as f64, y as f64))).fold(0.0, f64::max);
            if cov > 0.0 {
                img.set(x, y, BACKGROUND + cov * (FOREGROUND - BACKGROUND));
            }
        }
    }
    img
}

/// Test card with an isolated straight contour on the left and a dense
/// grating patch on the right, both at the same orientation.
#[derive(Debug, Clone)]
pub struct TextureContourCard {
    pub image: Image<f64>,
    /// Column of the isolated vertical contour (a step edge).
    pub contour_x: usize,
    /// Rows covered by the contour.
    pub contour_rows: (usize, usize),
    /// Half-open pixel rectangle `(x0, y0, x1, y1)` of the grating patch.
    pub texture: (usize, usize, usize, usize),
    /// Wavelength matching both structures.
    pub wavelength: f64,
}

pub fn texture_contour_card() -> TextureContourCard {
    let (w, h) = (160, 96);
    let wavelength = 8.0;
    let contour_x = 40;
    let texture = (88, 16, 152, 80);
    let image = Image::from_fn(w, h, |x, y| {
        if x >= texture.0 && x < texture.2 && y >= texture.1 && y < texture.3 {
            0.5 + 0.3 * (2.0 * std::f64::consts::PI * x as f64 / wavelength).cos()
        } else if x < contour_x {
            0.3
        } else {
            0.6
        }
    });
    TextureContourCard {
        image,
        contour_x,
        contour_rows: (16, 80),
        texture,
        wavelength,
    }
}

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub spacing_seconds: i64,
    pub start: DateTime<Utc>,
    pub seed: u64,
    /// Largest absolute rotation of planted patterns, as a multiple of π/8.
    pub max_rotation_steps: i32,
    pub max_shift: f64,
    pub noise: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            frames: 60,
            width: 128,
            height: 128,
            spacing_seconds: 30,
            start: Utc.with_ymd_and_hms(2016, 3, 1, 12, 0, 0).unwrap(),
            seed: 7,
            max_rotation_steps: 1,
            max_shift: 10.0,
            noise: 0.01,
        }
    }
}

pub const SCENE_A: &str = "CoffeeCorner";
pub const SCENE_B: &str = "Working";

/// What one generated frame contains.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameContent {
    Planted { scene: String, center: (f64, f64), rotation: f64 },
    Blank,
    Grating,
    Clutter,
}

#[derive(Debug, Clone)]
pub struct GeneratedFrame {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub image: Image<f64>,
    pub content: FrameContent,
}

impl GeneratedFrame {
    pub fn truth(&self) -> Label {
        match &self.content {
            FrameContent::Planted { scene, .. } => Label::scene(scene.clone()),
            _ => Label::Unknown,
        }
    }
}

/// Content schedule: alternating scene runs separated by distractor runs,
/// 40% of frames being distractors.
fn schedule(n: usize) -> Vec<Option<&'static str>> {
    let distractors = (n * 2) / 5;
    let planted = n - distractors;
    let blocks = 4;
    let mut out = Vec::with_capacity(n);
    for b in 0..blocks {
        let scene = if b % 2 == 0 { SCENE_A } else { SCENE_B };
        let p = planted / blocks + usize::from(b < planted % blocks);
        let d = distractors / blocks + usize::from(b < distractors % blocks);
        out.extend(std::iter::repeat(Some(scene)).take(p));
        out.extend(std::iter::repeat(None).take(d));
    }
    out
}

pub fn pattern_for(scene: &str) -> Pattern {
    if scene == SCENE_A {
        Pattern::cabinet()
    } else {
        Pattern::spoked_ring()
    }
}

pub fn generate_frames(spec: &CorpusSpec) -> Vec<GeneratedFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let mid = (w as f64 / 2.0, h as f64 / 2.0);
    let mut distractor_kind = 0usize;
    schedule(spec.frames)
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            let (mut image, content) = match slot {
                Some(scene) => {
                    let steps = rng.gen_range(-spec.max_rotation_steps..=spec.max_rotation_steps);
                    let rotation = steps as f64 * std::f64::consts::PI / 8.0;
                    let center = (
                        (mid.0 + rng.gen_range(-spec.max_shift..=spec.max_shift)).round(),
                        (mid.1 + rng.gen_range(-spec.max_shift..=spec.max_shift)).round(),
                    );
                    let mut img = blank(w, h);
                    pattern_for(scene).render(&mut img, center, rotation, 1.0);
                    (img, FrameContent::Planted { scene: scene.to_string(), center, rotation })
                }
                None => {
                    distractor_kind += 1;
                    match distractor_kind % 3 {
                        0 => (blank(w, h), FrameContent::Blank),
                        1 => {
                            let theta = rng.gen_range(0.0..std::f64::consts::PI);
                            let lambda = rng.gen_range(5.0..12.0);
                            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                            (grating(w, h, lambda, theta, phase, 0.5, 0.3), FrameContent::Grating)
                        }
                        _ => (stroke_texture(w, h, 140, &mut rng), FrameContent::Clutter),
                    }
                }
            };
            add_noise(&mut image, spec.noise, &mut rng);
            GeneratedFrame {
                id: format!("frame_{i:03}"),
                timestamp: spec.start + Duration::seconds(spec.spacing_seconds * i as i64),
                image,
                content,
            }
        })
        .collect()
}

/// A prototype image plus the keypoints (pixel coordinates) to configure from it.
#[derive(Debug, Clone)]
pub struct PrototypeImage {
    pub file_name: String,
    pub scene: String,
    pub image: Image<f64>,
    /// `(filter name, keypoint)` pairs.
    pub keypoints: Vec<(String, (usize, usize))>,
}

/// Prototype sets: five images carrying eight keypoints for the first scene,
/// two images carrying three keypoints for the second.
pub fn generate_prototypes(spec: &CorpusSpec) -> Vec<PrototypeImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let (w, h) = (spec.width, spec.height);
    let center = ((w / 2) as f64, (h / 2) as f64);
    let plan: [(&str, &[&[usize]]); 2] = [
        (SCENE_A, &[&[0, 1], &[2, 3], &[4, 5], &[6], &[7]]),
        (SCENE_B, &[&[0, 1], &[2]]),
    ];
    let mut out = Vec::new();
    for (scene, images) in plan {
        let pattern = pattern_for(scene);
        for (ii, kps) in images.iter().enumerate() {
            let mut image = blank(w, h);
            pattern.render(&mut image, center, 0.0, 1.0);
            add_noise(&mut image, spec.noise, &mut rng);
            let keypoints = kps
                .iter()
                .map(|&k| {
                    let p = Pattern::place(pattern.keypoints[k], center, 0.0);
                    (format!("{scene}_{k}"), (p.0.round() as usize, p.1.round() as usize))
                })
                .collect();
            out.push(PrototypeImage {
                file_name: format!("{scene}_{ii}.png"),
                scene: scene.to_string(),
                image,
                keypoints,
            });
        }
    }
    out
}

/// Files written by [`write_corpus`], relative to its output directory.
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub manifest: PathBuf,
    pub truth: PathBuf,
    pub prototypes: PathBuf,
    pub frames: usize,
    pub prototype_images: usize,
}

/// Writes `frames/*.png`, `prototypes/*.png`, `manifest.csv`, `truth.csv`
/// and `prototypes.csv` under `dir`.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec) -> Result<CorpusLayout> {
    let mkdir = |p: &Path| {
        std::fs::create_dir_all(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    mkdir(&dir.join("frames"))?;
    mkdir(&dir.join("prototypes"))?;

    let frames = generate_frames(spec);
    let mut manifest = Vec::with_capacity(frames.len());
    let mut truth = Vec::with_capacity(frames.len());
    for f in &frames {
        let rel = PathBuf::from("frames").join(format!("{}.png", f.id));
        save_gray_png(&f.image, &dir.join(&rel))?;
        manifest.push(ManifestEntry {
            frame_id: f.id.clone(),
            path: rel,
            timestamp: f.timestamp,
        });
        truth.push(TruthLabel {
            frame_id: f.id.clone(),
            label: f.truth(),
        });
    }

    let protos = generate_prototypes(spec);
    let mut entries = Vec::new();
    for p in &protos {
        let rel = PathBuf::from("prototypes").join(&p.file_name);
        save_gray_png(&p.image, &dir.join(&rel))?;
        for (name, kp) in &p.keypoints {
            entries.push(PrototypeEntry {
                image: rel.clone(),
                keypoint: *kp,
                scene: p.scene.clone(),
                name: name.clone(),
            });
        }
    }

    let layout = CorpusLayout {
        manifest: PathBuf::from("manifest.csv"),
        truth: PathBuf::from("truth.csv"),
        prototypes: PathBuf::from("prototypes.csv"),
        frames: frames.len(),
        prototype_images: protos.len(),
    };
    write_file(&dir.join(&layout.manifest), |w| write_manifest(w, &manifest))?;
    write_file(&dir.join(&layout.truth), |w| write_truth(w, &truth))?;
    write_file(&dir.join(&layout.prototypes), |w| write_prototypes(w, &entries))?;
    Ok(layout)
}
