//! Parsing and validation of face records, image metadata and the enrollment list.
//!
//! Every accepted [`FaceRecord`] satisfies the record invariants: positive box
//! extent, 68 landmarks, a unit pose direction, a 7-class expression vector whose
//! mass is within ±0.05 of one and a unit-norm 512-d descriptor. Records failing
//! any check are reported with their 1-based line number and never silently dropped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::ops::RangeInclusive;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::expression::N_EXPRESSIONS;
use crate::geometry::Point;

pub const DESCRIPTOR_DIM: usize = 512;
pub const N_LANDMARKS: usize = 68;
/// Both eyes in the 68-point landmark scheme (0-based).
pub const EYE_LANDMARKS: RangeInclusive<usize> = 36..=47;

/// Inputs with a norm below this cannot be renormalized.
pub const MIN_VECTOR_NORM: f64 = 1e-6;
/// Vectors whose norm is already this close to one are left untouched, which keeps
/// re-ingest of accepted records bit-identical.
const UNIT_NORM_SLACK: f64 = 1e-12;
pub const EXPRESSION_MASS_TOLERANCE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid image metadata: {0}")]
    ImageMetadata(String),
    #[error("enrolled subjects, line {line}: {reason}")]
    Enrollment { line: usize, reason: String },
    #[error("enrolled subject ids must be contiguous 0..{expected}, found {found:?}")]
    SubjectIds { expected: usize, found: Vec<usize> },
}

/// Axis-aligned face box `(x1, y1, x2, y2)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn center(&self) -> Point {
        Point::new((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// Grow by `fraction` of the width/height on every side.
    pub fn expanded(&self, fraction: f64) -> BBox {
        let dx = self.width() * fraction;
        let dy = self.height() * fraction;
        BBox::new(self.x1 - dx, self.y1 - dy, self.x2 + dx, self.y2 + dy)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x1 && p.x <= self.x2 && p.y >= self.y1 && p.y <= self.y2
    }
}

impl From<[f64; 4]> for BBox {
    fn from([x1, y1, x2, y2]: [f64; 4]) -> Self {
        Self { x1, y1, x2, y2 }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderLabel {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gender {
    pub label: GenderLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// One detected face with the outputs of the upstream extractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub face_id: u64,
    pub image_id: u64,
    pub bbox: BBox,
    pub landmarks: Vec<Point>,
    /// Projected head direction, unit length after ingest.
    pub pose: Point,
    /// Probabilities in the order of [`crate::expression::Expression::ALL`].
    pub expression: [f64; N_EXPRESSIONS],
    pub age: f64,
    pub gender: Gender,
    pub descriptor: Vec<f64>,
}

/// Why a single input line was not accepted.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RejectReason {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("bounding box has non-positive width or height")]
    EmptyBox,
    #[error("expected {N_LANDMARKS} landmarks, found {0}")]
    LandmarkCount(usize),
    #[error("expression probability outside [0, 1]")]
    ExpressionRange,
    #[error("expression mass out of range (sum {0})")]
    ExpressionMass(f64),
    #[error("expected a {DESCRIPTOR_DIM}-d descriptor, found {0} elements")]
    DescriptorDim(usize),
    #[error("descriptor norm below {MIN_VECTOR_NORM}")]
    DescriptorNorm,
    #[error("pose direction has zero norm")]
    ZeroPose,
    #[error("age must be non-negative")]
    NegativeAge,
    #[error("gender confidence outside [0, 1]")]
    GenderConfidence,
    #[error("duplicate face_id {0}")]
    DuplicateFaceId(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedFaces {
    pub records: Vec<FaceRecord>,
    pub rejections: Vec<Rejection>,
}

fn finite(values: impl IntoIterator<Item = f64>) -> bool {
    values.into_iter().all(f64::is_finite)
}

/// Scale `v` to unit norm. Returns `false` when the norm is too small to do so.
fn normalize_in_place(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < MIN_VECTOR_NORM {
        return false;
    }
    if (norm - 1.0).abs() > UNIT_NORM_SLACK {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    true
}

impl FaceRecord {
    /// Check every record invariant and renormalize the pose and descriptor.
    pub fn validated(mut self) -> Result<Self, RejectReason> {
        let b = self.bbox;
        if !finite([b.x1, b.y1, b.x2, b.y2]) {
            return Err(RejectReason::NonFinite("bbox"));
        }
        if b.width() <= 0.0 || b.height() <= 0.0 {
            return Err(RejectReason::EmptyBox);
        }
        if self.landmarks.len() != N_LANDMARKS {
            return Err(RejectReason::LandmarkCount(self.landmarks.len()));
        }
        if !self.landmarks.iter().all(|p| p.is_finite()) {
            return Err(RejectReason::NonFinite("landmarks"));
        }
        if !finite(self.expression) {
            return Err(RejectReason::NonFinite("expression"));
        }
        if self.expression.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(RejectReason::ExpressionRange);
        }
        let mass: f64 = self.expression.iter().sum();
        if (mass - 1.0).abs() > EXPRESSION_MASS_TOLERANCE {
            return Err(RejectReason::ExpressionMass(mass));
        }
        if !self.age.is_finite() {
            return Err(RejectReason::NonFinite("age"));
        }
        if self.age < 0.0 {
            return Err(RejectReason::NegativeAge);
        }
        if let Some(c) = self.gender.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(RejectReason::GenderConfidence);
            }
        }
        if !self.pose.is_finite() {
            return Err(RejectReason::NonFinite("pose"));
        }
        let mut pose = [self.pose.x, self.pose.y];
        if !normalize_in_place(&mut pose) {
            return Err(RejectReason::ZeroPose);
        }
        self.pose = pose.into();
        if self.descriptor.len() != DESCRIPTOR_DIM {
            return Err(RejectReason::DescriptorDim(self.descriptor.len()));
        }
        if !finite(self.descriptor.iter().copied()) {
            return Err(RejectReason::NonFinite("descriptor"));
        }
        if !normalize_in_place(&mut self.descriptor) {
            return Err(RejectReason::DescriptorNorm);
        }
        Ok(self)
    }
}

/// Parse a `faces.jsonl` stream. Blank lines are skipped.
pub fn parse_face_records<R: BufRead>(reader: R) -> Result<ParsedFaces, IngestError> {
    let mut out = ParsedFaces::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let parsed = serde_json::from_str::<FaceRecord>(&line)
            .map_err(|e| RejectReason::Malformed(e.to_string()))
            .and_then(FaceRecord::validated)
            .and_then(|r| {
                if seen.insert(r.face_id) {
                    Ok(r)
                } else {
                    Err(RejectReason::DuplicateFaceId(r.face_id))
                }
            });
        match parsed {
            Ok(record) => out.records.push(record),
            Err(reason) => out.rejections.push(Rejection {
                line: line_no,
                reason,
            }),
        }
    }
    Ok(out)
}

/// Serialize values as JSON Lines.
pub fn write_jsonl<W: Write, T: Serialize>(mut writer: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-face geometry used by the connectivity factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceDerived {
    /// √(w·h) in pixels.
    pub face_scale: f64,
    pub center: Point,
    /// Centroid of the eye landmarks.
    pub gaze_origin: Point,
}

impl FaceDerived {
    /// Sanity gate: the mid-eye point should fall inside the box grown by 50%.
    pub fn gaze_origin_plausible(&self, bbox: &BBox) -> bool {
        bbox.expanded(0.5).contains(self.gaze_origin)
    }
}

pub fn derive_face(record: &FaceRecord) -> FaceDerived {
    let b = &record.bbox;
    let eyes = &record.landmarks[EYE_LANDMARKS];
    let sum = eyes.iter().fold(Point::default(), |acc, &p| acc + p);
    FaceDerived {
        face_scale: (b.width() * b.height()).sqrt(),
        center: b.center(),
        gaze_origin: sum * (1.0 / eyes.len() as f64),
    }
}

/// One image of the collection and the faces detected in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image_id: u64,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub width: Option<u32>,
    #[serde(default)]
    pub height: Option<u32>,
    #[serde(default)]
    pub face_ids: Vec<u64>,
}

/// Group faces by image; entries are sorted by image id and faces by face id.
pub fn build_image_index(records: &[FaceRecord]) -> Vec<ImageEntry> {
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.image_id).or_default().push(r.face_id);
    }
    groups
        .into_iter()
        .map(|(image_id, mut face_ids)| {
            face_ids.sort_unstable();
            ImageEntry {
                image_id,
                path: None,
                width: None,
                height: None,
                face_ids,
            }
        })
        .collect()
}

/// A row of the optional `images.json` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_id: u64,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub width: Option<u32>,
    #[serde(default)]
    pub height: Option<u32>,
}

pub fn parse_image_metadata<R: std::io::Read>(reader: R) -> Result<Vec<ImageMeta>, IngestError> {
    let metas: Vec<ImageMeta> =
        serde_json::from_reader(reader).map_err(|e| IngestError::ImageMetadata(e.to_string()))?;
    let mut seen = HashSet::new();
    for m in &metas {
        if !seen.insert(m.image_id) {
            return Err(IngestError::ImageMetadata(format!(
                "duplicate image_id {}",
                m.image_id
            )));
        }
    }
    Ok(metas)
}

/// Attach paths and sizes to the index; images listed without faces get empty entries.
pub fn merge_image_metadata(index: &mut Vec<ImageEntry>, metas: &[ImageMeta]) {
    let mut by_id: BTreeMap<u64, ImageEntry> =
        index.drain(..).map(|e| (e.image_id, e)).collect();
    for m in metas {
        let entry = by_id.entry(m.image_id).or_insert_with(|| ImageEntry {
            image_id: m.image_id,
            path: None,
            width: None,
            height: None,
            face_ids: Vec::new(),
        });
        entry.path = m.path.clone();
        entry.width = m.width;
        entry.height = m.height;
    }
    index.extend(by_id.into_values());
}

/// Immutable, indexed view over the accepted faces of one collection.
#[derive(Debug, Clone, Default)]
pub struct FaceCollection {
    records: Vec<FaceRecord>,
    derived: Vec<FaceDerived>,
    by_face_id: HashMap<u64, usize>,
    images: Vec<ImageEntry>,
}

impl FaceCollection {
    pub fn new(records: Vec<FaceRecord>, metas: &[ImageMeta]) -> Self {
        let derived: Vec<FaceDerived> = records.iter().map(derive_face).collect();
        for (r, d) in records.iter().zip(&derived) {
            if !d.gaze_origin_plausible(&r.bbox) {
                warn!(
                    "face {}: eye centroid ({:.1}, {:.1}) lies outside its expanded box",
                    r.face_id, d.gaze_origin.x, d.gaze_origin.y
                );
            }
        }
        let by_face_id = records
            .iter()
            .enumerate()
            .map(|(k, r)| (r.face_id, k))
            .collect();
        let mut images = build_image_index(&records);
        merge_image_metadata(&mut images, metas);
        Self {
            records,
            derived,
            by_face_id,
            images,
        }
    }

    pub fn records(&self) -> &[FaceRecord] {
        &self.records
    }

    pub fn derived(&self) -> &[FaceDerived] {
        &self.derived
    }

    pub fn images(&self) -> &[ImageEntry] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Position of a face id in [`Self::records`].
    pub fn position(&self, face_id: u64) -> Option<usize> {
        self.by_face_id.get(&face_id).copied()
    }

    pub fn face(&self, face_id: u64) -> Option<(&FaceRecord, &FaceDerived)> {
        self.position(face_id)
            .map(|k| (&self.records[k], &self.derived[k]))
    }
}

/// One identity to analyze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrolledSubject {
    pub subject_id: usize,
    pub name: String,
    pub descriptor: Vec<f64>,
    /// Representative face for thumbnails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_id: Option<u64>,
}

/// Parse `enrolled.jsonl`. Any invalid line is fatal since it changes the subject set.
pub fn parse_enrolled<R: BufRead>(reader: R) -> Result<Vec<EnrolledSubject>, IngestError> {
    let mut subjects = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |reason: String| IngestError::Enrollment {
            line: idx + 1,
            reason,
        };
        let mut s: EnrolledSubject = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        if s.descriptor.len() != DESCRIPTOR_DIM {
            return Err(fail(RejectReason::DescriptorDim(s.descriptor.len()).to_string()));
        }
        if !finite(s.descriptor.iter().copied()) {
            return Err(fail(RejectReason::NonFinite("descriptor").to_string()));
        }
        if !normalize_in_place(&mut s.descriptor) {
            return Err(fail(RejectReason::DescriptorNorm.to_string()));
        }
        subjects.push(s);
    }
    subjects.sort_by_key(|s| s.subject_id);
    if subjects.iter().enumerate().any(|(i, s)| s.subject_id != i) {
        return Err(IngestError::SubjectIds {
            expected: subjects.len(),
            found: subjects.iter().map(|s| s.subject_id).collect(),
        });
    }
    Ok(subjects)
}
