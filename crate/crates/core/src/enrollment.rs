//! Matching detected faces to enrolled subjects and building the presence matrix.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::expression::N_EXPRESSIONS;
use crate::ingest::{BBox, EnrolledSubject, FaceCollection, Gender, DESCRIPTOR_DIM};

pub const DEFAULT_THETA: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnrollmentError {
    #[error("descriptor dimension mismatch: faces have {faces}, enrolled subjects have {enrolled}")]
    DimensionMismatch { faces: usize, enrolled: usize },
    #[error("threshold must lie in [0, 1), got {0}")]
    Threshold(f64),
    #[error("match refers to unknown face_id {0}")]
    UnknownFace(u64),
    #[error("match refers to subject {subject} but only {n_subjects} are enrolled")]
    UnknownSubject { subject: usize, n_subjects: usize },
}

/// Similarity scores and the thresholded match indicator `Y = X·Xeᵀ > θ`.
#[derive(Debug, Clone)]
pub struct MatchMatrix {
    /// Face id of each row.
    pub face_ids: Vec<u64>,
    /// m × n_e inner products.
    pub scores: Array2<f64>,
    /// `matched[(k, i)]` iff `scores[(k, i)] > theta`.
    pub matched: Array2<bool>,
    pub theta: f64,
}

/// One entry of Y that is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceMatch {
    pub face_id: u64,
    pub subject_id: usize,
    pub score: f64,
}

fn check_theta(theta: f64) -> Result<(), EnrollmentError> {
    if (0.0..1.0).contains(&theta) {
        Ok(())
    } else {
        Err(EnrollmentError::Threshold(theta))
    }
}

/// Score unit-norm face rows against unit-norm enrolled rows.
pub fn match_descriptors(
    face_ids: Vec<u64>,
    faces: ArrayView2<'_, f64>,
    enrolled: ArrayView2<'_, f64>,
    theta: f64,
) -> Result<MatchMatrix, EnrollmentError> {
    check_theta(theta)?;
    if faces.ncols() != enrolled.ncols() {
        return Err(EnrollmentError::DimensionMismatch {
            faces: faces.ncols(),
            enrolled: enrolled.ncols(),
        });
    }
    let scores = faces.dot(&enrolled.t());
    let matched = scores.mapv(|s| s > theta);
    Ok(MatchMatrix {
        face_ids,
        scores,
        matched,
        theta,
    })
}

/// Match every face of the collection against the enrollment list.
pub fn match_enrolled(
    faces: &FaceCollection,
    subjects: &[EnrolledSubject],
    theta: f64,
) -> Result<MatchMatrix, EnrollmentError> {
    let stack = |rows: Vec<&[f64]>| -> Result<Array2<f64>, EnrollmentError> {
        let dim = rows.first().map_or(DESCRIPTOR_DIM, |r| r.len());
        let mut out = Array2::zeros((rows.len(), dim));
        for (k, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(EnrollmentError::DimensionMismatch {
                    faces: dim,
                    enrolled: r.len(),
                });
            }
            out.row_mut(k).assign(&ndarray::aview1(r));
        }
        Ok(out)
    };
    let x = stack(faces.records().iter().map(|r| r.descriptor.as_slice()).collect())?;
    let xe = stack(subjects.iter().map(|s| s.descriptor.as_slice()).collect())?;
    let ids = faces.records().iter().map(|r| r.face_id).collect();
    match_descriptors(ids, x.view(), xe.view(), theta)
}

impl MatchMatrix {
    pub fn n_subjects(&self) -> usize {
        self.scores.ncols()
    }

    /// Set entries of Y in row-major order.
    pub fn matches(&self) -> Vec<FaceMatch> {
        self.matched
            .indexed_iter()
            .filter(|(_, &y)| y)
            .map(|((k, i), _)| FaceMatch {
                face_id: self.face_ids[k],
                subject_id: i,
                score: self.scores[(k, i)],
            })
            .collect()
    }

    pub fn to_dump(&self) -> MatchesDump {
        MatchesDump {
            theta: self.theta,
            n_faces: self.face_ids.len(),
            n_subjects: self.n_subjects(),
            matches: self.matches(),
        }
    }
}

/// Sparse `matches.json` form of Y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchesDump {
    pub theta: f64,
    pub n_faces: usize,
    pub n_subjects: usize,
    pub matches: Vec<FaceMatch>,
}

/// Representative face of a subject in one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestFace {
    pub face_id: u64,
    pub score: f64,
}

/// `P(i, t)` over enrolled subjects and the images of the collection.
#[derive(Debug, Clone)]
pub struct PresenceMatrix {
    /// Image id of each column, ascending.
    image_ids: Vec<u64>,
    n_subjects: usize,
    /// Row-major n_e × n.
    best: Vec<Option<BestFace>>,
}

impl PresenceMatrix {
    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_images(&self) -> usize {
        self.image_ids.len()
    }

    pub fn image_ids(&self) -> &[u64] {
        &self.image_ids
    }

    pub fn is_present(&self, subject: usize, column: usize) -> bool {
        self.best_face(subject, column).is_some()
    }

    pub fn best_face(&self, subject: usize, column: usize) -> Option<BestFace> {
        self.best[subject * self.image_ids.len() + column]
    }

    /// The 0/1 matrix as dense values.
    pub fn to_array(&self) -> Array2<u8> {
        Array2::from_shape_fn((self.n_subjects, self.n_images()), |(i, t)| {
            u8::from(self.is_present(i, t))
        })
    }

    /// Columns where the subject is present, ascending.
    pub fn columns_of(&self, subject: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_images()).filter(move |&t| self.is_present(subject, t))
    }

    pub fn image_count(&self, subject: usize) -> usize {
        self.columns_of(subject).count()
    }

    /// Columns where both subjects are present, ascending.
    pub fn shared_columns(&self, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_images()).filter(move |&t| self.is_present(i, t) && self.is_present(j, t))
    }
}

/// Collapse matches into per-(subject, image) presence with the highest-scoring face.
pub fn build_presence(
    matches: &[FaceMatch],
    faces: &FaceCollection,
    n_subjects: usize,
) -> Result<PresenceMatrix, EnrollmentError> {
    let image_ids: Vec<u64> = faces.images().iter().map(|e| e.image_id).collect();
    let column: BTreeMap<u64, usize> = image_ids.iter().enumerate().map(|(t, &id)| (id, t)).collect();
    let n = image_ids.len();
    let mut best: Vec<Option<BestFace>> = vec![None; n_subjects * n];
    for m in matches {
        if m.subject_id >= n_subjects {
            return Err(EnrollmentError::UnknownSubject {
                subject: m.subject_id,
                n_subjects,
            });
        }
        let (record, _) = faces
            .face(m.face_id)
            .ok_or(EnrollmentError::UnknownFace(m.face_id))?;
        let t = column[&record.image_id];
        let slot = &mut best[m.subject_id * n + t];
        let better = match slot {
            None => true,
            Some(b) => m.score > b.score || (m.score == b.score && m.face_id < b.face_id),
        };
        if better {
            *slot = Some(BestFace {
                face_id: m.face_id,
                score: m.score,
            });
        }
    }
    Ok(PresenceMatrix {
        image_ids,
        n_subjects,
        best,
    })
}

/// A subject's best face in one image, with the attributes the graph and service need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Appearance {
    pub subject_id: usize,
    pub image_id: u64,
    pub face_id: u64,
    pub score: f64,
    pub bbox: BBox,
    pub expression: [f64; N_EXPRESSIONS],
    pub age: f64,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRef {
    pub subject_id: usize,
    pub name: String,
    #[serde(default)]
    pub face_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub image_id: u64,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub width: Option<u32>,
    #[serde(default)]
    pub height: Option<u32>,
}

/// Presence joined with face attributes; the `presence.json` dump.
///
/// Appearances are sorted by subject, then image id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresenceReport {
    pub n_faces: usize,
    pub subjects: Vec<SubjectRef>,
    pub images: Vec<ImageRef>,
    pub appearances: Vec<Appearance>,
}

impl PresenceReport {
    pub fn build(
        presence: &PresenceMatrix,
        faces: &FaceCollection,
        subjects: &[EnrolledSubject],
    ) -> Self {
        let mut appearances = Vec::new();
        for i in 0..presence.n_subjects() {
            for t in presence.columns_of(i) {
                let best = presence.best_face(i, t).expect("present column");
                let (r, _) = faces.face(best.face_id).expect("matched face exists");
                appearances.push(Appearance {
                    subject_id: i,
                    image_id: presence.image_ids()[t],
                    face_id: best.face_id,
                    score: best.score,
                    bbox: r.bbox,
                    expression: r.expression,
                    age: r.age,
                    gender: r.gender,
                });
            }
        }
        Self {
            n_faces: faces.len(),
            subjects: subjects
                .iter()
                .map(|s| SubjectRef {
                    subject_id: s.subject_id,
                    name: s.name.clone(),
                    face_id: s.face_id,
                })
                .collect(),
            images: faces
                .images()
                .iter()
                .map(|e| ImageRef {
                    image_id: e.image_id,
                    path: e.path.clone(),
                    width: e.width,
                    height: e.height,
                })
                .collect(),
            appearances,
        }
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn appearances_of(&self, subject: usize) -> &[Appearance] {
        let start = self.appearances.partition_point(|a| a.subject_id < subject);
        let end = self.appearances.partition_point(|a| a.subject_id <= subject);
        &self.appearances[start..end]
    }

    /// Pairs of appearances of `i` and `j` in the images they share, by image id.
    pub fn shared(&self, i: usize, j: usize) -> Vec<(&Appearance, &Appearance)> {
        let (a, b) = (self.appearances_of(i), self.appearances_of(j));
        let (mut p, mut q) = (0, 0);
        let mut out = Vec::new();
        while p < a.len() && q < b.len() {
            match a[p].image_id.cmp(&b[q].image_id) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    out.push((&a[p], &b[q]));
                    p += 1;
                    q += 1;
                }
            }
        }
        out
    }

    pub fn image(&self, image_id: u64) -> Option<&ImageRef> {
        self.images
            .binary_search_by_key(&image_id, |e| e.image_id)
            .ok()
            .map(|k| &self.images[k])
    }
}
