//! Pairwise connectivity between enrolled subjects.
//!
//! Five symmetric, zero-diagonal matrices are accumulated over the images in which
//! both subjects of a pair appear, using each subject's best face in that image:
//!
//! * `C` co-occurrence: number of shared images
//! * `D` closeness: how near the two faces are relative to their size
//! * `Z` connection: whether the head directions meet in front of the faces
//! * `E` empathy: cosine of the non-neutral expression vectors
//! * `H` happiness: mean happiness probability
//!
//! `T` is their weighted mean. Factors are accumulated in ascending image order so
//! sums are bit-reproducible.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::enrollment::PresenceMatrix;
use crate::expression::{HAPPY_INDEX, NEUTRAL_INDEX, N_EXPRESSIONS};
use crate::geometry::{ray_intersection, Point};
use crate::ingest::{FaceCollection, FaceDerived, FaceRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConnectivityError {
    #[error("n_f must be positive and finite, got {0}")]
    FaceRadius(f64),
    #[error("weights must be finite, non-negative and not all zero: {0:?}")]
    Weights([f64; 5]),
    #[error("matrix shapes differ")]
    Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityConfig {
    /// Distance cut-off in units of the pair's mean face scale.
    pub n_f: f64,
    /// Minimum face-scale ratio for the closeness factor.
    pub size_similarity_min: f64,
    /// Use the printed `ratio < min` gate instead of `ratio >= min`.
    #[serde(default)]
    pub literal_size_gate: bool,
    /// Weights of C, D, Z, E, H in the total.
    pub weights: [f64; 5],
    pub epsilon_norm: f64,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self {
            n_f: 4.0,
            size_similarity_min: 0.7,
            literal_size_gate: false,
            weights: [1.0; 5],
            epsilon_norm: 1e-9,
        }
    }
}

impl ConnectivityConfig {
    pub fn validate(&self) -> Result<(), ConnectivityError> {
        if !(self.n_f.is_finite() && self.n_f > 0.0) {
            return Err(ConnectivityError::FaceRadius(self.n_f));
        }
        let w = &self.weights;
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|&x| x == 0.0) {
            return Err(ConnectivityError::Weights(*w));
        }
        Ok(())
    }
}

/// The geometry of one face that the pair factors look at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub scale: f64,
    pub center: Point,
    pub gaze_origin: Point,
    /// Unit head direction.
    pub pose: Point,
}

impl FaceGeometry {
    pub fn of(record: &FaceRecord, derived: &FaceDerived) -> Self {
        Self {
            scale: derived.face_scale,
            center: derived.center,
            gaze_origin: derived.gaze_origin,
            pose: record.pose,
        }
    }
}

fn proximity(distance: f64, scale: f64, n_f: f64) -> f64 {
    let rel = distance / scale;
    if rel < n_f {
        (n_f - rel) / n_f
    } else {
        0.0
    }
}

pub fn closeness_factor(fi: &FaceGeometry, fj: &FaceGeometry, cfg: &ConnectivityConfig) -> f64 {
    let ratio = (fi.scale / fj.scale).min(fj.scale / fi.scale);
    let similar = if cfg.literal_size_gate {
        ratio < cfg.size_similarity_min
    } else {
        ratio >= cfg.size_similarity_min
    };
    if !similar {
        return 0.0;
    }
    let a = (fi.scale + fj.scale) / 2.0;
    proximity(fi.center.distance(fj.center), a, cfg.n_f)
}

pub fn connection_factor(fi: &FaceGeometry, fj: &FaceGeometry, cfg: &ConnectivityConfig) -> f64 {
    let Some(hit) = ray_intersection(fi.gaze_origin, fi.pose, fj.gaze_origin, fj.pose) else {
        return 0.0;
    };
    if hit.t1 < 0.0 || hit.t2 < 0.0 {
        return 0.0;
    }
    // Unit directions: the ray parameters are distances to the mid-eye points.
    let d = hit.t1.min(hit.t2);
    let a = (fi.scale + fj.scale) / 2.0;
    proximity(d, a, cfg.n_f)
}

pub fn empathy_factor(
    ei: &[f64; N_EXPRESSIONS],
    ej: &[f64; N_EXPRESSIONS],
    cfg: &ConnectivityConfig,
) -> f64 {
    let (ei, ej) = (&ei[..NEUTRAL_INDEX], &ej[..NEUTRAL_INDEX]);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (ni, nj) = (norm(ei), norm(ej));
    if ni < cfg.epsilon_norm || nj < cfg.epsilon_norm {
        return 0.0;
    }
    let cos: f64 = ei.iter().zip(ej).map(|(a, b)| (a / ni) * (b / nj)).sum();
    cos.clamp(0.0, 1.0)
}

pub fn happiness_factor(ei: &[f64; N_EXPRESSIONS], ej: &[f64; N_EXPRESSIONS]) -> f64 {
    (ei[HAPPY_INDEX] + ej[HAPPY_INDEX]) / 2.0
}

/// `C_ij` = number of images where both subjects are present.
pub fn co_occurrence(presence: &PresenceMatrix) -> Array2<f64> {
    pair_sum(presence, |_, _| 1.0)
}

/// Accumulate `factor(column, i, j)` over shared columns for every pair i<j.
fn pair_sum<F>(presence: &PresenceMatrix, mut factor: F) -> Array2<f64>
where
    F: FnMut(usize, (usize, usize)) -> f64,
{
    let n = presence.n_subjects();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let mut acc = 0.0;
            for t in presence.shared_columns(i, j) {
                acc += factor(t, (i, j));
            }
            m[(i, j)] = acc;
            m[(j, i)] = acc;
        }
    }
    m
}

/// Sum a per-face-pair factor over each pair's shared images.
fn face_pair_matrix<F>(presence: &PresenceMatrix, faces: &FaceCollection, factor: F) -> Array2<f64>
where
    F: Fn((&FaceRecord, &FaceDerived), (&FaceRecord, &FaceDerived)) -> f64,
{
    pair_sum(presence, |t, (i, j)| {
        let face = |s| {
            let best = presence.best_face(s, t).expect("shared column");
            faces.face(best.face_id).expect("matched face exists")
        };
        factor(face(i), face(j))
    })
}

pub fn closeness_matrix(
    presence: &PresenceMatrix,
    faces: &FaceCollection,
    cfg: &ConnectivityConfig,
) -> Array2<f64> {
    face_pair_matrix(presence, faces, |(ri, di), (rj, dj)| {
        closeness_factor(&FaceGeometry::of(ri, di), &FaceGeometry::of(rj, dj), cfg)
    })
}

pub fn connection_matrix(
    presence: &PresenceMatrix,
    faces: &FaceCollection,
    cfg: &ConnectivityConfig,
) -> Array2<f64> {
    face_pair_matrix(presence, faces, |(ri, di), (rj, dj)| {
        connection_factor(&FaceGeometry::of(ri, di), &FaceGeometry::of(rj, dj), cfg)
    })
}

pub fn empathy_matrix(
    presence: &PresenceMatrix,
    faces: &FaceCollection,
    cfg: &ConnectivityConfig,
) -> Array2<f64> {
    face_pair_matrix(presence, faces, |(ri, _), (rj, _)| {
        empathy_factor(&ri.expression, &rj.expression, cfg)
    })
}

pub fn happiness_matrix(presence: &PresenceMatrix, faces: &FaceCollection) -> Array2<f64> {
    face_pair_matrix(presence, faces, |(ri, _), (rj, _)| {
        happiness_factor(&ri.expression, &rj.expression)
    })
}

/// Weighted mean of C, D, Z, E, H.
pub fn total_connectivity(
    parts: [&Array2<f64>; 5],
    cfg: &ConnectivityConfig,
) -> Result<Array2<f64>, ConnectivityError> {
    cfg.validate()?;
    let shape = parts[0].dim();
    if parts.iter().any(|m| m.dim() != shape) {
        return Err(ConnectivityError::Shape);
    }
    let total_weight: f64 = cfg.weights.iter().sum();
    let mut t = Array2::zeros(shape);
    for (m, &w) in parts.iter().zip(&cfg.weights) {
        t.scaled_add(w, m);
    }
    Ok(t / total_weight)
}

/// Images shared by one unordered subject pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairImages {
    pub i: usize,
    pub j: usize,
    pub image_ids: Vec<u64>,
}

/// All connectivity matrices plus the configuration that produced them.
///
/// Serialized as `connectivity.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityBundle {
    pub config: ConnectivityConfig,
    #[serde(with = "crate::matrix_serde")]
    pub c: Array2<f64>,
    #[serde(with = "crate::matrix_serde")]
    pub d: Array2<f64>,
    #[serde(with = "crate::matrix_serde")]
    pub z: Array2<f64>,
    #[serde(with = "crate::matrix_serde")]
    pub e: Array2<f64>,
    #[serde(with = "crate::matrix_serde")]
    pub h: Array2<f64>,
    #[serde(with = "crate::matrix_serde")]
    pub t: Array2<f64>,
    /// Pairs i<j with at least one shared image.
    pub pair_images: Vec<PairImages>,
}

impl ConnectivityBundle {
    pub fn compute(
        presence: &PresenceMatrix,
        faces: &FaceCollection,
        cfg: &ConnectivityConfig,
    ) -> Result<Self, ConnectivityError> {
        cfg.validate()?;
        let c = co_occurrence(presence);
        let d = closeness_matrix(presence, faces, cfg);
        let z = connection_matrix(presence, faces, cfg);
        let e = empathy_matrix(presence, faces, cfg);
        let h = happiness_matrix(presence, faces);
        let t = total_connectivity([&c, &d, &z, &e, &h], cfg)?;
        let n = presence.n_subjects();
        let mut pairs = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                let ids: Vec<u64> = presence
                    .shared_columns(i, j)
                    .map(|col| presence.image_ids()[col])
                    .collect();
                if !ids.is_empty() {
                    pairs.insert((i, j), ids);
                }
            }
        }
        Ok(Self {
            config: cfg.clone(),
            c,
            d,
            z,
            e,
            h,
            t,
            pair_images: pairs
                .into_iter()
                .map(|((i, j), image_ids)| PairImages { i, j, image_ids })
                .collect(),
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.c.nrows()
    }

    /// Shared images of a pair in either order.
    pub fn shared_images(&self, i: usize, j: usize) -> &[u64] {
        let key = (i.min(j), i.max(j));
        self.pair_images
            .binary_search_by_key(&key, |p| (p.i, p.j))
            .map(|k| self.pair_images[k].image_ids.as_slice())
            .unwrap_or(&[])
    }

    /// `(C, D, Z, E, H, T)` at one pair.
    pub fn breakdown(&self, i: usize, j: usize) -> [f64; 6] {
        let at = |m: &Array2<f64>| m[(i, j)];
        [
            at(&self.c),
            at(&self.d),
            at(&self.z),
            at(&self.e),
            at(&self.h),
            at(&self.t),
        ]
    }
}
