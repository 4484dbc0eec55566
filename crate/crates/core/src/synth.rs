//! Planted-community fixture generator.
//!
//! Subjects are dealt round-robin into groups. Every synthetic image draws one
//! group and shows a random nonempty subset of its members side by side at similar
//! face scales, sometimes with an unenrolled bystander. Each member looks at another
//! member with probability 0.5 and in a random direction otherwise. Expressions
//! lean towards a per-group dominant class. Face descriptors are the subject's fixed
//! random unit template plus a perturbation of norm at most `noise`, renormalized.
//!
//! All randomness comes from one ChaCha8 stream seeded with `seed_from_u64(seed)`,
//! consumed in a fixed order, so equal configurations give equal fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::expression::{Expression, N_EXPRESSIONS};
use crate::geometry::Point;
use crate::ingest::{
    BBox, EnrolledSubject, FaceRecord, Gender, GenderLabel, DESCRIPTOR_DIM, N_LANDMARKS,
};

pub const IMAGE_WIDTH: f64 = 1920.0;
pub const IMAGE_HEIGHT: f64 = 1080.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("need at least one subject and one image")]
    Empty,
    #[error("group count must be in 1..={n_subjects}, got {n_groups}")]
    Groups { n_groups: usize, n_subjects: usize },
    #[error("noise must lie in [0, 1), got {0}")]
    Noise(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub n_images: usize,
    pub n_groups: usize,
    pub seed: u64,
    /// Upper bound on the descriptor perturbation norm.
    pub noise: f64,
    /// Probability that a member of the drawn group appears in an image.
    pub attendance: f64,
    /// Probability of one unenrolled bystander per image.
    pub bystander_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 8,
            n_images: 200,
            n_groups: 2,
            seed: 7,
            noise: 0.1,
            attendance: 0.75,
            bystander_rate: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTruth {
    pub image_id: u64,
    pub group: usize,
    /// Enrolled subjects shown, ascending.
    pub members: Vec<usize>,
}

/// Contents of `ground_truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    /// Group of each subject.
    pub groups: Vec<usize>,
    pub images: Vec<ImageTruth>,
}

#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub faces: Vec<FaceRecord>,
    pub enrolled: Vec<EnrolledSubject>,
    pub truth: GroundTruth,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn ellipse(center: (f64, f64), radius: (f64, f64), count: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..count).map(move |k| {
        let a = std::f64::consts::TAU * k as f64 / count as f64;
        (center.0 + radius.0 * a.cos(), center.1 + radius.1 * a.sin())
    })
}

/// The 68-point scheme in box-relative coordinates.
fn landmark_template() -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(N_LANDMARKS);
    // jaw 0-16
    pts.extend((0..17).map(|k| {
        let a = std::f64::consts::PI * (k as f64 / 16.0);
        (0.5 - 0.45 * a.cos(), 0.35 + 0.6 * a.sin())
    }));
    // brows 17-26
    pts.extend((0..5).map(|k| (0.15 + 0.065 * k as f64, 0.3)));
    pts.extend((0..5).map(|k| (0.58 + 0.065 * k as f64, 0.3)));
    // nose 27-35
    pts.extend((0..4).map(|k| (0.5, 0.38 + 0.065 * k as f64)));
    pts.extend((0..5).map(|k| (0.4 + 0.05 * k as f64, 0.63)));
    // eyes 36-47
    pts.extend(ellipse((0.3, 0.42), (0.08, 0.03), 6));
    pts.extend(ellipse((0.7, 0.42), (0.08, 0.03), 6));
    // mouth 48-67
    pts.extend(ellipse((0.5, 0.8), (0.18, 0.07), 12));
    pts.extend(ellipse((0.5, 0.8), (0.1, 0.03), 8));
    debug_assert_eq!(pts.len(), N_LANDMARKS);
    pts
}

const GROUP_MOODS: [Expression; N_EXPRESSIONS] = [
    Expression::Happy,
    Expression::Sad,
    Expression::Surprised,
    Expression::Angry,
    Expression::Neutral,
    Expression::Scared,
    Expression::Disgust,
];

struct Placed {
    subject: Option<usize>,
    bbox: BBox,
    gaze: Point,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthFixture, SynthError> {
    if cfg.n_subjects == 0 || cfg.n_images == 0 {
        return Err(SynthError::Empty);
    }
    if cfg.n_groups == 0 || cfg.n_groups > cfg.n_subjects {
        return Err(SynthError::Groups {
            n_groups: cfg.n_groups,
            n_subjects: cfg.n_subjects,
        });
    }
    if !(0.0..1.0).contains(&cfg.noise) {
        return Err(SynthError::Noise(cfg.noise));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let groups: Vec<usize> = (0..cfg.n_subjects).map(|s| s % cfg.n_groups).collect();
    let members_of: Vec<Vec<usize>> = (0..cfg.n_groups)
        .map(|g| (0..cfg.n_subjects).filter(|&s| groups[s] == g).collect())
        .collect();
    let templates: Vec<Vec<f64>> = (0..cfg.n_subjects)
        .map(|_| random_unit(&mut rng, DESCRIPTOR_DIM))
        .collect();
    let ages: Vec<f64> = (0..cfg.n_subjects).map(|_| rng.random_range(18.0..70.0)).collect();
    let genders: Vec<GenderLabel> = (0..cfg.n_subjects)
        .map(|_| {
            if rng.random_bool(0.5) {
                GenderLabel::Female
            } else {
                GenderLabel::Male
            }
        })
        .collect();
    let template = landmark_template();

    let mut faces = Vec::new();
    let mut truth_images = Vec::with_capacity(cfg.n_images);
    let mut first_face: Vec<Option<u64>> = vec![None; cfg.n_subjects];

    for image in 0..cfg.n_images {
        let image_id = image as u64;
        let group = rng.random_range(0..cfg.n_groups);
        let mut members: Vec<usize> = members_of[group]
            .iter()
            .copied()
            .filter(|_| rng.random_bool(cfg.attendance))
            .collect();
        if members.is_empty() {
            let pool = &members_of[group];
            members.push(pool[rng.random_range(0..pool.len())]);
        }
        let mut lineup: Vec<Option<usize>> = members.iter().map(|&s| Some(s)).collect();
        lineup.shuffle(&mut rng);
        let bystander = rng.random_bool(cfg.bystander_rate);

        // side-by-side row of similar-sized faces
        let scale = rng.random_range(70.0..130.0);
        let gaps: Vec<f64> = (1..lineup.len())
            .map(|_| scale * rng.random_range(1.4..2.2))
            .collect();
        let row_width: f64 = gaps.iter().sum();
        let x_start = rng.random_range(scale..(IMAGE_WIDTH - scale - row_width).max(scale + 1.0));
        let y_row = rng.random_range(2.0 * scale..IMAGE_HEIGHT - 2.0 * scale);
        let mut placed = Vec::with_capacity(lineup.len() + 1);
        let mut x = x_start;
        for (k, subject) in lineup.iter().enumerate() {
            if k > 0 {
                x += gaps[k - 1];
            }
            let s = scale * rng.random_range(0.9..1.1);
            let y = y_row + scale * rng.random_range(-0.3..0.3);
            placed.push(face_box(*subject, Point::new(x, y), s, &template));
        }
        if bystander {
            let s = rng.random_range(40.0..160.0);
            let c = Point::new(
                rng.random_range(s..IMAGE_WIDTH - s),
                rng.random_range(s..IMAGE_HEIGHT - s),
            );
            placed.push(face_box(None, c, s, &template));
        }

        for k in 0..placed.len() {
            let origin = placed[k].gaze;
            let target = (placed.len() > 1 && rng.random_bool(0.5)).then(|| {
                let mut other = rng.random_range(0..placed.len() - 1);
                if other >= k {
                    other += 1;
                }
                placed[other].gaze
            });
            let pose = match target {
                Some(t) => {
                    let base = t - origin;
                    let angle = base.y.atan2(base.x) + 0.2 * rng.sample::<f64, _>(StandardNormal);
                    Point::new(angle.cos(), angle.sin())
                }
                None => {
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    Point::new(angle.cos(), angle.sin())
                }
            };
            let mood = GROUP_MOODS[group % N_EXPRESSIONS];
            let mut expression = [0.0; N_EXPRESSIONS];
            for p in expression.iter_mut() {
                *p = 0.3 * rng.random::<f64>();
            }
            expression[mood.index()] += rng.random_range(1.0..3.0);
            let mass: f64 = expression.iter().sum();
            expression.iter_mut().for_each(|p| *p /= mass);

            let (descriptor, age, gender) = match placed[k].subject {
                Some(s) => {
                    let jitter = random_unit(&mut rng, DESCRIPTOR_DIM);
                    let magnitude = cfg.noise * rng.random::<f64>();
                    let mut d: Vec<f64> = templates[s]
                        .iter()
                        .zip(&jitter)
                        .map(|(t, j)| t + magnitude * j)
                        .collect();
                    if magnitude > 0.0 {
                        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                        d.iter_mut().for_each(|x| *x /= norm);
                    }
                    let age = (ages[s] + 3.0 * rng.sample::<f64, _>(StandardNormal)).max(0.0);
                    (d, age, genders[s])
                }
                None => {
                    let d = random_unit(&mut rng, DESCRIPTOR_DIM);
                    let label = if rng.random_bool(0.5) {
                        GenderLabel::Female
                    } else {
                        GenderLabel::Male
                    };
                    (d, rng.random_range(5.0..80.0), label)
                }
            };
            let face_id = faces.len() as u64;
            if let Some(s) = placed[k].subject {
                first_face[s].get_or_insert(face_id);
            }
            let b = placed[k].bbox;
            let landmarks = template
                .iter()
                .map(|&(u, v)| {
                    Point::new(
                        b.x1 + b.width() * (u + 0.01 * rng.random_range(-1.0..1.0)),
                        b.y1 + b.height() * (v + 0.01 * rng.random_range(-1.0..1.0)),
                    )
                })
                .collect();
            faces.push(FaceRecord {
                face_id,
                image_id,
                bbox: b,
                landmarks,
                pose,
                expression,
                age,
                gender: Gender {
                    label: gender,
                    confidence: Some(rng.random_range(0.6..1.0)),
                },
                descriptor,
            });
        }
        members.sort_unstable();
        truth_images.push(ImageTruth {
            image_id,
            group,
            members,
        });
    }

    let enrolled = (0..cfg.n_subjects)
        .map(|s| EnrolledSubject {
            subject_id: s,
            name: format!("S{s:02}"),
            descriptor: templates[s].clone(),
            face_id: first_face[s],
        })
        .collect();
    Ok(SynthFixture {
        faces,
        enrolled,
        truth: GroundTruth {
            config: cfg.clone(),
            groups,
            images: truth_images,
        },
    })
}

fn face_box(subject: Option<usize>, center: Point, scale: f64, template: &[(f64, f64)]) -> Placed {
    // w·h = scale², portrait aspect
    let (w, h) = (scale * 0.9, scale / 0.9);
    let bbox = BBox::new(
        center.x - w / 2.0,
        center.y - h / 2.0,
        center.x + w / 2.0,
        center.y + h / 2.0,
    );
    let eyes = &template[36..48];
    let (u, v) = eyes
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = eyes.len() as f64;
    let gaze = Point::new(bbox.x1 + w * u / n, bbox.y1 + h * v / n);
    Placed {
        subject,
        bbox,
        gaze,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SynthConfig {
            n_images: 20,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.faces, b.faces);
        assert_eq!(a.enrolled, b.enrolled);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn records_pass_validation() {
        let fx = generate(&SynthConfig {
            n_images: 50,
            ..Default::default()
        })
        .unwrap();
        for f in fx.faces {
            let before = f.clone();
            let after = f.validated().unwrap();
            assert_eq!(before, after, "synthetic records are already normalized");
        }
    }

    #[test]
    fn singleton_groups_never_share_images() {
        let fx = generate(&SynthConfig {
            n_subjects: 5,
            n_groups: 5,
            n_images: 40,
            ..Default::default()
        })
        .unwrap();
        assert!(fx.truth.images.iter().all(|im| im.members.len() == 1));
    }

    #[test]
    fn invalid_counts() {
        let bad = |n_subjects, n_groups, n_images| {
            generate(&SynthConfig {
                n_subjects,
                n_groups,
                n_images,
                ..Default::default()
            })
            .is_err()
        };
        assert!(bad(0, 0, 10));
        assert!(bad(4, 5, 10));
        assert!(bad(4, 0, 10));
        assert!(bad(4, 2, 0));
    }
}
