#![allow(dead_code)]

pub mod oracle;

use facegraph_core::geometry::Point;
use facegraph_core::ingest::{
    BBox, EnrolledSubject, FaceRecord, Gender, GenderLabel, DESCRIPTOR_DIM, N_LANDMARKS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub faces: Vec<FaceRecord>,
    pub subjects: Vec<EnrolledSubject>,
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Random collection with crowded images: several faces of one subject per image,
/// strangers, coincident heads and parallel gazes all occur.
pub fn random_fixture(seed: u64, max_subjects: usize, max_images: usize) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_subjects = rng.random_range(1..=max_subjects);
    let n_images = rng.random_range(1..=max_images);
    let subjects: Vec<EnrolledSubject> = (0..n_subjects)
        .map(|s| {
            let mut d = vec![0.0; DESCRIPTOR_DIM];
            d[s] = 1.0;
            EnrolledSubject {
                subject_id: s,
                name: format!("p{s}"),
                descriptor: d,
                face_id: None,
            }
        })
        .collect();
    let mut faces = Vec::new();
    for t in 0..n_images {
        let image_id = (t * 3) as u64; // sparse ids
        let n_faces = rng.random_range(0..=5);
        for _ in 0..n_faces {
            let who = rng.random_range(0..=n_subjects); // n_subjects means stranger
            let mut d = vec![0.0; DESCRIPTOR_DIM];
            if who < n_subjects {
                // score in (0.3, 1.0]; some faces fall below the 0.4 threshold
                let score: f64 = *[1.0, 0.9, 0.9, 0.6, 0.35]
                    .get(rng.random_range(0..5))
                    .unwrap();
                d[who] = score;
                d[DESCRIPTOR_DIM - 1] = (1.0 - score * score).sqrt();
            } else {
                d[DESCRIPTOR_DIM - 2] = 1.0;
            }
            let scale = rng.random_range(30.0..120.0);
            let (cx, cy) = if rng.random_bool(0.1) {
                (500.0, 500.0)
            } else {
                (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0))
            };
            let w = scale * rng.random_range(0.7..1.3);
            let h = scale * scale / w;
            let bbox = BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0);
            let landmarks = (0..N_LANDMARKS)
                .map(|_| {
                    Point::new(
                        rng.random_range(bbox.x1..bbox.x2),
                        rng.random_range(bbox.y1..bbox.y2),
                    )
                })
                .collect();
            let pose = if rng.random_bool(0.15) {
                Point::new(1.0, 0.0)
            } else {
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                Point::new(a.cos(), a.sin())
            };
            let mut expression = [0.0; 7];
            if rng.random_bool(0.1) {
                expression[6] = 1.0;
            } else {
                for p in expression.iter_mut() {
                    *p = rng.random::<f64>();
                }
                let s: f64 = expression.iter().sum();
                expression.iter_mut().for_each(|p| *p /= s);
            }
            faces.push(FaceRecord {
                face_id: faces.len() as u64 * 2 + 1,
                image_id,
                bbox,
                landmarks,
                pose,
                expression,
                age: rng.random_range(1.0..90.0),
                gender: Gender {
                    label: if rng.random_bool(0.5) {
                        GenderLabel::Female
                    } else {
                        GenderLabel::Male
                    },
                    confidence: None,
                },
                descriptor: unit(d),
            });
        }
    }
    let faces = faces
        .into_iter()
        .map(|f| f.validated().expect("fixture faces are valid"))
        .collect();
    Fixture { faces, subjects }
}
