//! Connectivity matrices by a naive triple loop over (subject, subject, image).

use facegraph_core::enrollment::DEFAULT_THETA;
use facegraph_core::ingest::{EnrolledSubject, FaceRecord};
use ndarray::Array2;

use super::Fixture;

/// Best-scoring face of a subject in an image, scanning every face.
fn best_face<'a>(faces: &'a [FaceRecord], subject: &EnrolledSubject, image: u64) -> Option<&'a FaceRecord> {
    let mut best: Option<(&FaceRecord, f64)> = None;
    for f in faces.iter().filter(|f| f.image_id == image) {
        let mut score = 0.0;
        for k in 0..f.descriptor.len() {
            score += f.descriptor[k] * subject.descriptor[k];
        }
        if score <= DEFAULT_THETA {
            continue;
        }
        best = match best {
            Some((b, s)) if s > score || (s == score && b.face_id < f.face_id) => Some((b, s)),
            _ => Some((f, score)),
        };
    }
    best.map(|(f, _)| f)
}

fn scale(f: &FaceRecord) -> f64 {
    ((f.bbox.x2 - f.bbox.x1) * (f.bbox.y2 - f.bbox.y1)).sqrt()
}

fn eyes(f: &FaceRecord) -> (f64, f64) {
    let (mut x, mut y) = (0.0, 0.0);
    for p in &f.landmarks[36..48] {
        x += p.x;
        y += p.y;
    }
    (x * (1.0 / 12.0), y * (1.0 / 12.0))
}

fn closeness(a: &FaceRecord, b: &FaceRecord) -> f64 {
    let (sa, sb) = (scale(a), scale(b));
    if (sa / sb).min(sb / sa) < 0.7 {
        return 0.0;
    }
    let ca = ((a.bbox.x1 + a.bbox.x2) / 2.0, (a.bbox.y1 + a.bbox.y2) / 2.0);
    let cb = ((b.bbox.x1 + b.bbox.x2) / 2.0, (b.bbox.y1 + b.bbox.y2) / 2.0);
    let d = (ca.0 - cb.0).hypot(ca.1 - cb.1);
    let rel = d / ((sa + sb) / 2.0);
    if rel < 4.0 {
        (4.0 - rel) / 4.0
    } else {
        0.0
    }
}

fn connection(a: &FaceRecord, b: &FaceRecord) -> f64 {
    // o_a + s·v_a = o_b + u·v_b, solved by Cramer's rule
    let (oa, ob) = (eyes(a), eyes(b));
    let (va, vb) = (a.pose, b.pose);
    let det = va.x * vb.y - va.y * vb.x;
    if det.abs() <= 1e-9 {
        return 0.0;
    }
    let (rx, ry) = (ob.0 - oa.0, ob.1 - oa.1);
    let s = (rx * vb.y - ry * vb.x) / det;
    let u = (rx * va.y - ry * va.x) / det;
    if s < 0.0 || u < 0.0 {
        return 0.0;
    }
    let rel = s.min(u) / ((scale(a) + scale(b)) / 2.0);
    if rel < 4.0 {
        (4.0 - rel) / 4.0
    } else {
        0.0
    }
}

fn empathy(a: &FaceRecord, b: &FaceRecord) -> f64 {
    let na = a.expression[..6].iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.expression[..6].iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-9 || nb < 1e-9 {
        return 0.0;
    }
    let mut dot = 0.0;
    for k in 0..6 {
        dot += (a.expression[k] / na) * (b.expression[k] / nb);
    }
    dot.clamp(0.0, 1.0)
}

fn happiness(a: &FaceRecord, b: &FaceRecord) -> f64 {
    (a.expression[3] + b.expression[3]) / 2.0
}

/// [C, D, Z, E, H] by brute force.
pub fn oracle(fx: &Fixture) -> [Array2<f64>; 5] {
    let n = fx.subjects.len();
    let mut images: Vec<u64> = fx.faces.iter().map(|f| f.image_id).collect();
    images.sort_unstable();
    images.dedup();
    let mut out: [Array2<f64>; 5] = std::array::from_fn(|_| Array2::zeros((n, n)));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            for &t in &images {
                let (Some(a), Some(b)) = (
                    best_face(&fx.faces, &fx.subjects[lo], t),
                    best_face(&fx.faces, &fx.subjects[hi], t),
                ) else {
                    continue;
                };
                out[0][(i, j)] += 1.0;
                out[1][(i, j)] += closeness(a, b);
                out[2][(i, j)] += connection(a, b);
                out[3][(i, j)] += empathy(a, b);
                out[4][(i, j)] += happiness(a, b);
            }
        }
    }
    out
}
