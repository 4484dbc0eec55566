use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use facegraph_core::expression::{Color, Expression};
use facegraph_core::graphdoc::{edge_expression, subject_stats, ConnectivityBreakdown, SubjectStats};
use facegraph_core::ingest::BBox;
use serde::{Deserialize, Serialize};

use crate::state::ServiceState;

pub type SharedState = Arc<ServiceState>;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Forbidden(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Forbidden(m) => (StatusCode::FORBIDDEN, m),
        };
        (status, Json(ErrorBody { error })).into_response()
    }
}

fn check_subject(state: &ServiceState, id: usize) -> Result<(), ApiError> {
    if id < state.n_subjects() {
        Ok(())
    } else {
        Err(ApiError::NotFound(format!("unknown subject {id}")))
    }
}

pub async fn graph(State(state): State<SharedState>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        state.graph_bytes().to_vec(),
    )
        .into_response()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Neighbor {
    pub subject_id: usize,
    pub name: String,
    pub t: f64,
    pub c: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubjectDetail {
    pub subject_id: usize,
    pub name: String,
    pub image_count: usize,
    pub thumbnail: Option<u64>,
    pub stats: SubjectStats,
    /// Subjects with nonzero T, strongest first.
    pub neighbors: Vec<Neighbor>,
}

pub async fn subject(
    State(state): State<SharedState>,
    Path(id): Path<usize>,
) -> Result<Json<SubjectDetail>, ApiError> {
    check_subject(&state, id)?;
    let stats = subject_stats(id, state.report()).map_err(|e| ApiError::NotFound(e.to_string()))?;
    let node = &state.document().nodes[id];
    let b = state.bundle();
    let mut neighbors: Vec<Neighbor> = (0..state.n_subjects())
        .filter(|&j| j != id && b.t[(id, j)] > 0.0)
        .map(|j| Neighbor {
            subject_id: j,
            name: state.document().nodes[j].name.clone(),
            t: b.t[(id, j)],
            c: b.c[(id, j)],
        })
        .collect();
    neighbors.sort_by(|x, y| y.t.total_cmp(&x.t).then(x.subject_id.cmp(&y.subject_id)));
    Ok(Json(SubjectDetail {
        subject_id: id,
        name: node.name.clone(),
        image_count: stats.image_count,
        thumbnail: node.thumbnail,
        stats,
        neighbors,
    }))
}

#[derive(Debug, Default, Deserialize)]
pub struct ImageQuery {
    pub sort_by: Option<String>,
    pub order: Option<String>,
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubjectImage {
    pub image_id: u64,
    pub face_id: u64,
    /// Probability of the sort expression; absent when unsorted.
    pub score: Option<f64>,
    pub match_score: f64,
    pub bbox: BBox,
}

pub async fn subject_images(
    State(state): State<SharedState>,
    Path(id): Path<usize>,
    Query(q): Query<ImageQuery>,
) -> Result<Json<Vec<SubjectImage>>, ApiError> {
    check_subject(&state, id)?;
    let key = match q.sort_by.as_deref().unwrap_or("none") {
        "none" => None,
        s => Some(
            s.parse::<Expression>()
                .map_err(|_| ApiError::BadRequest(format!("unknown sort key `{s}`")))?,
        ),
    };
    let descending = match q.order.as_deref().unwrap_or("desc") {
        "desc" => true,
        "asc" => false,
        o => return Err(ApiError::BadRequest(format!("order must be asc or desc, got `{o}`"))),
    };
    // appearances are already in image id order
    let mut items: Vec<SubjectImage> = state
        .report()
        .appearances_of(id)
        .iter()
        .map(|a| SubjectImage {
            image_id: a.image_id,
            face_id: a.face_id,
            score: key.map(|k| a.expression[k.index()]),
            match_score: a.score,
            bbox: a.bbox,
        })
        .collect();
    if key.is_some() {
        items.sort_by(|x, y| {
            let by_score = x.score.unwrap().total_cmp(&y.score.unwrap());
            let by_score = if descending { by_score.reverse() } else { by_score };
            by_score.then(x.image_id.cmp(&y.image_id))
        });
    }
    if let Some(limit) = q.limit {
        items.truncate(limit);
    }
    Ok(Json(items))
}

fn canonical_pair(state: &ServiceState, i: usize, j: usize) -> Result<(usize, usize), ApiError> {
    check_subject(state, i)?;
    check_subject(state, j)?;
    if i == j {
        return Err(ApiError::BadRequest("no self-edges".into()));
    }
    Ok((i.min(j), i.max(j)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeDetail {
    pub source: usize,
    pub target: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Absent when the pair never co-occurs.
    pub expression: Option<Expression>,
    pub color: Option<Color>,
    pub width: f64,
    pub image_ids: Vec<u64>,
}

pub async fn edge(
    State(state): State<SharedState>,
    Path((i, j)): Path<(usize, usize)>,
) -> Result<Json<EdgeDetail>, ApiError> {
    let (a, b) = canonical_pair(&state, i, j)?;
    let k = ConnectivityBreakdown::at(state.bundle(), a, b);
    let styled = state.document().edge(a, b);
    let expression = match styled {
        Some(e) => Some(e.expression),
        None => edge_expression(a, b, state.report()).ok(),
    };
    Ok(Json(EdgeDetail {
        source: a,
        target: b,
        c: k.c,
        d: k.d,
        z: k.z,
        e: k.e,
        h: k.h,
        t: k.t,
        color: styled.map(|e| e.color.clone()).or(expression.map(Expression::color)),
        expression,
        width: styled.map_or(0.0, |e| e.width),
        image_ids: state.bundle().shared_images(a, b).to_vec(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeImage {
    pub image_id: u64,
    /// Box of the lower subject id.
    pub bbox_i: BBox,
    pub bbox_j: BBox,
}

pub async fn edge_images(
    State(state): State<SharedState>,
    Path((i, j)): Path<(usize, usize)>,
) -> Result<Json<Vec<EdgeImage>>, ApiError> {
    let (a, b) = canonical_pair(&state, i, j)?;
    Ok(Json(
        state
            .report()
            .shared(a, b)
            .into_iter()
            .map(|(x, y)| EdgeImage {
                image_id: x.image_id,
                bbox_i: x.bbox,
                bbox_j: y.bbox,
            })
            .collect(),
    ))
}

const IMAGE_EXTENSIONS: [&str; 6] = ["jpg", "jpeg", "png", "gif", "webp", "bmp"];

/// Reject absolute paths and `..` that climb above the start.
fn stays_inside(rel: &FsPath) -> bool {
    let mut depth = 0i64;
    for c in rel.components() {
        match c {
            Component::Normal(_) => depth += 1,
            Component::CurDir => {}
            Component::ParentDir => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            Component::RootDir | Component::Prefix(_) => return false,
        }
    }
    true
}

fn resolve_image(root: &FsPath, rel: &FsPath) -> Result<PathBuf, ApiError> {
    if !stays_inside(rel) {
        return Err(ApiError::Forbidden("path escapes the image root".into()));
    }
    let full = root.join(rel);
    let real = full
        .canonicalize()
        .map_err(|_| ApiError::NotFound(format!("no file {}", rel.display())))?;
    // symlinks may still point elsewhere
    if !real.starts_with(root) {
        return Err(ApiError::Forbidden("path escapes the image root".into()));
    }
    if !real.is_file() {
        return Err(ApiError::NotFound(format!("no file {}", rel.display())));
    }
    Ok(real)
}

pub async fn image(
    State(state): State<SharedState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let root = state
        .image_root()
        .ok_or_else(|| ApiError::NotFound("no image directory configured".into()))?;
    let id: u64 = id
        .parse()
        .map_err(|_| ApiError::NotFound(format!("unknown image `{id}`")))?;
    let path = match state.report().image(id).and_then(|r| r.path.as_deref()) {
        Some(p) => resolve_image(root, FsPath::new(p))?,
        None => IMAGE_EXTENSIONS
            .iter()
            .find_map(|ext| resolve_image(root, FsPath::new(&format!("{id}.{ext}"))).ok())
            .ok_or_else(|| ApiError::NotFound(format!("no file for image {id}")))?,
    };
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::NotFound(format!("cannot read image {id}: {e}")))?;
    let mime = mime_guess::from_path(&path).first_or_octet_stream();
    Ok(([(header::CONTENT_TYPE, mime.essence_str().to_string())], bytes).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment_is_lexical_first() {
        assert!(stays_inside(FsPath::new("a/b.jpg")));
        assert!(stays_inside(FsPath::new("a/../b.jpg")));
        assert!(!stays_inside(FsPath::new("../b.jpg")));
        assert!(!stays_inside(FsPath::new("a/../../b.jpg")));
        assert!(!stays_inside(FsPath::new("/etc/passwd")));
    }
}
