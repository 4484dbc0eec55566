use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use facegraph_core::graphdoc::AnalysisConfig;
use facegraph_core::ingest::{ImageMeta, ParsedFaces};
use facegraph_core::pipeline::{analyze, Analysis};
use facegraph_core::synth::{generate, SynthConfig};
use facegraph_service::api::{EdgeDetail, EdgeImage, SubjectDetail, SubjectImage};
use facegraph_service::{router, ServiceState};
use http_body_util::BodyExt;
use tower::ServiceExt;

fn analysis(metas: &[ImageMeta]) -> Analysis {
    let fx = generate(&SynthConfig {
        n_images: 60,
        ..Default::default()
    })
    .unwrap();
    let parsed = ParsedFaces {
        records: fx.faces,
        rejections: Vec::new(),
    };
    analyze(parsed, metas, fx.enrolled, &AnalysisConfig::default()).unwrap()
}

fn app_from(a: &Analysis, image_root: Option<&Path>, ui: Option<&Path>) -> Router {
    let bytes = a.document.export_json();
    let state = ServiceState::new(
        bytes,
        a.document.clone(),
        a.bundle.clone(),
        a.report.clone(),
        image_root.map(|p| p.canonicalize().unwrap()),
    )
    .unwrap();
    router(state, ui.map(Path::to_path_buf))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let resp = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json<T: serde::de::DeserializeOwned>(app: &Router, uri: &str) -> T {
    let (status, body) = get(app, uri).await;
    assert_eq!(status, StatusCode::OK, "{uri}: {}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

#[tokio::test]
async fn graph_is_served_verbatim() {
    let a = analysis(&[]);
    let app = app_from(&a, None, None);
    let (status, body) = get(&app, "/api/graph").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, a.document.export_json());
    assert_eq!(get(&app, "/api/graph").await.1, body);
}

#[tokio::test]
async fn subject_detail_and_bounds() {
    let a = analysis(&[]);
    let app = app_from(&a, None, None);
    let n = a.document.nodes.len();
    for id in 0..n {
        let d: SubjectDetail = get_json(&app, &format!("/api/subjects/{id}")).await;
        assert_eq!(d.subject_id, id);
        assert_eq!(d.image_count, a.presence.image_count(id));
        assert_eq!(d.stats.image_count, d.image_count);
        assert!(d.neighbors.windows(2).all(|w| w[0].t >= w[1].t));
        for nb in &d.neighbors {
            assert_eq!(nb.t, a.bundle.t[(id, nb.subject_id)]);
        }
    }
    assert_eq!(get(&app, &format!("/api/subjects/{n}")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn subject_images_are_sorted_by_the_server() {
    let a = analysis(&[]);
    let app = app_from(&a, None, None);
    let all: Vec<SubjectImage> = get_json(&app, "/api/subjects/0/images?sort_by=none").await;
    assert_eq!(all.len(), a.presence.image_count(0));
    assert!(all.windows(2).all(|w| w[0].image_id < w[1].image_id));

    let happy: Vec<SubjectImage> = get_json(&app, "/api/subjects/0/images?sort_by=happy").await;
    assert_eq!(happy.len(), all.len());
    assert!(happy.windows(2).all(|w| {
        let (x, y) = (w[0].score.unwrap(), w[1].score.unwrap());
        x > y || (x == y && w[0].image_id < w[1].image_id)
    }));
    let sad: Vec<SubjectImage> = get_json(&app, "/api/subjects/0/images?sort_by=sad&order=asc&limit=3").await;
    assert!(sad.len() <= 3);
    assert!(sad.windows(2).all(|w| w[0].score <= w[1].score));

    for bad in ["sort_by=joy", "sort_by=happy&order=up"] {
        let (status, _) = get(&app, &format!("/api/subjects/0/images?{bad}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
    let n = a.document.nodes.len();
    assert_eq!(get(&app, &format!("/api/subjects/{n}/images")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn edges_are_symmetric_and_validated() {
    let a = analysis(&[]);
    let app = app_from(&a, None, None);
    let n = a.document.nodes.len();
    let (mut linked, mut unlinked) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            let (s1, b1) = get(&app, &format!("/api/edges/{i}/{j}")).await;
            let (s2, b2) = get(&app, &format!("/api/edges/{j}/{i}")).await;
            assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
            assert_eq!(b1, b2);
            let e: EdgeDetail = serde_json::from_slice(&b1).unwrap();
            assert_eq!((e.source, e.target), (i, j));
            assert_eq!(e.c, a.bundle.c[(i, j)]);
            let imgs: Vec<EdgeImage> = get_json(&app, &format!("/api/edges/{j}/{i}/images")).await;
            assert_eq!(imgs.len() as f64, e.c);
            assert_eq!(imgs.iter().map(|x| x.image_id).collect::<Vec<_>>(), e.image_ids);
            if e.c == 0.0 {
                unlinked += 1;
                assert_eq!([e.d, e.z, e.e, e.h, e.t], [0.0; 5]);
                assert!(e.color.is_none() && e.image_ids.is_empty());
            } else {
                linked += 1;
                assert!(e.color.is_some() && e.width > 0.0);
            }
        }
    }
    assert!(linked > 0 && unlinked > 0);
    assert_eq!(get(&app, "/api/edges/1/1").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, &format!("/api/edges/0/{n}")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, &format!("/api/edges/{n}/0/images")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn images_are_contained_in_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("images");
    std::fs::create_dir_all(root.join("sub")).unwrap();
    std::fs::write(root.join("sub/a.png"), b"png-bytes").unwrap();
    std::fs::write(root.join("2.jpg"), b"jpg-bytes").unwrap();
    std::fs::write(dir.path().join("secret.jpg"), b"secret").unwrap();
    let metas = [
        ImageMeta {
            image_id: 0,
            path: Some("sub/a.png".into()),
            width: None,
            height: None,
        },
        ImageMeta {
            image_id: 1,
            path: Some("../secret.jpg".into()),
            width: None,
            height: None,
        },
    ];
    let a = analysis(&metas);

    let unconfigured = app_from(&a, None, None);
    assert_eq!(get(&unconfigured, "/api/images/0").await.0, StatusCode::NOT_FOUND);

    let app = app_from(&a, Some(&root), None);
    let resp = app
        .clone()
        .oneshot(Request::get("/api/images/0").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/png");
    assert_eq!(get(&app, "/api/images/2").await.1, b"jpg-bytes");
    assert_eq!(get(&app, "/api/images/1").await.0, StatusCode::FORBIDDEN);
    assert_eq!(get(&app, "/api/images/3").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/api/images/..%2Fsecret").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cors_and_static_ui() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), b"<html>explorer</html>").unwrap();
    let a = analysis(&[]);
    let app = app_from(&a, None, Some(dir.path()));
    let resp = app
        .clone()
        .oneshot(
            Request::get("/api/graph")
                .header("origin", "http://localhost:5173")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert!(resp.headers().contains_key("access-control-allow-origin"));
    let (status, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>explorer</html>");

    let bare = app_from(&a, None, None);
    assert_eq!(get(&bare, "/").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn mismatched_artifacts_are_refused() {
    let a = analysis(&[]);
    let mut report = a.report.clone();
    report.subjects.pop();
    let err = ServiceState::new(a.document.export_json(), a.document.clone(), a.bundle.clone(), report, None)
        .unwrap_err();
    assert!(err.to_string().contains("inconsistent"));
}
