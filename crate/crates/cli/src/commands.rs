use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use facegraph_core::connectivity::ConnectivityBundle;
use facegraph_core::enrollment::{build_presence, match_enrolled, MatchesDump, PresenceReport};
use facegraph_core::graphdoc::{export_svg, AnalysisConfig, GraphDocument, StyleConfig, SvgOptions};
use facegraph_core::ingest::{
    parse_enrolled, parse_face_records, parse_image_metadata, write_jsonl, EnrolledSubject,
    FaceCollection, ImageMeta, ParsedFaces,
};
use facegraph_core::layout::Layout;
use facegraph_core::pipeline::{analyze, layout_stage};
use facegraph_core::synth::{generate, SynthConfig};
use facegraph_service::{router, ServiceState, StatePaths};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{Failure, ServeArgs, SynthArgs};

fn open(path: &Path, what: &str) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::input(format!("[ingest] cannot read {what} file {}: {e}", path.display())))
}

fn read_faces(run: &RunConfig) -> Result<ParsedFaces, Failure> {
    let path = RunConfig::require(&run.faces, "faces")?;
    let parsed = parse_face_records(open(path, "faces")?)
        .map_err(|e| Failure::input(format!("[ingest] {}: {e}", path.display())))?;
    for r in &parsed.rejections {
        log::warn!("{}:{}: {}", path.display(), r.line, r.reason);
    }
    Ok(parsed)
}

fn read_images(run: &RunConfig) -> Result<Vec<ImageMeta>, Failure> {
    match &run.images {
        None => Ok(Vec::new()),
        Some(path) => parse_image_metadata(open(path, "images")?)
            .map_err(|e| Failure::input(format!("[ingest] {}: {e}", path.display()))),
    }
}

fn read_enrolled(run: &RunConfig) -> Result<Vec<EnrolledSubject>, Failure> {
    let path = RunConfig::require(&run.enrolled, "enrolled")?;
    parse_enrolled(open(path, "enrolled")?)
        .map_err(|e| Failure::input(format!("[ingest] {}: {e}", path.display())))
}

fn read_dump<T: DeserializeOwned>(field: &Option<PathBuf>, flag: &str) -> Result<T, Failure> {
    let path = RunConfig::require(field, flag)?;
    serde_json::from_reader(open(path, flag)?)
        .map_err(|e| Failure::input(format!("[ingest] {}: {e}", path.display())))
}

/// Intermediate dumps keep full float precision so stages can be chained exactly.
fn dump_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("dump types serialize");
    bytes.push(b'\n');
    bytes
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(run: &RunConfig) -> Result<Self, Failure> {
        let dir = run.out_dir();
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::input(format!("[export] cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| Failure::input(format!("[export] cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn list(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

fn render(doc: &GraphDocument, out: &mut Output) -> Result<(), Failure> {
    out.write("graph.json", &doc.export_json())?;
    out.write("graph.svg", export_svg(doc, &SvgOptions::default()).as_bytes())
}

pub fn cmd_analyze(run: RunConfig) -> Result<(), Failure> {
    let cfg = run.analysis_config()?;
    let parsed = read_faces(&run)?;
    let metas = read_images(&run)?;
    let subjects = read_enrolled(&run)?;
    let a = analyze(parsed, &metas, subjects, &cfg).map_err(|e| Failure::input(e.to_string()))?;
    let mut out = Output::new(&run)?;
    out.write("matches.json", &dump_bytes(&a.matches.to_dump()))?;
    out.write("presence.json", &dump_bytes(&a.report))?;
    out.write("connectivity.json", &dump_bytes(&a.bundle))?;
    out.write("layout.json", &dump_bytes(&a.layout))?;
    render(&a.document, &mut out)?;
    let summary = a.summary();
    out.write("report.txt", summary.as_bytes())?;
    print!("{summary}");
    out.list();
    Ok(())
}

pub fn cmd_match(run: RunConfig) -> Result<(), Failure> {
    let parsed = read_faces(&run)?;
    let metas = read_images(&run)?;
    let subjects = read_enrolled(&run)?;
    let faces = FaceCollection::new(parsed.records, &metas);
    let stage = |e: &dyn std::fmt::Display| Failure::input(format!("[match] {e}"));
    let matches = match_enrolled(&faces, &subjects, run.theta()).map_err(|e| stage(&e))?;
    let presence = build_presence(&matches.matches(), &faces, subjects.len()).map_err(|e| stage(&e))?;
    let report = PresenceReport::build(&presence, &faces, &subjects);
    let mut out = Output::new(&run)?;
    out.write("matches.json", &dump_bytes(&matches.to_dump()))?;
    out.write("presence.json", &dump_bytes(&report))?;
    println!(
        "{} faces ({} rejected), {} subjects, {} matches",
        faces.len(),
        parsed.rejections.len(),
        subjects.len(),
        matches.matches().len()
    );
    out.list();
    Ok(())
}

pub fn cmd_connect(run: RunConfig) -> Result<(), Failure> {
    let cfg = run.connectivity_config()?;
    let parsed = read_faces(&run)?;
    let metas = read_images(&run)?;
    let dump: MatchesDump = read_dump(&run.matches, "matches")?;
    let faces = FaceCollection::new(parsed.records, &metas);
    if dump.n_faces != faces.len() {
        log::warn!("matches cover {} faces, the faces file has {}", dump.n_faces, faces.len());
    }
    let stage = |e: &dyn std::fmt::Display| Failure::input(format!("[connect] {e}"));
    let presence = build_presence(&dump.matches, &faces, dump.n_subjects).map_err(|e| stage(&e))?;
    let bundle = ConnectivityBundle::compute(&presence, &faces, &cfg).map_err(|e| stage(&e))?;
    let mut out = Output::new(&run)?;
    out.write("connectivity.json", &dump_bytes(&bundle))?;
    out.list();
    Ok(())
}

pub fn cmd_layout(run: RunConfig) -> Result<(), Failure> {
    let bundle: ConnectivityBundle = read_dump(&run.connectivity, "connectivity")?;
    let (targets, layout) = layout_stage(&bundle, &run.solver_config())
        .map_err(|e| Failure::input(format!("[layout] {e}")))?;
    if targets.degenerate {
        log::warn!("no connectivity between any pair of subjects");
    }
    let mut out = Output::new(&run)?;
    out.write("layout.json", &dump_bytes(&layout))?;
    println!("stress {:.6}  MAE {:.4}  iterations {}", layout.stress, layout.mae, layout.iterations);
    out.list();
    Ok(())
}

pub fn cmd_render(run: RunConfig) -> Result<(), Failure> {
    let bundle: ConnectivityBundle = read_dump(&run.connectivity, "connectivity")?;
    let layout: Layout = read_dump(&run.layout, "layout")?;
    let report: PresenceReport = read_dump(&run.presence, "presence")?;
    let theta = match &run.matches {
        Some(_) => read_dump::<MatchesDump>(&run.matches, "matches")?.theta,
        None => run.theta(),
    };
    let cfg = AnalysisConfig {
        theta,
        connectivity: bundle.config.clone(),
        solver: layout.config.clone(),
        style: StyleConfig::default(),
    };
    let doc = GraphDocument::build(&bundle, &layout, &report, cfg)
        .map_err(|e| Failure::input(format!("[render] {e}")))?;
    let mut out = Output::new(&run)?;
    render(&doc, &mut out)?;
    out.list();
    Ok(())
}

pub fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n_subjects: args.n_subjects.unwrap_or(d.n_subjects),
        n_images: args.n_images.unwrap_or(d.n_images),
        n_groups: args.n_groups.unwrap_or(d.n_groups),
        seed: args.seed.unwrap_or(d.seed),
        noise: args.noise.unwrap_or(d.noise),
        attendance: args.attendance.unwrap_or(d.attendance),
        bystander_rate: args.bystander_rate.unwrap_or(d.bystander_rate),
    };
    let fx = generate(&cfg).map_err(|e| Failure::input(format!("[synth] {e}")))?;
    let run = RunConfig {
        out: args.out,
        ..Default::default()
    };
    let mut out = Output::new(&run)?;
    let mut faces = Vec::new();
    write_jsonl(&mut faces, &fx.faces).expect("writing to memory");
    let mut enrolled = Vec::new();
    write_jsonl(&mut enrolled, &fx.enrolled).expect("writing to memory");
    out.write("faces.jsonl", &faces)?;
    out.write("enrolled.jsonl", &enrolled)?;
    out.write("ground_truth.json", &dump_bytes(&fx.truth))?;
    println!(
        "{} faces in {} images, {} subjects in {} groups",
        fx.faces.len(),
        cfg.n_images,
        cfg.n_subjects,
        cfg.n_groups
    );
    out.list();
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

pub fn cmd_serve(args: ServeArgs) -> Result<(), Failure> {
    let mut paths = StatePaths::beside(&args.graph);
    if let Some(p) = args.connectivity {
        paths.connectivity = p;
    }
    if let Some(p) = args.presence {
        paths.presence = p;
    }
    paths.image_root = args.image_root;
    let state = ServiceState::load(&paths).map_err(|e| Failure::input(format!("[serve] {e}")))?;
    let app = router(state, args.ui_dir);
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Failure::input(format!("[serve] cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(args.host, args.port);
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                Failure::busy(format!("[serve] port {} is busy: {e}", args.port))
            } else {
                Failure::input(format!("[serve] cannot bind {addr}: {e}"))
            }
        })?;
        let bound = listener.local_addr().unwrap_or(addr);
        println!("listening on http://{bound}");
        let _ = std::io::stdout().flush();
        facegraph_service::serve(listener, app, shutdown_signal())
            .await
            .map_err(|e| Failure::input(format!("[serve] {e}")))
    })
}
