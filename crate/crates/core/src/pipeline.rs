//! End-to-end composition: ingest → match → connect → layout → render.

use std::fmt;

use crate::connectivity::{ConnectivityBundle, ConnectivityError};
use crate::enrollment::{
    build_presence, match_enrolled, EnrollmentError, MatchMatrix, PresenceMatrix, PresenceReport,
};
use crate::graphdoc::{AnalysisConfig, GraphDocument, GraphError};
use crate::ingest::{EnrolledSubject, FaceCollection, ImageMeta, ParsedFaces, Rejection};
use crate::layout::{no_connectivity, solve_layout, Layout, LayoutError, NoConnectivity, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Match,
    Connect,
    Layout,
    Render,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Match => "match",
            Stage::Connect => "connect",
            Stage::Layout => "layout",
            Stage::Render => "render",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("[match] {0}")]
    Match(#[from] EnrollmentError),
    #[error("[connect] {0}")]
    Connect(#[from] ConnectivityError),
    #[error("[layout] {0}")]
    Layout(#[from] LayoutError),
    #[error("[render] {0}")]
    Render(#[from] GraphError),
}

impl PipelineError {
    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Match(_) => Stage::Match,
            PipelineError::Connect(_) => Stage::Connect,
            PipelineError::Layout(_) => Stage::Layout,
            PipelineError::Render(_) => Stage::Render,
        }
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub rejections: Vec<Rejection>,
    pub faces: FaceCollection,
    pub subjects: Vec<EnrolledSubject>,
    pub matches: MatchMatrix,
    pub presence: PresenceMatrix,
    pub report: PresenceReport,
    pub bundle: ConnectivityBundle,
    pub targets: NoConnectivity,
    pub layout: Layout,
    pub document: GraphDocument,
}

/// Target distances and node placement from a connectivity bundle.
pub fn layout_stage(
    bundle: &ConnectivityBundle,
    solver: &SolverConfig,
) -> Result<(NoConnectivity, Layout), LayoutError> {
    let targets = no_connectivity(&bundle.t);
    let layout = solve_layout(&targets.w, solver)?;
    Ok((targets, layout))
}

pub fn analyze(
    parsed: ParsedFaces,
    metas: &[ImageMeta],
    subjects: Vec<EnrolledSubject>,
    config: &AnalysisConfig,
) -> Result<Analysis, PipelineError> {
    let faces = FaceCollection::new(parsed.records, metas);
    let matches = match_enrolled(&faces, &subjects, config.theta)?;
    let presence = build_presence(&matches.matches(), &faces, subjects.len())?;
    let report = PresenceReport::build(&presence, &faces, &subjects);
    let bundle = ConnectivityBundle::compute(&presence, &faces, &config.connectivity)?;
    let (targets, layout) = layout_stage(&bundle, &config.solver)?;
    let document = GraphDocument::build(&bundle, &layout, &report, config.clone())?;
    Ok(Analysis {
        rejections: parsed.rejections,
        faces,
        subjects,
        matches,
        presence,
        report,
        bundle,
        targets,
        layout,
        document,
    })
}

impl Analysis {
    /// Human-readable run summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("images (n):            {}\n", self.presence.n_images()));
        s.push_str(&format!("faces (m):             {}\n", self.faces.len()));
        s.push_str(&format!("enrolled subjects:     {}\n", self.subjects.len()));
        s.push_str(&format!("rejected records:      {}\n", self.rejections.len()));
        s.push_str(&format!("matched faces:         {}\n", self.matches.matches().len()));
        s.push_str(&format!("edges:                 {}\n", self.document.edges.len()));
        s.push_str(&format!("stress:                {:.6}\n", self.layout.stress));
        s.push_str(&format!("initial stress:        {:.6}\n", self.layout.initial_stress));
        s.push_str(&format!("MAE:                   {:.4}\n", self.layout.mae));
        s.push_str(&format!("solver iterations:     {}\n", self.layout.iterations));
        s.push_str(&format!("seed:                  {}\n", self.layout.seed));
        if self.targets.degenerate {
            s.push_str("warning: no connectivity between any pair of subjects\n");
        }
        for r in &self.rejections {
            s.push_str(&format!("rejected line {}: {}\n", r.line, r.reason));
        }
        s
    }
}
