//! The styled graph document shared by SVG export, the HTTP service and the explorer.
//!
//! Nodes carry a radius growing with the square root of the subject's image count
//! and a border colored by the subject's predominant expression. Edges exist only
//! for pairs seen together; width grows linearly with the co-occurrence count and
//! color follows the most common expression of the pair in their shared images.

mod json;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::connectivity::{ConnectivityBundle, ConnectivityConfig};
use crate::enrollment::{Appearance, PresenceReport, DEFAULT_THETA};
use crate::expression::{Color, Expression, N_EXPRESSIONS};
use crate::geometry::Point;
use crate::ingest::GenderLabel;
use crate::layout::{Layout, SolverConfig};

pub use json::to_stable_json;
pub use svg::{export_svg, SvgOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown subject {0}")]
    UnknownSubject(usize),
    #[error("subjects {0} and {1} never appear together")]
    NoEdge(usize, usize),
    #[error("layout has {layout} nodes but {subjects} subjects are enrolled")]
    NodeCount { layout: usize, subjects: usize },
    #[error("invalid graph document: {0}")]
    Parse(String),
}

/// Aggregated expressions over a set of faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionStats {
    /// Summed expression vectors, normalized to sum 1; uniform when `empty`.
    pub histogram: [f64; N_EXPRESSIONS],
    pub predominant: Expression,
    /// Fraction of faces whose most likely expression is happy.
    pub happiness_share: f64,
    pub empty: bool,
}

impl ExpressionStats {
    pub fn from_vectors<'a, I>(vectors: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64; N_EXPRESSIONS]>,
    {
        let mut sum = [0.0; N_EXPRESSIONS];
        let mut count = 0usize;
        let mut happy = 0usize;
        for v in vectors {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            count += 1;
            if Expression::argmax(v) == Expression::Happy {
                happy += 1;
            }
        }
        let total: f64 = sum.iter().sum();
        if count == 0 || total <= 0.0 {
            return Self {
                histogram: [1.0 / N_EXPRESSIONS as f64; N_EXPRESSIONS],
                predominant: Expression::ALL[0],
                happiness_share: 0.0,
                empty: true,
            };
        }
        let histogram = sum.map(|s| s / total);
        Self {
            predominant: Expression::argmax(&histogram),
            histogram,
            happiness_share: happy as f64 / count as f64,
            empty: false,
        }
    }
}

/// What the explorer shows when a node is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub expression: ExpressionStats,
    pub gender: Option<GenderLabel>,
    pub mean_age: Option<f64>,
    pub image_count: usize,
}

impl SubjectStats {
    pub fn from_appearances(appearances: &[Appearance]) -> Self {
        let expression = ExpressionStats::from_vectors(appearances.iter().map(|a| &a.expression));
        let mut genders: BTreeMap<GenderLabel, usize> = BTreeMap::new();
        for a in appearances {
            *genders.entry(a.gender.label).or_default() += 1;
        }
        // max_by_key keeps the last maximum; iterate in reverse so ties go to the first label
        let gender = genders
            .iter()
            .rev()
            .max_by_key(|(_, &n)| n)
            .map(|(&g, _)| g);
        let mean_age = (!appearances.is_empty())
            .then(|| appearances.iter().map(|a| a.age).sum::<f64>() / appearances.len() as f64);
        Self {
            expression,
            gender,
            mean_age,
            image_count: appearances.len(),
        }
    }
}

/// Statistics over a subject's best faces in every image where they are present.
pub fn subject_stats(subject: usize, report: &PresenceReport) -> Result<SubjectStats, GraphError> {
    if subject >= report.n_subjects() {
        return Err(GraphError::UnknownSubject(subject));
    }
    Ok(SubjectStats::from_appearances(report.appearances_of(subject)))
}

/// Argmax of the summed expressions of both subjects over their shared images.
pub fn edge_expression(i: usize, j: usize, report: &PresenceReport) -> Result<Expression, GraphError> {
    for s in [i, j] {
        if s >= report.n_subjects() {
            return Err(GraphError::UnknownSubject(s));
        }
    }
    let shared = report.shared(i, j);
    if i == j || shared.is_empty() {
        return Err(GraphError::NoEdge(i, j));
    }
    let mut sum = [0.0; N_EXPRESSIONS];
    for (a, b) in shared {
        for (k, s) in sum.iter_mut().enumerate() {
            *s += a.expression[k] + b.expression[k];
        }
    }
    Ok(Expression::argmax(&sum))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    /// Node radius range in layout units.
    pub r_min: f64,
    pub r_max: f64,
    /// Edge width range in stroke units.
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self {
            r_min: 0.02,
            r_max: 0.08,
            w_min: 0.5,
            w_max: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub subject_id: usize,
    pub name: String,
    pub position: Point,
    pub image_count: usize,
    pub radius: f64,
    pub border_color: Color,
    pub expression_stats: ExpressionStats,
    /// Representative face id, when the enrollment names one.
    pub thumbnail: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityBreakdown {
    pub c: f64,
    pub d: f64,
    pub z: f64,
    pub e: f64,
    pub h: f64,
    pub t: f64,
}

impl ConnectivityBreakdown {
    pub fn at(bundle: &ConnectivityBundle, i: usize, j: usize) -> Self {
        let [c, d, z, e, h, t] = bundle.breakdown(i, j);
        Self { c, d, z, e, h, t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    /// Lower subject id of the pair.
    pub source: usize,
    pub target: usize,
    pub width: f64,
    pub expression: Expression,
    pub color: Color,
    pub co_image_count: usize,
    pub connectivity: ConnectivityBreakdown,
    pub image_ids: Vec<u64>,
}

pub fn style_nodes(
    layout: &Layout,
    report: &PresenceReport,
    style: &StyleConfig,
) -> Result<Vec<GraphNode>, GraphError> {
    if layout.positions.len() != report.n_subjects() {
        return Err(GraphError::NodeCount {
            layout: layout.positions.len(),
            subjects: report.n_subjects(),
        });
    }
    let stats: Vec<SubjectStats> = (0..report.n_subjects())
        .map(|i| subject_stats(i, report))
        .collect::<Result<_, _>>()?;
    let max_count = stats.iter().map(|s| s.image_count).max().unwrap_or(0);
    Ok(report
        .subjects
        .iter()
        .zip(stats)
        .zip(&layout.positions)
        .map(|((subject, stats), &position)| {
            let radius = if max_count == 0 {
                style.r_min
            } else {
                let share = stats.image_count as f64 / max_count as f64;
                style.r_min + (style.r_max - style.r_min) * share.sqrt()
            };
            GraphNode {
                subject_id: subject.subject_id,
                name: subject.name.clone(),
                position,
                image_count: stats.image_count,
                radius,
                border_color: stats.expression.predominant.color(),
                expression_stats: stats.expression,
                thumbnail: subject.face_id,
            }
        })
        .collect())
}

pub fn style_edges(
    bundle: &ConnectivityBundle,
    report: &PresenceReport,
    style: &StyleConfig,
) -> Result<Vec<GraphEdge>, GraphError> {
    let max_c = bundle.c.iter().copied().fold(0.0, f64::max);
    let mut edges = Vec::new();
    for pair in &bundle.pair_images {
        let (i, j) = (pair.i, pair.j);
        let c = bundle.c[(i, j)];
        if c <= 0.0 {
            continue;
        }
        let expression = edge_expression(i, j, report)?;
        edges.push(GraphEdge {
            source: i,
            target: j,
            width: style.w_min + (style.w_max - style.w_min) * c / max_c,
            expression,
            color: expression.color(),
            co_image_count: c as usize,
            connectivity: ConnectivityBreakdown::at(bundle, i, j),
            image_ids: pair.image_ids.clone(),
        });
    }
    Ok(edges)
}

/// Every knob that shaped the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub theta: f64,
    pub connectivity: ConnectivityConfig,
    pub solver: SolverConfig,
    pub style: StyleConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            connectivity: ConnectivityConfig::default(),
            solver: SolverConfig::default(),
            style: StyleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub n_images: usize,
    pub n_faces: usize,
    pub n_subjects: usize,
    pub mae: f64,
    pub stress: f64,
    pub seed: u64,
    pub config: AnalysisConfig,
}

/// Serialized as `graph.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub metadata: GraphMetadata,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl GraphDocument {
    pub fn build(
        bundle: &ConnectivityBundle,
        layout: &Layout,
        report: &PresenceReport,
        config: AnalysisConfig,
    ) -> Result<Self, GraphError> {
        let nodes = style_nodes(layout, report, &config.style)?;
        let edges = style_edges(bundle, report, &config.style)?;
        let doc = Self {
            metadata: GraphMetadata {
                n_images: report.images.len(),
                n_faces: report.n_faces,
                n_subjects: report.n_subjects(),
                mae: layout.mae,
                stress: layout.stress,
                seed: layout.seed,
                config,
            },
            nodes,
            edges,
        };
        // Quantize to the persisted precision so every consumer sees the same numbers.
        Self::parse(&doc.export_json())
    }

    /// Edge between two subjects in either order.
    pub fn edge(&self, i: usize, j: usize) -> Option<&GraphEdge> {
        let (a, b) = (i.min(j), i.max(j));
        self.edges.iter().find(|e| e.source == a && e.target == b)
    }

    pub fn export_json(&self) -> Vec<u8> {
        to_stable_json(self)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, GraphError> {
        serde_json::from_slice(bytes).map_err(|e| GraphError::Parse(e.to_string()))
    }
}
