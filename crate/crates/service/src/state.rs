use std::path::{Path, PathBuf};

use facegraph_core::connectivity::ConnectivityBundle;
use facegraph_core::enrollment::PresenceReport;
use facegraph_core::graphdoc::{GraphDocument, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: GraphError },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("inconsistent artifacts: {0}")]
    Inconsistent(String),
    #[error("image root {}: {source}", path.display())]
    ImageRoot {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Where to find the artifacts the service reads at startup.
#[derive(Debug, Clone)]
pub struct StatePaths {
    pub graph: PathBuf,
    pub connectivity: PathBuf,
    pub presence: PathBuf,
    pub image_root: Option<PathBuf>,
}

impl StatePaths {
    /// `connectivity.json` and `presence.json` next to the graph file.
    pub fn beside(graph: impl Into<PathBuf>) -> Self {
        let graph = graph.into();
        let dir = graph.parent().map(Path::to_path_buf).unwrap_or_default();
        Self {
            connectivity: dir.join("connectivity.json"),
            presence: dir.join("presence.json"),
            graph,
            image_root: None,
        }
    }
}

/// Everything the endpoints answer from. Never modified after construction.
#[derive(Debug)]
pub struct ServiceState {
    graph_bytes: Vec<u8>,
    document: GraphDocument,
    bundle: ConnectivityBundle,
    report: PresenceReport,
    image_root: Option<PathBuf>,
}

fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    serde_json::from_slice(&read(path)?).map_err(|source| LoadError::Json {
        path: path.to_path_buf(),
        source,
    })
}

impl ServiceState {
    pub fn load(paths: &StatePaths) -> Result<Self, LoadError> {
        let graph_bytes = read(&paths.graph)?;
        let document = GraphDocument::parse(&graph_bytes).map_err(|source| LoadError::Graph {
            path: paths.graph.clone(),
            source,
        })?;
        let bundle = parse_json(&paths.connectivity)?;
        let report = parse_json(&paths.presence)?;
        let image_root = paths
            .image_root
            .as_ref()
            .map(|p| {
                p.canonicalize().map_err(|source| LoadError::ImageRoot {
                    path: p.clone(),
                    source,
                })
            })
            .transpose()?;
        Self::new(graph_bytes, document, bundle, report, image_root)
    }

    /// `graph_bytes` is served verbatim; `document` must be its parse.
    /// `image_root` should already be canonical.
    pub fn new(
        graph_bytes: Vec<u8>,
        document: GraphDocument,
        bundle: ConnectivityBundle,
        report: PresenceReport,
        image_root: Option<PathBuf>,
    ) -> Result<Self, LoadError> {
        let n = document.nodes.len();
        if bundle.n_subjects() != n || report.n_subjects() != n {
            return Err(LoadError::Inconsistent(format!(
                "graph has {n} nodes, connectivity {} subjects, presence {} subjects",
                bundle.n_subjects(),
                report.n_subjects()
            )));
        }
        if document
            .nodes
            .iter()
            .enumerate()
            .any(|(k, node)| node.subject_id != k)
        {
            return Err(LoadError::Inconsistent("graph nodes are not indexed by subject id".into()));
        }
        Ok(Self {
            graph_bytes,
            document,
            bundle,
            report,
            image_root,
        })
    }

    pub fn graph_bytes(&self) -> &[u8] {
        &self.graph_bytes
    }

    pub fn document(&self) -> &GraphDocument {
        &self.document
    }

    pub fn bundle(&self) -> &ConnectivityBundle {
        &self.bundle
    }

    pub fn report(&self) -> &PresenceReport {
        &self.report
    }

    pub fn image_root(&self) -> Option<&Path> {
        self.image_root.as_deref()
    }

    pub fn n_subjects(&self) -> usize {
        self.document.nodes.len()
    }
}
