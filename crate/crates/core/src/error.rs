use thiserror::Error;

/// Errors raised while loading cells or assembling the discrete sequences.
#[derive(Debug, Error)]
pub enum DdrError {
    #[error("malformed mesh: {0}")]
    Mesh(String),
    #[error("cell {cell} does not exist (mesh has {count} cells)")]
    NoSuchCell { cell: usize, count: usize },
    #[error("face {face} is not planar: vertex deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NonPlanarFace { face: usize, deviation: f64, tolerance: f64 },
    #[error("face {face} has a degenerate normal")]
    DegenerateNormal { face: usize },
    #[error("face {face} has a self-intersecting boundary loop")]
    SelfIntersectingFace { face: usize },
    #[error("edge {edge} has zero length")]
    DegenerateEdge { edge: usize },
    #[error("cell {cell}: boundary is not closed, edge {edge} belongs to {count} faces")]
    OpenBoundary { cell: usize, edge: usize, count: usize },
    #[error("cell {cell}: face loops cannot be oriented consistently")]
    NonOrientable { cell: usize },
    #[error("cell {cell}: V - E + F = {chi}, expected 2 (boundary must be a topological sphere)")]
    EulerCharacteristic { cell: usize, chi: i64 },
    #[error("cell {cell}: boundary graph is disconnected")]
    Disconnected { cell: usize },
    #[error(
        "cell {cell}: sub-tetrahedron with volume {volume:.3e} is inverted with respect to the apex; \
         supply an interior point for this cell in `interior_points`"
    )]
    InvertedSubTetrahedron { cell: usize, volume: f64 },
    #[error("Gram matrix of {what} is numerically singular (condition estimate {condition:.3e})")]
    SingularGram { what: String, condition: f64 },
    #[error("{space}: numerical dimension {rank} differs from the expected {expected}")]
    RankMismatch { space: String, rank: usize, expected: usize },
    #[error("defining system of {what} is singular (condition estimate {condition:.3e})")]
    SingularSystem { what: String, condition: f64 },
    #[error("incompatible data for {what}: compatibility defect {defect:.3e}")]
    Incompatible { what: String, defect: f64 },
    #[error("malformed matrix file: {0}")]
    MatrixFile(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DdrError>;
