//! Curvature-based fragility indicators for correlation networks.
//!
//! Price panels are turned into rolling correlation networks (minimum
//! spanning tree plus strongly correlated edges), and each network is
//! summarised by its average Ollivier-Ricci curvature.

pub mod bounds;
pub mod curvature;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod indicator;
pub mod ingestion;
pub mod subsample;
pub mod synthetic;
pub mod transport;

pub use curvature::{average_curvature, edge_curvature, AveragingMode, CurvatureReport};
pub use error::{Error, ErrorClass, Result};
pub use graph::{
    augment_high_value_edges, build_complete_graph, hop_distances, induced_subgraph, minimum_spanning_tree,
    HopDistanceMatrix, MarketGraph,
};
pub use indicator::{indicator_series, DistanceTransform, IndicatorSeries, InputMode, WindowConfig};
pub use ingestion::{load_price_csv, screen_entities, PriceMatrix, ScreeningReport};
pub use transport::{node_measure, wasserstein1, wasserstein1_oracle, NodeMeasure, TransportPlan, Weighting};
pub use subsample::{extremal_subgraph, subsample_indicator_series, Objective, SubsampleConfig};
