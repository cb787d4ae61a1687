pub mod autodiff;
pub mod baseline;
pub mod chem;
pub mod data;
pub mod gnn;
pub mod hypergraph;
pub mod interpret;
pub mod ranker;
pub mod train;
