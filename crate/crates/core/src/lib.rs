//! Two transfer-point trip covering on a plane-embedded high-speed network.
//!
//! Given facilities in the plane, weighted origin/destination pairs with
//! acceptance levels and a speed factor for travel on the network, the solver
//! places an access point and an exit point on the network so that the total
//! weight of pairs whose mixed plane/network trip is short enough is maximal.
//!
//! The network is cut into linear arc segments, every segment pair becomes a
//! restricted problem over a parameter rectangle, and each restricted problem
//! is solved exactly on a finite dominating set assembled from level curves of
//! the travel-length functions and their intersections.

pub mod cli;
pub mod error;
pub mod fds_solver;
pub mod generate;
pub mod level_curves;
pub mod mixed_distance;
pub mod model;
pub mod preprocess;

pub use error::{Error, Result};
pub use fds_solver::{solve_global, GlobalSolution, SolverParams};
pub use model::{parse_instance, validate_instance, ProblemInstance, Solution};
pub use preprocess::{preprocess, Preprocessed};
