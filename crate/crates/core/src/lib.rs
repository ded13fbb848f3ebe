//! Numerical laboratory for minimal two-spheres in positively curved
//! three-manifolds: ambient geometry kernels, triangulated surfaces with
//! stability (Jacobi) spectra, axisymmetric mean curvature flow with
//! surgery, and one/two-parameter sweepout width estimates.
//!
//! All geometry kernels are generic over the scalar type through
//! [`scalar::Real`]; the aliases below fix `f64` for the concrete pipeline
//! used by the CLI and the experiment suites.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod ambient;
pub mod error;
pub mod jacobi;
pub mod mcf;
pub mod mesh;
pub mod quad;
pub mod scalar;
pub mod spectra;
pub mod sweepout;

/// Ambient space at `f64` precision.
pub type Space = ambient::AmbientSpace<f64>;
/// Triangulated closed surface at `f64` precision.
pub type Surface = mesh::TriSurface<f64>;
/// Axisymmetric profile curve at `f64` precision.
pub type Profile = mcf::AxiProfile<f64>;
/// Flow-with-surgery state at `f64` precision.
pub type Flow = mcf::FlowState<f64>;
/// Assembled stability operator at `f64` precision.
pub type Operator = jacobi::JacobiOperator<f64>;
