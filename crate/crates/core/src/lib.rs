//! Few-projection tomographic reconstruction as a QUBO problem.
//!
//! A reconstruction is compiled into a quadratic unconstrained binary
//! optimization model made of two parts:
//!
//! * a data-fidelity term `Σ (A x − P)² − Σ P²` whose global minimum on an
//!   ideal sinogram is `−Σ P²`, attained by the true image;
//! * a total-variation term summing squared differences of adjacent pixels.
//!
//! The combined model `a·Q1 + b·Q2` is minimized with simulated annealing
//! ([`solver::anneal`]), with exhaustive search ([`solver::brute_force`]) as the
//! oracle at tiny sizes. Classical baselines (FBP, SART) and error metrics
//! live alongside so the full comparison runs from one crate.
//!
//! ```
//! use tomoqubo::prelude::*;
//!
//! let truth = Image::from_vec(2, 2, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
//! let geom = ProjectionGeometry::with_default_detector(2, 2, isometric_angles(2).unwrap()).unwrap();
//! let sm = build_system_matrix(&geom);
//! let sino = forward_project(&truth, &sm).unwrap();
//!
//! let scheme = EncodingScheme::mac_difference(&MacLevels::new(vec![1.0]).unwrap());
//! let map = VariableMap::new(2, 2, scheme.bits_per_pixel());
//! let q1 = build_q1(&sino, &sm, &scheme, &map).unwrap();
//! let q2 = build_q2(&scheme, &map);
//! let q = combine(&q1, &q2, 1.0, 1.0).unwrap();
//!
//! let best = brute_force(&q).unwrap();
//! let recon = decode(&best.best_bits, &scheme, &map).unwrap();
//! assert_eq!(recon, truth);
//! ```

pub mod baselines;
pub mod encoding;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod phantom;
pub mod qubo;
pub mod solver;

mod clock;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::baselines::{fbp, sart, SartConfig};
    pub use crate::encoding::{
        coefficients, decode, encode_ground_truth, Bits, EncodingKind, EncodingScheme, VariableMap,
    };
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{
        add_noise, build_system_matrix, forward_project, isometric_angles, ProjectionGeometry,
        Sinogram, SystemMatrix,
    };
    pub use crate::metrics::{
        abs_error, target_energy, tv_absolute, tv_squared, ReconstructionReport,
    };
    pub use crate::phantom::{gaussian_blur, quantize, shepp_logan, Image, MacLevels};
    pub use crate::qubo::{build_q1, build_q2, combine, energy, QuboModel};
    pub use crate::solver::{anneal, auto_temperature, brute_force, SolveConfig, SolveResult};
}
