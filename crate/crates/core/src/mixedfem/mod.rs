//! Mixed finite element assemblers on a structured triangulation of the unit square.
//!
//! Darcy flow uses lowest-order Raviart–Thomas velocities with piecewise
//! constant pressures. Stokes flow uses continuous quadratic velocities with
//! piecewise constant, mean-zero pressures.

mod darcy;
mod mesh;
mod stokes;
mod sweep;

pub use darcy::{assemble_darcy, rt0_interpolate};
pub use mesh::{build_mesh, TriMesh};
pub use stokes::{assemble_stokes, p2_element_divergence, p2_lattice_size};
pub use sweep::{
    darcy_kappa_sweep, inf_sup_constant, mass_scaling_ratio, stokes_kappa_sweep, Check, SweepRow,
    SweepTable, DARCY_SLOPE_BAND, LOWER_BOUND_FACTOR, MASS_SCALING_RATIO, STOKES_KAPPA_GROWTH,
    UPPER_BOUND_FACTOR,
};

use crate::dense::DenseMatrix;
use crate::saddle::SaddleSystem;

/// Allowed deviation of `B` from `-M_W Div`.
pub const DIVERGENCE_TOL: f64 = 1e-12;

/// Spatial dimension.
pub const DIM: i32 = 2;

#[derive(Clone, Debug)]
pub struct MixedDiscretization {
    pub sys: SaddleSystem,
    pub m_v: DenseMatrix,
    pub m_w: DenseMatrix,
    /// Discrete divergence: maps velocity dofs to elementwise mean divergence
    /// in the pressure basis.
    pub div: DenseMatrix,
    pub h: f64,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
}

impl MixedDiscretization {
    /// Largest entry of `B + M_W Div`.
    pub fn divergence_defect(&self) -> f64 {
        self.sys.b().add(&self.m_w.matmul(&self.div)).max_abs()
    }

    /// Diagonal entries of `M_V` and `M_W` divided by `h^2`, as (min, max).
    pub fn mass_rayleigh_range(&self) -> (f64, f64) {
        let h2 = self.h * self.h;
        self.m_v
            .diag()
            .into_iter()
            .chain(self.m_w.diag())
            .map(|d| d / h2)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }
}
