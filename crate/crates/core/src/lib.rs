//! Direct and inverse spectral/resonance problems for finite-range
//! perturbations of periodic Jacobi matrices.
//!
//! The pipeline runs both ways: an [`EventuallyPeriodicOperator`] has a
//! spectral measure whose density denominator `a(z)` is a polynomial, and
//! the zeros of `a` are its eigenvalues and resonances. Conversely, any
//! oddly interlacing [`SingularityConfiguration`] determines the measure,
//! and the Jacobi coefficients are recovered from it.

pub mod canonical;
pub mod ddouble;
pub mod direct;
pub mod inverse;
pub mod lab;
pub mod measure;
pub mod operator;
pub mod periodic;
pub mod poly;
pub mod quadrature;
pub mod reconstruct;
pub mod singularities;

pub use direct::{find_singularities, m_function, recover_a_polynomial, solve_direct, DirectError};
pub use inverse::{build_measure, validate_configuration, InverseError, ValidationReport};
pub use lab::LabError;
pub use measure::{PointMass, SpectralMeasure};
pub use operator::{EventuallyPeriodicOperator, OperatorError};
pub use periodic::{band_set, discriminant, periodic_m, BandSet, PeriodicBlock, PeriodicError, Sheet, SurfacePoint};
pub use poly::{Poly, PolyError};
pub use reconstruct::{detect_tail, hankel_reconstruct, stieltjes_reconstruct, Coefficients, ReconstructError};
pub use singularities::{Resonance, SingularityConfiguration};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Periodic(#[from] PeriodicError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Direct(#[from] DirectError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Lab(#[from] LabError),
}

impl Error {
    /// Whether the input itself is mathematically inadmissible, as opposed
    /// to a numerical failure.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            Error::Inverse(InverseError::InvalidConfiguration(_))
            | Error::Lab(LabError::InterlacingViolation(_))
            | Error::Lab(LabError::Inverse(InverseError::InvalidConfiguration(_))) => true,
            Error::Operator(_) | Error::Periodic(PeriodicError::InvalidBlock(_)) => true,
            Error::Periodic(PeriodicError::InvalidBands(_)) => true,
            Error::Lab(e) => matches!(
                e,
                LabError::NoSuchMass(_)
                    | LabError::ExistingMass(_)
                    | LabError::OnSpectrum(_)
                    | LabError::InvalidWeight(_)
                    | LabError::ZeroShift
                    | LabError::GuardViolated { .. }
                    | LabError::InvalidExperiment(_)
                    | LabError::NotFreeTail
            ),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
