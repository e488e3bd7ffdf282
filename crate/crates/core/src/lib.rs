pub mod arc1d;
pub mod caustic;
pub mod classical;
pub mod eigensolver;
pub mod error;
pub mod geom;
pub mod io;
pub mod model;
pub mod numerics;
pub mod oracle;

pub use error::{Error, Result};
pub use geom::{PhasePoint, Point};
pub use model::HamiltonianModel;
