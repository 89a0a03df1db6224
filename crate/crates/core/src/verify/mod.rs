//! Determinant census, convergence tables and constant fitting.

mod census;
mod fit;
mod table;

pub use census::{census_at, volume_census, CensusReport, MeasureCheck};
pub use fit::{fit_error_constant, FitPoint, FitResult, Slope};
pub use table::{convergence_table_1d, ConvergenceTable, Family1D, TableRow, EXACT_TOL};
