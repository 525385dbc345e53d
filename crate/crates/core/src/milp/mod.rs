//! Mixed-integer linear model of the association problem.

pub mod catalog;
pub mod lift;
pub mod lp_format;
pub mod model;

pub use catalog::{Var, VarCatalog, VarKind};
pub use lift::{extract_association, lift_association};
pub use lp_format::{to_lp_string, write_lp};
pub use model::{
    binary_product_rows, bounded_product_rows, build_milp, choose_big_m, MilpModel, ModelStats, Row, RowFamily,
};
