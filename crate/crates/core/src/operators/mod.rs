//! The operator zoo: dyadic pieces of the singular transform along the
//! parabola, the bilinear variants, and the maximal-function machinery.

pub mod bilinear;
pub mod linear;
pub mod maximal;

pub use bilinear::{
    apply_bilinear, apply_mj, apply_paraproduct, apply_tj, apply_tk_piece, apply_tloc,
    bilinear_maximal, pointwise_domination_ratio, tj_brute_force, trilinear_lambda,
    BilinearTable, CutoffZeta, LowMixedPart, TKernel,
};
pub use linear::{apply_hj, apply_hp, apply_symbol, apply_table, hj_symbol_table, KernelPiece};
pub use maximal::{hl_maximal, shifted_maximal, square_function, ShiftPlan, ShiftWindow};
