use crate::error::{DmaError, Result};
use crate::linalg::{re_inner, solve_hpd};
use crate::quantizer::BussgangStats;
use crate::scalar::Real;

use super::DigitalCombiner;

const MAX_CONDITION: f64 = 1e12;
const RIDGE: f64 = 1e-10;

/// LMMSE combiner `W = C_z⁻¹ C_zs`.
pub fn digital_combiner<T: Real>(stats: &BussgangStats<T>) -> Result<DigitalCombiner<T>> {
    let w = solve_hpd(&stats.c_z, &stats.c_zs, T::lit(MAX_CONDITION), T::lit(RIDGE))?;
    Ok(DigitalCombiner { w })
}

/// `tr(C_s) − 2 Re tr(W† C_zs) + tr(W† C_z W)`, clamped at zero.
pub fn analytic_mse<T: Real>(stats: &BussgangStats<T>, w: &DigitalCombiner<T>) -> T {
    let cross = re_inner(&w.w, &stats.c_zs);
    let quad = re_inner(&w.w, &(&stats.c_z * &w.w));
    let mse = stats.signal_trace() - cross - cross + quad;
    mse.max(T::zero())
}

/// MSE at the optimal combiner, `tr(C_s) − tr(C_zs† C_z⁻¹ C_zs)`, evaluated
/// through an explicit inverse.
pub fn mse_at_optimum<T: Real>(stats: &BussgangStats<T>) -> Result<T> {
    let inv = stats
        .c_z
        .clone()
        .try_inverse()
        .ok_or_else(|| DmaError::numerical("C_z is singular"))?;
    let gain = re_inner(&stats.c_zs, &(inv * &stats.c_zs));
    Ok((stats.signal_trace() - gain).max(T::zero()))
}
