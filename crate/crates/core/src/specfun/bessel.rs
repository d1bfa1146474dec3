//! Bessel functions of the first kind, integer order, by Miller's
//! backward recurrence normalized with `J0 + 2 * sum J_{2k} = 1`.

use crate::error::{Error, Result};

/// Highest order accepted by [`bessel_j`] and [`bessel_j_seq`].
pub const MAX_ORDER: usize = 512;
/// Largest argument accepted.
pub const MAX_ARG: f64 = 64.0;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_order(x)` for `0 <= order <= MAX_ORDER`, `0 <= x <= MAX_ARG`.
pub fn bessel_j(order: usize, x: f64) -> Result<f64> {
    Ok(bessel_j_seq(order, x)?[order])
}

/// `[J_0(x), J_1(x), ..., J_max_order(x)]` from a single downward sweep.
pub fn bessel_j_seq(max_order: usize, x: f64) -> Result<Vec<f64>> {
    check_domain(max_order, x)?;
    let mut out = vec![0.0; max_order + 1];
    fill_seq(x, &mut out);
    Ok(out)
}

fn check_domain(max_order: usize, x: f64) -> Result<()> {
    if max_order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "Bessel order {max_order} exceeds {MAX_ORDER}"
        )));
    }
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::Domain(format!(
            "Bessel argument {x} outside [0, {MAX_ARG}]"
        )));
    }
    Ok(())
}

/// Unchecked core: writes `J_0..J_{out.len()-1}` at `x` into `out`.
pub(crate) fn fill_seq(x: f64, out: &mut [f64]) {
    let max_order = out.len() - 1;
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    let base = max_order.max(x.ceil() as usize);
    // Start far enough above both the order and the argument that the
    // arbitrary seed has decayed below f64 resolution by the time the
    // recurrence reaches the requested orders.
    let mut start = base + 30 + (160.0 * base as f64).sqrt() as usize;
    start += start % 2;

    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{k+1}
    let mut current = 1.0; // J_k, arbitrary seed
    let mut even_sum = 0.0;
    out.fill(0.0);
    for k in (1..=start).rev() {
        if k <= max_order {
            out[k] = current;
        }
        if k % 2 == 0 {
            even_sum += current;
        }
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = current;
    let norm = current + 2.0 * even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// `J_n` for signed `n`, read from a sequence filled by [`fill_seq`].
#[inline]
pub(crate) fn signed(seq: &[f64], n: i64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = seq[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}
