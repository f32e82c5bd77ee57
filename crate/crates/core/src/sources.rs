//! Fused pointwise kernel for the coupled quadratic source terms
//!
//! ```text
//! S_u = N1(v, ∂_d Φ_v) + N2(u, ∂_d Φ_v)
//! S_v = N1(v, ∂_d Φ_u) + N2(u, ∂_d Φ_u)
//! ```
//!
//! where the caller supplies the gradients of the first slots (`gu`, `gv`)
//! and of the differentiated second slots (`pu`, `pv`).

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::nullforms::{eval_n, NullFormSpec};
use rayon::prelude::*;

/// `out_u += c · S_u`, `out_v += c · S_v`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn coupled_sources_acc(
    spec: &NullFormSpec,
    gu: [&Field; 3],
    gv: [&Field; 3],
    pu: [&Field; 3],
    pv: [&Field; 3],
    c: f64,
    out_u: &mut Field,
    out_v: &mut Field,
) -> Result<()> {
    fn s<'a>(fs: [&'a Field; 3]) -> [&'a [f64]; 3] {
        [fs[0].as_slice(), fs[1].as_slice(), fs[2].as_slice()]
    }
    let n = out_u.n();
    for f in gu.iter().chain(&gv).chain(&pu).chain(&pv) {
        if f.n() != n {
            return Err(Error::ShapeMismatch { expected: n, got: f.n() });
        }
    }
    let (gu, gv, pu, pv) = (s(gu), s(gv), s(pu), s(pv));
    let (n1, n2) = (spec.n1_coeffs, spec.n2_coeffs);
    let at = |a: &[&[f64]; 3], k: usize| [a[0][k], a[1][k], a[2][k]];
    out_u
        .as_mut_slice()
        .par_chunks_mut(n)
        .zip(out_v.as_mut_slice().par_chunks_mut(n))
        .enumerate()
        .for_each(|(j, (ru, rv))| {
            for i in 0..n {
                let k = j * n + i;
                let (a_u, a_v) = (at(&gu, k), at(&gv, k));
                let (b_u, b_v) = (at(&pu, k), at(&pv, k));
                ru[i] += c * (eval_n(&n1, &a_v, &b_v) + eval_n(&n2, &a_u, &b_v));
                rv[i] += c * (eval_n(&n1, &a_v, &b_u) + eval_n(&n2, &a_u, &b_u));
            }
        });
    Ok(())
}
