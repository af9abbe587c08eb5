//! Quadrature helpers shared by the numerical modules.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

pub(crate) const GL_ORDER: usize = 16;

/// 16-point Gauss-Legendre rule on [-1, 1].
pub(crate) fn gl16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(GL_ORDER).unwrap());
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Composite Gauss-Legendre nodes and weights on [a, b] with panels no wider than `width`.
pub(crate) fn composite_gl(a: f64, b: f64, width: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = (((b - a) / width).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let rule = gl16();
    let mut nodes = Vec::with_capacity(panels * GL_ORDER);
    let mut weights = Vec::with_capacity(panels * GL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in rule {
            nodes.push(lo + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

// Kronrod 15-point extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integration of a real function on [a, b].
pub(crate) fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gk15(&mut f, lo, hi);
        evaluations += 15;
        let share = tol * (hi - lo) / (b - a);
        if err <= share.max(f64::EPSILON * value.abs()) || depth >= 40 {
            if depth >= 40 && err > tol {
                return Err(Error::Accuracy(format!(
                    "adaptive quadrature stalled on [{lo}, {hi}] with error {err:e}"
                )));
            }
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
        if evaluations > 2_000_000 {
            return Err(Error::Accuracy("adaptive quadrature budget exhausted".into()));
        }
    }
    Ok(total)
}

/// Least-squares solution of the overdetermined system `cols * x = y`.
pub(crate) fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let p = cols.len();
    let design = nalgebra::DMatrix::from_fn(n, p, |i, j| cols[j][i]);
    let rhs = nalgebra::DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let x = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let resid = &design * &x - rhs;
    let rms = (resid.norm_squared() / n as f64).sqrt();
    Ok((x.iter().copied().collect(), rms))
}
