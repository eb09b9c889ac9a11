//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! Used as an independent oracle for closed-form matrix-function evaluations, so it
//! works in `f64` only and favours robustness over speed.

use crate::error::{Error, Result};

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
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Subdivision budget before giving up.
pub const MAX_SUBDIVISIONS: usize = 5000;

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn kronrod<F: FnMut(f64) -> Vec<f64>>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c);
    let n = centre.len();
    let mut k: Vec<f64> = centre.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<f64> = centre.iter().map(|v| v * WG[3]).collect();
    for (i, x) in XGK[..7].iter().enumerate() {
        let lo = f(c - h * x);
        let hi = f(c + h * x);
        for j in 0..n {
            let s = lo[j] + hi[j];
            k[j] += WGK[i] * s;
            if i % 2 == 1 {
                g[j] += WG[i / 2] * s;
            }
        }
    }
    let diff: Vec<f64> = k.iter().zip(&g).map(|(x, y)| (x - y) * h).collect();
    Segment {
        a,
        b,
        value: k.iter().map(|v| v * h).collect(),
        error: norm(&diff),
    }
}

/// `∫_a^b f` for a vector-valued `f`, to `‖err‖ ≤ max(abs_tol, rel_tol·‖∫f‖)`.
pub fn integrate_vector<F: FnMut(f64) -> Vec<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidArgument(format!(
            "invalid interval [{a}, {b}]"
        )));
    }
    let mut segments = vec![kronrod(&mut f, a, b)];
    loop {
        let n = segments[0].value.len();
        let mut total = vec![0.0; n];
        let mut err = 0.0;
        for s in &segments {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            err += s.error;
        }
        if !total.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if err <= abs_tol.max(rel_tol * norm(&total)) {
            return Ok(total);
        }
        if segments.len() >= MAX_SUBDIVISIONS {
            return Err(Error::InvalidArgument(format!(
                "quadrature did not converge: error estimate {err:e}"
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod(&mut f, s.a, mid));
        segments.push(kronrod(&mut f, mid, s.b));
    }
}

/// Scalar version of [`integrate_vector`].
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    integrate_vector(|x| vec![f(x)], a, b, rel_tol, abs_tol).map(|v| v[0])
}
