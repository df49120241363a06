//! Independent reference implementations used as test oracles. Everything
//! here works in `f64` with plain loops and shares no code with the crate.

#![allow(dead_code)]

use pcb_core::{RngStream, Tensor};

pub fn to_f64(t: &Tensor) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}

pub fn random_vec(n: usize, lo: f64, hi: f64, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_f64(lo, hi)).collect()
}

pub fn tensor(dims: &[usize], v: &[f64]) -> Tensor {
    Tensor::from_vec(dims, v.iter().map(|&x| x as f32).collect()).unwrap()
}

/// Valid stride-1 convolution, `x: [c, t, h, w]`, `w: [o, c, kt, kh, kw]`.
pub fn conv3d_naive(x: &[f64], xd: [usize; 4], w: &[f64], wd: [usize; 5], b: &[f64]) -> (Vec<f64>, [usize; 4]) {
    let [c, t, h, wi] = xd;
    let [o, wc, kt, kh, kw] = wd;
    assert_eq!(c, wc);
    let od = [o, t - kt + 1, h - kh + 1, wi - kw + 1];
    let mut y = vec![0.0; od.iter().product()];
    for oc in 0..o {
        for ot in 0..od[1] {
            for oh in 0..od[2] {
                for ow in 0..od[3] {
                    let mut acc = b[oc];
                    for ic in 0..c {
                        for dt in 0..kt {
                            for dh in 0..kh {
                                for dw in 0..kw {
                                    let xi = ((ic * t + ot + dt) * h + oh + dh) * wi + ow + dw;
                                    let wi_ = (((oc * c + ic) * kt + dt) * kh + dh) * kw + dw;
                                    acc += x[xi] * w[wi_];
                                }
                            }
                        }
                    }
                    y[((oc * od[1] + ot) * od[2] + oh) * od[3] + ow] = acc;
                }
            }
        }
    }
    (y, od)
}

/// Non-overlapping max pooling with floor truncation.
pub fn maxpool_naive(x: &[f64], xd: [usize; 4], win: [usize; 3]) -> (Vec<f64>, [usize; 4]) {
    let [c, t, h, w] = xd;
    let od = [c, t / win[0], h / win[1], w / win[2]];
    let mut y = Vec::with_capacity(od.iter().product());
    for ic in 0..c {
        for ot in 0..od[1] {
            for oh in 0..od[2] {
                for ow in 0..od[3] {
                    let mut m = f64::NEG_INFINITY;
                    for dt in 0..win[0] {
                        for dh in 0..win[1] {
                            for dw in 0..win[2] {
                                let v = x[((ic * t + ot * win[0] + dt) * h + oh * win[1] + dh) * w + ow * win[2] + dw];
                                m = m.max(v);
                            }
                        }
                    }
                    y.push(m);
                }
            }
        }
    }
    (y, od)
}

/// `y = x · W + b`, `W: [n_in, n_out]`.
pub fn dense_naive(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n_out = b.len();
    (0..n_out).map(|j| b[j] + x.iter().enumerate().map(|(i, xi)| xi * w[i * n_out + j]).sum::<f64>()).collect()
}

pub fn relu_naive(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

pub fn softmax_ce_naive(z: &[f64], label: usize) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[label]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − n‖∞ / ‖n‖∞` (absolute when the numeric gradient vanishes).
pub fn rel_err(analytic: &Tensor, numeric: &[f64]) -> f64 {
    assert_eq!(analytic.numel(), numeric.len());
    let diff = analytic.data().iter().zip(numeric).map(|(&a, n)| (a as f64 - n).abs()).fold(0.0, f64::max);
    let scale = numeric.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale > 1e-12 {
        diff / scale
    } else {
        diff
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, eps, 60)
}

/// Two-tailed Student t tail by quadrature of the density.
///
/// With `t = √ν · tan θ` the density becomes proportional to `cos^(ν−1) θ` on
/// `(−π/2, π/2)`, a bounded integrand for `ν ≥ 1`.
pub fn t_two_tailed_quadrature(t: f64, df: f64) -> f64 {
    let g = move |th: f64| th.cos().max(0.0).powf(df - 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta = (t.abs() / df.sqrt()).atan();
    let total = integrate(&g, 0.0, half_pi, 1e-15);
    let tail = integrate(&g, theta, half_pi, 1e-15);
    (tail / total).clamp(0.0, 1.0)
}

pub fn t_cdf_quadrature(x: f64, df: f64) -> f64 {
    let tail = t_two_tailed_quadrature(x, df) / 2.0;
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Welch statistic and Welch–Satterthwaite degrees of freedom, two-pass.
pub fn welch_oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, var)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (qa, qb) = (va / na, vb / nb);
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, df, t_two_tailed_quadrature(t, df))
}

/// Expands every cell of a 5×5 matrix into samples, remaps each sample to
/// normal/suspicious and recounts.
pub fn collapse_brute(rows: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut samples = Vec::new();
    for (t, row) in rows.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                samples.push((t, p));
            }
        }
    }
    let mut out = vec![vec![0u64; 2]; 2];
    for (t, p) in samples {
        let truth = if t == 0 { 0 } else { 1 };
        let pred = if p == 0 { 0 } else { 1 };
        out[truth][pred] += 1;
    }
    out
}

/// `(TP/(TP+FN) + TN/(TN+FP)) / 2`.
pub fn bacc_formula(tp: u64, fn_: u64, tn: u64, fp: u64) -> f64 {
    (tp as f64 / (tp + fn_) as f64 + tn as f64 / (tn + fp) as f64) / 2.0
}
