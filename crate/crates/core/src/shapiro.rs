//! Shapiro–Wilk W test with Royston's coefficient and p-value approximations
//! (Applied Statistics algorithm AS R94), valid for 3 ≤ n ≤ 5000.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MAX_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    #[serde(rename = "W")]
    pub w: f64,
    pub p: f64,
    pub sample_n: usize,
}

impl ShapiroWilk {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// Horner evaluation with `cc[0]` as the constant term.
fn poly(cc: &[f64], x: f64) -> f64 {
    cc.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Antisymmetric coefficients `a_1..a_n` for the ordered sample.
fn coefficients(n: usize) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let nn2 = n / 2;
    // half[i] pairs with the i-th smallest / largest observation
    let mut half = vec![0.0; nn2];
    if n == 3 {
        half[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let normal = std_normal();
        let an25 = n as f64 + 0.25;
        let m: Vec<f64> = (1..=nn2)
            .map(|i| normal.inverse_cdf((i as f64 - 0.375) / an25))
            .collect();
        let summ2 = 2.0 * m.iter().map(|x| x * x).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / (n as f64).sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first_scaled, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            half[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        half[0] = a1;
        for i in first_scaled..nn2 {
            half[i] = -m[i] / fac;
        }
    }
    let mut a = vec![0.0; n];
    for (i, &h) in half.iter().enumerate() {
        a[i] = -h;
        a[n - 1 - i] = h;
    }
    a
}

/// Royston's normalizing transform of `1 - W`, returning the upper-tail p.
fn p_value(w: f64, w1: f64, n: usize) -> f64 {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    if n == 3 {
        const PI6: f64 = 1.909_859_317_102_74;
        const STQR: f64 = 1.047_197_551_196_6;
        return (PI6 * (w.sqrt().asin() - STQR)).max(0.0);
    }
    if w1 <= 0.0 {
        return 1.0;
    }
    let an = n as f64;
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    std_normal().sf((y - m) / s)
}

/// Runs the test on `sample` (any order).
pub fn shapiro_wilk(sample: &[f64]) -> Result<ShapiroWilk> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, found: n });
    }
    if n > MAX_N {
        return Err(Error::InvalidArgument(format!(
            "Shapiro-Wilk supports at most {MAX_N} values, got {n}"
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("sample contains non-finite values".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Err(Error::DegenerateSample);
    }

    let a = coefficients(n);
    let nf = n as f64;
    let sa = a.iter().sum::<f64>() / nf;
    let sx = x.iter().map(|v| v / range).sum::<f64>() / nf;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (ai, xi) in a.iter().zip(&x) {
        let asa = ai - sa;
        let xsx = xi / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    // 1 - W, formed to avoid cancellation for W near 1
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(ShapiroWilk {
        w,
        p: p_value(w, w1, n),
        sample_n: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_small_and_constant() {
        assert!(matches!(shapiro_wilk(&[1.0, 2.0]), Err(Error::InsufficientData { .. })));
        assert!(matches!(shapiro_wilk(&[4.0; 10]), Err(Error::DegenerateSample)));
        assert!(shapiro_wilk(&[1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn n3_has_exact_coefficients() {
        let r = shapiro_wilk(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.w - 1.0).abs() < 1e-12);
        assert!((r.p - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coefficients_are_antisymmetric_and_unit() {
        for n in [3, 4, 5, 6, 11, 12, 50, 501] {
            let a = coefficients(n);
            let norm: f64 = a.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-9, "n={n} norm={norm}");
            for i in 0..n {
                assert_eq!(a[i], -a[n - 1 - i]);
            }
        }
    }

    #[test]
    fn poly_is_horner() {
        assert_eq!(poly(&[1.0, 2.0, 3.0], 2.0), 17.0);
    }

    /// Reference values from an independent implementation (single-precision
    /// internals, hence the loose tolerances).
    #[test]
    fn matches_reference_implementation() {
        let cases: [(Vec<f64>, f64, f64); 5] = [
            (
                vec![2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 4.1, 3.9, 6.2, 1.2, 3.0, 2.7, 4.8, 3.6],
                0.9862739921723375,
                0.9955782890539638,
            ),
            (vec![1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
            (vec![0.5, 1.5, 2.0, 9.0], 0.7757925617707441, 0.06542135325718045),
            (
                vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 100.0],
                0.437526081545352,
                6.343004893719869e-06,
            ),
            (
                (1..60).map(|i| (i as f64 * 0.37) % 1.0).collect(),
                0.954323948735752,
                0.026846513062403432,
            ),
        ];
        for (x, w, p) in cases {
            let r = shapiro_wilk(&x).unwrap();
            assert!((r.w - w).abs() < 2e-5, "n={} W={} want {w}", x.len(), r.w);
            assert!((r.p - p).abs() <= 1e-3 * p.max(1e-3), "n={} p={} want {p}", x.len(), r.p);
        }
    }

    #[test]
    fn normal_quantiles_look_normal() {
        let normal = std_normal();
        let x: Vec<f64> = (1..=50).map(|i| normal.inverse_cdf((i as f64 - 0.5) / 50.0)).collect();
        let r = shapiro_wilk(&x).unwrap();
        assert!(r.w > 0.99, "W={}", r.w);
        assert!(r.p > 0.5);
    }

    #[test]
    fn size_is_calibrated_under_the_null() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240501);
        let trials = 1000;
        let mut rejected = 0;
        for _ in 0..trials {
            let x: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
            if shapiro_wilk(&x).unwrap().rejects(0.05) {
                rejected += 1;
            }
        }
        let rate = rejected as f64 / trials as f64;
        assert!((rate - 0.05).abs() <= 0.02, "rejection rate {rate}");
    }

    #[test]
    fn skewed_data_is_rejected() {
        let x: Vec<f64> = (1..=200).map(|i| (i as f64 / 20.0).exp()).collect();
        assert!(shapiro_wilk(&x).unwrap().rejects(0.01));
    }
}
