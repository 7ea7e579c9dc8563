//! Adaptive Gauss–Kronrod (7/15) quadrature and composite trapezoid rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    /// Upper bound on the number of live subintervals.
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self { relative, absolute: 0.0, max_intervals: 200_000 }
    }

    pub fn with_absolute(mut self, absolute: f64) -> Self {
        self.absolute = absolute;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over `[a, b]`, pre-split into `panels` equal pieces.
///
/// Pre-splitting matters for oscillatory integrands: give at least one panel
/// per oscillation so the first Kronrod pass sees the structure.
pub fn integrate<F>(f: F, a: f64, b: f64, panels: usize, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap: BinaryHeap<Panel> = (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            kronrod(&f, lo, hi)
        })
        .collect();

    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let target = tol.absolute.max(tol.relative * value.abs());
        if error <= target || !error.is_finite() {
            if !value.is_finite() {
                return Err(Error::QuadratureTolerance { value, error });
            }
            return Ok(Estimate { value, error });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureTolerance { value, error });
        }
        // refine the worst panels in one pass
        let refine = (heap.len() / 8).max(1);
        for _ in 0..refine {
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval can no longer be split in floating point
                return Err(Error::QuadratureTolerance { value, error });
            }
            heap.push(kronrod(&f, worst.a, mid));
            heap.push(kronrod(&f, mid, worst.b));
        }
    }
}

/// Composite trapezoid rule on uniformly spaced samples with spacing `h`.
pub fn trapezoid_uniform(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = samples[1..n - 1].iter().sum();
            h * (0.5 * (samples[0] + samples[n - 1]) + interior)
        }
    }
}

/// Composite trapezoid rule for `f` on `[a, b]` with `steps` panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..steps {
        sum += f(a + h * i as f64);
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1, Tolerance::relative(1e-14)).unwrap();
        assert!((est.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integral() {
        // ∫₀^{50} cos(40x) dx = sin(2000)/40
        let est = integrate(|x| (40.0 * x).cos(), 0.0, 50.0, 400, Tolerance::relative(1e-10)).unwrap();
        assert!((est.value - (2000.0f64).sin() / 40.0).abs() < 1e-11);
    }

    #[test]
    fn peaked_integrand_refines() {
        // ∫ 1/(x²+ε²) over [-1, 1] = 2 atan(1/ε)/ε
        let eps: f64 = 1e-4;
        let exact = 2.0 * (1.0 / eps).atan() / eps;
        let est = integrate(|x| 1.0 / (x * x + eps * eps), -1.0, 1.0, 1, Tolerance::relative(1e-10)).unwrap();
        assert!(((est.value - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let tol = Tolerance { relative: 1e-15, absolute: 0.0, max_intervals: 4 };
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, 1, tol).unwrap_err();
        assert!(matches!(err, Error::QuadratureTolerance { .. }));
    }

    #[test]
    fn trapezoid_rules_agree() {
        let h = 0.01;
        let samples: Vec<f64> = (0..=100).map(|i| (i as f64 * h).exp()).collect();
        let a = trapezoid_uniform(&samples, h);
        let b = trapezoid(f64::exp, 0.0, 1.0, 100);
        assert!((a - b).abs() < 1e-12);
        assert!((a - (1f64.exp() - 1.0)).abs() < 2e-5);
    }
}
