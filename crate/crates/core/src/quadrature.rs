//! Adaptive Gauss-Kronrod quadrature, infinite ranges and principal values.

use std::collections::BinaryHeap;

// 15-point Kronrod abscissae on [-1, 1] (non-negative half) with the
// embedded 7-point Gauss rule at the odd positions.
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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive G7K15 integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    const MAX_SEGMENTS: usize = 4000;
    let first = gauss_kronrod(&f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });
    while total.error > abs_tol.max(rel_tol * total.value.abs()) && heap.len() < MAX_SEGMENTS {
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        let left = gauss_kronrod(&f, seg.a, mid);
        let right = gauss_kronrod(&f, mid, seg.b);
        total.value += left.value + right.value - seg.est.value;
        total.error += left.error + right.error - seg.est.error;
        heap.push(Segment { a: seg.a, b: mid, est: left });
        heap.push(Segment { a: mid, b: seg.b, est: right });
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.est.value, e + s.est.error));
    Estimate { value, error }
}

/// `int_a^inf f`, mapped onto `[0, 1)` with `t = a + x / (1 - x)`.
pub fn integrate_upper<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    integrate(
        |x| {
            if x >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - x;
            f(a + x / s) / (s * s)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// `int_-inf^b f`.
pub fn integrate_lower<F: Fn(f64) -> f64>(f: F, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    integrate_upper(|t| f(2.0 * b - t), b, abs_tol, rel_tol)
}

/// Principal value `P int_-inf^inf f(w) / (w - pole) dw`.
///
/// Integrates with a symmetric window of half-width `h` cut out around the
/// pole, for `h = h0, h0/2, ...`, and Richardson-extrapolates `h -> 0`; the
/// excision error contains only odd powers of `h`.
pub fn principal_value<F: Fn(f64) -> f64>(f: F, pole: f64, h0: f64, span: f64) -> f64 {
    const LEVELS: usize = 5;
    const TOL: f64 = 1e-14;
    let g = |w: f64| f(w) / (w - pole);
    let excised = |h: f64| {
        let near_left = integrate(g, pole - span, pole - h, TOL, TOL).value;
        let near_right = integrate(g, pole + h, pole + span, TOL, TOL).value;
        let far_left = integrate_lower(g, pole - span, TOL, TOL).value;
        let far_right = integrate_upper(g, pole + span, TOL, TOL).value;
        far_left + near_left + near_right + far_right
    };
    let mut table: Vec<f64> = (0..LEVELS)
        .map(|k| excised(h0 / f64::powi(2.0, k as i32)))
        .collect();
    // Eliminate h^1, h^3, h^5, ...
    for order in 0..LEVELS - 1 {
        let factor = f64::powi(2.0, 2 * order as i32 + 1);
        table = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
    }
    table[0]
}
