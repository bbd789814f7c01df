//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below the absolute tolerance. The error estimate of a panel
//! is `|K15 - G7|`, which is pessimistic for smooth integrands; the returned
//! value is the Kronrod sum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

// Kronrod abscissae on [-1, 1]; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature did not reach tolerance {tolerance:e}: error estimate {estimate:e} after {subintervals} subintervals")]
pub struct QuadratureError {
    pub estimate: f64,
    pub tolerance: f64,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub max_subintervals: usize,
    /// Uniform panels the range is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subintervals: 1 << 14,
            initial_panels: 8,
        }
    }
}

impl QuadratureOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    /// Summed `|K15 - G7|` estimate (max over components for vectors).
    pub error: f64,
    pub subintervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    key: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; earlier panels win ties so the order is reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn gauss_kronrod<E, F>(f: &mut F, dim: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>), E>
where
    F: FnMut(f64) -> Result<Vec<f64>, E>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut gauss: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(center - dx)?;
        let hi = f(center + dx)?;
        for k in 0..dim {
            let sum = lo[k] + hi[k];
            kronrod[k] += WGK[j] * sum;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * sum;
            }
        }
    }
    let value: Vec<f64> = kronrod.iter().map(|k| k * half).collect();
    let error: Vec<f64> = kronrod
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * half).abs())
        .collect();
    Ok((value, error))
}

/// Integrates a vector-valued function of dimension `dim` over `[a, b]`.
/// Refinement stops once every component's summed error estimate is below
/// `abs_tol`.
pub fn integrate_vec<E, F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<Estimate<Vec<f64>>, E>
where
    F: FnMut(f64) -> Result<Vec<f64>, E>,
    E: From<QuadratureError>,
{
    let panels = opts.initial_panels.max(1);
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    let mut seq = 0usize;
    let mut push = |heap: &mut BinaryHeap<Panel>, a: f64, b: f64, value: Vec<f64>, error: Vec<f64>| {
        let key = error.iter().copied().fold(0.0, f64::max);
        heap.push(Panel {
            a,
            b,
            value,
            error,
            key,
            seq,
        });
        seq += 1;
    };
    let width = (b - a) / panels as f64;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { a + width * (i + 1) as f64 };
        let (v, e) = gauss_kronrod(&mut f, dim, lo, hi)?;
        push(&mut heap, lo, hi, v, e);
    }

    let error_sums = |heap: &BinaryHeap<Panel>| -> Vec<f64> {
        let mut sums = vec![0.0; dim];
        for p in heap.iter() {
            for (s, e) in sums.iter_mut().zip(&p.error) {
                *s += e;
            }
        }
        sums
    };
    let max_of = |sums: &[f64]| sums.iter().copied().fold(0.0, f64::max);

    let mut sums = error_sums(&heap);
    let mut error = max_of(&sums);
    loop {
        if error <= opts.abs_tol {
            // the running sums drift; confirm with an exact recount
            sums = error_sums(&heap);
            error = max_of(&sums);
            if error <= opts.abs_tol {
                break;
            }
        }
        if heap.len() >= opts.max_subintervals {
            return Err(QuadratureError {
                estimate: error,
                tolerance: opts.abs_tol,
                subintervals: heap.len(),
            }
            .into());
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gauss_kronrod(&mut f, dim, worst.a, mid)?;
        let (rv, re) = gauss_kronrod(&mut f, dim, mid, worst.b)?;
        for k in 0..dim {
            sums[k] += le[k] + re[k] - worst.error[k];
        }
        push(&mut heap, worst.a, mid, lv, le);
        push(&mut heap, mid, worst.b, rv, re);
        error = max_of(&sums);
    }

    // Sum left to right so the result does not depend on heap layout.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = vec![0.0; dim];
    for p in &panels {
        for (v, pv) in value.iter_mut().zip(&p.value) {
            *v += pv;
        }
    }
    Ok(Estimate {
        value,
        error,
        subintervals: panels.len(),
    })
}

/// Scalar version of [`integrate_vec`].
pub fn integrate<E, F>(mut f: F, a: f64, b: f64, opts: &QuadratureOptions) -> Result<Estimate<f64>, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    let est = integrate_vec(|t| f(t).map(|v| vec![v]), 1, a, b, opts)?;
    Ok(Estimate {
        value: est.value[0],
        error: est.error,
        subintervals: est.subintervals,
    })
}
