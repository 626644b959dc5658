//! Low-discrepancy integration and one-dimensional adaptive quadrature.
//!
//! Sobol points use the Joe–Kuo direction numbers (first 21 dimensions),
//! generated in Gray-code order. A non-zero `scramble_seed` applies a random
//! digital shift, which keeps the net structure while making the estimate
//! unbiased.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::ops::{Add, Mul, Sub};

use crate::error::{domain, Error, Result};

/// Highest dimension for which direction numbers are embedded.
pub const MAX_SOBOL_DIM: usize = 21;

const BITS: usize = 32;
const TWO_POW_32: f64 = 4_294_967_296.0;

/// Primitive polynomial degree `s`, coefficient bits `a` and initial
/// direction integers `m` for dimensions 2..=21.
const JOE_KUO: [(u32, u32, &[u32]); MAX_SOBOL_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Effort and randomisation settings for quasi-Monte Carlo integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QmcConfig {
    pub point_count: usize,
    /// 0 leaves the sequence unscrambled.
    pub scramble_seed: u64,
    pub batch_count: usize,
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            point_count: 1 << 13,
            scramble_seed: 0x5eed,
            batch_count: 16,
        }
    }
}

impl QmcConfig {
    pub fn new(point_count: usize, scramble_seed: u64, batch_count: usize) -> Result<Self> {
        let cfg = QmcConfig {
            point_count,
            scramble_seed,
            batch_count,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.point_count < 16 {
            return Err(Error::InvalidConfig(format!(
                "point_count must be at least 16, got {}",
                self.point_count
            )));
        }
        if self.batch_count < 2 || self.point_count % self.batch_count != 0 {
            return Err(Error::InvalidConfig(format!(
                "batch_count must be >= 2 and divide point_count ({} / {})",
                self.point_count, self.batch_count
            )));
        }
        Ok(())
    }

    pub fn with_points(mut self, point_count: usize) -> Self {
        self.point_count = point_count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scramble_seed = seed;
        self
    }
}

/// Tolerances for [`quad_halfline`] and [`quad_interval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_refinements: 2000,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) || self.max_refinements == 0 {
            return Err(Error::InvalidConfig(format!("bad quadrature tolerances {self:?}")));
        }
        Ok(())
    }
}

/// A numerical estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Estimate { value, std_error }
    }

    /// A value carrying no numerical uncertainty.
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    /// True when `other` lies within `k` combined standard errors (plus `slack`).
    pub fn agrees_with(&self, other: f64, k: f64, slack: f64) -> bool {
        (self.value - other).abs() <= k * self.std_error + slack
    }
}

impl Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            std_error: self.std_error.hypot(rhs.std_error),
        }
    }
}

impl Sub for Estimate {
    type Output = Estimate;
    fn sub(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value - rhs.value,
            std_error: self.std_error.hypot(rhs.std_error),
        }
    }
}

impl Mul<f64> for Estimate {
    type Output = Estimate;
    fn mul(self, c: f64) -> Estimate {
        Estimate {
            value: self.value * c,
            std_error: self.std_error * c.abs(),
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::zero(), |a, b| a + b)
    }
}

/// Gray-code Sobol generator with optional digital shift.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Option<Vec<u32>>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize, scramble_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(domain("Sobol dimension must be at least 1"));
        }
        if dim > MAX_SOBOL_DIM {
            return Err(Error::UnsupportedDimension {
                dim,
                max: MAX_SOBOL_DIM,
            });
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (j, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - j);
        }
        directions.push(first);
        for &(s, a, m) in JOE_KUO.iter().take(dim - 1) {
            let s = s as usize;
            let mut v = [0u32; BITS];
            for j in 0..BITS {
                v[j] = if j < s {
                    m[j] << (BITS - 1 - j)
                } else {
                    let mut x = v[j - s] ^ (v[j - s] >> s);
                    for k in 1..s {
                        if (a >> (s - 1 - k)) & 1 == 1 {
                            x ^= v[j - k];
                        }
                    }
                    x
                };
            }
            directions.push(v);
        }
        let shift = (scramble_seed != 0).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(scramble_seed);
            (0..dim).map(|_| rng.random::<u32>()).collect()
        });
        Ok(Sobol {
            directions,
            shift,
            state: vec![0; dim],
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Jump to point `index` of the sequence.
    pub fn seek(&mut self, index: u64) {
        let gray = index ^ (index >> 1);
        for (d, dirs) in self.directions.iter().enumerate() {
            let mut x = 0u32;
            for (bit, v) in dirs.iter().enumerate() {
                if (gray >> bit) & 1 == 1 {
                    x ^= v;
                }
            }
            self.state[d] = x;
        }
        self.index = index;
    }

    /// Write the current point into `out` and advance.
    pub fn next_into(&mut self, out: &mut [f64]) {
        match &self.shift {
            None => {
                for (o, &x) in out.iter_mut().zip(&self.state) {
                    *o = x as f64 / TWO_POW_32;
                }
            }
            Some(shift) => {
                for ((o, &x), &s) in out.iter_mut().zip(&self.state).zip(shift) {
                    *o = ((x ^ s) as f64 + 0.5) / TWO_POW_32;
                }
            }
        }
        self.index += 1;
        let c = self.index.trailing_zeros() as usize;
        if c < BITS {
            for (st, dirs) in self.state.iter_mut().zip(&self.directions) {
                *st ^= dirs[c];
            }
        }
    }
}

/// The first `config.point_count` Sobol points in `[0,1)^dim`.
pub fn sobol_points(dim: usize, config: &QmcConfig) -> Result<Vec<Vec<f64>>> {
    let mut gen = Sobol::new(dim, config.scramble_seed)?;
    Ok((0..config.point_count)
        .map(|_| {
            let mut p = vec![0.0; dim];
            gen.next_into(&mut p);
            p
        })
        .collect())
}

/// Mean of `f` over the Sobol point set, with a standard error taken from
/// `batch_count` consecutive equal batches.
///
/// `dim == 0` evaluates `f` once and returns it as exact.
pub fn qmc_integrate<F>(f: F, dim: usize, config: &QmcConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if dim == 0 {
        let v = f(&[]);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { point: vec![] });
        }
        return Ok(Estimate::exact(v));
    }
    let base = Sobol::new(dim, config.scramble_seed)?;
    let per_batch = config.point_count / config.batch_count;
    let means = (0..config.batch_count)
        .into_par_iter()
        .map(|b| {
            let mut gen = base.clone();
            gen.seek((b * per_batch) as u64);
            let mut p = vec![0.0; dim];
            let mut sum = 0.0;
            for _ in 0..per_batch {
                gen.next_into(&mut p);
                let v = f(&p);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand { point: p });
                }
                sum += v;
            }
            Ok(sum / per_batch as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(batch_estimate(&means))
}

pub(crate) fn batch_estimate(means: &[f64]) -> Estimate {
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Estimate::new(mean, (var / b).sqrt())
}

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

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = g(c - dx) + g(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration of `g` over `[a, b]`.
pub fn quad_interval<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, config: &QuadConfig) -> Result<f64> {
    config.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("quad_interval needs finite limits"));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut segments = vec![gauss_kronrod(&g, a, b)];
    for refinement in 0..=config.max_refinements {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::NonFiniteIntegrand { point: vec![] });
        }
        if err <= config.abs_tol.max(config.rel_tol * total.abs()) {
            return Ok(total);
        }
        if refinement == config.max_refinements {
            return Err(Error::NoConvergence {
                refinements: refinement,
                estimate: total,
                error_bound: err,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(gauss_kronrod(&g, s.a, mid));
        segments.push(gauss_kronrod(&g, mid, s.b));
    }
    unreachable!()
}

/// `∫₀^∞ g(u) du` through the substitution `u = s/(1-s)`.
pub fn quad_halfline<G: Fn(f64) -> f64>(g: G, config: &QuadConfig) -> Result<f64> {
    quad_interval(
        |s| {
            let one_minus = 1.0 - s;
            let v = g(s / one_minus) / (one_minus * one_minus);
            if v.is_nan() {
                0.0
            } else {
                v
            }
        },
        0.0,
        1.0,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unscrambled(n: usize) -> QmcConfig {
        QmcConfig::new(n, 0, 2).unwrap()
    }

    #[test]
    fn first_points_match_reference() {
        let pts = sobol_points(1, &unscrambled(16)).unwrap();
        assert_eq!(pts[0][0], 0.0);
        assert_eq!(pts[1][0], 0.5);
        assert_eq!(pts[2][0], 0.75);
        assert_eq!(pts[3][0], 0.25);

        // Columns 14 and 21 of the unscrambled reference sequence.
        let pts = sobol_points(21, &unscrambled(16)).unwrap();
        let col20: Vec<f64> = pts.iter().map(|p| p[20]).collect();
        let col13: Vec<f64> = pts.iter().map(|p| p[13]).collect();
        assert_eq!(
            col20,
            [0.0, 0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875, 0.1875, 0.6875, 0.4375, 0.9375, 0.0625, 0.5625, 0.3125, 0.8125]
        );
        assert_eq!(
            col13,
            [0.0, 0.5, 0.25, 0.75, 0.625, 0.125, 0.875, 0.375, 0.9375, 0.4375, 0.6875, 0.1875, 0.3125, 0.8125, 0.0625, 0.5625]
        );
    }

    #[test]
    fn deep_points_match_reference_integers() {
        // Integer coordinates (scaled by 2^32) of a reference implementation.
        let expected: [(u64, [u32; 21]); 3] = [
            (1000, [943718400, 415236096, 2227175424, 2906652672, 1203765248, 3896508416, 197132288, 3862953984, 2151677952, 297795584, 364904448, 1094713344, 692060160, 1648361472, 616562688, 1589641216, 3091202048, 1480589312, 4257218560, 3116367872, 2243952640]),
            (12345, [2752774144, 3493593088, 688652288, 2262564864, 3816030208, 252968960, 546570240, 486801408, 3443785728, 1845231616, 319029248, 2571894784, 3998482432, 4045144064, 148111360, 2752249856, 268697600, 218890240, 1371799552, 1475084288, 855900160]),
            (19999, [144048128, 2652241920, 1969356800, 4032692224, 3163947008, 1430388736, 173146112, 421920768, 3958243328, 1643773952, 2291007488, 2068971520, 264372224, 1150943232, 2717253632, 2955280384, 4012769280, 3152412672, 96862208, 4067295232, 2760245248]),
        ];
        let mut gen = Sobol::new(21, 0).unwrap();
        let mut p = [0.0; 21];
        for (idx, coords) in expected {
            gen.seek(idx);
            gen.next_into(&mut p);
            let got: Vec<u32> = p.iter().map(|x| (x * TWO_POW_32) as u32).collect();
            assert_eq!(got, coords, "point {idx}");
        }
        // Sequential stepping reaches the same point as seeking.
        let mut seq = Sobol::new(21, 0).unwrap();
        for _ in 0..1000 {
            seq.next_into(&mut p);
        }
        let mut q = [0.0; 21];
        seq.next_into(&mut q);
        let got: Vec<u32> = q.iter().map(|x| (x * TWO_POW_32) as u32).collect();
        assert_eq!(got, expected[0].1);
    }

    #[test]
    fn dimension_limits() {
        assert!(matches!(
            sobol_points(22, &QmcConfig::default()),
            Err(Error::UnsupportedDimension { dim: 22, .. })
        ));
        assert!(sobol_points(0, &QmcConfig::default()).is_err());
    }

    #[test]
    fn scrambled_points_stay_in_unit_cube_and_are_deterministic() {
        let cfg = QmcConfig::default().with_points(1024);
        let a = sobol_points(2, &cfg).unwrap();
        let b = sobol_points(2, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&x| (0.0..1.0).contains(&x)));
        let c = sobol_points(2, &cfg.with_seed(99)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(QmcConfig::new(8, 1, 2).is_err());
        assert!(QmcConfig::new(1024, 1, 1).is_err());
        assert!(QmcConfig::new(1000, 1, 7).is_err());
        assert!(QmcConfig::new(1024, 1, 16).is_ok());
    }

    #[test]
    fn integrate_constant_and_moments() {
        let cfg = QmcConfig::default();
        let c = qmc_integrate(|_| 3.25, 3, &cfg).unwrap();
        assert_eq!(c.value, 3.25);
        assert_eq!(c.std_error, 0.0);

        let m = qmc_integrate(|x| x[0], 1, &cfg).unwrap();
        assert!((m.value - 0.5).abs() <= m.std_error.max(1e-9));

        let p = qmc_integrate(|x| x[0] * x[1], 2, &cfg).unwrap();
        assert!((p.value - 0.25).abs() <= 3.0 * p.std_error.max(1e-9));
    }

    #[test]
    fn integrate_reports_non_finite_point() {
        let cfg = QmcConfig::new(64, 0, 2).unwrap();
        let err = qmc_integrate(|x| 1.0 / x[0], 1, &cfg).unwrap_err();
        assert_eq!(err, Error::NonFiniteIntegrand { point: vec![0.0] });
    }

    #[test]
    fn qmc_consistency_across_sample_sizes() {
        // A fixed polynomial family on [0,1)^3.
        for deg in 1..=4 {
            let f = move |x: &[f64]| x[0].powi(deg) + x[1] * x[2].powi(deg) - 0.3 * x[0] * x[2];
            let small = qmc_integrate(f, 3, &QmcConfig::default().with_points(2048)).unwrap();
            let large = qmc_integrate(f, 3, &QmcConfig::default().with_points(8192)).unwrap();
            assert!(
                (small.value - large.value).abs() < 5.0 * large.std_error.max(1e-12),
                "deg {deg}: {small:?} vs {large:?}"
            );
        }
    }

    #[test]
    fn halfline_known_integrals() {
        let q = QuadConfig::default();
        let g = quad_halfline(|u| (-u * u).exp(), &q).unwrap();
        assert!((g - std::f64::consts::PI.sqrt() / 2.0).abs() < q.abs_tol);
        let h = quad_halfline(|u| u * (-u * u).exp(), &q).unwrap();
        assert!((h - 0.5).abs() < q.abs_tol);
        for k in [1.0f64, 2.0, 3.0, 4.5] {
            let v = quad_halfline(|u| u.powf(k - 1.0) * (-u).exp(), &q).unwrap();
            let exact = statrs::function::gamma::gamma(k);
            assert!((v - exact).abs() < 10.0 * q.abs_tol.max(q.rel_tol * exact), "k={k}: {v} vs {exact}");
        }
    }

    /// Trapezoidal rule on [0, 12] with step halving until successive
    /// results agree to 1e-10 (the integrand is negligible beyond 12).
    fn trapezoid_reference(g: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = (0.0, 12.0);
        let mut n = 64usize;
        let mut prev = f64::NAN;
        loop {
            let h = (b - a) / n as f64;
            let inner: f64 = (1..n).map(|i| g(a + i as f64 * h)).sum();
            let t = h * (0.5 * (g(a) + g(b)) + inner);
            if (t - prev).abs() < 1e-10 {
                return t;
            }
            prev = t;
            n *= 2;
        }
    }

    #[test]
    fn halfline_matches_trapezoid_oracle() {
        let g = |u: f64| u.powi(3) * (-u * u - u.powi(3)).exp();
        let reference = trapezoid_reference(g);
        let v = quad_halfline(g, &QuadConfig::default()).unwrap();
        assert!((v - reference).abs() < 1e-9, "{v} vs {reference}");
    }

    #[test]
    fn halfline_convergence_failure_is_reported() {
        let q = QuadConfig {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_refinements: 3,
        };
        match quad_halfline(|u| (-u).exp() * (u * 40.0).sin().abs(), &q) {
            Err(Error::NoConvergence { refinements, .. }) => assert_eq!(refinements, 3),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
