//! Sensor-array signal model: steering manifolds, sparse representations,
//! observation synthesis and second-order statistics.
//!
//! Sensor positions are stored in wavelengths, so the phase of sensor `i` at
//! parameter `theta` is `2*pi*r_i*cos(theta - rho_i)`. The half-wavelength
//! uniform linear array is additionally available in electrical-angle form
//! `phi = pi*cos(theta)`, where the steering vector is the Fourier vector
//! `[1, e^{j phi}, ..., e^{j(m-1) phi}]`.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{adjoint, pivoted_cholesky, row_norms, C64};

/// Closed interval of admissible position parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        // tolerate round-off at the endpoints
        let eps = 1e-12 * self.length().max(1.0);
        x >= self.lo - eps && x <= self.hi + eps
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// A parameterized family `theta -> a(theta)` of unit-modulus-entry basis
/// vectors together with its first two analytic derivatives.
pub trait Manifold: Send + Sync {
    fn num_sensors(&self) -> usize;
    fn domain(&self) -> Interval;
    fn fill_steering(&self, theta: f64, out: &mut [C64]);
    fn fill_derivative(&self, theta: f64, out: &mut [C64]);
    fn fill_second_derivative(&self, theta: f64, out: &mut [C64]);
    /// Coordinate the position parameters are expressed in.
    fn angle_unit(&self) -> AngleUnit;
}

/// Planar array described by per-sensor polar coordinates `(r, rho)`,
/// with `r` in wavelengths. Domain is `theta in [0, pi]`.
#[derive(Debug, Clone)]
pub struct PlanarArray {
    sensors: Vec<(f64, f64)>,
}

impl PlanarArray {
    pub fn new(sensors: Vec<(f64, f64)>) -> Self {
        Self { sensors }
    }

    /// Half-wavelength uniform linear array: `r_i = (i-1)/2`, `rho_i = 0`.
    pub fn ula(m: usize) -> Self {
        Self {
            sensors: (0..m).map(|i| (0.5 * i as f64, 0.0)).collect(),
        }
    }

    pub fn sensors(&self) -> &[(f64, f64)] {
        &self.sensors
    }

    /// Parse a geometry description: either a single line `ula <m>` or one
    /// `r rho` pair per line (`r` in wavelengths, `rho` in radians).
    /// Lines starting with `#` are comments.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut sensors = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0].eq_ignore_ascii_case("ula") {
                if fields.len() != 2 {
                    return Err(Error::Parse(format!(
                        "line {}: expected `ula <m>`",
                        lineno + 1
                    )));
                }
                let m: usize = fields[1]
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                return Ok(Self::ula(m));
            }
            if fields.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected `r rho` pair, got {:?}",
                    lineno + 1,
                    line
                )));
            }
            let r: f64 = fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let rho: f64 = fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            sensors.push((r, rho));
        }
        if sensors.is_empty() {
            return Err(Error::Parse("geometry config holds no sensors".into()));
        }
        Ok(Self::new(sensors))
    }
}

impl Manifold for PlanarArray {
    fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    fn domain(&self) -> Interval {
        Interval::new(0.0, std::f64::consts::PI)
    }

    fn fill_steering(&self, theta: f64, out: &mut [C64]) {
        for (o, &(r, rho)) in out.iter_mut().zip(&self.sensors) {
            let phase = 2.0 * std::f64::consts::PI * r * (theta - rho).cos();
            *o = C64::from_polar(1.0, phase);
        }
    }

    fn fill_derivative(&self, theta: f64, out: &mut [C64]) {
        for (o, &(r, rho)) in out.iter_mut().zip(&self.sensors) {
            let w = 2.0 * std::f64::consts::PI * r;
            let a = C64::from_polar(1.0, w * (theta - rho).cos());
            *o = C64::new(0.0, -w * (theta - rho).sin()) * a;
        }
    }

    fn fill_second_derivative(&self, theta: f64, out: &mut [C64]) {
        for (o, &(r, rho)) in out.iter_mut().zip(&self.sensors) {
            let w = 2.0 * std::f64::consts::PI * r;
            let (s, c) = (theta - rho).sin_cos();
            let a = C64::from_polar(1.0, w * c);
            // d/dtheta [ -j w sin(.) a ] = (-j w cos(.) - w^2 sin^2(.)) a
            *o = (C64::new(0.0, -w * c) + C64::new(-(w * s).powi(2), 0.0)) * a;
        }
    }

    fn angle_unit(&self) -> AngleUnit {
        AngleUnit::Physical
    }
}

/// Half-wavelength ULA parameterized directly by the electrical angle
/// `phi in [-pi, pi]`; entry `k` of the steering vector is `e^{j k phi}`.
#[derive(Debug, Clone, Copy)]
pub struct UlaElectrical {
    pub m: usize,
}

impl UlaElectrical {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl Manifold for UlaElectrical {
    fn num_sensors(&self) -> usize {
        self.m
    }

    fn domain(&self) -> Interval {
        Interval::new(-std::f64::consts::PI, std::f64::consts::PI)
    }

    fn fill_steering(&self, phi: f64, out: &mut [C64]) {
        let step = C64::from_polar(1.0, phi);
        let mut cur = C64::new(1.0, 0.0);
        for o in out.iter_mut() {
            *o = cur;
            cur *= step;
        }
    }

    fn fill_derivative(&self, phi: f64, out: &mut [C64]) {
        let step = C64::from_polar(1.0, phi);
        let mut cur = C64::new(1.0, 0.0);
        for (k, o) in out.iter_mut().enumerate() {
            *o = C64::new(0.0, k as f64) * cur;
            cur *= step;
        }
    }

    fn fill_second_derivative(&self, phi: f64, out: &mut [C64]) {
        let step = C64::from_polar(1.0, phi);
        let mut cur = C64::new(1.0, 0.0);
        for (k, o) in out.iter_mut().enumerate() {
            *o = C64::new(-((k * k) as f64), 0.0) * cur;
            cur *= step;
        }
    }

    fn angle_unit(&self) -> AngleUnit {
        AngleUnit::Electrical
    }
}

/// Electrical angle of a physical direction for a half-wavelength ULA.
pub fn phi_from_theta(theta: f64) -> f64 {
    std::f64::consts::PI * theta.cos()
}

/// Physical direction corresponding to an electrical angle.
pub fn theta_from_phi(phi: f64) -> f64 {
    (phi / std::f64::consts::PI).clamp(-1.0, 1.0).acos()
}

/// Coordinate in which a representation's position parameters are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    /// Physical direction in radians.
    Physical,
    /// ULA electrical angle `phi = pi cos(theta)`.
    Electrical,
}

/// A finite signal representation: `n` position parameters and the `n x T`
/// complex amplitude matrix.
#[derive(Debug, Clone)]
pub struct SparseRepresentation {
    pub thetas: Vec<f64>,
    pub amplitudes: Array2<C64>,
    pub unit: AngleUnit,
}

impl SparseRepresentation {
    pub fn new(thetas: Vec<f64>, amplitudes: Array2<C64>, unit: AngleUnit) -> Result<Self> {
        if thetas.len() != amplitudes.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions vs {} amplitude rows",
                thetas.len(),
                amplitudes.nrows()
            )));
        }
        Ok(Self {
            thetas,
            amplitudes,
            unit,
        })
    }

    pub fn empty(t: usize, unit: AngleUnit) -> Self {
        Self {
            thetas: Vec::new(),
            amplitudes: Array2::zeros((0, t)),
            unit,
        }
    }

    pub fn order(&self) -> usize {
        self.thetas.len()
    }

    pub fn snapshots(&self) -> usize {
        self.amplitudes.ncols()
    }

    /// Row 2-norms `gamma_i` of the amplitude matrix.
    pub fn row_norms(&self) -> Array1<f64> {
        row_norms(&self.amplitudes)
    }

    /// No amplitude row is (numerically) all zero.
    pub fn is_irreducible(&self, drop_tol: f64) -> bool {
        self.row_norms().iter().all(|&g| g > drop_tol)
    }

    /// Unit-row matrix `U = Gamma^{-1} S`.
    pub fn unit_rows(&self) -> Array2<C64> {
        let gammas = self.row_norms();
        let mut u = self.amplitudes.clone();
        for (i, mut row) in u.rows_mut().into_iter().enumerate() {
            let g = gammas[i];
            if g > 0.0 {
                row.mapv_inplace(|z| z / g);
            }
        }
        u
    }
}

/// Observed snapshot matrix plus optional generating ground truth.
#[derive(Debug, Clone)]
pub struct Observation {
    pub x: Array2<C64>,
    pub truth: Option<SparseRepresentation>,
    pub noise_sigma: f64,
}

/// Noise covariance specification.
#[derive(Debug, Clone)]
pub enum NoiseCovariance {
    /// `sigma^2 I`
    White { sigma: f64 },
    /// Arbitrary Hermitian PSD matrix.
    Full { c: Array2<C64> },
}

/// Circularly symmetric Gaussian noise source with reproducible,
/// counter-based per-trial streams.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub covariance: NoiseCovariance,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseModel {
    pub fn white(sigma: f64, seed: u64) -> Self {
        Self {
            covariance: NoiseCovariance::White { sigma },
            seed,
            stream: 0,
        }
    }

    pub fn full(c: Array2<C64>, seed: u64) -> Self {
        Self {
            covariance: NoiseCovariance::Full { c },
            seed,
            stream: 0,
        }
    }

    /// Same model on an independent stream; used for per-trial draws so the
    /// result does not depend on scheduling order.
    pub fn with_stream(&self, stream: u64) -> Self {
        let mut n = self.clone();
        n.stream = stream;
        n
    }

    pub fn sigma(&self) -> f64 {
        match &self.covariance {
            NoiseCovariance::White { sigma } => *sigma,
            NoiseCovariance::Full { c } => {
                let tr: f64 = (0..c.nrows()).map(|i| c[[i, i]].re).sum();
                (tr / c.nrows() as f64).sqrt()
            }
        }
    }

    /// Covariance as an explicit matrix.
    pub fn covariance_matrix(&self, m: usize) -> Array2<C64> {
        match &self.covariance {
            NoiseCovariance::White { sigma } => Array2::from_shape_fn((m, m), |(i, j)| {
                if i == j {
                    C64::new(sigma * sigma, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            NoiseCovariance::Full { c } => c.clone(),
        }
    }

    /// Draw an `m x t` noise matrix. Deterministic in `(seed, stream)`.
    pub fn draw(&self, m: usize, t: usize) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream.wrapping_add(1));
        let mut white = Array2::<C64>::zeros((m, t));
        let normal = StandardNormal;
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for v in white.iter_mut() {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            *v = C64::new(re * scale, im * scale);
        }
        match &self.covariance {
            NoiseCovariance::White { sigma } => white.mapv(|z| z * *sigma),
            NoiseCovariance::Full { c } => {
                let l = pivoted_cholesky(c, 1e-14);
                // pad the factor back to m columns so dimensions line up
                let mut lf = Array2::<C64>::zeros((m, m));
                for i in 0..m {
                    for j in 0..l.ncols() {
                        lf[[i, j]] = l[[i, j]];
                    }
                }
                lf.dot(&white)
            }
        }
    }
}

/// Evaluate the steering vector, checking the domain.
pub fn steering_vector(manifold: &dyn Manifold, theta: f64) -> Result<Array1<C64>> {
    let dom = manifold.domain();
    if !dom.contains(theta) {
        return Err(Error::OutOfDomain {
            value: theta,
            lo: dom.lo,
            hi: dom.hi,
        });
    }
    let mut v = Array1::zeros(manifold.num_sensors());
    manifold.fill_steering(theta, v.as_slice_mut().unwrap());
    Ok(v)
}

/// Analytic derivative `d a / d theta`, checking the domain.
pub fn steering_derivative(manifold: &dyn Manifold, theta: f64) -> Result<Array1<C64>> {
    let dom = manifold.domain();
    if !dom.contains(theta) {
        return Err(Error::OutOfDomain {
            value: theta,
            lo: dom.lo,
            hi: dom.hi,
        });
    }
    let mut v = Array1::zeros(manifold.num_sensors());
    manifold.fill_derivative(theta, v.as_slice_mut().unwrap());
    Ok(v)
}

/// Basis and derivative matrices evaluated at a list of positions.
#[derive(Debug, Clone)]
pub struct BasisMatrices {
    pub a: Array2<C64>,
    pub d: Array2<C64>,
    /// Indices `(i, j)` of coincident position pairs, if any.
    pub duplicates: Vec<(usize, usize)>,
}

/// Column `j` of `a`/`d` is the steering vector/derivative at `thetas[j]`.
pub fn build_matrices(manifold: &dyn Manifold, thetas: &[f64]) -> Result<BasisMatrices> {
    if thetas.is_empty() {
        return Err(Error::DimensionMismatch(
            "build_matrices needs at least one position".into(),
        ));
    }
    let m = manifold.num_sensors();
    let mut a = Array2::zeros((m, thetas.len()));
    let mut d = Array2::zeros((m, thetas.len()));
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (j, &theta) in thetas.iter().enumerate() {
        let dom = manifold.domain();
        if !dom.contains(theta) {
            return Err(Error::OutOfDomain {
                value: theta,
                lo: dom.lo,
                hi: dom.hi,
            });
        }
        manifold.fill_steering(theta, &mut buf);
        for (i, &v) in buf.iter().enumerate() {
            a[[i, j]] = v;
        }
        manifold.fill_derivative(theta, &mut buf);
        for (i, &v) in buf.iter().enumerate() {
            d[[i, j]] = v;
        }
    }
    let mut duplicates = Vec::new();
    for i in 0..thetas.len() {
        for j in i + 1..thetas.len() {
            if (thetas[i] - thetas[j]).abs() < 1e-14 {
                duplicates.push((i, j));
            }
        }
    }
    Ok(BasisMatrices { a, d, duplicates })
}

/// Synthesize `X = A(thetas) S + N`.
pub fn generate_observation(
    manifold: &dyn Manifold,
    truth: &SparseRepresentation,
    noise: &NoiseModel,
    t: usize,
) -> Result<Observation> {
    if truth.snapshots() != t {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} snapshots, requested {}",
            truth.snapshots(),
            t
        )));
    }
    let m = manifold.num_sensors();
    let x_clean = if truth.order() == 0 {
        Array2::zeros((m, t))
    } else {
        let basis = build_matrices(manifold, &truth.thetas)?;
        basis.a.dot(&truth.amplitudes)
    };
    let n = noise.draw(m, t);
    Ok(Observation {
        x: x_clean + n,
        truth: Some(truth.clone()),
        noise_sigma: noise.sigma(),
    })
}

/// Sample correlation matrix `R_x = X X^H / T`.
pub fn sample_correlation(x: &Array2<C64>) -> Array2<C64> {
    let t = x.ncols().max(1) as f64;
    let xh = adjoint(x);
    x.dot(&xh).mapv(|z| z / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ula_steering_examples() {
        let ula = UlaElectrical::new(3);
        let a = steering_vector(&ula, 0.0).unwrap();
        for v in a.iter() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }

        let ula2 = UlaElectrical::new(2);
        let a = steering_vector(&ula2, PI).unwrap();
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(-1.0, 0.0)).norm() < 1e-12);

        // physical theta = pi/3 maps to phi = pi/2
        let phi = phi_from_theta(PI / 3.0);
        assert!((phi - PI / 2.0).abs() < 1e-12);
        let a = steering_vector(&ula2, phi).unwrap();
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn ula_derivative_at_zero_phase() {
        let ula = UlaElectrical::new(3);
        let d = steering_derivative(&ula, 0.0).unwrap();
        assert!((d[0] - c(0.0, 0.0)).norm() < 1e-15);
        assert!((d[1] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((d[2] - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let ula = UlaElectrical::new(7);
        let planar = PlanarArray::new(vec![(0.3, 0.1), (0.9, -0.4), (1.7, 1.2), (0.05, 2.0)]);
        let manifolds: [&dyn Manifold; 2] = [&ula, &planar];
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        let h = 1e-6;
        for manifold in manifolds {
            let dom = manifold.domain();
            for _ in 0..100 {
                let theta = dom.lo + (dom.hi - dom.lo) * (0.01 + 0.98 * next());
                let ap = steering_vector(manifold, theta + h).unwrap();
                let am = steering_vector(manifold, theta - h).unwrap();
                let d = steering_derivative(manifold, theta).unwrap();
                let mut err = 0.0f64;
                let mut scale = 0.0f64;
                for i in 0..manifold.num_sensors() {
                    let fd = (ap[i] - am[i]) / c(2.0 * h, 0.0);
                    err += (fd - d[i]).norm_sqr();
                    scale += d[i].norm_sqr();
                }
                assert!(err.sqrt() < 1e-6 * scale.sqrt().max(1.0));
            }
        }
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let planar = PlanarArray::new(vec![(0.3, 0.1), (0.9, -0.4), (1.7, 1.2)]);
        let h = 1e-5;
        for &theta in &[0.4, 1.1, 2.3] {
            let dp = steering_derivative(&planar, theta + h).unwrap();
            let dm = steering_derivative(&planar, theta - h).unwrap();
            let mut d2 = Array1::zeros(3);
            planar.fill_second_derivative(theta, d2.as_slice_mut().unwrap());
            for i in 0..3 {
                let fd = (dp[i] - dm[i]) / c(2.0 * h, 0.0);
                assert!((fd - d2[i]).norm() < 1e-5 * (1.0 + d2[i].norm()));
            }
        }
    }

    #[test]
    fn planar_derivative_vanishes_at_sensor_axis() {
        let planar = PlanarArray::new(vec![(0.7, 0.9), (0.2, 0.3)]);
        let d = steering_derivative(&planar, 0.9).unwrap();
        assert!(d[0].norm() < 1e-14);
    }

    #[test]
    fn steering_norm_is_m_everywhere() {
        let planar = PlanarArray::new(vec![(0.3, 0.1), (0.9, -0.4), (1.7, 1.2), (0.05, 2.0)]);
        let ula = UlaElectrical::new(9);
        for manifold in [&planar as &dyn Manifold, &ula] {
            let dom = manifold.domain();
            let m = manifold.num_sensors() as f64;
            for k in 0..500 {
                let theta = dom.lo + dom.length() * (k as f64 + 0.5) / 500.0;
                let a = steering_vector(manifold, theta).unwrap();
                let norm_sq: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                assert!((norm_sq - m).abs() < 1e-12 * m);
            }
        }
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let ula = UlaElectrical::new(4);
        assert!(steering_vector(&ula, 4.0).is_err());
    }

    #[test]
    fn planar_ula_matches_electrical_ula() {
        let planar = PlanarArray::ula(5);
        let ula = UlaElectrical::new(5);
        for &theta in &[0.3, 1.0, 2.5] {
            let a_planar = steering_vector(&planar, theta).unwrap();
            let a_ula = steering_vector(&ula, phi_from_theta(theta)).unwrap();
            for i in 0..5 {
                assert!((a_planar[i] - a_ula[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vandermonde_full_rank_at_m_points() {
        let ula = UlaElectrical::new(5);
        let thetas: Vec<f64> = (0..5).map(|k| -2.5 + 1.1 * k as f64).collect();
        let basis = build_matrices(&ula, &thetas).unwrap();
        let g = adjoint(&basis.a).dot(&basis.a);
        // full column rank iff Gram matrix invertible
        assert!(crate::linalg::inverse(&g).is_ok());
        assert!(basis.duplicates.is_empty());
    }

    #[test]
    fn duplicate_positions_are_flagged() {
        let ula = UlaElectrical::new(4);
        let basis = build_matrices(&ula, &[0.5, 0.5, 1.0]).unwrap();
        assert_eq!(basis.duplicates, vec![(0, 1)]);
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let ula = UlaElectrical::new(6);
        let truth = SparseRepresentation::new(
            vec![0.4, -1.2],
            ndarray::array![[c(1.0, 0.5)], [c(-0.3, 0.2)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let noise = NoiseModel::white(0.0, 7);
        let obs = generate_observation(&ula, &truth, &noise, 1).unwrap();
        let basis = build_matrices(&ula, &truth.thetas).unwrap();
        let clean = basis.a.dot(&truth.amplitudes);
        for (u, v) in obs.x.iter().zip(clean.iter()) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn same_seed_gives_identical_noise() {
        let noise = NoiseModel::white(1.0, 99);
        let n1 = noise.draw(8, 3);
        let n2 = noise.draw(8, 3);
        assert_eq!(n1, n2);
        let n3 = noise.with_stream(1).draw(8, 3);
        assert_ne!(n1, n3);
    }

    #[test]
    fn noise_covariance_is_identity() {
        let noise = NoiseModel::white(1.0, 42);
        let m = 8;
        let trials = 100_000;
        let mut acc = Array2::<C64>::zeros((m, m));
        for trial in 0..trials {
            let n = noise.with_stream(trial).draw(m, 1);
            let nh = adjoint(&n);
            acc = acc + n.dot(&nh);
        }
        acc.mapv_inplace(|z| z / trials as f64);
        let mut err = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                err += (acc[[i, j]] - target).norm_sqr();
            }
        }
        // 2% Frobenius relative to ||I||_F = sqrt(m)
        assert!(err.sqrt() < 0.02 * (m as f64).sqrt());
    }

    #[test]
    fn sample_correlation_basics() {
        let x0 = Array2::<C64>::zeros((4, 3));
        assert_eq!(sample_correlation(&x0), Array2::zeros((4, 4)));

        let x = ndarray::array![[c(1.0, 1.0)], [c(0.0, -2.0)]];
        let r = sample_correlation(&x);
        assert!((r[[0, 0]] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((r[[0, 1]] - c(1.0, 1.0) * c(0.0, -2.0).conj()).norm() < 1e-15);
    }

    #[test]
    fn correlation_invariant_under_snapshot_rotation() {
        let noise = NoiseModel::white(1.0, 5);
        let x = noise.draw(4, 2);
        // unitary 2x2
        let q = ndarray::array![
            [c(0.6, 0.0), c(0.0, 0.8)],
            [c(0.0, 0.8), c(0.6, 0.0)]
        ];
        let xq = x.dot(&q);
        let r1 = sample_correlation(&x);
        let r2 = sample_correlation(&xq);
        for (u, v) in r1.iter().zip(r2.iter()) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn geometry_config_roundtrip() {
        let planar = PlanarArray::from_config_str("# two sensors\n0.0 0.0\n0.5 1.2\n").unwrap();
        assert_eq!(planar.sensors().len(), 2);
        let ula = PlanarArray::from_config_str("ula 7").unwrap();
        assert_eq!(ula.num_sensors(), 7);
        assert!(PlanarArray::from_config_str("junk line").is_err());
    }
}
