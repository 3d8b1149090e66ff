//! Benchmark data generation: zero-order-hold discretization, three-level
//! excitation, ARX simulation and measurement corruption.

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::ExperimentData;
use crate::error::{Error, Result};

/// Continuous-time `ẋ = Ax + Bu`, `z = Cx + Du` with scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousStateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl ContinuousStateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput(format!("A is {}x{}, not square", n, a.ncols())));
        }
        let m = b.ncols();
        if b.nrows() != n || c.nrows() != 1 || c.ncols() != n || d.nrows() != 1 || d.ncols() != m {
            return Err(Error::InvalidInput(format!(
                "inconsistent dimensions: A {n}x{n}, B {}x{}, C {}x{}, D {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Controllable canonical realization of `num / den` (SISO), with `den`
    /// monic and coefficients listed from the highest power down.
    pub fn from_transfer_function(num: &[f64], den: &[f64]) -> Result<Self> {
        if den.is_empty() || den[0] == 0.0 {
            return Err(Error::InvalidInput("denominator must have a nonzero leading coefficient".into()));
        }
        let n = den.len() - 1;
        if num.len() > n {
            return Err(Error::InvalidInput("transfer function must be strictly proper".into()));
        }
        let lead = den[0];
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den[n - j] / lead;
        }
        let mut b = DMatrix::zeros(n, 1);
        b[(n - 1, 0)] = 1.0;
        let mut c = DMatrix::zeros(1, n);
        for (k, &v) in num.iter().rev().enumerate() {
            c[(0, k)] = v / lead;
        }
        Self::new(a, b, c, DMatrix::zeros(1, 1))
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// `G(s) = 160 / ((s+10)(s² + 0.8s + 16))`.
pub fn benchmark_plant() -> ContinuousStateSpace {
    // (s+10)(s²+0.8s+16) = s³ + 10.8s² + 24s + 160
    ContinuousStateSpace::from_transfer_function(&[160.0], &[1.0, 10.8, 24.0, 160.0])
        .expect("benchmark plant is well formed")
}

pub const BENCHMARK_SAMPLE_TIME: f64 = 0.1;

/// Discrete-time state space `x(k+1) = Ad x(k) + Bd u(k)`, `z(k) = C x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateSpace {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub sample_time: f64,
}

/// Exact ZOH sampling through the exponential of `[[A, B], [0, 0]]·Ts`.
pub fn zoh_state_space(sys: &ContinuousStateSpace, ts: f64) -> Result<DiscreteStateSpace> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::InvalidInput(format!("sample time must be positive, got {ts}")));
    }
    let n = sys.order();
    let m = sys.input_dim();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&sys.a * ts));
    aug.view_mut((0, n), (n, m)).copy_from(&(&sys.b * ts));
    let e = aug.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence(0));
    }
    Ok(DiscreteStateSpace {
        ad: e.view((0, 0), (n, n)).into_owned(),
        bd: e.view((0, n), (n, m)).into_owned(),
        c: sys.c.clone(),
        sample_time: ts,
    })
}

/// Coefficients of `det(zI − M)`, lowest power first (monic, length n+1).
fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    // Faddeev–LeVerrier
    let n = m.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let eye = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        mk = m * &mk + &eye * coeffs[n - k + 1];
        coeffs[n - k] = -(m * &mk).trace() / k as f64;
    }
    coeffs
}

/// ARX model `z(k+1) = ψ(k)ᵀθ` with
/// `ψ(k) = [z(k) … z(k−o+1), u(k)ᵀ … u(k−o+1)ᵀ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteArxModel {
    pub order: usize,
    pub input_dim: usize,
    pub params: Vec<f64>,
    pub sample_time: f64,
}

impl DiscreteArxModel {
    pub fn new(order: usize, input_dim: usize, params: Vec<f64>, sample_time: f64) -> Result<Self> {
        if order == 0 || input_dim == 0 {
            return Err(Error::InvalidInput("order and input dimension must be positive".into()));
        }
        if params.len() != order + input_dim * order {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                order + input_dim * order,
                params.len()
            )));
        }
        let model = Self {
            order,
            input_dim,
            params,
            sample_time,
        };
        if !model.is_stable() {
            warn!("ARX model has output-lag roots on or outside the unit circle");
        }
        Ok(model)
    }

    pub fn output_lags(&self) -> &[f64] {
        &self.params[..self.order]
    }

    pub fn input_lags(&self) -> &[f64] {
        &self.params[self.order..]
    }

    /// Roots of `zᵒ − a₁zᵒ⁻¹ − … − a_o` all strictly inside the unit circle
    /// (Schur–Cohn recursion).
    pub fn is_stable(&self) -> bool {
        let mut c: Vec<f64> = std::iter::once(1.0).chain(self.output_lags().iter().map(|a| -a)).collect();
        while c.len() > 1 {
            let n = c.len() - 1;
            let k = c[n] / c[0];
            if !(k.abs() < 1.0) {
                return false;
            }
            c = (0..n).map(|i| (c[i] - k * c[n - i]) / (1.0 - k * k)).collect();
        }
        true
    }

    pub fn regressor_len(&self) -> usize {
        self.order + self.input_dim * self.order
    }

    /// Observer canonical realization: the first state is the output.
    pub fn observer_form(&self) -> DiscreteStateSpace {
        let (o, m) = (self.order, self.input_dim);
        let mut ad = DMatrix::zeros(o, o);
        let mut bd = DMatrix::zeros(o, m);
        for i in 0..o {
            ad[(i, 0)] = self.params[i];
            if i + 1 < o {
                ad[(i, i + 1)] = 1.0;
            }
            for j in 0..m {
                bd[(i, j)] = self.params[o + i * m + j];
            }
        }
        let mut c = DMatrix::zeros(1, o);
        c[(0, 0)] = 1.0;
        DiscreteStateSpace {
            ad,
            bd,
            c,
            sample_time: self.sample_time,
        }
    }
}

impl DiscreteStateSpace {
    /// Input–output ARX form of order `n` (requires no direct feedthrough).
    pub fn to_arx(&self) -> Result<DiscreteArxModel> {
        let n = self.ad.nrows();
        let m = self.bd.ncols();
        let den = characteristic_polynomial(&self.ad);
        let mut params = vec![0.0; n + m * n];
        // z(k+1) = −a₁z(k) − … ; den = zⁿ + a₁zⁿ⁻¹ + … + aₙ
        for i in 1..=n {
            params[i - 1] = -den[n - i];
        }
        for j in 0..m {
            let bj = self.bd.column(j).into_owned();
            let shifted = &self.ad - &bj * &self.c;
            let num = characteristic_polynomial(&shifted);
            for i in 1..=n {
                params[n + (i - 1) * m + j] = num[n - i] - den[n - i];
            }
        }
        DiscreteArxModel::new(n, m, params, self.sample_time)
    }
}

/// ZOH discretization followed by conversion to ARX form of order `n`.
pub fn zoh_discretize(sys: &ContinuousStateSpace, ts: f64) -> Result<DiscreteArxModel> {
    if sys.d.iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidInput(
            "direct feedthrough (D ≠ 0) has no ARX form with lagged inputs".into(),
        ));
    }
    zoh_state_space(sys, ts)?.to_arx()
}

/// Piecewise-constant excitation: a level is drawn uniformly from `levels`
/// every `hold` samples.
pub fn generate_three_level_input(length: usize, hold: usize, levels: &[f64], seed: u64) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("level set is empty".into()));
    }
    if length == 0 || hold == 0 {
        return Err(Error::InvalidInput("length and hold must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(length);
    while out.len() < length {
        let level = levels[rng.random_range(0..levels.len())];
        let take = hold.min(length - out.len());
        out.extend(std::iter::repeat_n(level, take));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// No corruption; `d_bar` may be zero.
    Noiseless,
    UniformMeasurement,
    GaussianMeasurement,
    GaussianProcessAndMeasurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Declared measurement-noise bound used by identification.
    pub d_bar: f64,
    pub sigma_d: f64,
    pub sigma_w: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, d_bar: f64, sigma_d: f64, sigma_w: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            d_bar,
            sigma_d,
            sigma_w,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::Noiseless,
            d_bar: 0.0,
            sigma_d: 0.0,
            sigma_w: 0.0,
            seed: 0,
        }
    }

    pub fn uniform(d_bar: f64, seed: u64) -> Result<Self> {
        Self::new(NoiseKind::UniformMeasurement, d_bar, 0.0, 0.0, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bound_ok = match self.kind {
            NoiseKind::Noiseless => self.d_bar >= 0.0,
            _ => self.d_bar > 0.0,
        };
        if !bound_ok || !self.d_bar.is_finite() {
            return Err(Error::InvalidInput(format!("noise bound d_bar must be positive, got {}", self.d_bar)));
        }
        if !(self.sigma_d >= 0.0 && self.sigma_w >= 0.0) {
            return Err(Error::InvalidInput("noise standard deviations must be nonnegative".into()));
        }
        Ok(())
    }

    /// Variance of the measurement noise under this spec.
    pub fn measurement_variance(&self) -> f64 {
        match self.kind {
            NoiseKind::Noiseless => 0.0,
            NoiseKind::UniformMeasurement => self.d_bar * self.d_bar / 3.0,
            NoiseKind::GaussianMeasurement | NoiseKind::GaussianProcessAndMeasurement => {
                self.sigma_d * self.sigma_d
            }
        }
    }

    pub fn process_variance(&self) -> f64 {
        match self.kind {
            NoiseKind::GaussianProcessAndMeasurement => self.sigma_w * self.sigma_w,
            _ => 0.0,
        }
    }
}

/// Runs the ARX recursion from `initial_regressor = ψ(−1)`, i.e.
/// `[z(−1) … z(−o), u(−1)ᵀ … u(−o)ᵀ]`, so that `z(0) = ψ(−1)ᵀθ`.
///
/// With process noise the recursion is driven by `ũ(k) + w(k)` while the
/// returned data keep the measured `ũ(k)`.
pub fn simulate_arx(
    model: &DiscreteArxModel,
    inputs: &[Vec<f64>],
    initial_regressor: &[f64],
    noise: &NoiseSpec,
) -> Result<ExperimentData> {
    noise.validate()?;
    let o = model.order;
    let m = model.input_dim;
    if initial_regressor.len() != model.regressor_len() {
        return Err(Error::InvalidInput(format!(
            "initial regressor has length {}, expected {}",
            initial_regressor.len(),
            model.regressor_len()
        )));
    }
    if inputs.len() < o {
        return Err(Error::TooFewSamples {
            needed: o,
            got: inputs.len(),
        });
    }
    if let Some(bad) = inputs.iter().position(|u| u.len() != m) {
        return Err(Error::InvalidInput(format!("input {bad} does not have dimension {m}")));
    }

    let mut meas_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut proc_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    proc_rng.set_stream(1);
    let gauss_d = Normal::new(0.0, noise.sigma_d).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let gauss_w = Normal::new(0.0, noise.sigma_w).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut psi = initial_regressor.to_vec();
    let theta = &model.params;
    let len = inputs.len();
    let mut true_outputs = Vec::with_capacity(len);
    let mut measured = Vec::with_capacity(len);
    for (k, u) in inputs.iter().enumerate() {
        let z: f64 = psi.iter().zip(theta).map(|(a, b)| a * b).sum();
        if !z.is_finite() {
            return Err(Error::NonFinite(k));
        }
        let d = match noise.kind {
            NoiseKind::Noiseless => 0.0,
            NoiseKind::UniformMeasurement => meas_rng.random_range(-noise.d_bar..=noise.d_bar),
            _ => gauss_d.sample(&mut meas_rng),
        };
        true_outputs.push(z);
        measured.push(z + d);

        // shift ψ(k−1) → ψ(k)
        psi.copy_within(0..o - 1, 1);
        psi[0] = z;
        psi.copy_within(o..o + m * (o - 1), o + m);
        for (j, &uj) in u.iter().enumerate() {
            let w = if noise.kind == NoiseKind::GaussianProcessAndMeasurement {
                gauss_w.sample(&mut proc_rng)
            } else {
                0.0
            };
            psi[o + j] = uj + w;
        }
    }
    ExperimentData::new(inputs.to_vec(), true_outputs, measured, model.sample_time)
}

/// The three disturbance scenarios of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Uniform measurement noise in `[−0.2, 0.2]`.
    A,
    /// Gaussian measurement noise, `σ_d² = 0.01`.
    B,
    /// Gaussian process (`σ_w² = 0.001`) and measurement (`σ_d² = 0.01`) noise.
    C,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Scenario::A),
            "b" => Ok(Scenario::B),
            "c" => Ok(Scenario::C),
            other => Err(Error::Config(format!("unknown scenario `{other}` (expected a, b or c)"))),
        }
    }
}

impl Scenario {
    /// Noise spec with the default declared bound (`3σ_d` for Gaussian cases).
    pub fn noise(self, seed: u64) -> NoiseSpec {
        let sigma_d = 0.01f64.sqrt();
        match self {
            Scenario::A => NoiseSpec {
                kind: NoiseKind::UniformMeasurement,
                d_bar: 0.2,
                sigma_d: 0.0,
                sigma_w: 0.0,
                seed,
            },
            Scenario::B => NoiseSpec {
                kind: NoiseKind::GaussianMeasurement,
                d_bar: 3.0 * sigma_d,
                sigma_d,
                sigma_w: 0.0,
                seed,
            },
            Scenario::C => NoiseSpec {
                kind: NoiseKind::GaussianProcessAndMeasurement,
                d_bar: 3.0 * sigma_d,
                sigma_d,
                sigma_w: 0.001f64.sqrt(),
                seed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSpec {
    pub samples: usize,
    pub hold: usize,
    pub input_seed: u64,
    pub noise: NoiseSpec,
}

impl BenchmarkSpec {
    pub fn new(scenario: Scenario, samples: usize, seed: u64) -> Self {
        Self {
            samples,
            hold: 4,
            input_seed: seed,
            noise: scenario.noise(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        }
    }
}

/// Benchmark experiment: the plant sampled at 0.1 s, driven by a random
/// three-level input held for 4 samples. `o` warm-up samples from a zero
/// initial regressor are simulated and dropped.
pub fn generate_benchmark(spec: &BenchmarkSpec) -> Result<ExperimentData> {
    let model = zoh_discretize(&benchmark_plant(), BENCHMARK_SAMPLE_TIME)?;
    let o = model.order;
    let levels = [-1.0, 0.0, 1.0];
    let u = generate_three_level_input(spec.samples + o, spec.hold, &levels, spec.input_seed)?;
    let inputs: Vec<Vec<f64>> = u.into_iter().map(|v| vec![v]).collect();
    let init = vec![0.0; model.regressor_len()];
    let data = simulate_arx(&model, &inputs, &init, &spec.noise)?;
    Ok(data.slice(o, data.len()))
}
