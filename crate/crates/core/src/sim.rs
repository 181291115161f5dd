//! Coupled Wiener-process degradation simulation.
//!
//! Each parameter follows `X(t) = X0 + a*L(t) + sigma*B(t) + eps` with random
//! initial value, random-effect drift, power-law time scale `L(t) = t^gamma`
//! and i.i.d. per-measurement error. Causal coupling adds `g(parent) =
//! alpha * parent^beta` evaluated at the same measurement time, in keeping
//! with the steady-state reading of dependence between degradation paths.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DegradationDataset, UnitPath};
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::seeds;

/// Wiener-model parameters for a single degradation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerParams {
    /// Mean of the random initial value.
    pub mu_x0: f64,
    /// Standard deviation of the random initial value.
    pub sigma_x0: f64,
    /// Mean drift.
    pub mu_a: f64,
    /// Coefficient of variation of the drift: sigma_a = v_a * |mu_a|.
    pub v_a: f64,
    /// Diffusion coefficient of the Brownian term.
    pub sigma: f64,
    /// Standard deviation of the per-measurement error.
    pub sigma_eps: f64,
    /// Time-scale exponent of L(t) = t^gamma.
    pub gamma: f64,
}

impl WienerParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_x0 < 0.0 || self.v_a < 0.0 || self.sigma < 0.0 || self.sigma_eps < 0.0 {
            return Err(Error::Input(
                "sigma_x0, v_a, sigma and sigma_eps must be nonnegative".into(),
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Input("gamma must be positive".into()));
        }
        Ok(())
    }

    /// Drift standard deviation. v_a is a coefficient of variation, so the
    /// magnitude of the mean is used even when the drift is negative.
    pub fn sigma_a(&self) -> f64 {
        self.v_a * self.mu_a.abs()
    }
}

/// Causal influence of one parameter on another: `g(x) = alpha * x^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalEdge {
    pub parent: usize,
    pub child: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl CausalEdge {
    fn eval(&self, x: f64, unit: usize, time: f64) -> Result<f64> {
        let y = if self.beta == 1.0 {
            self.alpha * x
        } else {
            if x <= 0.0 && self.beta.fract() != 0.0 {
                return Err(Error::SimulationDomain {
                    msg: format!(
                        "cannot raise non-positive parent value {x} to fractional power {}",
                        self.beta
                    ),
                    unit,
                    time,
                });
            }
            self.alpha * x.powf(self.beta)
        };
        if !y.is_finite() {
            return Err(Error::SimulationDomain {
                msg: format!("edge function produced non-finite value from parent {x}"),
                unit,
                time,
            });
        }
        Ok(y)
    }
}

/// Full generative description of a coupled degradation system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub params: Vec<WienerParams>,
    pub edges: Vec<CausalEdge>,
    /// Measurement interval.
    pub dt: f64,
    /// Measurements per unit (time grid t_j = j*dt, j = 0..m-1).
    pub m: usize,
    pub labels: Vec<String>,
    /// When true, the edge function reads the parent's observed value
    /// (latent + measurement error) instead of the latent value. Off by
    /// default: measurement error is an observation artifact and should not
    /// propagate physically.
    #[serde(default)]
    pub couple_observed: bool,
}

impl SystemSpec {
    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Input("system needs at least one parameter".into()));
        }
        if self.labels.len() != k {
            return Err(Error::Input(format!(
                "{} labels for {} parameters",
                self.labels.len(),
                k
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Input("dt must be positive".into()));
        }
        if self.m < 2 {
            return Err(Error::Input("m must be at least 2".into()));
        }
        for p in &self.params {
            p.validate()?;
        }
        for e in &self.edges {
            if e.parent >= k || e.child >= k || e.parent == e.child {
                return Err(Error::Input(format!(
                    "edge {} -> {} invalid for k={k}",
                    e.parent, e.child
                )));
            }
        }
        self.topo_order()?;
        Ok(())
    }

    /// Topological order of the parameter coupling DAG.
    pub fn topo_order(&self) -> Result<Vec<usize>> {
        let k = self.k();
        let mut indeg = vec![0usize; k];
        for e in &self.edges {
            indeg[e.child] += 1;
        }
        let mut ready: Vec<usize> = (0..k).filter(|&v| indeg[v] == 0).collect();
        ready.sort_unstable();
        let mut order = Vec::with_capacity(k);
        while let Some(v) = ready.pop() {
            order.push(v);
            for e in &self.edges {
                if e.parent == v {
                    indeg[e.child] -= 1;
                    if indeg[e.child] == 0 {
                        ready.push(e.child);
                    }
                }
            }
        }
        if order.len() != k {
            return Err(Error::Input("edge list contains a directed cycle".into()));
        }
        Ok(order)
    }

    /// The generating DAG over the parameter labels.
    pub fn truth_graph(&self) -> Result<CausalGraph> {
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.parent, e.child)).collect();
        CausalGraph::from_edges(self.labels.clone(), &pairs)
    }

    /// Two independent paths: the baseline configuration for independence
    /// benchmarks (X1 starts at 200 drifting -0.04 per step unit, X2 at 200
    /// drifting -0.05, both with unit time scale).
    pub fn independent_pair() -> SystemSpec {
        SystemSpec {
            params: vec![
                WienerParams {
                    mu_x0: 200.0,
                    sigma_x0: 1.0,
                    mu_a: -0.04,
                    v_a: 0.05,
                    sigma: 0.1,
                    sigma_eps: 0.4,
                    gamma: 1.0,
                },
                WienerParams {
                    mu_x0: 200.0,
                    sigma_x0: 1.0,
                    mu_a: -0.05,
                    v_a: 0.05,
                    sigma: 0.1,
                    sigma_eps: 0.4,
                    gamma: 1.0,
                },
            ],
            edges: vec![],
            dt: 20.0,
            m: 51,
            labels: vec!["X1".into(), "X2".into()],
            couple_observed: false,
        }
    }

    /// Two causally coupled paths: same as [`SystemSpec::independent_pair`]
    /// except X2 starts at zero deterministically and receives
    /// `g(X1) = alpha * X1^beta` with alpha = beta = 1.
    pub fn causal_pair() -> SystemSpec {
        let mut spec = SystemSpec::independent_pair();
        spec.params[1].mu_x0 = 0.0;
        spec.params[1].sigma_x0 = 0.0;
        spec.edges = vec![CausalEdge {
            parent: 0,
            child: 1,
            alpha: 1.0,
            beta: 1.0,
        }];
        spec
    }
}

/// Power-law time scale `L(t) = t^gamma`.
pub fn time_scale(t: f64, gamma: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    if gamma == 1.0 {
        Ok(t)
    } else {
        Ok(t.powf(gamma))
    }
}

struct ParamDraws {
    latent: Vec<f64>,
    eps: Vec<f64>,
}

/// Draws one parameter's path on the grid from its own RNG substream.
/// Draw order is fixed: X0, a, m-1 Brownian increments, m measurement errors.
fn draw_param(p: &WienerParams, dt: f64, m: usize, rng: &mut ChaCha8Rng) -> Result<ParamDraws> {
    let normal = |mu: f64, sd: f64| {
        Normal::new(mu, sd).map_err(|e| Error::Numerical(format!("normal({mu},{sd}): {e}")))
    };
    let x0 = normal(p.mu_x0, p.sigma_x0)?.sample(rng);
    let a = normal(p.mu_a, p.sigma_a())?.sample(rng);
    let brownian_step = normal(0.0, dt.sqrt())?;
    let mut latent = Vec::with_capacity(m);
    let mut b = 0.0;
    for j in 0..m {
        if j > 0 {
            b += brownian_step.sample(rng);
        }
        let t = j as f64 * dt;
        latent.push(x0 + a * time_scale(t, p.gamma)? + p.sigma * b);
    }
    let eps_dist = normal(0.0, p.sigma_eps)?;
    let eps = (0..m).map(|_| eps_dist.sample(rng)).collect();
    Ok(ParamDraws { latent, eps })
}

/// Simulates `n` units of the coupled system. Deterministic given
/// `(spec, n, seed)`: each (unit, parameter) pair consumes an independent
/// RNG substream derived from the seed, so results do not depend on
/// evaluation order and single units can be regenerated in isolation.
pub fn simulate_system(spec: &SystemSpec, n: usize, seed: u64) -> Result<DegradationDataset> {
    spec.validate()?;
    if n < 1 {
        return Err(Error::Input("unit count must be at least 1".into()));
    }
    let k = spec.k();
    let m = spec.m;
    let order = spec.topo_order()?;

    let mut units = Vec::with_capacity(n);
    for unit in 0..n {
        let mut draws: Vec<Option<ParamDraws>> = (0..k).map(|_| None).collect();
        for &l in &order {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[unit as u64, l as u64]));
            draws[l] = Some(draw_param(&spec.params[l], spec.dt, m, &mut rng)?);
        }

        // Latent values with coupling applied in topological order.
        let mut latent = Array2::<f64>::zeros((m, k));
        let mut observed = Array2::<f64>::zeros((m, k));
        for &l in &order {
            let d = draws[l].as_ref().unwrap();
            for j in 0..m {
                let t = j as f64 * spec.dt;
                let mut v = d.latent[j];
                for e in spec.edges.iter().filter(|e| e.child == l) {
                    let parent_value = if spec.couple_observed {
                        observed[(j, e.parent)]
                    } else {
                        latent[(j, e.parent)]
                    };
                    v += e.eval(parent_value, unit, t)?;
                }
                latent[(j, l)] = v;
                observed[(j, l)] = v + d.eps[j];
            }
        }

        let times: Vec<f64> = (0..m).map(|j| j as f64 * spec.dt).collect();
        units.push(UnitPath {
            id: unit as u32 + 1,
            times,
            values: observed,
        });
    }
    DegradationDataset::new(spec.labels.clone(), units, Some(seed))
}

/// Component specification for the band-pass-filter case: three resistors and
/// two capacitors drifting over a ten-year horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterComponentSpec {
    /// R1, R2, R3 (ohms), C1, C2 (farads).
    pub components: Vec<WienerParams>,
    pub n_units: usize,
    /// Recording interval in years.
    pub dt_years: f64,
    /// Observation horizon in years.
    pub horizon_years: f64,
    /// Standard deviation of the center-frequency estimation error in Hz.
    /// Peak location from a frequency sweep is sharp, so the default is
    /// exact.
    #[serde(default = "default_sigma_f0")]
    pub sigma_f0: f64,
    /// Standard deviation of the gain estimation error in dB. The peak
    /// amplitude reading inherits response-magnitude measurement error; the
    /// default reflects a realistic sweep-readout resolution.
    #[serde(default = "default_sigma_gain")]
    pub sigma_gain: f64,
    /// Emit latent columns: no component measurement error and no
    /// performance estimation error. Off by default; used to verify that
    /// the emitted f0/gain columns are recomputable from the components.
    #[serde(default)]
    pub emit_latent: bool,
    /// Compute f0/gain from the recorded (measurement-error-bearing)
    /// component values instead of the latent physical ones.
    #[serde(default = "default_true")]
    pub performance_from_observed: bool,
}

fn default_sigma_f0() -> f64 {
    0.0
}

fn default_sigma_gain() -> f64 {
    0.15
}

fn default_true() -> bool {
    true
}

pub const FILTER_LABELS: [&str; 7] = ["R1", "R2", "R3", "C1", "C2", "f0", "gain"];

impl FilterComponentSpec {
    /// Component drifts sized so resistors rise about 20% and capacitors fall
    /// about 30% over ten years, recorded every half year on 20 units.
    pub fn standard() -> FilterComponentSpec {
        let comp = |mu_x0: f64, sigma_x0: f64, mu_a: f64, sigma: f64, sigma_eps: f64| WienerParams {
            mu_x0,
            sigma_x0,
            mu_a,
            v_a: 0.01,
            sigma,
            sigma_eps,
            gamma: 1.0,
        };
        FilterComponentSpec {
            components: vec![
                comp(5000.0, 250.0, 100.0, 100.0, 25.0),
                comp(15000.0, 750.0, 300.0, 300.0, 75.0),
                comp(25000.0, 1250.0, 500.0, 500.0, 125.0),
                comp(8e-10, 8e-11, -2.4e-11, 1.6e-11, 4e-12),
                comp(1.2e-9, 1.2e-10, -3.6e-11, 2.4e-11, 6e-12),
            ],
            n_units: 20,
            dt_years: 0.5,
            horizon_years: 10.0,
            sigma_f0: default_sigma_f0(),
            sigma_gain: default_sigma_gain(),
            emit_latent: false,
            performance_from_observed: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.len() != 5 {
            return Err(Error::Input("filter spec needs exactly 5 components".into()));
        }
        for c in &self.components {
            c.validate()?;
        }
        if self.n_units < 1 {
            return Err(Error::Input("filter spec needs at least one unit".into()));
        }
        if !(self.dt_years > 0.0) || !(self.horizon_years >= self.dt_years) {
            return Err(Error::Input("invalid filter time grid".into()));
        }
        if self.sigma_f0 < 0.0 || self.sigma_gain < 0.0 {
            return Err(Error::Input("estimation error sds must be nonnegative".into()));
        }
        Ok(())
    }

    fn measurement_count(&self) -> usize {
        (self.horizon_years / self.dt_years).round() as usize + 1
    }

    /// The known causal structure: every component drives f0; every component
    /// except R2 drives the gain.
    pub fn truth_graph() -> CausalGraph {
        let labels: Vec<String> = FILTER_LABELS.iter().map(|s| s.to_string()).collect();
        CausalGraph::from_edges(
            labels,
            &[
                (0, 5),
                (1, 5),
                (2, 5),
                (3, 5),
                (4, 5),
                (0, 6),
                (2, 6),
                (3, 6),
                (4, 6),
            ],
        )
        .expect("static truth graph")
    }
}

/// Center frequency of the multiple-feedback band-pass stage in Hz.
pub fn center_frequency(r1: f64, r2: f64, r3: f64, c1: f64, c2: f64) -> f64 {
    ((r1 + r2) / (r1 * r2 * r3 * c1 * c2)).sqrt() / (2.0 * std::f64::consts::PI)
}

/// Peak gain of the stage in dB.
pub fn peak_gain(r1: f64, r3: f64, c1: f64, c2: f64) -> f64 {
    20.0 * (c2 * r3 / (r1 * (c1 + c2))).log10()
}

/// Simulates the filter case: five independent component paths plus the two
/// performance parameters computed from them at each measurement time.
/// Returns a 7-parameter dataset (R1, R2, R3, C1, C2, f0, gain).
pub fn simulate_filter_case(spec: &FilterComponentSpec, seed: u64) -> Result<DegradationDataset> {
    spec.validate()?;
    let m = spec.measurement_count();

    // Component streams are drawn exactly as simulate_system would draw
    // them, keeping latent values available alongside the observed ones.
    // The performance columns consume their own substreams (tags 5 and 6).
    let mut units = Vec::with_capacity(spec.n_units);
    for unit in 0..spec.n_units {
        let mut latent = Array2::<f64>::zeros((m, 5));
        let mut observed = Array2::<f64>::zeros((m, 5));
        for l in 0..5 {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[unit as u64, l as u64]));
            let d = draw_param(&spec.components[l], spec.dt_years, m, &mut rng)?;
            for j in 0..m {
                latent[(j, l)] = d.latent[j];
                observed[(j, l)] = d.latent[j] + d.eps[j];
            }
        }
        let mut perf_noise = Array2::<f64>::zeros((m, 2));
        if !spec.emit_latent {
            for (col, sd) in [(0usize, spec.sigma_f0), (1usize, spec.sigma_gain)] {
                let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                    seed,
                    &[unit as u64, 5 + col as u64],
                ));
                let dist = Normal::new(0.0, sd)
                    .map_err(|e| Error::Numerical(format!("normal(0,{sd}): {e}")))?;
                for j in 0..m {
                    perf_noise[(j, col)] = dist.sample(&mut rng);
                }
            }
        }

        let mut values = Array2::<f64>::zeros((m, 7));
        for j in 0..m {
            let t = j as f64 * spec.dt_years;
            let perf_src = if spec.performance_from_observed && !spec.emit_latent {
                &observed
            } else {
                &latent
            };
            for l in 0..5 {
                let v = perf_src[(j, l)];
                if v <= 0.0 {
                    return Err(Error::SimulationDomain {
                        msg: format!("non-physical {} value {v}", FILTER_LABELS[l]),
                        unit,
                        time: t,
                    });
                }
                values[(j, l)] = if spec.emit_latent {
                    latent[(j, l)]
                } else {
                    observed[(j, l)]
                };
            }
            let (r1, r2, r3, c1, c2) = (
                perf_src[(j, 0)],
                perf_src[(j, 1)],
                perf_src[(j, 2)],
                perf_src[(j, 3)],
                perf_src[(j, 4)],
            );
            values[(j, 5)] = center_frequency(r1, r2, r3, c1, c2) + perf_noise[(j, 0)];
            values[(j, 6)] = peak_gain(r1, r3, c1, c2) + perf_noise[(j, 1)];
        }

        let times: Vec<f64> = (0..m).map(|j| j as f64 * spec.dt_years).collect();
        units.push(UnitPath {
            id: unit as u32 + 1,
            times,
            values,
        });
    }
    DegradationDataset::new(
        FILTER_LABELS.iter().map(|s| s.to_string()).collect(),
        units,
        Some(seed),
    )
}
