//! The measurement side: SPAM renormalization, binomial shot noise, and the
//! exponential-loss and cosine fits used to read rates off time series.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

/// State-preparation-and-measurement ceiling `p_u` and floor `p_l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamParams {
    pub p_u: f64,
    pub p_l: f64,
}

/// A renormalized probability; `in_range` is false when noise pushed it
/// outside [0, 1]. The value is never clamped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Renormalized {
    pub value: f64,
    pub in_range: bool,
}

impl SpamParams {
    pub fn new(p_u: f64, p_l: f64) -> Result<Self> {
        let s = Self { p_u, p_l };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_l && self.p_l < self.p_u && self.p_u <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "spam",
                reason: format!("need 0 ≤ p_l < p_u ≤ 1, got p_u={}, p_l={}", self.p_u, self.p_l),
            });
        }
        Ok(())
    }

    /// (p_bare − p_l)/(p_u − p_l)
    pub fn renormalize(&self, p_bare: f64) -> Result<Renormalized> {
        let span = self.p_u - self.p_l;
        if !(span > 0.0) {
            return Err(Error::InvalidParameter { name: "spam", reason: "p_u must exceed p_l".into() });
        }
        let value = (p_bare - self.p_l) / span;
        Ok(Renormalized { value, in_range: (0.0..=1.0).contains(&value) })
    }

    /// p_l + (p_u − p_l)·p_ideal
    pub fn forward_bare(&self, p_ideal: f64) -> f64 {
        self.p_l + (self.p_u - self.p_l) * p_ideal
    }

    /// One-sigma error of [`Self::renormalize`] from independent errors on
    /// the bare value and on both SPAM levels, combined linearly in
    /// quadrature.
    pub fn renormalize_sigma(&self, p_bare: f64, sigma_bare: f64, sigma_u: f64, sigma_l: f64) -> f64 {
        let span = self.p_u - self.p_l;
        let x = (p_bare - self.p_l) / span;
        let d_bare = sigma_bare / span;
        let d_u = x * sigma_u / span;
        let d_l = (1.0 - x) * sigma_l / span;
        (d_bare * d_bare + d_u * d_u + d_l * d_l).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Binomial(n_shots, p)/n_shots with its standard error, drawn from `rng`.
pub fn sample_shots_with(p: f64, n_shots: u64, rng: &mut ChaCha8Rng) -> Result<ShotEstimate> {
    if n_shots == 0 {
        return Err(Error::InvalidParameter { name: "n_shots", reason: "must be positive".into() });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter { name: "p", reason: format!("{p} is not a probability") });
    }
    let k = Binomial::new(n_shots, p)
        .map_err(|e| Error::InvalidParameter { name: "p", reason: e.to_string() })?
        .sample(rng);
    let est = k as f64 / n_shots as f64;
    Ok(ShotEstimate { estimate: est, std_error: (est * (1.0 - est) / n_shots as f64).sqrt() })
}

/// [`sample_shots_with`] on a fresh generator seeded by `seed`.
pub fn sample_shots(p: f64, n_shots: u64, seed: u64) -> Result<ShotEstimate> {
    sample_shots_with(p, n_shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// One-sigma uncertainty.
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params: Vec<FitParam>,
    /// √(Σ residual²), weighted when sigmas were supplied.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.value)
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.sigma)
    }
}

/// Fit data: times (μs), values, optional one-sigma errors per point.
#[derive(Clone, Copy, Debug)]
pub struct FitData<'a> {
    pub t: &'a [f64],
    pub y: &'a [f64],
    pub sigma: Option<&'a [f64]>,
}

impl<'a> FitData<'a> {
    pub fn new(t: &'a [f64], y: &'a [f64]) -> Self {
        Self { t, y, sigma: None }
    }

    pub fn with_sigma(mut self, sigma: &'a [f64]) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn from_series(series: &'a TimeSeries, track: &str) -> Result<Self> {
        let y = series.track(track).ok_or_else(|| Error::FitInput(format!("no track `{track}`")))?;
        Ok(Self::new(&series.times, y))
    }

    fn check(&self, min_points: usize) -> Result<()> {
        if self.t.len() != self.y.len() {
            return Err(Error::FitInput(format!("{} times but {} values", self.t.len(), self.y.len())));
        }
        if let Some(s) = self.sigma {
            if s.len() != self.t.len() || s.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::FitInput("sigmas must be positive, one per point".into()));
            }
        }
        if self.t.len() < min_points {
            return Err(Error::FitInput(format!("need at least {min_points} points, got {}", self.t.len())));
        }
        if self.t.iter().chain(self.y).any(|v| !v.is_finite()) {
            return Err(Error::FitInput("non-finite data".into()));
        }
        Ok(())
    }

    fn weight(&self, i: usize) -> f64 {
        self.sigma.map_or(1.0, |s| 1.0 / s[i])
    }
}

struct LmOutcome {
    theta: Vec<f64>,
    cov: DMatrix<f64>,
    rss: f64,
    converged: bool,
    iterations: usize,
}

/// Damped Gauss-Newton (Levenberg–Marquardt) on weighted residuals.
/// `model(t, θ, grad)` returns f(t; θ) and fills ∂f/∂θ.
fn levenberg_marquardt<F>(data: &FitData, theta0: &[f64], model: F) -> LmOutcome
where
    F: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let n = data.t.len();
    let p = theta0.len();
    let mut theta = theta0.to_vec();
    let mut grad = vec![0.0; p];
    let eval = |th: &[f64], grad: &mut [f64], jac: Option<&mut DMatrix<f64>>, res: &mut DVector<f64>| {
        let mut jac = jac;
        for i in 0..n {
            let w = data.weight(i);
            let f = model(data.t[i], th, grad);
            res[i] = w * (data.y[i] - f);
            if let Some(j) = jac.as_deref_mut() {
                for k in 0..p {
                    j[(i, k)] = w * grad[k];
                }
            }
        }
        res.norm_squared()
    };
    let mut jac = DMatrix::zeros(n, p);
    let mut res = DVector::zeros(n);
    let mut trial = DVector::zeros(n);
    let mut rss = eval(&theta, &mut grad, Some(&mut jac), &mut res);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    const MAX_ITER: usize = 500;
    while iterations < MAX_ITER {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let r = eval(&cand, &mut grad, None, &mut trial);
            if r.is_finite() && r <= rss {
                let small_step = step.iter().zip(&cand).all(|(s, t)| s.abs() <= 1e-12 * (t.abs() + 1e-12));
                let small_gain = rss - r <= 1e-15 * rss.max(f64::MIN_POSITIVE);
                theta = cand;
                rss = eval(&theta, &mut grad, Some(&mut jac), &mut res);
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small_step || small_gain || rss == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !improved {
            // no downhill step at any damping: a minimum to working precision
            converged = true;
            break;
        }
    }
    let jtj = jac.transpose() * &jac;
    let dof = n.saturating_sub(p).max(1) as f64;
    let scale = rss / dof;
    let cov = jtj
        .try_inverse()
        .map(|m| m * scale)
        .unwrap_or_else(|| DMatrix::from_element(p, p, f64::INFINITY));
    LmOutcome { theta, cov, rss, converged, iterations }
}

fn params(names: &[&str], o: &LmOutcome) -> Vec<FitParam> {
    names
        .iter()
        .enumerate()
        .map(|(k, n)| FitParam { name: n.to_string(), value: o.theta[k], sigma: o.cov[(k, k)].abs().sqrt() })
        .collect()
}

/// Least-squares fit of A·(1 − e^{−2πΓt}); returns `A` and `gamma_mhz` (Γ).
pub fn fit_exponential_loss(data: &FitData) -> Result<FitResult> {
    data.check(4)?;
    let ymax = data.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(ymax > 0.0) {
        return Err(Error::FitInput("loss data never rises above zero".into()));
    }
    // log-linear start: ln(1 − y/A₀) = −2πΓt through the origin
    let a0 = ymax * 1.05;
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &y) in data.t.iter().zip(data.y) {
        let u = 1.0 - y / a0;
        if u > 0.0 && u < 1.0 && t > 0.0 {
            num += t * (-u.ln());
            den += t * t;
        }
    }
    let g0 = if den > 0.0 { num / den / (2.0 * PI) } else { 1.0 / (2.0 * PI * data.t.last().copied().unwrap_or(1.0)) };
    let model = |t: f64, th: &[f64], g: &mut [f64]| {
        let e = (-2.0 * PI * th[1] * t).exp();
        g[0] = 1.0 - e;
        g[1] = th[0] * 2.0 * PI * t * e;
        th[0] * (1.0 - e)
    };
    let o = levenberg_marquardt(data, &[a0, g0.max(1e-9)], model);
    let converged = o.converged && o.rss.is_finite() && o.theta.iter().all(|v| v.is_finite());
    Ok(FitResult {
        model: "exp_loss".into(),
        params: params(&["A", "gamma_mhz"], &o),
        residual_norm: o.rss.sqrt(),
        converged,
        iterations: o.iterations,
    })
}

/// Linear least squares of y on [1, cos 4πνt, sin 4πνt] at fixed ν;
/// returns (rss, B, C, φ) with y ≈ B + C cos(4πνt + φ).
fn linear_cosine(data: &FitData, nu: f64) -> Option<(f64, f64, f64, f64)> {
    let n = data.t.len();
    let x = DMatrix::from_fn(n, 3, |i, k| {
        let w = data.weight(i);
        let arg = 4.0 * PI * nu * data.t[i];
        w * [1.0, arg.cos(), arg.sin()][k]
    });
    let y = DVector::from_fn(n, |i, _| data.weight(i) * data.y[i]);
    let beta = (x.transpose() * &x).cholesky()?.solve(&(x.transpose() * &y));
    let rss = (y - x * &beta).norm_squared();
    // a cos + b sin = C cos(θ + φ) with C = √(a² + b²), φ = atan2(−b, a)
    let (a, b) = (beta[1], beta[2]);
    Some((rss, beta[0], a.hypot(b), (-b).atan2(a)))
}

/// Fit of B + C·cos(4πνt + φ); ν is the coupling w/h in MHz, so the
/// population itself oscillates at 2ν. Returns `B`, `C`, `nu_mhz`, `phi`.
/// Constant data leave ν unidentified and the fit is marked non-converged.
pub fn fit_cosine(data: &FitData) -> Result<FitResult> {
    data.check(6)?;
    let t0 = data.t.iter().copied().fold(f64::INFINITY, f64::min);
    let t1 = data.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(Error::FitInput("times must span a positive interval".into()));
    }
    let mean = data.y.iter().sum::<f64>() / data.y.len() as f64;
    let spread = data.y.iter().map(|y| (y - mean).abs()).fold(0.0, f64::max);
    let names = ["B", "C", "nu_mhz", "phi"];
    if spread <= 1e-12 * mean.abs().max(1.0) {
        let params = names
            .iter()
            .zip([mean, 0.0, f64::NAN, f64::NAN])
            .map(|(n, v)| FitParam { name: n.to_string(), value: v, sigma: f64::INFINITY })
            .collect();
        return Ok(FitResult { model: "cosine".into(), params, residual_norm: 0.0, converged: false, iterations: 0 });
    }

    // Fourier-style start: best linear fit over a fine frequency grid from
    // a quarter of the span up to the Nyquist limit of the mean sampling.
    let dt = span / (data.t.len() - 1) as f64;
    let nu_max = 1.0 / (4.0 * dt);
    let nu_min = 1.0 / (8.0 * span);
    let step = 1.0 / (64.0 * span);
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    let mut nu = nu_min;
    while nu <= nu_max {
        if let Some((rss, b, c, phi)) = linear_cosine(data, nu) {
            if best.is_none_or(|x| rss < x.0) {
                best = Some((rss, b, c, phi, nu));
            }
        }
        nu += step;
    }
    let (_, b0, c0, phi0, nu0) = best.ok_or_else(|| Error::FitInput("no usable frequency".into()))?;

    let model = |t: f64, th: &[f64], g: &mut [f64]| {
        let arg = 4.0 * PI * th[2] * t + th[3];
        let (s, c) = arg.sin_cos();
        g[0] = 1.0;
        g[1] = c;
        g[2] = -th[1] * s * 4.0 * PI * t;
        g[3] = -th[1] * s;
        th[0] + th[1] * c
    };
    let mut o = levenberg_marquardt(data, &[b0, c0, nu0, phi0], model);
    // canonical form: C ≥ 0, ν ≥ 0, φ ∈ (−π, π]
    if o.theta[2] < 0.0 {
        o.theta[2] = -o.theta[2];
        o.theta[3] = -o.theta[3];
    }
    if o.theta[1] < 0.0 {
        o.theta[1] = -o.theta[1];
        o.theta[3] += PI;
    }
    o.theta[3] = wrap_phase(o.theta[3]);
    let identifiable = o.theta[1] > 1e-9 * spread.max(mean.abs());
    let converged = o.converged && identifiable && o.theta.iter().all(|v| v.is_finite());
    Ok(FitResult {
        model: "cosine".into(),
        params: params(&names, &o),
        residual_norm: o.rss.sqrt(),
        converged,
        iterations: o.iterations,
    })
}

fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}
