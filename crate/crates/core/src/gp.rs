//! Gaussian-process surrogate with a Matérn-5/2 ARD kernel.
//!
//! Inputs are min-max scaled, targets standardised. Hyperparameters are fitted
//! by maximising the log marginal likelihood with a bounded quasi-Newton
//! search in log space from several starting points.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{cho_inverse, cholesky, solve_lower, solve_lower_t};

const SQRT5: f64 = 2.23606797749979;
const LN_2PI: f64 = 1.8378770664093453;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-2, 1e2);
pub const SIGNAL_BOUNDS: (f64, f64) = (1e-3, 20.0);
pub const NOISE_BOUNDS: (f64, f64) = (1e-6, 2.0);
/// Diagonal jitter tried in turn when factorising the Gram matrix.
pub const JITTER: [f64; 6] = [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("expected {expected} input dimensions, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observation {0} is not finite")]
    NonFinite(usize),
    #[error("Gram matrix is not positive definite even with jitter")]
    Cholesky,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl GpHyperparams {
    /// Unit lengthscales, unit signal, noise `1e-2`.
    pub fn default_for(dim: usize) -> GpHyperparams {
        GpHyperparams { lengthscales: vec![1.0; dim], signal_variance: 1.0, noise_variance: 1e-2 }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| libm::log(*l)).collect();
        v.push(libm::log(self.signal_variance));
        v.push(libm::log(self.noise_variance));
        v
    }

    fn from_log(theta: &[f64]) -> GpHyperparams {
        let d = theta.len() - 2;
        GpHyperparams {
            lengthscales: theta[..d].iter().map(|t| libm::exp(*t)).collect(),
            signal_variance: libm::exp(theta[d]),
            noise_variance: libm::exp(theta[d + 1]),
        }
    }
}

fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![libm::log(LENGTHSCALE_BOUNDS.0); dim];
    let mut hi = vec![libm::log(LENGTHSCALE_BOUNDS.1); dim];
    lo.extend([libm::log(SIGNAL_BOUNDS.0), libm::log(NOISE_BOUNDS.0)]);
    hi.extend([libm::log(SIGNAL_BOUNDS.1), libm::log(NOISE_BOUNDS.1)]);
    (lo, hi)
}

fn matern(signal: f64, r: f64) -> f64 {
    let a = SQRT5 * r;
    signal * (1.0 + a + a * a / 3.0) * libm::exp(-a)
}

fn scaled_r2(ls: &[f64], a: &[f64], b: &[f64]) -> f64 {
    ls.iter()
        .zip(a.iter().zip(b))
        .map(|(l, (x, y))| {
            let d = (x - y) / l;
            d * d
        })
        .sum()
}

/// Matérn-5/2 ARD covariance of two raw inputs.
pub fn kernel(h: &GpHyperparams, z: &[f64], z2: &[f64]) -> Result<f64, GpError> {
    for v in [z, z2] {
        if v.len() != h.dim() {
            return Err(GpError::DimensionMismatch { expected: h.dim(), got: v.len() });
        }
    }
    Ok(matern(h.signal_variance, libm::sqrt(scaled_r2(&h.lengthscales, z, z2))))
}

/// Per-dimension affine map of raw inputs onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InputScaling {
    pub fn identity(dim: usize) -> InputScaling {
        InputScaling { lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = self.hi[k] - self.lo[k];
            *o = if w > 0.0 { (z[k] - self.lo[k]) / w } else { z[k] - self.lo[k] };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub z: Vec<f64>,
    pub y: f64,
}

/// Hyperparameter search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Random starting points screened by likelihood.
    pub restarts: usize,
    /// Best starting points refined by the local search.
    pub refine: usize,
    pub max_iters: usize,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig { restarts: 8, refine: 2, max_iters: 40 }
    }
}

/// Serialisable snapshot of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpDump {
    pub observations: Vec<Observation>,
    pub scaling: InputScaling,
    pub hyperparams: GpHyperparams,
    pub y_mean: f64,
    pub y_std: f64,
}

/// A Gaussian process conditioned on data.
#[derive(Debug, Clone)]
pub struct GpModel {
    observations: Vec<Observation>,
    scaling: InputScaling,
    hyper: GpHyperparams,
    /// Scaled inputs, row-major `n x d`.
    x: Vec<f64>,
    /// Standardised targets.
    ys: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

struct Data {
    n: usize,
    d: usize,
    x: Vec<f64>,
    ys: Vec<f64>,
    y_mean: f64,
    y_std: f64,
}

fn prepare(obs: &[Observation], scaling: &InputScaling) -> Result<Data, GpError> {
    let d = scaling.dim();
    let n = obs.len();
    let mut x = vec![0.0; n * d];
    for (i, o) in obs.iter().enumerate() {
        if o.z.len() != d {
            return Err(GpError::DimensionMismatch { expected: d, got: o.z.len() });
        }
        if !o.y.is_finite() || o.z.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite(i));
        }
        scaling.apply(&o.z, &mut x[i * d..(i + 1) * d]);
    }
    let (y_mean, y_std) = if n == 0 {
        (0.0, 1.0)
    } else {
        let mean = obs.iter().map(|o| o.y).sum::<f64>() / n as f64;
        let var = obs.iter().map(|o| (o.y - mean) * (o.y - mean)).sum::<f64>() / n as f64;
        // A lone observation carries no scale; keep unit variance.
        let sd = if n == 1 { 1.0 } else { libm::sqrt(var) };
        (mean, sd.max(1e-6))
    };
    let ys = obs.iter().map(|o| (o.y - y_mean) / y_std).collect();
    Ok(Data { n, d, x, ys, y_mean, y_std })
}

/// Gram matrix without noise.
fn gram(data: &Data, h: &GpHyperparams) -> Vec<f64> {
    let (n, d) = (data.n, data.d);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = h.signal_variance;
        for j in 0..i {
            let r2 = scaled_r2(&h.lengthscales, &data.x[i * d..(i + 1) * d], &data.x[j * d..(j + 1) * d]);
            let v = matern(h.signal_variance, libm::sqrt(r2));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

struct Factor {
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

fn factor(data: &Data, kf: &[f64], noise: f64) -> Option<Factor> {
    let n = data.n;
    for &jitter in &JITTER {
        let mut l = kf.to_vec();
        for i in 0..n {
            l[i * n + i] += noise + jitter;
        }
        if !cholesky(&mut l, n) {
            continue;
        }
        let mut alpha = data.ys.clone();
        solve_lower(&l, n, &mut alpha);
        let quad: f64 = alpha.iter().map(|a| a * a).sum();
        solve_lower_t(&l, n, &mut alpha);
        let logdet: f64 = (0..n).map(|i| libm::log(l[i * n + i])).sum();
        let lml = -0.5 * quad - logdet - 0.5 * n as f64 * LN_2PI;
        return Some(Factor { chol: l, alpha, jitter, lml });
    }
    None
}

/// Log marginal likelihood of standardised data and its gradient with
/// respect to the log hyperparameters.
fn lml_and_grad(data: &Data, h: &GpHyperparams, grad: Option<&mut [f64]>) -> Option<f64> {
    let (n, d) = (data.n, data.d);
    let kf = gram(data, h);
    let f = factor(data, &kf, h.noise_variance)?;
    let Some(grad) = grad else {
        return Some(f.lml);
    };
    grad.iter_mut().for_each(|g| *g = 0.0);
    // W = alpha alpha^T - K^{-1}; dLML/dtheta = tr(W dK/dtheta) / 2.
    let mut w = cho_inverse(&f.chol, n);
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = f.alpha[i] * f.alpha[j] - w[i * n + j];
        }
    }
    let s = h.signal_variance;
    let mut sig = 0.0;
    for i in 0..n {
        sig += 0.5 * w[i * n + i] * s;
        for j in 0..i {
            let wij = w[i * n + j];
            sig += wij * kf[i * n + j];
            let xi = &data.x[i * d..(i + 1) * d];
            let xj = &data.x[j * d..(j + 1) * d];
            let r2 = scaled_r2(&h.lengthscales, xi, xj);
            let r = libm::sqrt(r2);
            let a = SQRT5 * r;
            let c = wij * (5.0 / 3.0) * s * (1.0 + a) * libm::exp(-a);
            for k in 0..d {
                let q = (xi[k] - xj[k]) / h.lengthscales[k];
                grad[k] += c * q * q;
            }
        }
    }
    grad[d] = sig;
    let tr: f64 = (0..n).map(|i| w[i * n + i]).sum();
    grad[d + 1] = 0.5 * h.noise_variance * tr;
    Some(f.lml)
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bounded limited-memory quasi-Newton ascent of the log marginal
/// likelihood. Returns the best point and its value.
fn maximise(data: &Data, start: &[f64], max_iters: usize) -> (Vec<f64>, f64) {
    let m = start.len();
    let (lo, hi) = log_bounds(data.d);
    let eval = |theta: &[f64], g: &mut [f64]| -> f64 {
        match lml_and_grad(data, &GpHyperparams::from_log(theta), Some(g)) {
            // Minimise the negative likelihood.
            Some(v) => {
                g.iter_mut().for_each(|x| *x = -*x);
                -v
            }
            None => f64::INFINITY,
        }
    };
    let mut x = start.to_vec();
    project(&mut x, &lo, &hi);
    let mut g = vec![0.0; m];
    let mut f = eval(&x, &mut g);
    if !f.is_finite() {
        return (x, -f);
    }
    let mut mem: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut dir = vec![0.0; m];
    let mut xn = vec![0.0; m];
    let mut gn = vec![0.0; m];
    for iter in 0..max_iters {
        // Components pinned at a bound with the gradient pushing outward.
        let free: Vec<bool> = (0..m)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let pg_norm = (0..m).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if pg_norm < 1e-6 {
            break;
        }
        // Two-loop recursion.
        for i in 0..m {
            dir[i] = if free[i] { -g[i] } else { 0.0 };
        }
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dotv(s, &dir);
            for i in 0..m {
                dir[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = mem.last() {
            let gamma = dotv(s, y) / dotv(y, y);
            dir.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dotv(y, &dir);
            for i in 0..m {
                dir[i] += s[i] * (a - b);
            }
        }
        for i in 0..m {
            if !free[i] {
                dir[i] = 0.0;
            }
        }
        if dotv(&dir, &g) >= 0.0 {
            for i in 0..m {
                dir[i] = if free[i] { -g[i] } else { 0.0 };
            }
            mem.clear();
        }
        let mut t = if mem.is_empty() && iter == 0 {
            (1.0 / pg_norm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..25 {
            for i in 0..m {
                xn[i] = x[i] + t * dir[i];
            }
            project(&mut xn, &lo, &hi);
            f_new = eval(&xn, &mut gn);
            let decrease: f64 = (0..m).map(|i| g[i] * (xn[i] - x[i])).sum();
            if f_new.is_finite() && f_new <= f + 1e-4 * decrease {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        let s: Vec<f64> = (0..m).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..m).map(|i| gn[i] - g[i]).collect();
        let sy = dotv(&s, &y);
        if sy > 1e-10 {
            if mem.len() == 8 {
                mem.remove(0);
            }
            mem.push((s, y, 1.0 / sy));
        }
        let gain = f - f_new;
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        f = f_new;
        if gain < 1e-9 * (1.0 + f.abs()) {
            break;
        }
    }
    (x, -f)
}

impl GpModel {
    /// Conditions on `observations` with fixed hyperparameters.
    pub fn condition(
        observations: Vec<Observation>,
        scaling: InputScaling,
        hyper: GpHyperparams,
    ) -> Result<GpModel, GpError> {
        if hyper.dim() != scaling.dim() {
            return Err(GpError::DimensionMismatch { expected: scaling.dim(), got: hyper.dim() });
        }
        let data = prepare(&observations, &scaling)?;
        let kf = gram(&data, &hyper);
        let f = factor(&data, &kf, hyper.noise_variance).ok_or(GpError::Cholesky)?;
        Ok(GpModel {
            observations,
            scaling,
            hyper,
            x: data.x,
            ys: data.ys,
            y_mean: data.y_mean,
            y_std: data.y_std,
            chol: f.chol,
            alpha: f.alpha,
            jitter: f.jitter,
            lml: f.lml,
        })
    }

    /// Fits hyperparameters by multi-start likelihood maximisation, then
    /// conditions on the data. `warm` seeds one of the starting points.
    pub fn fit<R: Rng + ?Sized>(
        observations: Vec<Observation>,
        scaling: InputScaling,
        config: &FitConfig,
        warm: Option<&GpHyperparams>,
        rng: &mut R,
    ) -> Result<GpModel, GpError> {
        let d = scaling.dim();
        let data = prepare(&observations, &scaling)?;
        let default = GpHyperparams::default_for(d);
        if data.n == 0 {
            return GpModel::condition(observations, scaling, default);
        }
        let (lo, hi) = log_bounds(d);
        let mut starts: Vec<Vec<f64>> = vec![default.to_log()];
        if let Some(w) = warm.filter(|w| w.dim() == d) {
            starts.push(w.to_log());
        }
        for _ in 0..config.restarts {
            let mut t: Vec<f64> = (0..d)
                .map(|_| rng.random_range(libm::log(0.05)..libm::log(5.0)))
                .collect();
            t.push(rng.random_range(libm::log(0.1)..libm::log(5.0)));
            t.push(rng.random_range(libm::log(1e-4)..libm::log(0.5)));
            starts.push(t);
        }
        let mut screened: Vec<(f64, usize)> = starts
            .iter_mut()
            .enumerate()
            .map(|(i, t)| {
                project(t, &lo, &hi);
                let v = lml_and_grad(&data, &GpHyperparams::from_log(t), None);
                (v.unwrap_or(f64::NEG_INFINITY), i)
            })
            .collect();
        // Best first; index breaks ties so the order is deterministic.
        screened.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut best: Option<(Vec<f64>, f64)> = None;
        for &(v, i) in screened.iter().take(config.refine.max(1)) {
            let (theta, value) = if v.is_finite() {
                maximise(&data, &starts[i], config.max_iters)
            } else {
                (starts[i].clone(), v)
            };
            if best.as_ref().is_none_or(|b| value > b.1) {
                best = Some((theta, value));
            }
        }
        let (theta, _) = best.unwrap_or_else(|| (default.to_log(), f64::NEG_INFINITY));
        let hyper = GpHyperparams::from_log(&theta);
        match GpModel::condition(observations.clone(), scaling.clone(), hyper) {
            Ok(m) => Ok(m),
            Err(_) => GpModel::condition(observations, scaling, default),
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.scaling.dim()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn scaling(&self) -> &InputScaling {
        &self.scaling
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of the noisy Gram matrix (row-major).
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// `(K + noise I)^{-1} y` for the standardised targets.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Log marginal likelihood of the standardised data.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Log marginal likelihood of this model's data under other
    /// hyperparameters.
    pub fn log_marginal_likelihood_at(&self, h: &GpHyperparams) -> Option<f64> {
        let data = Data {
            n: self.len(),
            d: self.dim(),
            x: self.x.clone(),
            ys: self.ys.clone(),
            y_mean: self.y_mean,
            y_std: self.y_std,
        };
        lml_and_grad(&data, h, None)
    }

    /// Standardised posterior mean and variance of the latent function at a
    /// raw input.
    pub fn posterior_standardised(&self, z: &[f64]) -> Result<(f64, f64), GpError> {
        let d = self.dim();
        if z.len() != d {
            return Err(GpError::DimensionMismatch { expected: d, got: z.len() });
        }
        let mut zs = vec![0.0; d];
        self.scaling.apply(z, &mut zs);
        let n = self.len();
        let h = &self.hyper;
        let mut k: Vec<f64> = (0..n)
            .map(|i| matern(h.signal_variance, libm::sqrt(scaled_r2(&h.lengthscales, &zs, &self.x[i * d..(i + 1) * d]))))
            .collect();
        let mu = dotv(&k, &self.alpha);
        solve_lower(&self.chol, n, &mut k);
        let var = (h.signal_variance - dotv(&k, &k)).max(0.0);
        Ok((mu, var))
    }

    /// Posterior mean and standard deviation in target units.
    pub fn posterior(&self, z: &[f64]) -> Result<(f64, f64), GpError> {
        let (mu, var) = self.posterior_standardised(z)?;
        Ok((self.y_mean + self.y_std * mu, self.y_std * libm::sqrt(var)))
    }

    pub fn dump(&self) -> GpDump {
        GpDump {
            observations: self.observations.clone(),
            scaling: self.scaling.clone(),
            hyperparams: self.hyper.clone(),
            y_mean: self.y_mean,
            y_std: self.y_std,
        }
    }

    pub fn from_dump(dump: GpDump) -> Result<GpModel, GpError> {
        GpModel::condition(dump.observations, dump.scaling, dump.hyperparams)
    }
}
