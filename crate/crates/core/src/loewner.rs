//! Loewner differential equations for annulus, radial and disc evolutions.
//!
//! All three engines integrate an equation of the form
//! `d phi / dt = phi * K(t, phi / chi(t))` for a continuous driving point
//! `chi(t) = exp(i xi(t))` on the unit circle, where `K` is the annulus Schwarz
//! kernel `S_{p-t}`, the radial kernel `(1+w)/(1-w)`, or the annulus kernel at
//! modulus `|t|` for the disc truncation. Each tracked point advances
//! independently with an embedded Dormand-Prince 5(4) pair and per-point step
//! control; steps are aligned to the driving grid so the right-hand side stays
//! smooth within a step. A point is flagged swallowed once `|phi/chi - 1|`
//! drops below the swallow threshold, and frozen afterwards.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{self, KernelContext, KernelError};

#[derive(Debug, Error)]
pub enum LoewnerError {
    #[error("driving horizon {horizon} is not strictly below the modulus {p}")]
    HorizonExceedsModulus { horizon: f64, p: f64 },
    #[error("adaptive stepping failed near t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("seed {z} violates the start-truncation bound 12 e^(r_start) <= |z| <= 1")]
    SeedTooCentral { z: Complex64 },
    #[error("seed {z} lies outside the evolution domain")]
    SeedOutsideDomain { z: Complex64 },
    #[error("trace refinement stalled at t = {t}: last iterates {a} and {b}")]
    NoConvergence { t: f64, a: Complex64, b: Complex64 },
    #[error("invalid driving parameters: {0}")]
    InvalidDriving(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, LoewnerError>;

/// Kind of driving process to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DrivingKind {
    /// Brownian angle of speed kappa started at angle 0 (standard start at 1).
    Annulus,
    /// Same law as `Annulus`; kept separate for reporting.
    Radial,
    /// Brownian angle of speed kappa started at a uniform random angle.
    Disc,
    /// Constant angle 0.
    Constant,
}

/// A sampled continuous driving angle on a time grid, interpreted by
/// piecewise-linear interpolation; `chi(t) = exp(i xi(t))`.
#[derive(Debug, Clone, Serialize)]
pub struct DrivingPath {
    pub kappa: f64,
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    pub initial_angle: f64,
}

impl DrivingPath {
    /// Sample a driving path: deterministic in `seed`, independent Gaussian
    /// increments of variance `kappa * dt`; the disc kind draws a uniform
    /// initial angle.
    pub fn sample(kind: DrivingKind, kappa: f64, horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon > 0.0) || kappa < 0.0 {
            return Err(LoewnerError::InvalidDriving(format!(
                "kappa={kappa} horizon={horizon} dt={dt}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial_angle = match kind {
            DrivingKind::Disc => Uniform::new(0.0, 2.0 * std::f64::consts::PI).sample(&mut rng),
            _ => 0.0,
        };
        let n = (horizon / dt).ceil() as usize;
        let mut times = Vec::with_capacity(n + 1);
        let mut xi = Vec::with_capacity(n + 1);
        times.push(0.0);
        xi.push(initial_angle);
        for i in 1..=n {
            let t = (i as f64 * dt).min(horizon);
            let step_sd = (kappa * (t - times[i - 1])).sqrt();
            let g: f64 = StandardNormal.sample(&mut rng);
            let inc = match kind {
                DrivingKind::Constant => 0.0,
                _ => step_sd * g,
            };
            times.push(t);
            xi.push(xi[i - 1] + inc);
        }
        Ok(Self { kappa, times, xi, initial_angle })
    }

    /// Wrap explicit samples as a (custom) driving path.
    pub fn from_samples(kappa: f64, times: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if times.len() != xi.len() || times.len() < 2 || times[0] != 0.0 {
            return Err(LoewnerError::InvalidDriving("times/xi grids malformed".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LoewnerError::InvalidDriving("times not strictly increasing".into()));
        }
        let initial_angle = xi[0];
        Ok(Self { kappa, times, xi, initial_angle })
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Piecewise-linear interpolation of the angle.
    pub fn angle_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.xi[0];
        }
        if t >= self.times[n - 1] {
            return self.xi[n - 1];
        }
        let idx = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.xi[i],
            Err(i) => i,
        };
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (t - t0) / (t1 - t0);
        self.xi[idx - 1] * (1.0 - w) + self.xi[idx] * w
    }

    pub fn chi_at(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.angle_at(t))
    }
}

/// One tracked point of an evolution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrackedPoint {
    pub seed_re: f64,
    pub seed_im: f64,
    pub re: f64,
    pub im: f64,
    pub swallowed: bool,
    pub swallow_time: Option<f64>,
}

impl TrackedPoint {
    pub fn seed(&self) -> Complex64 {
        Complex64::new(self.seed_re, self.seed_im)
    }
    pub fn current(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Snapshot of the conformal-map samples at one checkpoint time.
#[derive(Debug, Clone, Serialize)]
pub struct LoewnerState {
    /// Initial modulus (annulus engines) or |r_start| (disc engine).
    pub p: f64,
    /// Time of the snapshot (absolute disc time for the disc engine).
    pub t: f64,
    pub drift_adjusted: bool,
    pub points: Vec<TrackedPoint>,
}

/// A sampled trace (tip curve) of an annulus evolution.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSample {
    pub times: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TraceSample {
    pub fn point(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }
}

/// Integrator options (per-point adaptive Dormand-Prince 5(4)).
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `|phi/chi - 1|` below this marks the point swallowed.
    pub swallow_threshold: f64,
    pub max_steps: usize,
    /// Kernel truncation tolerance.
    pub kernel_tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            swallow_threshold: 1e-3,
            max_steps: 2_000_000,
            kernel_tol: 1e-12,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum SegmentEnd {
    Reached(Complex64),
    Stopped { y: Complex64, t: f64 },
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` adaptively for one complex
/// state. After every accepted step the `stop` predicate may end the segment
/// early (used for swallow detection). Pole-proximity errors from a stage
/// trigger step-halving; a step underflow is reported as `StepFailure`.
fn integrate_segment<F, S>(
    mut y: Complex64,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
    steps: &mut usize,
    mut f: F,
    stop: S,
) -> Result<SegmentEnd>
where
    F: FnMut(f64, Complex64) -> kernel::Result<Complex64>,
    S: Fn(f64, Complex64) -> bool,
{
    let mut t = t0;
    let mut h = (t1 - t0).min(1e-2);
    loop {
        if t >= t1 - 1e-15 {
            return Ok(SegmentEnd::Reached(y));
        }
        if *steps > opts.max_steps {
            return Err(LoewnerError::StepFailure { t, reason: "step budget exhausted".into() });
        }
        h = h.min(t1 - t);
        let mut k = [Complex64::new(0.0, 0.0); 7];
        let mut pole_hit = false;
        for i in 0..7 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..i {
                acc += DP_A[i][j] * k[j];
            }
            match f(t + DP_C[i] * h, y + h * acc) {
                Ok(v) => k[i] = v,
                Err(KernelError::PoleProximity { .. }) => {
                    pole_hit = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        *steps += 1;
        if pole_hit {
            h *= 0.25;
            if h < 1e-14 {
                return Err(LoewnerError::StepFailure { t, reason: "stage hit kernel pole".into() });
            }
            continue;
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5 += h * DP_B5[i] * k[i];
            y4 += h * DP_B4[i] * k[i];
        }
        let sc = opts.abs_tol + opts.rel_tol * y.norm().max(y5.norm());
        let err = (y5 - y4).norm() / sc;
        if err <= 1.0 {
            t += h;
            y = y5;
            if stop(t, y) {
                return Ok(SegmentEnd::Stopped { y, t });
            }
            let grow = if err > 1e-10 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h *= grow.min(5.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.1);
            if h < 1e-14 {
                return Err(LoewnerError::StepFailure { t, reason: "step size underflow".into() });
            }
        }
    }
}

enum Engine<'a> {
    Annulus { p: f64, drift_adjusted: bool, driving: &'a DrivingPath },
    Radial { driving: &'a DrivingPath },
    /// Disc truncation: engine time u corresponds to absolute time r_start + u.
    Disc { r_start: f64, driving: &'a DrivingPath },
}

impl Engine<'_> {
    fn rhs(&self, opts: &IntegratorOptions, t: f64, phi: Complex64) -> kernel::Result<Complex64> {
        match self {
            Engine::Annulus { p, drift_adjusted, driving } => {
                let r = p - t;
                let chi = driving.chi_at(t);
                let mut ctx = KernelContext::auto(r);
                ctx.tol = opts.kernel_tol;
                let mut s = kernel::schwarz(&ctx, phi / chi)?;
                if *drift_adjusted {
                    let inner = Complex64::new((t - p).exp(), 0.0);
                    let corr = kernel::schwarz(&ctx, inner / chi)?;
                    s -= Complex64::new(0.0, corr.im);
                }
                Ok(phi * s)
            }
            Engine::Radial { driving } => {
                let chi = driving.chi_at(t);
                Ok(phi * kernel::radial(phi, chi)?)
            }
            Engine::Disc { r_start, driving } => {
                let r = -(r_start + t);
                let chi = driving.chi_at(t);
                let mut ctx = KernelContext::auto(r);
                ctx.tol = opts.kernel_tol;
                Ok(phi * kernel::schwarz(&ctx, phi / chi)?)
            }
        }
    }

    fn driving(&self) -> &DrivingPath {
        match self {
            Engine::Annulus { driving, .. } => driving,
            Engine::Radial { driving } => driving,
            Engine::Disc { driving, .. } => driving,
        }
    }
}

fn evolve(
    engine: &Engine,
    seeds: &[Complex64],
    opts: &IntegratorOptions,
    checkpoints: &[f64],
    p_report: f64,
    drift_adjusted: bool,
) -> Result<Vec<LoewnerState>> {
    let driving = engine.driving();
    let horizon = driving.horizon();
    let mut cps: Vec<f64> = checkpoints.to_vec();
    cps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(last) = cps.last() {
        if *last > horizon + 1e-12 {
            return Err(LoewnerError::InvalidDriving(format!(
                "checkpoint {last} beyond driving horizon {horizon}"
            )));
        }
    }

    let mut points: Vec<TrackedPoint> = seeds
        .iter()
        .map(|z| TrackedPoint {
            seed_re: z.re,
            seed_im: z.im,
            re: z.re,
            im: z.im,
            swallowed: false,
            swallow_time: None,
        })
        .collect();

    let gap = |t: f64, y: Complex64| (y / driving.chi_at(t) - Complex64::new(1.0, 0.0)).norm();

    let mut out = Vec::with_capacity(cps.len());
    let mut t_prev = 0.0;
    for &cp in &cps {
        for pt in points.iter_mut() {
            if pt.swallowed {
                continue;
            }
            let mut y = pt.current();
            let mut t = t_prev;
            let mut steps = 0usize;
            while t < cp - 1e-15 && !pt.swallowed {
                if gap(t, y) < opts.swallow_threshold {
                    pt.swallowed = true;
                    pt.swallow_time = Some(t);
                    break;
                }
                let seg_end = driving
                    .times
                    .iter()
                    .find(|&&x| x > t + 1e-15)
                    .copied()
                    .unwrap_or(horizon)
                    .min(cp);
                let res = integrate_segment(
                    y,
                    t,
                    seg_end,
                    opts,
                    &mut steps,
                    |tt, yy| engine.rhs(opts, tt, yy),
                    |tt, yy| gap(tt, yy) < opts.swallow_threshold,
                );
                match res {
                    Ok(SegmentEnd::Reached(v)) => {
                        y = v;
                        t = seg_end;
                    }
                    Ok(SegmentEnd::Stopped { y: v, t: ts }) => {
                        y = v;
                        pt.swallowed = true;
                        pt.swallow_time = Some(ts);
                    }
                    Err(LoewnerError::StepFailure { t: tf, .. })
                        if gap(tf.min(seg_end), y) < 20.0 * opts.swallow_threshold =>
                    {
                        // the integrator ground to a halt against the pole
                        pt.swallowed = true;
                        pt.swallow_time = Some(tf);
                    }
                    Err(e) => return Err(e),
                }
            }
            pt.re = y.re;
            pt.im = y.im;
        }
        t_prev = cp;
        out.push(LoewnerState { p: p_report, t: cp, drift_adjusted, points: points.clone() });
    }
    Ok(out)
}

/// Integrate the annulus equation of modulus `p`, returning states at the
/// requested checkpoint times.
pub fn evolve_annulus(
    p: f64,
    driving: &DrivingPath,
    seeds: &[Complex64],
    opts: &IntegratorOptions,
    checkpoints: &[f64],
) -> Result<Vec<LoewnerState>> {
    evolve_annulus_impl(p, driving, seeds, opts, checkpoints, false)
}

/// The drift-adjusted variant, which pins the image of the inner marked
/// point: `phi_t(e^{-p}) = e^{t-p}`.
pub fn evolve_annulus_adjusted(
    p: f64,
    driving: &DrivingPath,
    seeds: &[Complex64],
    opts: &IntegratorOptions,
    checkpoints: &[f64],
) -> Result<Vec<LoewnerState>> {
    evolve_annulus_impl(p, driving, seeds, opts, checkpoints, true)
}

fn evolve_annulus_impl(
    p: f64,
    driving: &DrivingPath,
    seeds: &[Complex64],
    opts: &IntegratorOptions,
    checkpoints: &[f64],
    drift_adjusted: bool,
) -> Result<Vec<LoewnerState>> {
    if driving.horizon() >= p {
        return Err(LoewnerError::HorizonExceedsModulus { horizon: driving.horizon(), p });
    }
    for z in seeds {
        let n = z.norm();
        if n < (-p).exp() - 1e-9 || n > 1.0 + 1e-9 {
            return Err(LoewnerError::SeedOutsideDomain { z: *z });
        }
    }
    let engine = Engine::Annulus { p, drift_adjusted, driving };
    evolve(&engine, seeds, opts, checkpoints, p, drift_adjusted)
}

/// Integrate the radial (unit-disc) equation.
pub fn evolve_radial(
    driving: &DrivingPath,
    seeds: &[Complex64],
    opts: &IntegratorOptions,
    checkpoints: &[f64],
) -> Result<Vec<LoewnerState>> {
    for z in seeds {
        if z.norm() > 1.0 + 1e-9 {
            return Err(LoewnerError::SeedOutsideDomain { z: *z });
        }
    }
    let engine = Engine::Radial { driving };
    evolve(&engine, seeds, opts, checkpoints, f64::INFINITY, false)
}

/// Log-derivative of the radial maps at the origin, integrated as a companion
/// ODE; its magnitude must equal `e^t`.
pub fn radial_origin_log_deriv(
    driving: &DrivingPath,
    opts: &IntegratorOptions,
    t_end: f64,
) -> Result<Complex64> {
    // phi_t(0) = 0 is a fixed point, so
    // d/dt log phi'(0) = (chi + phi)/(chi - phi) + 2 phi chi/(chi - phi)^2 at phi = 0.
    let mut y = Complex64::new(0.0, 0.0);
    let mut steps = 0usize;
    let mut t = 0.0;
    while t < t_end - 1e-15 {
        let seg_end = driving
            .times
            .iter()
            .find(|&&x| x > t + 1e-15)
            .copied()
            .unwrap_or(driving.horizon())
            .min(t_end);
        let phi = Complex64::new(0.0, 0.0);
        match integrate_segment(
            y,
            t,
            seg_end,
            opts,
            &mut steps,
            |tt, _| {
                let chi = driving.chi_at(tt);
                let base = kernel::radial(phi, chi)?;
                let extra = 2.0 * phi * chi / ((chi - phi) * (chi - phi));
                Ok(base + extra)
            },
            |_, _| false,
        )? {
            SegmentEnd::Reached(v) => y = v,
            SegmentEnd::Stopped { .. } => unreachable!(),
        }
        t = seg_end;
    }
    Ok(y)
}

/// Disc Loewner evolution approximated by the finite-start flow from
/// `r_start < 0`; the truncation error in the reflected coordinate is bounded
/// by `8 e^{r_start}` for seeds with `12 e^{r_start} <= |z| <= 1`.
///
/// `driving.times` are offsets from `r_start` (absolute time is `r_start + u`)
/// and checkpoints are absolute times in `(r_start, 0)`.
pub fn evolve_disc(
    r_start: f64,
    driving: &DrivingPath,
    seeds: &[Complex64],
    opts: &IntegratorOptions,
    checkpoints: &[f64],
) -> Result<Vec<LoewnerState>> {
    if r_start >= 0.0 {
        return Err(LoewnerError::InvalidDriving(format!("r_start = {r_start} must be negative")));
    }
    let bound = 12.0 * r_start.exp();
    for z in seeds {
        let n = z.norm();
        if n < bound {
            return Err(LoewnerError::SeedTooCentral { z: *z });
        }
        if n > 1.0 + 1e-9 {
            return Err(LoewnerError::SeedOutsideDomain { z: *z });
        }
    }
    if checkpoints.iter().any(|&c| c < r_start || c >= 0.0) {
        return Err(LoewnerError::InvalidDriving("disc checkpoints must lie in [r_start, 0)".into()));
    }
    let offsets: Vec<f64> = checkpoints.iter().map(|c| c - r_start).collect();
    let engine = Engine::Disc { r_start, driving };
    let mut states = evolve(&engine, seeds, opts, &offsets, -r_start, false)?;
    for st in &mut states {
        st.t += r_start;
        for p in &mut st.points {
            if let Some(s) = p.swallow_time {
                p.swallow_time = Some(s + r_start);
            }
        }
    }
    Ok(states)
}

/// Compute the annulus trace by the backward flow: start just inside the
/// driving point at time `t`, integrate the reversed equation down to time 0,
/// and halve the inward offset until two successive estimates agree.
pub fn trace_annulus(
    p: f64,
    driving: &DrivingPath,
    trace_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<TraceSample> {
    if driving.horizon() >= p {
        return Err(LoewnerError::HorizonExceedsModulus { horizon: driving.horizon(), p });
    }
    let tol = 1e-6;
    let mut out = TraceSample { times: Vec::new(), re: Vec::new(), im: Vec::new() };
    for &t in trace_times {
        let beta = trace_point(p, driving, t, opts, tol)?;
        out.times.push(t);
        out.re.push(beta.re);
        out.im.push(beta.im);
    }
    Ok(out)
}

fn trace_point(
    p: f64,
    driving: &DrivingPath,
    t: f64,
    opts: &IntegratorOptions,
    tol: f64,
) -> Result<Complex64> {
    if t <= 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut eps = 1e-2;
    let mut prev: Option<Complex64> = None;
    let mut best = Complex64::new(1.0, 0.0);
    for _ in 0..16 {
        let beta = backward_flow(p, driving, t, eps, opts)?;
        if let Some(q) = prev {
            if (beta - q).norm() < tol {
                return Ok(beta);
            }
            best = beta;
        }
        prev = Some(beta);
        eps *= 0.5;
    }
    Err(LoewnerError::NoConvergence { t, a: prev.unwrap(), b: best })
}

fn backward_flow(
    p: f64,
    driving: &DrivingPath,
    t: f64,
    eps: f64,
    opts: &IntegratorOptions,
) -> Result<Complex64> {
    let mut y = driving.chi_at(t) * (1.0 - eps);
    let mut steps = 0usize;
    let mut bounds: Vec<f64> = vec![0.0];
    bounds.extend(driving.times.iter().copied().filter(|&x| x > 1e-15 && x < t - 1e-15));
    bounds.push(t);
    for w in bounds.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        match integrate_segment(
            y,
            0.0,
            b - a,
            opts,
            &mut steps,
            |tau, yy| {
                let tt = b - tau;
                let r = p - tt;
                let chi = driving.chi_at(tt);
                let mut ctx = KernelContext::auto(r);
                ctx.tol = opts.kernel_tol;
                Ok(-(yy * kernel::schwarz(&ctx, yy / chi)?))
            },
            |_, _| false,
        )? {
            SegmentEnd::Reached(v) => y = v,
            SegmentEnd::Stopped { .. } => unreachable!(),
        }
    }
    Ok(y)
}

/// CSV rows for a trajectory: `time,point_id,re,im,swallowed`.
pub fn trajectory_csv(states: &[LoewnerState]) -> String {
    let mut s = String::from("time,point_id,re,im,swallowed\n");
    for st in states {
        for (i, p) in st.points.iter().enumerate() {
            s.push_str(&format!("{},{},{},{},{}\n", st.t, i, p.re, p.im, p.swallowed));
        }
    }
    s
}
