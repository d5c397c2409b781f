//! Loop-erased conditional random walks and their driving functions.
//!
//! The conditional walk (conditioned to hit the target boundary before the
//! start-side boundary) is sampled exactly by its Doob transform: from `v`,
//! step to a neighbor `w` with probability `f(w) / sum_{u ~ v} f(u)` where `f`
//! is the hit-target-first probability. Chronological loop erasure of the walk
//! gives the LERW. A sampled path is parameterized by capacity time
//! `T(s) = M_full - M(domain minus the path prefix)`, and its driving angle is
//! read off by uniformizing each slit domain: the conjugate coordinate at the
//! tip gives the driving point of the inner-anchored normalization, and the
//! accumulated rotation `theta(t) = int Im S_{p-t}(e^{t-p} / chi_hat) dt`
//! converts it to the capacity-parameterized driving angle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{Label, LatticeDomain};
use crate::harmonic::{self, HarmonicError, SolveOptions};
use crate::kernel::{self, KernelContext};

#[derive(Debug, Error)]
pub enum LerwError {
    #[error("start vertex cannot reach the target boundary (zero access probability)")]
    ZeroAccess,
    #[error("no start vertex on this domain")]
    NoStart,
    #[error("path prefix disconnects the target boundary")]
    Disconnection,
    #[error("tip has no surviving interior neighbor to read the conjugate from")]
    TipIsolated,
    #[error("capacity times missing; run capacity parameterization first")]
    MissingCapacity,
    #[error("walk exceeded the step cap (graph too large or conditioning degenerate)")]
    WalkTooLong,
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error(transparent)]
    Kernel(#[from] kernel::KernelError),
}

pub type Result<T> = std::result::Result<T, LerwError>;

/// A sampled loop-erased path with optional capacity/driving data.
///
/// `path[0]` is the marked boundary vertex, `path[1]` the start vertex, and
/// the last vertex lies on the target boundary. `checkpoints` are indices into
/// `path`; `capacity_times` and `driving_xi` align with `checkpoints`.
#[derive(Debug, Clone, Serialize)]
pub struct LerwSample {
    pub path: Vec<usize>,
    pub checkpoints: Vec<usize>,
    pub capacity_times: Vec<f64>,
    pub driving_xi: Vec<f64>,
    pub seed: u64,
    pub diagnostics: Vec<String>,
}

/// Doob-transform sampler for the conditional walk. Builds the transition
/// tables once; sampling is then a plain weighted walk.
pub struct CrwSampler {
    dom: LatticeDomain,
    /// cumulative neighbor weights in adjacency order, per vertex
    cum: Vec<Vec<f64>>,
    f_values: Vec<f64>,
}

const WALK_CAP: usize = 200_000_000;

impl CrwSampler {
    pub fn new(dom: &LatticeDomain) -> Result<Self> {
        let start = dom.start_vertex.ok_or(LerwError::NoStart)?;
        let f = harmonic::solve_f(dom, &dom.target_set(), &dom.start_set())?;
        if f.value(start) <= 0.0 {
            return Err(LerwError::ZeroAccess);
        }
        let n = dom.n_vertices();
        let mut cum = vec![Vec::new(); n];
        for v in 0..n {
            if dom.label(v) != Label::Interior {
                continue;
            }
            let mut acc = 0.0;
            let mut row = Vec::with_capacity(dom.neighbors(v).len());
            for &w in dom.neighbors(v) {
                acc += f.value(w as usize);
                row.push(acc);
            }
            cum[v] = row;
        }
        Ok(Self { dom: dom.clone(), cum, f_values: f.values })
    }

    pub fn access_probability(&self, v: usize) -> f64 {
        self.f_values[v]
    }

    /// Sample the conditional walk from the start vertex until it hits the
    /// target boundary. Deterministic in `seed`.
    pub fn sample(&self, seed: u64) -> Result<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = self.dom.start_vertex.ok_or(LerwError::NoStart)?;
        let mut path = vec![start];
        let mut v = start;
        for _ in 0..WALK_CAP {
            let row = &self.cum[v];
            let total = *row.last().expect("interior vertex with no neighbors");
            let r: f64 = rng.gen::<f64>() * total;
            let k = row.partition_point(|&c| c <= r).min(row.len() - 1);
            let w = self.dom.neighbors(v)[k] as usize;
            path.push(w);
            if self.dom.label(w) == Label::TargetBoundary {
                return Ok(path);
            }
            v = w;
        }
        Err(LerwError::WalkTooLong)
    }
}

/// Sample a conditional walk (one-off convenience; builds the sampler).
pub fn sample_crw(dom: &LatticeDomain, seed: u64) -> Result<Vec<usize>> {
    CrwSampler::new(dom)?.sample(seed)
}

/// Chronological loop erasure: on revisiting a vertex, the intervening loop is
/// removed. Endpoints are preserved and the output is simple.
pub fn loop_erase(path: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(path.len() / 4 + 4);
    let mut pos: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for &v in path {
        if let Some(&i) = pos.get(&v) {
            for w in out.drain(i + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// Sample a LERW: loop-erase the conditional walk and prepend the marked
/// boundary vertex (the access segment).
pub fn sample_lerw(dom: &LatticeDomain, seed: u64) -> Result<LerwSample> {
    let sampler = CrwSampler::new(dom)?;
    sample_lerw_with(&sampler, seed)
}

/// Sampler-reusing variant for Monte Carlo loops.
pub fn sample_lerw_with(sampler: &CrwSampler, seed: u64) -> Result<LerwSample> {
    let crw = sampler.sample(seed)?;
    let mut path = loop_erase(&crw);
    if let Some(marked) = sampler.dom.marked_vertex {
        path.insert(0, marked);
    }
    Ok(LerwSample {
        path,
        checkpoints: Vec::new(),
        capacity_times: Vec::new(),
        driving_xi: Vec::new(),
        seed,
        diagnostics: Vec::new(),
    })
}

/// Full-domain modulus (no slit).
pub fn full_modulus(dom: &LatticeDomain) -> Result<f64> {
    Ok(harmonic::estimate_modulus(dom, &dom.start_set(), &dom.target_set())?)
}

/// Capacity-parameterize the sample at the given path indices: at checkpoint
/// `s` the prefix `path[0..=s]` is absorbed into the start-side boundary and
/// `T(s) = M_full - M(remaining domain)`.
pub fn capacity_parameterize(
    dom: &LatticeDomain,
    sample: &LerwSample,
    checkpoints: &[usize],
) -> Result<LerwSample> {
    let mut out = sample.clone();
    out.checkpoints = checkpoints.to_vec();
    out.capacity_times.clear();
    for &cp in checkpoints {
        if cp >= sample.path.len() || dom.label(sample.path[cp]) == Label::TargetBoundary {
            return Err(LerwError::Harmonic(HarmonicError::InvalidInput(format!(
                "checkpoint {cp} is not a slit vertex (the endpoint on the target boundary cannot be absorbed)"
            ))));
        }
    }
    let m_full = full_modulus(dom)?;
    let b2 = dom.target_set();
    let opts = SolveOptions::default();
    let mut warm: Option<Vec<f64>> = None;
    for &cp in checkpoints {
        let dom_j = dom.with_slit(&sample.path[..=cp]);
        let b1 = dom_j.start_set();
        let (m_j, f) = harmonic::estimate_modulus_warm(&dom_j, &b1, &b2, warm.as_deref(), &opts)
            .map_err(|e| match e {
                HarmonicError::EmptyBoundary => LerwError::Disconnection,
                other => LerwError::Harmonic(other),
            })?;
        out.capacity_times.push(m_full - m_j);
        warm = Some(f.values);
    }
    Ok(out)
}

/// Options for the driving extraction.
#[derive(Debug, Clone, Copy)]
pub struct DrivingOptions {
    pub solve: SolveOptions,
    /// Kernel tolerance for the rotation-drift integrand.
    pub kernel_tol: f64,
}

impl Default for DrivingOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), kernel_tol: 1e-12 }
    }
}

/// Extract the driving angle at the sample's checkpoints (capacity times must
/// already be present). Uniformizes each slit domain, reads the conjugate
/// coordinate at the tip, unwraps across checkpoints, normalizes the first
/// angle to zero, and removes the rotation drift of the inner-anchored maps.
pub fn extract_driving(
    dom: &LatticeDomain,
    sample: &LerwSample,
    opts: &DrivingOptions,
) -> Result<LerwSample> {
    if sample.checkpoints.is_empty() || sample.capacity_times.len() != sample.checkpoints.len() {
        return Err(LerwError::MissingCapacity);
    }
    let mut out = sample.clone();
    out.driving_xi.clear();
    let b2 = dom.target_set();
    let anchor = anchor_vertex(dom)?;
    let m_full = full_modulus(dom)?;

    let mut raws: Vec<f64> = Vec::with_capacity(sample.checkpoints.len());
    let mut moduli: Vec<f64> = Vec::with_capacity(sample.checkpoints.len());
    let mut warm: Option<Vec<f64>> = None;
    for (k, &cp) in sample.checkpoints.iter().enumerate() {
        let dom_j = dom.with_slit(&sample.path[..=cp]);
        let b1 = dom_j.start_set();
        let unif = harmonic::uniformize_annulus_anchored(
            &dom_j,
            &b1,
            &b2,
            Some(anchor),
            warm.as_deref(),
            &opts.solve,
        )?;
        let tip = sample.path[cp];
        let raw = tip_angle(&dom_j, &unif.conjugate, tip)?;
        // unwrap relative to the previous checkpoint
        let raw = match raws.last() {
            Some(&prev) => {
                let tau = 2.0 * std::f64::consts::PI;
                let adj = raw - tau * ((raw - prev) / tau).round();
                if (adj - prev).abs() > 0.9 * std::f64::consts::PI {
                    out.diagnostics.push(format!(
                        "checkpoint {k}: driving jump {:.3} rad; refine the checkpoint schedule",
                        adj - prev
                    ));
                }
                adj
            }
            None => raw,
        };
        raws.push(raw);
        moduli.push(unif.modulus);
        warm = Some(unif.potential.values);
    }
    let _ = m_full;

    // rotation drift of the inner-anchored normalization
    let raw0 = raws[0];
    let integrand: Vec<f64> = raws
        .iter()
        .zip(&moduli)
        .map(|(&raw, &m)| {
            let ctx = KernelContext { tol: opts.kernel_tol, ..KernelContext::auto(m) };
            let z = num_complex::Complex64::from_polar((-m).exp(), -(raw - raw0));
            kernel::schwarz(&ctx, z).map(|s| s.im)
        })
        .collect::<kernel::Result<_>>()?;
    let mut theta = 0.0;
    for k in 0..raws.len() {
        if k > 0 {
            let dt = sample.capacity_times[k] - sample.capacity_times[k - 1];
            theta += 0.5 * (integrand[k - 1] + integrand[k]) * dt;
        }
        out.driving_xi.push((raws[k] - raw0) + theta);
    }
    Ok(out)
}

/// Reference vertex for the conjugate normalization: the interior neighbor of
/// the target-boundary vertex whose position angle is closest to zero.
pub fn anchor_vertex(dom: &LatticeDomain) -> Result<usize> {
    let b2 = dom.target_set();
    let anchor_b = b2
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let pa = dom.position(a);
            let pb = dom.position(b);
            let aa = pa[1].atan2(pa[0]).abs();
            let ab = pb[1].atan2(pb[0]).abs();
            aa.partial_cmp(&ab).unwrap().then(a.cmp(&b))
        })
        .ok_or(LerwError::Disconnection)?;
    dom.neighbors(anchor_b)
        .iter()
        .map(|&w| w as usize)
        .find(|&w| dom.label(w) == Label::Interior)
        .ok_or(LerwError::TipIsolated)
}

/// Coherent circular mean of the conjugate over the tip's surviving interior
/// neighbors (one to three of them).
fn tip_angle(dom_slit: &LatticeDomain, conjugate: &[f64], tip: usize) -> Result<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut vals: Vec<f64> = Vec::new();
    for &w in dom_slit.neighbors(tip) {
        let w = w as usize;
        if dom_slit.label(w) == Label::Interior && !conjugate[w].is_nan() {
            vals.push(conjugate[w]);
        }
    }
    if vals.is_empty() {
        return Err(LerwError::TipIsolated);
    }
    let base = vals[0];
    let mut acc = 0.0;
    for v in &vals {
        acc += v - tau * ((v - base) / tau).round();
    }
    Ok(acc / vals.len() as f64)
}

/// Adaptive checkpoint schedule plus capacity and driving extraction in one
/// pass: capacity spacing close to `spacing`, stopping once the capacity time
/// exceeds `t_stop`.
pub fn parameterize_with_driving(
    dom: &LatticeDomain,
    sample: &LerwSample,
    spacing: f64,
    t_stop: f64,
    opts: &DrivingOptions,
) -> Result<LerwSample> {
    let m_full = full_modulus(dom)?;
    let b2 = dom.target_set();
    let anchor = anchor_vertex(dom)?;
    // the final path vertex lies on the target boundary and is never absorbed
    let last = sample.path.len().saturating_sub(2).max(1);

    let mut out = sample.clone();
    out.checkpoints.clear();
    out.capacity_times.clear();
    out.driving_xi.clear();

    let mut raws: Vec<f64> = Vec::new();
    let mut moduli: Vec<f64> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;

    let measure = |cp: usize, warm: &mut Option<Vec<f64>>| -> Result<(f64, f64)> {
        let dom_j = dom.with_slit(&sample.path[..=cp]);
        let b1 = dom_j.start_set();
        let unif = harmonic::uniformize_annulus_anchored(
            &dom_j,
            &b1,
            &b2,
            Some(anchor),
            warm.as_deref(),
            &opts.solve,
        )?;
        let raw = tip_angle(&dom_j, &unif.conjugate, sample.path[cp])?;
        *warm = Some(unif.potential.values);
        Ok((m_full - unif.modulus, raw))
    };

    let mut cp = 0usize;
    let (t0, raw0) = measure(cp, &mut warm)?;
    out.checkpoints.push(cp);
    out.capacity_times.push(t0);
    raws.push(raw0);
    moduli.push(m_full - t0);

    let mut step = (last / 60).max(1);
    while cp < last {
        let t_cur = *out.capacity_times.last().unwrap();
        if t_cur >= t_stop {
            break;
        }
        let mut next = (cp + step).min(last);
        let (mut t_next, mut raw_next) = match measure(next, &mut warm) {
            Ok(v) => v,
            // the tip ran out of live faces near the target boundary: the
            // schedule ends here
            Err(LerwError::TipIsolated) => break,
            Err(e) => return Err(e),
        };
        // halve the index step while the capacity increment overshoots
        while t_next - t_cur > 2.0 * spacing && next > cp + 1 {
            step = ((next - cp) / 2).max(1);
            next = cp + step;
            match measure(next, &mut warm) {
                Ok(m) => {
                    t_next = m.0;
                    raw_next = m.1;
                }
                Err(LerwError::TipIsolated) => break,
                Err(e) => return Err(e),
            }
        }
        if t_next - t_cur < 0.5 * spacing && next < last {
            step = (step * 2).min(last - next + 1).max(1);
        }
        let tau = 2.0 * std::f64::consts::PI;
        let prev = *raws.last().unwrap();
        let adj = raw_next - tau * ((raw_next - prev) / tau).round();
        if (adj - prev).abs() > 0.9 * std::f64::consts::PI {
            out.diagnostics.push(format!(
                "checkpoint at path index {next}: driving jump {:.3} rad",
                adj - prev
            ));
        }
        cp = next;
        out.checkpoints.push(cp);
        out.capacity_times.push(t_next);
        raws.push(adj);
        moduli.push(m_full - t_next);
    }

    // rotation drift, as in `extract_driving`
    let raw0 = raws[0];
    let mut theta = 0.0;
    let mut prev_w = None;
    for k in 0..raws.len() {
        let m = moduli[k];
        let ctx = KernelContext { tol: opts.kernel_tol, ..KernelContext::auto(m) };
        let z = num_complex::Complex64::from_polar((-m).exp(), -(raws[k] - raw0));
        let w = kernel::schwarz(&ctx, z)?.im;
        if let Some(pw) = prev_w {
            let dt = out.capacity_times[k] - out.capacity_times[k - 1];
            theta += 0.5 * (pw + w) * dt;
        }
        prev_w = Some(w);
        out.driving_xi.push((raws[k] - raw0) + theta);
    }
    Ok(out)
}

/// CSV of the path vertices: `index,x,y`.
pub fn path_csv(dom: &LatticeDomain, sample: &LerwSample) -> String {
    let mut s = String::from("index,x,y\n");
    for (i, &v) in sample.path.iter().enumerate() {
        let p = dom.position(v);
        s.push_str(&format!("{},{},{}\n", i, p[0], p[1]));
    }
    s
}

/// JSON sidecar with capacity times, driving and seed.
pub fn sidecar_json(sample: &LerwSample) -> serde_json::Value {
    serde_json::json!({
        "seed": sample.seed,
        "checkpoints": sample.checkpoints,
        "capacity_times": sample.capacity_times,
        "driving_xi": sample.driving_xi,
        "diagnostics": sample.diagnostics,
    })
}
