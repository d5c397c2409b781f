use slelab::grid::{self, DomainSpec};
use slelab::lerw::{self, CrwSampler, DrivingOptions};
use slelab::stats;
use std::sync::Arc;

fn main() {
    let p = 1.5;
    let delta = 0.02;
    let n: u64 = 400;
    let t_checks = [0.15, 0.3, 0.45];
    let dom = Arc::new(
        grid::prune_reachable(&grid::build_lattice(&DomainSpec::annulus(p), delta).unwrap())
            .unwrap(),
    );
    eprintln!("grid: {} vertices", dom.n_vertices());
    let sampler = Arc::new(CrwSampler::new(&dom).unwrap());
    let threads = 14usize;
    let t0 = std::time::Instant::now();
    let mut handles = Vec::new();
    for th in 0..threads {
        let dom = Arc::clone(&dom);
        let sampler = Arc::clone(&sampler);
        handles.push(std::thread::spawn(move || {
            let mut out: Vec<Vec<f64>> = vec![Vec::new(); t_checks.len()];
            let mut failures = 0usize;
            for seed in (th as u64..n).step_by(threads) {
                let s = match lerw::sample_lerw_with(&sampler, seed) {
                    Ok(s) => s,
                    Err(_) => { failures += 1; continue; }
                };
                let s = match lerw::parameterize_with_driving(&dom, &s, 0.015, 0.5, &DrivingOptions::default()) {
                    Ok(s) => s,
                    Err(e) => { eprintln!("seed {seed}: {e}"); failures += 1; continue; }
                };
                for (i, &t) in t_checks.iter().enumerate() {
                    for k in 1..s.capacity_times.len() {
                        if s.capacity_times[k] >= t {
                            let (t0, t1) = (s.capacity_times[k - 1], s.capacity_times[k]);
                            let w = (t - t0) / (t1 - t0);
                            out[i].push(s.driving_xi[k - 1] * (1.0 - w) + s.driving_xi[k] * w);
                            break;
                        }
                    }
                }
            }
            (out, failures)
        }));
    }
    let mut collected: Vec<Vec<f64>> = vec![Vec::new(); t_checks.len()];
    let mut failures = 0;
    for h in handles {
        let (out, f) = h.join().unwrap();
        failures += f;
        for (i, v) in out.into_iter().enumerate() {
            collected[i].extend(v);
        }
    }
    eprintln!("elapsed {:?}  failures {failures}", t0.elapsed());
    for (i, &t) in t_checks.iter().enumerate() {
        let xs = &collected[i];
        let m = stats::mean(xs);
        let v = stats::variance(xs);
        let se = (v / xs.len() as f64).sqrt();
        println!(
            "t={t}: n={} mean={:.4} (3se={:.4}) var={:.4} target={:.4} ratio={:.3}",
            xs.len(), m, 3.0 * se, v, 2.0 * t, v / (2.0 * t)
        );
    }
}
