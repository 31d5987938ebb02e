//! Splittable deterministic seeding for Monte Carlo experiments.
//!
//! Trial t of an experiment with root seed r uses a ChaCha8 stream cipher
//! keyed by r with stream index t. Trials are therefore independent of
//! execution order and of how they are sharded across worker threads, which
//! is what makes `--jobs N` incapable of changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for one trial of one experiment.
pub fn trial_rng(root_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(trial.wrapping_add(1));
    rng
}

/// Run `trials` independent Boolean trials, `jobs`-way parallel, and count
/// successes. The count is a sum over per-trial outcomes, so the result is
/// identical for any `jobs >= 1`.
pub fn count_successes<F>(root_seed: u64, trials: u64, jobs: usize, f: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let jobs = jobs.max(1);
    if jobs == 1 {
        let mut hits = 0;
        for t in 0..trials {
            if f(&mut trial_rng(root_seed, t)) {
                hits += 1;
            }
        }
        return hits;
    }
    let f = &f;
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(jobs);
        for w in 0..jobs as u64 {
            handles.push(scope.spawn(move || {
                let mut hits = 0u64;
                let mut t = w;
                while t < trials {
                    if f(&mut trial_rng(root_seed, t)) {
                        hits += 1;
                    }
                    t += jobs as u64;
                }
                hits
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    })
}

/// Run `trials` independent real-valued trials and collect the outcomes in
/// trial order. Workers fill disjoint slots of one vector, so the contents
/// are identical for any `jobs >= 1`; callers that reduce the vector in
/// order get byte-identical summaries regardless of parallelism.
pub fn collect_f64<F>(root_seed: u64, trials: u64, jobs: usize, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let jobs = jobs.max(1);
    let mut out = vec![0f64; trials as usize];
    if jobs == 1 {
        for (t, slot) in out.iter_mut().enumerate() {
            *slot = f(&mut trial_rng(root_seed, t as u64));
        }
        return out;
    }
    let f = &f;
    let chunk = (trials as usize).div_ceil(jobs);
    std::thread::scope(|scope| {
        for (w, slice) in out.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (off, slot) in slice.iter_mut().enumerate() {
                    *slot = f(&mut trial_rng(root_seed, (w * chunk + off) as u64));
                }
            });
        }
    });
    out
}

/// Bernoulli Monte Carlo summary: (estimate, standard error).
pub fn mc_estimate(successes: u64, trials: u64) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    let stderr = (p * (1.0 - p) / trials as f64).sqrt();
    (p, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trials_are_order_independent() {
        let f = |rng: &mut ChaCha8Rng| rng.gen::<f64>() < 0.3;
        let serial = count_successes(42, 1000, 1, f);
        let parallel = count_successes(42, 1000, 8, f);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn distinct_trials_distinct_streams() {
        let a: u64 = trial_rng(7, 0).gen();
        let b: u64 = trial_rng(7, 1).gen();
        assert_ne!(a, b);
        let a2: u64 = trial_rng(7, 0).gen();
        assert_eq!(a, a2);
    }
}
