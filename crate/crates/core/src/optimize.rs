//! Maximizing the deferred-correction success probability over resource
//! coefficients: a grid-plus-golden-section sweep along the tent slope, and a
//! multi-start Nelder–Mead search over general coefficient weights.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{
    deferred_success_prob_with_budget, format_sig12, ChainSpec, DEFAULT_LATTICE_BUDGET,
};
use crate::error::{Error, Result};
use crate::resource::{tent, ResourceCoeffs, TENT_X_MAX, TENT_X_MIN};

/// Width below which golden-section refinement stops.
pub const REFINE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub hops: usize,
    /// Grid samples `(x, p)` sorted by `x`.
    pub samples: Vec<(f64, f64)>,
    pub argmax_x: f64,
    pub max_p: f64,
}

impl SweepResult {
    /// CSV with header `x,p`, twelve significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("writing CSV: {e}"));
        w.write_record(["x", "p"]).map_err(io)?;
        for &(x, p) in &self.samples {
            w.write_record([format_sig12(x), format_sig12(p)])
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))?;
        Ok(())
    }
}

fn tent_objective(x: f64, hops: usize) -> Result<f64> {
    let spec = ChainSpec::uniform(tent(x)?, hops)?;
    deferred_success_prob_with_budget(&spec, DEFAULT_LATTICE_BUDGET)
}

/// Evaluates the tent-family chain probability on a uniform grid over
/// `[x_min, x_max]`, then refines around the best grid point.
pub fn sweep_x(hops: usize, x_min: f64, x_max: f64, steps: usize) -> Result<SweepResult> {
    if steps < 2 {
        return Err(Error::SweepSteps(steps));
    }
    let in_range = |x: f64| (TENT_X_MIN..=TENT_X_MAX).contains(&x);
    if !(x_min < x_max && in_range(x_min) && in_range(x_max)) {
        return Err(Error::SweepRange {
            from: x_min,
            to: x_max,
        });
    }
    if hops == 0 {
        return Err(Error::EmptyChain);
    }
    let dx = (x_max - x_min) / (steps - 1) as f64;
    let xs: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                x_max
            } else {
                x_min + i as f64 * dx
            }
        })
        .collect();
    let ps = xs
        .par_iter()
        .map(|&x| tent_objective(x, hops))
        .collect::<Result<Vec<f64>>>()?;
    let samples: Vec<(f64, f64)> = xs.into_iter().zip(ps).collect();

    let (best, &(bx, bp)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("at least two samples");
    let lo = samples[best.saturating_sub(1)].0;
    let hi = samples[(best + 1).min(steps - 1)].0;
    let (rx, rp) = golden_section_max(|x| tent_objective(x, hops), lo, hi, REFINE_TOLERANCE)?;
    let (argmax_x, max_p) = if rp > bp { (rx, rp) } else { (bx, bp) };
    Ok(SweepResult {
        hops,
        samples,
        argmax_x,
        max_p,
    })
}

/// Golden-section search for a maximum of a unimodal function on `[lo, hi]`.
/// Returns the best point evaluated, endpoints included.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (lo, f(lo)?);
    let fh = f(hi)?;
    if fh > best.1 {
        best = (hi, fh);
    }
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizedCoeffs {
    pub coeffs: ResourceCoeffs,
    pub p: f64,
    pub evaluations: usize,
}

const RANDOM_STARTS: usize = 8;
const MAX_EVALS_PER_RUN: usize = 4000;
const SIMPLEX_STEP: f64 = 0.05;
const NM_TOLERANCE: f64 = 1e-13;
const MAX_RESTARTS: usize = 25;

/// Multi-start Nelder–Mead over the weights `|c_i|^2` (phases do not affect
/// the objective). Starts from the uniform point and from seeded random
/// points; each start restarts around its incumbent until it stops improving.
/// Finds a local optimum only.
pub fn optimize_coeffs(n_photons: usize, hops: usize, seed: u64) -> Result<OptimizedCoeffs> {
    if n_photons < 1 {
        return Err(Error::TooFewPhotons(n_photons));
    }
    if hops < 1 {
        return Err(Error::EmptyChain);
    }
    let dim = n_photons + 1;
    let probe = ChainSpec::uniform(crate::resource::maximally_entangled(n_photons)?, hops)?;
    let terms = probe.lattice_size();
    if terms > DEFAULT_LATTICE_BUDGET {
        return Err(Error::BudgetExceeded {
            terms,
            budget: DEFAULT_LATTICE_BUDGET,
        });
    }

    let objective = |y: &[f64]| -> f64 {
        let w = project_to_simplex(y);
        let c = ResourceCoeffs::from_weights(&w).expect("projected weights are valid");
        let spec = ChainSpec::uniform(c, hops).expect("hops >= 1");
        deferred_success_prob_with_budget(&spec, DEFAULT_LATTICE_BUDGET).expect("within budget")
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![vec![1.0 / dim as f64; dim]];
    for _ in 0..RANDOM_STARTS {
        let e: Vec<f64> = (0..dim).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = e.iter().sum();
        starts.push(e.into_iter().map(|v| v / s).collect());
    }

    let runs: Vec<(Vec<f64>, f64, usize)> = starts
        .into_par_iter()
        .map(|start| {
            let mut x = start;
            let mut fx = objective(&x);
            let mut evals = 1;
            for _ in 0..MAX_RESTARTS {
                let (nx, nf, used) =
                    nelder_mead_max(&objective, &x, SIMPLEX_STEP, MAX_EVALS_PER_RUN);
                evals += used;
                if nf <= fx + NM_TOLERANCE {
                    break;
                }
                x = project_to_simplex(&nx);
                fx = nf;
            }
            (x, fx, evals)
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.2).sum();
    let (x, p, _) = runs
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one start");
    let coeffs = ResourceCoeffs::from_weights(&project_to_simplex(&x))?;
    Ok(OptimizedCoeffs {
        coeffs,
        p,
        evaluations,
    })
}

/// Nelder–Mead maximization with standard coefficients (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2). Returns the best vertex, its
/// value and the number of evaluations spent.
fn nelder_mead_max<F>(f: &F, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut evals = dim + 1;

    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };

    while evals < max_evals {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = simplex[0].1 - simplex[dim].1;
        if spread.abs() < NM_TOLERANCE {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v.0[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr > simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[dim] = if fe > fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr > worst.1 {
            let c = lerp(&centroid, &worst.0, -0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = lerp(&centroid, &worst.0, 0.5);
            let fc = f(&c);
            (c, fc)
        };
        evals += 1;
        if fc > worst.1.max(fr) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            v.0 = lerp(&best, &v.0, 0.5);
            v.1 = f(&v.0);
        }
        evals += dim;
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}
