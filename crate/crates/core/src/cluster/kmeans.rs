use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the relative inertia improvement drops below this.
    pub tol: f64,
    pub n_restarts: usize,
    pub seed: RngSeed,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 300,
            tol: 1e-6,
            n_restarts: 10,
            seed: RngSeed(0),
        }
    }

    pub fn with_seed(mut self, seed: impl Into<RngSeed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_restarts(mut self, n_restarts: usize) -> Self {
        self.n_restarts = n_restarts;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    fn validate(&self, count: usize) -> Result<()> {
        if count == 0 {
            return Err(Error::invalid("kmeans needs at least one point"));
        }
        if self.k == 0 {
            return Err(Error::invalid("number of clusters must be at least 1"));
        }
        if self.k > count {
            return Err(Error::invalid(format!(
                "number of clusters {} exceeds number of points {count}",
                self.k
            )));
        }
        if self.max_iters == 0 || self.n_restarts == 0 {
            return Err(Error::invalid("max_iters and n_restarts must be positive"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::invalid("tolerance must be a nonnegative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KMeansDiagnostics {
    /// Cluster ids with no members in the returned labelling.
    pub empty_clusters: Vec<usize>,
    /// Empty clusters reseeded during Lloyd iterations, summed over restarts.
    pub empty_repairs: usize,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
    /// Assignment steps, over all restarts, whose inertia rose above the previous one.
    pub non_monotone_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Per-point confidence in [0, 1]; empty when not computed.
    pub confidence: Vec<f64>,
    pub iterations_run: usize,
    pub diagnostics: KMeansDiagnostics,
}

impl ClusterResult {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// kmeans++ seeding followed by Lloyd iterations, best of `n_restarts`.
pub fn kmeans_pp(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<ClusterResult> {
    cfg.validate(points.len())?;
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("all points must have the same dimension"));
    }
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    kmeans_rows(&flat, dim, cfg)
}

/// As [`kmeans_pp`] over the rows of a row-major matrix with `dim` columns.
pub fn kmeans_rows(data: &[f64], dim: usize, cfg: &KMeansConfig) -> Result<ClusterResult> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::invalid(format!(
            "{} values do not form rows of dimension {dim}",
            data.len()
        )));
    }
    let rows = Rows { data, dim };
    cfg.validate(rows.len())?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("kmeans input must be finite"));
    }

    let outcomes = run_restarts(&rows, cfg);

    // First restart wins ties.
    let best = outcomes.iter().enumerate().fold(0, |best, (r, o)| {
        if o.inertia < outcomes[best].inertia {
            r
        } else {
            best
        }
    });

    let restart_inertias = outcomes.iter().map(|o| o.inertia).collect();
    let empty_repairs = outcomes.iter().map(|o| o.repairs).sum();
    let non_monotone_steps = outcomes.iter().map(|o| o.non_monotone).sum();
    let winner = outcomes
        .into_iter()
        .nth(best)
        .expect("at least one restart");

    let mut sizes = vec![0usize; cfg.k];
    for &l in &winner.labels {
        sizes[l] += 1;
    }
    Ok(ClusterResult {
        labels: winner.labels,
        centers: winner.centers.chunks(dim).map(<[f64]>::to_vec).collect(),
        inertia: winner.inertia,
        confidence: Vec::new(),
        iterations_run: winner.iterations,
        diagnostics: KMeansDiagnostics {
            empty_clusters: (0..cfg.k).filter(|&c| sizes[c] == 0).collect(),
            empty_repairs,
            restart_inertias,
            inertia_trace: winner.trace,
            non_monotone_steps,
        },
    })
}

struct Rows<'a> {
    data: &'a [f64],
    dim: usize,
}

impl Rows<'_> {
    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

struct Restart {
    labels: Vec<usize>,
    centers: Vec<f64>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
    repairs: usize,
    non_monotone: usize,
}

struct RunState {
    rng: ChaCha8Rng,
    centers: Vec<f64>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
    repairs: usize,
    non_monotone: usize,
    active: bool,
}

/// Per-point state of every restart, stored point-major (`n x restarts`) so a
/// single pass over the rows can update all restarts while each row is hot
/// in cache.
struct Lockstep<'a> {
    rows: &'a Rows<'a>,
    k: usize,
    runs: Vec<RunState>,
    labels: Vec<usize>,
    d2: Vec<f64>,
}

impl Lockstep<'_> {
    fn width(&self) -> usize {
        self.runs.len()
    }

    fn d2_of(&self, r: usize) -> impl Iterator<Item = f64> + '_ {
        self.d2.iter().skip(r).step_by(self.width()).copied()
    }
}

/// All restarts advance together. Each restart performs exactly the
/// arithmetic, in the same order, that it would perform on its own, so the
/// result does not depend on how many restarts share a pass or on the thread
/// count.
fn run_restarts(rows: &Rows<'_>, cfg: &KMeansConfig) -> Vec<Restart> {
    let n = rows.len();
    let width = cfg.n_restarts;
    let mut state = Lockstep {
        rows,
        k: cfg.k,
        runs: (0..width)
            .map(|r| RunState {
                rng: cfg.seed.child(r as u64).rng(),
                centers: Vec::with_capacity(cfg.k * rows.dim),
                inertia: 0.0,
                iterations: 0,
                trace: Vec::new(),
                repairs: 0,
                non_monotone: 0,
                active: true,
            })
            .collect(),
        labels: vec![0; n * width],
        d2: vec![f64::INFINITY; n * width],
    };

    seed_plus_plus(&mut state);
    assign(&mut state);
    for r in 0..width {
        let inertia: f64 = state.d2_of(r).sum();
        let run = &mut state.runs[r];
        run.inertia = inertia;
        run.trace.push(inertia);
        run.active = inertia > 0.0;
    }

    while state.runs.iter().any(|run| run.active) {
        update_centers(&mut state);
        assign(&mut state);
        for r in 0..width {
            if !state.runs[r].active {
                continue;
            }
            let next: f64 = state.d2_of(r).sum();
            let run = &mut state.runs[r];
            run.iterations += 1;
            run.trace.push(next);
            let previous = run.inertia;
            if next > previous * (1.0 + 1e-9) + 1e-12 {
                run.non_monotone += 1;
            }
            debug_assert!(
                next <= previous * (1.0 + 1e-9) + 1e-12,
                "Lloyd step increased inertia from {previous} to {next}"
            );
            run.inertia = next;
            let converged = previous - next <= cfg.tol * previous;
            if converged || next <= 0.0 || run.iterations >= cfg.max_iters {
                run.active = false;
            }
        }
    }

    let Lockstep { runs, labels, .. } = state;
    runs.into_iter()
        .enumerate()
        .map(|(r, run)| Restart {
            labels: labels.iter().skip(r).step_by(width).copied().collect(),
            centers: run.centers,
            inertia: run.inertia,
            iterations: run.iterations,
            trace: run.trace,
            repairs: run.repairs,
            non_monotone: run.non_monotone,
        })
        .collect()
}

/// kmeans++ seeding: the first center uniformly, each next one with
/// probability proportional to the squared distance to the nearest chosen
/// center. Leaves the nearest-center squared distances in `state.d2`.
fn seed_plus_plus(state: &mut Lockstep<'_>) {
    let n = state.rows.len();
    let width = state.width();
    for step in 0..state.k {
        for r in 0..width {
            let pick = if step == 0 {
                state.runs[r].rng.random_range(0..n)
            } else {
                let total: f64 = state.d2_of(r).sum();
                if total > 0.0 {
                    let target = state.runs[r].rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut chosen = None;
                    let mut last_positive = 0;
                    for (i, w) in state.d2_of(r).enumerate() {
                        if w > 0.0 {
                            last_positive = i;
                        }
                        acc += w;
                        if w > 0.0 && acc > target {
                            chosen = Some(i);
                            break;
                        }
                    }
                    // Rounding can leave the target just past the last positive weight.
                    chosen.unwrap_or(last_positive)
                } else {
                    state.runs[r].rng.random_range(0..n)
                }
            };
            let row = state.rows.row(pick);
            state.runs[r].centers.extend_from_slice(row);
        }
        let rows = state.rows;
        let dim = rows.dim;
        let runs = &state.runs;
        state
            .d2
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, slots)| {
                let row = rows.row(i);
                for (slot, run) in slots.iter_mut().zip(runs) {
                    let d = sq_dist(row, &run.centers[step * dim..(step + 1) * dim]);
                    if d < *slot {
                        *slot = d;
                    }
                }
            });
    }
}

/// Nearest center for every point of every active restart; ties go to the
/// lowest center id.
fn assign(state: &mut Lockstep<'_>) {
    let width = state.width();
    let rows = state.rows;
    let dim = rows.dim;
    let runs = &state.runs;
    state
        .labels
        .par_chunks_mut(width)
        .zip(state.d2.par_chunks_mut(width))
        .enumerate()
        .for_each(|(i, (labels, d2))| {
            let row = rows.row(i);
            for (r, run) in runs.iter().enumerate() {
                if !run.active {
                    continue;
                }
                let mut best = (0, f64::INFINITY);
                for (c, center) in run.centers.chunks(dim).enumerate() {
                    let d = sq_dist(row, center);
                    if d < best.1 {
                        best = (c, d);
                    }
                }
                labels[r] = best.0;
                d2[r] = best.1;
            }
        });
}

/// Moves every active restart's centers to the mean of their points. An
/// empty cluster is re-seeded at the point farthest from its current center.
fn update_centers(state: &mut Lockstep<'_>) {
    let width = state.width();
    let (k, dim) = (state.k, state.rows.dim);
    let mut counts = vec![0usize; width * k];
    for run in state.runs.iter_mut().filter(|run| run.active) {
        run.centers.fill(0.0);
    }
    for i in 0..state.rows.len() {
        let row = state.rows.row(i);
        for (r, run) in state.runs.iter_mut().enumerate() {
            if !run.active {
                continue;
            }
            let l = state.labels[i * width + r];
            counts[r * k + l] += 1;
            let center = &mut run.centers[l * dim..(l + 1) * dim];
            for (c, v) in center.iter_mut().zip(row) {
                *c += v;
            }
        }
    }
    for r in 0..width {
        if !state.runs[r].active {
            continue;
        }
        for c in 0..k {
            let count = counts[r * k + c];
            if count > 0 {
                let inv = 1.0 / count as f64;
                state.runs[r].centers[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .for_each(|v| *v *= inv);
            } else {
                let far = state
                    .d2_of(r)
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, d)| {
                        if d > best.1 {
                            (i, d)
                        } else {
                            best
                        }
                    })
                    .0;
                let row = state.rows.row(far);
                state.runs[r].centers[c * dim..(c + 1) * dim].copy_from_slice(row);
                state.d2[far * width + r] = 0.0;
                state.runs[r].repairs += 1;
            }
        }
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    for (x, y) in chunks_a.zip(chunks_b) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
