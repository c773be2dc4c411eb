//! Window-size detection from the moving-average deviation curve.
//!
//! For every candidate window `w` the series is smoothed with a length-`w`
//! moving average and scored by `sum(log|MA - mean(MA)|)`. When `w` is a
//! multiple of the natural period the moving average flattens, so the curve
//! has local minima near `p, 2p, 3p, ...`. The estimate is the mean of
//! `w_i / (i + 1)` over those minima, and the confidence is one minus their
//! relative spread.
//!
//! The raw sign-change minima include shallow wiggles (noise, or sampling
//! phase alignment on very clean signals). Only minima deep enough to be
//! valleys feed the estimate: the depth of a minimum is its prominence on the
//! curve divided by the number of moving-average samples, i.e. how many nats
//! per sample the deviation drops below the surrounding ridge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{mean_std, TimeSeries};

/// Added inside the logarithm so a perfectly flat moving average stays finite.
pub const LOG_EPSILON: f64 = 1e-12;
pub const DEFAULT_START: usize = 10;
pub const DEFAULT_MAX_WINDOW: usize = 1000;
pub const DEFAULT_BATCH_LENGTH: usize = 5000;
/// Smallest per-sample valley depth, in nats.
pub const DEFAULT_MIN_DEPTH: f64 = 0.5;
/// Valleys shallower than this fraction of the deepest one are ignored.
pub const DEFAULT_RELATIVE_DEPTH: f64 = 0.1;
const MIN_MINIMA: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingDistCurve {
    pub w_values: Vec<usize>,
    pub scores: Vec<f64>,
    /// Indices into `w_values`.
    pub local_minima: Vec<usize>,
    /// Per-sample depth of each entry of `local_minima`.
    pub depths: Vec<f64>,
    /// The subset of `local_minima` deep enough to count.
    pub valleys: Vec<usize>,
}

impl MovingDistCurve {
    pub fn minima_windows(&self) -> Vec<usize> {
        self.local_minima
            .iter()
            .map(|&i| self.w_values[i])
            .collect()
    }

    pub fn valley_windows(&self) -> Vec<usize> {
        self.valleys.iter().map(|&i| self.w_values[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub window: f64,
    pub confidence: f64,
    pub residuals: Vec<f64>,
    pub curve: MovingDistCurve,
}

/// Prefix sums kept as an unevaluated hi + lo pair (Neumaier), so differences
/// of long prefixes keep full precision.
struct PrefixSums {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PrefixSums {
    fn new(values: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(values.len() + 1);
        let mut lo = Vec::with_capacity(values.len() + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        hi.push(0.0);
        lo.push(0.0);
        for &v in values {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
            hi.push(sum);
            lo.push(comp);
        }
        Self { hi, lo }
    }

    fn moving_average(&self, w: usize) -> Vec<f64> {
        let n = self.hi.len() - 1;
        let inv = 1.0 / w as f64;
        (0..=n - w)
            .map(|t| ((self.hi[t + w] - self.hi[t]) + (self.lo[t + w] - self.lo[t])) * inv)
            .collect()
    }
}

/// `out[t] = mean(values[t..t + w])`, via cumulative sums.
pub fn moving_average(ts: &TimeSeries, w: usize) -> Result<Vec<f64>> {
    if w == 0 || w > ts.len() {
        return Err(Error::invalid(format!(
            "moving-average window {w} must be in [1, {}]",
            ts.len()
        )));
    }
    Ok(PrefixSums::new(ts.values()).moving_average(w))
}

/// `sum_t ln(|MA[t] - mean(MA)| + LOG_EPSILON)` for the length-`w` moving average.
pub fn moving_dist(ts: &TimeSeries, w: usize) -> Result<f64> {
    if w == 0 || w > ts.len() / 2 {
        return Err(Error::invalid(format!(
            "moving-dist window {w} must be in [1, {}]",
            ts.len() / 2
        )));
    }
    Ok(score(&PrefixSums::new(ts.values()).moving_average(w)))
}

fn score(ma: &[f64]) -> f64 {
    let mu = ma.iter().sum::<f64>() / ma.len() as f64;
    ma.iter().map(|v| ((v - mu).abs() + LOG_EPSILON).ln()).sum()
}

/// Positions `i` where `diff(sign(diff(scores)))` is positive, shifted by one:
/// the interior points where the curve stops falling or starts rising.
pub fn local_minima(scores: &[f64]) -> Vec<usize> {
    let signs: Vec<i8> = scores
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    signs
        .windows(2)
        .enumerate()
        .filter(|(_, s)| s[1] > s[0])
        .map(|(i, _)| i + 1)
        .collect()
}

/// Prominence of each minimum: the lower of the two ridges that separate it
/// from deeper ground (or from the end of the curve), minus its own score.
pub fn prominences(scores: &[f64], minima: &[usize]) -> Vec<f64> {
    minima
        .iter()
        .map(|&i| {
            let v = scores[i];
            let left = ridge(scores[..i].iter().rev(), v);
            let right = ridge(scores[i + 1..].iter(), v);
            left.min(right) - v
        })
        .collect()
}

fn ridge<'a>(side: impl Iterator<Item = &'a f64>, floor: f64) -> f64 {
    let mut top = floor;
    for &s in side {
        if s < floor {
            break;
        }
        top = top.max(s);
    }
    top
}

/// Mean of `w_i / (i + 1)` over the minima and `1 - std/mean` of those ratios.
pub fn estimate_from_minima(minima_windows: &[usize]) -> Result<(f64, f64, Vec<f64>)> {
    if minima_windows.len() < MIN_MINIMA {
        return Err(Error::invalid(format!(
            "need at least {MIN_MINIMA} minima, got {}",
            minima_windows.len()
        )));
    }
    let residuals: Vec<f64> = minima_windows
        .iter()
        .enumerate()
        .map(|(i, &w)| w as f64 / (i + 1) as f64)
        .collect();
    let (mean, std) = mean_std(&residuals);
    Ok((mean, 1.0 - std / mean, residuals))
}

/// Sweep configuration; `max_window` defaults to `min(1000, n / 2)` and is
/// doubled (up to `n / 2`) until at least three minima appear.
/// A minimum counts as a valley when its depth is at least `min_depth` and at
/// least `relative_depth` times the deepest minimum found so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFinder {
    pub start: usize,
    pub max_window: Option<usize>,
    pub min_depth: f64,
    pub relative_depth: f64,
}

impl Default for WindowFinder {
    fn default() -> Self {
        Self {
            start: DEFAULT_START,
            max_window: None,
            min_depth: DEFAULT_MIN_DEPTH,
            relative_depth: DEFAULT_RELATIVE_DEPTH,
        }
    }
}

impl WindowFinder {
    pub fn new(start: usize, max_window: Option<usize>) -> Self {
        Self {
            start,
            max_window,
            ..Self::default()
        }
    }

    pub fn with_depths(mut self, min_depth: f64, relative_depth: f64) -> Self {
        self.min_depth = min_depth;
        self.relative_depth = relative_depth;
        self
    }

    pub fn find(&self, ts: &TimeSeries) -> Result<WindowEstimate> {
        find_in(ts.values(), self)
    }
}

pub fn multi_window_finder(
    ts: &TimeSeries,
    start: usize,
    max_window: Option<usize>,
) -> Result<WindowEstimate> {
    WindowFinder::new(start, max_window).find(ts)
}

fn find_in(values: &[f64], finder: &WindowFinder) -> Result<WindowEstimate> {
    let (start, max_window) = (finder.start, finder.max_window);
    if !(finder.min_depth >= 0.0) || !(0.0..=1.0).contains(&finder.relative_depth) {
        return Err(Error::invalid(
            "valley depth thresholds must be nonnegative, relative depth at most 1",
        ));
    }
    let n = values.len();
    if start == 0 {
        return Err(Error::invalid("smallest window must be at least 1"));
    }
    if n < 3 * start {
        return Err(Error::invalid(format!(
            "series of length {n} is shorter than 3 x start window {start}"
        )));
    }
    let cap = n / 2;
    let mut end = max_window.unwrap_or(DEFAULT_MAX_WINDOW).min(cap);
    if end < start + 2 {
        return Err(Error::invalid(format!(
            "window sweep [{start}, {end}] is too short to contain a local minimum"
        )));
    }
    let sums = PrefixSums::new(values);
    let mut curve = MovingDistCurve {
        w_values: Vec::new(),
        scores: Vec::new(),
        local_minima: Vec::new(),
        depths: Vec::new(),
        valleys: Vec::new(),
    };
    loop {
        let next = curve.w_values.last().map_or(start, |w| w + 1);
        for w in next..=end {
            curve.w_values.push(w);
            curve.scores.push(score(&sums.moving_average(w)));
        }
        mark_valleys(&mut curve, n, finder);
        if curve.valleys.len() >= MIN_MINIMA {
            break;
        }
        if end >= cap {
            return Err(Error::NoPeriodicity {
                found: curve.valleys.len(),
                max_window: end,
                curve: Box::new(curve),
            });
        }
        end = (end * 2).min(cap);
    }
    let (window, confidence, residuals) = estimate_from_minima(&curve.valley_windows())?;
    Ok(WindowEstimate {
        window,
        confidence,
        residuals,
        curve,
    })
}

fn mark_valleys(curve: &mut MovingDistCurve, n: usize, finder: &WindowFinder) {
    curve.local_minima = local_minima(&curve.scores);
    curve.depths = prominences(&curve.scores, &curve.local_minima)
        .into_iter()
        .zip(&curve.local_minima)
        .map(|(p, &i)| p / (n - curve.w_values[i] + 1) as f64)
        .collect();
    let deepest = curve.depths.iter().copied().fold(0.0, f64::max);
    let floor = finder.min_depth.max(finder.relative_depth * deepest);
    curve.valleys = curve
        .local_minima
        .iter()
        .zip(&curve.depths)
        .filter(|&(_, &d)| d >= floor)
        .map(|(&i, _)| i)
        .collect();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowBatch {
    pub start: usize,
    pub end: usize,
    pub estimate: Option<WindowEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetaSeries {
    pub batch_length: usize,
    pub batches: Vec<WindowBatch>,
}

impl WindowMetaSeries {
    /// Step function of the estimated window per timepoint; `None` where the batch failed.
    pub fn per_point(&self) -> Vec<Option<f64>> {
        self.batches
            .iter()
            .flat_map(|b| {
                std::iter::repeat_n(b.estimate.as_ref().map(|e| e.window), b.end - b.start)
            })
            .collect()
    }
}

/// Runs the finder on consecutive non-overlapping batches. A trailing
/// remainder shorter than half a batch is merged into the previous batch.
pub fn variable_window(ts: &TimeSeries, batch_length: usize) -> Result<WindowMetaSeries> {
    variable_window_with(ts, batch_length, WindowFinder::default())
}

pub fn variable_window_with(
    ts: &TimeSeries,
    batch_length: usize,
    finder: WindowFinder,
) -> Result<WindowMetaSeries> {
    if batch_length < 30 * finder.start {
        return Err(Error::invalid(format!(
            "batch length {batch_length} is below 30 x start window {}",
            finder.start
        )));
    }
    let values = ts.values();
    let mut bounds = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let end = (start + batch_length).min(values.len());
        if end - start < batch_length / 2 && !bounds.is_empty() {
            let last: &mut (usize, usize) = bounds.last_mut().expect("non-empty");
            last.1 = end;
        } else {
            bounds.push((start, end));
        }
        start = end;
    }
    let batches = bounds
        .into_iter()
        .map(|(start, end)| {
            let outcome = find_in(&values[start..end], &finder);
            let (estimate, error) = match outcome {
                Ok(est) => (Some(est), None),
                Err(e) => (None, Some(e.to_string())),
            };
            WindowBatch {
                start,
                end,
                estimate,
                error,
            }
        })
        .collect();
    Ok(WindowMetaSeries {
        batch_length,
        batches,
    })
}

/// Fraction of `(ground_truth, estimate)` pairs with `|gt - est| / gt <= 0.5`.
pub fn window_success_rate(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("success rate of an empty list"));
    }
    if pairs.iter().any(|&(gt, _)| !(gt > 0.0)) {
        return Err(Error::invalid("ground-truth windows must be positive"));
    }
    let hits = pairs
        .iter()
        .filter(|&&(gt, est)| (gt - est).abs() / gt <= 0.5)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values).unwrap()
    }

    #[test]
    fn moving_average_examples() {
        let s = ts(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(moving_average(&s, 1).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(moving_average(&s, 2).unwrap(), vec![1.5, 2.5, 3.5]);
        assert_eq!(moving_average(&s, 4).unwrap(), vec![2.5]);
        assert_eq!(moving_average(&ts(vec![7.0; 6]), 3).unwrap(), vec![7.0; 4]);
        assert!(moving_average(&s, 5).is_err());
        assert!(moving_average(&s, 0).is_err());
    }

    #[test]
    fn moving_dist_of_constant_hits_floor() {
        let s = ts(vec![2.0; 40]);
        let expected = 31.0 * LOG_EPSILON.ln();
        assert!((moving_dist(&s, 10).unwrap() - expected).abs() < 1e-9);
        assert!(moving_dist(&s, 21).is_err());
    }

    #[test]
    fn minima_from_sign_changes() {
        let scores = [5.0, 3.0, 4.0, 2.0, 2.0, 6.0, 1.0, 0.0];
        // diffs: -2 +1 -2 0 +4 -5 -1 ; signs -1 1 -1 0 1 -1 -1
        assert_eq!(local_minima(&scores), vec![1, 3, 4]);
        assert!(local_minima(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn prominence_of_nested_minima() {
        let scores = [9.0, 4.0, 6.0, 5.0, 8.0, 1.0, 3.0];
        let minima = local_minima(&scores);
        assert_eq!(minima, vec![1, 3, 5]);
        // 4.0 is walled in by 9 on the left and 8 on the right before deeper ground.
        // 5.0 sees 6 on the left before reaching 4.0. 1.0 is the global floor:
        // its left ridge is 9 and the right side runs off the end at 3.
        assert_eq!(prominences(&scores, &minima), vec![4.0, 1.0, 2.0]);
    }

    #[test]
    fn shallow_minima_are_not_valleys() {
        let values: Vec<f64> = (0..4000)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 40.0).sin())
            .collect();
        let est = multi_window_finder(&ts(values), 10, None).unwrap();
        assert!(est.curve.local_minima.len() > est.curve.valleys.len());
        assert_eq!(&est.curve.valley_windows()[..3], &[40, 80, 120]);
        assert!((est.window - 40.0).abs() < 0.5);
    }

    #[test]
    fn idealized_minima() {
        let (w, c, res) = estimate_from_minima(&[100, 200, 300]).unwrap();
        assert_eq!(res, vec![100.0; 3]);
        assert_eq!(w, 100.0);
        assert_eq!(c, 1.0);
        assert!(estimate_from_minima(&[100, 200]).is_err());
    }

    #[test]
    fn success_rate_threshold() {
        assert_eq!(window_success_rate(&[(100.0, 100.0)]).unwrap(), 1.0);
        assert_eq!(window_success_rate(&[(100.0, 151.0)]).unwrap(), 0.0);
        assert_eq!(
            window_success_rate(&[(100.0, 150.0), (10.0, 4.0)]).unwrap(),
            0.5
        );
        assert!(window_success_rate(&[]).is_err());
        assert!(window_success_rate(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn finder_preconditions() {
        let s = ts((0..20).map(|v| v as f64).collect());
        assert!(multi_window_finder(&s, 10, None).is_err());
        assert!(multi_window_finder(&s, 0, None).is_err());
        assert!(variable_window(&s, 100).is_err());
    }

    #[test]
    fn batches_merge_short_remainder() {
        let values: Vec<f64> = (0..2600)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 30.0).sin())
            .collect();
        let meta = variable_window(&ts(values[..2300].to_vec()), 1000).unwrap();
        let bounds: Vec<(usize, usize)> = meta.batches.iter().map(|b| (b.start, b.end)).collect();
        assert_eq!(bounds, vec![(0, 1000), (1000, 2300)]);
        assert_eq!(meta.per_point().len(), 2300);

        let meta = variable_window(&ts(values), 1000).unwrap();
        let bounds: Vec<(usize, usize)> = meta.batches.iter().map(|b| (b.start, b.end)).collect();
        assert_eq!(bounds, vec![(0, 1000), (1000, 2000), (2000, 2600)]);
    }
}
