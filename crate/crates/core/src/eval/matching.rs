//! Maximum-weight one-to-one assignment on a rectangular score table.

/// Exhaustive search up to this square size, Hungarian algorithm beyond.
const EXHAUSTIVE_LIMIT: usize = 8;

/// `assignment[r] = Some(c)` maximizing the summed `weights[r][c]` with every
/// column used at most once. Rows beyond the column count stay unmatched.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let size = rows.max(cols);
    let padded: Vec<Vec<f64>> = (0..size)
        .map(|r| {
            (0..size)
                .map(|c| {
                    if r < rows && c < cols {
                        weights[r][c]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let perm = if size <= EXHAUSTIVE_LIMIT {
        exhaustive(&padded)
    } else {
        hungarian_max(&padded)
    };
    (0..rows)
        .map(|r| Some(perm[r]).filter(|&c| c < cols))
        .collect()
}

/// Best permutation in lexicographic order (first one wins ties).
fn exhaustive(w: &[Vec<f64>]) -> Vec<usize> {
    let size = w.len();
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best = perm.clone();
    let mut best_score = f64::NEG_INFINITY;
    loop {
        let score: f64 = perm.iter().enumerate().map(|(r, &c)| w[r][c]).sum();
        if score > best_score {
            best_score = score;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            return best;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// O(n^3) Hungarian algorithm with potentials, on costs `max - w`.
fn hungarian_max(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    let top = w
        .iter()
        .flatten()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let cost = |r: usize, c: usize| top - w[r][c];
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for c in 1..=n {
                if !used[c] {
                    let cur = cost(r0 - 1, c - 1) - u[r0] - v[c];
                    if cur < minv[c] {
                        minv[c] = cur;
                        way[c] = col0;
                    }
                    if minv[c] < delta {
                        delta = minv[c];
                        col1 = c;
                    }
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for c in 1..=n {
        if owner[c] > 0 {
            assignment[owner[c] - 1] = c - 1;
        }
    }
    assignment
}
