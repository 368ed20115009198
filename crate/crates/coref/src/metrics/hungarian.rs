//! Optimal assignment for rectangular score matrices.

/// Maximum-score one-to-one assignment of rows to columns. Returns the total
/// score and, per row, the assigned column (None when rows exceed columns
/// and the row stays unmatched).
pub fn max_assignment(scores: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = scores.len();
    if rows == 0 {
        return (0.0, Vec::new());
    }
    let cols = scores[0].len();
    if cols == 0 {
        return (0.0, vec![None; rows]);
    }
    // pad to a square minimization problem: cost = -score, padding 0
    let n = rows.max(cols);
    let cost = |r: usize, c: usize| -> f64 {
        if r < rows && c < cols {
            -scores[r][c]
        } else {
            0.0
        }
    };

    // shortest augmenting path with potentials (1-based internal arrays)
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // per column, 1-based row
    let mut way = vec![0usize; n + 1];
    for r in 1..=n {
        assigned_row[0] = r;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=n {
        let r = assigned_row[j];
        if r >= 1 && r - 1 < rows && j - 1 < cols {
            result[r - 1] = Some(j - 1);
            total += scores[r - 1][j - 1];
        }
    }
    (total, result)
}
