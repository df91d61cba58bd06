//! Dense O(k^3) assignment via shortest augmenting paths with dual potentials.

/// Minimum-cost perfect assignment on a row-major `k x k` cost matrix.
///
/// Returns `assign` with `assign[row] = column`.
pub fn solve(costs: &[f64], k: usize) -> Vec<usize> {
    debug_assert_eq!(costs.len(), k * k);
    if k == 0 {
        return Vec::new();
    }

    // 1-based with column 0 as the virtual root of each augmenting tree.
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut row_of = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    let mut minv = vec![0.0f64; k + 1];
    let mut used = vec![false; k + 1];

    for i in 1..=k {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);

        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &costs[(i0 - 1) * k..i0 * k];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;

            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }

            for j in 0..=k {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }

            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; k];
    for j in 1..=k {
        assign[row_of[j] - 1] = j - 1;
    }
    assign
}
