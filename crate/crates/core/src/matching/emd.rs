//! Earth mover's distance between equal-mass integer-weighted point sets,
//! solved exactly as a transportation problem with successive shortest
//! paths. Capacities are integral, so every augmentation is integral and the
//! returned flow is an integral optimum.

/// Row-major `k x k` flow with `flow[j * k + l]` units shipped from `a_j` to `b_l`.
///
/// Successive shortest paths on the bipartite residual graph: every phase
/// runs Dijkstra (on reduced costs) from all sources with supply left, stops
/// at the first sink with demand left and pushes the bottleneck amount.
pub(crate) fn transport(costs: &[f64], supply: &[u64], demand: &[u64]) -> Vec<u64> {
    let k = supply.len();
    debug_assert_eq!(demand.len(), k);
    debug_assert_eq!(costs.len(), k * k);

    let mut flow = vec![0u64; k * k];
    let mut rs = supply.to_vec();
    let mut rd = demand.to_vec();
    let mut left: u64 = supply.iter().sum();
    // Node x < k is source x, node k + l is sink l. All costs are
    // non-negative, so zero potentials start out feasible.
    let mut pot = vec![0.0f64; 2 * k];
    let mut dist = vec![f64::INFINITY; 2 * k];
    let mut done = vec![false; 2 * k];
    // For a sink: the source it was reached from. For a source: the sink
    // whose backward arc reached it (usize::MAX for a root).
    let mut parent = vec![usize::MAX; 2 * k];

    while left > 0 {
        dist.fill(f64::INFINITY);
        done.fill(false);
        parent.fill(usize::MAX);
        for j in 0..k {
            if rs[j] > 0 {
                dist[j] = 0.0;
            }
        }

        let mut target = usize::MAX;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (x, (&dx, &fin)) in dist.iter().zip(&done).enumerate() {
                if !fin && dx < best {
                    best = dx;
                    u = x;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < k {
                let row = &costs[u * k..(u + 1) * k];
                for l in 0..k {
                    let v = k + l;
                    if done[v] {
                        continue;
                    }
                    // Rounding can push reduced costs a hair below zero.
                    let nd = best + (row[l] + pot[u] - pot[v]).max(0.0);
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = u;
                    }
                }
            } else {
                let l = u - k;
                if rd[l] > 0 {
                    target = l;
                    break;
                }
                for j in 0..k {
                    if done[j] || flow[j * k + l] == 0 {
                        continue;
                    }
                    let nd = best + (-costs[j * k + l] + pot[u] - pot[j]).max(0.0);
                    if nd < dist[j] {
                        dist[j] = nd;
                        parent[j] = l;
                    }
                }
            }
        }
        if target == usize::MAX {
            break;
        }

        let dt = dist[k + target];
        for (p, &dx) in pot.iter_mut().zip(&dist) {
            *p += dx.min(dt);
        }

        // Walk back to the root source and find the bottleneck.
        let mut push = rd[target];
        let mut l = target;
        let root = loop {
            let j = parent[k + l];
            match parent[j] {
                usize::MAX => break j,
                prev => {
                    push = push.min(flow[j * k + prev]);
                    l = prev;
                }
            }
        };
        push = push.min(rs[root]);

        let mut l = target;
        loop {
            let j = parent[k + l];
            flow[j * k + l] += push;
            match parent[j] {
                usize::MAX => break,
                prev => {
                    flow[j * k + prev] -= push;
                    l = prev;
                }
            }
        }
        rs[root] -= push;
        rd[target] -= push;
        left -= push;
    }
    flow
}

/// Feasible (not necessarily optimal) flow: each source in input order
/// ships to its nearest sinks that still have demand.
pub(crate) fn greedy_transport(costs: &[f64], supply: &[u64], demand: &[u64]) -> Vec<u64> {
    let k = supply.len();
    let mut left = demand.to_vec();
    let mut flow = vec![0u64; k * k];
    for (j, &a) in supply.iter().enumerate() {
        let mut rem = a;
        while rem > 0 {
            let Some(l) = (0..k)
                .filter(|&l| left[l] > 0)
                .min_by(|&x, &y| costs[j * k + x].total_cmp(&costs[j * k + y]))
            else {
                break;
            };
            let q = rem.min(left[l]);
            flow[j * k + l] += q;
            left[l] -= q;
            rem -= q;
        }
    }
    flow
}
