use crate::alpharank::l1;
use crate::error::{Error, Result};
use crate::rank_belief::RankSampleSet;

const NONE: usize = usize::MAX;

/// Minimum-cost transport between integer supplies and demands.
///
/// `cost` is row-major `supply.len() × demand.len()`. Solved exactly by
/// successive shortest paths with Dijkstra on reduced costs.
pub fn transport_cost(supply: &[u64], demand: &[u64], cost: &[f64]) -> Result<f64> {
    let n1 = supply.len();
    let n2 = demand.len();
    if cost.len() != n1 * n2 {
        return Err(Error::shape(n1 * n2, cost.len()));
    }
    if supply.iter().sum::<u64>() != demand.iter().sum::<u64>() {
        return Err(Error::Transport("supply and demand totals differ".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Transport("non-finite cost".into()));
    }
    let mut sup = supply.to_vec();
    let mut dem = demand.to_vec();
    let mut flow = vec![0u64; n1 * n2];
    let v = n1 + n2;
    let mut pot = vec![0.0f64; v];
    let mut dist = vec![f64::INFINITY; v];
    let mut done = vec![false; v];
    // right node j reached from left prev[n1 + j]; left node i reached back from right prev[i]
    let mut prev = vec![NONE; v];
    let mut remaining: u64 = sup.iter().sum();

    while remaining > 0 {
        dist.fill(f64::INFINITY);
        done.fill(false);
        prev.fill(NONE);
        for i in 0..n1 {
            if sup[i] > 0 {
                dist[i] = 0.0;
            }
        }
        let mut target = NONE;
        loop {
            let mut u = NONE;
            let mut best = f64::INFINITY;
            for (k, (&d, &f)) in dist.iter().zip(&done).enumerate() {
                if !f && d < best {
                    best = d;
                    u = k;
                }
            }
            if u == NONE {
                break;
            }
            done[u] = true;
            if u < n1 {
                for j in 0..n2 {
                    let w = n1 + j;
                    if done[w] {
                        continue;
                    }
                    let rc = (cost[u * n2 + j] + pot[u] - pot[w]).max(0.0);
                    if best + rc < dist[w] {
                        dist[w] = best + rc;
                        prev[w] = u;
                    }
                }
            } else {
                let j = u - n1;
                if dem[j] > 0 {
                    target = u;
                    break;
                }
                for i in 0..n1 {
                    if done[i] || flow[i * n2 + j] == 0 {
                        continue;
                    }
                    let rc = (-cost[i * n2 + j] + pot[u] - pot[i]).max(0.0);
                    if best + rc < dist[i] {
                        dist[i] = best + rc;
                        prev[i] = u;
                    }
                }
            }
        }
        if target == NONE {
            return Err(Error::Transport("no augmenting path".into()));
        }
        let reach = dist[target];
        for k in 0..v {
            pot[k] += dist[k].min(reach);
        }
        // bottleneck
        let mut amount = dem[target - n1];
        let mut w = target;
        let source = loop {
            let i = prev[w];
            let r = prev[i];
            if r == NONE {
                break i;
            }
            amount = amount.min(flow[i * n2 + (r - n1)]);
            w = r;
        };
        amount = amount.min(sup[source]);
        let mut w = target;
        loop {
            let i = prev[w];
            flow[i * n2 + (w - n1)] += amount;
            let r = prev[i];
            if r == NONE {
                break;
            }
            flow[i * n2 + (r - n1)] -= amount;
            w = r;
        }
        sup[source] -= amount;
        dem[target - n1] -= amount;
        remaining -= amount;
    }
    Ok(flow.iter().zip(cost).map(|(&f, &c)| f as f64 * c).sum())
}

/// Exact 1-Wasserstein distance between the empirical measures of two rank
/// sample sets, with ground cost `½‖x − y‖₁`. Lies in `[0, 1]`.
pub fn wasserstein_tv(p: &RankSampleSet, q: &RankSampleSet) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::shape(p.dim(), q.dim()));
    }
    if p.is_empty() || q.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    let np = p.len() as u64;
    let nq = q.len() as u64;
    let mut pa: Vec<(Vec<f64>, u64)> = p.exact_atoms().into_iter().map(|(x, c)| (x, c as u64 * nq)).collect();
    let mut qa: Vec<(Vec<f64>, u64)> = q.exact_atoms().into_iter().map(|(y, c)| (y, c as u64 * np)).collect();
    // Under a metric cost, mass shared by both measures stays in place.
    for (x, a) in pa.iter_mut() {
        if let Some((_, b)) = qa.iter_mut().find(|(y, _)| y == x) {
            let common = (*a).min(*b);
            *a -= common;
            *b -= common;
        }
    }
    pa.retain(|(_, a)| *a > 0);
    qa.retain(|(_, b)| *b > 0);
    if pa.is_empty() {
        return Ok(0.0);
    }
    let supply: Vec<u64> = pa.iter().map(|(_, a)| *a).collect();
    let demand: Vec<u64> = qa.iter().map(|(_, b)| *b).collect();
    let mut cost = Vec::with_capacity(pa.len() * qa.len());
    for (x, _) in &pa {
        for (y, _) in &qa {
            cost.push(0.5 * l1(x, y));
        }
    }
    let total = transport_cost(&supply, &demand, &cost)?;
    Ok((total / (np as f64 * nq as f64)).clamp(0.0, 1.0))
}
