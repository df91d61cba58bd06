//! Ground-truth quality measures and the metrics table.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{exact_cost, hungarian, Metric};
use crate::pattern::{Instance, Prototype};
use crate::prototype;

/// Percentage of items whose argmax prototype slot disagrees with the truth
/// after the best one-to-one alignment of slots and labels.
pub fn misclustered_percentage(q: &Prototype, truth: &[usize]) -> Result<f64> {
    let items = truth.len();
    if items == 0 {
        return Err(Error::Empty("no truth labels"));
    }
    if q.d() != items {
        return Err(Error::DimensionMismatch { expected: items, got: q.d() });
    }
    let mut names: Vec<usize> = truth.to_vec();
    names.sort_unstable();
    names.dedup();
    let size = q.k().max(names.len());
    let mut agree = vec![0.0; size * size];
    for (i, t) in truth.iter().enumerate() {
        let mut slot = 0;
        for j in 1..q.k() {
            if q.point(j)[i] > q.point(slot)[i] {
                slot = j;
            }
        }
        let label = names.binary_search(t).expect("label present");
        agree[slot * size + label] += 1.0;
    }
    let costs: Vec<f64> = agree.iter().map(|a| -a).collect();
    let assign = hungarian::solve(&costs, size);
    let matched: f64 = assign.iter().enumerate().map(|(r, &c)| agree[r * size + c]).sum();
    Ok(100.0 * (items as f64 - matched) / items as f64)
}

/// `M(full, coreset) / (objective(inst, full) / n)`.
pub fn x_over_ave(full: &Prototype, coreset: &Prototype, inst: &Instance, metric: Metric) -> Result<f64> {
    full.check_compatible(coreset)?;
    let x = exact_cost(full, coreset, metric)?;
    let ave = prototype::objective(inst, full, metric)? / inst.n() as f64;
    if ave > 0.0 {
        Ok(x / ave)
    } else if x == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("average cost is zero but prototypes differ by {x}")))
    }
}

/// `value / baseline`, with a zero baseline giving 1 for a zero value.
pub fn ratio(value: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        value / baseline
    } else if value == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_label: String,
    pub fraction: f64,
    pub objective: f64,
    pub normalized_objective: f64,
    pub wall_time_s: f64,
    pub normalized_time: f64,
    pub ground_truth_metric: f64,
    pub seed: u64,
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
