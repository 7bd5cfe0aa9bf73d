use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `‖a_n − a_{n−1}‖ ≤ stop_tol`.
    Converged,
    /// Step budget or schedule length reached.
    Budget,
    /// No decrease of the step size over a long window.
    Stalled,
}

/// One stored step `n`: `b_n = P_{B_n}(a_{n−1})`, `a_n = P_{A_n}(b_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub block: usize,
    pub a: Vector,
    pub b: Vector,
    /// `‖a_n − a_{n−1}‖`
    pub step_size: f64,
    /// `dist(a_n, A)` for the reference (limit) set `A`.
    pub dist_a: Option<f64>,
    pub dist_to_e: Option<f64>,
    pub dist_to_f: Option<f64>,
}

/// Iterate history. Long runs keep a thinned subset of steps (always
/// including block boundaries and the final step); `steps` is the true length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub start: Vector,
    pub records: Vec<StepRecord>,
    pub steps: usize,
    pub stop_reason: StopReason,
    pub block_boundaries: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub steps: usize,
    pub stored_steps: usize,
    pub stop_reason: StopReason,
    pub final_a: Vector,
    pub final_b: Vector,
    pub final_step_size: f64,
    pub final_dist_to_e: Option<f64>,
    pub final_dist_to_f: Option<f64>,
    pub min_dist_to_e: Option<f64>,
    pub max_dist_to_e: Option<f64>,
    pub block_boundaries: Vec<usize>,
}

impl Trace {
    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// Final `a_n` (the start point for an empty run).
    pub fn final_a(&self) -> &Vector {
        self.records.last().map(|r| &r.a).unwrap_or(&self.start)
    }

    pub fn final_b(&self) -> Option<&Vector> {
        self.records.last().map(|r| &r.b)
    }

    pub fn a_iterates(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.a)
    }

    pub fn b_iterates(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.b)
    }

    pub fn record_at(&self, step: usize) -> Option<&StepRecord> {
        self.records
            .binary_search_by_key(&step, |r| r.step)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn summary(&self) -> TraceSummary {
        let last = self.records.last();
        let de: Vec<f64> = self.records.iter().filter_map(|r| r.dist_to_e).collect();
        TraceSummary {
            steps: self.steps,
            stored_steps: self.records.len(),
            stop_reason: self.stop_reason,
            final_a: self.final_a().clone(),
            final_b: last.map(|r| r.b.clone()).unwrap_or_else(|| self.start.clone()),
            final_step_size: last.map(|r| r.step_size).unwrap_or(0.0),
            final_dist_to_e: last.and_then(|r| r.dist_to_e),
            final_dist_to_f: last.and_then(|r| r.dist_to_f),
            min_dist_to_e: de.iter().copied().reduce(f64::min),
            max_dist_to_e: de.iter().copied().reduce(f64::max),
            block_boundaries: self.block_boundaries.clone(),
        }
    }

    /// CSV with columns `step, phase, x0..x{d-1}, dist_to_E, dist_to_F, block_id`.
    ///
    /// Each stored step gives a `B` row (`b_n`, with `dist_to_F`) followed by an
    /// `A` row (`a_n`, with `dist_to_E`); step 0 is the start point as an `A`
    /// row. Unavailable distances are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let dim = self.start.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "phase".to_string()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        header.extend(["dist_to_E", "dist_to_F", "block_id"].map(String::from));
        w.write_record(&header)?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let row = |step: usize, phase: &str, x: &Vector, de: Option<f64>, df: Option<f64>, block: usize| {
            let mut r = vec![step.to_string(), phase.to_string()];
            r.extend(x.as_slice().iter().map(|c| c.to_string()));
            r.push(opt(de));
            r.push(opt(df));
            r.push(block.to_string());
            r
        };
        w.write_record(row(0, "A", &self.start, None, None, 0))?;
        for rec in &self.records {
            w.write_record(row(rec.step, "B", &rec.b, None, rec.dist_to_f, rec.block))?;
            w.write_record(row(rec.step, "A", &rec.a, rec.dist_to_e, None, rec.block))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decides which steps of a run of known maximal length are stored: all of
/// them up to `max_stored`, otherwise a linear head followed by a geometric
/// grid.
#[derive(Clone, Debug)]
pub(crate) struct Thinner {
    head: usize,
    ratio: f64,
    next: f64,
    keep_all: bool,
}

impl Thinner {
    pub(crate) fn new(total: usize, max_stored: usize) -> Self {
        let max_stored = max_stored.max(2);
        if total <= max_stored {
            return Thinner {
                head: total,
                ratio: 1.0,
                next: f64::INFINITY,
                keep_all: true,
            };
        }
        let head = max_stored / 2;
        let tail = (max_stored - head) as f64;
        let ratio = (total as f64 / head as f64).powf(1.0 / tail);
        Thinner {
            head,
            ratio,
            next: head as f64 * ratio,
            keep_all: false,
        }
    }

    pub(crate) fn keep(&mut self, step: usize) -> bool {
        if self.keep_all || step <= self.head {
            return true;
        }
        if step as f64 >= self.next {
            while self.next <= step as f64 {
                self.next *= self.ratio;
            }
            return true;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinner_respects_cap() {
        let total = 1_000_000;
        let mut t = Thinner::new(total, 10_000);
        let kept = (1..=total).filter(|&n| t.keep(n)).count();
        assert!(kept <= 10_000, "{kept}");
        assert!(kept > 9_000, "{kept}");
        let mut t = Thinner::new(50, 10_000);
        assert_eq!((1..=50).filter(|&n| t.keep(n)).count(), 50);
    }

    #[test]
    fn csv_layout() {
        let v = |c: &[f64]| Vector::new(c.to_vec()).unwrap();
        let trace = Trace {
            start: v(&[5.0, 5.0]),
            records: vec![StepRecord {
                step: 1,
                block: 0,
                a: v(&[1.0, 5.0]),
                b: v(&[0.0, 5.0]),
                step_size: 4.0,
                dist_a: Some(0.0),
                dist_to_e: Some(0.5),
                dist_to_f: None,
            }],
            steps: 1,
            stop_reason: StopReason::Budget,
            block_boundaries: vec![1],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,phase,x0,x1,dist_to_E,dist_to_F,block_id");
        assert_eq!(lines[1], "0,A,5,5,,,0");
        assert_eq!(lines[2], "1,B,0,5,,,0");
        assert_eq!(lines[3], "1,A,1,5,0.5,,0");
    }
}
