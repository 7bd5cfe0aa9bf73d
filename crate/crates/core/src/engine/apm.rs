use std::ops::ControlFlow;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::vector::Vector;

use super::schedule::PerturbationSchedule;
use super::trace::{StepRecord, StopReason, Thinner, Trace};
use super::PairProblem;

/// Sets against which stored iterates are measured.
#[derive(Clone, Debug, Default)]
pub struct References {
    pub a: Option<Arc<ConvexSet>>,
    pub e: Option<Arc<ConvexSet>>,
    pub f: Option<Arc<ConvexSet>>,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub refs: References,
    pub max_stored: usize,
    /// A classical run stops as stalled when the step size has not decreased
    /// by a relative `1e-12` over this many steps.
    pub stall_window: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            refs: References::default(),
            max_stored: 10_000,
            stall_window: 1000,
        }
    }
}

impl RunOptions {
    pub fn with_refs(refs: References) -> Self {
        RunOptions {
            refs,
            ..Self::default()
        }
    }
}

/// What an observer sees after each step. Returning `ControlFlow::Break`
/// ends the run with [`StopReason::Converged`].
pub struct StepView<'a> {
    pub step: usize,
    pub block: usize,
    pub prev_a: &'a Vector,
    pub b: &'a Vector,
    pub a: &'a Vector,
}

/// Classical alternating projections `b_n = P_B(a_{n−1})`, `a_n = P_A(b_n)`
/// from `a_0 = x0`.
pub fn run_apm(pair: &PairProblem, x0: &Vector, budget: usize, stop_tol: f64) -> Result<Trace> {
    run_apm_with(
        &pair.a,
        &pair.b,
        x0,
        budget,
        stop_tol,
        &RunOptions::with_refs(pair.references()),
        |_| Ok(ControlFlow::Continue(())),
    )
}

pub fn run_apm_with<F>(
    a: &ConvexSet,
    b: &ConvexSet,
    x0: &Vector,
    budget: usize,
    stop_tol: f64,
    opts: &RunOptions,
    observer: F,
) -> Result<Trace>
where
    F: FnMut(&StepView) -> Result<ControlFlow<()>>,
{
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    let steps = std::iter::repeat((0usize, a, b)).take(budget);
    drive(steps, budget, &[budget], x0, Some(stop_tol), opts, observer)
}

/// Perturbed alternating projections `b_n = P_{B_n}(a_{n−1})`,
/// `a_n = P_{A_n}(b_n)` following the expanded schedule.
pub fn run_perturbed(schedule: &PerturbationSchedule, x0: &Vector, opts: &RunOptions) -> Result<Trace> {
    run_perturbed_with(schedule, x0, opts, |_| Ok(ControlFlow::Continue(())))
}

pub fn run_perturbed_with<F>(
    schedule: &PerturbationSchedule,
    x0: &Vector,
    opts: &RunOptions,
    observer: F,
) -> Result<Trace>
where
    F: FnMut(&StepView) -> Result<ControlFlow<()>>,
{
    if schedule.is_empty() {
        return Err(Error::Config("schedule is empty".into()));
    }
    drive(
        schedule.expand(),
        schedule.total_len(),
        &schedule.boundaries(),
        x0,
        None,
        opts,
        observer,
    )
}

/// `Π_n^{A,B}(x) = (P_A P_B)^n x`.
pub fn pi_operator(a: &ConvexSet, b: &ConvexSet, x: &Vector, n: usize) -> Result<Vector> {
    let mut y = x.clone();
    for step in 1..=n {
        let p = b.project(&y).map_err(|source| Error::ProjectionAt { step, source })?;
        y = a.project(&p).map_err(|source| Error::ProjectionAt { step, source })?;
    }
    Ok(y)
}

fn drive<'s, I, F>(
    steps: I,
    total: usize,
    boundaries: &[usize],
    x0: &Vector,
    stop_tol: Option<f64>,
    opts: &RunOptions,
    mut observer: F,
) -> Result<Trace>
where
    I: Iterator<Item = (usize, &'s ConvexSet, &'s ConvexSet)>,
    F: FnMut(&StepView) -> Result<ControlFlow<()>>,
{
    let mut thinner = Thinner::new(total, opts.max_stored);
    let mut next_boundary = boundaries.iter().copied().peekable();
    let mut records = Vec::new();
    let mut a = x0.clone();
    let mut stop_reason = StopReason::Budget;
    let mut last: Option<(usize, usize, Vector, f64)> = None;
    let mut best_step = f64::INFINITY;
    let mut best_at = 0;
    let mut n = 0;

    for (block, set_a, set_b) in steps {
        n += 1;
        let at = |source| Error::ProjectionAt { step: n, source };
        let b = set_b.project(&a).map_err(at)?;
        let a_new = set_a.project(&b).map_err(at)?;
        let step_size = a_new.dist(&a);
        let flow = observer(&StepView {
            step: n,
            block,
            prev_a: &a,
            b: &b,
            a: &a_new,
        })?;
        a = a_new;

        let mut at_boundary = false;
        while let Some(&nb) = next_boundary.peek() {
            if nb < n {
                next_boundary.next();
            } else {
                at_boundary = nb == n;
                break;
            }
        }
        let mut stop = flow.is_break().then_some(StopReason::Converged);
        if let (None, Some(tol)) = (stop, stop_tol) {
            if step_size <= tol {
                stop = Some(StopReason::Converged);
            } else if step_size < best_step * (1.0 - 1e-12) {
                best_step = step_size;
                best_at = n;
            } else if n - best_at >= opts.stall_window {
                stop = Some(StopReason::Stalled);
            }
        }
        if thinner.keep(n) || at_boundary || stop.is_some() {
            records.push(record(n, block, &a, &b, step_size, &opts.refs)?);
            last = None;
        } else {
            last = Some((n, block, b, step_size));
        }
        if let Some(reason) = stop {
            stop_reason = reason;
            break;
        }
    }
    if let Some((n, block, b, step_size)) = last {
        records.push(record(n, block, &a, &b, step_size, &opts.refs)?);
    }
    let block_boundaries = boundaries.iter().copied().filter(|&b| b <= n).collect();
    Ok(Trace {
        start: x0.clone(),
        records,
        steps: n,
        stop_reason,
        block_boundaries,
    })
}

fn record(step: usize, block: usize, a: &Vector, b: &Vector, step_size: f64, refs: &References) -> Result<StepRecord> {
    let at = |source| Error::ProjectionAt { step, source };
    let dist = |s: &Option<Arc<ConvexSet>>, x: &Vector| -> Result<Option<f64>> {
        s.as_ref().map(|s| s.dist(x).map_err(at)).transpose()
    };
    Ok(StepRecord {
        step,
        block,
        a: a.clone(),
        b: b.clone(),
        step_size,
        dist_a: dist(&refs.a, a)?,
        dist_to_e: dist(&refs.e, a)?,
        dist_to_f: dist(&refs.f, b)?,
    })
}
