//! Bounded-parallelism job pool for terminal evaluations.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::SimResult;

/// Run `jobs` with at most `max_parallel` in flight; results come back in
/// input order and one failing job never disturbs its siblings.
pub fn evaluate_pool<F>(jobs: Vec<F>, max_parallel: usize) -> Vec<SimResult>
where
    F: FnOnce() -> SimResult + Send,
{
    evaluate_pool_instrumented(jobs, max_parallel).0
}

/// As [`evaluate_pool`], additionally reporting the peak number of jobs
/// that were executing at the same time.
pub fn evaluate_pool_instrumented<F>(
    jobs: Vec<F>,
    max_parallel: usize,
) -> (Vec<SimResult>, usize)
where
    F: FnOnce() -> SimResult + Send,
{
    let n = jobs.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let workers = max_parallel.max(1).min(n);
    let queue: Mutex<Vec<Option<F>>> = Mutex::new(jobs.into_iter().map(Some).collect());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SimResult>>> = Mutex::new((0..n).map(|_| None).collect());
    let in_flight = AtomicUsize::new(0);
    let peak = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= n {
                    return;
                }
                let job = queue.lock().unwrap()[idx].take().expect("job taken once");
                let current = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(current, Ordering::SeqCst);
                let result = catch_unwind(AssertUnwindSafe(job))
                    .unwrap_or_else(|_| SimResult::invalid("evaluation panicked"));
                in_flight.fetch_sub(1, Ordering::SeqCst);
                results.lock().unwrap()[idx] = Some(result);
            });
        }
    });

    let out = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();
    (out, peak.load(Ordering::SeqCst))
}
