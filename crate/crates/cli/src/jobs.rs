//! Tiny scoped-thread worker pool for independent grid jobs.
//!
//! Results are stored by job index, so report rows come out in a
//! deterministic order regardless of scheduling, and each job runs its
//! numerics single-threaded, which keeps float results byte-stable for
//! any pool size.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub fn run_ordered<T, F>(count: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(count.max(1));
    if threads <= 1 || count <= 1 {
        return (0..count).map(&job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = job(i);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every job slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_job_order() {
        let out = run_ordered(37, 4, |i| i * i);
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        let single = run_ordered(5, 1, |i| i + 1);
        assert_eq!(single, vec![1, 2, 3, 4, 5]);
    }
}
