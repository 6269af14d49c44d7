//! Minimal scoped-thread parallel map over query indices.

use crate::error::Result;

/// Evaluate `f(0..n)` across up to `threads` scoped threads, preserving
/// index order. With one thread (or n <= 1) this is a plain serial loop, so
/// results never depend on the thread count.
pub(crate) fn par_fill<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Sync + Fn(usize) -> Result<T>,
{
    let threads = threads.max(1).min(n.max(1));
    if threads <= 1 {
        return (0..n).map(&f).collect();
    }

    let mut slots: Vec<Option<T>> = Vec::new();
    slots.resize_with(n, || None);
    let first_err = std::sync::Mutex::new(None);
    std::thread::scope(|scope| {
        let chunk = n.div_ceil(threads);
        let mut rest = slots.as_mut_slice();
        let mut base = 0usize;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            rest = tail;
            let f = &f;
            let first_err = &first_err;
            let lo = base;
            base += take;
            scope.spawn(move || {
                for (off, slot) in head.iter_mut().enumerate() {
                    match f(lo + off) {
                        Ok(v) => *slot = Some(v),
                        Err(e) => {
                            let mut guard = first_err.lock().unwrap();
                            if guard.is_none() {
                                *guard = Some(e);
                            }
                            return;
                        }
                    }
                }
            });
        }
    });
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(slots.into_iter().map(|s| s.expect("slot filled")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_across_thread_counts() {
        let serial = par_fill(100, 1, |i| Ok(i * i)).unwrap();
        let parallel = par_fill(100, 7, |i| Ok(i * i)).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn propagates_errors() {
        let r = par_fill(10, 3, |i| {
            if i == 5 {
                Err(crate::error::Error::param("boom"))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
