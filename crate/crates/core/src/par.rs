//! Row-partitioned data parallelism.
//!
//! Every kernel in this crate writes each output row from its inputs alone, so
//! results are independent of how rows are spread over workers.

/// Calls `f(row, out_row)` for every `row_len`-sized chunk of `out`.
///
/// `workers == 1` runs on the calling thread; `0` lets the pool pick its
/// default size. Without the `parallel` feature the worker count is ignored.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_row<T, F>(out: &mut [T], row_len: usize, workers: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    use rayon::prelude::*;

    if row_len == 0 {
        return;
    }
    if workers == 1 {
        out.chunks_mut(row_len).enumerate().for_each(|(r, row)| f(r, row));
        return;
    }
    let run = |out: &mut [T]| {
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(r, row))
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| run(out)),
        Err(_) => run(out),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_row<T, F>(out: &mut [T], row_len: usize, _workers: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    if row_len == 0 {
        return;
    }
    out.chunks_mut(row_len).enumerate().for_each(|(r, row)| f(r, row));
}
