use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Evaluates `f(0..n)` and returns the results in index order. `threads`
/// of 1 runs inline; 0 lets the pool pick one thread per core.
pub fn map_grid<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads == 1 || n < 2 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let seq = map_grid(1000, 1, |i| (i as f64).sqrt()).unwrap();
        let par = map_grid(1000, 4, |i| (i as f64).sqrt()).unwrap();
        assert_eq!(seq, par);
        assert_eq!(map_grid(0, 4, |i| i).unwrap(), Vec::<usize>::new());
    }
}
