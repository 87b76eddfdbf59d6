//! Indexed parallel map. Results always come back in index order, so every
//! reduction downstream is a sequential fold with a fixed order and the
//! outputs do not depend on thread scheduling.
//!
//! With the `parallel` feature disabled [`map_indexed`] runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(n, f)
    }
}

pub fn map_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}
