//! Execution mode switch for the data-parallel loops.
//!
//! With the `parallel` feature (on by default) the hot loops fan out over
//! rayon's global pool. Without it every loop runs sequentially and
//! [`Execution::Parallel`] quietly degrades to [`Execution::Sequential`].
//! Both modes produce identical output; parallel loops only ever feed
//! order-preserving collects or results that are sorted afterwards.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Order-preserving map over a slice.
pub(crate) fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = map_slice(Execution::Sequential, &items, |x| x * 3);
        let par = map_slice(Execution::Parallel, &items, |x| x * 3);
        assert_eq!(seq, par);
    }
}
