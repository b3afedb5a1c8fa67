//! Execution policy for the data-parallel loops.

/// How the embarrassingly parallel loops are scheduled.
///
/// Results never depend on the choice: every work item is a pure function of
/// its inputs and reductions are done in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Fills `out[k] = f(k)`.
    pub fn fill<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            out.par_iter_mut().enumerate().for_each(|(k, slot)| *slot = f(k));
            return;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = f(k);
        }
    }

    /// Evaluates `f` over `0..n` and collects the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let f = |k: usize| (k as f64).sqrt().sin();
        let a = Execution::Sequential.map(1000, f);
        let b = Execution::Parallel.map(1000, f);
        assert_eq!(a, b);
        let mut c = vec![0.0; 1000];
        Execution::Parallel.fill(&mut c, f);
        assert_eq!(a, c);
    }
}
