//! Deterministic parallel map over sorted work keys.

use rayon::prelude::*;

/// Runs `f` on every key with `workers` threads and returns `(key, result)`
/// pairs in sorted key order, whatever the completion order was.
pub fn run_sorted<K, T, F>(workers: usize, mut keys: Vec<K>, f: F) -> anyhow::Result<Vec<(K, T)>>
where
    K: Ord + Clone + Send + Sync,
    T: Send,
    F: Fn(&K) -> anyhow::Result<T> + Sync,
{
    keys.sort();
    keys.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    pool.install(|| {
        keys.par_iter()
            .map(|k| f(k).map(|v| (k.clone(), v)))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_order_is_key_order() {
        let keys = vec![5, 3, 9, 1, 3];
        let out = run_sorted(4, keys, |k| Ok(k * 10)).unwrap();
        assert_eq!(out, vec![(1, 10), (3, 30), (5, 50), (9, 90)]);
    }

    #[test]
    fn first_error_is_reported() {
        let out = run_sorted(2, vec![1, 2], |k| {
            anyhow::ensure!(*k != 2, "bad key");
            Ok(*k)
        });
        assert!(out.is_err());
    }
}
