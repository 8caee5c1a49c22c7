use rayon::prelude::*;

use super::noise::NoiseStream;
use crate::error::Result;

/// Runs `simulate` for path indices `0..n_paths`, each with its own
/// `NoiseStream::new(seed, index)`, in parallel.
///
/// Results come back in index order and the first failure by index is
/// reported, so the outcome does not depend on scheduling.
pub fn run_ensemble<R, F>(seed: u64, n_paths: usize, simulate: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, &mut NoiseStream) -> Result<R> + Sync,
{
    let outcomes: Vec<Result<R>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = NoiseStream::new(seed, i);
            simulate(i, &mut stream).map_err(|e| e.context(format!("path {i}")))
        })
        .collect();
    outcomes.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn order_and_first_error_are_stable() {
        let v = run_ensemble(5, 64, |i, s| Ok((i, s.normal::<f64>()))).unwrap();
        assert!(v.iter().enumerate().all(|(k, (i, _))| *i == k as u64));
        let again = run_ensemble(5, 64, |i, s| Ok((i, s.normal::<f64>()))).unwrap();
        assert_eq!(v, again);
        let err = run_ensemble(5, 64, |i, _| if i % 10 == 7 { Err(Error::InvalidArgument(format!("{i}"))) } else { Ok(i) })
            .unwrap_err();
        assert_eq!(err.to_string(), "path 7: invalid argument: 7");
    }
}
