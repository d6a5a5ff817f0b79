//! Parallel path runner. Records come back in path order, so results match
//! [`SerialRunner`](parabolic_core::sde::SerialRunner) bit for bit.

use parabolic_core::sde::{PathRecord, PathRunner};
use rayon::prelude::*;

use crate::error::{LabError, Result};

#[derive(Debug, Default)]
pub struct RayonRunner {
    pool: Option<rayon::ThreadPool>,
}

impl RayonRunner {
    /// Runner on the global pool, or on a private pool of `threads` workers.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let pool = match threads {
            None => None,
            Some(0) => return Err(LabError::config("--threads must be at least 1")),
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| LabError::config(format!("cannot start {n} threads: {e}")))?,
            ),
        };
        Ok(RayonRunner { pool })
    }
}

impl PathRunner for RayonRunner {
    fn map_paths(
        &self,
        n_paths: usize,
        job: &(dyn Fn(usize) -> PathRecord + Sync),
    ) -> Vec<PathRecord> {
        let run = || (0..n_paths).into_par_iter().map(job).collect();
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use parabolic_core::sde::{
        build_coefficients, sup_moment, FamilySpec, SerialRunner, SimulationConfig, Streamed,
    };

    #[test]
    fn parallel_matches_serial() {
        let coeffs = build_coefficients(&FamilySpec::brownian(2)).unwrap();
        let cfg = SimulationConfig {
            x0: [0.0; 3],
            s: 0.0,
            t_final: 0.5,
            dt: 0.01,
            n_paths: 257,
            seed: 9,
        };
        let par = RayonRunner::new(Some(3)).unwrap();
        let a = sup_moment(&Streamed {
            coeffs: &coeffs,
            cfg,
            runner: &par,
        })
        .unwrap();
        let b = sup_moment(&Streamed {
            coeffs: &coeffs,
            cfg,
            runner: &SerialRunner,
        })
        .unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert!(RayonRunner::new(Some(0)).is_err());
    }
}
