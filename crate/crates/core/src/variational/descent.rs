use crate::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{explicit_cutoff, slope_pow, CutoffProfile, Discretized, VariationalProblem};
use crate::error::{ensure, Result};

pub const MAX_KNOTS: usize = 400;
pub const DESCENT_STARTS: usize = 20;
pub const DESCENT_SEED: u64 = 0x5eed_cafe;

const GOLDEN_STEPS: usize = 64;

/// Cheap objective update when mass moves between two intervals.
struct PairMove<'a> {
    disc: &'a Discretized,
    sums: &'a [f64],
    donor: usize,
    receiver: usize,
    d_don: f64,
    d_rec: f64,
}

impl PairMove<'_> {
    fn value(&self, t: f64) -> f64 {
        let h = self.disc.h;
        let mut total = 0.0;
        for i in 0..self.sums.len() {
            let w = &self.disc.masses[i];
            let a = self.disc.alphas[i];
            let (wk, wj) = (w[self.donor], w[self.receiver]);
            let mut s = self.sums[i];
            if wk != 0.0 {
                s +=
                    (slope_pow((self.d_don - t).max(0.0), h, a) - slope_pow(self.d_don, h, a)) * wk;
            }
            if wj != 0.0 {
                s += (slope_pow(self.d_rec + t, h, a) - slope_pow(self.d_rec, h, a)) * wj;
            }
            total += crate::norms::root(s.max(0.0), self.disc.ps[i]);
        }
        total
    }
}

fn golden_min(f: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let r = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.0, f(0.0));
    for t in [c, d, hi] {
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    best
}

/// Pairwise projected coordinate descent on the simplex of profile drops: each step
/// moves mass from the interval with the largest partial derivative to the one with
/// the smallest, by an exact line search.
pub(crate) fn descend(disc: &Discretized, dec: &mut [f64]) -> f64 {
    let n = disc.intervals();
    let total: f64 = dec.iter().sum();
    dec.iter_mut().for_each(|d| *d /= total);
    let mut current = disc.value(dec);
    let h = disc.h;
    for _ in 0..(100 * n + 2000) {
        let sums = disc.sums(dec);
        let coef: Vec<f64> = sums
            .iter()
            .zip(&disc.ps)
            .map(|(&s, &p)| {
                if p == 1.0 {
                    1.0
                } else {
                    s.max(1e-300).powf(1.0 / p - 1.0) / p
                }
            })
            .collect();
        let mut recv = (f64::INFINITY, 0);
        let mut don = (f64::NEG_INFINITY, 0);
        for j in 0..n {
            let mut g = 0.0;
            for i in 0..sums.len() {
                let wj = disc.masses[i][j];
                if wj != 0.0 {
                    let a = disc.alphas[i];
                    g += coef[i] * a * slope_pow(dec[j], h, a - 1.0) * wj / h;
                }
            }
            if g < recv.0 {
                recv = (g, j);
            }
            if dec[j] > 0.0 && g > don.0 {
                don = (g, j);
            }
        }
        if don.1 == recv.1 || don.0 - recv.0 <= 1e-13 * (don.0.abs() + recv.0.abs()) {
            break;
        }
        let mv = PairMove {
            disc,
            sums: &sums,
            donor: don.1,
            receiver: recv.1,
            d_don: dec[don.1],
            d_rec: dec[recv.1],
        };
        let (t, v) = golden_min(|t| mv.value(t), dec[don.1]);
        if !(v < current * (1.0 - 1e-15)) || t == 0.0 {
            break;
        }
        dec[don.1] = (dec[don.1] - t).max(0.0);
        dec[recv.1] += t;
        current = disc.value(dec);
    }
    current
}

fn random_start(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
            -u.ln()
        })
        .collect()
}

/// Best of [`descend`] runs from the given starts and from seeded random starts.
pub(crate) fn minimize(
    disc: &Discretized,
    starts: Vec<Vec<f64>>,
    tau: f64,
    delta: f64,
) -> Result<(f64, CutoffProfile)> {
    let n = disc.intervals();
    let mut all = starts;
    for s in 0..DESCENT_STARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(DESCENT_SEED.wrapping_add(s as u64));
        all.push(random_start(&mut rng, n));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut dec in all {
        if dec.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let v = descend(disc, &mut dec);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, dec));
        }
    }
    let (_, dec) = best.expect("at least one start");
    let prof = CutoffProfile::from_decrements(tau, delta, &dec)?;
    Ok((disc.value(&prof.decrements()), prof))
}

/// Numerical infimum of the functional over monotone piecewise linear profiles with
/// `knot_count` uniform knots. The explicit cutoff is one of the starts, so when
/// `knot_count - 1` is a multiple of the density cell count the result never exceeds
/// its value.
pub fn brute_force_infimum(
    prob: &VariationalProblem,
    knot_count: usize,
) -> Result<(f64, CutoffProfile)> {
    prob.validate()?;
    ensure((2..=MAX_KNOTS).contains(&knot_count), || {
        format!("knot_count must lie in 2..=400 (got {knot_count})")
    })?;
    let n = knot_count - 1;
    let disc = prob.discretize(n);
    let explicit = explicit_cutoff(prob)?;
    let start: Vec<f64> = if explicit.intervals() == n {
        explicit.decrements()
    } else {
        let w = (prob.delta - prob.tau) / n as f64;
        (0..n)
            .map(|j| {
                (explicit.eval(prob.tau + j as f64 * w)
                    - explicit.eval(prob.tau + (j + 1) as f64 * w))
                .max(0.0)
            })
            .collect()
    };
    minimize(&disc, alloc::vec![start], prob.tau, prob.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::functional_value;
    use alloc::vec;

    #[test]
    fn quadratic_minimum_is_one() {
        let prob = VariationalProblem::constant(0.0, 1.0, 2.0, 1.0, 1.0, 1.0, 40).unwrap();
        let (v, prof) = brute_force_infimum(&prob, 41).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        assert!((functional_value(&prob, &prof).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn total_variation_is_flat() {
        let prob = VariationalProblem::constant(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10).unwrap();
        let (v, _) = brute_force_infimum(&prob, 11).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_functional_concentrates_on_smallest_weight() {
        let f = vec![3.0, 2.0, 0.5, 4.0];
        let prob =
            VariationalProblem::new(0.0, 1.0, vec![1.0], vec![1.0], vec![1.0], vec![f]).unwrap();
        let (v, _) = brute_force_infimum(&prob, 5).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn never_worse_than_explicit() {
        let f1: Vec<f64> = (0..30)
            .map(|c| 1.0 + (c as f64 * 0.7).sin().abs())
            .collect();
        let f2: Vec<f64> = (0..30)
            .map(|c| if c % 7 == 0 { 0.0 } else { c as f64 / 10.0 })
            .collect();
        let prob = VariationalProblem::new(
            0.0,
            0.8,
            vec![1.5, 2.0],
            vec![1.0, 3.0],
            vec![0.5, 1.0],
            vec![f1, f2],
        )
        .unwrap();
        let explicit = functional_value(&prob, &explicit_cutoff(&prob).unwrap()).unwrap();
        let (v, _) = brute_force_infimum(&prob, 31).unwrap();
        assert!(v <= explicit + 1e-9 * explicit.max(1.0));
    }

    #[test]
    fn dominates_random_feasible_profiles() {
        let f1: Vec<f64> = (0..12)
            .map(|c| 0.5 + (c as f64 * 1.3).cos().abs())
            .collect();
        let f2: Vec<f64> = (0..12).map(|c| (c as f64 / 4.0).exp()).collect();
        let prob = VariationalProblem::new(
            1.0,
            1.5,
            vec![1.5, 2.5],
            vec![2.0, 1.0],
            vec![1.0, 0.5],
            vec![f1, f2],
        )
        .unwrap();
        let (best, _) = brute_force_infimum(&prob, 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let prof =
                CutoffProfile::from_decrements(1.0, 1.5, &random_start(&mut rng, 12)).unwrap();
            assert!(best <= functional_value(&prob, &prof).unwrap() * (1.0 + 1e-12));
        }
    }
}
