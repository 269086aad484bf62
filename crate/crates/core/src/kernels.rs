//! Branch-prediction-free primitives shared by every search implementation.
//!
//! Each kernel evaluates both sides of a decision and combines them with an
//! arithmetic or bit-mask select, so the instruction stream does not depend on
//! the data. Loops have trip counts fixed by the input length and never exit
//! early.

use crate::error::ContractError;

/// Largest finite `f64` scaled by 2^-10. Returned as the UCT value of a child
/// with zero visits so it dominates every finite augmented value while still
/// leaving headroom for additions.
pub const UNVISITED_BONUS: f64 = f64::MAX / 1024.0;

/// Exploration parameters for the UCT value function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UctParams {
    c: f64,
}

impl UctParams {
    pub fn new(c: f64) -> Result<Self, ContractError> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(ContractError::new(format!(
                "exploration constant must be finite and non-negative, got {c}"
            )));
        }
        Ok(Self { c })
    }

    #[inline]
    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for UctParams {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

/// Select between two bytes with a multiply-add: `a * cond + b * !cond`.
#[inline]
pub fn select_arith(a: i8, b: i8, cond: bool) -> i8 {
    let c = cond as i8;
    a.wrapping_mul(c).wrapping_add(b.wrapping_mul(1 - c))
}

/// Select between two bytes with a mask widened from the condition bit by
/// shift-or doubling (1, 2, 4 bits).
#[inline]
pub fn select_mask(a: i8, b: i8, cond: bool) -> i8 {
    let mut m = cond as u8;
    m |= m << 1;
    m |= m << 2;
    m |= m << 4;
    let m = m as i8;
    (a & m) | (b & !m)
}

#[inline(always)]
pub fn select_u32(a: u32, b: u32, cond: bool) -> u32 {
    let m = (cond as u32).wrapping_neg();
    (a & m) | (b & !m)
}

#[inline(always)]
pub fn select_usize(a: usize, b: usize, cond: bool) -> usize {
    let m = (cond as usize).wrapping_neg();
    (a & m) | (b & !m)
}

#[inline(always)]
pub fn select_i32(a: i32, b: i32, cond: bool) -> i32 {
    let m = (cond as i32).wrapping_neg();
    (a & m) | (b & !m)
}

/// Bitwise select on the IEEE representation; never produces a value that is
/// not exactly `a` or `b`.
#[inline(always)]
pub fn select_f64(a: f64, b: f64, cond: bool) -> f64 {
    let m = (cond as u64).wrapping_neg();
    f64::from_bits((a.to_bits() & m) | (b.to_bits() & !m))
}

/// UCT augmented value `value + c * sqrt(ln(parent) / visits)`.
///
/// A child with zero visits scores [`UNVISITED_BONUS`].
pub fn uct_value(
    child_value: f64,
    child_visits: u32,
    parent_visits: u32,
    params: UctParams,
) -> Result<f64, ContractError> {
    if parent_visits == 0 {
        return Err(ContractError::new("uct_value requires parent_visits >= 1"));
    }
    Ok(uct_value_unchecked(
        child_value,
        child_visits,
        parent_visits,
        params.c,
    ))
}

/// Hot-path form of [`uct_value`]. `parent_visits == 0` is tolerated and
/// treated as 1; it only occurs when every child is unvisited, in which case
/// all children score the saturating bonus anyway.
#[inline(always)]
pub fn uct_value_unchecked(child_value: f64, child_visits: u32, parent_visits: u32, c: f64) -> f64 {
    let n = child_visits.max(1) as f64;
    let p = parent_visits.max(1) as f64;
    let augmented = child_value + c * (p.ln() / n).sqrt();
    select_f64(UNVISITED_BONUS, augmented, child_visits == 0)
}

/// Index of the maximum, ties resolved to the lowest index.
pub fn max_index<T: PartialOrd + Copy>(values: &[T]) -> Result<usize, ContractError> {
    if values.is_empty() {
        return Err(ContractError::new("max_index of an empty sequence"));
    }
    Ok(max_index_unchecked(values))
}

/// [`max_index`] without the emptiness check. Panics on an empty slice.
#[inline(always)]
pub fn max_index_unchecked<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = values[0];
    let mut best_idx = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let better = v > best;
        // Compiles to conditional moves; no data-dependent jump.
        best = if better { v } else { best };
        best_idx = select_usize(i, best_idx, better);
    }
    best_idx
}

/// True iff any child has zero visits. Reduces over the whole slice.
#[inline(always)]
pub fn any_unvisited(child_visits: &[u32]) -> bool {
    let mut all_visited = 1u32;
    for &v in child_visits {
        all_visited &= (v != 0) as u32;
    }
    all_visited == 0
}

/// Returns the `floor(draw * k)`-th zero entry, where `k` is the number of
/// zero entries. With no zero entries the result is 0, which callers discard.
#[inline(always)]
pub fn random_untried(child_visits: &[u32], draw: f64) -> usize {
    let mut zeros = 0u32;
    for &v in child_visits {
        zeros += (v == 0) as u32;
    }
    let target = ((draw * zeros as f64) as u32).min(zeros.saturating_sub(1));
    let mut seen = 0u32;
    let mut chosen = 0usize;
    for (i, &v) in child_visits.iter().enumerate() {
        let is_zero = v == 0;
        chosen = select_usize(i, chosen, is_zero & (seen == target));
        seen += is_zero as u32;
    }
    chosen
}

/// Running-mean update `old + (sample - old) / count`.
pub fn incremental_mean(old_mean: f64, sample: f64, new_count: u32) -> Result<f64, ContractError> {
    if new_count == 0 {
        return Err(ContractError::new(
            "incremental_mean requires new_count >= 1",
        ));
    }
    Ok(incremental_mean_unchecked(old_mean, sample, new_count))
}

#[inline(always)]
pub fn incremental_mean_unchecked(old_mean: f64, sample: f64, new_count: u32) -> f64 {
    old_mean + (sample - old_mean) / new_count as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn select_examples() {
        assert_eq!(select_arith(5, 9, true), 5);
        assert_eq!(select_arith(5, 9, false), 9);
        assert_eq!(select_mask(-3, 7, true), -3);
        assert_eq!(select_mask(0, 0, false), 0);
    }

    #[test]
    fn selects_agree_with_conditional_exhaustively() {
        for a in i8::MIN..=i8::MAX {
            for b in i8::MIN..=i8::MAX {
                for cond in [false, true] {
                    let expected = if cond { a } else { b };
                    assert_eq!(select_arith(a, b, cond), expected);
                    assert_eq!(select_mask(a, b, cond), expected);
                }
            }
        }
    }

    #[test]
    fn wide_selects() {
        assert_eq!(select_u32(3, u32::MAX, true), 3);
        assert_eq!(select_usize(3, 4, false), 4);
        assert_eq!(select_i32(i32::MIN, 7, true), i32::MIN);
        assert_eq!(select_f64(-0.0, 1.5, true).to_bits(), (-0.0f64).to_bits());
        assert!(select_f64(f64::NAN, 2.0, false) == 2.0);
    }

    #[test]
    fn uct_closed_forms() {
        let p = UctParams::new(1.0).unwrap();
        assert_eq!(uct_value(0.0, 1, 1, p).unwrap(), 0.0);
        // 0.5 + 2 * sqrt(ln 3 / 4), frozen from a 40-digit evaluation.
        let p2 = UctParams::new(2.0).unwrap();
        let got = uct_value(0.5, 4, 3, p2).unwrap();
        assert!((got - 1.548_147_073_968_205).abs() < 1e-12, "{got}");
    }

    #[test]
    fn uct_unvisited_dominates() {
        for c in [0.0, 1.0, 10.0] {
            let p = UctParams::new(c).unwrap();
            for parent in [1u32, 2, 100, 1_000_000] {
                let sat = uct_value(-5.0, 0, parent, p).unwrap();
                assert_eq!(sat, UNVISITED_BONUS);
                for v in [-1e6, 0.0, 1.0, 1e6] {
                    assert!(sat > uct_value(v, 1, parent, p).unwrap());
                }
            }
        }
    }

    #[test]
    fn uct_rejects_zero_parent() {
        assert!(uct_value(0.0, 1, 0, UctParams::default()).is_err());
        assert!(UctParams::new(-1.0).is_err());
        assert!(UctParams::new(f64::NAN).is_err());
    }

    #[test]
    fn max_index_examples() {
        assert_eq!(max_index(&[1.0, 3.0, 2.0]).unwrap(), 1);
        assert_eq!(max_index(&[2.0, 2.0]).unwrap(), 0);
        assert!(max_index::<f64>(&[]).is_err());
    }

    #[test]
    fn max_index_matches_naive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let len = rng.random_range(1..=16);
            // Small integer-valued floats so ties are common.
            let v: Vec<f64> = (0..len).map(|_| rng.random_range(0..5) as f64).collect();
            let mut naive = 0;
            for i in 1..v.len() {
                if v[i] > v[naive] {
                    naive = i;
                }
            }
            assert_eq!(max_index(&v).unwrap(), naive, "{v:?}");
        }
    }

    #[test]
    fn any_unvisited_examples_and_exhaustive() {
        assert!(!any_unvisited(&[1, 2, 3]));
        assert!(any_unvisited(&[1, 0, 3]));
        for len in 1..=4u32 {
            for code in 0..3u32.pow(len) {
                let v: Vec<u32> = (0..len).map(|i| (code / 3u32.pow(i)) % 3).collect();
                assert_eq!(any_unvisited(&v), v.contains(&0), "{v:?}");
            }
        }
    }

    #[test]
    fn random_untried_examples() {
        assert_eq!(random_untried(&[0, 0, 0], 0.34), 1);
        assert_eq!(random_untried(&[1, 1, 1], 0.0), 0);
        assert_eq!(random_untried(&[1, 1, 1], 0.99), 0);
        assert_eq!(random_untried(&[4, 0, 2, 0], 0.0), 1);
        assert_eq!(random_untried(&[4, 0, 2, 0], 0.5), 3);
        // Draw arbitrarily close to 1 stays in range.
        assert_eq!(random_untried(&[0, 0, 0], 1.0 - f64::EPSILON), 2);
    }

    #[test]
    fn random_untried_is_uniform_over_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let visits = [0, 1, 0, 1, 0];
        let mut counts = [0usize; 5];
        let draws = 100_000;
        for _ in 0..draws {
            counts[random_untried(&visits, rng.random::<f64>())] += 1;
        }
        assert_eq!(counts[1] + counts[3], 0);
        for idx in [0, 2, 4] {
            let share = counts[idx] as f64 / draws as f64;
            assert!((share - 1.0 / 3.0).abs() < 0.02, "index {idx}: {share}");
        }
    }

    #[test]
    fn incremental_mean_examples() {
        assert_eq!(incremental_mean(0.0, 7.0, 1).unwrap(), 7.0);
        assert_eq!(incremental_mean(1.0, 3.0, 2).unwrap(), 2.0);
        assert!(incremental_mean(1.0, 3.0, 0).is_err());
    }

    #[test]
    fn incremental_mean_matches_batch_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f64> = (0..100).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mut mean = 0.0;
        for (i, &s) in samples.iter().enumerate() {
            mean = incremental_mean(mean, s, i as u32 + 1).unwrap();
        }
        let batch = samples.iter().sum::<f64>() / samples.len() as f64;
        assert!((mean - batch).abs() <= 1e-9 * batch.abs().max(1.0));
    }

    proptest! {
        #[test]
        fn max_index_is_first_maximum(v in proptest::collection::vec(-1e6f64..1e6, 1..32)) {
            let i = max_index(&v).unwrap();
            for (j, &x) in v.iter().enumerate() {
                prop_assert!(v[i] >= x);
                if j < i { prop_assert!(v[i] > x); }
            }
        }

        #[test]
        fn uct_decreasing_in_child_visits(
            value in -100.0f64..100.0,
            visits in 1u32..10_000,
            parent in 2u32..1_000_000,
            c in 0.01f64..10.0,
        ) {
            let p = UctParams::new(c).unwrap();
            let a = uct_value(value, visits, parent, p).unwrap();
            let b = uct_value(value, visits + 1, parent, p).unwrap();
            prop_assert!(a > b);
        }

        #[test]
        fn uct_non_decreasing_in_parent_visits(
            value in -100.0f64..100.0,
            visits in 1u32..10_000,
            parent in 1u32..1_000_000,
            c in 0.01f64..10.0,
        ) {
            let p = UctParams::new(c).unwrap();
            prop_assert!(uct_value(value, visits, parent + 1, p).unwrap() >= uct_value(value, visits, parent, p).unwrap());
        }

        #[test]
        fn random_untried_lands_on_zero(v in proptest::collection::vec(0u32..3, 1..16), draw in 0.0f64..1.0) {
            let i = random_untried(&v, draw);
            if v.contains(&0) {
                prop_assert_eq!(v[i], 0);
            } else {
                prop_assert_eq!(i, 0);
            }
        }

        #[test]
        fn incremental_mean_permutation_invariant(
            mut v in proptest::collection::vec(-1e3f64..1e3, 1..64),
            seed in any::<u64>(),
        ) {
            let run = |xs: &[f64]| xs.iter().enumerate().fold(0.0, |m, (i, &s)| incremental_mean(m, s, i as u32 + 1).unwrap());
            let a = run(&v);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..v.len()).rev() {
                let j = rng.random_range(0..=i);
                v.swap(i, j);
            }
            let b = run(&v);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
