//! Working-set rule of the pruned AFLH variant.
//!
//! The expert born at round `i = r·2^k` (`r` odd) lives for `2^{k+2} + 1`
//! rounds, i.e. it is alive at rounds `i..=i + 2^{k+2}`.

/// Number of rounds the expert born at `birth` (≥ 1) stays alive.
pub fn lifetime(birth: usize) -> usize {
    assert!(birth >= 1, "birth rounds are 1-based");
    (1usize << (birth.trailing_zeros() + 2)) + 1
}

/// Whether the expert born at `birth` is alive at round `t`.
#[inline]
pub fn is_alive(birth: usize, t: usize) -> bool {
    birth >= 1 && birth <= t && t - birth < lifetime(birth)
}

/// Birth times alive at round `t ≥ 1`, ascending.
pub fn aflh_alive(t: usize) -> Vec<usize> {
    assert!(t >= 1, "rounds are 1-based");
    let mut out = Vec::new();
    let top = usize::BITS - 1 - t.leading_zeros();
    for k in 0..=top {
        let unit = 1usize << k;
        let span = unit << 2;
        let lo = t.saturating_sub(span).max(1);
        // smallest odd multiple of 2^k that is ≥ lo
        let mut m = lo.div_ceil(unit);
        if m.is_multiple_of(2) {
            m += 1;
        }
        let mut i = m * unit;
        while i <= t {
            out.push(i);
            i += unit << 1;
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(t: usize) -> Vec<usize> {
        (1..=t).filter(|&i| is_alive(i, t)).collect()
    }

    #[test]
    fn first_round_has_only_first_expert() {
        assert_eq!(aflh_alive(1), vec![1]);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        assert_eq!(aflh_alive(6), vec![2, 3, 4, 5, 6]);
        for t in 1..=64 {
            assert_eq!(aflh_alive(t), brute(t), "t = {t}");
        }
    }

    #[test]
    fn working_set_is_logarithmic() {
        for t in 1..=(1usize << 20) {
            let n = aflh_alive(t).len() as f64;
            assert!(n <= 4.0 * ((t as f64).log2() + 1.0), "t = {t}: {n}");
        }
    }

    #[test]
    fn newest_expert_always_alive() {
        for t in 1..500 {
            assert!(aflh_alive(t).contains(&t));
        }
    }

    #[test]
    fn lifetimes() {
        assert_eq!(lifetime(1), 5);
        assert_eq!(lifetime(2), 9);
        assert_eq!(lifetime(12), 17);
    }
}
