use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A value clamped at a cap. `saturated` is set iff the true value exceeded
/// the cap, in which case `value == cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturatingValue {
    pub value: u64,
    pub saturated: bool,
}

impl SaturatingValue {
    pub fn clamp(v: u128, cap: u64) -> Self {
        if v > cap as u128 {
            SaturatingValue {
                value: cap,
                saturated: true,
            }
        } else {
            SaturatingValue {
                value: v as u64,
                saturated: false,
            }
        }
    }

    pub fn saturated(cap: u64) -> Self {
        SaturatingValue {
            value: cap,
            saturated: true,
        }
    }

    /// `self + 1`, still clamped at `cap`.
    pub fn succ(self, cap: u64) -> Self {
        if self.saturated {
            self
        } else {
            SaturatingValue::clamp(self.value as u128 + 1, cap)
        }
    }
}

impl std::fmt::Display for SaturatingValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.saturated {
            write!(f, "{} saturated", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

/// Default saturation cap for growth values, 2^20.
pub const DEFAULT_CAP: u64 = 1 << 20;

/// Peter-Ackermann function, clamped at `cap`.
///
/// Levels up to 3 use closed forms. Higher levels iterate
/// `A(m, n) = A(m-1, A(m, n-1))` with a memo table and stop as soon as an
/// inner value saturates, since the outer value can only be larger.
pub fn ackermann(m: u64, n: u64, cap: u64) -> SaturatingValue {
    let cap = cap.max(1);
    let mut memo = HashMap::new();
    ackermann_memo(m, n, cap, &mut memo)
}

fn closed_form(m: u64, n: u64, cap: u64) -> SaturatingValue {
    let n = n as u128;
    match m {
        0 => SaturatingValue::clamp(n + 1, cap),
        1 => SaturatingValue::clamp(n + 2, cap),
        2 => SaturatingValue::clamp(2 * n + 3, cap),
        3 => {
            // 2^(n+3) - 3; anything at or past 2^127 is beyond every u64 cap
            if n + 3 >= 127 {
                SaturatingValue::saturated(cap)
            } else {
                SaturatingValue::clamp((1u128 << (n + 3)) - 3, cap)
            }
        }
        _ => unreachable!("closed forms cover m <= 3"),
    }
}

fn ackermann_memo(m: u64, n: u64, cap: u64, memo: &mut HashMap<(u64, u64), SaturatingValue>) -> SaturatingValue {
    if m <= 3 {
        return closed_form(m, n, cap);
    }
    // A(m, n) >= A(6, 0) = A(4, 65533) > 2^65535 for m >= 6, past any u64 cap.
    if m >= 6 {
        return SaturatingValue::saturated(cap);
    }
    if let Some(&v) = memo.get(&(m, n)) {
        return v;
    }
    let mut v = ackermann_memo(m - 1, 1, cap, memo);
    for _ in 0..n {
        if v.saturated {
            break;
        }
        v = ackermann_memo(m - 1, v.value, cap, memo);
    }
    memo.insert((m, n), v);
    v
}

/// Leftmost-innermost rewriting of `A(m, n)` that yields the value of every
/// innermost subterm as it resolves.
///
/// The pending outer levels live on a stack; only `A(0, x) = x + 1` produces a
/// value, so the sequence moves in unit increments and drops back to 2 each
/// time a fresh `A(1, 0)` starts. Once a resolved value passes `cap` the
/// remaining result must too, and the reduction ends with a single saturated
/// step. Reaching the first value of `A(m, n)` takes about `m` rewrites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    stack: Vec<u64>,
    n: u64,
    cap: u64,
    done: bool,
}

impl Reduction {
    pub fn new(m: u64, n: u64, cap: u64) -> Self {
        Reduction {
            stack: vec![m],
            n,
            cap: cap.max(1),
            done: false,
        }
    }
}

impl Iterator for Reduction {
    type Item = SaturatingValue;

    fn next(&mut self) -> Option<SaturatingValue> {
        if self.done {
            return None;
        }
        while let Some(m) = self.stack.pop() {
            if m == 0 {
                let v = SaturatingValue::clamp(self.n as u128 + 1, self.cap);
                if v.saturated || self.stack.is_empty() {
                    self.done = true;
                    self.stack.clear();
                }
                self.n = v.value;
                return Some(v);
            } else if self.n == 0 {
                self.stack.push(m - 1);
                self.n = 1;
            } else {
                self.stack.push(m - 1);
                self.stack.push(m);
                self.n -= 1;
            }
        }
        self.done = true;
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub m: u64,
    pub n: u64,
    pub steps: Vec<SaturatingValue>,
    pub truncated: bool,
}

impl GrowthTrace {
    pub fn last(&self) -> Option<SaturatingValue> {
        self.steps.last().copied()
    }
}

/// At most `max_steps` resolved values of the reduction of `A(m, n)`.
pub fn ackermann_trace(m: u64, n: u64, cap: u64, max_steps: usize) -> GrowthTrace {
    let mut reduction = Reduction::new(m, n, cap);
    let steps: Vec<SaturatingValue> = reduction.by_ref().take(max_steps.max(1)).collect();
    let truncated = !reduction.done;
    GrowthTrace { m, n, steps, truncated }
}

/// Sum over windows of the product of the growth values inside each window,
/// clamped at `cap`.
pub fn long_run_growth_index(history: &[Vec<u64>], cap: u64) -> SaturatingValue {
    let cap128 = cap as u128;
    let mut total: u128 = 0;
    for window in history {
        let mut product: u128 = 1;
        for &q in window {
            product = product.saturating_mul(q as u128).min(cap128 + 1);
        }
        total = total.saturating_add(product).min(cap128 + 1);
    }
    SaturatingValue::clamp(total, cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: u64, n: u64) -> u64 {
        match (m, n) {
            (0, n) => n + 1,
            (m, 0) => naive(m - 1, 1),
            (m, n) => naive(m - 1, naive(m, n - 1)),
        }
    }

    #[test]
    fn closed_forms_match_naive_recursion() {
        for m in 0..=3 {
            for n in 0..=8 {
                let v = ackermann(m, n, 1_000_000);
                assert_eq!(v.value, naive(m, n), "A({m},{n})");
                assert!(!v.saturated);
            }
        }
    }

    #[test]
    fn named_values() {
        assert_eq!(ackermann(0, 5, 1_000_000).value, 6);
        assert_eq!(ackermann(2, 1, 1_000_000).value, 5);
        assert_eq!(ackermann(3, 3, 1_000_000).value, 61);
        assert_eq!(ackermann(4, 0, 1_000_000).value, 13);
        assert_eq!(ackermann(4, 1, 1_000_000).value, 65533);
        assert_eq!(ackermann(5, 0, 1_000_000).value, 65533);
        assert_eq!(ackermann(4, 2, 1_000_000), SaturatingValue::saturated(1_000_000));
    }

    #[test]
    fn saturation_at_extremes() {
        assert!(ackermann(0, u64::MAX, u64::MAX).saturated);
        assert_eq!(ackermann(3, 61, u64::MAX).value, u64::MAX - 2);
        assert!(ackermann(3, 62, u64::MAX).saturated);
        assert_eq!(ackermann(3, 60, u64::MAX).value, (1u64 << 63) - 3);
        assert!(ackermann(5, 1, u64::MAX).saturated);
        assert!(ackermann(1_000_000, 0, 1 << 30).saturated);
        assert_eq!(ackermann(2, 3, 5), SaturatingValue::saturated(5));
        assert_eq!(
            ackermann(2, 1, 5),
            SaturatingValue {
                value: 5,
                saturated: false
            }
        );
    }

    #[test]
    fn trace_examples() {
        let t = ackermann_trace(0, 7, 1_000_000, 100);
        assert_eq!(t.steps, vec![SaturatingValue::clamp(8, 1_000_000)]);
        assert!(!t.truncated);

        let t = ackermann_trace(1, 1, 1_000_000, 100);
        let values: Vec<u64> = t.steps.iter().map(|s| s.value).collect();
        assert_eq!(values, [2, 3]);

        let t = ackermann_trace(4, 2, 1 << 20, 100);
        assert!(t.truncated);
        assert_eq!(t.steps.len(), 100);
    }

    #[test]
    fn trace_ends_saturated_when_cap_is_small() {
        let t = ackermann_trace(3, 3, 20, 10_000);
        assert!(!t.truncated);
        assert_eq!(t.last(), Some(SaturatingValue::saturated(20)));
    }

    #[test]
    fn growth_index_examples() {
        assert_eq!(long_run_growth_index(&[vec![2, 3], vec![4]], 1000).value, 10);
        assert_eq!(long_run_growth_index(&[vec![1]], 1000).value, 1);
        assert_eq!(
            long_run_growth_index(&[vec![1000, 2]], 1000),
            SaturatingValue::saturated(1000)
        );
    }
}
