use serde::{Deserialize, Serialize};

/// Box-and-whiskers summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl Summary {
    /// Quartiles are inclusive-median hinges: for odd counts the median
    /// belongs to both halves.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let half = n.div_ceil(2);
        let (lower, upper) = (&v[..half], &v[n - half..]);
        Some(Self {
            count: n,
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            q1: median_sorted(lower),
            median: median_sorted(&v),
            q3: median_sorted(upper),
            max: v[n - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hinges() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.5, 2.5, 3.5));
        let s = Summary::of(&[7.0]).unwrap();
        assert_eq!((s.min, s.q1, s.q3, s.max), (7.0, 7.0, 7.0, 7.0));
        assert!(Summary::of(&[]).is_none());
    }
}
