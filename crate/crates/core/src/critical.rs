//! The critical set of domain lengths
//! `N = { 2*pi*sqrt((k^2 + k*l + l^2)/3) : k, l >= 1 }`
//! at which the Neumann-actuated linear KdV equation loses exponential
//! stabilizability. Lengths are enumerated with `k <= l` (the formula is
//! symmetric in `k` and `l`) and deduplicated by value.

use std::f64::consts::PI;

/// One member of the critical set together with the smallest index pair
/// that generates it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalLength {
    pub value: f64,
    pub k: u32,
    pub l: u32,
}

impl CriticalLength {
    fn from_indices(k: u32, l: u32) -> Self {
        let (k2, kl, l2) = (
            k as f64 * k as f64,
            k as f64 * l as f64,
            l as f64 * l as f64,
        );
        Self {
            value: 2.0 * PI * ((k2 + kl + l2) / 3.0).sqrt(),
            k,
            l,
        }
    }
}

/// Result of a nearest-member query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criticality {
    pub is_critical: bool,
    pub nearest: CriticalLength,
    pub distance: f64,
}

/// Relative tolerance under which two set members are considered the same
/// value; the lexicographically smallest `(k, l)` pair is kept.
const DEDUP_REL_TOL: f64 = 1e-12;

/// All members of the critical set `<= l_max`, sorted ascending and
/// deduplicated. The enumeration bound `k, l <= ceil(l_max * sqrt(3) / (2*pi))`
/// is sufficient because `k <= sqrt(k^2 + k*l + l^2)`.
pub fn critical_lengths_up_to(l_max: f64) -> Vec<CriticalLength> {
    assert!(l_max > 0.0, "critical_lengths_up_to needs l_max > 0");
    let bound = (l_max * 3f64.sqrt() / (2.0 * PI)).ceil() as u32;
    let mut out = Vec::new();
    for k in 1..=bound.max(1) {
        for l in k..=bound.max(1) {
            let m = CriticalLength::from_indices(k, l);
            if m.value <= l_max {
                out.push(m);
            }
        }
    }
    out.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then(a.k.cmp(&b.k))
            .then(a.l.cmp(&b.l))
    });
    out.dedup_by(|b, a| (b.value - a.value).abs() <= DEDUP_REL_TOL * a.value.abs());
    out
}

/// Whether `l` lies within `tol` of the critical set; the nearest member and
/// its distance are always reported.
pub fn is_critical(l: f64, tol: f64) -> Criticality {
    assert!(l > 0.0, "is_critical needs l > 0");
    // The window l + 7 always contains a member above l: the diagonal members
    // 2*pi*m (k = l = m) are spaced 2*pi < 7 apart.
    let members = critical_lengths_up_to(l + 7.0);
    let nearest = members
        .iter()
        .min_by(|a, b| {
            (a.value - l)
                .abs()
                .partial_cmp(&(b.value - l).abs())
                .unwrap()
        })
        .copied()
        .expect("window always contains a member");
    let distance = (nearest.value - l).abs();
    Criticality {
        is_critical: distance <= tol,
        nearest,
        distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force enumeration oracle, independent of the production bound.
    fn oracle_members(l_max: f64, idx_max: u32) -> Vec<f64> {
        let mut vals = Vec::new();
        for k in 1..=idx_max {
            for l in 1..=idx_max {
                let v = 2.0 * PI * (((k * k + k * l + l * l) as f64) / 3.0).sqrt();
                if v <= l_max && !vals.iter().any(|&u: &f64| (u - v).abs() < 1e-9) {
                    vals.push(v);
                }
            }
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    #[test]
    fn smallest_member_is_two_pi() {
        let ms = critical_lengths_up_to(7.0);
        assert_eq!(ms.len(), 1);
        assert_relative_eq!(ms[0].value, 2.0 * PI, max_relative = 1e-15);
        assert_eq!((ms[0].k, ms[0].l), (1, 1));
    }

    #[test]
    fn members_up_to_ten() {
        // Oracle: brute force over k, l <= 3 gives { 2*pi, 2*pi*sqrt(7/3) }.
        let ms = critical_lengths_up_to(10.0);
        let oracle = oracle_members(10.0, 3);
        assert_eq!(ms.len(), oracle.len());
        for (m, o) in ms.iter().zip(&oracle) {
            assert_relative_eq!(m.value, *o, max_relative = 1e-14);
        }
        assert_relative_eq!(
            ms[1].value,
            2.0 * PI * (7.0f64 / 3.0).sqrt(),
            max_relative = 1e-15
        );
        assert_eq!((ms[1].k, ms[1].l), (1, 2));
    }

    #[test]
    fn empty_below_smallest() {
        assert!(critical_lengths_up_to(1.0).is_empty());
    }

    #[test]
    fn monotone_in_l_max() {
        let small = critical_lengths_up_to(9.0);
        let large = critical_lengths_up_to(15.0);
        for m in &small {
            assert!(large
                .iter()
                .any(|n| (n.value, n.k, n.l) == (m.value, m.k, m.l)));
        }
    }

    #[test]
    fn stored_indices_reproduce_values() {
        for m in critical_lengths_up_to(40.0) {
            let v = 2.0 * PI * (((m.k * m.k + m.k * m.l + m.l * m.l) as f64) / 3.0).sqrt();
            assert!((m.value - v).abs() <= 4.0 * f64::EPSILON * v);
        }
    }

    #[test]
    fn two_pi_is_critical() {
        let c = is_critical(2.0 * PI, 1e-9);
        assert!(c.is_critical);
        assert_eq!((c.nearest.k, c.nearest.l), (1, 1));
        assert!(c.distance < 1e-12);
    }

    #[test]
    fn three_is_not_critical() {
        // Oracle: with k, l >= 1 the member nearest to 3 is 2*pi.
        let c = is_critical(3.0, 1e-9);
        assert!(!c.is_critical);
        assert_relative_eq!(c.nearest.value, 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(c.distance, 2.0 * PI - 3.0, max_relative = 1e-12);
    }

    #[test]
    fn tolerance_band_is_inclusive() {
        let tol = 1e-6;
        let c = is_critical(2.0 * PI + 0.5 * tol, tol);
        assert!(c.is_critical);
    }

    #[test]
    fn nearest_above_is_found() {
        // 6.1 sits just below 2*pi; 9.7 just above 2*pi*sqrt(7/3) = 9.5977.
        let c = is_critical(6.1, 1e-9);
        assert_relative_eq!(c.nearest.value, 2.0 * PI, max_relative = 1e-14);
        let c = is_critical(9.7, 1e-9);
        assert_relative_eq!(
            c.nearest.value,
            2.0 * PI * (7.0f64 / 3.0).sqrt(),
            max_relative = 1e-14
        );
    }
}
