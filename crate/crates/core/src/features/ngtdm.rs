use super::{Degeneracy, Family, FeatureVector};
use crate::texture::Ngtdm;

pub const NGTDM_EPSILON: f64 = 1e-12;
pub const COARSENESS_CAP: f64 = 1e6;

pub fn ngtdm_features(m: &Ngtdm) -> FeatureVector {
    if m.total == 0 {
        return FeatureVector::all_nan(Family::Ngtdm, Degeneracy::EmptyMatrix);
    }
    let p = m.p();
    let n = m.total as f64;
    let present: Vec<(f64, f64, f64)> = (0..m.ng)
        .filter(|&i| m.n[i] > 0)
        .map(|i| ((i + 1) as f64, p[i], m.s[i]))
        .collect();
    let ngp = present.len() as f64;
    let sum_s: f64 = m.s.iter().sum();
    let sum_ps: f64 = present.iter().map(|&(_, p, s)| p * s).sum();

    let coarseness = {
        let raw = 1.0 / (NGTDM_EPSILON + sum_ps);
        if raw >= COARSENESS_CAP {
            (COARSENESS_CAP, Some(Degeneracy::CoarsenessCapped))
        } else {
            (raw, None)
        }
    };

    let (mut pair_contrast, mut busy_den, mut complexity, mut strength) = (0.0, 0.0, 0.0, 0.0);
    for &(i, pi, si) in &present {
        for &(j, pj, sj) in &present {
            let d = i - j;
            pair_contrast += pi * pj * d * d;
            busy_den += (i * pi - j * pj).abs();
            complexity += d.abs() * (pi * si + pj * sj) / (pi + pj);
            strength += (pi + pj) * d * d;
        }
    }

    let uniform = Some(Degeneracy::UniformNeighborhood);
    let contrast = if ngp > 1.0 {
        (pair_contrast / (ngp * (ngp - 1.0)) * (sum_s / n), None)
    } else {
        (0.0, uniform)
    };
    let busyness = if busy_den > 0.0 { (sum_ps / busy_den, None) } else { (0.0, uniform) };
    let strength = if sum_s > 0.0 {
        (strength / (NGTDM_EPSILON + sum_s), None)
    } else {
        (0.0, uniform)
    };

    let mut out = FeatureVector::new();
    out.push("Coarseness", coarseness.0, coarseness.1);
    out.push("Contrast", contrast.0, contrast.1);
    out.push("Busyness", busyness.0, busyness.1);
    out.push("Complexity", complexity / n, None);
    out.push("Strength", strength.0, strength.1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use crate::preprocess::DiscretizedVolume;
    use crate::texture::ngtdm;

    #[test]
    fn three_voxel_strength() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([1, 1, 3]), vec![1, 2, 1]).unwrap();
        let f = ngtdm_features(&ngtdm(&disc).unwrap());
        // [(p1 + p2)(1 - 2)^2 * 2] / (eps + 3)
        assert!((f.value("Strength").unwrap() - 2.0 / 3.0).abs() < 1e-12);
        // sum p*s = 2/3 * 2 + 1/3 * 1 = 5/3
        assert!((f.value("Coarseness").unwrap() - 0.6).abs() < 1e-9);
    }

    #[test]
    fn constant_volume() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([3, 3, 3]), vec![1; 27]).unwrap();
        let f = ngtdm_features(&ngtdm(&disc).unwrap());
        assert_eq!(f.value("Strength"), Some(0.0));
        let c = f.get("Coarseness").unwrap();
        assert_eq!((c.value, c.flag), (COARSENESS_CAP, Some(Degeneracy::CoarsenessCapped)));
        assert_eq!(f.value("Contrast"), Some(0.0));
        assert_eq!(f.value("Busyness"), Some(0.0));
    }
}
