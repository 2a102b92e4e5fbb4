use super::{average_directions, Degeneracy, Family, FeatureVector};
use crate::texture::GlcmSet;

const FLAT: f64 = 1e-12;

/// Per-direction GLCM features in catalog order. Levels are 1-based.
fn direction(ng: usize, counts: &[u64]) -> Vec<(f64, Option<Degeneracy>)> {
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let mut px = vec![0.0; ng];
    let mut py = vec![0.0; ng];
    let mut cells = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            let p = c as f64 / total;
            let (i, j) = (k / ng, k % ng);
            px[i] += p;
            py[j] += p;
            cells.push((i, j, p));
        }
    }
    let level = |i: usize| (i + 1) as f64;
    let mean = |m: &[f64]| m.iter().enumerate().map(|(i, p)| level(i) * p).sum::<f64>();
    let (mu_x, mu_y) = (mean(&px), mean(&py));
    let var = |m: &[f64], mu: f64| m.iter().enumerate().map(|(i, p)| (level(i) - mu).powi(2) * p).sum::<f64>();
    let (sd_x, sd_y) = (var(&px, mu_x).sqrt(), var(&py, mu_y).sqrt());
    let entropy = |m: &[f64]| -m.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>();
    let (hx, hy) = (entropy(&px), entropy(&py));

    let (mut auto, mut contrast, mut idm, mut energy, mut hxy, mut hxy1) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(i, j, p) in &cells {
        let (a, b) = (level(i), level(j));
        let d2 = (a - b) * (a - b);
        auto += a * b * p;
        contrast += d2 * p;
        idm += p / (1.0 + d2);
        energy += p * p;
        hxy -= p * p.log2();
        hxy1 -= p * (px[i] * py[j]).log2();
    }
    let mut hxy2 = 0.0;
    for &a in px.iter().filter(|&&p| p > 0.0) {
        for &b in py.iter().filter(|&&p| p > 0.0) {
            hxy2 -= a * b * (a * b).log2();
        }
    }

    let correlation = if sd_x * sd_y < FLAT {
        (0.0, Some(Degeneracy::FlatCooccurrence))
    } else {
        ((auto - mu_x * mu_y) / (sd_x * sd_y), None)
    };
    let hmax = hx.max(hy);
    let imc1 = if hmax <= 0.0 {
        (0.0, Some(Degeneracy::ZeroMarginalEntropy))
    } else {
        ((hxy - hxy1) / hmax, None)
    };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    vec![
        (auto, None),
        (contrast, None),
        correlation,
        (idm, None),
        imc1,
        (imc2, None),
        (energy, None),
        (hxy, None),
    ]
}

/// GLCM features averaged over the directions that hold at least one pair.
pub fn glcm_features(set: &GlcmSet) -> FeatureVector {
    let per: Vec<_> = set
        .nonempty_directions()
        .map(|d| direction(set.ng, &set.counts[d]))
        .collect();
    if per.is_empty() {
        return FeatureVector::all_nan(Family::Glcm, Degeneracy::EmptyMatrix);
    }
    average_directions(&per, Family::Glcm.catalog())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use crate::preprocess::DiscretizedVolume;
    use crate::texture::glcm;

    fn single_direction(ng: usize, counts: Vec<u64>) -> GlcmSet {
        let mut all = vec![vec![0; ng * ng]; 13];
        all[0] = counts;
        GlcmSet {
            ng,
            directions: crate::texture::DIRECTIONS.to_vec(),
            counts: all,
        }
    }

    #[test]
    fn contrast_of_hand_matrix() {
        // P = [[.5, .25], [.25, 0]]
        let f = glcm_features(&single_direction(2, vec![2, 1, 1, 0]));
        assert!((f.value("Contrast").unwrap() - 0.5).abs() < 1e-15);
        // mu = 1.25, sd^2 = 0.1875; sum ijp = 1*1*0.5 + 2 * (1*2*0.25) = 1.5
        let corr = (1.5 - 1.25 * 1.25) / 0.1875;
        assert!((f.value("Correlation").unwrap() - corr).abs() < 1e-12);
        assert!((f.value("JointEntropy").unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn constant_volume_degenerate() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([3, 3, 3]), vec![1; 27]).unwrap();
        let f = glcm_features(&glcm(&disc).unwrap());
        assert_eq!(f.value("Contrast"), Some(0.0));
        assert_eq!(f.value("JointEntropy"), Some(0.0));
        let c = f.get("Correlation").unwrap();
        assert_eq!((c.value, c.flag), (0.0, Some(Degeneracy::FlatCooccurrence)));
        let imc1 = f.get("Imc1").unwrap();
        assert_eq!((imc1.value, imc1.flag), (0.0, Some(Degeneracy::ZeroMarginalEntropy)));
    }

    #[test]
    fn perfectly_correlated_diagonal() {
        let f = glcm_features(&single_direction(3, vec![4, 0, 0, 0, 2, 0, 0, 0, 4]));
        assert!((f.value("Correlation").unwrap() - 1.0).abs() < 1e-12);
        // diagonal: HXY = HX, HXY1 = HXY2 = 2 HX -> IMC1 = -1
        assert!((f.value("Imc1").unwrap() + 1.0).abs() < 1e-12);
        assert!(f.value("Imc2").unwrap() > 0.9);
        assert_eq!(f.value("Contrast"), Some(0.0));
        assert_eq!(f.value("Idm"), Some(1.0));
    }
}
