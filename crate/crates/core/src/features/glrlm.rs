use super::{average_directions, Degeneracy, Family, FeatureVector};
use crate::texture::GlrlmSet;

fn direction(set: &GlrlmSet, d: usize) -> Vec<(f64, Option<Degeneracy>)> {
    let runs = set.runs(d) as f64;
    let (mut sre, mut lre, mut lgre, mut hgre) = (0.0, 0.0, 0.0, 0.0);
    let mut by_level = vec![0.0; set.ng];
    let mut by_length = vec![0.0; set.max_run];
    for level in 1..=set.ng {
        let i = level as f64;
        for len in 1..=set.max_run {
            let m = set.get(d, level, len);
            if m == 0 {
                continue;
            }
            let (m, r) = (m as f64, len as f64);
            sre += m / (r * r);
            lre += m * r * r;
            lgre += m / (i * i);
            hgre += m * i * i;
            by_level[level - 1] += m;
            by_length[len - 1] += m;
        }
    }
    let gln = by_level.iter().map(|v| v * v).sum::<f64>();
    let rln = by_length.iter().map(|v| v * v).sum::<f64>();
    vec![
        (sre / runs, None),
        (lre / runs, None),
        (gln / runs, None),
        (rln / runs, None),
        (runs / set.voxels as f64, None),
        (lgre / runs, None),
        (hgre / runs, None),
    ]
}

/// GLRLM features averaged over the 13 directions.
pub fn glrlm_features(set: &GlrlmSet) -> FeatureVector {
    let per: Vec<_> = (0..set.counts.len())
        .filter(|&d| set.runs(d) > 0)
        .map(|d| direction(set, d))
        .collect();
    if per.is_empty() {
        return FeatureVector::all_nan(Family::Glrlm, Degeneracy::EmptyMatrix);
    }
    average_directions(&per, Family::Glrlm.catalog())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use crate::preprocess::DiscretizedVolume;
    use crate::texture::glrlm;

    #[test]
    fn column_example_along_z() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([1, 1, 4]), vec![2, 2, 2, 1]).unwrap();
        let set = glrlm(&disc).unwrap();
        let d = crate::texture::DIRECTIONS.iter().position(|&x| x == [0, 0, 1]).unwrap();
        let v = direction(&set, d);
        assert!((v[0].0 - 5.0 / 9.0).abs() < 1e-15);
        assert_eq!(v[1].0, 5.0);
        assert_eq!(v[4].0, 0.5);
    }

    #[test]
    fn unit_runs_everywhere() {
        let g = Geometry::unit([4, 4, 4]);
        let levels = (0..64).map(|i| { let [x, y, z] = g.coords(i); ((x + y + z) % 2 + 1) as u16 }).collect();
        let disc = DiscretizedVolume::from_levels(g, levels).unwrap();
        let set = glrlm(&disc).unwrap();
        for axis in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            let d = crate::texture::DIRECTIONS.iter().position(|&x| x == axis).unwrap();
            let v = direction(&set, d);
            assert_eq!((v[0].0, v[1].0, v[4].0), (1.0, 1.0, 1.0));
        }
    }
}
