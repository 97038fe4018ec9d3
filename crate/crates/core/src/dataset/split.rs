use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DatasetError};

fn part_size(n: usize, frac: f64) -> usize {
    (n as f64 * frac + 1e-9).floor() as usize
}

fn stratified_order(ds: &Dataset, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in ds.rows.iter().enumerate() {
        strata.entry(r.topology).or_default().push(i);
    }
    let mut keyed: Vec<(f64, u32, usize)> = Vec::with_capacity(ds.len());
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        let m = members.len() as f64;
        for (k, &i) in members.iter().enumerate() {
            keyed.push(((k as f64 + 0.5) / m, rand::Rng::gen(&mut rng), i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

/// Disjoint train/validation/test parts, stratified by topology.
///
/// Rows are shuffled within each topology and then interleaved so that
/// every prefix of the merged order holds topologies in proportion; test
/// takes the first `⌊n·test_frac⌋` rows, validation the next `⌊n·val_frac⌋`.
pub fn split(
    ds: &Dataset,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
    let ok = |f: f64| f > 0.0 && f < 1.0;
    if !ok(val_frac) || !ok(test_frac) || val_frac + test_frac >= 1.0 {
        return Err(DatasetError::InvalidFractions);
    }
    let n = ds.len();
    let (n_val, n_test) = (part_size(n, val_frac), part_size(n, test_frac));
    if n_val == 0 || n_test == 0 || n_val + n_test >= n {
        return Err(DatasetError::TooSmall { rows: n });
    }

    let order = stratified_order(ds, seed);
    let test = ds.subset(&order[..n_test]);
    let val = ds.subset(&order[n_test..n_test + n_val]);
    let train = ds.subset(&order[n_test + n_val..]);
    Ok((train, val, test))
}

/// Train/validation parts only, for data whose test set lives elsewhere.
pub fn holdout(ds: &Dataset, val_frac: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    if !(val_frac > 0.0 && val_frac < 1.0) {
        return Err(DatasetError::InvalidFractions);
    }
    let n_val = part_size(ds.len(), val_frac);
    if n_val == 0 || n_val >= ds.len() {
        return Err(DatasetError::TooSmall { rows: ds.len() });
    }
    let order = stratified_order(ds, seed);
    Ok((ds.subset(&order[n_val..]), ds.subset(&order[..n_val])))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::dataset::{gen_main_dataset, Encoding, SamplerConfig, TargetSpec};
    use crate::library::phase_shifter_family;
    use crate::poi::Poi;
    use crate::twoport::{Frequency, ReferenceImpedance};

    fn family_rows(count: usize) -> Dataset {
        gen_main_dataset(
            &phase_shifter_family(),
            &SamplerConfig::new(21, count),
            Frequency::new(2e9).unwrap(),
            ReferenceImpedance::default(),
            Encoding::Full,
            &TargetSpec::new(&[Poi::InsertionPhase]),
        )
        .unwrap()
    }

    #[test]
    fn holdout_sizes() {
        let ds = family_rows(200);
        let (tr, va) = holdout(&ds, 0.1, 4).unwrap();
        assert_eq!((tr.len(), va.len()), (180, 20));
        assert!(holdout(&family_rows(5), 0.1, 4).is_err());
        assert_eq!(holdout(&ds, 1.0, 4).unwrap_err(), DatasetError::InvalidFractions);
    }

    #[test]
    fn sizes_and_disjointness() {
        let ds = family_rows(1000);
        let (tr, va, te) = split(&ds, 0.1, 0.1, 4).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (800, 100, 100));
        let key = |d: &Dataset| d.rows.iter().map(|r| format!("{:?}", r.features)).collect::<BTreeSet<_>>();
        let (a, b, c) = (key(&tr), key(&va), key(&te));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        assert_eq!(a.len() + b.len() + c.len(), 1000);
        assert_eq!(split(&ds, 0.1, 0.1, 4).unwrap().2, te);
    }

    #[test]
    fn too_small_and_bad_fractions() {
        let ds = family_rows(5);
        assert_eq!(split(&ds, 0.1, 0.1, 0).unwrap_err(), DatasetError::TooSmall { rows: 5 });
        assert_eq!(split(&ds, 0.6, 0.5, 0).unwrap_err(), DatasetError::InvalidFractions);
        assert_eq!(split(&ds, 0.0, 0.5, 0).unwrap_err(), DatasetError::InvalidFractions);
    }

    #[test]
    fn every_topology_reaches_test() {
        let ds = family_rows(1500);
        for seed in 0..5 {
            let (_, val, test) = split(&ds, 0.1, 0.1, seed).unwrap();
            for part in [&val, &test] {
                let topo: BTreeSet<usize> = part.rows.iter().map(|r| r.topology).collect();
                assert_eq!(topo.len(), 9);
            }
        }
    }
}
