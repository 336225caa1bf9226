use std::collections::{BTreeMap, BTreeSet};

use cxrsev_core::split::grouped_split;
use proptest::prelude::*;

fn cohort(sizes: &[usize]) -> Vec<(String, String)> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(p, &n)| (0..n).map(move |t| (format!("p{p}_t{t}"), format!("p{p}"))))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn patients_never_straddle(sizes in prop::collection::vec(1usize..6, 2..40), seed in any::<u64>(), rep in 0u64..50) {
        let images = cohort(&sizes);
        let plan = grouped_split(images.iter().map(|(a, b)| (a.as_str(), b.as_str())), 0.5, seed, rep).unwrap();

        prop_assert!(plan.train_patients.is_disjoint(&plan.test_patients));
        let all: BTreeSet<String> = images.iter().map(|(_, p)| p.clone()).collect();
        let union: BTreeSet<String> = plan.train_patients.union(&plan.test_patients).cloned().collect();
        prop_assert_eq!(union, all);

        let side: BTreeMap<&str, bool> = images.iter().map(|(i, _)| (i.as_str(), plan.train_images.contains(i))).collect();
        for (img, patient) in &images {
            prop_assert_eq!(side[img.as_str()], plan.train_patients.contains(patient));
        }
        prop_assert!(!plan.train_images.is_empty() && !plan.test_images.is_empty());

        let n = images.len() as f64;
        let frac = plan.train_images.len() as f64 / n;
        let max_patient = *sizes.iter().max().unwrap() as f64;
        prop_assert!(frac >= 0.5 && frac <= 0.5 + max_patient / n, "fraction {}", frac);
    }
}
