use cxrsev_core::agreement::{fleiss_kappa, RatingMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Spreadsheet-style kappa: column proportions first, then per-row agreement,
/// then the two means, each in its own pass.
fn kappa_oracle(counts: &[Vec<u32>]) -> f64 {
    let n_items = counts.len();
    let n_cat = counts[0].len();
    let raters: u32 = counts[0].iter().sum();
    let total_ratings = (n_items as u32 * raters) as f64;

    let mut p_j = vec![0.0; n_cat];
    for j in 0..n_cat {
        let column: u32 = counts.iter().map(|row| row[j]).sum();
        p_j[j] = column as f64 / total_ratings;
    }

    let mut p_i = vec![0.0; n_items];
    let n = raters as f64;
    for (i, row) in counts.iter().enumerate() {
        let mut agreeing_pairs = 0.0;
        for &c in row {
            let c = c as f64;
            agreeing_pairs += c * (c - 1.0);
        }
        p_i[i] = agreeing_pairs / (n * (n - 1.0));
    }

    let p_bar = p_i.iter().sum::<f64>() / n_items as f64;
    let p_e = p_j.iter().map(|p| p * p).sum::<f64>();
    (p_bar - p_e) / (1.0 - p_e)
}

fn random_counts(rng: &mut ChaCha8Rng, items: usize, categories: usize, raters: u32) -> Vec<Vec<u32>> {
    (0..items)
        .map(|_| {
            let mut row = vec![0; categories];
            for _ in 0..raters {
                row[rng.random_range(0..categories)] += 1;
            }
            row
        })
        .collect()
}

fn matrix(counts: Vec<Vec<u32>>, categories: usize) -> RatingMatrix {
    let items = (0..counts.len()).map(|i| format!("i{i}")).collect();
    RatingMatrix::new(items, (0..categories as u8).collect(), counts).unwrap()
}

#[test]
fn random_ten_by_four_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let counts = random_counts(&mut rng, 10, 4, 3);
    let k = fleiss_kappa(&matrix(counts.clone(), 4)).unwrap();
    assert!((k - kappa_oracle(&counts)).abs() < 1e-12);
}

#[test]
fn permutation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let counts = random_counts(&mut rng, 25, 7, 3);
    let base = fleiss_kappa(&matrix(counts.clone(), 7)).unwrap();

    let mut items = counts.clone();
    items.reverse();
    items.rotate_left(4);
    assert!((fleiss_kappa(&matrix(items, 7)).unwrap() - base).abs() < 1e-12);

    let cats: Vec<Vec<u32>> = counts.iter().map(|r| vec![r[3], r[0], r[6], r[1], r[5], r[2], r[4]]).collect();
    assert!((fleiss_kappa(&matrix(cats, 7)).unwrap() - base).abs() < 1e-12);
}

#[test]
fn duplicate_item_matches_oracle_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = random_counts(&mut rng, 15, 9, 3);
    counts.push(counts[2].clone());
    let k = fleiss_kappa(&matrix(counts.clone(), 9)).unwrap();
    assert!((k - kappa_oracle(&counts)).abs() < 1e-12);
}

#[test]
fn concentrated_rows_over_two_categories_give_one() {
    let counts = vec![vec![0, 3, 0, 0], vec![0, 0, 0, 3], vec![0, 3, 0, 0]];
    assert_eq!(fleiss_kappa(&matrix(counts, 4)).unwrap(), 1.0);
}

#[test]
fn bounded_above_by_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let counts = random_counts(&mut rng, 6, 3, 2);
        if let Ok(k) = fleiss_kappa(&matrix(counts, 3)) {
            assert!((-1.0..=1.0).contains(&k), "{k}");
        }
    }
}
