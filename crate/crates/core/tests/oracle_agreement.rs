//! Every measure and flavor against its literal definition on random data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softval::measures::{self, Flavor, Measure};
use softval::oracle;
use softval::{MembershipMatrix, Tolerances, World};

const FIXTURES: usize = 1000;
const TOL: f64 = 1e-12;

const FLAVORS: [Flavor; 5] = [Flavor::Strong, Flavor::Product, Flavor::Weak, Flavor::Mae, Flavor::Rmse];
const MEASURES: [Measure; 4] = [Measure::Sens, Measure::Spec, Measure::Ppv, Measure::Npv];

fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    match rng.random_range(0..5) {
        0 => {
            let mut row = vec![0.0; k];
            row[rng.random_range(0..k)] = 1.0;
            row
        }
        _ => {
            // some classes sit exactly at zero
            let raw: Vec<f64> = (0..k)
                .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
                .collect();
            let total: f64 = raw.iter().sum();
            if total == 0.0 {
                let mut row = vec![0.0; k];
                row[0] = 1.0;
                return row;
            }
            raw.iter().map(|v| v / total).collect()
        }
    }
}

fn random_pair(rng: &mut ChaCha8Rng) -> (MembershipMatrix, MembershipMatrix) {
    let n = rng.random_range(1..=40);
    let k = rng.random_range(2..=4);
    let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let build = |rng: &mut ChaCha8Rng| {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_row(rng, k)).collect();
        MembershipMatrix::validate(&rows, names.clone(), World::Closed, Tolerances::default()).unwrap()
    };
    let reference = build(rng);
    let prediction = build(rng);
    (reference, prediction)
}

#[test]
fn every_measure_matches_its_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut compared = 0usize;
    for _ in 0..FIXTURES {
        let (r, p) = random_pair(&mut rng);
        for class in 0..r.n_classes() {
            for m in MEASURES {
                for flavor in FLAVORS {
                    let got = measures::evaluate(&r, &p, m, class, flavor).unwrap().value;
                    let want = oracle::measure_by_definition(&r, &p, m, class, flavor);
                    match (got, want) {
                        (Some(g), Some(w)) => {
                            assert!((g - w).abs() <= TOL, "{flavor} {m} class {class}: {g} vs {w}");
                            compared += 1;
                        }
                        (None, None) => {}
                        // a denominator that is zero in one summation order
                        // but a few ulps in the other
                        (g, w) => {
                            let denominator = measures::evaluate(&r, &p, m, class, flavor).unwrap().denominator;
                            assert!(denominator.abs() < TOL, "{flavor} {m} class {class}: {g:?} vs {w:?}");
                        }
                    }
                }
            }
        }
    }
    assert!(compared >= FIXTURES * MEASURES.len() * FLAVORS.len());
}

#[test]
fn crisp_data_reduces_to_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..=30);
        let k = rng.random_range(2..=4);
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let labels = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(0..k)).collect::<Vec<_>>();
        let (ref_labels, pred_labels) = (labels(&mut rng), labels(&mut rng));
        let one_hot = |labels: &[usize]| {
            let rows: Vec<Vec<f64>> = labels
                .iter()
                .map(|&l| (0..k).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
                .collect();
            MembershipMatrix::validate(&rows, names.clone(), World::Closed, Tolerances::default()).unwrap()
        };
        let (r, p) = (one_hot(&ref_labels), one_hot(&pred_labels));
        for class in 0..k {
            let expected = oracle::crisp_ratios(&ref_labels, &pred_labels, class);
            for (m, want) in MEASURES.into_iter().zip(expected) {
                for flavor in [Flavor::Strong, Flavor::Product, Flavor::Weak] {
                    let got = measures::evaluate(&r, &p, m, class, flavor).unwrap().value;
                    assert_eq!(got, want, "{flavor} {m} class {class}");
                }
            }
        }
    }
}

#[test]
fn single_sample_overlap_lies_between_enumerated_extremes() {
    let names = vec!["a".to_string(), "b".to_string()];
    for units in 1..=12 {
        for a in 0..=units {
            for b in 0..=units {
                let sample = oracle::DiscretizedSample::single(units, a, b).unwrap();
                let (lo, hi) = oracle::overlap_extremes(&sample, 0).unwrap();
                let mean = oracle::overlap_expectation(&sample, 0).unwrap();
                let (ra, pb) = (sample.reference_membership(0), sample.prediction_membership(0));
                let matrix = |v: f64| {
                    MembershipMatrix::validate(&[vec![v, 1.0 - v]], names.clone(), World::Closed, Tolerances::default())
                        .unwrap()
                };
                let (r, p) = (matrix(ra), matrix(pb));
                let overlap = |flavor| {
                    let result = measures::evaluate(&r, &p, Measure::Sens, 0, flavor).unwrap();
                    result.value.map_or(0.0, |v| v * result.denominator)
                };
                let eps = f64::EPSILON;
                assert!((overlap(Flavor::Strong) - lo).abs() <= eps, "{a}/{units}, {b}/{units}");
                assert!(
                    (overlap(Flavor::Product) - mean).abs() <= eps,
                    "{a}/{units}, {b}/{units}"
                );
                assert!((overlap(Flavor::Weak) - hi).abs() <= eps, "{a}/{units}, {b}/{units}");
            }
        }
    }
}
