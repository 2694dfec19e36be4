use mobo_core::pareto::{
    dominates, hssp_greedy, hssp_remove_one, hv_contribution, hypervolume, nds, select_by_nds_hssp,
};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Ratio<i64>;

fn naive_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Repeatedly strips the points nobody in the remainder dominates.
fn peel(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| naive_dominates(&points[j], &points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Volume of the union of boxes `[p, r]` by inclusion-exclusion, exact in
/// rationals.
fn inclusion_exclusion(points: &[Vec<Q>], reference: &[Q]) -> Q {
    let n = points.len();
    let mut total = Q::from_integer(0);
    for mask in 1u32..(1 << n) {
        let mut corner = vec![Q::from_integer(i64::MIN / 4); reference.len()];
        for (i, p) in points.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (c, &v) in corner.iter_mut().zip(p) {
                    if v > *c {
                        *c = v;
                    }
                }
            }
        }
        let vol = corner.iter().zip(reference).fold(Q::from_integer(1), |acc, (c, r)| {
            if c < r {
                acc * (*r - *c)
            } else {
                Q::from_integer(0)
            }
        });
        if mask.count_ones() % 2 == 1 {
            total += vol;
        } else {
            total -= vol;
        }
    }
    total
}

fn monte_carlo_hv(points: &[Vec<f64>], reference: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let m = reference.len();
    let lo: Vec<f64> = (0..m).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
    let box_volume: f64 = lo.iter().zip(reference).map(|(l, r)| r - l).product();
    let mut hits = 0usize;
    let mut z = vec![0.0; m];
    for _ in 0..draws {
        for k in 0..m {
            z[k] = rng.random_range(lo[k]..reference[k]);
        }
        if points.iter().any(|p| p.iter().zip(&z).all(|(a, b)| a <= b)) {
            hits += 1;
        }
    }
    box_volume * hits as f64 / draws as f64
}

fn random_front(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    // Points on the positive orthant of a sphere are mutually non-dominated.
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect()
}

#[test]
fn nds_matches_peeling_on_tied_three_objective_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| f64::from(rng.random_range(0..6u8))).collect()).collect();
        assert_eq!(nds(&pts).fronts, peel(&pts));
    }
}

#[test]
fn hypervolume_of_three_objective_front_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reference = [1.2, 1.2, 1.2];
    for _ in 0..3 {
        let pts = random_front(20, 3, &mut rng);
        let exact = hypervolume(&pts, &reference);
        let mc = monte_carlo_hv(&pts, &reference, 1_000_000, &mut rng);
        assert!((exact - mc).abs() / mc < 0.01, "exact {exact} vs mc {mc}");
    }
}

#[test]
fn hypervolume_equals_inclusion_exclusion_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 2..=4 {
        for _ in 0..15 {
            let n = rng.random_range(1..=9);
            let pts: Vec<Vec<Q>> =
                (0..n).map(|_| (0..m).map(|_| Q::new(rng.random_range(0..40), rng.random_range(1..5))).collect()).collect();
            let reference: Vec<Q> = (0..m).map(|_| Q::from_integer(10)).collect();
            assert_eq!(hypervolume(&pts, &reference), inclusion_exclusion(&pts, &reference));
        }
    }
}

#[test]
fn contribution_and_removal_match_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(2..=3);
        let pts: Vec<Vec<Q>> = (0..n).map(|_| (0..m).map(|_| Q::from_integer(rng.random_range(0..12))).collect()).collect();
        let reference: Vec<Q> = vec![Q::from_integer(12); m];
        let full = inclusion_exclusion(&pts, &reference);
        let losses: Vec<Q> = (0..n)
            .map(|i| {
                let rest: Vec<Vec<Q>> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p.clone()).collect();
                full - inclusion_exclusion(&rest, &reference)
            })
            .collect();
        for (i, loss) in losses.iter().enumerate() {
            assert_eq!(hv_contribution(&pts, i, &reference), *loss);
        }
        let min = *losses.iter().min().unwrap();
        let first = losses.iter().position(|l| *l == min).unwrap();
        assert_eq!(hssp_remove_one(&pts, &reference), first);
    }
}

#[test]
fn greedy_selection_is_near_the_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let reference = [1.1, 1.1];
    for _ in 0..100 {
        let pts: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        for k in 1..=3 {
            let mut best = 0.0f64;
            for mask in 0u32..64 {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let subset: Vec<&Vec<f64>> = (0..6).filter(|i| mask & (1 << i) != 0).map(|i| &pts[i]).collect();
                best = best.max(hypervolume(&subset, &reference));
            }
            let chosen: Vec<&Vec<f64>> = hssp_greedy(&pts, k, &reference).into_iter().map(|i| &pts[i]).collect();
            assert_eq!(chosen.len(), k);
            assert!(hypervolume(&chosen, &reference) >= 0.75 * best);
        }
    }
}

#[test]
fn straddling_front_keeps_whole_first_front() {
    // F1 = {0, 1}; F2 = {2, 3, 4}, of which (2.5, 2.5) adds the most.
    let pts = [[0.0, 3.0], [3.0, 0.0], [1.0, 4.0], [2.5, 2.5], [4.0, 1.0]];
    let reference = [5.0, 5.0];
    assert_eq!(select_by_nds_hssp(&pts, 3, &reference), vec![0, 1, 3]);
    let f2: Vec<&[f64]> = [2, 3, 4].iter().map(|&i| pts[i].as_slice()).collect();
    let mut best = (0, 0.0);
    for i in 0..3 {
        let mut with: Vec<&[f64]> = vec![&pts[0], &pts[1]];
        with.push(f2[i]);
        let hv = hypervolume(&with, &reference);
        if hv > best.1 {
            best = (i, hv);
        }
    }
    assert_eq!(best.0, 1);
}

fn points(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..10.0, m), 1..25)
}

proptest! {
    #[test]
    fn fronts_partition_and_are_ordered(pts in points(3)) {
        let fronts = nds(&pts).fronts;
        let mut all: Vec<usize> = fronts.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        for (k, front) in fronts.iter().enumerate() {
            for &a in front {
                for &b in front {
                    prop_assert!(!dominates(&pts[a], &pts[b]).unwrap());
                }
                if k > 0 {
                    prop_assert!(fronts[k - 1].iter().any(|&p| dominates(&pts[p], &pts[a]).unwrap()));
                }
            }
        }
    }

    #[test]
    fn hypervolume_grows_with_points_and_ignores_dominated_ones(pts in points(2), extra in prop::collection::vec(0.0f64..10.0, 2)) {
        let reference = [11.0, 11.0];
        let before = hypervolume(&pts, &reference);
        let mut more = pts.clone();
        more.push(extra);
        prop_assert!(hypervolume(&more, &reference) >= before - 1e-9);
        let mut shadow = pts.clone();
        shadow.push(pts[0].iter().map(|v| v + 0.5).collect());
        prop_assert!((hypervolume(&shadow, &reference) - before).abs() < 1e-9);
    }

    #[test]
    fn dominance_is_a_strict_order(a in prop::collection::vec(0i32..4, 3), b in prop::collection::vec(0i32..4, 3)) {
        prop_assert!(!dominates(&a, &a).unwrap());
        prop_assert!(!(dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap()));
    }
}
