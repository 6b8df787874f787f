use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::error::Error;
use crate::model::LatentDump;
use crate::targets::LabelMap;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_map(r: &mut ChaCha8Rng, w: usize, h: usize, n: usize, used: usize) -> LabelMap {
    LabelMap::new(
        w,
        h,
        n,
        (0..w * h).map(|_| r.random_range(0..used) as u8).collect(),
    )
    .unwrap()
}

#[test]
fn confusion_basics() {
    let mut r = rng(0);
    let gt = random_map(&mut r, 6, 5, 4, 4);
    let cm = confusion(&gt, &gt, None).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!(i == j || cm.get(i, j) == 0);
        }
    }
    assert_eq!(cm.total(), 30);
    let none = confusion(&gt, &gt, Some(&[false; 30])).unwrap();
    assert_eq!(none.total(), 0);
    assert!(matches!(seg_metrics(&none), Err(Error::Degenerate(_))));
    let other = random_map(&mut r, 5, 5, 4, 4);
    assert!(confusion(&other, &gt, None).is_err());
}

#[test]
fn confusion_matches_tally() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let gt = random_map(&mut r, 9, 7, 5, 5);
        let pred = random_map(&mut r, 9, 7, 5, 5);
        let mask: Vec<bool> = (0..63).map(|_| r.random_bool(0.6)).collect();
        let cm = confusion(&pred, &gt, Some(&mask)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let tally = (0..63)
                    .filter(|&k| {
                        mask[k] && gt.ids()[k] as usize == i && pred.ids()[k] as usize == j
                    })
                    .count();
                assert_eq!(cm.get(i, j), tally as u64);
            }
        }
    }
}

#[test]
fn two_by_two_hand_case() {
    let pred = LabelMap::new(2, 2, 3, vec![1, 1, 2, 2]).unwrap();
    let gt = LabelMap::new(2, 2, 3, vec![1, 2, 1, 2]).unwrap();
    let m = seg_metrics(&confusion(&pred, &gt, None).unwrap()).unwrap();
    assert_eq!(m.iou, vec![None, Some(1.0 / 3.0), Some(1.0 / 3.0)]);
    assert!((m.mean_iou - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(m.accuracy[0], None);
}

#[test]
fn perfect_prediction_scores_one() {
    let mut r = rng(1);
    let gt = random_map(&mut r, 8, 8, 6, 4);
    let m = seg_metrics(&confusion(&gt, &gt, None).unwrap()).unwrap();
    for v in [m.mean_iou, m.mean_accuracy, m.mean_precision, m.mean_recall] {
        assert_eq!(v, 1.0);
    }
    assert!(m.iou[4].is_none() && m.iou[5].is_none());
}

#[test]
fn constant_prediction_scores_its_iou_over_n() {
    let mut r = rng(2);
    let gt = random_map(&mut r, 10, 10, 4, 4);
    let pred = LabelMap::filled(10, 10, 4, 2).unwrap();
    let m = seg_metrics(&confusion(&pred, &gt, None).unwrap()).unwrap();
    let share = gt.ids().iter().filter(|&&c| c == 2).count() as f64 / 100.0;
    assert!((m.mean_iou - share / 4.0).abs() < 1e-12);
}

/// Brute-force scores straight from the maps.
fn oracle(pred: &LabelMap, gt: &LabelMap) -> (Vec<Option<[f64; 4]>>, [f64; 4]) {
    let n = gt.n_classes();
    let total = gt.len() as f64;
    let mut per = vec![None; n];
    for c in 0..n as u8 {
        let (mut tp, mut fp, mut fnn, mut tn) = (0.0, 0.0, 0.0, 0.0);
        for (&g, &p) in gt.ids().iter().zip(pred.ids()) {
            match (g == c, p == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fnn += 1.0,
                (false, false) => tn += 1.0,
            }
        }
        if tp + fp + fnn > 0.0 {
            let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
            per[c as usize] = Some([
                tp / (tp + fp + fnn),
                (tp + tn) / total,
                div(tp, tp + fp),
                div(tp, tp + fnn),
            ]);
        }
    }
    let present: Vec<[f64; 4]> = per.iter().flatten().copied().collect();
    let mut means = [0.0; 4];
    for k in 0..4 {
        means[k] = present.iter().map(|v| v[k]).sum::<f64>() / present.len() as f64;
    }
    (per, means)
}

#[test]
fn seg_metrics_match_brute_force() {
    for seed in 0..100 {
        let mut r = rng(100 + seed);
        let used = r.random_range(2..=10);
        let gt = random_map(&mut r, 16, 16, 10, used);
        let pred = random_map(&mut r, 16, 16, 10, used);
        let m = seg_metrics(&confusion(&pred, &gt, None).unwrap()).unwrap();
        let (per, means) = oracle(&pred, &gt);
        let got = [m.mean_iou, m.mean_accuracy, m.mean_precision, m.mean_recall];
        for k in 0..4 {
            assert!((got[k] - means[k]).abs() < 1e-12);
        }
        for c in 0..10 {
            let row = [m.iou[c], m.accuracy[c], m.precision[c], m.recall[c]];
            match per[c] {
                None => assert!(row.iter().all(Option::is_none)),
                Some(v) => (0..4).for_each(|k| assert!((row[k].unwrap() - v[k]).abs() < 1e-12)),
            }
        }
    }
}

#[test]
fn binary_accuracy_is_plain_accuracy() {
    let mut r = rng(3);
    let gt = random_map(&mut r, 12, 12, 2, 2);
    let pred = random_map(&mut r, 12, 12, 2, 2);
    let m = seg_metrics(&confusion(&pred, &gt, None).unwrap()).unwrap();
    let direct = gt
        .ids()
        .iter()
        .zip(pred.ids())
        .filter(|(a, b)| a == b)
        .count() as f64
        / 144.0;
    assert!((m.mean_accuracy - direct).abs() < 1e-15);
    assert_eq!(m.accuracy[0], m.accuracy[1]);
}

fn brute_band(gt: &LabelMap, width: u32) -> Vec<bool> {
    let contours = class_contours(gt);
    let (w, h) = (gt.width() as i64, gt.height() as i64);
    (0..w * h)
        .map(|k| {
            let (x, y) = (k % w, k / w);
            (0..w * h).any(|q| {
                contours[q as usize]
                    && ((q % w - x).pow(2) + (q / w - y).pow(2)) as u64 <= (width * width) as u64
            })
        })
        .collect()
}

#[test]
fn trimap_band_examples() {
    let uniform = LabelMap::filled(5, 5, 2, 1).unwrap();
    assert!(trimap_band(&uniform, 3).unwrap().is_empty());
    let split = LabelMap::new(4, 4, 2, (0..16).map(|k| (k % 4 >= 2) as u8).collect()).unwrap();
    assert_eq!(trimap_band(&split, 1).unwrap().len(), 16);
    assert!(trimap_band(&split, 0).is_err());
    for seed in 0..20 {
        let mut r = rng(200 + seed);
        let gt = random_map(&mut r, 12, 10, 3, 3);
        for w in 1..5 {
            assert_eq!(trimap_band(&gt, w).unwrap().members, brute_band(&gt, w));
        }
    }
}

#[test]
fn trimap_curve_examples() {
    // A square of class 1 on class 0.
    let ids: Vec<u8> = (0..400)
        .map(|k| ((4..14).contains(&(k % 20)) && (5..15).contains(&(k / 20))) as u8)
        .collect();
    let gt = LabelMap::new(20, 20, 2, ids).unwrap();
    let perfect = trimap_curve(&gt, &gt, &[1, 2, 4, 8]).unwrap();
    assert!(perfect.iter().all(|p| p.error_pct == Some(0.0)));

    let contours = class_contours(&gt);
    let wrong: Vec<u8> = gt
        .ids()
        .iter()
        .zip(&contours)
        .map(|(&c, &b)| if b { 1 - c } else { c })
        .collect();
    let pred = LabelMap::new(20, 20, 2, wrong).unwrap();
    let curve = trimap_curve(&pred, &gt, &[1, 2, 3, 4, 6]).unwrap();
    for pair in curve.windows(2) {
        assert!(
            pair[1].error_pct.unwrap() < pair[0].error_pct.unwrap(),
            "{curve:?}"
        );
    }

    let blank = LabelMap::filled(6, 6, 2, 0).unwrap();
    assert_eq!(
        trimap_curve(&blank, &blank, &[2]).unwrap()[0].error_pct,
        None
    );
}

#[test]
fn trimap_curve_matches_tally() {
    for seed in 0..20 {
        let mut r = rng(300 + seed);
        let gt = random_map(&mut r, 10, 10, 3, 3);
        let pred = random_map(&mut r, 10, 10, 3, 3);
        let curve = trimap_curve(&pred, &gt, &[1, 2, 3]).unwrap();
        for p in curve {
            let band = brute_band(&gt, p.width);
            let size = band.iter().filter(|&&b| b).count();
            let wrong = (0..100)
                .filter(|&k| band[k] && gt.ids()[k] != pred.ids()[k])
                .count();
            assert_eq!(
                p.error_pct,
                (size > 0).then(|| 100.0 * wrong as f64 / size as f64)
            );
        }
    }
}

proptest! {
    #[test]
    fn bands_are_nested(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gt = random_map(&mut r, 14, 11, 4, 3);
        for w in 1..6 {
            prop_assert!(trimap_band(&gt, w).unwrap().is_subset_of(&trimap_band(&gt, w + 1).unwrap()));
        }
    }
}

fn one_d() -> (Vec<Vec<f64>>, Vec<usize>) {
    (
        vec![vec![0.0], vec![0.2], vec![10.0], vec![10.2]],
        vec![0, 0, 1, 1],
    )
}

#[test]
fn clustering_hand_case() {
    let (p, l) = one_d();
    // a = 0.2 everywhere; b = 10.1 for the outer points, 9.9 for the inner.
    let s = silhouette(&p, &l).unwrap();
    let expected = 1.0 - 0.1 * (1.0 / 10.1 + 1.0 / 9.9);
    assert!((s - expected).abs() < 1e-12);
    assert!((s - 0.979998).abs() < 1e-6);
    assert!((calinski_harabasz(&p, &l).unwrap() - 5000.0).abs() < 1e-6);
    assert!((davies_bouldin(&p, &l).unwrap() - 0.02).abs() < 1e-12);
}

#[test]
fn clustering_degenerate_cases() {
    let same = vec![vec![1.0, 1.0]; 4];
    assert_eq!(silhouette(&same, &[0, 0, 1, 1]).unwrap(), 0.0);
    assert!(matches!(
        calinski_harabasz(&same, &[0, 0, 1, 1]),
        Err(Error::Degenerate(_))
    ));
    assert!(matches!(
        davies_bouldin(&same, &[0, 0, 1, 1]),
        Err(Error::Degenerate(_))
    ));
    let tight = vec![vec![0.0], vec![0.0], vec![5.0], vec![5.0]];
    assert_eq!(davies_bouldin(&tight, &[0, 0, 1, 1]).unwrap(), 0.0);
    let (p, _) = one_d();
    assert!(matches!(
        silhouette(&p, &[3, 3, 3, 3]),
        Err(Error::Config(_))
    ));
    // The singleton scores 0; the pair scores (b - a) / b with b = 9, 8.9.
    let s = silhouette(&[vec![0.0], vec![0.1], vec![9.0]], &[0, 0, 1]).unwrap();
    let direct = ((9.0 - 0.1) / 9.0 + (8.9 - 0.1) / 8.9) / 3.0;
    assert!((s - direct).abs() < 1e-12, "{s}");
}

/// Direct-definition clustering scores.
fn script_scores(p: &[Vec<f64>], l: &[usize], k: usize) -> (f64, f64, f64) {
    let d = |a: &Vec<f64>, b: &Vec<f64>| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let n = p.len();
    let mut ssi = 0.0;
    for i in 0..n {
        let members = |c: usize| (0..n).filter(move |&j| l[j] == c && j != i);
        let size = |c: usize| (0..n).filter(|&j| l[j] == c).count();
        if size(l[i]) == 1 {
            continue;
        }
        let a = members(l[i]).map(|j| d(&p[i], &p[j])).sum::<f64>() / (size(l[i]) - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != l[i])
            .map(|c| members(c).map(|j| d(&p[i], &p[j])).sum::<f64>() / size(c) as f64)
            .fold(f64::MAX, f64::min);
        ssi += (b - a) / a.max(b);
    }
    ssi /= n as f64;
    let dim = p[0].len();
    let centroid = |c: Option<usize>| {
        let sel: Vec<&Vec<f64>> = (0..n)
            .filter(|&j| c.is_none_or(|c| l[j] == c))
            .map(|j| &p[j])
            .collect();
        (0..dim)
            .map(|t| sel.iter().map(|v| v[t]).sum::<f64>() / sel.len() as f64)
            .collect::<Vec<f64>>()
    };
    let all = centroid(None);
    let cs: Vec<Vec<f64>> = (0..k).map(|c| centroid(Some(c))).collect();
    let ssm: f64 = (0..n).map(|j| d(&cs[l[j]], &all).powi(2)).sum();
    let ssw: f64 = (0..n).map(|j| d(&p[j], &cs[l[j]]).powi(2)).sum();
    let chi = ssm / ssw * (n - k) as f64 / (k - 1) as f64;
    let s: Vec<f64> = (0..k)
        .map(|c| {
            let m: Vec<usize> = (0..n).filter(|&j| l[j] == c).collect();
            m.iter().map(|&j| d(&p[j], &cs[c])).sum::<f64>() / m.len() as f64
        })
        .collect();
    let dbi = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (s[i] + s[j]) / d(&cs[i], &cs[j]))
                .fold(f64::MIN, f64::max)
        })
        .sum::<f64>()
        / k as f64;
    (ssi, chi, dbi)
}

fn clustered_points(
    r: &mut ChaCha8Rng,
    n: usize,
    dim: usize,
    k: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| r.random_range(-5.0..5.0)).collect())
        .collect();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let points = labels
        .iter()
        .map(|&c| centers[c].iter().map(|m| m + noise.sample(r)).collect())
        .collect();
    (points, labels)
}

#[test]
fn clustering_matches_direct_definitions() {
    for seed in 0..5 {
        let mut r = rng(400 + seed);
        let (p, l) = clustered_points(&mut r, 200, 8, 4);
        let (ssi, chi, dbi) = script_scores(&p, &l, 4);
        assert!((silhouette(&p, &l).unwrap() - ssi).abs() < 1e-9);
        assert!((calinski_harabasz(&p, &l).unwrap() - chi).abs() < 1e-9 * chi.max(1.0));
        assert!((davies_bouldin(&p, &l).unwrap() - dbi).abs() < 1e-9);
        // Random labels on the same points.
        let shuffled: Vec<usize> = (0..200).map(|_| r.random_range(0..4)).collect();
        let (ssi, chi, dbi) = script_scores(&p, &shuffled, 4);
        assert!((silhouette(&p, &shuffled).unwrap() - ssi).abs() < 1e-9);
        assert!((calinski_harabasz(&p, &shuffled).unwrap() - chi).abs() < 1e-9 * chi.max(1.0));
        assert!((davies_bouldin(&p, &shuffled).unwrap() - dbi).abs() < 1e-9);
    }
}

#[test]
fn latent_metrics_separate_clouds_from_shuffles() {
    let mut r = rng(7);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut dump = LatentDump::new(4);
    for i in 0..120 {
        let tag = (i % 2) as u8;
        let center = if tag == 0 { -5.0 } else { 5.0 };
        dump.points
            .push((0..4).map(|_| center + noise.sample(&mut r)).collect());
        dump.tags.push(tag);
    }
    let s = latent_metrics(&dump).unwrap();
    assert!(s.silhouette > 0.9 && s.davies_bouldin < 0.3, "{s:?}");
    dump.tags.shuffle(&mut r);
    let shuffled = latent_metrics(&dump).unwrap();
    assert!(shuffled.silhouette.abs() < 0.1, "{shuffled:?}");
    dump.tags.fill(1);
    assert!(matches!(latent_metrics(&dump), Err(Error::Config(_))));
}

proptest! {
    #[test]
    fn cluster_scores_are_bounded_and_relabel_invariant(seed in any::<u64>(), shift in 1usize..50) {
        let mut r = rng(seed);
        let (p, l) = clustered_points(&mut r, 40, 3, 3);
        let relabeled: Vec<usize> = l.iter().map(|&c| (2 - c) * 7 + shift).collect();
        let s = silhouette(&p, &l).unwrap();
        let c = calinski_harabasz(&p, &l).unwrap();
        let d = davies_bouldin(&p, &l).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s) && c >= 0.0 && d >= 0.0);
        prop_assert!((silhouette(&p, &relabeled).unwrap() - s).abs() < 1e-12);
        prop_assert!((calinski_harabasz(&p, &relabeled).unwrap() - c).abs() < 1e-9 * c.max(1.0));
        prop_assert!((davies_bouldin(&p, &relabeled).unwrap() - d).abs() < 1e-12);
    }
}

#[test]
fn csv_writers_emit_headers() {
    let pred = LabelMap::new(2, 2, 3, vec![1, 1, 2, 2]).unwrap();
    let gt = LabelMap::new(2, 2, 3, vec![1, 2, 1, 2]).unwrap();
    let m = seg_metrics(&confusion(&pred, &gt, None).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &m).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("class,iou,acc,prec,rec\n0,,,,\n1,0.3333333333333333,"));
    assert!(text.lines().last().unwrap().starts_with("mean,"));

    let mut buf = Vec::new();
    write_trimap_csv(
        &mut buf,
        &[
            TrimapPoint {
                width: 1,
                error_pct: Some(2.5),
            },
            TrimapPoint {
                width: 2,
                error_pct: None,
            },
        ],
    )
    .unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "width,error_pct\n1,2.5\n2,\n"
    );

    let mut dump = LatentDump::new(2);
    dump.points.push(vec![0.5, -1.0]);
    dump.tags.push(3);
    let mut buf = Vec::new();
    write_latent_csv(&mut buf, &dump).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "tag,v0,v1\n3,0.5,-1\n");
}
