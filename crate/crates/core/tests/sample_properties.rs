use phdsens::moments::compute_moments;
use phdsens::phd::fit_from_moments;
use phdsens::sample::{eris, hris, influence_report, sris};
use phdsens::sim::{simulate, SimModel, SimSpec};
use phdsens::PhdVariant;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn top(values: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    idx.truncate(count);
    idx
}

#[test]
fn most_influential_point_is_found_by_all_three() {
    let d = simulate(&SimSpec::cosine(4, 263, 0.5, 2024).unwrap()).unwrap();
    let m = compute_moments(&d).unwrap();
    let fit = fit_from_moments(&m, PhdVariant::YBased, 1).unwrap();
    let s: Vec<f64> = sris(&d, &fit).unwrap().into_iter().map(|r| r.unwrap().values[0]).collect();
    let e: Vec<f64> = eris(&d, &fit, &m).unwrap().into_iter().map(|r| r[0]).collect();
    let h: Vec<f64> = hris(&d, &fit, &m).unwrap().into_iter().map(|r| r.unwrap()[0]).collect();
    let worst = top(&s, 1)[0];
    assert!(top(&e, 5).contains(&worst));
    assert!(top(&h, 5).contains(&worst));
}

#[test]
fn variants_agree_without_linear_trend() {
    // Y = X₁² + ε has no population linear trend, so the two plug-ins differ
    // only through sampling error in S_xy.
    let gap = |n: usize| {
        let spec = SimSpec::new(3, n, SimModel::QuadraticFirst { sigma: 0.5 }, 31).unwrap();
        let d = simulate(&spec).unwrap();
        let m = compute_moments(&d).unwrap();
        let fy = fit_from_moments(&m, PhdVariant::YBased, 1).unwrap();
        let fr = fit_from_moments(&m, PhdVariant::RBased, 1).unwrap();
        let ey = eris(&d, &fy, &m).unwrap();
        let er = eris(&d, &fr, &m).unwrap();
        median(ey.iter().zip(&er).map(|(a, b)| (a[0] - b[0]).abs() / a[0].max(1e-12)).collect())
    };
    let (small, large) = (gap(200), gap(5000));
    assert!(large < small, "{large} vs {small}");
    assert!(large < 0.1);
}

#[test]
fn eris_approaches_sris_with_n() {
    let scaled_gap = |n: usize| {
        let d = simulate(&SimSpec::cosine(3, n, 0.3, 77).unwrap()).unwrap();
        let m = compute_moments(&d).unwrap();
        let fit = fit_from_moments(&m, PhdVariant::YBased, 1).unwrap();
        let s = sris(&d, &fit).unwrap();
        let e = eris(&d, &fit, &m).unwrap();
        median(s.iter().zip(&e).map(|(a, b)| (a.as_ref().unwrap().values[0] - b[0]).abs() / (n - 1) as f64).collect())
    };
    assert!(scaled_gap(1000) < scaled_gap(100));
}

#[test]
fn hris_tracks_sris_at_least_as_well_as_eris() {
    let d = simulate(&SimSpec::cosine(4, 263, 0.5, 5).unwrap()).unwrap();
    let m = compute_moments(&d).unwrap();
    let fit = fit_from_moments(&m, PhdVariant::YBased, 1).unwrap();
    let s: Vec<f64> = sris(&d, &fit).unwrap().into_iter().map(|r| r.unwrap().values[0]).collect();
    let e: Vec<f64> = eris(&d, &fit, &m).unwrap().into_iter().map(|r| r[0]).collect();
    let h: Vec<f64> = hris(&d, &fit, &m).unwrap().into_iter().map(|r| r.unwrap()[0]).collect();
    let gh = median(s.iter().zip(&h).map(|(a, b)| (a - b).abs()).collect());
    let ge = median(s.iter().zip(&e).map(|(a, b)| (a - b).abs()).collect());
    assert!(gh <= ge, "{gh} vs {ge}");
}

#[test]
fn report_on_multi_index_model() {
    let spec = SimSpec::new(
        4,
        150,
        SimModel::CustomIndex {
            b: vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
            link: phdsens::sim::Link::SinePlusSquare,
            sigma: 0.2,
        },
        3,
    )
    .unwrap();
    let d = simulate(&spec).unwrap();
    let rep = influence_report(&d, 2).unwrap();
    assert_eq!(rep.records.len(), 150);
    assert_eq!(rep.correlations.n_used, 150);
    for row in &rep.correlations.rows {
        assert_eq!(row.directions.len(), 2);
    }
}
