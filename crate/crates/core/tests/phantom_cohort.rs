//! Cohort-level properties of the phantom generator.

use pdnet_core::phantom::{generate_cohort, striatal_mask, PhantomParams, SubjectRecord};
use pdnet_core::{Label, Volume};

fn mask_ratio(params: &PhantomParams, v: &Volume, rec: &SubjectRecord) -> f64 {
    let mask = striatal_mask(params, &rec.pose).unwrap();
    let (mut i, mut ni, mut o, mut no) = (0.0, 0, 0.0, 0);
    for (&x, &m) in v.data().iter().zip(&mask) {
        if m {
            i += x as f64;
            ni += 1;
        } else {
            o += x as f64;
            no += 1;
        }
    }
    (i / ni as f64) / (o / no as f64)
}

/// Accuracy of the best single threshold (either direction).
fn best_threshold_accuracy(values: &[(f64, Label)]) -> f64 {
    let n = values.len() as f64;
    values
        .iter()
        .map(|&(t, _)| {
            let above_pd = values.iter().filter(|&&(v, l)| (v >= t) == (l == Label::Pd)).count() as f64 / n;
            above_pd.max(1.0 - above_pd)
        })
        .fold(0.0, f64::max)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[test]
fn class_means_match_configuration() {
    let params = PhantomParams::default();
    let cohort = generate_cohort(&params, 40, 40, 17).unwrap();
    for (label, (mean, spread)) in [(Label::Control, params.control_ratio), (Label::Pd, params.pd_ratio)] {
        let r: Vec<f64> = cohort.iter().filter(|(_, rec)| rec.label == label).map(|(_, rec)| rec.binding_ratio).collect();
        let m = r.iter().sum::<f64>() / r.len() as f64;
        assert!((m - mean).abs() <= 2.0 * spread, "{label}: {m}");
    }
    for (v, _) in &cohort {
        assert!(v.data().iter().all(|x| x.is_finite() && *x >= 0.0));
    }
}

#[test]
fn ratio_separates_without_nuisance() {
    let params = PhantomParams {
        rotation_deg: 0.0,
        translation: 0.0,
        pose_scale: (1.0, 1.0),
        intensity_scale: (1.0, 1.0),
        ..PhantomParams::default()
    };
    let cohort = generate_cohort(&params, 30, 30, 3).unwrap();
    let (c_lo, _) = range(cohort.iter().filter(|(_, r)| r.label == Label::Control).map(|(_, r)| r.binding_ratio));
    let (_, p_hi) = range(cohort.iter().filter(|(_, r)| r.label == Label::Pd).map(|(_, r)| r.binding_ratio));
    assert!(p_hi < c_lo, "ground-truth ratios overlap for this seed");
    let measured: Vec<(f64, Label)> = cohort.iter().map(|(v, r)| (mask_ratio(&params, v, r), r.label)).collect();
    assert_eq!(best_threshold_accuracy(&measured), 1.0);
}

#[test]
fn raw_intensity_is_not_a_separator_but_ratio_is() {
    let params = PhantomParams::default();
    let cohort = generate_cohort(&params, 60, 60, 9).unwrap();
    let means: Vec<(f64, Label)> = cohort.iter().map(|(v, r)| (v.mean(), r.label)).collect();
    let c = range(means.iter().filter(|m| m.1 == Label::Control).map(|m| m.0));
    let p = range(means.iter().filter(|m| m.1 == Label::Pd).map(|m| m.0));
    let overlap = (c.1.min(p.1) - c.0.max(p.0)).max(0.0) / (c.1 - c.0).min(p.1 - p.0);
    assert!(overlap >= 0.5, "overlap {overlap}");
    assert!(best_threshold_accuracy(&means) < 0.9);

    let ratios: Vec<(f64, Label)> = cohort.iter().map(|(v, r)| (mask_ratio(&params, v, r), r.label)).collect();
    assert!(best_threshold_accuracy(&ratios) >= 0.98);
}
