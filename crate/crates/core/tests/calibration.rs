mod common;

use common::{fixture_lines, fixture_lm, lm_config, toy_vocab};
use lexpen::{calibrate_alpha, diversity_at, CalibrationSpec, CopyModel, DecodeConfig, Error};

const COPY_INPUTS: [&str; 3] = ["she went home", "the cat sat on the mat .", "his letter"];

#[test]
fn copy_model_at_zero_alpha_is_identity() {
    let vocab = toy_vocab();
    let model = CopyModel::new(vocab.clone(), 2.0).unwrap();
    let bleu = diversity_at(0.0, &model, &COPY_INPUTS, &vocab, &DecodeConfig::default()).unwrap();
    assert_eq!(bleu, 100.0);
}

#[test]
fn copy_model_above_threshold_diverges() {
    let vocab = toy_vocab();
    let model = CopyModel::new(vocab.clone(), 2.0).unwrap();
    let bleu = diversity_at(2.5, &model, &COPY_INPUTS, &vocab, &DecodeConfig::default()).unwrap();
    assert!(bleu < 100.0, "{bleu}");
}

#[test]
fn empty_sentence_list_is_an_error() {
    let vocab = toy_vocab();
    let model = CopyModel::new(vocab.clone(), 2.0).unwrap();
    let none: [&str; 0] = [];
    assert!(diversity_at(0.0, &model, &none, &vocab, &DecodeConfig::default()).is_err());
}

#[test]
fn full_identity_target_stops_at_lower_bound() {
    let vocab = toy_vocab();
    let model = CopyModel::new(vocab.clone(), 2.0).unwrap();
    let spec = CalibrationSpec::new(100.0, DecodeConfig::default());
    let cal = calibrate_alpha(&spec, &model, &COPY_INPUTS, &vocab).unwrap();
    assert_eq!(cal.alpha, 0.0);
    assert_eq!(cal.achieved_bleu, 100.0);
    assert!(cal.converged);
    assert_eq!(cal.probes.len(), 2);
}

#[test]
fn unreachable_target_reports_both_endpoints() {
    let vocab = toy_vocab();
    let model = CopyModel::new(vocab.clone(), 2.0).unwrap();
    let spec = CalibrationSpec::new(150.0, DecodeConfig::default());
    match calibrate_alpha(&spec, &model, &COPY_INPUTS, &vocab) {
        Err(Error::NotBracketed {
            bleu_lo, bleu_hi, ..
        }) => {
            assert_eq!(bleu_lo, 100.0);
            assert!(bleu_hi <= 100.0);
        }
        other => panic!("expected a bracket error, got {other:?}"),
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let vocab = toy_vocab();
    let model = CopyModel::new(vocab.clone(), 2.0).unwrap();
    let base = CalibrationSpec::new(50.0, DecodeConfig::default());
    let bad = [
        CalibrationSpec {
            tolerance: 0.0,
            ..base.clone()
        },
        CalibrationSpec {
            alpha_lo: 0.1,
            alpha_hi: 0.1,
            ..base.clone()
        },
        CalibrationSpec {
            alpha_lo: -0.1,
            ..base.clone()
        },
        CalibrationSpec {
            max_iters: 1,
            ..base.clone()
        },
        CalibrationSpec {
            target_bleu: f64::NAN,
            ..base.clone()
        },
    ];
    for spec in bad {
        assert!(
            matches!(
                calibrate_alpha(&spec, &model, &COPY_INPUTS, &vocab),
                Err(Error::InvalidCalibration(_))
            ),
            "{spec:?}"
        );
    }
}

#[test]
fn lm_midpoint_target_converges() {
    let vocab = toy_vocab();
    let model = fixture_lm(vocab.clone());
    let inputs = fixture_lines("lm_inputs.txt");
    let config = lm_config();
    let spec = CalibrationSpec::new(0.0, config.clone());
    let lo = diversity_at(spec.alpha_lo, &model, &inputs, &vocab, &config).unwrap();
    let hi = diversity_at(spec.alpha_hi, &model, &inputs, &vocab, &config).unwrap();
    let spec = CalibrationSpec {
        target_bleu: 0.5 * (lo + hi),
        ..spec
    };
    let cal = calibrate_alpha(&spec, &model, &inputs, &vocab).unwrap();
    assert!(cal.converged, "{cal:?}");
    assert!((cal.achieved_bleu - spec.target_bleu).abs() <= 1.0);
    assert!(cal.probes.len() <= 20);
    assert!(cal.alpha >= spec.alpha_lo && cal.alpha <= spec.alpha_hi);
    assert!(cal.probes.contains(&(cal.alpha, cal.achieved_bleu)));
}
