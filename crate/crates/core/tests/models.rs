mod common;

use multifit::compute::{eval_loss, relative_error, value_and_grad, Tape, DEFAULT_EPS};
use multifit::fit::{
    fit_forward, multifit_forward, ba_mean_forward, Branch, BranchAssignment, FitModel, ModelKind, ModelSpec,
    Network, SupportMap,
};
use multifit::Error;

use common::{tiny_dataset, tiny_model};

/// Central differences carry a roundoff floor of about ulp(L) / eps, which
/// dominates for coordinates whose true gradient is far below 1e-7. Each
/// coordinate must match within 1e-4 relative error or within that floor.
#[test]
fn every_kind_matches_finite_differences() {
    let eps = DEFAULT_EPS;
    for kind in ModelKind::ALL {
        for seed in 0..3 {
            let (model, ds) = tiny_model(kind, seed);
            let r = &ds.records[seed as usize];
            let loss = |tape: &mut Tape<'_>| model.loss(tape, &r.fast, &r.slow, r.label);
            let (l, analytic) = value_and_grad(&model.params, &loss).unwrap();
            let floor = 4.0 * f64::EPSILON * l.abs() / eps;
            let mut work = model.params.clone();
            for (k, p) in model.params.iter().enumerate() {
                let id = model.params.id(&p.name).unwrap();
                for i in 0..p.value.len() {
                    let w = p.value.data()[i];
                    work.get_mut(id).value.data_mut()[i] = w + eps;
                    let up = eval_loss(&work, &loss).unwrap();
                    work.get_mut(id).value.data_mut()[i] = w - eps;
                    let down = eval_loss(&work, &loss).unwrap();
                    work.get_mut(id).value.data_mut()[i] = w;
                    let fd = (up - down) / (2.0 * eps);
                    let a = analytic.get(id)[i];
                    assert!(
                        relative_error(a, fd) < 1e-4 || (a - fd).abs() <= floor,
                        "{kind} seed {seed} param {k} ({}) [{i}]: analytic {a:e}, numeric {fd:e}",
                        p.name
                    );
                }
            }
        }
    }
}

#[test]
fn probabilities_sum_to_one() {
    for kind in ModelKind::ALL {
        let (model, ds) = tiny_model(kind, 1);
        for r in &ds.records {
            let p = model.predict_proba(&r.fast, &r.slow).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kind}");
            assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}

#[test]
fn kind_specific_forward_functions() {
    let (fit, ds) = tiny_model(ModelKind::Fit, 0);
    let r = &ds.records[0];
    let mut tape = Tape::new(&fit.params);
    let p = fit_forward(&mut tape, &r.fast, &fit).unwrap();
    assert_eq!(tape.value(p), fit.predict_proba(&r.fast, &r.slow).unwrap().as_slice());
    assert!(matches!(multifit_forward(&mut tape, &r.fast, &r.slow, &fit), Err(Error::Config(_))));
    assert!(matches!(ba_mean_forward(&mut tape, &r.fast, &fit), Err(Error::Config(_))));

    let (multi, _) = tiny_model(ModelKind::MultiFit, 0);
    let mut tape = Tape::new(&multi.params);
    let p = multifit_forward(&mut tape, &r.fast, &r.slow, &multi).unwrap();
    assert_eq!(tape.len_of(p), 2);
}

#[test]
fn fit_v_with_empty_supports_is_fit_bitwise() {
    let (fit, ds) = tiny_model(ModelKind::Fit, 5);
    let spec = ModelSpec { kind: ModelKind::FitV, ..fit.spec.clone() };
    let fitv = FitModel::new(spec).unwrap();
    assert_eq!(fit.params.snapshot(), fitv.params.snapshot());
    for r in &ds.records {
        let a = fit.predict_proba(&r.fast, &r.slow).unwrap();
        let b = fitv.predict_proba(&r.fast, &r.slow).unwrap();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn multi_resolution_shapes() {
    let (model, ds) = tiny_model(ModelKind::MultiFitV, 2);
    let r = &ds.records[0];
    assert!(r.slow.steps() < r.fast.steps());
    let Network::Multi { fast, slow, fusion, .. } = &model.network else { panic!("expected two branches") };
    let w = model.params.get(fusion.0).value.shape().to_vec();
    assert_eq!(w[1], fast.context_dim() + slow.context_dim());
    // supports never cross branches
    let a = model.spec.assignment.as_ref().unwrap();
    for (s, list) in model.spec.supports.0.iter().enumerate() {
        assert!(list.iter().all(|&j| a.branches[j] == a.branches[s]));
    }
}

#[test]
fn single_branch_assignment_is_rejected() {
    let (fit, _) = tiny_model(ModelKind::Fit, 0);
    let all_fast = BranchAssignment {
        branches: vec![Branch::Fast; 4],
        fast_step: 1.0,
        slow_step: 2.0,
        scores: vec![0.0; 4],
    };
    let spec = ModelSpec { kind: ModelKind::MultiFit, assignment: Some(all_fast), ..fit.spec.clone() };
    let err = FitModel::new(spec).unwrap_err();
    assert!(err.to_string().contains("single-branch"), "{err}");
    let spec = ModelSpec { kind: ModelKind::MultiFit, assignment: None, ..fit.spec.clone() };
    assert!(FitModel::new(spec).is_err());
}

#[test]
fn supports_rejected_for_kinds_without_them() {
    let (fit, _) = tiny_model(ModelKind::Fit, 0);
    let spec = ModelSpec { supports: SupportMap(vec![vec![1], vec![0], vec![], vec![]]), ..fit.spec.clone() };
    assert!(matches!(FitModel::new(spec), Err(Error::Config(_))));
}

#[test]
fn saved_model_round_trips() {
    let (model, ds) = tiny_model(ModelKind::MultiFitV, 4);
    let json = serde_json::to_string(&model.to_saved()).unwrap();
    let back = FitModel::from_saved(&serde_json::from_str(&json).unwrap()).unwrap();
    let r = &ds.records[1];
    assert_eq!(model.predict_proba(&r.fast, &r.slow).unwrap(), back.predict_proba(&r.fast, &r.slow).unwrap());
}

#[test]
fn wrong_signal_count_is_config_error() {
    let (model, _) = tiny_model(ModelKind::Fit, 0);
    let mut cfg = common::tiny_config();
    cfg.synthetic.signals = 3;
    cfg.synthetic.periods = vec![1.0];
    let other = tiny_dataset(&cfg);
    let r = &other.records[0];
    assert!(matches!(model.predict_proba(&r.fast, &r.slow), Err(Error::Config(_))));
}
