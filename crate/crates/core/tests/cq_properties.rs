//! Report-level consistency of the constraint-qualification verdicts across
//! the gallery and random states.

use optctl::cqcheck::{check_licq, Condition, CqOptions, CqReport, CqVerdict};
use optctl::gallery::{get_gallery, GALLERY_NAMES};
use optctl::model::ParametricQp;
use optctl::solver::{evaluate_controller, SolveStatus};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn programs() -> Vec<(&'static str, ParametricQp<f64>)> {
    GALLERY_NAMES
        .iter()
        .filter_map(|&n| get_gallery::<f64>(n).unwrap().program.map(|p| (n, p)))
        .collect()
}

fn analyzed_at(
    program: &ParametricQp<f64>,
    x: &[f64],
    opts: &CqOptions<f64>,
) -> Option<CqReport<f64>> {
    let sol = evaluate_controller(program, x, &opts.solve).ok()?;
    if sol.status != SolveStatus::Optimal {
        return None;
    }
    CqReport::analyze(program, x, &sol, opts).ok()
}

/// Strict feasibility implies a strict-descent direction for affine rows:
/// no report may say otherwise, and the two Slater methods must agree at
/// every tested state.
#[test]
fn slater_implies_mfcq_and_methods_agree() {
    let opts = CqOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, program) in programs() {
        let n = program.state_dim();
        let mut tested = 0;
        while tested < 100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let Some(report) = analyzed_at(&program, &x, &opts) else {
                continue;
            };
            let slater = report.get(Condition::Slater);
            assert_ne!(
                slater.verdict,
                CqVerdict::Inconclusive,
                "{name} at {x:?}: slater methods disagree"
            );
            if slater.verdict == CqVerdict::Holds {
                assert_eq!(
                    report.get(Condition::Mfcq).verdict,
                    CqVerdict::Holds,
                    "{name} at {x:?}"
                );
            }
            tested += 1;
        }
    }
}

/// LICQ implies MFCQ and constant rank at the same point.
#[test]
fn licq_implies_mfcq_and_cr() {
    let opts = CqOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (name, program) in programs() {
        let n = program.state_dim();
        let mut tested = 0;
        while tested < 60 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let Some(report) = analyzed_at(&program, &x, &opts) else {
                continue;
            };
            if report.get(Condition::Licq).verdict == CqVerdict::Holds {
                assert_eq!(
                    report.get(Condition::Mfcq).verdict,
                    CqVerdict::Holds,
                    "{name} at {x:?}"
                );
                assert_eq!(
                    report.get(Condition::Cr).verdict,
                    CqVerdict::Holds,
                    "{name} at {x:?}"
                );
            }
            tested += 1;
        }
    }
}

/// Rescaling constraint rows by positive constants cannot change linear
/// independence of the active gradients.
#[test]
fn licq_invariant_under_positive_row_rescaling() {
    let opts = CqOptions::default();
    let base = get_gallery::<f64>("robinson").unwrap().program.unwrap();
    let gains = [2.5, 0.3, 7.0, 1.0];
    let mut scaled = ParametricQp::<f64>::new("robinson_scaled", 2, 4, 4);
    for i in 0..4 {
        scaled.set_q(i, i, base.q_entry(i, i).clone()).unwrap();
    }
    for r in 0..4 {
        for cidx in 0..4 {
            scaled
                .set_a(r, cidx, base.a_entry(r, cidx).scale(gains[r]))
                .unwrap();
        }
        scaled.set_b(r, base.b_entry(r).scale(gains[r])).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let sol_a = evaluate_controller(&base, &x, &opts.solve).unwrap();
        let sol_b = evaluate_controller(&scaled, &x, &opts.solve).unwrap();
        // same feasible set, same optimizer, same active set
        assert_eq!(sol_a.active_set, sol_b.active_set, "at {x:?}");
        let licq_a = check_licq(&base, &x, &sol_a, opts.rank_tol).unwrap();
        let licq_b = check_licq(&scaled, &x, &sol_b, opts.rank_tol).unwrap();
        assert_eq!(licq_a.verdict, licq_b.verdict, "at {x:?}");
    }
    // and at the degenerate origin specifically
    let sol_a = evaluate_controller(&base, &[0.0, 0.0], &opts.solve).unwrap();
    let sol_b = evaluate_controller(&scaled, &[0.0, 0.0], &opts.solve).unwrap();
    let licq_a = check_licq(&base, &[0.0, 0.0], &sol_a, opts.rank_tol).unwrap();
    let licq_b = check_licq(&scaled, &[0.0, 0.0], &sol_b, opts.rank_tol).unwrap();
    assert_eq!(licq_a.verdict, CqVerdict::Fails);
    assert_eq!(licq_b.verdict, CqVerdict::Fails);
}

/// Scalar programs with strict feasibility keep constant rank: the scalar
/// gradient of an active row cannot vanish without killing strict
/// feasibility, and nonzero scalars have constant rank one.
#[test]
fn scalar_programs_with_slater_pass_cr() {
    let opts = CqOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for name in ["scalar_qp_box", "scalar_qp_halfspace"] {
        let program = get_gallery::<f64>(name).unwrap().program.unwrap();
        let n = program.state_dim();
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let Some(report) = analyzed_at(&program, &x, &opts) else {
                continue;
            };
            if report.get(Condition::Slater).verdict == CqVerdict::Holds {
                assert_eq!(
                    report.get(Condition::Cr).verdict,
                    CqVerdict::Holds,
                    "{name} at {x:?}"
                );
            }
        }
    }
}
