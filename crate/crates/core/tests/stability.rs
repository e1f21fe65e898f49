use std::f64::consts::PI;

use graphwave::builders;
use graphwave::discrete::GridOptions;
use graphwave::solver::*;
use graphwave::stability::*;
use graphwave::VertexCondition;

fn star_wave(n: usize, alpha: f64, j: usize, omega: f64, h: f64) -> StandingWave {
    let g = builders::star(n, VertexCondition::Delta(alpha));
    let seed = star_state(&g, j, omega, 1.0, GridOptions::with_h(h)).unwrap();
    refine(&seed, NewtonOptions::default()).unwrap()
}

#[test]
fn star_reference_table() {
    let r = star_reference(3, -1.0, 0, -4.0).unwrap();
    assert_eq!((r.n_lplus, r.z_lminus, r.verdict), (1, 1, Verdict::Stable));
    let r = star_reference(5, 1.0, 0, -4.0).unwrap();
    assert_eq!((r.n_lplus, r.verdict), (5, Verdict::Unstable));
    let r = star_reference(3, -1.0, 1, -4.0).unwrap();
    assert_eq!((r.n_lplus, r.verdict), (2, Verdict::Unstable));
    assert!(star_reference(3, -1.0, 2, -4.0).is_err());
    assert!(star_reference(3, -3.0, 1, -4.0).is_err());
    assert!(star_reference(3, 0.0, 0, -4.0).is_err());
}

#[test]
fn star_counts_match_reference() {
    let omega = -4.0;
    for h in [0.04, 0.02] {
        for n in [3usize, 4, 5] {
            for j in [0usize, 1] {
                for alpha in [-1.0, 1.0] {
                    let r = star_reference(n, alpha, j, omega).unwrap();
                    let w = star_wave(n, alpha, j, omega, h);
                    let rep = stability_report(&w, SlopeSource::Local).unwrap();
                    let got = (rep.n_lplus, rep.z_lplus, rep.n_lminus, rep.z_lminus);
                    assert_eq!(got, (r.n_lplus, r.z_lplus, r.n_lminus, r.z_lminus), "N={n} j={j} α={alpha} h={h}");
                    assert_eq!(rep.verdict, r.verdict, "N={n} j={j} α={alpha}: {:?}", rep.notes);
                    assert!(rep.lplus_form < 0.0);
                }
            }
        }
    }
}

#[test]
fn tadpole_single_pulse_is_stable() {
    let seed = assemble_tadpole_wave(2.0, 1.0, PI, GridOptions::with_h(0.02)).unwrap();
    let w = refine(&seed, NewtonOptions::default()).unwrap();
    let rep = stability_report(&w, SlopeSource::Local).unwrap();
    assert_eq!(rep.n_lplus, 1);
    assert_eq!(rep.z_lminus, 1);
    assert_eq!(rep.slope_sign, SlopeSign::Negative);
    assert_eq!(rep.verdict, Verdict::Stable, "{:?} {:?} {:?}", rep.notes, rep.lplus_head, rep.lminus_head);
    // same verdict reading the slope from a branch through the wave
    let br = continue_branch(&w, ContinuationOptions { omega_min: -5.0, omega_max: -3.0, direction: -1.0, ..Default::default() })
        .unwrap();
    let rep2 = stability_report(&w, SlopeSource::Branch(&br)).unwrap();
    assert_eq!(rep2.verdict, Verdict::Stable, "{:?} {:?} {:?}", rep2.notes, rep2.slope, br.omegas());
    assert!(rep.to_json().contains("\"verdict\": \"stable\""));
}

#[test]
fn critical_soliton_is_inconclusive() {
    // p = 2 has zero slope; the line soliton also has a translation mode
    let g = builders::line(VertexCondition::NeumannKirchhoff);
    let disc = wave_discretization(&g, -1.0, GridOptions::with_h(0.02)).unwrap();
    let w = newton_solve(&disc, 2.0, -1.0, &soliton_seed(&disc, -1.0, 2.0).unwrap(), NewtonOptions::default()).unwrap();
    let rep = stability_report(&w, SlopeSource::Local).unwrap();
    assert_eq!(rep.slope_sign, SlopeSign::Zero);
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert!(!rep.notes.is_empty());
}

#[test]
fn positive_slope_with_one_negative_direction_is_unstable() {
    let w = star_wave(3, -1.0, 0, -4.0, 0.04);
    let fake = SlopeEstimate { value: 1.0, error: 0.0, one_sided: false };
    let rep = stability_report(&w, SlopeSource::Given(fake)).unwrap();
    assert_eq!(rep.verdict, Verdict::Unstable);
}

#[test]
fn report_rejects_bad_waves() {
    let w = star_wave(3, -1.0, 0, -4.0, 0.04);
    let mut neg = w.clone();
    neg.u.iter_mut().for_each(|x| *x = -*x);
    assert!(stability_report(&neg, SlopeSource::Local).is_err());
    let mut raw = w.clone();
    raw.u[10] += 0.1;
    raw.residual = 1.0;
    assert!(stability_report(&raw, SlopeSource::Local).is_err());
}
