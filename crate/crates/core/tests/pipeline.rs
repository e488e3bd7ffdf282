use caustiq::arc1d::{build_arc_problem, correlation, quantum_action, solve_arc, wkb_form_check};
use caustiq::caustic::turning_points;
use caustiq::eigensolver::{evaluate_trial, find_nearest_state, scan_spectrum, SearchSettings, SpectrumEntry};
use caustiq::oracle;
use caustiq::HamiltonianModel;
use std::sync::OnceLock;

fn state_22() -> &'static SpectrumEntry {
    static CELL: OnceLock<SpectrumEntry> = OnceLock::new();
    CELL.get_or_init(|| {
        find_nearest_state(&HamiltonianModel::barbanis(), 5.20, &SearchSettings::default()).unwrap()
    })
}

#[test]
fn separable_scan_is_exact() {
    let m = HamiltonianModel::uncoupled();
    let scan = scan_spectrum(&m, 5.3, &SearchSettings { tolerance: 1e-9, ..Default::default() }).unwrap();
    // 1.1(m+½) + (n+½) ≤ 5.3 holds for 13 pairs; (3,1) at 5.35 and (4,0) at 5.45 are margin seeds
    assert_eq!(scan.seeds, 15);
    assert!(scan.failures.is_empty(), "{:?}", scan.failures);
    assert_eq!(scan.entries.len(), 13);
    for e in &scan.entries {
        let (mq, nq) = e.quantum_numbers;
        let exact = m.separable_spectrum(mq, nq).unwrap();
        assert!((e.energy - exact).abs() <= 1e-6, "({mq},{nq}): {} vs {exact}", e.energy);
    }
    assert!(scan.entries.windows(2).all(|w| w[0].energy <= w[1].energy));
}

#[test]
fn converged_22_state() {
    let r = state_22();
    assert_eq!(r.quantum_numbers, (2, 2));
    assert!((r.energy - 5.18871).abs() <= 1e-2, "{}", r.energy);
    assert!(r.equations.iter().all(|f| f.abs() <= 1e-6));
    // the root equations make arcs 1 and 2 regular
    assert!(r.defects[0].abs() <= 1e-5 && r.defects[1].abs() <= 1e-5, "{:?}", r.defects);
    for k in 0..4 {
        assert!(r.quantization_residuals[k].abs() <= 1e-4);
        assert!(r.ebk_residuals[k].abs() <= 0.15);
    }
    // mirror symmetry of the vertices under x → −x
    let v = &r.caustic.vertices;
    for (a, b) in [(0, 3), (1, 2)] {
        assert!((v[a].position.x + v[b].position.x).abs() <= 1e-2);
        assert!((v[a].position.y - v[b].position.y).abs() <= 1e-2);
    }
}

#[test]
fn arc_three_of_the_22_state() {
    let r = state_22();
    let m = HamiltonianModel::barbanis();
    let arc = &r.caustic.arcs[2];
    let (t1, t2) = turning_points(&m, arc, r.energy).unwrap();
    let (lo, hi) = arc.domain;
    assert!((t1 - lo).abs() <= 1e-4 && (t2 - hi).abs() <= 1e-4, "{t1} {t2} vs {lo} {hi}");
    let p = build_arc_problem(&m, arc, r.energy, 2000).unwrap();
    let sol = solve_arc(&p).unwrap();
    assert_eq!(sol.nodes, 2);
    assert!((caustiq::caustic::ebk_integral(&m, arc, r.energy).unwrap() / std::f64::consts::PI - 0.5 - 2.0).abs() < 0.1);
    let doubled = solve_arc(&build_arc_problem(&m, arc, r.energy, 4000).unwrap()).unwrap();
    assert_eq!(doubled.nodes, 2);
    let qa = quantum_action(&sol, &p).unwrap();
    assert!(qa.delta_x > 0.0);

    // the present wavefunction against the matrix eigenstate restricted to the arc
    let o = oracle::solve(&m, 30).unwrap();
    let k = o.find_label((2, 2)).unwrap();
    let range = p.allowed_range();
    let profile = oracle::restrict_to_arc(&o, k, arc, &p.grid[range.clone()]).unwrap();
    let c = correlation(&sol.psi[range], &profile).abs();
    // the curved side arcs reach about 0.978
    assert!(c >= 0.97, "correlation {c}");
    let sign_changes = profile.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    assert_eq!(sign_changes, 2);
    assert!(wkb_form_check(&sol, &p) < 0.05);

    let top = &r.caustic.arcs[1];
    let p = build_arc_problem(&m, top, r.energy, 2000).unwrap();
    let sol = solve_arc(&p).unwrap();
    let range = p.allowed_range();
    let profile = oracle::restrict_to_arc(&o, k, top, &p.grid[range.clone()]).unwrap();
    assert!(correlation(&sol.psi[range], &profile).abs() >= 0.999);
}

#[test]
fn energy_perturbation_flips_a_defect() {
    let r = state_22();
    let m = HamiltonianModel::barbanis();
    let st = SearchSettings::default();
    for de in [-1e-2, 1e-2] {
        let t = evaluate_trial(&m, r.energy + de, r.vertex_s, &st);
        let d = t.arc_defects().unwrap();
        assert!((0..4).any(|k| d[k] * r.defects[k] < 0.0 || (r.defects[k].abs() < 1e-9 && d[k].abs() > 1e-6)), "{d:?}");
    }
}
