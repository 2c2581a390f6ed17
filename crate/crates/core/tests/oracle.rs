//! Frame-by-frame comparison of the solver against a direct transcription
//! of the substep update written with plain arrays.

use chainform_core::{compliance_rate, load_scenario};

mod common;

use common::{compare, oracle_cases, scenario_path};

#[test]
fn every_case_matches_reference_within_tolerance() {
    for (name, n, driver, path, c, theta) in oracle_cases() {
        let m = compare(n, driver, &path, c, theta);
        assert!(
            m.worst <= 1e-6,
            "{name}: worst {} at frame {} point {}",
            m.worst,
            m.frame,
            m.point
        );
    }
}

#[test]
fn compliance_from_dimensional_analysis() {
    // k in GPa, A in µm², L in µm and ρ in g/cm³ gives c directly in ns⁻².
    let scenario = load_scenario(&scenario_path("baseline")).unwrap();
    let m = &scenario.material;
    let k_gpa = m.youngs_modulus_pa / (2.0 * (1.0 + m.poisson_ratio)) / 1e9;
    let rho = m.density_kg_m3 / 1000.0;
    let expected = k_gpa / (m.cross_section_area_um2 * scenario.solver.rest_length_um * rho);
    let c = compliance_rate(m, scenario.solver.rest_length_um, &scenario.solver)
        .unwrap()
        .value();
    assert!((c - expected).abs() <= 1e-9 * expected, "{c} vs {expected}");
    assert!((c - 20.3718327157626).abs() < 1e-9);
}
