//! Acceptance suite: runs every verification criterion at its pinned
//! tolerance and prints one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines on
//! success as well; on failure the report is in the panic message.

use hydrofel_cli::verify::{run_battery, References};

/// Independently derive the linear-stage growth rate: Newton iteration on
/// f(z) = z^3 - i over the complex plane, started near the growing root.
fn unstable_root_of_dispersion_cubic() -> (f64, f64) {
    let (mut re, mut im) = (0.9f64, 0.4f64);
    for _ in 0..60 {
        // f = z^3 - i, f' = 3 z^2
        let (z2_re, z2_im) = (re * re - im * im, 2.0 * re * im);
        let f_re = z2_re * re - z2_im * im;
        let f_im = z2_re * im + z2_im * re - 1.0;
        let (d_re, d_im) = (3.0 * z2_re, 3.0 * z2_im);
        let denom = d_re * d_re + d_im * d_im;
        re -= (f_re * d_re + f_im * d_im) / denom;
        im -= (f_im * d_re - f_re * d_im) / denom;
    }
    (re, im)
}

#[test]
fn growth_reference_is_the_root_of_the_dispersion_cubic() {
    let (re, im) = unstable_root_of_dispersion_cubic();
    // the growing root sits at e^{i pi/6}: amplitude rate sqrt(3)/2
    assert!((re - 3.0f64.sqrt() / 2.0).abs() < 1e-12);
    assert!((im - 0.5).abs() < 1e-12);
    assert!((References::nominal().growth_rate - re).abs() < 1e-12);
}

#[test]
fn acceptance_criteria() {
    let report = run_battery(false, &References::nominal());
    // one pass/fail line per criterion
    print!("{}", report.render());
    assert!(
        report.all_passed(),
        "acceptance criteria failed:\n{}",
        report.render()
    );
    assert_eq!(report.results.len(), 13);
    assert!(report.results.iter().all(|r| !r.skipped));
}

/// The falsifiability hook flips exactly the targeted criterion for every
/// cheap target; the in-battery criterion 13 already exercises the default
/// target as part of `acceptance_criteria`.
#[test]
fn perturbed_references_are_detected() {
    for target in [1u8, 2, 3, 4, 5, 11] {
        let report = run_battery(true, &References::perturbed(target));
        let failed: Vec<u8> = report
            .results
            .iter()
            .filter(|r| !r.skipped && !r.passed && r.id != 13)
            .map(|r| r.id)
            .collect();
        assert_eq!(failed, vec![target], "perturbation target {target}");
    }
}
