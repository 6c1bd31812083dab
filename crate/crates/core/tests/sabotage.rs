use uict::boundary_chain::strip_kernel_exact;
use uict::verify::{run_criterion, Level, VerifyOptions};

#[test]
fn shifted_kernel_is_caught() {
    let mut opts = VerifyOptions::new(Level::Quick, 3);
    let honest = run_criterion(3, &opts);
    assert!(honest.passed, "{honest}");

    opts.strip_kernel = |m, k| strip_kernel_exact(m, k + 1);
    let broken = run_criterion(3, &opts);
    assert!(!broken.passed);
    assert!(broken.statistic < 1e-12, "{broken}");
}
