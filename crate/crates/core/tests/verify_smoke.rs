use std::sync::Arc;

#[test]
fn smoke_verify() {
    let model = Arc::new(motreg_core::HyperellipticModel::from_i64(&[0, -1, 0, 1]).unwrap());
    let t0 = std::time::Instant::now();
    let rep = motreg_core::verify::basic_properties_suite(&model, 25, 1e-9, 42).unwrap();
    for c in &rep.clauses {
        println!("{}: n={} max={:.3e} pass={}", c.clause, c.instances, c.max_residual, c.pass);
    }
    println!("elapsed {} ms", t0.elapsed().as_millis());
    assert!(rep.all_pass());
}
