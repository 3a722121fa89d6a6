//! File round trips for spaces, fields, series and reports.

use gammalab::fieldio::{load_field, load_series, save_field, save_series};
use gammalab::space::{build_sphere_patch, build_weighted_line, load_space, save_space};
use gammalab::{heat_kernel, Error, InequalityReport, ReportPoint};

#[test]
fn space_and_fields_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = build_sphere_patch(2.0, (0.7, 2.4), 6, 9).unwrap();
    save_space(&s, dir.path().join("space.json")).unwrap();
    let back = load_space(dir.path().join("space.json")).unwrap();
    assert_eq!(back.id(), s.id());
    assert_eq!(back.mu(), s.mu());

    let f = s.sample(|p| p[0].sin() * p[1].cos() / 3.0).unwrap();
    save_field(&f, dir.path().join("f.json")).unwrap();
    assert_eq!(load_field(&back, dir.path().join("f.json")).unwrap(), f);

    let tsf = heat_kernel(&s, 4, 0.3, 0.1).unwrap();
    save_series(&tsf, dir.path().join("u.json")).unwrap();
    assert_eq!(load_series(&back, dir.path().join("u.json")).unwrap(), tsf);
}

#[test]
fn fields_refuse_a_foreign_space() {
    let dir = tempfile::tempdir().unwrap();
    let a = build_weighted_line(10, 0.1, &[0.0; 10]).unwrap();
    let b = build_weighted_line(10, 0.1, &[0.5; 10]).unwrap();
    save_field(&a.constant_field(1.0), dir.path().join("f.json")).unwrap();
    assert!(matches!(load_field(&b, dir.path().join("f.json")), Err(Error::MisalignedField { .. })));
}

#[test]
fn reports_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let points = vec![
        ReportPoint::new(0, None, 0.5, 1.0),
        ReportPoint::new(3, Some(2), 1.0 / 3.0, 0.1),
        ReportPoint::new(7, Some(0), -2.0, f64::INFINITY),
    ];
    let r = InequalityReport::new("demo", points, 1e-12).with_param("alpha", 1.5);
    let path = dir.path().join("demo.csv");
    r.write_csv(&path).unwrap();
    let back = InequalityReport::from_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.to_csv(), r.to_csv());
    assert_eq!(back.passed(), r.passed());
}
