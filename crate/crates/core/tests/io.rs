use shapeflow_core::error::Error;
use shapeflow_core::geometry::{point, DiscreteMeasure, GridDensity, GridSpec};
use shapeflow_core::io::{read_grid, read_measure, read_plan, read_values, write_grid, write_measure, write_plan};
use shapeflow_core::transport::solve_exact;

#[test]
fn grid_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(vec![-1.0, 0.5], 0.1, vec![7, 5]).unwrap();
    let rho = GridDensity::from_fn(spec, |x| (x[0] * 3.1).sin().abs() / 3.0 + x[1] * 1e-17).unwrap();
    let path = dir.path().join("shape.json");
    write_grid(&path, &rho).unwrap();
    assert!(dir.path().join("shape.f64").exists());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"data_file\": \"shape.f64\""));
    assert_eq!(read_grid(&path).unwrap(), rho);
}

#[test]
fn truncated_grid_data_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let rho = GridDensity::zeros(GridSpec::cube(2, 0.0, 1.0, 4).unwrap());
    let path = dir.path().join("z.json");
    write_grid(&path, &rho).unwrap();
    std::fs::write(dir.path().join("z.f64"), [0u8; 24]).unwrap();
    assert!(matches!(read_grid(&path), Err(Error::ResolutionMismatch(_))));
}

#[test]
fn measure_round_trip_and_header_rules() {
    let dir = tempfile::tempdir().unwrap();
    let mu = DiscreteMeasure::new(vec![point(&[0.1, -2.0]), point(&[1.0 / 3.0, 5e-300])], vec![0.25, 0.75]).unwrap();
    let path = dir.path().join("m.csv");
    write_measure(&path, &mu).unwrap();
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("x1,x2,weight\n"));
    assert_eq!(read_measure(&path).unwrap(), mu);

    let bare = dir.path().join("bare.csv");
    std::fs::write(&bare, "0.1,0.2,1.0\n").unwrap();
    assert!(matches!(read_measure(&bare), Err(Error::InvalidInput(_))));
    let renamed = dir.path().join("renamed.csv");
    std::fs::write(&renamed, "a,b,weight\n0.1,0.2,1.0\n").unwrap();
    assert!(read_measure(&renamed).is_err());
    let values = dir.path().join("g.csv");
    std::fs::write(&values, "g1\n0.5\n-1.5\n").unwrap();
    assert_eq!(read_values(&values).unwrap(), vec![vec![0.5], vec![-1.5]]);
}

#[test]
fn plan_file_keeps_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let mu = DiscreteMeasure::uniform(vec![point(&[0.0, 0.0]), point(&[1.0, 0.3])], 1.0).unwrap();
    let nu = DiscreteMeasure::uniform(vec![point(&[0.7, 0.1]), point(&[0.2, 1.0 / 7.0])], 1.0).unwrap();
    let plan = solve_exact(&mu, &nu).unwrap();
    let path = dir.path().join("plan.json");
    write_plan(&path, &plan).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let cost = text.lines().find(|l| l.contains("total_cost")).unwrap();
    let digits: String = cost.split(':').nth(1).unwrap().split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
    assert_eq!(digits.len(), 17);
    let back = read_plan(&path).unwrap();
    assert_eq!(back.total_cost, plan.quadratic_cost());
    assert_eq!(back.couplings.len(), plan.couplings.len());
    for (c, (s, t, m)) in plan.couplings.iter().zip(&back.couplings) {
        assert_eq!((c.source, c.target, c.mass), (*s, *t, *m));
    }
}
