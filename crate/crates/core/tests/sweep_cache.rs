use sta_cool::analysis::{linspace_step, runtime_sweep};
use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::optimize::{CostKind, CostSpec, NelderMeadOptions};
use sta_cool::store::ResultStore;
use sta_cool::units::PhysConstants;

#[test]
fn cached_sweep_replays_identically() {
    let consts = PhysConstants::codata();
    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts).unwrap();
    let spec = CostSpec::new(CostKind::ExactNonRobust);
    let nm = NelderMeadOptions::default();
    let grid = linspace_step(36.0, 38.0, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let store = ResultStore::open(dir.path()).unwrap();

    let fresh = runtime_sweep(&design, &spec, &grid, &nm, None).unwrap();
    let first = runtime_sweep(&design, &spec, &grid, &nm, Some(&store)).unwrap();
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert!(entries > 0);
    let replay = runtime_sweep(&design, &spec, &grid, &nm, Some(&store)).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), entries);

    assert_eq!(fresh.points.len(), grid.len());
    for ((a, b), c) in fresh.points.iter().zip(&first.points).zip(&replay.points) {
        assert_eq!(a.params, b.params);
        assert_eq!(b.params, c.params);
        assert_eq!(b.e_ex, c.e_ex);
        assert!(a.flag.is_none());
    }
}

#[test]
fn grid_outside_runtime_window_is_rejected() {
    let consts = PhysConstants::codata();
    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts).unwrap();
    let spec = CostSpec::new(CostKind::ExactNonRobust);
    let err = runtime_sweep(
        &design,
        &spec,
        &[1.0, 2.0],
        &NelderMeadOptions::default(),
        None,
    );
    assert_eq!(err.unwrap_err().exit_code(), 2);
}
