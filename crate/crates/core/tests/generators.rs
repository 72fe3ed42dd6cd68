mod common;

use accrel_core::format::{parse_problem, print_problem};
use accrel_core::generators::{gen_random_instance, gen_tiling_corridor, gen_tiling_grid, RandomLimits, TilingSpec};
use accrel_core::oracle::{oracle_corridor_tileable, oracle_grid_tileable};
use common::{corridor_spec, corridor_specs, grid_spec, grid_specs, run_corridor, run_grid};

#[test]
fn malformed_specs_are_rejected() {
    let two: Vec<_> = TilingSpec::all_pairs(2).into_iter().collect();
    assert!(gen_tiling_grid(&grid_spec(0, &[], &[], &[0, 0])).is_err());
    assert!(gen_tiling_grid(&grid_spec(2, &[(0, 2)], &two, &[0, 1])).is_err());
    assert!(gen_tiling_grid(&grid_spec(2, &two, &two, &[0, 3])).is_err());
    assert!(gen_tiling_grid(&grid_spec(2, &two, &two, &[0])).is_err());
    assert!(gen_tiling_grid(&TilingSpec { n: 0, ..grid_spec(2, &two, &two, &[0, 1]) }).is_err());
    assert!(gen_tiling_corridor(&corridor_spec(2, &two, &two, &[0, 0], &[1]), false).is_err());
    assert!(gen_tiling_corridor(&TilingSpec { n: 1, ..corridor_spec(2, &two, &two, &[0], &[1]) }, true).is_err());
    assert!(gen_random_instance(0, &RandomLimits { relations: 0, ..RandomLimits::default() }).is_err());
}

#[test]
fn generated_instances_are_valid_and_round_trip() {
    let mut all = Vec::new();
    for spec in grid_specs() {
        all.push(gen_tiling_grid(&spec).unwrap());
    }
    for spec in corridor_specs() {
        all.push(gen_tiling_corridor(&spec, false).unwrap());
        let cq = gen_tiling_corridor(&spec, true).unwrap();
        assert!(cq.queries.iter().all(|q| q.body.is_cq()));
        all.push(cq);
    }
    for inst in all {
        inst.validate().unwrap();
        assert_eq!(parse_problem(&print_problem(&inst), false).unwrap(), inst);
    }
}

#[test]
fn the_sample_specs_cover_both_answers() {
    let grids: Vec<bool> = grid_specs().iter().map(oracle_grid_tileable).collect();
    assert!(grids.iter().filter(|&&t| t).count() >= 3);
    assert!(grids.iter().filter(|&&t| !t).count() >= 3);
    let corridors: Vec<bool> = corridor_specs().iter().map(oracle_corridor_tileable).collect();
    assert!(corridors.contains(&true) && corridors.contains(&false));
}

#[test]
fn grid_tileability_matches_non_containment() {
    let specs = grid_specs();
    let yes = specs.iter().find(|s| oracle_grid_tileable(s)).unwrap();
    let no = specs.iter().find(|s| !oracle_grid_tileable(s)).unwrap();
    for spec in [yes, no] {
        let run = run_grid(spec);
        assert!(run.sound(), "{run}");
    }
}

#[test]
fn corridor_tileability_matches_non_containment_in_both_forms() {
    let spec = &corridor_specs()[0];
    for as_cq in [false, true] {
        let run = run_corridor(spec, as_cq);
        assert!(run.sound(), "{run}");
    }
}
