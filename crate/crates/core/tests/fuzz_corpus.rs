//! Replays the checked-in fuzz corpus through the parser entry points on stable,
//! along with every prefix of each seed, applying the same checks as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use knotstrength::io::{
    ingest_str, parse_draws, parse_knots, parse_specimens, parse_truth, render_draws, render_specimens, ColumnMapping,
    KnotColumns, RunConfig, SpecimenColumns,
};
use knotstrength::CellGrid;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds for {target}");
    files.iter().map(|p| fs::read(p).unwrap()).collect()
}

/// Each seed and all of its prefixes.
fn inputs(target: &str) -> Vec<Vec<u8>> {
    seeds(target)
        .into_iter()
        .flat_map(|s| (0..=s.len()).map(move |n| s[..n].to_vec()))
        .collect()
}

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

#[test]
fn specimens_csv() {
    let grid = CellGrid::standard();
    let cols = SpecimenColumns::default();
    for data in inputs("specimens_csv") {
        let Some(t) = text(&data) else { continue };
        if let Ok(specimens) = parse_specimens(t, "seed", &cols, &grid) {
            let again = String::from_utf8(render_specimens(&specimens).unwrap()).unwrap();
            assert_eq!(parse_specimens(&again, "seed", &cols, &grid).unwrap(), specimens);
        }
    }
}

#[test]
fn knots_csv() {
    for data in inputs("knots_csv") {
        let Some(t) = text(&data) else { continue };
        if let Ok(records) = parse_knots(t, "seed", &KnotColumns::default(), &CellGrid::standard()) {
            for r in records {
                assert!(r.knot.volume >= 0.0 && r.knot.lx.is_finite());
            }
        }
    }
}

#[test]
fn ingest() {
    let grid = CellGrid::standard();
    for data in inputs("ingest") {
        let Some(t) = text(&data) else { continue };
        let (specimens, knots) = t.split_once('\0').unwrap_or((t, ""));
        if let Ok(out) = ingest_str(specimens, knots, &grid, &ColumnMapping::default()) {
            for s in &out {
                s.validate(&grid).unwrap();
            }
        }
    }
}

#[test]
fn draws_csv() {
    for data in inputs("draws_csv") {
        let Some(t) = text(&data) else { continue };
        if let Ok(draws) = parse_draws(t, "seed") {
            let again = String::from_utf8(render_draws(&draws).unwrap()).unwrap();
            assert_eq!(parse_draws(&again, "seed").unwrap(), draws);
        }
    }
}

#[test]
fn truth_csv() {
    for data in inputs("truth_csv") {
        let Some((&cells, rest)) = data.split_first() else {
            continue;
        };
        let Some(t) = text(rest) else { continue };
        let _ = parse_truth(t, "seed", usize::from(cells % 64) + 1);
    }
}

#[test]
fn run_config() {
    for data in inputs("run_config") {
        let Some(t) = text(&data) else { continue };
        if let Ok(cfg) = RunConfig::from_toml_str(t) {
            cfg.grid().unwrap();
            cfg.sim_config().unwrap().validate().unwrap();
            cfg.hmc_config().validate().unwrap();
        }
    }
}

#[test]
fn column_mapping() {
    for data in inputs("column_mapping") {
        let Some(t) = text(&data) else { continue };
        let _ = ColumnMapping::from_toml_str(t);
    }
}

#[test]
fn full_seeds_parse() {
    // The seeds are well-formed examples, not just crash probes.
    let grid = CellGrid::standard();
    for s in seeds("specimens_csv") {
        parse_specimens(text(&s).unwrap(), "seed", &SpecimenColumns::default(), &grid).unwrap();
    }
    for s in seeds("run_config") {
        RunConfig::from_toml_str(text(&s).unwrap()).unwrap();
    }
    for s in seeds("draws_csv") {
        parse_draws(text(&s).unwrap(), "seed").unwrap();
    }
}
