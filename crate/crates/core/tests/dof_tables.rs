//! Entity-wise DOF counts against the published comparison tables.

use ddr_core::mesh::shapes;
use ddr_core::verify::{self, golden_tables, Config, DofTable, Sequence};

fn table(shape: &str, k: usize) -> DofTable {
    let cell = shapes::by_name(shape).unwrap().cell(0).unwrap();
    let seq = Sequence::build(&cell, k, &Config::default().options).unwrap();
    verify::dof_table(&seq)
}

fn total(t: &DofTable, space: &str) -> usize {
    t.rows.iter().find(|r| r.space == space).unwrap().total
}

// Total columns, k = 0..3, as printed.
const TRIA: [(&str, [usize; 4]); 3] = [("X_grad", [3, 7, 12, 18]), ("X_rot", [3, 9, 17, 27]), ("P_k", [1, 3, 6, 10])];
const RECT: [(&str, [usize; 4]); 3] = [("X_grad", [4, 9, 15, 22]), ("X_rot", [4, 11, 20, 31]), ("P_k", [1, 3, 6, 10])];
const TETRA: [(&str, [usize; 4]); 4] =
    [("X_grad", [4, 15, 32, 56]), ("X_curl", [6, 28, 65, 120]), ("X_div", [4, 18, 44, 85]), ("P_k", [1, 4, 10, 20])];
const HEXA: [(&str, [usize; 4]); 4] =
    [("X_grad", [8, 27, 54, 90]), ("X_curl", [12, 46, 99, 174]), ("X_div", [6, 24, 56, 105]), ("P_k", [1, 4, 10, 20])];

#[test]
fn printed_totals_are_reproduced() {
    for (shape, rows) in [("triangle", &TRIA[..]), ("rectangle", &RECT[..]), ("tetra", &TETRA[..]), ("cube", &HEXA[..])] {
        for k in 0..4 {
            let t = table(shape, k);
            for (space, totals) in rows {
                assert_eq!(total(&t, space), totals[k], "{shape} {space} k={k}");
            }
        }
    }
}

#[test]
fn named_table_entries() {
    let t = table("triangle", 3);
    let r = &t.rows[1];
    assert_eq!((r.space.as_str(), r.per_entity[1], r.per_entity[2], r.total), ("X_rot", Some(4), Some(15), 27));
    let t = table("tetra", 2);
    assert_eq!(t.rows[0].per_entity, [Some(1), Some(2), Some(3), Some(4)]);
    let t = table("tetra", 1);
    assert_eq!((t.rows[1].per_entity[3], t.rows[1].total), (Some(4), 28));
    assert_eq!((t.rows[2].per_entity[3], t.rows[2].total), (Some(6), 18));
    let t = table("cube", 0);
    assert_eq!((t.rows[2].per_entity[2], t.rows[2].per_entity[3], t.rows[2].total), (Some(1), Some(0), 6));
}

#[test]
fn every_transcribed_entry_matches() {
    assert_eq!(golden_tables().len(), 56);
    let mut cache = std::collections::HashMap::new();
    for g in golden_tables() {
        let shape = if g.shape == "hexa" { "cube" } else { g.shape.as_str() };
        let t = cache.entry((shape, g.k)).or_insert_with(|| table(shape, g.k));
        let row = t.rows.iter().find(|r| r.space == g.space).unwrap_or_else(|| panic!("{} {}", g.shape, g.space));
        for (i, (_, key)) in verify::ENTITY_CLASSES.iter().enumerate() {
            if let Some(&want) = g.counts.get(*key) {
                assert_eq!(row.per_entity[i], Some(want), "{} {} k={} {key}", g.shape, g.space, g.k);
            }
        }
        assert_eq!(Some(&row.total), g.counts.get("total"), "{} {} k={}", g.shape, g.space, g.k);
    }
}

#[test]
fn reference_columns_in_markdown() {
    let md = table("tetra", 2).to_markdown();
    assert!(md.contains("| X_grad | 2 | 1 (1) | 2 (2) | 3 (1) | 4 (0) | 32 (20) |"), "{md}");
    let md = table("rectangle", 3).to_markdown();
    assert!(md.contains("31 (40)"), "{md}");
}
