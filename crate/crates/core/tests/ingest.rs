mod common;

use common::*;
use num_rational::Ratio;
use pdd_core::ingest::{
    merge_sites, parse_cif, parse_cif_detailed, parse_structure_json, parse_symmetry_op,
    read_structures, structure_to_json, CifError, Rational, SITE_MERGE_TOL,
};
use pdd_core::lattice::{Lattice, Structure};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const HEADER: &str = "\
data_example
_cell_length_a 10
_cell_length_b 10
_cell_length_c 10
_cell_angle_alpha 90
_cell_angle_beta 90
_cell_angle_gamma 90
";

const SITES: &str = "\
loop_
_atom_site_label
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
";

#[test]
fn minimal_p1_block_has_one_site() {
    let sets = parse_cif(&format!("{HEADER}{SITES}C1 0 0 0\n")).unwrap();
    assert_eq!(sets.len(), 1);
    assert_eq!(sets[0].len(), 1);
    assert_eq!(sets[0].lattice().volume(), 1000.0);
}

#[test]
fn inversion_adds_the_image_site() {
    let ops = "loop_\n_symmetry_equiv_pos_as_xyz\nx,y,z\n-x,-y,-z\n";
    let sets = parse_cif(&format!("{HEADER}{ops}{SITES}O1 0.25 0.25 0.25\n")).unwrap();
    // by hand: -(1/4) wraps to 3/4 in every coordinate
    assert_eq!(sets[0].motif().points(), &[vec![0.25; 3], vec![0.75; 3]]);
}

#[test]
fn missing_cell_length_is_named() {
    let text = format!("{HEADER}{SITES}C1 0 0 0\n").replace("_cell_length_a 10\n", "");
    let err = parse_cif(&text).unwrap_err();
    assert!(matches!(&err, CifError::MissingTag { tag, .. } if tag == "_cell_length_a"));
    assert!(err.to_string().contains("missing cell tag"));
}

#[test]
fn zero_sites_and_bad_operators_fail() {
    assert!(matches!(parse_cif(&format!("{HEADER}{SITES}")), Err(CifError::NoAtoms { .. })));
    let ops = "loop_\n_symmetry_equiv_pos_as_xyz\nx,y,z\nx,q,z\n";
    match parse_cif(&format!("{HEADER}{ops}{SITES}C1 0 0 0\n")) {
        Err(CifError::BadSymop { block, line, .. }) => {
            assert_eq!(block, "example");
            assert_eq!(line, 11);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn operator_examples() {
    let id = parse_symmetry_op("x,y,z").unwrap();
    assert_eq!(id, pdd_core::ingest::SymmetryOp::identity(3));

    let r = |v: i64| Rational::from_integer(v);
    let op = parse_symmetry_op("-y,x-y,z").unwrap();
    assert_eq!(
        op.rotation(),
        &[vec![r(0), r(-1), r(0)], vec![r(1), r(-1), r(0)], vec![r(0), r(0), r(1)]]
    );
    assert!(op.translation().iter().all(|t| *t == r(0)));

    let op = parse_symmetry_op("x+1/2,-y,z").unwrap();
    assert_eq!(
        op.rotation(),
        &[vec![r(1), r(0), r(0)], vec![r(0), r(-1), r(0)], vec![r(0), r(0), r(1)]]
    );
    assert_eq!(op.translation(), &[Rational::new(1, 2), r(0), r(0)]);
}

#[test]
fn parsing_is_deterministic() {
    let ops = "loop_\n_space_group_symop_operation_xyz\nx,y,z\n-y,x-y,z\n-x+y,-x,z\n-x,-y,z+1/2\n";
    let text = format!("{HEADER}{ops}{SITES}C1 0.1 0.2 0.3\nC2 0.33 0.41 0.05\n");
    let first = parse_cif(&text).unwrap();
    for _ in 0..5 {
        assert_eq!(parse_cif(&text).unwrap(), first);
    }
    assert_eq!(first[0].len(), 8);
}

#[test]
fn p1_expansion_keeps_the_site_count() {
    let mut rng = rng(61);
    for _ in 0..40 {
        let m = rng.gen_range(1..12);
        let mut body = String::new();
        for s in 0..m {
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            body.push_str(&format!("A{s} {} {} {}\n", p[0], p[1], p[2]));
        }
        let explicit = format!("{HEADER}loop_\n_symmetry_equiv_pos_as_xyz\nx,y,z\n{SITES}{body}");
        let implicit = format!("{HEADER}{SITES}{body}");
        let outcome = parse_cif_detailed(&explicit).unwrap();
        // random sites in a 10 Å cube are far beyond the merge tolerance
        assert_eq!(outcome.structures[0].len(), m);
        assert_eq!(parse_cif(&implicit).unwrap(), outcome.structures);
    }
}

#[test]
fn p1_file_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let cif = dir.path().join("p1.cif");
    let text = "\
data_p1
_cell_length_a 5.4321(3)
_cell_length_b 7.1
_cell_length_c 6.05
_cell_angle_alpha 81.3
_cell_angle_beta 97.25
_cell_angle_gamma 113.9
loop_
_atom_site_label
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
C1 0.1234567 0.7654321 0.3333333
O1 0.9 0.05 0.5
";
    std::fs::write(&cif, text).unwrap();
    let loaded = read_structures(&cif).unwrap();
    let structure = &loaded[0].structure;
    let json = structure_to_json(structure);
    let back = parse_structure_json(&json).unwrap();
    assert_eq!(&back, structure);
    let (a, b) = (structure.as_periodic().unwrap(), back.as_periodic().unwrap());
    let bits = |v: Vec<Vec<f64>>| -> Vec<u64> { v.iter().flatten().map(|x| x.to_bits()).collect() };
    assert_eq!(bits(a.to_cartesian()), bits(b.to_cartesian()));
    assert_eq!(bits(a.lattice().vectors()), bits(b.lattice().vectors()));
    // and through a file again
    let path = dir.path().join("p1.json");
    std::fs::write(&path, &json).unwrap();
    assert_eq!(read_structures(&path).unwrap()[0].structure, *structure);
}

#[test]
fn finite_json_sets_load() {
    let s = parse_structure_json(r#"{"points": [[0, 0], [1, 0], [0, 2]]}"#).unwrap();
    assert!(matches!(s, Structure::Finite(ref f) if f.len() == 3));
}

/// Exact image of a rational point under a rational affine map, wrapped into [0,1).
fn exact_image(rot: &[[i64; 3]; 3], t: &[Rational; 3], p: &[Rational; 3]) -> Vec<Rational> {
    (0..3)
        .map(|i| {
            let mut s = t[i];
            for j in 0..3 {
                s += Rational::from_integer(rot[i][j]) * p[j];
            }
            s - s.floor()
        })
        .collect()
}

fn expression(row: &[i64; 3], t: Rational) -> String {
    let mut s = String::new();
    for (c, &r) in row.iter().enumerate() {
        let var = ['x', 'y', 'z'][c];
        match r {
            0 => {}
            1 if s.is_empty() => s.push(var),
            1 => s.push_str(&format!("+{var}")),
            -1 => s.push_str(&format!("-{var}")),
            _ => s.push_str(&format!("{r:+}*{var}")),
        }
    }
    if *t.numer() != 0 {
        s.push_str(&format!("+{}/{}", t.numer(), t.denom()));
    }
    s
}

fn det3(m: &[[i64; 3]; 3]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn operators_agree_with_exact_arithmetic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let rot = loop {
            let m = [[0i64; 3]; 3].map(|r| r.map(|_| rng.gen_range(-1..=1)));
            if det3(&m).abs() == 1 {
                break m;
            }
        };
        let denoms = [1i64, 2, 3, 4, 6];
        let t = [0; 3].map(|_| {
            let d = denoms[rng.gen_range(0..denoms.len())];
            Rational::new(rng.gen_range(0..d), d)
        });
        let p = [0; 3].map(|_| Ratio::new(rng.gen_range(0..97i64), 97));
        let text = (0..3).map(|i| expression(&rot[i], t[i])).collect::<Vec<_>>().join(",");
        let op = parse_symmetry_op(&text).unwrap();
        let pf: Vec<f64> = p.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
        let got = op.apply(&pf);
        for (g, e) in got.iter().zip(exact_image(&rot, &t, &p)) {
            let e = *e.numer() as f64 / *e.denom() as f64;
            prop_assert!((0.0..1.0).contains(g));
            // compare on the circle, since 1 - tiny wraps to 0
            let gap = (g - e).abs();
            prop_assert!(gap.min(1.0 - gap) <= 1e-12, "{} vs {} for {}", g, e, text);
        }
    }

    #[test]
    fn site_merging_ignores_order(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let lattice = random_lattice(&mut rng, 3).scaled(5.0).unwrap();
        let mut sites: Vec<(Vec<f64>, String)> = Vec::new();
        for s in 0..rng.gen_range(1..8) {
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            sites.push((p.clone(), format!("A{s}")));
            // chains of near copies, each within the tolerance of the previous
            let mut q = p;
            for _ in 0..rng.gen_range(0..3) {
                let cart = lattice.to_cartesian(&q);
                let moved: Vec<f64> = cart.iter().map(|x| x + rng.gen_range(-0.2..0.2) * SITE_MERGE_TOL).collect();
                q = lattice.to_fractional(&moved).into_iter().map(pdd_core::lattice::wrap_unit).collect();
                sites.push((q.clone(), format!("B{s}")));
            }
        }
        let key = |mut v: Vec<pdd_core::ingest::MergedSite>| {
            v.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap());
            v
        };
        let reference = key(merge_sites(&lattice, sites.clone(), SITE_MERGE_TOL));
        for _ in 0..3 {
            sites.shuffle(&mut rng);
            prop_assert_eq!(&key(merge_sites(&lattice, sites.clone(), SITE_MERGE_TOL)), &reference);
        }
    }
}

#[test]
fn merging_is_transitive() {
    let l = Lattice::identity(3).scaled(10.0).unwrap();
    // a and c are 1.6e-3 apart, each within 1e-3 of b
    let sites = vec![
        (vec![0.5, 0.5, 0.5], "a".to_string()),
        (vec![0.50008, 0.5, 0.5], "b".to_string()),
        (vec![0.50016, 0.5, 0.5], "c".to_string()),
    ];
    let merged = merge_sites(&l, sites, SITE_MERGE_TOL);
    assert_eq!(merged.len(), 1);
    assert_eq!(merged[0].labels, vec!["a", "b", "c"]);
}
