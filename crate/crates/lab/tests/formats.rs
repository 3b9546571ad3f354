use lab::formats::{fmt_f64, pgm_bytes, pgm_range, Snapshot, Table};
use proptest::prelude::*;
use vortexlab::grid::{Field2D, Grid2D};

#[test]
fn snapshot_header_layout() {
    let g = Grid2D::torus(1.0, 1.0, 8, 10).unwrap();
    let f = Field2D::from_fn(g, |x, y| x + 10.0 * y);
    let b = Snapshot::from_field(&f, 0.25).to_bytes();
    assert_eq!(&b[..4], b"FLD1");
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 8);
    assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 10);
    assert_eq!(b[12], 0);
    assert_eq!(f64::from_le_bytes(b[13..21].try_into().unwrap()), 0.25);
    assert_eq!(b.len(), 21 + 80 * 8);
}

#[test]
fn channel_snapshot_stores_wall_rows() {
    let g = Grid2D::channel(6.0, 1.0, 8, 8).unwrap();
    let f = Field2D::from_fn(g, |x, y| x * y * (1.0 - y));
    let s = Snapshot::from_field(&f, 1.0);
    assert_eq!((s.nx, s.ny, s.geometry_tag), (8, 9, 1));
    assert_eq!(Snapshot::from_bytes(&s.to_bytes()).unwrap(), s);
}

#[test]
fn corrupt_snapshots_are_rejected() {
    let g = Grid2D::torus(1.0, 1.0, 8, 8).unwrap();
    let good = Snapshot::from_field(&Field2D::zeros(g), 0.0).to_bytes();
    assert!(Snapshot::from_bytes(&good[..good.len() - 1]).is_err());
    assert!(Snapshot::from_bytes(b"FLD2").is_err());
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(Snapshot::from_bytes(&bad).is_err());
    let mut tag = good.clone();
    tag[12] = 7;
    assert!(Snapshot::from_bytes(&tag).is_err());
    let mut nan = good;
    nan[21..29].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(Snapshot::from_bytes(&nan).is_err());
}

#[test]
fn pgm_orientation_and_range() {
    // rows: y = 0 holds 0, 1; y = 1 holds 2, 3
    let b = pgm_bytes(2, 2, &[0.0, 1.0, 2.0, 3.0]);
    assert_eq!(pgm_range(&b), Some((0.0, 3.0)));
    let header = b"P5\n# min=0e0 max=3e0\n2 2\n255\n";
    assert_eq!(&b[..header.len()], header);
    // top image row is the last stored row
    assert_eq!(&b[header.len()..], &[170, 255, 0, 85]);
}

#[test]
fn constant_pgm_is_black() {
    let b = pgm_bytes(3, 1, &[5.0; 3]);
    assert!(b.ends_with(&[0, 0, 0]));
}

#[test]
fn float_formatting() {
    assert_eq!(fmt_f64(f64::NAN), "NaN");
    assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    assert_eq!(fmt_f64(0.1), "1e-1");
}

#[test]
fn csv_rejects_ragged_rows() {
    assert!(Table::parse_csv("a,b\n1,2\n3\n").is_none());
    assert!(Table::parse_csv("a\nx\n").is_none());
}

proptest! {
    #[test]
    fn snapshot_round_trip(
        nx in 1usize..12,
        ny in 1usize..12,
        tag in 0u8..2,
        t in -1e6f64..1e6,
        seed in proptest::collection::vec(-1e300f64..1e300, 1..200),
    ) {
        let values: Vec<f64> = (0..nx * ny).map(|k| seed[k % seed.len()]).collect();
        let s = Snapshot { nx, ny, geometry_tag: tag, t, values };
        prop_assert_eq!(Snapshot::from_bytes(&s.to_bytes()).unwrap(), s);
    }

    #[test]
    fn csv_round_trip_is_exact(rows in proptest::collection::vec(proptest::collection::vec(-1e30f64..1e30, 3), 0..20)) {
        let mut t = Table::new(&["a", "b", "c"]);
        for r in &rows {
            t.push(r.clone());
        }
        let back = Table::parse_csv(&t.to_csv()).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_csv(), t.to_csv());
    }

    #[test]
    fn pgm_uses_full_range(values in proptest::collection::vec(-1e3f64..1e3, 2..64)) {
        let n = values.len();
        let b = pgm_bytes(n, 1, &values);
        let px = &b[b.len() - n..];
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &v| (a.min(v), c.max(v)));
        if hi > lo {
            prop_assert!(px.contains(&0) && px.contains(&255));
        }
        prop_assert_eq!(pgm_range(&b), Some((lo, hi)));
    }
}
