use num_complex::Complex64 as C64;
use proptest::prelude::*;
use quasibel::grid::{self, sample};
use quasibel::qbf::{self, Provenance};
use quasibel::Error;

#[test]
fn header_and_rows() {
    let g = grid::square(8, 1.0).unwrap();
    let f = sample(|z| z * z, &g).unwrap().with_label("square");
    let mut buf = Vec::new();
    qbf::write(&mut buf, &f, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["format"], "QBF-1");
    assert_eq!(header["kind"], "square-lattice");
    assert_eq!(header["n"], 8);
    assert_eq!(header["label"], "square");
    assert_eq!(lines.count(), 64);
}

#[test]
fn provenance_survives() {
    let g = grid::strip(16, 16, -4.0, 1.0).unwrap();
    let f = sample(|z| C64::from_polar(z.re.exp(), z.im), &g).unwrap();
    let p = Provenance { version: "0.1.0".into(), config_hash: "abc".into() };
    let mut buf = Vec::new();
    qbf::write(&mut buf, &f, Some(&p)).unwrap();
    let (back, prov) = qbf::read(&buf[..]).unwrap();
    assert_eq!(prov, Some(p));
    assert_eq!(back.values, f.values);
    assert_eq!(back.grid, f.grid);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(matches!(qbf::read(&b""[..]), Err(Error::Format(_))));
    assert!(matches!(qbf::read(&b"not json\n"[..]), Err(Error::Format(_))));
    let g = grid::square(8, 1.0).unwrap();
    let f = sample(|z| z, &g).unwrap();
    let mut buf = Vec::new();
    qbf::write(&mut buf, &f, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    assert!(matches!(qbf::read(truncated.as_bytes()), Err(Error::Format(_))));
    let bad = text.replacen(",", ";", 3);
    assert!(qbf::read(bad.as_bytes()).is_err());
    assert!(matches!(qbf::read_file("/nonexistent/field.qbf"), Err(Error::Io(_))));
}

proptest! {
    #[test]
    fn round_trip_is_bit_exact(seed in any::<u64>(), scale in -300i32..300) {
        let g = grid::square(8, 1.5).unwrap();
        let s = 10f64.powi(scale);
        let f = sample(|z| C64::new((z.re * seed as f64).sin() * s, (z.im + 1e-3 * seed as f64).cos() / 3.0), &g).unwrap();
        let mut buf = Vec::new();
        qbf::write(&mut buf, &f, None).unwrap();
        let (back, _) = qbf::read(&buf[..]).unwrap();
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
