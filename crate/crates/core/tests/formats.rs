use std::io::Cursor;

use bernstein_koopman::bernstein::DegreeVector;
use bernstein_koopman::data_driven::{read_permutation, write_permutation, DataSet};
use bernstein_koopman::error::Error;
use bernstein_koopman::koopman::{build_koopman_matrices, read_matrix_csv, write_matrix_csv, Basis, MapOnBox};

#[test]
fn dataset_round_trip_is_bit_exact() {
    let x = vec![vec![0.1, 1.0 / 3.0], vec![0.7, 0.25], vec![1e-17, 0.9]];
    let y = vec![vec![0.2, 0.3], vec![std::f64::consts::PI / 4.0, 0.5], vec![0.0, 1.0]];
    let d = DataSet::new(x, y).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("x1,x2,y1,y2\n"));
    let back = DataSet::from_reader(Cursor::new(buf)).unwrap();
    assert_eq!(back.inputs(), d.inputs());
    assert_eq!(back.outputs(), d.outputs());
}

#[test]
fn dataset_reader_skips_comments_and_checks_shape() {
    let ok = "# produced elsewhere\nx1,y1\n0,0.5\n# mid-file note\n1,0.25\n";
    assert_eq!(DataSet::from_reader(Cursor::new(ok)).unwrap().len(), 2);
    for bad in [
        "0,0.5\n1,0.25\n",
        "x1,x2,y1\n0,0,1\n",
        "x1,y1\n0,0.5\n0,0.25\n",
        "x1,y1\n0,nan\n",
        "x1,y1\n",
    ] {
        let r = DataSet::from_reader(Cursor::new(bad));
        assert!(matches!(r, Err(Error::Data(_))), "{bad:?} gave {r:?}");
    }
}

#[test]
fn permutation_file_is_one_based() {
    let perm = vec![2, 0, 3, 1];
    let mut buf = Vec::new();
    write_permutation(&perm, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf.clone()).unwrap(), "3\n1\n4\n2\n");
    assert_eq!(read_permutation(Cursor::new(buf), 4).unwrap(), perm);
    let with_header = "pi\n3\n1\n4\n2\n";
    assert_eq!(read_permutation(Cursor::new(with_header), 4).unwrap(), perm);
    for bad in ["1\n2\n3\n", "1\n2\n3\n5\n", "1\n1\n2\n3\n", "0\n1\n2\n3\n"] {
        assert!(read_permutation(Cursor::new(bad), 4).is_err(), "{bad:?}");
    }
}

#[test]
fn matrix_file_round_trip() {
    let degree = DegreeVector::new(vec![3, 2]).unwrap();
    let map = MapOnBox::new("quad", 2, |x| vec![x[0] * x[1], 0.5 * (x[0] + x[1] * x[1])]);
    let k = build_koopman_matrices(&map, &degree).unwrap();
    for (basis, m) in [(Basis::Bernstein, &k.bernstein), (Basis::Monomial, &k.monomial)] {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, m, &degree, basis).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# kb-koopman v1\n# m=2 "));
        let (back, deg, b) = read_matrix_csv(Cursor::new(buf)).unwrap();
        assert_eq!(&back, m);
        assert_eq!(deg, degree);
        assert_eq!(b, basis);
    }
    let truncated = "# kb-koopman v1\n# m=1 degrees=1 basis=bernstein rows=2 cols=2\n1,0\n";
    assert!(read_matrix_csv(Cursor::new(truncated)).is_err());
    assert!(read_matrix_csv(Cursor::new("1,0\n0,1\n")).is_err());
}
