use crate::matcore::Matrix;

/// Splits `d` into `(background, d - background)` such that the two parts add
/// back to `d` exactly in floating point.
///
/// The foreground is `fl(d - b)`, nudged by a few ulps where that does not
/// round-trip. Only if no nearby foreground works is the background entry
/// changed: first to `fl(d - f)` (within half an ulp of `d` from `b`), and
/// as a last resort to `d` itself. Round-half-even ties make the first change
/// unavoidable for some pairs, e.g. when `b` sits half an ulp of `d` off the
/// grid of `d`.
pub fn split_exact(d: &Matrix, background: &Matrix) -> (Matrix, Matrix) {
    debug_assert_eq!(d.shape(), background.shape());
    let mut bg = background.as_slice().to_vec();
    let fg: Vec<f64> = d
        .as_slice()
        .iter()
        .zip(bg.iter_mut())
        .map(|(&di, bi)| {
            let (b, f) = split_entry(di, *bi);
            *bi = b;
            f
        })
        .collect();
    (
        Matrix::from_raw(d.rows(), d.cols(), bg),
        Matrix::from_raw(d.rows(), d.cols(), fg),
    )
}

pub(crate) fn split_entry(d: f64, b: f64) -> (f64, f64) {
    let f = d - b;
    if b + f == d {
        return (b, f);
    }
    let (mut up, mut down) = (f, f);
    for _ in 0..4 {
        up = up.next_up();
        down = down.next_down();
        if b + up == d {
            return (b, up);
        }
        if b + down == d {
            return (b, down);
        }
    }
    let b2 = d - f;
    if b2 + f == d {
        return (b2, f);
    }
    (d, 0.0)
}
