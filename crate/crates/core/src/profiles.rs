//! One-dimensional projection profiles of an image.
//!
//! For `Axis::Columns` the profile has one sample per column `i`, aggregating
//! the intensities `I(i, j)` over every row `j`:
//!
//! ```text
//! sum:    S(i) = Σ_j I(i, j)
//! mean:   Ī(i) = S(i) / M
//! stddev: σ(i) = sqrt( Σ_j (I(i, j) − Ī(i))² / (M − 1) )
//! ```
//!
//! where `M` is the number of aggregated samples. `Axis::Rows` is the
//! transpose. Every aggregation runs in ascending index order, so results do
//! not depend on how the caller schedules work.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Axis, IntensityImage};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileKind {
    Sum,
    StdDev,
    Mean,
    Derivative,
    SecondDerivative,
    Binary,
}

impl ProfileKind {
    /// Profiles computed straight from pixels.
    pub fn is_direct(self) -> bool {
        matches!(self, ProfileKind::Sum | ProfileKind::StdDev | ProfileKind::Mean)
    }
}

/// A 1D signal along one image axis.
///
/// `origin_offset` is the source-image index of `values[0]`. A derivative
/// sample `d[i] = p[i + 1] − p[i]` sits between two pixels and is attributed
/// to the lower one, so differentiation keeps the parent's offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D<T> {
    pub axis: Axis,
    pub kind: ProfileKind,
    pub values: Vec<T>,
    pub origin_offset: usize,
}

impl<T: Scalar> Profile1D<T> {
    pub fn new(axis: Axis, kind: ProfileKind, values: Vec<T>) -> Self {
        Profile1D {
            axis,
            kind,
            values,
            origin_offset: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.as_f64()).collect()
    }
}

/// Per-axis sums, accumulated in ascending index order.
fn axis_sums<T: Scalar>(img: &IntensityImage<T>, axis: Axis) -> Vec<T> {
    match axis {
        Axis::Columns => {
            let mut acc = vec![T::zero(); img.width()];
            for y in 0..img.height() {
                for (a, &v) in acc.iter_mut().zip(img.row(y)) {
                    *a = *a + v;
                }
            }
            acc
        }
        Axis::Rows => (0..img.height())
            .map(|y| img.row(y).iter().fold(T::zero(), |a, &v| a + v))
            .collect(),
    }
}

/// Number of samples aggregated into each profile value.
fn aggregated_len<T: Scalar>(img: &IntensityImage<T>, axis: Axis) -> usize {
    img.extent(axis.other())
}

pub fn sum_profile<T: Scalar>(img: &IntensityImage<T>, axis: Axis) -> Profile1D<T> {
    Profile1D::new(axis, ProfileKind::Sum, axis_sums(img, axis))
}

pub fn mean_profile<T: Scalar>(img: &IntensityImage<T>, axis: Axis) -> Profile1D<T> {
    let n = T::of_usize(aggregated_len(img, axis));
    let values = axis_sums(img, axis).into_iter().map(|s| s / n).collect();
    Profile1D::new(axis, ProfileKind::Mean, values)
}

/// Sample standard deviation (denominator `M − 1`) of every column or row.
pub fn stddev_profile<T: Scalar>(img: &IntensityImage<T>, axis: Axis) -> Result<Profile1D<T>> {
    let m = aggregated_len(img, axis);
    if m < 2 {
        return Err(Error::DegenerateExtent(m));
    }
    let means = mean_profile(img, axis).values;
    let mut sq = vec![T::zero(); means.len()];
    match axis {
        Axis::Columns => {
            for y in 0..img.height() {
                for ((s, &v), &mu) in sq.iter_mut().zip(img.row(y)).zip(&means) {
                    let d = v - mu;
                    *s = *s + d * d;
                }
            }
        }
        Axis::Rows => {
            for (y, s) in sq.iter_mut().enumerate() {
                let mu = means[y];
                *s = img.row(y).iter().fold(T::zero(), |a, &v| a + (v - mu) * (v - mu));
            }
        }
    }
    let denom = T::of_usize(m - 1);
    let values = sq.into_iter().map(|s| (s / denom).sqrt()).collect();
    Ok(Profile1D::new(axis, ProfileKind::StdDev, values))
}

/// Forward difference `d[i] = p[i + 1] − p[i]`.
///
/// Differentiating a `Derivative` yields a `SecondDerivative`.
pub fn derivative<T: Scalar>(p: &Profile1D<T>) -> Result<Profile1D<T>> {
    let kind = match p.kind {
        ProfileKind::Binary | ProfileKind::SecondDerivative => {
            return Err(Error::WrongProfileKind {
                op: "derivative",
                kind: p.kind,
            })
        }
        ProfileKind::Derivative => ProfileKind::SecondDerivative,
        _ => ProfileKind::Derivative,
    };
    if p.len() < 2 {
        return Err(Error::TooShort { len: p.len(), need: 2 });
    }
    Ok(Profile1D {
        axis: p.axis,
        kind,
        values: p.values.windows(2).map(|w| w[1] - w[0]).collect(),
        origin_offset: p.origin_offset,
    })
}

/// Centered moving average. Near the ends the window is truncated to the
/// samples that exist, and the average is taken over those only.
pub fn smooth<T: Scalar>(p: &Profile1D<T>, window: usize) -> Result<Profile1D<T>> {
    if window == 0 || window.is_multiple_of(2) || window > p.len() {
        return Err(Error::BadWindow {
            window,
            len: p.len(),
        });
    }
    if window == 1 {
        return Ok(p.clone());
    }
    let half = window / 2;
    let n = p.len();
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let s = p.values[lo..=hi].iter().fold(T::zero(), |a, &v| a + v);
            s / T::of_usize(hi - lo + 1)
        })
        .collect();
    Ok(Profile1D {
        values,
        ..p.clone()
    })
}

/// Marks samples at or above `min + fraction · (max − min)` with 1.
pub fn binarize<T: Scalar>(p: &Profile1D<T>, threshold_fraction: f64) -> Result<Profile1D<T>> {
    if !p.kind.is_direct() {
        return Err(Error::WrongProfileKind {
            op: "binarize",
            kind: p.kind,
        });
    }
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::BadThreshold(threshold_fraction));
    }
    let (lo, hi) = p.min_max();
    if !(hi > lo) {
        return Err(Error::FlatProfile);
    }
    let level = lo + T::of(threshold_fraction) * (hi - lo);
    Ok(Profile1D {
        axis: p.axis,
        kind: ProfileKind::Binary,
        values: p
            .values
            .iter()
            .map(|&v| if v >= level { T::one() } else { T::zero() })
            .collect(),
        origin_offset: p.origin_offset,
    })
}

/// Writes `index,value` lines (with a header) for a profile. Indices are in
/// source-image coordinates.
pub fn write_csv<T: Scalar>(p: &Profile1D<T>, mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "index,value")?;
    for (i, v) in p.values.iter().enumerate() {
        writeln!(out, "{},{}", i + p.origin_offset, v.as_f64())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(rows: &[&[f64]]) -> IntensityImage<f64> {
        let w = rows[0].len();
        IntensityImage::new(w, rows.len(), rows.concat()).unwrap()
    }

    fn prof(v: &[f64]) -> Profile1D<f64> {
        Profile1D::new(Axis::Columns, ProfileKind::Sum, v.to_vec())
    }

    #[test]
    fn sum_small() {
        let i = img(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(sum_profile(&i, Axis::Columns).values, vec![4.0, 6.0]);
        assert_eq!(sum_profile(&i, Axis::Rows).values, vec![3.0, 7.0]);
    }

    #[test]
    fn sum_constant() {
        let i = IntensityImage::filled(5, 7, 3.0).unwrap();
        assert!(sum_profile(&i, Axis::Columns).values.iter().all(|&v| v == 21.0));
    }

    #[test]
    fn mean_small_and_constant() {
        let i = img(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(mean_profile(&i, Axis::Columns).values, vec![2.0, 3.0]);
        let c = IntensityImage::filled(4, 3, 2.5).unwrap();
        assert!(mean_profile(&c, Axis::Rows).values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn stddev_small() {
        let i = img(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = stddev_profile(&i, Axis::Columns).unwrap();
        for v in s.values {
            assert!((v - 2f64.sqrt()).abs() < 1e-12);
        }
        let col = img(&[&[0.0], &[0.0], &[2.0], &[2.0]]);
        let s = stddev_profile(&col, Axis::Columns).unwrap();
        assert!((s.values[0] - 1.154_700_538_379_251_5).abs() < 1e-12);
        let c = IntensityImage::filled(3, 3, 9.0).unwrap();
        assert!(stddev_profile(&c, Axis::Rows).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stddev_needs_two_samples() {
        let one_row = img(&[&[1.0, 2.0, 3.0]]);
        assert!(matches!(
            stddev_profile(&one_row, Axis::Columns),
            Err(Error::DegenerateExtent(1))
        ));
        assert!(stddev_profile(&one_row, Axis::Rows).is_ok());
    }

    #[test]
    fn derivative_basics() {
        let d = derivative(&prof(&[1.0, 3.0, 6.0])).unwrap();
        assert_eq!(d.values, vec![2.0, 3.0]);
        assert_eq!(d.kind, ProfileKind::Derivative);
        let dd = derivative(&d).unwrap();
        assert_eq!(dd.kind, ProfileKind::SecondDerivative);
        assert_eq!(dd.values, vec![1.0]);
        assert!(derivative(&prof(&[4.0; 6])).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(matches!(derivative(&prof(&[1.0])), Err(Error::TooShort { .. })));
        let b = binarize(&prof(&[1.0, 5.0, 1.0]), 0.5).unwrap();
        assert!(derivative(&b).is_err());
    }

    #[test]
    fn smooth_examples() {
        let p = prof(&[0.0, 3.0, 0.0]);
        assert_eq!(smooth(&p, 1).unwrap(), p);
        assert_eq!(smooth(&p, 3).unwrap().values, vec![1.5, 1.0, 1.5]);
        let c = prof(&[2.0; 9]);
        assert_eq!(smooth(&c, 5).unwrap().values, c.values);
        assert!(matches!(smooth(&p, 2), Err(Error::BadWindow { .. })));
        assert!(matches!(smooth(&p, 5), Err(Error::BadWindow { .. })));
        assert!(matches!(smooth(&p, 0), Err(Error::BadWindow { .. })));
    }

    #[test]
    fn binarize_examples() {
        let b = binarize(&prof(&[1.0, 5.0, 1.0]), 0.5).unwrap();
        assert_eq!(b.values, vec![0.0, 1.0, 0.0]);
        assert_eq!(b.kind, ProfileKind::Binary);
        assert!(matches!(binarize(&prof(&[2.0; 4]), 0.3), Err(Error::FlatProfile)));
        assert!(matches!(binarize(&prof(&[1.0, 2.0]), 1.0), Err(Error::BadThreshold(_))));
        let tiny = binarize(&prof(&[0.0, 3.0, 1.0, 0.0, 2.0]), 1e-9).unwrap();
        assert_eq!(tiny.values, vec![0.0, 1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_export() {
        let mut out = Vec::new();
        write_csv(&prof(&[1.0, 2.5]), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "index,value\n0,1\n1,2.5\n");
    }

    #[test]
    fn f32_profiles() {
        let i = IntensityImage::<f32>::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(sum_profile(&i, Axis::Columns).values, vec![4.0f32, 6.0]);
        let s = stddev_profile(&i, Axis::Rows).unwrap();
        assert!((s.values[0] - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn derivative_telescopes(v in prop::collection::vec(0.0f64..1e4, 2..64)) {
            let p = prof(&v);
            let d = derivative(&p).unwrap();
            let total: f64 = d.values.iter().sum();
            prop_assert!((total - (v[v.len() - 1] - v[0])).abs() < 1e-6);
        }

        #[test]
        fn derivative_is_linear(
            pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 2..40),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let q: Vec<f64> = pairs.iter().map(|x| x.1).collect();
            let combo: Vec<f64> = p.iter().zip(&q).map(|(x, y)| a * x + b * y).collect();
            let lhs = derivative(&prof(&combo)).unwrap().values;
            let dp = derivative(&prof(&p)).unwrap().values;
            let dq = derivative(&prof(&q)).unwrap().values;
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (a * dp[i] + b * dq[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn binarize_affine_invariant(
            v in prop::collection::vec(0.0f64..1000.0, 3..50),
            scale in 0.01f64..100.0,
            shift in 0.0f64..1000.0,
            frac in 0.05f64..0.95,
        ) {
            let p = prof(&v);
            prop_assume!(p.min_max().1 - p.min_max().0 > 1e-6);
            let q = prof(&v.iter().map(|x| scale * x + shift).collect::<Vec<_>>());
            // Samples that sit within rounding of the level may legitimately flip.
            let (lo, hi) = p.min_max();
            let level = lo + frac * (hi - lo);
            let a = binarize(&p, frac).unwrap().values;
            let b = binarize(&q, frac).unwrap().values;
            for i in 0..v.len() {
                if (v[i] - level).abs() > 1e-9 * (hi - lo).max(1.0) {
                    prop_assert_eq!(a[i], b[i]);
                }
            }
        }

        #[test]
        fn smooth_keeps_constants(c in 0.0f64..1e5, n in 1usize..40, w in 0usize..20) {
            let window = 2 * w + 1;
            prop_assume!(window <= n);
            let p = prof(&vec![c; n]);
            let s = smooth(&p, window).unwrap();
            for v in s.values {
                prop_assert!((v - c).abs() <= 1e-9 * c.max(1.0));
            }
        }
    }
}
