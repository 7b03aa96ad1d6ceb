use crate::error::{Error, Result};
use crate::gridding::GridLines;
use crate::profiles::{derivative, Profile1D, ProfileKind};
use crate::scalar::Scalar;

/// A spacing this many times the median lattice step cannot be a single step.
const WIDE_SPACING: f64 = 1.5;
/// A cut sits midway between the points where its valley reaches this
/// fraction of the valley depth.
const FLOOR_FRACTION: f64 = 0.5;

/// One cut at the floor-midpoint of every run of zeros that touches neither
/// border. Border runs are absorbed into the border cuts.
pub fn gap_middle_cuts<T: Scalar>(b: &Profile1D<T>, extent: usize) -> Result<GridLines> {
    if b.kind != ProfileKind::Binary {
        return Err(Error::WrongProfileKind {
            op: "gap_middle_cuts",
            kind: b.kind,
        });
    }
    let n = b.len();
    let mut interior = Vec::new();
    let mut i = 0;
    while i < n {
        if b.values[i] == T::zero() {
            let start = i;
            while i < n && b.values[i] == T::zero() {
                i += 1;
            }
            let end = i - 1;
            if start > 0 && end < n - 1 {
                interior.push((start + end) / 2 + b.origin_offset);
            }
        } else {
            i += 1;
        }
    }
    GridLines::from_interior(b.axis, extent, interior)
}

/// Sample indices where the first derivative turns from negative to
/// non-negative and the second derivative at the turn is positive. A run of
/// zero slope between the two signs is a plateau minimum and yields its
/// floor-center.
fn sign_change_minima(d1: &[f64], d2: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < d1.len() {
        if d1[i] >= 0.0 {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < d1.len() && d1[j] == 0.0 {
            j += 1;
        }
        // samples i+1 ..= j all sit at the minimum value
        if j < d1.len() && d1[j] > 0.0 && d2[i] > 0.0 {
            out.push((i + 1 + j) / 2);
        }
        i = j;
    }
    out
}

/// Depth of the basin around each minimum: walk outwards on each side until a
/// strictly lower sample (or the border), take the highest sample crossed, and
/// report the lower of the two sides minus the minimum.
fn prominences(values: &[f64], minima: &[usize]) -> Vec<f64> {
    minima
        .iter()
        .map(|&k| {
            let v = values[k];
            let mut left = v;
            for &x in values[..k].iter().rev() {
                if x < v {
                    break;
                }
                left = left.max(x);
            }
            let mut right = v;
            for &x in &values[k + 1..] {
                if x < v {
                    break;
                }
                right = right.max(x);
            }
            left.min(right) - v
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Drops minima whose basin is shallower than half the median depth of the
/// deeper half of all basins. Using the deeper half keeps the reference stable
/// when noise minima in flat margins are about as numerous as real ones.
fn prune_shallow(values: &[f64], minima: Vec<usize>) -> Vec<usize> {
    if minima.len() < 2 {
        return minima;
    }
    let prom = prominences(values, &minima);
    let mut sorted = prom.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let floor = 0.5 * median(sorted.split_off(sorted.len() / 2));
    minima
        .into_iter()
        .zip(prom)
        .filter(|&(_, p)| p >= floor)
        .map(|(k, _)| k)
        .collect()
}

/// Collapses minima closer than half the median spacing, keeping the lower.
fn merge_close(values: &[f64], minima: Vec<usize>) -> Vec<usize> {
    if minima.len() < 2 {
        return minima;
    }
    let radius = 0.5 * median(minima.windows(2).map(|w| (w[1] - w[0]) as f64).collect());
    let mut kept: Vec<usize> = Vec::with_capacity(minima.len());
    for k in minima {
        match kept.last_mut() {
            Some(last) if ((k - *last) as f64) < radius => {
                if values[k] < values[*last] {
                    *last = k;
                }
            }
            _ => kept.push(k),
        }
    }
    kept
}

fn argmax(values: &[f64], range: std::ops::Range<usize>) -> usize {
    range.fold(usize::MAX, |best, i| {
        if best == usize::MAX || values[i] > values[best] {
            i
        } else {
            best
        }
    })
}

/// Moves each minimum to the center of its valley. The valley of a minimum
/// is bounded by the highest samples between it and its neighbouring minima
/// (or the borders). Its edges are where the two flanks, walked inwards from
/// those peaks, first descend to `floor_fraction` of the valley depth above
/// the minimum value, interpolated between samples. On a noisy plateau (a
/// wide gap) the lowest sample lies anywhere on the plateau; the flanks do
/// not move.
fn center_in_valley(values: &[f64], minima: &[usize], floor_fraction: f64) -> Vec<usize> {
    (0..minima.len())
        .map(|m| {
            let k = minima[m];
            let lo = if m == 0 { 0 } else { minima[m - 1] + 1 };
            let hi = minima.get(m + 1).copied().unwrap_or(values.len());
            let (l, r) = (argmax(values, lo..k), argmax(values, k + 1..hi));
            if l == usize::MAX || r == usize::MAX {
                return k;
            }
            let v = values[k];
            let level = v + floor_fraction * (values[l].min(values[r]) - v);
            let mut i = l;
            while values[i] > level {
                i += 1;
            }
            let left = if i > l {
                i as f64 - (level - values[i]) / (values[i - 1] - values[i])
            } else {
                i as f64
            };
            let mut j = r;
            while values[j] > level {
                j -= 1;
            }
            let right = if j < r {
                j as f64 + (level - values[j]) / (values[j + 1] - values[j])
            } else {
                j as f64
            };
            // halves round down, matching the floor-center of a plateau
            (0.5 * (left + right) - 0.5).ceil() as usize
        })
        .collect()
}

/// Cuts at the local minima of a sum or standard deviation profile, found
/// from the zero crossings of its first derivative. No intensity threshold is
/// involved: shallow noise minima are discarded relative to the other minima
/// of the same profile, near-duplicates relative to their median spacing, and
/// each surviving minimum is centered in its own valley.
pub fn derivative_minima_cuts<T: Scalar>(p: &Profile1D<T>, extent: usize) -> Result<GridLines> {
    if !matches!(p.kind, ProfileKind::Sum | ProfileKind::StdDev) {
        return Err(Error::WrongProfileKind {
            op: "derivative_minima_cuts",
            kind: p.kind,
        });
    }
    if p.len() < 3 {
        return Err(Error::TooShort { len: p.len(), need: 3 });
    }
    let d1 = derivative(p)?;
    let d2 = derivative(&d1)?;
    let values = p.to_f64();
    let minima = sign_change_minima(&d1.to_f64(), &d2.to_f64());
    let minima = merge_close(&values, prune_shallow(&values, minima));
    if minima.is_empty() {
        return Err(Error::NoStructure(p.axis));
    }
    let minima = center_in_valley(&values, &minima, FLOOR_FRACTION);
    GridLines::from_interior(p.axis, extent, minima.into_iter().map(|k| k + p.origin_offset))
}

/// Lattice pitch: the median spacing of consecutive interior cuts. With a
/// single interior cut the border intervals are used instead.
pub fn estimate_period(g: &GridLines) -> Result<f64> {
    let cuts = g.cuts();
    if cuts.len() < 3 {
        return Err(Error::TooFewCuts {
            got: cuts.len(),
            need: 3,
        });
    }
    let diffs = if g.interior().len() >= 2 {
        g.interior().windows(2).map(|w| (w[1] - w[0]) as f64).collect()
    } else {
        cuts.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
    };
    Ok(median(diffs))
}

/// Keeps only the cuts separating two unusually wide intervals.
///
/// Inside a subarray consecutive cuts are one spot pitch apart; a subarray gap
/// adds blank space on both sides of its cut, so both neighbouring intervals
/// exceed 1.5 median pitches. Requires the subarray gap to be wider than one
/// pitch and the spot-level structure to be resolved.
pub fn select_coarse_cuts(fine: &GridLines) -> Result<GridLines> {
    let cuts = fine.cuts();
    let spans: Vec<f64> = cuts.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let interior_spans = &spans[1..spans.len() - 1];
    let pitch = if interior_spans.is_empty() {
        median(spans.clone())
    } else {
        median(interior_spans.to_vec())
    };
    let wide = WIDE_SPACING * pitch;
    let coarse = (1..cuts.len() - 1)
        .filter(|&i| spans[i - 1] > wide && spans[i] > wide)
        .map(|i| cuts[i]);
    GridLines::from_interior(fine.axis(), fine.extent(), coarse)
}
