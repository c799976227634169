//! Data behind the diagnostic plots: the whitened phase portrait and the
//! sorted absolute heading components.

use anyhow::{bail, Result};
use heading_bss::clustering::sort_all_components;
use heading_bss::{gram_schmidt_whiten, HeadingSet, SignalMatrix};

use crate::csvio::channel_names;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Phase,
    SortedHeadings,
}

/// Whitened components `e_1 .. e_N`, one column each.
pub fn phase(signal: &SignalMatrix) -> Result<(Vec<String>, SignalMatrix)> {
    let w = gram_schmidt_whiten(signal)?;
    Ok((channel_names("e", signal.channels()), w.components))
}

/// Row `m` holds the `m`-th smallest `|r_i|` of every component `i`, over
/// headings passing `v_th`. Raw input is used unless `whiten` is set.
pub fn sorted_headings(signal: &SignalMatrix, whiten: bool, v_th: f64) -> Result<(Vec<String>, SignalMatrix)> {
    let data = if whiten {
        gram_schmidt_whiten(signal)?.components
    } else {
        signal.clone()
    };
    let hs = HeadingSet::from_signal(&data, v_th)?;
    if hs.accepted_count() < 2 {
        bail!("only {} heading(s) pass the threshold; nothing to plot", hs.accepted_count());
    }
    let sorted = sort_all_components(&hs)?;
    let rows = sorted.into_iter().map(|s| s.values).collect();
    Ok((channel_names("abs_r", signal.channels()), SignalMatrix::from_rows(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_channels_give_a_flat_line() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
        let s = SignalMatrix::from_rows(vec![x.clone(), x]).unwrap();
        let (_, out) = sorted_headings(&s, false, 0.0).unwrap();
        for row in out.rows() {
            assert!(row.iter().all(|&v| (v - row[0]).abs() < 1e-15));
        }
        assert!(sorted_headings(&s, true, 0.0).is_err());
    }

    #[test]
    fn phase_is_white() {
        let s = SignalMatrix::from_rows(vec![vec![1.0, 2.0, 0.0, -1.0], vec![0.5, 0.0, 1.0, 2.0]]).unwrap();
        let (names, e) = phase(&s).unwrap();
        assert_eq!(names, vec!["e1", "e2"]);
        let cross: f64 = e.row(0).iter().zip(e.row(1)).map(|(a, b)| a * b).sum();
        assert!(cross.abs() < 1e-12);
    }
}
