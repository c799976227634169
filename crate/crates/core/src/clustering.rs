//! Heading clustering by component-wise sorting.
//!
//! For every component `i` the magnitudes `|r_i[n]|` of the accepted headings
//! are sorted. Neighbours in sorted order closer than `epsilon` are linked,
//! giving one boolean adjacency column per component. The longest run of
//! links in any column seeds a cluster; each seed heading then survives only
//! if, in every other component, its sorted position also sits inside some
//! run. The survivors are the headings of one dominant source.
//!
//! Sorted positions `m` and heading indices `n` are both 0-based here.

use serde::Serialize;

use crate::error::{BssError, Result};
use crate::headings::{HeadingSet, Vector};

/// Magnitudes of one heading component in ascending order, with the
/// heading index each sorted entry came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedComponent {
    pub component: usize,
    pub values: Vec<f64>,
    pub index_map: Vec<usize>,
}

impl SortedComponent {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inverse of `index_map`: sorted position of each heading index, if present.
    pub fn positions(&self, heading_count: usize) -> Vec<Option<usize>> {
        let mut pos = vec![None; heading_count];
        for (m, &n) in self.index_map.iter().enumerate() {
            pos[n] = Some(m);
        }
        pos
    }
}

/// A maximal run of `true` entries in one adjacency column, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Run {
    pub component: usize,
    pub start: usize,
    pub end: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Every intermediate table of one clustering pass, kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTables {
    pub epsilon: f64,
    pub sorted: Vec<SortedComponent>,
    /// `adjacency[i][m]`: sorted entries `m - 1` and `m` of component `i` are linked.
    pub adjacency: Vec<Vec<bool>>,
    pub run: Run,
    /// `time_ordered[i][n]`: heading `n` lies in a cluster of component `i`.
    pub time_ordered: Vec<Vec<bool>>,
    /// AND across components of `time_ordered`.
    pub membership: Vec<bool>,
}

/// Headings attributed to one source.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub member_indices: Vec<usize>,
    pub member_velocities: Vec<Vector>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

/// Sorts `|r_i[n]|` over the accepted headings. Equal magnitudes keep
/// ascending heading order.
pub fn sort_component(headings: &HeadingSet, component: usize) -> Result<SortedComponent> {
    let accepted = headings.accepted_indices();
    if accepted.len() < 2 {
        return Err(BssError::TooFewHeadings {
            found: accepted.len(),
        });
    }
    let dim = headings.dim();
    if component >= dim {
        return Err(BssError::DimensionMismatch {
            expected: dim,
            found: component + 1,
        });
    }
    let mut pairs: Vec<(f64, usize)> = accepted
        .into_iter()
        .map(|n| (headings.headings[n][component].abs(), n))
        .collect();
    // Stable sort on value alone keeps ties in heading order.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (values, index_map) = pairs.into_iter().unzip();
    Ok(SortedComponent {
        component,
        values,
        index_map,
    })
}

pub fn sort_all_components(headings: &HeadingSet) -> Result<Vec<SortedComponent>> {
    (0..headings.dim()).map(|i| sort_component(headings, i)).collect()
}

/// `alpha / m`, where `m` is the number of accepted headings being sorted.
pub fn epsilon_from_alpha(alpha: f64, accepted: usize) -> f64 {
    alpha / accepted as f64
}

/// Adjacency column: entry `m` links sorted entries `m - 1` and `m`.
/// Entry 0 has no left neighbour and is always `false`.
pub fn build_adjacency(sorted: &SortedComponent, epsilon: f64) -> Vec<bool> {
    let mut col = vec![false; sorted.len()];
    for (m, w) in sorted.values.windows(2).enumerate() {
        col[m + 1] = w[1] - w[0] < epsilon;
    }
    col
}

/// Longest run of `true` over all columns. Ties go to the lowest component,
/// then the earliest start.
pub fn find_largest_run(adjacency: &[Vec<bool>]) -> Result<Run> {
    let mut best: Option<Run> = None;
    for (component, col) in adjacency.iter().enumerate() {
        let mut m = 0;
        while m < col.len() {
            if !col[m] {
                m += 1;
                continue;
            }
            let start = m;
            while m < col.len() && col[m] {
                m += 1;
            }
            let run = Run {
                component,
                start,
                end: m - 1,
            };
            if best.is_none_or(|b| run.len() > b.len()) {
                best = Some(run);
            }
        }
    }
    best.ok_or(BssError::NoRunFound)
}

/// Marks the heading indices of a run, including its left anchor (the
/// entry before `start`, which the first link connects to).
pub fn expand_and_remap(run: &Run, sorted: &SortedComponent, heading_count: usize) -> Vec<bool> {
    let mut seed = vec![false; heading_count];
    for m in run.start.saturating_sub(1)..=run.end {
        seed[sorted.index_map[m]] = true;
    }
    seed
}

/// Fills the time-ordered table. The seed component's column is the seed
/// itself; for every other component a seed heading is kept when its sorted
/// position is inside a run of that column or is a run's left anchor.
pub fn cross_check_components(
    seed: &[bool],
    seed_component: usize,
    adjacency: &[Vec<bool>],
    sorted: &[SortedComponent],
) -> Vec<Vec<bool>> {
    let heading_count = seed.len();
    adjacency
        .iter()
        .zip(sorted)
        .enumerate()
        .map(|(i, (col, comp))| {
            if i == seed_component {
                return seed.to_vec();
            }
            let pos = comp.positions(heading_count);
            seed.iter()
                .enumerate()
                .map(|(n, &s)| {
                    s && pos[n].is_some_and(|m| col[m] || col.get(m + 1).copied().unwrap_or(false))
                })
                .collect()
        })
        .collect()
}

/// AND across components; the surviving headings form the cluster.
pub fn membership(time_ordered: &[Vec<bool>]) -> Vec<bool> {
    let Some(first) = time_ordered.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|n| time_ordered.iter().all(|col| col[n]))
        .collect()
}

pub fn extract_cluster(tables: &ClusterTables, velocities: &[Vector]) -> Result<Cluster> {
    let member_indices: Vec<usize> = tables
        .membership
        .iter()
        .enumerate()
        .filter_map(|(n, &d)| d.then_some(n))
        .collect();
    if member_indices.is_empty() {
        return Err(BssError::EmptyCluster);
    }
    let member_velocities = member_indices.iter().map(|&n| velocities[n].clone()).collect();
    Ok(Cluster {
        member_indices,
        member_velocities,
    })
}

/// Full clustering pass with an explicit adjacency threshold.
pub fn cluster_with_epsilon(headings: &HeadingSet, epsilon: f64) -> Result<(Cluster, ClusterTables)> {
    let sorted = sort_all_components(headings)?;
    let adjacency: Vec<Vec<bool>> = sorted.iter().map(|s| build_adjacency(s, epsilon)).collect();
    let run = find_largest_run(&adjacency)?;
    let seed = expand_and_remap(&run, &sorted[run.component], headings.len());
    let time_ordered = cross_check_components(&seed, run.component, &adjacency, &sorted);
    let membership = membership(&time_ordered);
    let tables = ClusterTables {
        epsilon,
        sorted,
        adjacency,
        run,
        time_ordered,
        membership,
    };
    let cluster = extract_cluster(&tables, &headings.velocities)?;
    Ok((cluster, tables))
}

/// Full clustering pass with `epsilon = alpha / M`.
pub fn cluster_headings(headings: &HeadingSet, alpha: f64) -> Result<(Cluster, ClusterTables)> {
    let accepted = headings.accepted_count();
    if accepted < 2 {
        return Err(BssError::TooFewHeadings { found: accepted });
    }
    cluster_with_epsilon(headings, epsilon_from_alpha(alpha, accepted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sc(values: Vec<f64>, index_map: Vec<usize>) -> SortedComponent {
        SortedComponent {
            component: 0,
            values,
            index_map,
        }
    }

    #[test]
    fn epsilon_formula() {
        assert_eq!(epsilon_from_alpha(1.0, 10), 0.1);
        assert_eq!(epsilon_from_alpha(0.5, 100), 0.005);
        assert_eq!(epsilon_from_alpha(1.0, 2), 0.5);
    }

    #[test]
    fn already_sorted_gives_identity_map() {
        let v: Vec<Vector> = (1..=5).map(|k| vec![k as f64, 10.0]).collect();
        let hs = HeadingSet::from_velocities(v, 0.01);
        let s = sort_component(&hs, 0).unwrap();
        assert_eq!(s.index_map, vec![0, 1, 2, 3, 4]);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sorting_needs_two_headings() {
        let hs = HeadingSet::from_velocities(vec![vec![1.0, 0.0], vec![0.0, 0.0]], 0.5);
        assert_eq!(sort_component(&hs, 0), Err(BssError::TooFewHeadings { found: 1 }));
    }

    #[test]
    fn wide_gaps_never_link() {
        let col = build_adjacency(&sc(vec![0.0, 0.2, 0.4, 0.7], vec![0, 1, 2, 3]), 0.1);
        assert_eq!(col, vec![false; 4]);
    }

    #[test]
    fn single_true_entry_is_a_run() {
        let mut c = vec![vec![false; 5], vec![false; 5]];
        c[1][2] = true;
        assert_eq!(
            find_largest_run(&c).unwrap(),
            Run {
                component: 1,
                start: 2,
                end: 2
            }
        );
    }

    #[test]
    fn all_false_has_no_run() {
        assert_eq!(find_largest_run(&[vec![false; 4], vec![false; 4]]), Err(BssError::NoRunFound));
    }

    #[test]
    fn anchor_included_on_expansion() {
        // 1-based: run [3,3] with index_map(2) = 7, index_map(3) = 4.
        let s = sc(vec![0.1, 0.2, 0.3, 0.3], vec![0, 6, 3, 1]);
        let run = Run {
            component: 0,
            start: 2,
            end: 2,
        };
        let seed = expand_and_remap(&run, &s, 8);
        let marked: Vec<usize> = (0..8).filter(|&n| seed[n]).collect();
        assert_eq!(marked, vec![3, 6]);
    }

    #[test]
    fn whole_column_run_marks_everything() {
        let s = sc(vec![0.5; 4], vec![2, 0, 3, 1]);
        let col = build_adjacency(&s, 0.01);
        let run = find_largest_run(&[col]).unwrap();
        assert_eq!(expand_and_remap(&run, &s, 4), vec![true; 4]);
    }

    #[test]
    fn single_component_cross_check_is_identity() {
        let s = sc(vec![0.5; 3], vec![0, 1, 2]);
        let seed = vec![true, false, true];
        let cu = cross_check_components(&seed, 0, &[vec![false, true, true]], &[s]);
        assert_eq!(cu, vec![seed]);
    }

    #[test]
    fn isolated_position_fails_cross_check() {
        // Component 1: heading 2 sits at sorted position 1 with no link on either side.
        let s0 = sc(vec![0.5, 0.5, 0.5], vec![0, 1, 2]);
        let s1 = sc(vec![0.1, 0.5, 0.9], vec![0, 2, 1]);
        let adj = vec![vec![false, true, true], vec![false, false, false]];
        let cu = cross_check_components(&[true, true, true], 0, &adj, &[s0, s1]);
        assert_eq!(cu[1], vec![false, false, false]);
    }

    #[test]
    fn all_true_tables_keep_everything_and_false_column_empties() {
        let velocities = vec![vec![1.0, 0.0]; 3];
        let mut tables = ClusterTables {
            epsilon: 0.1,
            sorted: vec![],
            adjacency: vec![],
            run: Run {
                component: 0,
                start: 1,
                end: 2,
            },
            time_ordered: vec![vec![true; 3], vec![true; 3]],
            membership: vec![true; 3],
        };
        let c = extract_cluster(&tables, &velocities).unwrap();
        assert_eq!(c.member_indices, vec![0, 1, 2]);

        tables.time_ordered[1] = vec![false; 3];
        tables.membership = membership(&tables.time_ordered);
        assert_eq!(extract_cluster(&tables, &velocities), Err(BssError::EmptyCluster));
    }

    fn heading_strategy() -> impl Strategy<Value = Vec<Vector>> {
        // Coarse integer grid so exact ties and near ties both occur.
        prop::collection::vec(prop::collection::vec(-4i32..=4, 3), 4..30).prop_map(|rows| {
            rows.into_iter()
                .map(|r| r.into_iter().map(f64::from).collect())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn adjacency_monotone_in_epsilon(vel in heading_strategy(), e1 in 0.0f64..0.5, de in 0.0f64..0.5) {
            let hs = HeadingSet::from_velocities(vel, 0.01);
            let Ok(sorted) = sort_all_components(&hs) else { return Ok(()); };
            for s in &sorted {
                let a = build_adjacency(s, e1);
                let b = build_adjacency(s, e1 + de);
                prop_assert!(a.iter().zip(&b).all(|(x, y)| !x || *y));
            }
        }

        #[test]
        fn equivariant_under_relabelling(vel in heading_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm: Vec<usize> = (0..vel.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<Vector> = perm.iter().map(|&p| vel[p].clone()).collect();

            let a = cluster_with_epsilon(&HeadingSet::from_velocities(vel, 0.01), 0.05);
            let b = cluster_with_epsilon(&HeadingSet::from_velocities(shuffled, 0.01), 0.05);
            match (a, b) {
                (Ok((ca, _)), Ok((cb, _))) => {
                    let mut mapped: Vec<usize> = cb.member_indices.iter().map(|&k| perm[k]).collect();
                    mapped.sort_unstable();
                    prop_assert_eq!(ca.member_indices, mapped);
                }
                (Err(ea), Err(eb)) => prop_assert_eq!(ea, eb),
                (x, y) => prop_assert!(false, "outcomes differ: {:?} vs {:?}", x.err(), y.err()),
            }
        }
    }
}
