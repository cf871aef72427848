//! Crisp clusterings on demand: DBSCAN over structures, then nearest
//! structure assignment for arbitrary points.

use crate::linalg::Vector;
use crate::model::{SpcModel, StructureId};
use crate::typicality::{structure_distance, typicality_from_sq, Fuzzifier, Structure};

/// Result of a DBSCAN run over indexed items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dbscan {
    /// Dense cluster ids. Noise items get their own singleton ids after all
    /// density clusters.
    pub labels: Vec<usize>,
    pub core: Vec<bool>,
    /// Number of density-connected clusters, excluding noise singletons.
    pub density_clusters: usize,
}

impl Dbscan {
    pub fn is_noise(&self, i: usize) -> bool {
        self.labels[i] >= self.density_clusters
    }
}

/// DBSCAN with an arbitrary symmetric distance.
///
/// An item is core when at least `min_pts` items, itself included, lie
/// within `epsilon`. Clusters are discovered in item order and a border item
/// joins the first cluster that reaches it.
pub fn dbscan<F>(n: usize, dist: F, epsilon: f64, min_pts: usize) -> Dbscan
where
    F: Fn(usize, usize) -> f64,
{
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| i == j || dist(i, j) <= epsilon).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut queue = Vec::new();
    for seed in 0..n {
        if labels[seed].is_some() || !core[seed] {
            continue;
        }
        let c = next;
        next += 1;
        labels[seed] = Some(c);
        queue.push(seed);
        while let Some(p) = queue.pop() {
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(c);
                    if core[q] {
                        queue.push(q);
                    }
                }
            }
        }
    }
    let density_clusters = next;
    let labels = labels
        .into_iter()
        .map(|l| {
            l.unwrap_or_else(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    Dbscan {
        labels,
        core,
        density_clusters,
    }
}

/// A cluster id for every structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    ids: Vec<StructureId>,
    labels: Vec<usize>,
    density_clusters: usize,
}

impl ClusterLabels {
    pub fn get(&self, id: StructureId) -> Option<usize> {
        self.ids
            .binary_search(&id)
            .ok()
            .map(|i| self.labels[i])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of distinct labels, noise singletons included.
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn density_clusters(&self) -> usize {
        self.density_clusters
    }

    pub fn iter(&self) -> impl Iterator<Item = (StructureId, usize)> + '_ {
        self.ids.iter().copied().zip(self.labels.iter().copied())
    }
}

fn labels_from(ids: Vec<StructureId>, run: Dbscan) -> ClusterLabels {
    ClusterLabels {
        ids,
        labels: run.labels,
        density_clusters: run.density_clusters,
    }
}

/// DBSCAN over the model's structures with the structure distance.
pub fn get_clustering(model: &SpcModel) -> ClusterLabels {
    let p = model.params();
    let run = dbscan(model.len(), |i, j| model.cached_distance(i, j), p.epsilon, p.min_pts);
    labels_from(model.ids(), run)
}

/// [`get_clustering`] over a detached snapshot, recomputing every distance.
/// Structures must be sorted by identifier.
pub fn cluster_structures(
    structures: &[(StructureId, Structure)],
    m: Fuzzifier,
    epsilon: f64,
    min_pts: usize,
) -> ClusterLabels {
    let run = dbscan(
        structures.len(),
        |i, j| structure_distance(&structures[i].1, &structures[j].1, m).unwrap_or(1.0),
        epsilon,
        min_pts,
    );
    labels_from(structures.iter().map(|(id, _)| *id).collect(), run)
}

/// Where a point lands in the decision regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub cluster: usize,
    pub structure: StructureId,
    /// `1 − u²` for the winning structure.
    pub distance: f64,
}

/// Assigns a point to the structure with the smallest decision distance.
///
/// The decision distance is monotone in the Mahalanobis distance, so the
/// comparison runs on `d²` and survives typicality underflow far from every
/// structure. Ties go to the lowest identifier.
pub fn assign_point<'a, I>(structures: I, labels: &ClusterLabels, x: &Vector, m: Fuzzifier) -> Option<Assignment>
where
    I: IntoIterator<Item = (StructureId, &'a Structure)>,
{
    let mut best: Option<(StructureId, f64)> = None;
    for (id, s) in structures {
        let d_sq = s.mahalanobis_sq(x).unwrap_or(f64::INFINITY);
        if best.is_none_or(|(_, b)| d_sq < b) {
            best = Some((id, d_sq));
        }
    }
    let (structure, d_sq) = best?;
    let u = typicality_from_sq(d_sq, m);
    Some(Assignment {
        cluster: labels.get(structure)?,
        structure,
        distance: 1.0 - u * u,
    })
}

/// [`assign_point`] for every point against the model's structures.
pub fn assign_points(model: &SpcModel, labels: &ClusterLabels, points: &[Vec<f64>]) -> Vec<Assignment> {
    let m = model.params().fuzzifier;
    points
        .iter()
        .map(|p| {
            let x = Vector::from_column_slice(p);
            assign_point(model.structures(), labels, &x, m)
                .expect("labels cover every structure of a non-empty model")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpcParams;
    use crate::spread::Spread;
    use proptest::prelude::*;

    /// Brute-force reachability: core items are connected when a chain of
    /// core items with consecutive distances within `eps` joins them.
    fn core_components(d: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
        let n = d.len();
        let core: Vec<bool> = (0..n)
            .map(|i| (0..n).filter(|&j| d[i][j] <= eps).count() >= min_pts)
            .collect();
        // transitive closure over core-core edges (Floyd–Warshall style)
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = core[i] && core[j] && (i == j || d[i][j] <= eps);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        (0..n)
            .map(|i| core[i].then(|| (0..n).find(|&j| reach[i][j]).unwrap()))
            .collect()
    }

    fn matrix_from(points: &[(f64, f64)]) -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|a| {
                points
                    .iter()
                    .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_separated_groups() {
        let n = 10;
        let d = |i: usize, j: usize| if i / 5 == j / 5 { 0.0 } else { 0.99 };
        let run = dbscan(n, d, 0.95, 2);
        assert_eq!(run.density_clusters, 2);
        assert!(run.labels[..5].iter().all(|&l| l == 0));
        assert!(run.labels[5..].iter().all(|&l| l == 1));
    }

    #[test]
    fn identical_items_form_one_cluster() {
        let run = dbscan(6, |_, _| 0.0, 0.5, 3);
        assert_eq!(run.labels, vec![0; 6]);
    }

    #[test]
    fn isolated_item_is_singleton_noise() {
        let pts = [(0.0, 0.0), (0.1, 0.0), (5.0, 5.0), (0.0, 0.1)];
        let d = matrix_from(&pts);
        let run = dbscan(4, |i, j| d[i][j], 0.5, 2);
        assert_eq!(run.labels, vec![0, 0, 1, 0]);
        assert!(run.is_noise(2));
        assert_eq!(run.density_clusters, 1);
    }

    #[test]
    fn border_joins_first_cluster_in_scan_order() {
        // 0-1 and 3-4 are core pairs with min_pts = 3; 2 borders both
        let pts = [(0.0, 0.0), (0.9, 0.0), (1.8, 0.0), (2.7, 0.0), (3.6, 0.0)];
        let d = matrix_from(&pts);
        let run = dbscan(5, |i, j| d[i][j], 1.0, 3);
        assert_eq!(run.core, vec![false, true, true, true, false]);
        assert_eq!(run.labels, vec![0, 0, 0, 0, 0]);
        let run = dbscan(5, |i, j| d[i][j], 0.95, 3);
        assert_eq!(run.labels[0], run.labels[1]);
    }

    #[test]
    fn clustering_of_single_structure() {
        let mut model = SpcModel::new(SpcParams::aggregation()).unwrap();
        model.update(&[1.0, 1.0]).unwrap();
        let labels = get_clustering(&model);
        assert_eq!(labels.len(), 1);
        assert_eq!(labels.iter().next().unwrap().1, 0);
    }

    #[test]
    fn far_field_goes_to_widest_structure() {
        let m = Fuzzifier::new(1.5).unwrap();
        let narrow = Structure::new(Vector::from_vec(vec![1.0, 0.0]), Spread::identity(2), 1.0, 1);
        let wide = Structure::new(Vector::from_vec(vec![-1.0, 0.0]), Spread::isotropic(2, 25.0), 1.0, 9);
        let structures = vec![(StructureId(0), narrow), (StructureId(1), wide)];
        let labels = cluster_structures(&structures, m, 0.95, 2);
        let far = Vector::from_vec(vec![60.0, 0.0]);
        let a = assign_point(structures.iter().map(|(i, s)| (*i, s)), &labels, &far, m).unwrap();
        assert_eq!(a.structure, StructureId(1));
        // at a mean the own structure wins with distance zero
        let at = Vector::from_vec(vec![1.0, 0.0]);
        let a = assign_point(structures.iter().map(|(i, s)| (*i, s)), &labels, &at, m).unwrap();
        assert_eq!((a.structure, a.distance), (StructureId(0), 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn core_partition_matches_brute_force(
            pts in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 1..=20),
            eps in 0.2f64..1.5,
            min_pts in 1usize..5,
        ) {
            let d = matrix_from(&pts);
            let run = dbscan(pts.len(), |i, j| d[i][j], eps, min_pts);
            let oracle = core_components(&d, eps, min_pts);
            for i in 0..pts.len() {
                prop_assert_eq!(run.core[i], oracle[i].is_some());
                for j in 0..pts.len() {
                    if let (Some(a), Some(b)) = (oracle[i], oracle[j]) {
                        prop_assert_eq!(a == b, run.labels[i] == run.labels[j]);
                    }
                }
            }
        }

        #[test]
        fn permutation_preserves_core_partition(
            pts in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 2..=16),
            shift in 1usize..16,
        ) {
            let n = pts.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let shuffled: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
            let (d1, d2) = (matrix_from(&pts), matrix_from(&shuffled));
            let a = dbscan(n, |i, j| d1[i][j], 0.8, 2);
            let b = dbscan(n, |i, j| d2[i][j], 0.8, 2);
            for x in 0..n {
                for y in 0..n {
                    let (px, py) = (perm[x], perm[y]);
                    if a.core[px] && a.core[py] {
                        prop_assert_eq!(a.labels[px] == a.labels[py], b.labels[x] == b.labels[y]);
                    }
                }
            }
        }

        #[test]
        fn close_structures_share_labels(
            means in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..10),
        ) {
            let m = Fuzzifier::new(1.5).unwrap();
            let structures: Vec<_> = means
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| {
                    (StructureId(i as u64), Structure::new(Vector::from_vec(vec![a, b]), Spread::identity(2), 1.0, 1))
                })
                .collect();
            let labels = cluster_structures(&structures, m, 0.95, 2);
            prop_assert_eq!(labels.len(), structures.len());
            for (i, si) in &structures {
                for (j, sj) in &structures {
                    if structure_distance(si, sj, m).unwrap() < 0.95 {
                        prop_assert_eq!(labels.get(*i), labels.get(*j));
                    }
                }
            }
        }
    }
}
