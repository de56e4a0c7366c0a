use std::ops::Range;

/// A group of atoms moving together: a single particle or a delta-shock.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub position: T,
    pub mass: T,
    pub velocity: T,
    /// Indices of the constituent atoms, in position order.
    pub atoms: Range<usize>,
}

/// Index of the cluster containing atom `i`, for clusters that partition the atoms in order.
pub(crate) fn cluster_index<T>(clusters: &[Cluster<T>], atom: usize) -> Option<usize> {
    let j = clusters.partition_point(|c| c.atoms.end <= atom);
    (j < clusters.len() && clusters[j].atoms.contains(&atom)).then_some(j)
}
