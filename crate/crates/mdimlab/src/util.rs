//! Small shared helpers.

/// Start index and length of the tail window over `len` computed values:
/// the last 10% of the indices, at least 10 (or everything if fewer exist).
pub(crate) fn tail_window(len: usize) -> std::ops::Range<usize> {
    let size = ((len as f64 * 0.1).ceil() as usize).max(10.min(len));
    (len - size)..len
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Absolute tolerance applied to real-valued validation comparisons.
pub(crate) const ABS_TOL: f64 = 1e-12;

/// A value within this many cell widths below a mesh line is snapped onto it.
pub(crate) const MESH_SNAP: f64 = 1e-9;

/// Mesh cell index of `y` for cells of width `eps` anchored at 0.
pub(crate) fn mesh_index(y: f64, eps: f64) -> i64 {
    (y / eps + MESH_SNAP).floor() as i64
}

/// Set of mesh cells in `[0,1]^n`, packed into `u128` keys when they fit.
pub(crate) enum CellSet {
    Packed { bits: u32, set: rustc_hash::FxHashSet<u128> },
    Wide(rustc_hash::FxHashSet<Box<[u32]>>),
}

impl CellSet {
    /// Cell indices per axis are below `cells_per_axis`.
    pub(crate) fn new(n: usize, cells_per_axis: u64) -> Self {
        let bits = (64 - cells_per_axis.max(2).saturating_sub(1).leading_zeros()).max(1);
        if bits as usize * n <= 128 {
            CellSet::Packed { bits, set: Default::default() }
        } else {
            CellSet::Wide(Default::default())
        }
    }

    fn pack(bits: u32, idx: &[u32]) -> u128 {
        idx.iter().fold(0u128, |acc, &i| (acc << bits) | i as u128)
    }

    pub(crate) fn insert(&mut self, idx: &[u32]) -> bool {
        match self {
            CellSet::Packed { bits, set } => set.insert(Self::pack(*bits, idx)),
            CellSet::Wide(set) => {
                if set.contains(idx) {
                    false
                } else {
                    set.insert(idx.into())
                }
            }
        }
    }

    pub(crate) fn contains(&self, idx: &[u32]) -> bool {
        match self {
            CellSet::Packed { bits, set } => set.contains(&Self::pack(*bits, idx)),
            CellSet::Wide(set) => set.contains(idx),
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            CellSet::Packed { set, .. } => set.len(),
            CellSet::Wide(set) => set.len(),
        }
    }

    /// All cells, each as an index vector, sorted.
    pub(crate) fn sorted_cells(&self, n: usize) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = match self {
            CellSet::Packed { bits, set } => set
                .iter()
                .map(|&key| {
                    let mask = (1u128 << *bits) - 1;
                    (0..n).rev().map(|j| ((key >> (*bits as usize * j)) & mask) as u32).collect()
                })
                .collect(),
            CellSet::Wide(set) => set.iter().map(|k| k.to_vec()).collect(),
        };
        out.sort();
        out
    }
}

/// Number of mesh cells of width `eps` needed along `[0,1]`; the last one is clipped.
pub(crate) fn cells_per_unit(eps: f64) -> u64 {
    ((1.0 / eps - MESH_SNAP).ceil() as u64).max(1)
}

/// Cell index of `y in [0,1]`, with 1 clamped into the last cell.
pub(crate) fn unit_cell(y: f64, eps: f64, m: u64) -> u32 {
    mesh_index(y, eps).clamp(0, m as i64 - 1) as u32
}
