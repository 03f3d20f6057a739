//! Selection of local-minimal-width bands.

use crate::bandtree::{BandId, BandTree};
use num_rational::Ratio;

/// Read access to a tree of bands with widths. Implemented by [`BandTree`];
/// tests implement it for synthetic trees.
pub trait BandGraph {
    fn band_count(&self) -> usize;
    fn root(&self) -> BandId;
    fn father(&self, id: BandId) -> Option<BandId>;
    fn sons(&self, id: BandId) -> &[BandId];
    fn width(&self, id: BandId) -> Ratio<u64>;
}

impl BandGraph for BandTree {
    fn band_count(&self) -> usize {
        self.len()
    }

    fn root(&self) -> BandId {
        BandTree::root(self)
    }

    fn father(&self, id: BandId) -> Option<BandId> {
        self.band(id).father()
    }

    fn sons(&self, id: BandId) -> &[BandId] {
        self.band(id).sons()
    }

    fn width(&self, id: BandId) -> Ratio<u64> {
        self.band(id).width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LmwOptions {
    /// Never report the root (the dark background).
    pub exclude_root: bool,
    /// Additionally require a strictly wider neighbor, so plateaus of
    /// equal-width neighbors do not all qualify.
    pub strict: bool,
}

impl Default for LmwOptions {
    fn default() -> Self {
        Self {
            exclude_root: true,
            strict: false,
        }
    }
}

/// Bands whose width is `<=` the width of every neighbor (father and sons),
/// in increasing id order.
pub fn find_lmw_bands<G: BandGraph + ?Sized>(tree: &G, options: LmwOptions) -> Vec<BandId> {
    (0..tree.band_count())
        .filter(|&id| !(options.exclude_root && id == tree.root()))
        .filter(|&id| {
            let w = tree.width(id);
            let mut neighbors = tree.father(id).into_iter().chain(tree.sons(id).iter().copied());
            if options.strict {
                let mut wider = false;
                let minimal = neighbors.all(|k| {
                    let wk = tree.width(k);
                    wider |= w < wk;
                    w <= wk
                });
                minimal && wider
            } else {
                neighbors.all(|k| w <= tree.width(k))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Toy {
        father: Vec<Option<BandId>>,
        sons: Vec<Vec<BandId>>,
        width: Vec<Ratio<u64>>,
    }

    impl Toy {
        fn new(father: Vec<Option<BandId>>, width: Vec<Ratio<u64>>) -> Self {
            let mut sons = vec![vec![]; father.len()];
            for (i, f) in father.iter().enumerate() {
                if let Some(f) = f {
                    sons[*f].push(i);
                }
            }
            Toy { father, sons, width }
        }
    }

    impl BandGraph for Toy {
        fn band_count(&self) -> usize {
            self.father.len()
        }
        fn root(&self) -> BandId {
            0
        }
        fn father(&self, id: BandId) -> Option<BandId> {
            self.father[id]
        }
        fn sons(&self, id: BandId) -> &[BandId] {
            &self.sons[id]
        }
        fn width(&self, id: BandId) -> Ratio<u64> {
            self.width[id]
        }
    }

    fn w(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn chain_has_unique_minimum() {
        let t = Toy::new(
            vec![None, Some(0), Some(1), Some(2)],
            vec![w(8, 1), w(5, 1), w(2, 1), w(4, 1)],
        );
        assert_eq!(find_lmw_bands(&t, LmwOptions::default()), vec![2]);
    }

    #[test]
    fn fig2_topology() {
        // 0 Root, 1 B1, 2 B2, 3 B3, 4 B21, 5 B22, 6 B211, 7 B212
        let father = vec![None, Some(0), Some(0), Some(0), Some(2), Some(2), Some(4), Some(4)];
        let widths = vec![w(9, 1), w(3, 1), w(4, 1), w(5, 1), w(5, 2), w(6, 5), w(4, 1), w(1, 1)];
        let t = Toy::new(father, widths);
        // B212 and B22 qualify; so do the leaves B1 and B3, which only touch the root
        assert_eq!(find_lmw_bands(&t, LmwOptions::default()), vec![1, 3, 5, 7]);
    }

    #[test]
    fn equal_widths() {
        let t = Toy::new(vec![None, Some(0), Some(1), Some(1)], vec![w(1, 1); 4]);
        assert_eq!(find_lmw_bands(&t, LmwOptions::default()), vec![1, 2, 3]);
        assert_eq!(
            find_lmw_bands(
                &t,
                LmwOptions {
                    exclude_root: false,
                    strict: false
                }
            ),
            vec![0, 1, 2, 3]
        );
        assert!(find_lmw_bands(
            &t,
            LmwOptions {
                exclude_root: true,
                strict: true
            }
        )
        .is_empty());
    }
}
