//! Block compressed-row matrices with dense `nb x nb` blocks.
//!
//! Block rows correspond to cells; the block pattern of a row is the cell
//! itself and its facet neighbours, sorted by index.

use alloc::vec::Vec;

use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCsr {
    block: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Block `b` occupies `values[b*nb*nb..(b+1)*nb*nb]`, row-major.
    values: Vec<f64>,
}

/// Scalar CSR view, produced by [`BlockCsr::to_csr`].
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl BlockCsr {
    /// Zero matrix with the cell-neighbour block pattern of `mesh`.
    pub fn for_mesh(mesh: &Mesh, block: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(mesh.num_cells() + 1);
        let mut cols = Vec::with_capacity(4 * mesh.num_cells());
        row_ptr.push(0);
        for c in 0..mesh.num_cells() {
            let mut row: Vec<usize> = core::iter::once(c).chain(mesh.neighbours(c)).collect();
            row.sort_unstable();
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        let values = alloc::vec![0.0; cols.len() * block * block];
        BlockCsr {
            block,
            row_ptr,
            cols,
            values,
        }
    }

    /// Zero block-diagonal matrix.
    pub fn block_diagonal(blocks: usize, block: usize) -> Self {
        BlockCsr {
            block,
            row_ptr: (0..=blocks).collect(),
            cols: (0..blocks).collect(),
            values: alloc::vec![0.0; blocks * block * block],
        }
    }

    /// Dense `n x n` row-major matrix split into `block x block` tiles.
    pub fn from_dense(a: &[f64], n: usize, block: usize) -> Self {
        assert!(n.is_multiple_of(block) && a.len() == n * n);
        let nb = n / block;
        let mut row_ptr = Vec::with_capacity(nb + 1);
        let mut cols = Vec::with_capacity(nb * nb);
        let mut values = Vec::with_capacity(n * n);
        row_ptr.push(0);
        for bi in 0..nb {
            for bj in 0..nb {
                cols.push(bj);
                for i in 0..block {
                    for j in 0..block {
                        values.push(a[(bi * block + i) * n + bj * block + j]);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        BlockCsr {
            block,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn block_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.block_rows() * self.block
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }

    /// Mutable view of block `(row, col)`; panics if outside the pattern.
    pub fn block_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let s = self.slot(row, col).expect("block outside sparsity pattern");
        let bb = self.block * self.block;
        &mut self.values[s * bb..(s + 1) * bb]
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&[f64]> {
        let bb = self.block * self.block;
        self.slot(row, col).map(|s| &self.values[s * bb..(s + 1) * bb])
    }

    pub fn add_block(&mut self, row: usize, col: usize, block: &[f64]) {
        for (v, b) in self.block_mut(row, col).iter_mut().zip(block) {
            *v += b;
        }
    }

    /// Adds a block-diagonal matrix with the same block size in place.
    pub fn add_diagonal(&mut self, diag: &BlockCsr) {
        assert_eq!(diag.block, self.block);
        for r in 0..diag.block_rows() {
            if let Some(b) = diag.block(r, r) {
                let b = b.to_vec();
                self.add_block(r, r, &b);
            }
        }
    }

    /// Scalar entry `(i, j)`; zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let nb = self.block;
        self.block(i / nb, j / nb).map_or(0.0, |b| b[(i % nb) * nb + j % nb])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let nb = self.block;
        let bb = nb * nb;
        for r in 0..self.block_rows() {
            let out = &mut y[r * nb..(r + 1) * nb];
            out.iter_mut().for_each(|v| *v = 0.0);
            for s in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[s];
                let blk = &self.values[s * bb..(s + 1) * bb];
                let xc = &x[c * nb..(c + 1) * nb];
                for i in 0..nb {
                    let row = &blk[i * nb..(i + 1) * nb];
                    out[i] += row.iter().zip(xc).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.dim()];
        self.matvec(x, &mut y);
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    /// `max |A_ij - A_ji|` over the stored pattern.
    pub fn max_asymmetry(&self) -> f64 {
        let nb = self.block;
        let mut worst: f64 = 0.0;
        for r in 0..self.block_rows() {
            for s in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[s];
                let a = &self.values[s * nb * nb..(s + 1) * nb * nb];
                match self.block(c, r) {
                    Some(t) => {
                        for i in 0..nb {
                            for j in 0..nb {
                                worst = worst.max(libm::fabs(a[i * nb + j] - t[j * nb + i]));
                            }
                        }
                    }
                    None => worst = worst.max(a.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))),
                }
            }
        }
        worst
    }

    pub fn to_csr(&self) -> Csr {
        let nb = self.block;
        let n = self.dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..self.block_rows() {
            for i in 0..nb {
                for s in self.row_ptr[r]..self.row_ptr[r + 1] {
                    let c = self.cols[s];
                    for j in 0..nb {
                        col_idx.push(c * nb + j);
                        values.push(self.values[s * nb * nb + i * nb + j]);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Csr {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_and_matvec() {
        let mesh = Mesh::crisscross(1).unwrap();
        let mut a = BlockCsr::for_mesh(&mesh, 2);
        // each criss-cross triangle of a single square touches the two adjacent triangles
        assert_eq!(a.row_ptr, vec![0, 3, 6, 9, 12]);
        a.add_block(0, 1, &[1.0, 2.0, 3.0, 4.0]);
        a.add_block(1, 1, &[1.0, 0.0, 0.0, 1.0]);
        let y = a.mul(&[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&y[..4], &[3.0, 7.0, 1.0, 1.0]);
        assert_eq!(a.get(1, 3), 4.0);
        assert_eq!(a.get(0, 4), 0.0);
        assert!(a.max_asymmetry() > 0.0);
        let csr = a.to_csr();
        assert_eq!(csr.n, 8);
        assert_eq!(csr.row_ptr[1], 6);
    }

    #[test]
    fn dense_roundtrip() {
        let d: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let a = BlockCsr::from_dense(&d, 4, 2);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), d[i * 4 + j]);
            }
        }
    }
}
