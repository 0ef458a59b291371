//! Dense GF(2) linear algebra on bit-packed rows.

use rand::RngCore;

/// A row of `n` bits packed into 64-bit words, bit `j` at word `j / 64`,
/// position `j % 64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut row = BitRow::zeros(len);
        for &j in ones {
            row.flip(j);
        }
        row
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut row = BitRow::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                row.set(j, true);
            }
        }
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, j: usize) -> bool {
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn set(&mut self, j: usize, v: bool) {
        let mask = 1u64 << (j % 64);
        if v {
            self.words[j / 64] |= mask;
        } else {
            self.words[j / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, j: usize) {
        self.words[j / 64] ^= 1u64 << (j % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of the inner product.
    pub fn dot(&self, other: &BitRow) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|j| u8::from(self.get(j))).collect()
    }
}

/// Reduced row echelon form of a matrix, kept for repeated null-space sampling.
#[derive(Debug, Clone)]
pub struct NullSpace {
    cols: usize,
    /// Nonzero rows of the RREF, paired with their pivot column.
    rows: Vec<(usize, BitRow)>,
    free: Vec<usize>,
}

impl NullSpace {
    /// Gaussian elimination over GF(2).
    pub fn new(matrix: &[BitRow], cols: usize) -> Self {
        let mut rows: Vec<BitRow> = matrix.to_vec();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        rows.truncate(rank);
        let mut is_pivot = vec![false; cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        NullSpace {
            cols,
            rows: pivots.into_iter().zip(rows).collect(),
            free: (0..cols).filter(|&j| !is_pivot[j]).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Dimension of the null space.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// A uniform element of the null space: free variables uniform, pivot
    /// variables solved.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> BitRow {
        let mut x = BitRow::zeros(self.cols);
        let mut buf = 0u64;
        for (k, &j) in self.free.iter().enumerate() {
            if k % 64 == 0 {
                buf = rng.next_u64();
            }
            x.set(j, (buf >> (k % 64)) & 1 == 1);
        }
        // Each RREF row touches its own pivot and free columns only, and the
        // pivots of x are still zero here.
        let solved: Vec<(usize, bool)> = self.rows.iter().map(|(p, row)| (*p, row.dot(&x))).collect();
        for (p, v) in solved {
            x.set(p, v);
        }
        x
    }
}
