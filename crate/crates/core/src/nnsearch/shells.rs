//! Expanding shells of lattice translates of a motif.

use crate::lattice::Lattice;

/// All integer vectors `c ∈ ℤⁿ` with `‖c‖∞ = s`, in lexicographic order.
pub fn shell_coefficients(dim: usize, s: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut c = vec![-s; dim];
    loop {
        if s == 0 || c.iter().any(|x| x.abs() == s) {
            out.push(c.clone());
        }
        // odometer increment over the box [-s, s]^dim
        let mut t = dim;
        loop {
            if t == 0 {
                return out;
            }
            t -= 1;
            if c[t] < s {
                c[t] += 1;
                break;
            }
            c[t] = -s;
        }
    }
}

/// Emits the motif translated by successive coefficient shells.
///
/// After shell `s` has been emitted, every point of the periodic set within
/// `s · h_min` of a motif point (fractional coordinates in `[0,1)`) has been
/// emitted, where `h_min` is the smallest distance between opposite facets of
/// the unit cell.
#[derive(Debug, Clone)]
pub struct ShellGenerator {
    lattice: Lattice,
    motif_cartesian: Vec<Vec<f64>>,
    min_height: f64,
    next_index: i64,
}

impl ShellGenerator {
    pub fn new(lattice: Lattice, motif_cartesian: Vec<Vec<f64>>) -> Self {
        let min_height = lattice.min_height();
        ShellGenerator { lattice, motif_cartesian, min_height, next_index: 0 }
    }

    /// Index of the last emitted shell, or `None` before the first call.
    pub fn emitted_shell_index(&self) -> Option<i64> {
        (self.next_index > 0).then_some(self.next_index - 1)
    }

    /// Radius within which the emitted cloud is complete around every motif point.
    pub fn covered_radius(&self) -> f64 {
        match self.emitted_shell_index() {
            Some(s) => s as f64 * self.min_height,
            None => 0.0,
        }
    }

    pub fn min_height(&self) -> f64 {
        self.min_height
    }

    pub fn motif_cartesian(&self) -> &[Vec<f64>] {
        &self.motif_cartesian
    }

    /// Emits the next shell: every motif point shifted by every lattice vector
    /// whose coefficients have max-norm equal to the shell index. Shell 0 is the motif.
    pub fn next_shell(&mut self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        self.next_shell_into(&mut out);
        out.chunks(self.lattice.dim()).map(|c| c.to_vec()).collect()
    }

    /// As [`next_shell`](Self::next_shell) but appends flat coordinates to `buf`.
    pub fn next_shell_into(&mut self, buf: &mut Vec<f64>) {
        let s = self.next_index;
        self.next_index += 1;
        let n = self.lattice.dim();
        for c in shell_coefficients(n, s) {
            let shift = self.lattice.lattice_vector(&c);
            for p in &self.motif_cartesian {
                buf.extend(p.iter().zip(&shift).map(|(x, v)| translate(*x, *v)));
            }
        }
    }
}

/// The single arithmetic step used to translate a coordinate; shared with oracles.
#[inline]
pub fn translate(x: f64, shift: f64) -> f64 {
    x + shift
}
