//! Fourier transforms and spectral operators on the unit torus.
//!
//! Real fields are transformed through a packed half-spectrum (r2c along the
//! second axis, then full c2c along the first), which roughly halves the
//! transform cost relative to a full complex 2D FFT. All Fourier-multiplier
//! operators act diagonally on that packed layout.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField, VectorField};
use crate::grid::Grid;

/// Coordinate axis selector (x1 is the slow/row index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

type C = Complex<f64>;

/// Plans, wavenumber tables, and scratch space for one grid size.
/// Not shared between threads; create one per thread or per owner.
pub(crate) struct Engine {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// 2*pi*m for each full transform index (index n/2 is mode -n/2).
    k_full: Vec<f64>,
    /// Same, with the Nyquist index zeroed; used for odd (i*k) multipliers.
    k_deriv: Vec<f64>,
    /// 1.0 where max(|m1|,|m2|) <= n/3, else 0.0, on the packed layout.
    dealias_mask: Vec<f64>,
    row_real: Vec<f64>,
    buf_a: Vec<C>,
    buf_b: Vec<C>,
    scratch: Vec<C>,
}

impl Engine {
    pub(crate) fn new(grid: Grid) -> Self {
        let n = grid.n();
        let half = n / 2;
        let mut rplanner = RealFftPlanner::<f64>::new();
        let r2c = rplanner.plan_fft_forward(n);
        let c2r = rplanner.plan_fft_inverse(n);
        let mut cplanner = FftPlanner::<f64>::new();
        let fwd = cplanner.plan_fft_forward(n);
        let inv = cplanner.plan_fft_inverse(n);

        let k_full: Vec<f64> = (0..n).map(|i| grid.wavenumber(i)).collect();
        let mut k_deriv = k_full.clone();
        k_deriv[half] = 0.0;

        let mut dealias_mask = vec![0.0; (half + 1) * n];
        for j2 in 0..=half {
            let m2 = if j2 == half { -(half as i64) } else { j2 as i64 };
            for j1 in 0..n {
                if grid.mode_resolved(grid.mode(j1), m2) {
                    dealias_mask[j2 * n + j1] = 1.0;
                }
            }
        }

        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len())
            .max(r2c.get_scratch_len())
            .max(c2r.get_scratch_len());

        Engine {
            n,
            r2c,
            c2r,
            fwd,
            inv,
            k_full,
            k_deriv,
            dealias_mask,
            row_real: vec![0.0; n],
            buf_a: vec![C::new(0.0, 0.0); n * (half + 1)],
            buf_b: vec![C::new(0.0, 0.0); (half + 1) * n],
            scratch: vec![C::new(0.0, 0.0); scratch_len],
        }
    }

    #[inline]
    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn k_full(&self) -> &[f64] {
        &self.k_full
    }

    pub(crate) fn k_deriv(&self) -> &[f64] {
        &self.k_deriv
    }

    /// Forward transform of real samples into the packed half-spectrum,
    /// normalized so the (0,0) entry is the field mean.
    pub(crate) fn forward(&mut self, src: &[f64], dst: &mut [C]) {
        let n = self.n;
        // r2c along axis 2, one contiguous row at a time; stage each row
        // since the r2c pass consumes its input.
        for i1 in 0..n {
            self.row_real.copy_from_slice(&src[i1 * n..(i1 + 1) * n]);
            let out = &mut self.buf_a[i1 * (n / 2 + 1)..(i1 + 1) * (n / 2 + 1)];
            self.r2c
                .process_with_scratch(&mut self.row_real, out, &mut self.scratch)
                .expect("r2c transform");
        }
        self.forward_tail(dst);
    }

    /// Forward transform that treats `src` as scratch (contents destroyed).
    pub(crate) fn forward_consuming(&mut self, src: &mut [f64], dst: &mut [C]) {
        let n = self.n;
        for i1 in 0..n {
            let out = &mut self.buf_a[i1 * (n / 2 + 1)..(i1 + 1) * (n / 2 + 1)];
            self.r2c
                .process_with_scratch(&mut src[i1 * n..(i1 + 1) * n], out, &mut self.scratch)
                .expect("r2c transform");
        }
        self.forward_tail(dst);
    }

    fn forward_tail(&mut self, dst: &mut [C]) {
        let n = self.n;
        let half = n / 2;
        debug_assert_eq!(dst.len(), (half + 1) * n);
        // Transpose [i1][j2] -> [j2][i1] and apply the 1/n^2 normalization.
        let scale = 1.0 / (n * n) as f64;
        transpose_scaled(&self.buf_a, n, half + 1, dst, scale);
        // c2c along axis 1 on each packed row.
        for j2 in 0..=half {
            let row = &mut dst[j2 * n..(j2 + 1) * n];
            self.fwd.process_with_scratch(row, &mut self.scratch);
        }
    }

    /// Inverse transform; consumes (overwrites) the packed input.
    pub(crate) fn inverse_consuming(&mut self, src: &mut [C], dst: &mut [f64]) {
        let n = self.n;
        let half = n / 2;
        debug_assert_eq!(src.len(), (half + 1) * n);
        debug_assert_eq!(dst.len(), n * n);

        for j2 in 0..=half {
            let row = &mut src[j2 * n..(j2 + 1) * n];
            self.inv.process_with_scratch(row, &mut self.scratch);
        }

        // Transpose [j2][i1] -> [i1][j2].
        transpose_scaled(src, half + 1, n, &mut self.buf_a, 1.0);

        // The j2 = 0 and j2 = n/2 bins of each row are mathematically real
        // for a real field; drop their round-off imaginary residue so the
        // c2r completion is exact. buf_a is scratch, so c2r may consume it.
        for i1 in 0..n {
            let row = &mut self.buf_a[i1 * (half + 1)..(i1 + 1) * (half + 1)];
            row[0].im = 0.0;
            row[half].im = 0.0;
            self.c2r
                .process_with_scratch(row, &mut dst[i1 * n..(i1 + 1) * n], &mut self.scratch)
                .expect("c2r transform");
        }
    }

    /// Non-consuming inverse (copies into an internal buffer first).
    pub(crate) fn inverse(&mut self, src: &[C], dst: &mut [f64]) {
        self.buf_b.copy_from_slice(src);
        let mut tmp = std::mem::take(&mut self.buf_b);
        self.inverse_consuming(&mut tmp, dst);
        self.buf_b = tmp;
    }

    /// Forward transform followed by the 2/3 mask; the c2c pass skips rows
    /// the mask would zero anyway. `src` is treated as scratch.
    pub(crate) fn forward_dealiased_consuming(&mut self, src: &mut [f64], dst: &mut [C]) {
        let n = self.n;
        let half = n / 2;
        let band = n / 3;
        for i1 in 0..n {
            let out = &mut self.buf_a[i1 * (half + 1)..(i1 + 1) * (half + 1)];
            self.r2c
                .process_with_scratch(&mut src[i1 * n..(i1 + 1) * n], out, &mut self.scratch)
                .expect("r2c transform");
        }
        let scale = 1.0 / (n * n) as f64;
        transpose_scaled(&self.buf_a, n, half + 1, dst, scale);
        for j2 in 0..=band {
            let row = &mut dst[j2 * n..(j2 + 1) * n];
            self.fwd.process_with_scratch(row, &mut self.scratch);
            // Cut columns |m1| > band: indices band+1 ..= n-band-1 form one
            // contiguous span.
            for c in row[band + 1..n - band].iter_mut() {
                *c = C::new(0.0, 0.0);
            }
        }
        for c in dst[(band + 1) * n..].iter_mut() {
            *c = C::new(0.0, 0.0);
        }
    }

    /// Inverse for spectra known to vanish on rows j2 > n/3 (e.g. dealiased
    /// products); skips the c2c pass on those rows.
    pub(crate) fn inverse_consuming_banded(&mut self, src: &mut [C], dst: &mut [f64]) {
        let n = self.n;
        let half = n / 2;
        let band = n / 3;
        for j2 in 0..=band {
            let row = &mut src[j2 * n..(j2 + 1) * n];
            self.inv.process_with_scratch(row, &mut self.scratch);
        }
        debug_assert!(src[(band + 1) * n..].iter().all(|c| c.norm_sqr() == 0.0));
        transpose_scaled(src, half + 1, n, &mut self.buf_a, 1.0);
        for i1 in 0..n {
            let row = &mut self.buf_a[i1 * (half + 1)..(i1 + 1) * (half + 1)];
            row[0].im = 0.0;
            row[half].im = 0.0;
            self.c2r
                .process_with_scratch(row, &mut dst[i1 * n..(i1 + 1) * n], &mut self.scratch)
                .expect("c2r transform");
        }
    }

    /// Phase factor (-1)^(m1+m2) converting between index-origin and
    /// physical-origin (x = -1/2 + j/n) conventions. Involutive.
    pub(crate) fn apply_phys_sign(&self, packed: &mut [C]) {
        let n = self.n;
        let half = n / 2;
        for j2 in 0..=half {
            let row = &mut packed[j2 * n..(j2 + 1) * n];
            for (j1, c) in row.iter_mut().enumerate() {
                if (j1 + j2) % 2 == 1 {
                    *c = -*c;
                }
            }
        }
    }

    /// Multiply by i*k along the given axis (derivative symbol, Nyquist
    /// zeroed).
    pub(crate) fn mul_ik(&self, packed: &mut [C], axis: Axis) {
        let n = self.n;
        let half = n / 2;
        match axis {
            Axis::X1 => {
                for j2 in 0..=half {
                    let row = &mut packed[j2 * n..(j2 + 1) * n];
                    for j1 in 0..n {
                        let k = self.k_deriv[j1];
                        let c = row[j1];
                        row[j1] = C::new(-k * c.im, k * c.re);
                    }
                }
            }
            Axis::X2 => {
                for j2 in 0..=half {
                    let k = if j2 == half { 0.0 } else { self.k_full[j2] };
                    let row = &mut packed[j2 * n..(j2 + 1) * n];
                    for c in row.iter_mut() {
                        *c = C::new(-k * c.im, k * c.re);
                    }
                }
            }
        }
    }

    /// Multiply by a real diagonal symbol s(k1, k2) built per packed entry.
    pub(crate) fn mul_symbol(&self, packed: &mut [C], sym: impl Fn(f64, f64) -> f64) {
        let n = self.n;
        let half = n / 2;
        for j2 in 0..=half {
            // k_full[n/2] is already the Nyquist wavenumber -pi*n.
            let k2 = self.k_full[j2];
            let row = &mut packed[j2 * n..(j2 + 1) * n];
            for j1 in 0..n {
                let s = sym(self.k_full[j1], k2);
                row[j1] *= s;
            }
        }
    }

    /// Zero every mode with max(|m1|,|m2|) > n/3.
    pub(crate) fn apply_dealias(&self, packed: &mut [C]) {
        for (c, &m) in packed.iter_mut().zip(&self.dealias_mask) {
            *c *= m;
        }
    }

    pub(crate) fn dealias_mask(&self) -> &[f64] {
        &self.dealias_mask
    }
}

/// dst[c * rows + r] = scale * src[r * cols + c], blocked for locality with
/// sequential writes inside each block.
fn transpose_scaled(src: &[C], rows: usize, cols: usize, dst: &mut [C], scale: f64) {
    const B: usize = 16;
    for rb in (0..rows).step_by(B) {
        let rend = (rb + B).min(rows);
        for cb in (0..cols).step_by(B) {
            let cend = (cb + B).min(cols);
            for c in cb..cend {
                for r in rb..rend {
                    dst[c * rows + r] = src[r * cols + c] * scale;
                }
            }
        }
    }
}

thread_local! {
    static ENGINES: RefCell<HashMap<usize, Engine>> = RefCell::new(HashMap::new());
}

pub(crate) fn with_engine<R>(grid: Grid, f: impl FnOnce(&mut Engine) -> R) -> R {
    ENGINES.with(|map| {
        let mut map = map.borrow_mut();
        let eng = map.entry(grid.n()).or_insert_with(|| Engine::new(grid));
        f(eng)
    })
}

/// Forward transform. Rejects non-finite samples.
pub fn to_spectral(f: &RealField) -> Result<SpectralField> {
    if !f.is_finite() {
        return Err(Error::NonFinite { context: "to_spectral input" });
    }
    Ok(with_engine(f.grid(), |eng| {
        let mut out = SpectralField::zeros(f.grid());
        eng.forward(f.values(), out.packed_mut());
        eng.apply_phys_sign(out.packed_mut());
        out
    }))
}

/// Inverse transform back to real samples.
pub fn to_real(s: &SpectralField) -> RealField {
    with_engine(s.grid(), |eng| {
        let mut tmp = s.packed().to_vec();
        eng.apply_phys_sign(&mut tmp);
        let mut out = RealField::zeros(s.grid());
        eng.inverse_consuming(&mut tmp, out.values_mut());
        out
    })
}

/// Spectral partial derivative along one axis.
pub fn derivative(f: &RealField, axis: Axis) -> RealField {
    with_engine(f.grid(), |eng| {
        let mut spec = vec![C::new(0.0, 0.0); SpectralField::packed_len(f.grid())];
        eng.forward(f.values(), &mut spec);
        eng.mul_ik(&mut spec, axis);
        let mut out = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, out.values_mut());
        out
    })
}

/// grad f = (d1 f, d2 f).
pub fn gradient(f: &RealField) -> VectorField {
    with_engine(f.grid(), |eng| {
        let len = SpectralField::packed_len(f.grid());
        let mut spec = vec![C::new(0.0, 0.0); len];
        eng.forward(f.values(), &mut spec);
        let mut d1 = spec.clone();
        eng.mul_ik(&mut d1, Axis::X1);
        let mut gx = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut d1, gx.values_mut());
        eng.mul_ik(&mut spec, Axis::X2);
        let mut gy = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, gy.values_mut());
        VectorField { x: gx, y: gy }
    })
}

/// perp-grad f = (d2 f, -d1 f).
pub fn perp_gradient(f: &RealField) -> VectorField {
    let g = gradient(f);
    VectorField { x: g.y, y: g.x.scale(-1.0) }
}

/// div v = d1 v1 + d2 v2.
pub fn divergence(v: &VectorField) -> RealField {
    with_engine(v.grid(), |eng| {
        let len = SpectralField::packed_len(v.grid());
        let mut s1 = vec![C::new(0.0, 0.0); len];
        let mut s2 = vec![C::new(0.0, 0.0); len];
        eng.forward(v.x.values(), &mut s1);
        eng.forward(v.y.values(), &mut s2);
        eng.mul_ik(&mut s1, Axis::X1);
        eng.mul_ik(&mut s2, Axis::X2);
        for (a, b) in s1.iter_mut().zip(&s2) {
            *a += b;
        }
        let mut out = RealField::zeros(v.grid());
        eng.inverse_consuming(&mut s1, out.values_mut());
        out
    })
}

/// rot v = d2 v1 - d1 v2 (scalar curl).
pub fn rot(v: &VectorField) -> RealField {
    with_engine(v.grid(), |eng| {
        let len = SpectralField::packed_len(v.grid());
        let mut s1 = vec![C::new(0.0, 0.0); len];
        let mut s2 = vec![C::new(0.0, 0.0); len];
        eng.forward(v.x.values(), &mut s1);
        eng.forward(v.y.values(), &mut s2);
        eng.mul_ik(&mut s1, Axis::X2);
        eng.mul_ik(&mut s2, Axis::X1);
        for (a, b) in s1.iter_mut().zip(&s2) {
            *a -= b;
        }
        let mut out = RealField::zeros(v.grid());
        eng.inverse_consuming(&mut s1, out.values_mut());
        out
    })
}

/// Laplacian (multiplication by -|k|^2).
pub fn laplacian(f: &RealField) -> RealField {
    with_engine(f.grid(), |eng| {
        let mut spec = vec![C::new(0.0, 0.0); SpectralField::packed_len(f.grid())];
        eng.forward(f.values(), &mut spec);
        eng.mul_symbol(&mut spec, |k1, k2| -(k1 * k1 + k2 * k2));
        let mut out = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, out.values_mut());
        out
    })
}

/// Solves lap(g) = f with zero-mean g; the input mean is discarded (with a
/// warning when it is not negligible) and the (0,0) mode of g is set to 0.
pub fn inv_laplacian_zero_mean(f: &RealField) -> RealField {
    with_engine(f.grid(), |eng| {
        let mut spec = vec![C::new(0.0, 0.0); SpectralField::packed_len(f.grid())];
        eng.forward(f.values(), &mut spec);
        let mean = spec[0].re;
        let norm = f.l2_norm();
        if mean.abs() > 1e-10 * norm.max(f64::MIN_POSITIVE) {
            eprintln!(
                "inv_laplacian_zero_mean: discarding non-zero mean {mean:.3e} (|f|_L2 = {norm:.3e})"
            );
        }
        eng.mul_symbol(&mut spec, |k1, k2| {
            let k2n = k1 * k1 + k2 * k2;
            if k2n == 0.0 {
                0.0
            } else {
                -1.0 / k2n
            }
        });
        let mut out = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, out.values_mut());
        out
    })
}

/// (-lap)^{-1/2}: multiplier 1/|k|, mean mode mapped to zero.
pub(crate) fn inv_sqrt_laplacian(f: &RealField) -> RealField {
    with_engine(f.grid(), |eng| {
        let mut spec = vec![C::new(0.0, 0.0); SpectralField::packed_len(f.grid())];
        eng.forward(f.values(), &mut spec);
        eng.mul_symbol(&mut spec, |k1, k2| {
            let kk = k1 * k1 + k2 * k2;
            if kk == 0.0 {
                0.0
            } else {
                1.0 / kk.sqrt()
            }
        });
        let mut out = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, out.values_mut());
        out
    })
}

/// Composition of Riesz transforms R_i R_j: multiplier -k_i k_j / |k|^2,
/// with the mean mode mapped to zero.
pub fn riesz_composition(i: Axis, j: Axis, f: &RealField) -> RealField {
    with_engine(f.grid(), |eng| {
        let mut spec = vec![C::new(0.0, 0.0); SpectralField::packed_len(f.grid())];
        eng.forward(f.values(), &mut spec);
        mul_riesz(eng, &mut spec, i, j);
        let mut out = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, out.values_mut());
        out
    })
}

/// R_i R_j multiplier -k_i k_j / |k|^2 built from the derivative
/// wavenumbers, so the unpaired Nyquist line is dropped exactly as in
/// `derivative`; the two realizations of the commutator then agree for
/// arbitrary (not just band-limited) sample data.
pub(crate) fn mul_riesz(eng: &Engine, spec: &mut [C], i: Axis, j: Axis) {
    let n = eng.n();
    let half = n / 2;
    let kd = eng.k_deriv();
    let kf = eng.k_full();
    let pick = |j1: usize, j2: usize, a: Axis| if a == Axis::X1 { kd[j1] } else { kd[j2] };
    for j2 in 0..=half {
        let k2f = kf[j2];
        for j1 in 0..n {
            let kk = kf[j1] * kf[j1] + k2f * k2f;
            let s = if kk == 0.0 {
                0.0
            } else {
                -pick(j1, j2, i) * pick(j1, j2, j) / kk
            };
            spec[j2 * n + j1] *= s;
        }
    }
}

/// 2/3-rule truncation: zero all modes with max(|m1|,|m2|) > n/3. Idempotent.
pub fn dealias(s: &SpectralField) -> SpectralField {
    with_engine(s.grid(), |eng| {
        let mut out = s.clone();
        eng.apply_dealias(out.packed_mut());
        out
    })
}

/// Round trip through the 2/3 mask in real space.
pub fn dealias_real(f: &RealField) -> RealField {
    with_engine(f.grid(), |eng| {
        let mut spec = vec![C::new(0.0, 0.0); SpectralField::packed_len(f.grid())];
        eng.forward(f.values(), &mut spec);
        eng.apply_dealias(&mut spec);
        let mut out = RealField::zeros(f.grid());
        eng.inverse_consuming(&mut spec, out.values_mut());
        out
    })
}

/// || grad f ||_{L^q} with the Euclidean pointwise magnitude.
pub fn grad_lq_norm(f: &RealField, q: f64) -> f64 {
    gradient(f).lp_norm(q)
}

/// H^1 norm: sqrt(||f||^2 + ||grad f||^2).
pub fn h1_norm(f: &RealField) -> f64 {
    let l2 = f.l2_norm();
    let g = gradient(f).l2_norm();
    (l2 * l2 + g * g).sqrt()
}
