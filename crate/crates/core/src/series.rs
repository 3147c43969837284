//! Dense truncated power series over a local ring.
//!
//! `Series1` keeps per-coefficient precision floors so that the few
//! operations which divide by p (the formal logarithm, the Lubin-Tate
//! solver) can account for lost digits; `Series2` never divides by p and
//! carries none. `FracSeries` extends `Series1` with explicit p-power
//! denominators for fraction-field coefficients (logs, exps).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{LocalRing, RingElem, Valuation};

// ---------------------------------------------------------------------------
// one variable
// ---------------------------------------------------------------------------

/// Truncated series c_0 + c_1 X + ... + c_D X^D. The constant term is
/// exposed separately from the X^1..X^D coefficients in the public API and
/// the JSON schema.
#[derive(Clone)]
pub struct Series1 {
    ring: Arc<LocalRing>,
    trunc: usize,
    /// (D+1) coefficient slots, each `ring.degree()` coordinates
    coeffs: Vec<u64>,
    /// knowledge floor (p-exponent) per slot, <= N
    prec: Vec<u32>,
}

impl Series1 {
    pub fn zero(ring: &Arc<LocalRing>, trunc: usize) -> Series1 {
        let n = ring.precision();
        Series1 {
            ring: Arc::clone(ring),
            trunc,
            coeffs: vec![0; (trunc + 1) * ring.degree()],
            prec: vec![n; trunc + 1],
        }
    }

    /// The series X.
    pub fn x(ring: &Arc<LocalRing>, trunc: usize) -> Series1 {
        let mut s = Series1::zero(ring, trunc);
        if trunc >= 1 {
            s.set_coeff(1, &ring.one());
        }
        s
    }

    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    fn width(&self) -> usize {
        self.ring.degree()
    }

    fn slot(&self, k: usize) -> &[u64] {
        &self.coeffs[k * self.width()..(k + 1) * self.width()]
    }

    pub fn coeff(&self, k: usize) -> RingElem {
        assert!(k <= self.trunc);
        self.ring.elem_from_coords(self.slot(k)).unwrap()
    }

    pub fn constant(&self) -> RingElem {
        self.coeff(0)
    }

    pub fn set_coeff(&mut self, k: usize, v: &RingElem) {
        assert!(k <= self.trunc);
        let w = self.width();
        self.coeffs[k * w..(k + 1) * w].copy_from_slice(v.coords());
    }

    pub fn prec_floor(&self, k: usize) -> u32 {
        self.prec[k]
    }

    pub fn set_prec_floor(&mut self, k: usize, floor: u32) {
        self.prec[k] = floor.min(self.ring.precision());
    }

    /// Lowest precision floor across all retained coefficients.
    pub fn min_prec_floor(&self) -> u32 {
        self.prec.iter().copied().min().unwrap_or(0)
    }

    pub fn is_degraded(&self) -> bool {
        self.prec.iter().any(|&f| f == 0)
    }

    fn slot_is_exact_zero(&self, k: usize) -> bool {
        self.prec[k] == self.ring.precision() && self.slot(k).iter().all(|&c| c == 0)
    }

    pub fn constant_is_zero(&self) -> bool {
        self.slot(0).iter().all(|&c| c == 0)
    }

    /// Largest index carrying information (nonzero value or degraded floor).
    fn top_index(&self) -> usize {
        (1..=self.trunc)
            .rev()
            .find(|&k| !self.slot_is_exact_zero(k))
            .unwrap_or(0)
    }

    fn check_shape(&self, other: &Series1) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::ShapeMismatch(format!(
                "truncation {} vs {}",
                self.trunc, other.trunc
            )));
        }
        if !(Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring) {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Series1) -> Result<Series1> {
        self.check_shape(other)?;
        let mut out = Series1::zero(&self.ring, self.trunc);
        out.coeffs = self.ring.add_slices(&self.coeffs, &other.coeffs);
        for k in 0..=self.trunc {
            let f = if self.slot_is_exact_zero(k) {
                other.prec[k]
            } else if other.slot_is_exact_zero(k) {
                self.prec[k]
            } else {
                self.prec[k].min(other.prec[k])
            };
            out.prec[k] = f;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Series1) -> Result<Series1> {
        self.check_shape(other)?;
        let mut out = Series1::zero(&self.ring, self.trunc);
        out.coeffs = self.ring.sub_slices(&self.coeffs, &other.coeffs);
        for k in 0..=self.trunc {
            let f = if self.slot_is_exact_zero(k) {
                other.prec[k]
            } else if other.slot_is_exact_zero(k) {
                self.prec[k]
            } else {
                self.prec[k].min(other.prec[k])
            };
            out.prec[k] = f;
        }
        Ok(out)
    }

    /// Truncated Cauchy product, precision floors propagated as the minimum
    /// over contributing term pairs (exact zeros do not contribute).
    pub fn mul(&self, other: &Series1) -> Result<Series1> {
        self.check_shape(other)?;
        let n = self.ring.precision();
        let d = self.trunc;
        let mut out = Series1::zero(&self.ring, d);
        let fast = self.ring.fast_accum();
        let grid = self.ring.raw_grid_len();
        let mut raw = vec![0u128; grid];
        let top_a = self.top_index();
        let top_b = other.top_index();
        for k in 0..=d {
            let mut floor = n;
            let mut any = false;
            if fast {
                raw.iter_mut().for_each(|c| *c = 0);
            }
            let mut acc: Option<Vec<u64>> = None;
            for i in 0..=k {
                let j = k - i;
                if (i > top_a && i > 0) || (j > top_b && j > 0) {
                    continue;
                }
                if self.slot_is_exact_zero(i) || other.slot_is_exact_zero(j) {
                    continue;
                }
                any = true;
                floor = floor.min(self.prec[i]).min(other.prec[j]);
                if fast {
                    self.ring.raw_accum(self.slot(i), other.slot(j), &mut raw);
                } else {
                    let prod = self.ring.mul_slices(self.slot(i), other.slot(j));
                    acc = Some(match acc {
                        None => prod,
                        Some(a) => self.ring.add_slices(&a, &prod),
                    });
                }
            }
            if any {
                let w = self.width();
                let res = if fast {
                    self.ring.finish_raw(&raw)
                } else {
                    acc.unwrap()
                };
                out.coeffs[k * w..(k + 1) * w].copy_from_slice(&res);
                out.prec[k] = floor;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &RingElem) -> Series1 {
        let mut out = self.clone();
        let w = self.width();
        for k in 0..=self.trunc {
            let prod = self.ring.mul_slices(self.slot(k), c.coords());
            out.coeffs[k * w..(k + 1) * w].copy_from_slice(&prod);
        }
        out
    }

    pub fn negate(&self) -> Series1 {
        let mut out = self.clone();
        out.coeffs = self.ring.neg_slice(&self.coeffs);
        out
    }

    /// Copy into a new truncation order (pad with exact zeros or drop tail).
    pub fn resize(&self, trunc: usize) -> Series1 {
        let mut out = Series1::zero(&self.ring, trunc);
        let w = self.width();
        for k in 0..=trunc.min(self.trunc) {
            out.coeffs[k * w..(k + 1) * w].copy_from_slice(self.slot(k));
            out.prec[k] = self.prec[k];
        }
        out
    }

    /// Composition outer(inner); `inner` must have zero constant term.
    pub fn compose(outer: &Series1, inner: &Series1) -> Result<Series1> {
        if !inner.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = inner.trunc;
        let ring = &inner.ring;
        let top = outer.top_index();
        let mut acc = Series1::zero(ring, d);
        if top >= 1 {
            let c = outer.coeff(top);
            acc.set_coeff(0, &c);
            acc.set_prec_floor(0, outer.prec[top]);
            for k in (1..top).rev() {
                acc = acc.mul(inner)?;
                let mut t = Series1::zero(ring, d);
                t.set_coeff(0, &outer.coeff(k));
                t.set_prec_floor(0, outer.prec[k]);
                acc = acc.add(&t)?;
            }
            acc = acc.mul(inner)?;
        }
        let mut t = Series1::zero(ring, d);
        t.set_coeff(0, &outer.constant());
        t.set_prec_floor(0, outer.prec[0]);
        acc.add(&t)
    }

    /// Smallest index 1 <= i <= D whose coefficient is a unit, or None.
    pub fn weierstrass_degree(&self) -> Result<Option<usize>> {
        for k in 1..=self.trunc {
            let slot = self.slot(k);
            let nonzero = slot.iter().any(|&c| c != 0);
            if self.prec[k] == 0 && !nonzero {
                // cannot even classify unit-vs-not
                return Err(Error::DegradedSeries);
            }
            if let Valuation::Finite(0) = self.ring.valuation_coords(slot) {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// Multiplicative inverse of a series with unit constant term.
    pub fn inverse(&self) -> Result<Series1> {
        let c0 = self.constant();
        let c0_inv = c0.inv().map_err(|_| Error::NonUnit)?;
        let d = self.trunc;
        let mut out = Series1::zero(&self.ring, d);
        out.set_coeff(0, &c0_inv);
        out.set_prec_floor(0, self.prec[0]);
        for k in 1..=d {
            // b_k = -c0^{-1} * sum_{j<k} b_j a_{k-j}
            let mut acc = self.ring.zero();
            let mut floor = self.prec[k].min(self.prec[0]);
            for j in 0..k {
                if out.slot_is_exact_zero(j) || self.slot_is_exact_zero(k - j) {
                    continue;
                }
                floor = floor.min(out.prec[j]).min(self.prec[k - j]);
                acc = &acc + &(&out.coeff(j) * &self.coeff(k - j));
            }
            let bk = -&(&acc * &c0_inv);
            out.set_coeff(k, &bk);
            out.set_prec_floor(k, floor);
        }
        Ok(out)
    }

    /// Compositional inverse: r with self(r) = r(self) = X up to D. Requires
    /// zero constant term and a unit linear coefficient.
    pub fn reversion(&self) -> Result<Series1> {
        if !self.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.trunc;
        let s1 = if d >= 1 { self.coeff(1) } else { self.ring.zero() };
        let s1_inv = s1.inv().map_err(|_| Error::NonUnitLinearTerm)?;
        let mut out = Series1::zero(&self.ring, d);
        if d == 0 {
            return Ok(out);
        }
        out.set_coeff(1, &s1_inv);
        out.set_prec_floor(1, self.prec[1]);
        // powers of self, built on demand: pow[j] = self^j
        // pows[j] = self^j for j >= 1; slot 0 is a never-read filler
        let mut pows: Vec<Series1> = vec![self.clone(), self.clone()];
        let mut s1_inv_pow = s1_inv.clone();
        for m in 2..=d {
            pows.push(pows[m - 1].mul(self)?);
            s1_inv_pow = &s1_inv_pow * &s1_inv;
            // coefficient of X^m in r(self) must vanish:
            //   sum_{j<=m} r_j [X^m](self^j) = 0, and [X^m](self^m) = s1^m
            let mut acc = self.ring.zero();
            let mut floor = self.ring.precision();
            for j in 1..m {
                let pj = &pows[j];
                if pj.slot_is_exact_zero(m) || out.slot_is_exact_zero(j) {
                    continue;
                }
                floor = floor.min(pj.prec[m]).min(out.prec[j]);
                acc = &acc + &(&out.coeff(j) * &pj.coeff(m));
            }
            let rm = -&(&acc * &s1_inv_pow);
            out.set_coeff(m, &rm);
            out.set_prec_floor(m, floor);
        }
        Ok(out)
    }

    /// Divide by X: requires zero constant term; shifts every coefficient
    /// down one slot (the top slot becomes an exact zero).
    pub fn shift_div_x(&self) -> Result<Series1> {
        if !self.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let mut out = Series1::zero(&self.ring, self.trunc);
        let w = self.width();
        for k in 1..=self.trunc {
            out.coeffs[(k - 1) * w..k * w].copy_from_slice(self.slot(k));
            out.prec[k - 1] = self.prec[k];
        }
        Ok(out)
    }

    /// Evaluate at a point of positive valuation.
    pub fn eval(&self, x: &RingElem) -> Result<RingElem> {
        match x.valuation() {
            Valuation::Finite(0) => {
                return Err(Error::ValidationError(
                    "series evaluation needs v(x) >= 1".into(),
                ))
            }
            _ => {}
        }
        let mut acc = self.ring.zero();
        for k in (1..=self.trunc).rev() {
            acc = &(&acc + &self.coeff(k)) * x;
        }
        Ok(&acc + &self.constant())
    }

    /// Coefficient-wise agreement within the joint precision floors.
    pub fn eq_within_floors(&self, other: &Series1) -> bool {
        if self.trunc != other.trunc {
            return false;
        }
        let p = self.ring.p();
        for k in 0..=self.trunc {
            let t = self.prec[k].min(other.prec[k]);
            let m = p.pow(t);
            for (a, b) in self.slot(k).iter().zip(other.slot(k)) {
                if a % m != b % m {
                    return false;
                }
            }
        }
        true
    }

    /// Exact coefficient equality (values and nothing else).
    pub fn eq_exact(&self, other: &Series1) -> bool {
        self.trunc == other.trunc && self.coeffs == other.coeffs
    }

    pub fn to_json(&self) -> Series1Json {
        Series1Json {
            d: self.trunc,
            constant: self.constant().coords_strings(),
            coeffs: (1..=self.trunc)
                .map(|k| self.coeff(k).coords_strings())
                .collect(),
            prec: self.prec[1..].to_vec(),
            constant_prec: self.prec[0],
        }
    }

    pub fn from_json(ring: &Arc<LocalRing>, json: &Series1Json) -> Result<Series1> {
        if json.coeffs.len() != json.d || json.prec.len() != json.d {
            return Err(Error::ShapeMismatch(
                "coeffs/prec length must equal D".into(),
            ));
        }
        let mut s = Series1::zero(ring, json.d);
        s.set_coeff(0, &RingElem::from_coord_strings(ring, &json.constant)?);
        s.set_prec_floor(0, json.constant_prec);
        for (k, c) in json.coeffs.iter().enumerate() {
            s.set_coeff(k + 1, &RingElem::from_coord_strings(ring, c)?);
            s.set_prec_floor(k + 1, json.prec[k]);
        }
        Ok(s)
    }
}

/// JSON carrier: `{"D":16,"const":[...],"coeffs":[[...],...],"prec":[...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Series1Json {
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "const")]
    pub constant: Vec<String>,
    pub coeffs: Vec<Vec<String>>,
    pub prec: Vec<u32>,
    #[serde(rename = "const_prec", default = "default_const_prec")]
    pub constant_prec: u32,
}

fn default_const_prec() -> u32 {
    u32::MAX
}

/// The `s_combine` entry point from the module contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineKind {
    Add,
    Mul,
}

pub fn s_combine1(a: &Series1, b: &Series1, kind: CombineKind) -> Result<Series1> {
    match kind {
        CombineKind::Add => a.add(b),
        CombineKind::Mul => a.mul(b),
    }
}

pub fn s_combine2(a: &Series2, b: &Series2, kind: CombineKind) -> Result<Series2> {
    match kind {
        CombineKind::Add => a.add(b),
        CombineKind::Mul => a.mul(b),
    }
}

// ---------------------------------------------------------------------------
// two variables
// ---------------------------------------------------------------------------

/// Total-degree truncated series in X, Y; triangular dense storage, no
/// precision floors (no operation here divides by p).
#[derive(Clone)]
pub struct Series2 {
    ring: Arc<LocalRing>,
    trunc: usize,
    coeffs: Vec<u64>,
}

fn tri_count(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

#[inline]
fn tri_idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

impl Series2 {
    pub fn zero(ring: &Arc<LocalRing>, trunc: usize) -> Series2 {
        Series2 {
            ring: Arc::clone(ring),
            trunc,
            coeffs: vec![0; tri_count(trunc) * ring.degree()],
        }
    }

    /// X + Y.
    pub fn x_plus_y(ring: &Arc<LocalRing>, trunc: usize) -> Series2 {
        let mut s = Series2::zero(ring, trunc);
        let one = ring.one();
        s.set_coeff(1, 0, &one);
        s.set_coeff(0, 1, &one);
        s
    }

    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    fn width(&self) -> usize {
        self.ring.degree()
    }

    fn slot(&self, i: usize, j: usize) -> &[u64] {
        let w = self.width();
        let t = tri_idx(i, j);
        &self.coeffs[t * w..(t + 1) * w]
    }

    pub fn coeff(&self, i: usize, j: usize) -> RingElem {
        assert!(i + j <= self.trunc);
        self.ring.elem_from_coords(self.slot(i, j)).unwrap()
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, v: &RingElem) {
        assert!(i + j <= self.trunc);
        let w = self.width();
        let t = tri_idx(i, j);
        self.coeffs[t * w..(t + 1) * w].copy_from_slice(v.coords());
    }

    fn check_shape(&self, other: &Series2) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::ShapeMismatch(format!(
                "truncation {} vs {}",
                self.trunc, other.trunc
            )));
        }
        if !(Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring) {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Series2) -> Result<Series2> {
        self.check_shape(other)?;
        let mut out = Series2::zero(&self.ring, self.trunc);
        out.coeffs = self.ring.add_slices(&self.coeffs, &other.coeffs);
        Ok(out)
    }

    pub fn sub(&self, other: &Series2) -> Result<Series2> {
        self.check_shape(other)?;
        let mut out = Series2::zero(&self.ring, self.trunc);
        out.coeffs = self.ring.sub_slices(&self.coeffs, &other.coeffs);
        Ok(out)
    }

    pub fn mul(&self, other: &Series2) -> Result<Series2> {
        self.check_shape(other)?;
        let d = self.trunc;
        let ring = &self.ring;
        let w = self.width();
        let fast = ring.fast_accum();
        let grid = ring.raw_grid_len();
        let mut out = Series2::zero(ring, d);
        if fast {
            let mut raw = vec![0u128; tri_count(d) * grid];
            for i1 in 0..=d {
                for j1 in 0..=d - i1 {
                    let a = self.slot(i1, j1);
                    if a.iter().all(|&c| c == 0) {
                        continue;
                    }
                    for i2 in 0..=d - i1 - j1 {
                        for j2 in 0..=d - i1 - j1 - i2 {
                            let b = other.slot(i2, j2);
                            if b.iter().all(|&c| c == 0) {
                                continue;
                            }
                            let t = tri_idx(i1 + i2, j1 + j2);
                            ring.raw_accum(a, b, &mut raw[t * grid..(t + 1) * grid]);
                        }
                    }
                }
            }
            for t in 0..tri_count(d) {
                let res = ring.finish_raw(&raw[t * grid..(t + 1) * grid]);
                out.coeffs[t * w..(t + 1) * w].copy_from_slice(&res);
            }
        } else {
            for i1 in 0..=d {
                for j1 in 0..=d - i1 {
                    let a = self.slot(i1, j1);
                    if a.iter().all(|&c| c == 0) {
                        continue;
                    }
                    for i2 in 0..=d - i1 - j1 {
                        for j2 in 0..=d - i1 - j1 - i2 {
                            let b = other.slot(i2, j2);
                            if b.iter().all(|&c| c == 0) {
                                continue;
                            }
                            let prod = ring.mul_slices(a, b);
                            let t = tri_idx(i1 + i2, j1 + j2);
                            let cur = out.coeffs[t * w..(t + 1) * w].to_vec();
                            let sum = ring.add_slices(&cur, &prod);
                            out.coeffs[t * w..(t + 1) * w].copy_from_slice(&sum);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn constant_is_zero(&self) -> bool {
        self.slot(0, 0).iter().all(|&c| c == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..=self.trunc {
            for j in 0..=self.trunc - i {
                if self.slot(i, j) != self.slot(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// F(X, 0) as a one-variable series.
    pub fn restrict_y_zero(&self, trunc: usize) -> Series1 {
        let mut s = Series1::zero(&self.ring, trunc);
        for i in 0..=self.trunc.min(trunc) {
            s.set_coeff(i, &self.coeff(i, 0));
        }
        s
    }

    /// Column extraction: the series sum_i c_{i,1} X^i (coefficient of Y).
    pub fn y_linear_column(&self, trunc: usize) -> Series1 {
        let mut s = Series1::zero(&self.ring, trunc);
        for i in 0..=self.trunc.saturating_sub(1).min(trunc) {
            s.set_coeff(i, &self.coeff(i, 1));
        }
        s
    }

    /// Evaluate at a pair of positive-valuation points.
    pub fn eval_pair(&self, x: &RingElem, y: &RingElem) -> Result<RingElem> {
        for v in [x.valuation(), y.valuation()] {
            if let Valuation::Finite(0) = v {
                return Err(Error::ValidationError(
                    "series evaluation needs v >= 1".into(),
                ));
            }
        }
        let mut acc = self.ring.zero();
        let mut xp = vec![self.ring.one()];
        let mut yp = vec![self.ring.one()];
        for k in 1..=self.trunc {
            xp.push(&xp[k - 1] * x);
            yp.push(&yp[k - 1] * y);
        }
        for i in 0..=self.trunc {
            for j in 0..=self.trunc - i {
                let c = self.coeff(i, j);
                if c.is_zero() {
                    continue;
                }
                acc = &acc + &(&(&c * &xp[i]) * &yp[j]);
            }
        }
        Ok(acc)
    }

    /// F(gx(X), gy(Y)) for one-variable gx, gy with zero constant terms.
    pub fn compose_sep(&self, gx: &Series1, gy: &Series1) -> Result<Series2> {
        if !gx.constant_is_zero() || !gy.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.trunc;
        let ring = &self.ring;
        let gx = gx.resize(d);
        let gy = gy.resize(d);
        // powers
        let mut gxp = Vec::with_capacity(d + 1);
        let mut gyp = Vec::with_capacity(d + 1);
        let mut one = Series1::zero(ring, d);
        one.set_coeff(0, &ring.one());
        gxp.push(one.clone());
        gyp.push(one);
        for k in 1..=d {
            gxp.push(gxp[k - 1].mul(&gx)?);
            gyp.push(gyp[k - 1].mul(&gy)?);
        }
        let mut out = Series2::zero(ring, d);
        let w = self.width();
        for i in 0..=d {
            for j in 0..=d - i {
                let c = self.coeff(i, j);
                if c.is_zero() {
                    continue;
                }
                // gx^i starts at degree i, gy^j at degree j
                for a in i..=d {
                    let ca = gxp[i].coeff(a);
                    if ca.is_zero() {
                        continue;
                    }
                    let ca = &ca * &c;
                    for b in j..=d - a {
                        let cb = gyp[j].coeff(b);
                        if cb.is_zero() {
                            continue;
                        }
                        let t = tri_idx(a, b);
                        let cur = ring
                            .elem_from_coords(&out.coeffs[t * w..(t + 1) * w])
                            .unwrap();
                        let sum = &cur + &(&ca * &cb);
                        out.coeffs[t * w..(t + 1) * w].copy_from_slice(sum.coords());
                    }
                }
            }
        }
        Ok(out)
    }

    /// F(g1(X), g2(X)) collapsed to one variable; floors flow from g1, g2.
    pub fn compose_diag(&self, g1: &Series1, g2: &Series1) -> Result<Series1> {
        if !g1.constant_is_zero() || !g2.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.trunc.min(g1.trunc()).min(g2.trunc());
        let ring = &self.ring;
        let g1 = g1.resize(d);
        let g2 = g2.resize(d);
        let mut g1p = Vec::with_capacity(d + 1);
        let mut g2p = Vec::with_capacity(d + 1);
        let mut one = Series1::zero(ring, d);
        one.set_coeff(0, &ring.one());
        g1p.push(one.clone());
        g2p.push(one);
        for k in 1..=d {
            g1p.push(g1p[k - 1].mul(&g1)?);
            g2p.push(g2p[k - 1].mul(&g2)?);
        }
        let mut acc = Series1::zero(ring, d);
        for i in 0..=self.trunc {
            for j in 0..=self.trunc - i {
                if i + j > d {
                    continue;
                }
                let c = self.coeff(i, j);
                if c.is_zero() {
                    continue;
                }
                let term = g1p[i].mul(&g2p[j])?.scale(&c);
                acc = acc.add(&term)?;
            }
        }
        Ok(acc)
    }

    /// Compose a one-variable outer series with this two-variable inner one
    /// (Horner over the outer coefficients).
    pub fn outer_compose(&self, outer: &Series1) -> Result<Series2> {
        if !self.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.trunc;
        let ring = &self.ring;
        let top = (1..=outer.trunc())
            .rev()
            .find(|&k| !outer.coeff(k).is_zero())
            .unwrap_or(0);
        let mut acc = Series2::zero(ring, d);
        if top >= 1 {
            acc.set_coeff(0, 0, &outer.coeff(top));
            for k in (1..top).rev() {
                acc = acc.mul(self)?;
                let mut t = Series2::zero(ring, d);
                t.set_coeff(0, 0, &outer.coeff(k));
                acc = acc.add(&t)?;
            }
            acc = acc.mul(self)?;
        }
        let mut t = Series2::zero(ring, d);
        t.set_coeff(0, 0, &outer.constant());
        acc.add(&t)
    }

    pub fn eq_exact(&self, other: &Series2) -> bool {
        self.trunc == other.trunc && self.coeffs == other.coeffs
    }

    pub fn to_json(&self) -> Series2Json {
        let mut rows = Vec::with_capacity(self.trunc + 1);
        for d in 0..=self.trunc {
            let mut row = Vec::with_capacity(d + 1);
            for j in 0..=d {
                row.push(self.coeff(d - j, j).coords_strings());
            }
            rows.push(row);
        }
        Series2Json { d: self.trunc, coeffs: rows }
    }

    pub fn from_json(ring: &Arc<LocalRing>, json: &Series2Json) -> Result<Series2> {
        let mut s = Series2::zero(ring, json.d);
        if json.coeffs.len() != json.d + 1 {
            return Err(Error::ShapeMismatch("triangular rows must be D+1".into()));
        }
        for (d, row) in json.coeffs.iter().enumerate() {
            if row.len() != d + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "row {d} must have {} entries",
                    d + 1
                )));
            }
            for (j, c) in row.iter().enumerate() {
                s.set_coeff(d - j, j, &RingElem::from_coord_strings(ring, c)?);
            }
        }
        Ok(s)
    }
}

/// Triangular JSON carrier for two-variable series.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Series2Json {
    #[serde(rename = "D")]
    pub d: usize,
    /// row d lists coefficients (i, j) with i+j = d, ordered by j
    pub coeffs: Vec<Vec<Vec<String>>>,
}

// ---------------------------------------------------------------------------
// fraction-field coefficients
// ---------------------------------------------------------------------------

/// A coefficient num / p^den with `num` known mod p^prec.
#[derive(Clone)]
pub struct FracCoeff {
    pub num: RingElem,
    pub den: u32,
    pub prec: u32,
}

impl FracCoeff {
    pub fn integral(num: RingElem, prec: u32) -> FracCoeff {
        FracCoeff { num, den: 0, prec }.normalized()
    }

    pub fn zero(ring: &Arc<LocalRing>) -> FracCoeff {
        FracCoeff {
            num: ring.zero(),
            den: 0,
            prec: ring.precision(),
        }
    }

    /// Knowledge floor of the value itself (may be zero when exhausted).
    pub fn value_floor(&self) -> i64 {
        self.prec as i64 - self.den as i64
    }

    pub fn is_zero_value(&self) -> bool {
        self.num.is_zero()
    }

    fn normalized(self) -> FracCoeff {
        let ring = self.num.ring().clone();
        let p = ring.p();
        if self.num.is_zero() {
            return FracCoeff {
                num: ring.zero(),
                den: 0,
                prec: self.prec.saturating_sub(self.den),
            };
        }
        let mut strip = self.den;
        for &c in self.num.coords() {
            if c != 0 {
                strip = strip.min(crate::ring::vp_u64(c, p) as u32);
            }
        }
        if strip == 0 {
            return self;
        }
        let num = self.num.div_exact_p_pow(strip).expect("checked divisible");
        FracCoeff {
            num,
            den: self.den - strip,
            prec: self.prec - strip,
        }
    }

    fn add(&self, other: &FracCoeff) -> FracCoeff {
        let ring = self.num.ring().clone();
        let n = ring.precision();
        let den = self.den.max(other.den);
        let scale = |c: &FracCoeff| -> (RingElem, u32) {
            let up = den - c.den;
            let factor = ring.from_u64(ring.p().pow(up));
            (&c.num * &factor, (c.prec + up).min(n))
        };
        let (n1, f1) = scale(self);
        let (n2, f2) = scale(other);
        FracCoeff {
            num: &n1 + &n2,
            den,
            prec: f1.min(f2),
        }
        .normalized()
    }

    fn mul(&self, other: &FracCoeff) -> FracCoeff {
        FracCoeff {
            num: &self.num * &other.num,
            den: self.den + other.den,
            prec: self.prec.min(other.prec),
        }
        .normalized()
    }

    fn scale_elem(&self, c: &RingElem) -> FracCoeff {
        FracCoeff {
            num: &self.num * c,
            den: self.den,
            prec: self.prec,
        }
        .normalized()
    }

    /// Agreement of the two values within their joint knowledge floor.
    pub fn eq_within_floors(&self, other: &FracCoeff) -> bool {
        let ring = self.num.ring().clone();
        let p = ring.p();
        let n = ring.precision();
        let t = self.value_floor().min(other.value_floor());
        if t <= 0 {
            return true; // nothing is known; cannot distinguish
        }
        let exp = ((t + self.den as i64 + other.den as i64).min(n as i64)) as u32;
        let m = p.pow(exp);
        let f1 = ring.from_u64(p.pow(other.den));
        let f2 = ring.from_u64(p.pow(self.den));
        let a = &self.num * &f1;
        let b = &other.num * &f2;
        a.coords()
            .iter()
            .zip(b.coords())
            .all(|(x, y)| x % m == y % m)
    }
}

impl std::fmt::Debug for FracCoeff {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 0 {
            write!(out, "{} (mod p^{})", self.num, self.prec)
        } else {
            write!(out, "({}) / p^{} (mod p^{})", self.num, self.den, self.prec)
        }
    }
}

/// Series with fraction-field coefficients and zero constant term.
#[derive(Clone)]
pub struct FracSeries {
    ring: Arc<LocalRing>,
    trunc: usize,
    coeffs: Vec<FracCoeff>, // X^1..X^D
}

impl FracSeries {
    pub fn zero(ring: &Arc<LocalRing>, trunc: usize) -> FracSeries {
        FracSeries {
            ring: Arc::clone(ring),
            trunc,
            coeffs: vec![FracCoeff::zero(ring); trunc],
        }
    }

    pub fn from_series1(s: &Series1) -> Result<FracSeries> {
        if !s.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let mut out = FracSeries::zero(s.ring(), s.trunc());
        for k in 1..=s.trunc() {
            out.coeffs[k - 1] = FracCoeff::integral(s.coeff(k), s.prec_floor(k));
        }
        Ok(out)
    }

    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn coeff(&self, k: usize) -> &FracCoeff {
        &self.coeffs[k - 1]
    }

    pub fn set_coeff(&mut self, k: usize, c: FracCoeff) {
        self.coeffs[k - 1] = c;
    }

    pub fn min_value_floor(&self) -> i64 {
        self.coeffs
            .iter()
            .map(|c| c.value_floor())
            .min()
            .unwrap_or(0)
    }

    pub fn scale_elem(&self, c: &RingElem) -> FracSeries {
        let mut out = self.clone();
        for t in out.coeffs.iter_mut() {
            *t = t.scale_elem(c);
        }
        out
    }

    pub fn mul(&self, other: &FracSeries) -> Result<FracSeries> {
        if self.trunc != other.trunc {
            return Err(Error::ShapeMismatch("frac series truncations differ".into()));
        }
        let mut out = FracSeries::zero(&self.ring, self.trunc);
        for k in 2..=self.trunc {
            let mut acc = FracCoeff::zero(&self.ring);
            for i in 1..k {
                let j = k - i;
                let (a, b) = (self.coeff(i), other.coeff(j));
                if a.is_zero_value() && a.value_floor() >= self.ring.precision() as i64 {
                    continue;
                }
                if b.is_zero_value() && b.value_floor() >= self.ring.precision() as i64 {
                    continue;
                }
                acc = acc.add(&a.mul(b));
            }
            out.coeffs[k - 1] = acc;
        }
        Ok(out)
    }

    /// Compose with an integral inner series (zero constant term).
    pub fn compose_integral(&self, inner: &Series1) -> Result<FracSeries> {
        if !inner.constant_is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.trunc.min(inner.trunc());
        let inner = inner.resize(d);
        // integral powers of the inner series
        let mut pows: Vec<Series1> = Vec::with_capacity(d + 1);
        let mut one = Series1::zero(&self.ring, d);
        one.set_coeff(0, &self.ring.one());
        pows.push(one);
        for k in 1..=d {
            pows.push(pows[k - 1].mul(&inner)?);
        }
        let mut out = FracSeries::zero(&self.ring, d);
        for m in 1..=d {
            let mut acc = FracCoeff::zero(&self.ring);
            for k in 1..=m {
                let ck = self.coeff(k);
                if ck.is_zero_value() && ck.value_floor() >= self.ring.precision() as i64 {
                    continue;
                }
                let pk = &pows[k];
                let term = FracCoeff {
                    num: &ck.num * &pk.coeff(m),
                    den: ck.den,
                    prec: ck.prec.min(pk.prec_floor(m)),
                }
                .normalized();
                acc = acc.add(&term);
            }
            out.coeffs[m - 1] = acc;
        }
        Ok(out)
    }

    /// Compositional inverse; needs a unit linear coefficient of denominator
    /// zero (true for normalized logs).
    pub fn reversion(&self) -> Result<FracSeries> {
        let d = self.trunc;
        if d == 0 {
            return Ok(self.clone());
        }
        let s1 = self.coeff(1).clone().normalized();
        if s1.den != 0 || !s1.num.is_unit() {
            return Err(Error::NonUnitLinearTerm);
        }
        let s1_inv = FracCoeff::integral(s1.num.inv()?, s1.prec);
        let mut out = FracSeries::zero(&self.ring, d);
        out.coeffs[0] = s1_inv.clone();
        let mut pows: Vec<FracSeries> = vec![self.clone(), self.clone()];
        // pows[j] = self^j for j >= 1
        let mut s1_inv_pow = s1_inv.clone();
        for m in 2..=d {
            pows.push(pows[m - 1].mul(self)?);
            s1_inv_pow = s1_inv_pow.mul(&s1_inv);
            let mut acc = FracCoeff::zero(&self.ring);
            let n = self.ring.precision() as i64;
            for j in 1..m {
                let pj = &pows[j];
                let c = pj.coeff(m);
                let rj = out.coeff(j).clone();
                let exact_zero =
                    |t: &FracCoeff| t.is_zero_value() && t.value_floor() >= n;
                if exact_zero(c) || exact_zero(&rj) {
                    continue;
                }
                acc = acc.add(&rj.mul(c));
            }
            let neg = FracCoeff {
                num: -&acc.num,
                den: acc.den,
                prec: acc.prec,
            };
            out.coeffs[m - 1] = neg.mul(&s1_inv_pow);
        }
        Ok(out)
    }

    pub fn eq_within_floors(&self, other: &FracSeries) -> bool {
        if self.trunc != other.trunc {
            return false;
        }
        (1..=self.trunc).all(|k| self.coeff(k).eq_within_floors(other.coeff(k)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{make_ring, LocalRingSpec};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zp(p: u64, n: u32) -> Arc<LocalRing> {
        make_ring(&LocalRingSpec::zp(p, n)).unwrap()
    }

    fn series(ring: &Arc<LocalRing>, d: usize, coeffs: &[i64]) -> Series1 {
        let mut s = Series1::zero(ring, d);
        for (k, &c) in coeffs.iter().enumerate() {
            s.set_coeff(k, &ring.from_i64(c));
        }
        s
    }

    #[test]
    fn products() {
        let r = zp(3, 12);
        let x = Series1::x(&r, 4);
        let x2 = x.mul(&x).unwrap();
        assert_eq!(x2.coeff(2), r.one());
        assert!(x2.coeff(1).is_zero() && x2.coeff(3).is_zero());

        // (X+2X^2)*X at D=2 -> X^2 (X^3 truncated)
        let s = series(&r, 2, &[0, 1, 2]);
        let t = Series1::x(&r, 2);
        let prod = s.mul(&t).unwrap();
        assert_eq!(prod.coeff(2), r.one());
        assert!(prod.coeff(1).is_zero());
    }

    #[test]
    fn two_variable_product() {
        let r = zp(3, 12);
        // (X+Y)(X-Y) = X^2 - Y^2
        let mut a = Series2::zero(&r, 4);
        a.set_coeff(1, 0, &r.one());
        a.set_coeff(0, 1, &r.one());
        let mut b = Series2::zero(&r, 4);
        b.set_coeff(1, 0, &r.one());
        b.set_coeff(0, 1, &r.from_i64(-1));
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.coeff(2, 0), r.one());
        assert_eq!(prod.coeff(0, 2), r.from_i64(-1));
        assert!(prod.coeff(1, 1).is_zero());
    }

    #[test]
    fn shape_mismatch() {
        let r = zp(3, 12);
        let a = Series1::x(&r, 4);
        let b = Series1::x(&r, 5);
        assert!(matches!(
            s_combine1(&a, &b, CombineKind::Add),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn composition_examples() {
        let r = zp(3, 12);
        // X o g = g
        let g = series(&r, 5, &[0, 2, 0, 1]);
        let x = Series1::x(&r, 5);
        assert!(Series1::compose(&x, &g).unwrap().eq_exact(&g));
        // (X^2) o (X + X^2) at D=3 -> X^2 + 2X^3
        let outer = series(&r, 3, &[0, 0, 1]);
        let inner = series(&r, 3, &[0, 1, 1]);
        let got = Series1::compose(&outer, &inner).unwrap();
        let want = series(&r, 3, &[0, 0, 1, 2]);
        assert!(got.eq_exact(&want));
        // nonzero constant term rejected
        let bad = series(&r, 3, &[1, 1]);
        assert!(matches!(
            Series1::compose(&outer, &bad),
            Err(Error::NonzeroConstantTerm)
        ));
    }

    #[test]
    fn composition_is_associative_at_truncation() {
        let mut rng = StdRng::seed_from_u64(5);
        let r = zp(3, 10);
        for _ in 0..20 {
            let mut rand_series = |d: usize| {
                let mut s = Series1::zero(&r, d);
                for k in 1..=d {
                    s.set_coeff(k, &r.from_u64(rng.gen_range(0..r.modulus())));
                }
                s
            };
            let a = rand_series(8);
            let b = rand_series(8);
            let c = rand_series(8);
            let left = Series1::compose(&Series1::compose(&a, &b).unwrap(), &c).unwrap();
            let right = Series1::compose(&a, &Series1::compose(&b, &c).unwrap()).unwrap();
            assert!(left.eq_exact(&right));
        }
    }

    #[test]
    fn weierstrass_degrees() {
        let r = zp(3, 12);
        // pX + X^p
        let s = series(&r, 6, &[0, 3, 0, 1]);
        assert_eq!(s.weierstrass_degree().unwrap(), Some(3));
        // pX alone: none up to D
        let s = series(&r, 6, &[0, 3]);
        assert_eq!(s.weierstrass_degree().unwrap(), None);
        // (1+X)^p - 1 = 3X + 3X^2 + X^3
        let s = series(&r, 6, &[0, 3, 3, 1]);
        assert_eq!(s.weierstrass_degree().unwrap(), Some(3));
    }

    #[test]
    fn reversion_examples() {
        let r = zp(3, 12);
        let x = Series1::x(&r, 5);
        assert!(x.reversion().unwrap().eq_exact(&x));
        // reversion(X + X^2) at D=3 -> X - X^2 + 2X^3
        let s = series(&r, 3, &[0, 1, 1]);
        let rev = s.reversion().unwrap();
        let want = series(&r, 3, &[0, 1, -1, 2]);
        assert!(rev.eq_exact(&want));
        // two-sided inverse up to D
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..10 {
            let mut s = Series1::zero(&r, 8);
            s.set_coeff(1, &r.from_u64(1 + 3 * rng.gen_range(0..5u64)));
            for k in 2..=8 {
                s.set_coeff(k, &r.from_u64(rng.gen_range(0..r.modulus())));
            }
            let rev = s.reversion().unwrap();
            let x = Series1::x(&r, 8);
            assert!(Series1::compose(&s, &rev).unwrap().eq_exact(&x));
            assert!(Series1::compose(&rev, &s).unwrap().eq_exact(&x));
        }
        // non-unit linear term
        let s = series(&r, 3, &[0, 3, 1]);
        assert!(matches!(s.reversion(), Err(Error::NonUnitLinearTerm)));
    }

    #[test]
    fn series_inverse() {
        let r = zp(5, 10);
        let s = series(&r, 6, &[1, 1]); // 1 + X
        let inv = s.inverse().unwrap();
        for k in 0..=6 {
            let want = if k % 2 == 0 { r.one() } else { r.from_i64(-1) };
            assert_eq!(inv.coeff(k), want);
        }
        assert!(series(&r, 3, &[5, 1]).inverse().is_err());
    }

    #[test]
    fn precision_floor_propagation() {
        let r = zp(2, 12);
        let mut a = Series1::x(&r, 4);
        a.set_prec_floor(1, 7);
        let b = Series1::x(&r, 4);
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.prec_floor(2), 7);
        // exact zero slots do not drag floors down
        assert_eq!(prod.prec_floor(3), 12);
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.prec_floor(1), 7);
    }

    #[test]
    fn frac_coeff_arithmetic() {
        let r = zp(3, 12);
        // 1/3 + 2/3 = 1
        let third = FracCoeff {
            num: r.one(),
            den: 1,
            prec: 12,
        };
        let two_thirds = FracCoeff {
            num: r.from_u64(2),
            den: 1,
            prec: 12,
        };
        let sum = third.add(&two_thirds);
        assert_eq!(sum.den, 0);
        assert_eq!(sum.num, r.one());
        let one = FracCoeff::integral(r.one(), 12);
        assert!(sum.eq_within_floors(&one));
    }

    #[test]
    fn json_round_trip() {
        let r = zp(3, 12);
        let mut s = series(&r, 4, &[0, 3, 1, 7]);
        s.set_prec_floor(3, 9);
        let j = s.to_json();
        let back = Series1::from_json(&r, &j).unwrap();
        assert!(s.eq_exact(&back));
        assert_eq!(back.prec_floor(3), 9);

        let mut f = Series2::zero(&r, 3);
        f.set_coeff(1, 0, &r.one());
        f.set_coeff(0, 1, &r.one());
        f.set_coeff(1, 1, &r.from_u64(5));
        let j = f.to_json();
        let back = Series2::from_json(&r, &j).unwrap();
        assert!(f.eq_exact(&back));
    }
}
