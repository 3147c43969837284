//! Arithmetic in rings of integers of local fields at fixed absolute
//! precision.
//!
//! A ring is described as a two-step tower: an unramified step of degree `f`
//! over Z_p cut out by a monic polynomial irreducible mod p, followed by an
//! Eisenstein step of degree `e`. Elements are coordinate vectors in the
//! basis `{u^i w^j : 0 <= i < f, 0 <= j < e}` (`u` the unramified generator,
//! `w` the uniformizer), every coordinate reduced mod p^N.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One coefficient of the Eisenstein polynomial: either a plain integer or
/// an element of the unramified subring in the `u^i` basis.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum EisCoeff {
    Int(i64),
    Poly(Vec<i64>),
}

/// Serializable description of a ring: `{"p":3,"f":2,"unram":[...],"eis":[...],"N":12}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LocalRingSpec {
    pub p: u64,
    pub f: usize,
    /// Monic degree-`f` polynomial defining the unramified step, constant
    /// coefficient first. May be left empty when `f = 1` (defaults to `X`).
    #[serde(default)]
    pub unram: Vec<i64>,
    /// Monic Eisenstein polynomial over the unramified subring, constant
    /// coefficient first; its length determines `e`.
    pub eis: Vec<EisCoeff>,
    #[serde(rename = "N")]
    pub precision: u32,
}

impl LocalRingSpec {
    /// Z_p at precision p^n, presented as the trivial tower (f = 1, eis = X - p).
    pub fn zp(p: u64, n: u32) -> Self {
        LocalRingSpec {
            p,
            f: 1,
            unram: vec![0, 1],
            eis: vec![EisCoeff::Int(-(p as i64)), EisCoeff::Int(1)],
            precision: n,
        }
    }

    /// Unramified extension of degree `f`, using a small irreducible polynomial
    /// found by search.
    pub fn unramified(p: u64, f: usize, n: u32) -> Self {
        let unram = find_irreducible(p, f);
        LocalRingSpec {
            p,
            f,
            unram,
            eis: vec![EisCoeff::Int(-(p as i64)), EisCoeff::Int(1)],
            precision: n,
        }
    }

    /// Totally ramified extension Z_p[w]/(w^e - p).
    pub fn eisenstein(p: u64, e: usize, n: u32) -> Self {
        let mut eis = vec![EisCoeff::Int(0); e + 1];
        eis[0] = EisCoeff::Int(-(p as i64));
        eis[e] = EisCoeff::Int(1);
        LocalRingSpec {
            p,
            f: 1,
            unram: vec![0, 1],
            eis,
            precision: n,
        }
    }

    /// General tower: unramified degree-`f` step, then Eisenstein step.
    pub fn tower(p: u64, f: usize, unram: Vec<i64>, eis: Vec<EisCoeff>, n: u32) -> Self {
        LocalRingSpec { p, f, unram, eis, precision: n }
    }

    pub fn e(&self) -> usize {
        self.eis.len().saturating_sub(1)
    }
}

/// Search the monic degree-`f` polynomials over F_p for an irreducible one,
/// preferring small coefficients. Deterministic.
fn find_irreducible(p: u64, f: usize) -> Vec<i64> {
    if f == 1 {
        return vec![0, 1];
    }
    let total = (p as u128).pow(f as u32);
    let mut idx: u128 = 0;
    while idx < total {
        let mut poly = vec![0u64; f + 1];
        poly[f] = 1;
        let mut t = idx;
        for c in poly.iter_mut().take(f) {
            *c = (t % p as u128) as u64;
            t /= p as u128;
        }
        if poly_is_irreducible_mod_p(&poly, p) {
            return poly.iter().map(|&c| c as i64).collect();
        }
        idx += 1;
    }
    unreachable!("irreducible polynomials of every degree exist over F_p")
}

// ---------------------------------------------------------------------------
// polynomial arithmetic over F_p (used for validation and residue fields)
// ---------------------------------------------------------------------------

fn poly_trim(a: &mut Vec<u64>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn poly_mul_mod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + ai * bj) % p;
        }
    }
    poly_trim(&mut out);
    out
}

/// Remainder of `a` modulo monic `m`, coefficients mod p.
fn poly_rem_mod_p(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let dm = m.len() - 1;
    if dm == 0 {
        return vec![0];
    }
    let mut r: Vec<u64> = a.iter().map(|&c| c % p).collect();
    poly_trim(&mut r);
    while r.len() > dm {
        let lead = *r.last().unwrap() % p;
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for k in 0..dm {
                let sub = (lead * m[k]) % p;
                let idx = shift + k;
                r[idx] = (r[idx] + p - sub) % p;
            }
        }
        r.pop();
        poly_trim(&mut r);
    }
    if r.is_empty() {
        r.push(0);
    }
    r
}

fn poly_gcd_mod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x: Vec<u64> = a.to_vec();
    let mut y: Vec<u64> = b.to_vec();
    poly_trim(&mut x);
    poly_trim(&mut y);
    while !(y.len() == 1 && y[0] == 0) {
        let r = poly_rem_mod_p(&x, &y, p);
        // make y monic before using it as a divisor next round
        x = y;
        let lead_inv = mod_inv_prime(*x.last().unwrap(), p);
        for c in x.iter_mut() {
            *c = (*c * lead_inv) % p;
        }
        y = r;
    }
    x
}

fn mod_inv_prime(a: u64, p: u64) -> u64 {
    // Fermat; p prime, a != 0 mod p.
    mod_pow(a % p, p - 2, p)
}

fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut b: u128 = (base % m) as u128;
    base = 0;
    let _ = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        exp >>= 1;
    }
    acc as u64
}

/// Frobenius-based irreducibility test: `m` (monic, degree f) is irreducible
/// over F_p iff X^{p^f} = X mod m and gcd(X^{p^{f/l}} - X, m) = 1 for every
/// prime l | f.
fn poly_is_irreducible_mod_p(m: &[u64], p: u64) -> bool {
    let f = m.len() - 1;
    if f == 0 {
        return false;
    }
    let mut mp: Vec<u64> = m.iter().map(|&c| c % p).collect();
    if *mp.last().unwrap() != 1 {
        return false;
    }
    if f == 1 {
        return true;
    }
    // iterated Frobenius of X
    let x = vec![0u64, 1];
    let mut frob_powers = Vec::with_capacity(f);
    let mut cur = x.clone();
    for _ in 0..f {
        cur = poly_pow_mod(&cur, p, &mp, p);
        frob_powers.push(cur.clone());
    }
    // X^{p^f} == X
    if frob_powers[f - 1] != x {
        return false;
    }
    for l in prime_divisors(f as u64) {
        let i = f / l as usize;
        let mut diff = frob_powers[i - 1].clone();
        // diff - X
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        poly_trim(&mut diff);
        let g = poly_gcd_mod_p(&diff, &mp, p);
        if g.len() > 1 {
            return false;
        }
    }
    poly_trim(&mut mp);
    true
}

fn poly_pow_mod(a: &[u64], mut exp: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut base = poly_rem_mod_p(a, m, p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = poly_rem_mod_p(&poly_mul_mod_p(&acc, &base, p), m, p);
        }
        base = poly_rem_mod_p(&poly_mul_mod_p(&base, &base, p), m, p);
        exp >>= 1;
    }
    acc
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---------------------------------------------------------------------------
// valuations
// ---------------------------------------------------------------------------

/// Valuation normalized so v(w) = 1 for the uniformizer w. `Infinity` means
/// "zero at working precision" (v >= e*N).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(u64),
    Infinity,
}

impl Valuation {
    pub fn is_finite(&self) -> bool {
        matches!(self, Valuation::Finite(_))
    }

    pub fn finite(&self) -> Option<u64> {
        match self {
            Valuation::Finite(v) => Some(*v),
            Valuation::Infinity => None,
        }
    }

    /// The same valuation in v_p units (v(p) = 1); denominator divides e.
    pub fn in_p_units(&self, e: usize) -> Option<Ratio<i64>> {
        self.finite().map(|v| Ratio::new(v as i64, e as i64))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(out, "{v}"),
            Valuation::Infinity => write!(out, "INFTY"),
        }
    }
}

// ---------------------------------------------------------------------------
// the ring handle
// ---------------------------------------------------------------------------

/// A constructed ring with cached reduction data. Immutable after
/// construction; share via `Arc`.
pub struct LocalRing {
    spec: LocalRingSpec,
    p: u64,
    f: usize,
    e: usize,
    n: u32,
    pn: u64,
    q: u64,
    /// canonical monic unramified polynomial, length f+1, mod p^N
    unram: Vec<u64>,
    /// canonical Eisenstein coefficients, length e+1, each an f-vector
    eis: Vec<Vec<u64>>,
    /// u^{f+t} for t in 0..f-1, each reduced to an f-vector
    red_u: Vec<Vec<u64>>,
    /// w^{e+t} for t in 0..e-1, each reduced to full coordinates
    red_w: Vec<Vec<u64>>,
    /// inverse of the unit w^e / p, full coordinates
    winv: Vec<u64>,
    /// whether p^N <= 2^31 (enables u128 bulk accumulation in series kernels)
    fast: bool,
}

impl fmt::Debug for LocalRing {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            out,
            "LocalRing(p={}, f={}, e={}, N={})",
            self.p, self.f, self.e, self.n
        )
    }
}

impl PartialEq for LocalRing {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.f == other.f
            && self.e == other.e
            && self.n == other.n
            && self.unram == other.unram
            && self.eis == other.eis
    }
}

/// Construct a ring handle from a spec, validating all invariants.
pub fn make_ring(spec: &LocalRingSpec) -> Result<Arc<LocalRing>> {
    LocalRing::new(spec.clone()).map(Arc::new)
}

impl LocalRing {
    fn new(spec: LocalRingSpec) -> Result<LocalRing> {
        let p = spec.p;
        if p >= 1 << 31 {
            return Err(Error::InvalidSpec(format!("p = {p} too large (need p < 2^31)")));
        }
        if !is_prime(p) {
            return Err(Error::NonPrime(p));
        }
        let f = spec.f;
        if f == 0 {
            return Err(Error::InvalidSpec("f must be >= 1".into()));
        }
        let n = spec.precision;
        if n < 2 {
            return Err(Error::InvalidSpec("precision N must be >= 2".into()));
        }
        let mut pn: u64 = 1;
        for _ in 0..n {
            pn = pn
                .checked_mul(p)
                .filter(|&v| v < 1 << 62)
                .ok_or_else(|| Error::InvalidSpec(format!("p^N = {p}^{n} exceeds 2^62")))?;
        }
        if (f as u32) * (64 - p.leading_zeros()) > 40 {
            return Err(Error::InvalidSpec("residue field too large (need p^f <= 2^40)".into()));
        }
        let q = p.pow(f as u32);

        let unram_in = if spec.unram.is_empty() && f == 1 {
            vec![0, 1]
        } else {
            spec.unram.clone()
        };
        if unram_in.len() != f + 1 {
            return Err(Error::InvalidSpec(format!(
                "unram polynomial must have degree f = {f} (got {} coefficients)",
                unram_in.len()
            )));
        }
        let unram: Vec<u64> = unram_in.iter().map(|&c| canon_i64(c, pn)).collect();
        if unram[f] != 1 {
            return Err(Error::InvalidSpec("unram polynomial must be monic".into()));
        }
        if !poly_is_irreducible_mod_p(&unram, p) {
            return Err(Error::ReducibleUnramPoly(format!("{unram_in:?} mod {p}")));
        }

        let e = spec.e();
        if e == 0 {
            return Err(Error::InvalidSpec("eis polynomial must have degree >= 1".into()));
        }
        let mut eis: Vec<Vec<u64>> = Vec::with_capacity(e + 1);
        for c in &spec.eis {
            let vec = match c {
                EisCoeff::Int(v) => {
                    let mut w = vec![0u64; f];
                    w[0] = canon_i64(*v, pn);
                    w
                }
                EisCoeff::Poly(vs) => {
                    if vs.len() > f {
                        return Err(Error::InvalidSpec(
                            "eis coefficient has more than f coordinates".into(),
                        ));
                    }
                    let mut w = vec![0u64; f];
                    for (i, &v) in vs.iter().enumerate() {
                        w[i] = canon_i64(v, pn);
                    }
                    w
                }
            };
            eis.push(vec);
        }
        if !(eis[e].iter().take(1).all(|&c| c == 1) && eis[e][1..].iter().all(|&c| c == 0)) {
            return Err(Error::InvalidSpec("eis polynomial must be monic".into()));
        }
        // Eisenstein shape over the unramified subring: v_p >= 1 on every
        // non-leading coefficient, exactly 1 on the constant term.
        for (j, c) in eis.iter().enumerate().take(e) {
            let vp = unram_vp(c, p, n);
            if vp < 1 {
                return Err(Error::NotEisenstein(format!(
                    "coefficient of w^{j} is a unit"
                )));
            }
            if j == 0 && vp != 1 {
                return Err(Error::NotEisenstein(
                    "constant term must have valuation exactly 1".into(),
                ));
            }
        }

        // headroom for u128 accumulation of a single coefficient product
        let terms = (e * f) as u128;
        let pn2 = (pn as u128) * (pn as u128);
        if pn2.checked_mul(terms).is_none() {
            return Err(Error::InvalidSpec("precision too large for this tower".into()));
        }

        let mut ring = LocalRing {
            spec: LocalRingSpec {
                p,
                f,
                unram: unram.iter().map(|&c| c as i64).collect(),
                eis: eis
                    .iter()
                    .map(|c| EisCoeff::Poly(c.iter().map(|&v| v as i64).collect()))
                    .collect(),
                precision: n,
            },
            p,
            f,
            e,
            n,
            pn,
            q,
            unram,
            eis,
            red_u: Vec::new(),
            red_w: Vec::new(),
            winv: Vec::new(),
            fast: pn <= 1 << 31,
        };
        ring.build_tables()?;
        Ok(ring)
    }

    fn build_tables(&mut self) -> Result<()> {
        let (f, e, pn) = (self.f, self.e, self.pn);
        // powers of u beyond u^{f-1}
        let mut red_u = Vec::with_capacity(f.saturating_sub(1));
        if f > 1 {
            let base: Vec<u64> = (0..f).map(|i| (pn - self.unram[i]) % pn).collect();
            red_u.push(base.clone());
            for _ in 1..f - 1 {
                let prev = red_u.last().unwrap().clone();
                let mut next = vec![0u64; f];
                for i in 1..f {
                    next[i] = prev[i - 1];
                }
                let carry = prev[f - 1];
                for i in 0..f {
                    next[i] = add_mod(next[i], mul_mod(carry, base[i], pn), pn);
                }
                red_u.push(next);
            }
        }
        self.red_u = red_u;

        // powers of w beyond w^{e-1}
        let mut red_w: Vec<Vec<u64>> = Vec::with_capacity(e);
        let mut base = vec![0u64; e * f];
        for j in 0..e {
            for i in 0..f {
                base[j * f + i] = (pn - self.eis[j][i]) % pn;
            }
        }
        red_w.push(base.clone());
        for _ in 1..e.max(1) {
            let prev = red_w.last().unwrap().clone();
            let mut next = vec![0u64; e * f];
            for j in 1..e {
                for i in 0..f {
                    next[j * f + i] = prev[(j - 1) * f + i];
                }
            }
            let top: Vec<u64> = prev[(e - 1) * f..].to_vec();
            if top.iter().any(|&c| c != 0) {
                for j in 0..e {
                    let chunk = self.unram_mul(&top, &base[j * f..(j + 1) * f]);
                    for i in 0..f {
                        let idx = j * f + i;
                        next[idx] = add_mod(next[idx], chunk[i], pn);
                    }
                }
            }
            red_w.push(next);
        }
        red_w.truncate(e.max(1));
        self.red_w = red_w;

        // w^e = p * v with v a unit; cache v^{-1}
        let we = self.red_w[0].clone();
        let v = self
            .div_coords_p_pow(&we, 1)
            .map_err(|_| Error::NotEisenstein("w^e not divisible by p".into()))?;
        self.winv = self.inv_coords(&v)?;
        Ok(())
    }

    // --- basic accessors -------------------------------------------------

    pub fn spec(&self) -> &LocalRingSpec {
        &self.spec
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn f(&self) -> usize {
        self.f
    }
    pub fn e(&self) -> usize {
        self.e
    }
    /// Absolute precision exponent N.
    pub fn precision(&self) -> u32 {
        self.n
    }
    /// p^N.
    pub fn modulus(&self) -> u64 {
        self.pn
    }
    /// Residue cardinality q = p^f.
    pub fn q(&self) -> u64 {
        self.q
    }
    /// Degree over Z_p.
    pub fn degree(&self) -> usize {
        self.e * self.f
    }
    pub(crate) fn fast_accum(&self) -> bool {
        self.fast
    }

    // --- slice-level kernels ---------------------------------------------

    pub(crate) fn zero_coords(&self) -> Vec<u64> {
        vec![0u64; self.degree()]
    }

    pub(crate) fn add_slices(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| add_mod(x, y, self.pn))
            .collect()
    }

    pub(crate) fn sub_slices(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| add_mod(x, self.pn - y, self.pn))
            .collect()
    }

    pub(crate) fn neg_slice(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&x| (self.pn - x) % self.pn).collect()
    }

    fn unram_mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let (f, pn) = (self.f, self.pn);
        if f == 1 {
            return vec![mul_mod(a[0], b[0], pn)];
        }
        let mut raw = vec![0u128; 2 * f - 1];
        for i in 0..f {
            if a[i] == 0 {
                continue;
            }
            for j in 0..f {
                raw[i + j] += (a[i] as u128) * (b[j] as u128);
            }
        }
        let mut out = vec![0u64; f];
        for i in 0..f {
            out[i] = (raw[i] % pn as u128) as u64;
        }
        for i in (f..2 * f - 1).rev() {
            let c = (raw[i] % pn as u128) as u64;
            if c == 0 {
                continue;
            }
            let red = &self.red_u[i - f];
            for k in 0..f {
                out[k] = add_mod(out[k], mul_mod(c, red[k], pn), pn);
            }
        }
        out
    }

    /// Accumulate the raw bivariate product of two coordinate vectors into
    /// `raw`, a (2e-1) x (2f-1) scratch grid. Only safe on the fast path or
    /// with periodic reduction by the caller.
    pub(crate) fn raw_accum(&self, a: &[u64], b: &[u64], raw: &mut [u128]) {
        let (f, e) = (self.f, self.e);
        let wf = 2 * f - 1;
        for j1 in 0..e {
            for i1 in 0..f {
                let x = a[j1 * f + i1];
                if x == 0 {
                    continue;
                }
                let x = x as u128;
                for j2 in 0..e {
                    let row = (j1 + j2) * wf;
                    let bo = j2 * f;
                    for i2 in 0..f {
                        let y = b[bo + i2];
                        if y != 0 {
                            raw[row + i1 + i2] += x * y as u128;
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn raw_grid_len(&self) -> usize {
        (2 * self.e - 1) * (2 * self.f - 1)
    }

    /// Collapse a raw grid back to canonical coordinates.
    pub(crate) fn finish_raw(&self, raw: &[u128]) -> Vec<u64> {
        let (f, e, pn) = (self.f, self.e, self.pn);
        let wf = 2 * f - 1;
        // reduce u-powers within each w-row
        let mut rows = vec![0u64; (2 * e - 1) * f];
        for jj in 0..2 * e - 1 {
            let mut row = vec![0u64; f];
            for ii in 0..f {
                row[ii] = (raw[jj * wf + ii] % pn as u128) as u64;
            }
            for ii in (f..wf).rev() {
                let c = (raw[jj * wf + ii] % pn as u128) as u64;
                if c == 0 {
                    continue;
                }
                let red = &self.red_u[ii - f];
                for k in 0..f {
                    row[k] = add_mod(row[k], mul_mod(c, red[k], pn), pn);
                }
            }
            rows[jj * f..(jj + 1) * f].copy_from_slice(&row);
        }
        // fold w-powers >= e
        let mut out = rows[..e * f].to_vec();
        for jj in e..2 * e - 1 {
            let h = &rows[jj * f..(jj + 1) * f];
            if h.iter().all(|&c| c == 0) {
                continue;
            }
            let red = &self.red_w[jj - e];
            for j in 0..e {
                let chunk = self.unram_mul(h, &red[j * f..(j + 1) * f]);
                for i in 0..f {
                    let idx = j * f + i;
                    out[idx] = add_mod(out[idx], chunk[i], pn);
                }
            }
        }
        out
    }

    pub(crate) fn mul_slices(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut raw = vec![0u128; self.raw_grid_len()];
        self.raw_accum(a, b, &mut raw);
        self.finish_raw(&raw)
    }

    pub(crate) fn scalar_mul_slice(&self, a: &[u64], c: u64) -> Vec<u64> {
        a.iter().map(|&x| mul_mod(x, c, self.pn)).collect()
    }

    // --- element constructors ---------------------------------------------

    fn wrap(self: &Arc<Self>, coords: Vec<u64>) -> RingElem {
        RingElem { ring: Arc::clone(self), coords }
    }

    pub fn zero(self: &Arc<Self>) -> RingElem {
        self.wrap(self.zero_coords())
    }

    pub fn one(self: &Arc<Self>) -> RingElem {
        let mut c = self.zero_coords();
        c[0] = 1 % self.pn;
        self.wrap(c)
    }

    pub fn from_u64(self: &Arc<Self>, v: u64) -> RingElem {
        let mut c = self.zero_coords();
        c[0] = v % self.pn;
        self.wrap(c)
    }

    pub fn from_i64(self: &Arc<Self>, v: i64) -> RingElem {
        let mut c = self.zero_coords();
        c[0] = canon_i64(v, self.pn);
        self.wrap(c)
    }

    /// The uniformizer w.
    pub fn omega(self: &Arc<Self>) -> RingElem {
        let mut c = self.zero_coords();
        if self.e == 1 {
            // w = -eis[0]
            for i in 0..self.f {
                c[i] = (self.pn - self.eis[0][i]) % self.pn;
            }
        } else {
            c[self.f] = 1;
        }
        self.wrap(c)
    }

    /// The unramified generator u.
    pub fn u_gen(self: &Arc<Self>) -> RingElem {
        let mut c = self.zero_coords();
        if self.f > 1 {
            c[1] = 1;
        } else {
            c[0] = canon_i64(-self.spec.unram[0], self.pn);
        }
        self.wrap(c)
    }

    pub fn elem_from_coords(self: &Arc<Self>, coords: &[u64]) -> Result<RingElem> {
        if coords.len() != self.degree() {
            return Err(Error::InvalidSpec(format!(
                "element needs {} coordinates, got {}",
                self.degree(),
                coords.len()
            )));
        }
        Ok(self.wrap(coords.iter().map(|&c| c % self.pn).collect()))
    }

    pub fn elem_from_coords_i64(self: &Arc<Self>, coords: &[i64]) -> Result<RingElem> {
        if coords.len() != self.degree() {
            return Err(Error::InvalidSpec(format!(
                "element needs {} coordinates, got {}",
                self.degree(),
                coords.len()
            )));
        }
        Ok(self.wrap(coords.iter().map(|&c| canon_i64(c, self.pn)).collect()))
    }

    /// Basis monomial u^i w^j.
    pub fn basis_elem(self: &Arc<Self>, i: usize, j: usize) -> RingElem {
        let mut c = self.zero_coords();
        c[j * self.f + i] = 1;
        self.wrap(c)
    }

    // --- valuation, inversion, division -----------------------------------

    /// v normalized with v(w) = 1. Exact for every valuation < e*N: the basis
    /// contributions e*v_p(c) + j are distinct mod e, so the ultrametric
    /// minimum cannot cancel.
    pub(crate) fn valuation_coords(&self, coords: &[u64]) -> Valuation {
        let mut best: Option<u64> = None;
        for j in 0..self.e {
            for i in 0..self.f {
                let c = coords[j * self.f + i];
                if c == 0 {
                    continue;
                }
                let v = self.e as u64 * vp_u64(c, self.p) + j as u64;
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        match best {
            Some(v) => Valuation::Finite(v),
            None => Valuation::Infinity,
        }
    }

    /// Residue of a coordinate vector in F_q = O/(w), as a length-f vector mod p.
    fn residue(&self, coords: &[u64]) -> Vec<u64> {
        (0..self.f).map(|i| coords[i] % self.p).collect()
    }

    pub(crate) fn inv_coords(&self, coords: &[u64]) -> Result<Vec<u64>> {
        let r = self.residue(coords);
        if r.iter().all(|&c| c == 0) {
            return Err(Error::NonUnit);
        }
        let rinv = self.res_inv(&r);
        let mut y = self.zero_coords();
        for i in 0..self.f {
            y[i] = rinv[i];
        }
        let two = {
            let mut t = self.zero_coords();
            t[0] = 2 % self.pn;
            t
        };
        let iters = 64 - ((self.e as u64 * self.n as u64).leading_zeros() as u64) + 2;
        for _ in 0..iters {
            let t = self.mul_slices(coords, &y);
            let t = self.sub_slices(&two, &t);
            y = self.mul_slices(&y, &t);
        }
        let check = self.mul_slices(coords, &y);
        let mut one = self.zero_coords();
        one[0] = 1;
        if check != one {
            return Err(Error::NonUnit);
        }
        Ok(y)
    }

    /// Exact coordinatewise division by p^k; errors if any coordinate is not
    /// divisible. The result is known mod p^{N-k}; callers that care track
    /// the floor.
    pub(crate) fn div_coords_p_pow(&self, coords: &[u64], k: u32) -> Result<Vec<u64>> {
        let pk = self.p.pow(k);
        let mut out = Vec::with_capacity(coords.len());
        for &c in coords {
            if c % pk != 0 {
                return Err(Error::PrecisionExhausted(format!(
                    "coordinate {c} not divisible by p^{k}"
                )));
            }
            out.push(c / pk);
        }
        Ok(out)
    }

    /// Exact division by the uniformizer; requires v(x) >= 1. Costs one
    /// p-digit of knowledge (divide by p first, then multiply by the cached
    /// unit inverse of w^e/p).
    pub(crate) fn div_coords_by_pi(&self, coords: &[u64]) -> Result<Vec<u64>> {
        let mut s = coords.to_vec();
        for _ in 0..self.e - 1 {
            s = self.mul_slices(&s, &self.omega_coords());
        }
        let s = self.div_coords_p_pow(&s, 1)?;
        Ok(self.mul_slices(&s, &self.winv))
    }

    fn omega_coords(&self) -> Vec<u64> {
        let mut c = self.zero_coords();
        if self.e == 1 {
            for i in 0..self.f {
                c[i] = (self.pn - self.eis[0][i]) % self.pn;
            }
        } else {
            c[self.f] = 1;
        }
        c
    }

    /// Multiplication-by-x matrix over Z/p^N in the monomial basis,
    /// row-major, size (e*f)^2.
    pub fn mul_matrix(self: &Arc<Self>, x: &RingElem) -> Vec<u64> {
        let d = self.degree();
        let mut m = vec![0u64; d * d];
        for col in 0..d {
            let mut basis = self.zero_coords();
            basis[col] = 1;
            let prod = self.mul_slices(&x.coords, &basis);
            for row in 0..d {
                m[row * d + col] = prod[row];
            }
        }
        m
    }

    /// Canonical representative of a coordinate vector modulo w^k: the
    /// coordinate of u^i w^j survives mod p^{ceil((k-j)/e)}.
    pub(crate) fn canon_coords_mod_omega(&self, coords: &[u64], k: u32) -> Vec<u64> {
        let mut out = coords.to_vec();
        for j in 0..self.e {
            let need = (k as i64 - j as i64).max(0) as u64;
            let exp = need.div_ceil(self.e as u64).min(self.n as u64) as u32;
            let m = self.p.pow(exp);
            for i in 0..self.f {
                let idx = j * self.f + i;
                out[idx] %= m;
            }
        }
        out
    }

    // --- residue field ------------------------------------------------------

    fn res_mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let m: Vec<u64> = self.unram.iter().map(|&c| c % self.p).collect();
        let prod = poly_mul_mod_p(a, b, self.p);
        let mut r = poly_rem_mod_p(&prod, &m, self.p);
        r.resize(self.f, 0);
        r
    }

    fn res_pow(&self, a: &[u64], mut k: u64) -> Vec<u64> {
        let mut acc = vec![0u64; self.f];
        acc[0] = 1;
        let mut base = a.to_vec();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.res_mul(&acc, &base);
            }
            base = self.res_mul(&base, &base);
            k >>= 1;
        }
        acc
    }

    fn res_inv(&self, a: &[u64]) -> Vec<u64> {
        self.res_pow(a, self.q - 2)
    }

    /// Order of a nonzero residue in F_q^x.
    fn res_order_is_full(&self, a: &[u64]) -> bool {
        let one = {
            let mut v = vec![0u64; self.f];
            v[0] = 1;
            v
        };
        if self.q == 2 {
            return a == one.as_slice();
        }
        for l in prime_divisors(self.q - 1) {
            if self.res_pow(a, (self.q - 1) / l) == one {
                return false;
            }
        }
        true
    }

    // --- Teichmueller lifts -------------------------------------------------

    /// Teichmueller representative indexed by residue class: `k` in
    /// [0, q-1) selects the residue whose base-p digits are those of k+1.
    pub fn teichmueller(self: &Arc<Self>, k: u64) -> RingElem {
        assert!(k < self.q - 1, "residue index out of range");
        let mut digits = vec![0u64; self.f];
        let mut t = k + 1;
        for d in digits.iter_mut() {
            *d = t % self.p;
            t /= self.p;
        }
        let mut z = self.zero_coords();
        for i in 0..self.f {
            z[i] = digits[i];
        }
        let cap = (self.e as u32 * self.n + 4) as usize;
        for _ in 0..cap {
            let nz = self.pow_coords(&z, self.q);
            if nz == z {
                break;
            }
            z = nz;
        }
        self.wrap(z)
    }

    /// A Teichmueller lift generating the (q-1)-torsion of the unit group.
    pub fn teichmueller_generator(self: &Arc<Self>) -> RingElem {
        if self.q == 2 {
            return self.one();
        }
        for k in 0..self.q - 1 {
            let mut digits = vec![0u64; self.f];
            let mut t = k + 1;
            for d in digits.iter_mut() {
                *d = t % self.p;
                t /= self.p;
            }
            if self.res_order_is_full(&digits) {
                return self.teichmueller(k);
            }
        }
        unreachable!("F_q^x is cyclic")
    }

    fn pow_coords(&self, a: &[u64], mut k: u64) -> Vec<u64> {
        let mut acc = self.zero_coords();
        acc[0] = 1 % self.pn;
        let mut base = a.to_vec();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul_slices(&acc, &base);
            }
            base = self.mul_slices(&base, &base);
            k >>= 1;
        }
        acc
    }
}

pub(crate) fn canon_i64(v: i64, pn: u64) -> u64 {
    let m = pn as i128;
    (((v as i128 % m) + m) % m) as u64
}

#[inline]
pub(crate) fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// p-valuation of an unramified-subring element given by its u-basis
/// coordinates; capped at N (all-zero coordinates).
fn unram_vp(coords: &[u64], p: u64, n: u32) -> u64 {
    coords
        .iter()
        .filter(|&&c| c != 0)
        .map(|&c| vp_u64(c, p))
        .min()
        .unwrap_or(n as u64)
}

pub(crate) fn vp_u64(mut c: u64, p: u64) -> u64 {
    debug_assert!(c != 0);
    let mut v = 0;
    while c % p == 0 {
        c /= p;
        v += 1;
    }
    v
}

// ---------------------------------------------------------------------------
// elements
// ---------------------------------------------------------------------------

/// An element of a `LocalRing`: e*f coordinates mod p^N.
#[derive(Clone)]
pub struct RingElem {
    ring: Arc<LocalRing>,
    coords: Vec<u64>,
}

impl RingElem {
    pub fn ring(&self) -> &Arc<LocalRing> {
        &self.ring
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn valuation(&self) -> Valuation {
        self.ring.valuation_coords(&self.coords)
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.valuation(), Valuation::Finite(0))
    }

    pub fn inv(&self) -> Result<RingElem> {
        let coords = self.ring.inv_coords(&self.coords)?;
        Ok(RingElem { ring: Arc::clone(&self.ring), coords })
    }

    pub fn pow(&self, k: u64) -> RingElem {
        RingElem {
            ring: Arc::clone(&self.ring),
            coords: self.ring.pow_coords(&self.coords, k),
        }
    }

    /// Exact division by p^k; the caller owns the p^{N-k} knowledge floor.
    pub fn div_exact_p_pow(&self, k: u32) -> Result<RingElem> {
        Ok(RingElem {
            ring: Arc::clone(&self.ring),
            coords: self.ring.div_coords_p_pow(&self.coords, k)?,
        })
    }

    /// Exact division by the uniformizer; requires v >= 1.
    pub fn div_by_pi(&self) -> Result<RingElem> {
        Ok(RingElem {
            ring: Arc::clone(&self.ring),
            coords: self.ring.div_coords_by_pi(&self.coords)?,
        })
    }

    pub fn coords_strings(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.to_string()).collect()
    }

    pub fn from_coord_strings(ring: &Arc<LocalRing>, s: &[String]) -> Result<RingElem> {
        let coords: Vec<u64> = s
            .iter()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| Error::ParseError(format!("bad coordinate {t:?}")))
            })
            .collect::<Result<_>>()?;
        ring.elem_from_coords(&coords)
    }

    fn same_ring(&self, other: &RingElem) -> bool {
        Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring
    }
}

impl PartialEq for RingElem {
    fn eq(&self, other: &Self) -> bool {
        self.same_ring(other) && self.coords == other.coords
    }
}
impl Eq for RingElem {}

impl fmt::Debug for RingElem {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{self}")
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (f, e) = (self.ring.f, self.ring.e);
        let mut terms = Vec::new();
        for j in 0..e {
            for i in 0..f {
                let c = self.coords[j * f + i];
                if c == 0 {
                    continue;
                }
                let mut t = c.to_string();
                if i > 0 {
                    t.push_str(&format!("*u^{i}"));
                }
                if j > 0 {
                    t.push_str(&format!("*w^{j}"));
                }
                terms.push(t);
            }
        }
        if terms.is_empty() {
            write!(out, "0")
        } else {
            write!(out, "{}", terms.join(" + "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithKind {
    Add,
    Sub,
    Mul,
}

/// Checked arithmetic entry point; errors with `SpecMismatch` when the
/// operands live in different rings.
pub fn arith(x: &RingElem, y: &RingElem, kind: ArithKind) -> Result<RingElem> {
    if !x.same_ring(y) {
        return Err(Error::SpecMismatch);
    }
    let coords = match kind {
        ArithKind::Add => x.ring.add_slices(&x.coords, &y.coords),
        ArithKind::Sub => x.ring.sub_slices(&x.coords, &y.coords),
        ArithKind::Mul => x.ring.mul_slices(&x.coords, &y.coords),
    };
    Ok(RingElem { ring: Arc::clone(&x.ring), coords })
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $kind:expr) => {
        impl std::ops::$trait for &RingElem {
            type Output = RingElem;
            fn $method(self, rhs: &RingElem) -> RingElem {
                arith(self, rhs, $kind).expect("ring mismatch")
            }
        }
        impl std::ops::$trait for RingElem {
            type Output = RingElem;
            fn $method(self, rhs: RingElem) -> RingElem {
                arith(&self, &rhs, $kind).expect("ring mismatch")
            }
        }
    };
}
impl_binop!(Add, add, ArithKind::Add);
impl_binop!(Sub, sub, ArithKind::Sub);
impl_binop!(Mul, mul, ArithKind::Mul);

impl std::ops::Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem {
            ring: Arc::clone(&self.ring),
            coords: self.ring.neg_slice(&self.coords),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zp(p: u64, n: u32) -> Arc<LocalRing> {
        make_ring(&LocalRingSpec::zp(p, n)).unwrap()
    }

    fn z9(n: u32) -> Arc<LocalRing> {
        // X^2 - X - 1 is irreducible mod 3
        make_ring(&LocalRingSpec::tower(
            3,
            2,
            vec![-1, -1, 1],
            vec![EisCoeff::Int(-3), EisCoeff::Int(1)],
            n,
        ))
        .unwrap()
    }

    fn z2_sqrt2(n: u32) -> Arc<LocalRing> {
        make_ring(&LocalRingSpec::eisenstein(2, 2, n)).unwrap()
    }

    #[test]
    fn make_ring_accepts_spec_examples() {
        let r = zp(3, 12);
        assert_eq!(r.modulus(), 3u64.pow(12));
        assert_eq!((r.e(), r.f(), r.q()), (1, 2 - 1, 3));

        let r = z9(8);
        assert_eq!((r.e(), r.f(), r.q()), (1, 2, 9));

        let r = z2_sqrt2(16);
        assert_eq!((r.e(), r.f(), r.q()), (2, 1, 2));
        assert_eq!(r.degree(), 2);
    }

    #[test]
    fn make_ring_rejects_bad_specs() {
        assert!(matches!(
            make_ring(&LocalRingSpec::zp(4, 8)),
            Err(Error::NonPrime(4))
        ));
        // X^2 - 1 = (X-1)(X+1) mod 3
        let bad = LocalRingSpec::tower(
            3,
            2,
            vec![-1, 0, 1],
            vec![EisCoeff::Int(-3), EisCoeff::Int(1)],
            8,
        );
        assert!(matches!(make_ring(&bad), Err(Error::ReducibleUnramPoly(_))));
        // constant term 9: valuation 2, not Eisenstein
        let bad = LocalRingSpec::tower(
            3,
            1,
            vec![0, 1],
            vec![EisCoeff::Int(-9), EisCoeff::Int(0), EisCoeff::Int(1)],
            8,
        );
        assert!(matches!(make_ring(&bad), Err(Error::NotEisenstein(_))));
        // unit constant term
        let bad = LocalRingSpec::tower(
            3,
            1,
            vec![0, 1],
            vec![EisCoeff::Int(1), EisCoeff::Int(1)],
            8,
        );
        assert!(matches!(make_ring(&bad), Err(Error::NotEisenstein(_))));
    }

    #[test]
    fn defining_relation_omega_squared_is_two() {
        let r = z2_sqrt2(16);
        let w = r.omega();
        assert_eq!(&w * &w, r.from_u64(2));
    }

    #[test]
    fn arith_identities() {
        let r = z2_sqrt2(16);
        let w = r.omega();
        let x = &r.one() + &w;
        assert_eq!(arith(&x, &r.zero(), ArithKind::Add).unwrap(), x);
        // (1+w)(1-w) = 1 - 2
        let y = &r.one() - &w;
        assert_eq!(&x * &y, r.from_i64(-1));
    }

    #[test]
    fn spec_mismatch_detected() {
        let a = zp(3, 12).one();
        let b = zp(5, 12).one();
        assert!(matches!(
            arith(&a, &b, ArithKind::Add),
            Err(Error::SpecMismatch)
        ));
    }

    #[test]
    fn inverse_of_one_plus_p_matches_geometric_series() {
        let n = 12;
        let r = zp(3, n);
        let x = r.from_u64(4);
        let inv = x.inv().unwrap();
        // independent oracle: sum of (-3)^k
        let mut acc = r.zero();
        for k in 0..n as u64 {
            acc = &acc + &r.from_i64((-3i64).pow(k as u32));
        }
        assert_eq!(inv, acc);
        assert_eq!(&inv * &x, r.one());
    }

    #[test]
    fn inverse_rejects_non_units() {
        let r = z2_sqrt2(16);
        assert!(matches!(r.omega().inv(), Err(Error::NonUnit)));
        assert!(matches!(r.zero().inv(), Err(Error::NonUnit)));
        assert_eq!(r.one().inv().unwrap(), r.one());
    }

    #[test]
    fn valuations_of_generators() {
        let r = z2_sqrt2(16);
        assert_eq!(r.omega().valuation(), Valuation::Finite(1));
        assert_eq!(r.from_u64(2).valuation(), Valuation::Finite(2)); // v(p) = e
        assert_eq!((&r.one() + &r.omega()).valuation(), Valuation::Finite(0));
        assert_eq!(r.zero().valuation(), Valuation::Infinity);

        let r = z9(8);
        assert_eq!(r.from_u64(3).valuation(), Valuation::Finite(1));
        assert_eq!(r.u_gen().valuation(), Valuation::Finite(0));
        // beyond-the-determinant range: v(3^7) must still be exact
        assert_eq!(r.from_u64(3u64.pow(7)).valuation(), Valuation::Finite(7));
    }

    /// Determinant-of-multiplication-matrix valuation, usable as an oracle
    /// while f * v(x) stays below the working precision.
    fn det_valuation_oracle(r: &Arc<LocalRing>, x: &RingElem) -> Option<u64> {
        let d = r.degree();
        let mut m = r.mul_matrix(x);
        let p = r.p();
        let pn = r.modulus();
        let mut total = 0u64;
        for col in 0..d {
            // locate minimal-valuation pivot in the remaining submatrix
            let mut best: Option<(usize, usize, u64)> = None;
            for rr in col..d {
                for cc in col..d {
                    let v = m[rr * d + cc];
                    if v != 0 {
                        let val = vp_u64(v, p);
                        if best.map_or(true, |(_, _, bv)| val < bv) {
                            best = Some((rr, cc, val));
                        }
                    }
                }
            }
            let (pr, pc, pv) = best?;
            // swap into place
            for k in 0..d {
                m.swap(pr * d + k, col * d + k);
            }
            for k in 0..d {
                m.swap(k * d + pc, k * d + col);
            }
            total += pv;
            let pivot = m[col * d + col] / p.pow(pv as u32);
            let piv_inv = {
                // invert unit mod p^N by Newton on integers
                let mut y = mod_inv_prime(pivot % p, p);
                for _ in 0..7 {
                    let t = (2u128 + pn as u128 - (pivot as u128 * y as u128) % pn as u128)
                        % pn as u128;
                    y = ((y as u128 * t) % pn as u128) as u64;
                }
                y
            };
            for rr in col + 1..d {
                let lead = m[rr * d + col];
                if lead % p.pow(pv as u32) != 0 {
                    return None; // pivot not minimal in its column; bail
                }
                let factor = mul_mod(lead / p.pow(pv as u32), piv_inv, pn);
                for cc in col..d {
                    let sub = mul_mod(factor, m[col * d + cc], pn);
                    m[rr * d + cc] = add_mod(m[rr * d + cc], pn - sub, pn);
                }
            }
        }
        Some(total)
    }

    #[test]
    fn valuation_matches_determinant_oracle_for_small_valuations() {
        let mut rng = StdRng::seed_from_u64(11);
        for ring in [zp(3, 12), z9(8), z2_sqrt2(16)] {
            let f = ring.f() as u64;
            for _ in 0..40 {
                let coords: Vec<u64> = (0..ring.degree())
                    .map(|_| rng.gen_range(0..ring.modulus()))
                    .collect();
                let x = ring.elem_from_coords(&coords).unwrap();
                let v = ring.valuation_coords(x.coords());
                if let Valuation::Finite(vx) = v {
                    if f * vx < ring.precision() as u64 / 2 {
                        let det_v = det_valuation_oracle(&ring, &x).unwrap();
                        assert_eq!(det_v, f * vx, "x = {x}");
                    }
                }
            }
        }
    }

    #[test]
    fn valuation_is_additive() {
        let mut rng = StdRng::seed_from_u64(7);
        for ring in [zp(2, 16), z9(8), z2_sqrt2(16)] {
            for _ in 0..60 {
                let coords: Vec<u64> = (0..ring.degree())
                    .map(|_| rng.gen_range(0..ring.modulus()))
                    .collect();
                let x = ring.elem_from_coords(&coords).unwrap();
                let coords: Vec<u64> = (0..ring.degree())
                    .map(|_| rng.gen_range(0..ring.modulus()))
                    .collect();
                let y = ring.elem_from_coords(&coords).unwrap();
                if let (Valuation::Finite(a), Valuation::Finite(b)) =
                    (x.valuation(), y.valuation())
                {
                    if a + b < ring.e() as u64 * ring.precision() as u64 {
                        assert_eq!((&x * &y).valuation(), Valuation::Finite(a + b));
                    }
                }
            }
        }
    }

    #[test]
    fn ring_axioms_on_random_triples() {
        let mut rng = StdRng::seed_from_u64(3);
        for ring in [zp(5, 10), z9(8), z2_sqrt2(16)] {
            for _ in 0..40 {
                let rand_elem = |rng: &mut StdRng| {
                    let coords: Vec<u64> = (0..ring.degree())
                        .map(|_| rng.gen_range(0..ring.modulus()))
                        .collect();
                    ring.elem_from_coords(&coords).unwrap()
                };
                let (x, y, z) = (rand_elem(&mut rng), rand_elem(&mut rng), rand_elem(&mut rng));
                assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
                assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
                assert_eq!(&x * &y, &y * &x);
            }
        }
    }

    #[test]
    fn teichmueller_examples() {
        let r = zp(3, 12);
        assert_eq!(r.teichmueller(0), r.one());
        // residue 2 lifts to -1
        assert_eq!(r.teichmueller(1), r.from_i64(-1));

        let r = z9(8);
        for k in 0..8 {
            let t = r.teichmueller(k);
            assert_eq!(t.pow(8), r.one(), "t^{{q-1}} = 1 for k={k}");
            // reduces to the right residue
            let mut digits = vec![0u64; 2];
            let mut v = k + 1;
            for d in digits.iter_mut() {
                *d = v % 3;
                v /= 3;
            }
            assert_eq!(t.coords()[0] % 3, digits[0]);
            assert_eq!(t.coords()[1] % 3, digits[1]);
        }
        // a lift outside Z_3 exists
        let t = r.teichmueller(2); // residue u
        assert_ne!(t.coords()[1], 0);
        let g = r.teichmueller_generator();
        // generator has full order 8
        let mut acc = r.one();
        for _ in 0..7 {
            acc = &acc * &g;
            assert_ne!(acc, r.one());
        }
        assert_eq!(&acc * &g, r.one());
    }

    #[test]
    fn division_helpers() {
        let r = z2_sqrt2(16);
        let w = r.omega();
        let x = &r.from_u64(2) * &w; // v = 3
        let y = x.div_by_pi().unwrap();
        assert_eq!(y, r.from_u64(2));
        assert!(r.from_u64(3).div_by_pi().is_err());
        let z = r.from_u64(12).div_exact_p_pow(2).unwrap();
        assert_eq!(z, r.from_u64(3));
        assert!(r.from_u64(6).div_exact_p_pow(2).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = LocalRingSpec::tower(
            3,
            2,
            vec![-1, -1, 1],
            vec![EisCoeff::Int(-3), EisCoeff::Int(1)],
            12,
        );
        let s = serde_json::to_string(&spec).unwrap();
        let back: LocalRingSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
        let parsed: LocalRingSpec =
            serde_json::from_str(r#"{"p":3,"f":1,"eis":[-3,1],"N":12}"#).unwrap();
        assert!(make_ring(&parsed).is_ok());
    }
}
