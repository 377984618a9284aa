//! Potentials obeying `|v(x)| ≤ c(1+x)^{-ρ}` with `ρ > 2`, their tail
//! functionals, and tail functions `V(x) = ∫ₓ^∞ …` with the `⋆` product.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, ChebRule, NP};

/// Decay bound `|v(x)| ≤ c(1+x)^{-ρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayCertificate {
    pub c: f64,
    pub rho: f64,
}

impl DecayCertificate {
    /// Validates `c > 0` and `ρ > 2`.
    pub fn new(c: f64, rho: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && rho > 2.0 && rho.is_finite()) {
            return Err(Error::InvalidCertificate { c, rho });
        }
        Ok(DecayCertificate { c, rho })
    }

    /// `c(1+x)^{-ρ}`.
    pub fn bound(&self, x: f64) -> f64 {
        self.c * (1.0 + x).powf(-self.rho)
    }

    /// `∫ₓ^∞ c(1+y)^{-ρ} dy`.
    pub fn tail_bound(&self, x: f64) -> f64 {
        self.c * (1.0 + x).powf(1.0 - self.rho) / (self.rho - 1.0)
    }

    /// `∫ₓ^∞ y·c(1+y)^{-ρ} dy`.
    pub fn moment_tail_bound(&self, x: f64) -> f64 {
        let t = 1.0 + x;
        self.c * (t.powf(2.0 - self.rho) / (self.rho - 2.0) - t.powf(1.0 - self.rho) / (self.rho - 1.0))
    }
}

/// Named potential families.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PotentialKind {
    /// `v ≡ 0`.
    Zero,
    /// `v = −d` on `[0, a)`, zero afterwards.
    SquareWell { depth: f64, width: f64 },
    /// `v = c(1+x)^{-ρ}`.
    Power { c: f64, rho: f64 },
    /// `v = c e^{−μx}`.
    Exponential { c: f64, mu: f64 },
    /// User supplied evaluator.
    Custom,
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real potential on `[0, ∞)` with its decay certificate.
#[derive(Clone)]
pub struct Potential {
    kind: PotentialKind,
    certificate: DecayCertificate,
    support: Option<f64>,
    breakpoints: Vec<f64>,
    custom: Option<Eval>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("kind", &self.kind)
            .field("certificate", &self.certificate)
            .field("support", &self.support)
            .finish()
    }
}

/// `∫ₓ^∞ v`, `∫ₓ^∞ |v|`, `∫ₓ^∞ y|v(y)|dy` with their truncation data.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailFunctionals {
    pub vv: f64,
    pub abs_tail: f64,
    pub first_moment: f64,
    /// Quadrature cut-off.
    pub x_cut: f64,
    /// Certificate bound on what lies beyond `x_cut` and was not added.
    pub remainder_bound: f64,
}

const SIMPSON_TOL: f64 = 1e-12;

impl Potential {
    /// The zero potential.
    pub fn zero() -> Self {
        Potential {
            kind: PotentialKind::Zero,
            certificate: DecayCertificate { c: 1.0, rho: 3.0 },
            support: Some(0.0),
            breakpoints: Vec::new(),
            custom: None,
        }
    }

    /// `v = −d` on `[0, a)`.
    pub fn square_well(depth: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && depth.is_finite()) {
            return Err(Error::InvalidPotential("square well needs finite depth and width > 0"));
        }
        let c = if depth == 0.0 { 1.0 } else { depth.abs() * (1.0 + width).powi(3) };
        Ok(Potential {
            kind: PotentialKind::SquareWell { depth, width },
            certificate: DecayCertificate { c, rho: 3.0 },
            support: Some(width),
            breakpoints: vec![width],
            custom: None,
        })
    }

    /// `v = c(1+x)^{-ρ}` with `ρ > 2`.
    pub fn power(c: f64, rho: f64) -> Result<Self> {
        if !(c != 0.0 && c.is_finite()) {
            return Err(Error::InvalidPotential("power potential needs a finite nonzero amplitude"));
        }
        let certificate = DecayCertificate::new(c.abs(), rho)?;
        Ok(Potential { kind: PotentialKind::Power { c, rho }, certificate, support: None, breakpoints: Vec::new(), custom: None })
    }

    /// `v = c e^{−μx}` with `μ > 0`.
    pub fn exponential(c: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && c.is_finite() && c != 0.0) {
            return Err(Error::InvalidPotential("exponential potential needs mu > 0 and finite nonzero c"));
        }
        let rho = 3.0;
        // max over x ≥ 0 of (1+x)^ρ e^{−μx}
        let peak = if rho / mu >= 1.0 { (rho / mu).powf(rho) * (-(rho - mu)).exp() } else { 1.0 };
        let certificate = DecayCertificate::new(c.abs() * peak * (1.0 + 1e-12), rho)?;
        Ok(Potential { kind: PotentialKind::Exponential { c, mu }, certificate, support: None, breakpoints: Vec::new(), custom: None })
    }

    /// A user-supplied potential. The certificate is mandatory; `support`
    /// marks compact support and `breakpoints` the jump locations.
    pub fn custom<F>(f: F, certificate: DecayCertificate, support: Option<f64>, breakpoints: Vec<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let certificate = DecayCertificate::new(certificate.c, certificate.rho)?;
        let mut breakpoints = breakpoints;
        breakpoints.retain(|b| *b > 0.0 && b.is_finite());
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Potential { kind: PotentialKind::Custom, certificate, support, breakpoints, custom: Some(Arc::new(f)) })
    }

    /// Replaces the certificate (used for config overrides).
    pub fn with_certificate(mut self, certificate: DecayCertificate) -> Result<Self> {
        self.certificate = DecayCertificate::new(certificate.c, certificate.rho)?;
        Ok(self)
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn certificate(&self) -> DecayCertificate {
        self.certificate
    }

    /// End of the support when the potential vanishes identically beyond it.
    pub fn support_end(&self) -> Option<f64> {
        self.support
    }

    /// Interior jump locations.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    /// `v(x)` for `x ≥ 0`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth, width } => {
                if x < width {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialKind::Power { c, rho } => c * (1.0 + x).powf(-rho),
            PotentialKind::Exponential { c, mu } => c * (-mu * x).exp(),
            PotentialKind::Custom => self.custom.as_ref().map_or(0.0, |f| f(x)),
        }
    }

    /// `v(x)` with the certificate checked at `x`.
    pub fn eval_with_certificate(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeX(x));
        }
        let v = self.eval(x);
        if !v.is_finite() {
            return Err(Error::NonFinite("potential value"));
        }
        let bound = self.certificate.bound(x);
        if v.abs() > bound * (1.0 + 1e-12) {
            return Err(Error::CertificateViolation { x, value: v.abs(), bound });
        }
        Ok(v)
    }

    /// Spot-checks the certificate on a dense grid of `[0, x_max]` plus a
    /// geometric sweep beyond it.
    pub fn check_certificate(&self, x_max: f64, n: usize) -> Result<()> {
        for j in 0..=n {
            self.eval_with_certificate(x_max * j as f64 / n as f64)?;
        }
        let mut x = x_max.max(1.0);
        while x < 1e8 {
            self.eval_with_certificate(x)?;
            x *= 1.37;
        }
        Ok(())
    }

    /// `v'(x)` away from breakpoints.
    pub fn derivative(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero | PotentialKind::SquareWell { .. } => 0.0,
            PotentialKind::Power { c, rho } => -rho * c * (1.0 + x).powf(-rho - 1.0),
            PotentialKind::Exponential { c, mu } => -mu * c * (-mu * x).exp(),
            PotentialKind::Custom => {
                let h = 1e-5 * (1.0 + x);
                let lo = (x - h).max(0.0);
                (self.eval(x + h) - self.eval(lo)) / (x + h - lo)
            }
        }
    }

    /// Upper bound for `sup |v|` on `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth, width } => {
                if a < width {
                    depth.abs()
                } else {
                    0.0
                }
            }
            PotentialKind::Power { c, rho } => c.abs() * (1.0 + a).powf(-rho),
            PotentialKind::Exponential { c, mu } => c.abs() * (-mu * a).exp(),
            PotentialKind::Custom => {
                let mut m: f64 = 0.0;
                for j in 0..=16 {
                    let x = a + (b - a) * j as f64 / 16.0;
                    m = m.max(self.eval(x).abs());
                }
                (1.25 * m).min(self.certificate.bound(a))
            }
        }
    }

    /// Length over which `v` varies appreciably near `x`; panel widths never
    /// exceed it.
    pub fn variation_scale(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero | PotentialKind::SquareWell { .. } => f64::INFINITY,
            PotentialKind::Power { .. } => 0.5 * (1.0 + x),
            PotentialKind::Exponential { mu, .. } => 3.0 / mu,
            PotentialKind::Custom => 0.25 * (1.0 + x).min(2.0),
        }
    }

    /// `∫ₓ^∞ v^m` in closed form where the family allows it.
    pub fn tail_power_integral(&self, m: u32, x: f64) -> Option<f64> {
        match self.kind {
            PotentialKind::Zero => Some(0.0),
            PotentialKind::SquareWell { depth, width } => {
                Some(if x >= width { 0.0 } else { (-depth).powi(m as i32) * (width - x) })
            }
            PotentialKind::Power { c, rho } => {
                let e = m as f64 * rho;
                Some(c.powi(m as i32) * (1.0 + x).powf(1.0 - e) / (e - 1.0))
            }
            PotentialKind::Exponential { c, mu } => {
                let r = m as f64 * mu;
                Some(c.powi(m as i32) * (-r * x).exp() / r)
            }
            PotentialKind::Custom => None,
        }
    }

    /// Exact tails of the three functionals beyond `x` for the families where
    /// they exist in closed form.
    fn closed_tail(&self, x: f64) -> Option<(f64, f64, f64)> {
        match self.kind {
            PotentialKind::Zero => Some((0.0, 0.0, 0.0)),
            PotentialKind::SquareWell { depth, width } => {
                if x >= width {
                    Some((0.0, 0.0, 0.0))
                } else {
                    let l = width - x;
                    let m = 0.5 * (width * width - x * x);
                    Some((-depth * l, depth.abs() * l, depth.abs() * m))
                }
            }
            PotentialKind::Power { c, rho } => {
                let t = 1.0 + x;
                let vv = c * t.powf(1.0 - rho) / (rho - 1.0);
                let mom = c.abs() * (t.powf(2.0 - rho) / (rho - 2.0) - t.powf(1.0 - rho) / (rho - 1.0));
                Some((vv, vv.abs(), mom))
            }
            PotentialKind::Exponential { c, mu } => {
                let e = (-mu * x).exp();
                let vv = c * e / mu;
                Some((vv, vv.abs(), c.abs() * e * (x / mu + 1.0 / (mu * mu))))
            }
            PotentialKind::Custom => None,
        }
    }

    /// Quadrature cut-off: support end, or where the certificate tail of
    /// `∫|v|` drops below `1e-12·c`.
    pub fn x_cut(&self) -> f64 {
        if let Some(a) = self.support {
            return a;
        }
        let DecayCertificate { rho, .. } = self.certificate;
        (1.0 / ((rho - 1.0) * 1e-12)).powf(1.0 / (rho - 1.0)) - 1.0
    }

    /// `(∫ₓ^∞ v, ∫ₓ^∞ |v|, ∫ₓ^∞ y|v|)` by adaptive Simpson on `[x, x_cut]`.
    /// Families with a closed-form tail get it added beyond `x_cut`; for
    /// custom potentials the certificate tail is returned as a remainder
    /// bound instead.
    pub fn tail_functionals(&self, x: f64) -> Result<TailFunctionals> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeX(x));
        }
        let x_cut = self.x_cut().max(x);
        let mut cuts = vec![x];
        for &b in &self.breakpoints {
            if b > x && b < x_cut {
                cuts.push(b);
            }
        }
        // geometric segments so every Simpson call sees resolved structure
        let mut s = x;
        loop {
            let next = 2.0 * (1.0 + s) - 1.0;
            if next >= x_cut {
                break;
            }
            cuts.push(next);
            s = next;
        }
        cuts.push(x_cut);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let tol = SIMPSON_TOL * self.certificate.c.max(1.0) / cuts.len().max(1) as f64;
        let (mut vv, mut at, mut fm) = (0.0, 0.0, 0.0);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            // open endpoints avoid sampling the wrong side of a jump
            let ev = |y: f64| self.eval(y.clamp(a + 1e-15 * (1.0 + a), b - 1e-15 * (1.0 + b)));
            vv += adaptive_simpson(&ev, a, b, tol);
            at += adaptive_simpson(&|y: f64| ev(y).abs(), a, b, tol);
            fm += adaptive_simpson(&|y: f64| y * ev(y).abs(), a, b, tol);
        }
        let mut remainder_bound = 0.0;
        if self.support.is_none() {
            match self.closed_tail(x_cut) {
                Some((tv, ta, tm)) => {
                    vv += tv;
                    at += ta;
                    fm += tm;
                }
                None => {
                    remainder_bound = self.certificate.moment_tail_bound(x_cut);
                }
            }
        }
        Ok(TailFunctionals { vv, abs_tail: at, first_moment: fm, x_cut, remainder_bound })
    }

    /// Closed-form functionals when available (used as an oracle).
    pub fn tail_functionals_exact(&self, x: f64) -> Option<(f64, f64, f64)> {
        if let PotentialKind::SquareWell { width, .. } = self.kind {
            if x >= width {
                return Some((0.0, 0.0, 0.0));
            }
        }
        self.closed_tail(x)
    }

    /// Panel layout on which tail functions of this potential are sampled.
    pub fn analysis_layout(&self, x_end: f64) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = vec![0.0];
        cuts.extend(self.breakpoints.iter().copied().filter(|b| *b < x_end));
        let end = match self.support {
            Some(a) => a.min(x_end),
            None => x_end,
        };
        if end <= 0.0 {
            return Vec::new();
        }
        cuts.push(end);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut panels = Vec::new();
        for w in cuts.windows(2) {
            let (mut a, b) = (w[0], w[1]);
            while a < b {
                let h = self.variation_scale(a).min(1.0).max(1e-3);
                let mut e = (a + h).min(b);
                if b - e < 0.25 * h {
                    e = b;
                }
                panels.push((a, e));
                a = e;
            }
        }
        panels
    }

    /// `V_v(x) = ∫ₓ^∞ v` as a sampled tail function on `[0, x_end]` with an
    /// analytic model beyond.
    pub fn tail_function(&self, x_end: f64) -> Result<TailFunction> {
        let layout = self.analysis_layout(x_end);
        let rule = Arc::new(ChebRule::new());
        let mut vals = Vec::with_capacity(layout.len());
        for &(a, b) in &layout {
            let nodes = rule.nodes(a, b);
            let mut v = [0.0; NP];
            for j in 0..NP {
                v[j] = match self.tail_functionals_exact(nodes[j]) {
                    Some((vv, _, _)) => vv,
                    None => self.tail_functionals(nodes[j])?.vv,
                };
            }
            vals.push(v);
        }
        let last = layout.last().map_or(0.0, |p| p.1);
        let rho = self.certificate.rho;
        let tail = match self.kind {
            PotentialKind::Zero | PotentialKind::SquareWell { .. } => TailModel::Zero,
            PotentialKind::Power { c, rho } => TailModel::Power { amp: c / (rho - 1.0), exponent: rho - 1.0 },
            PotentialKind::Exponential { c, mu } => TailModel::Exp { amp: c / mu, rate: mu },
            PotentialKind::Custom => {
                if self.support.is_some() {
                    TailModel::Zero
                } else {
                    let at = self.tail_functionals(last)?.vv;
                    TailModel::Power { amp: at * (1.0 + last).powf(rho - 1.0), exponent: rho - 1.0 }
                }
            }
        };
        let exponent = match self.kind {
            PotentialKind::Zero | PotentialKind::SquareWell { .. } | PotentialKind::Exponential { .. } => f64::INFINITY,
            _ => rho - 1.0,
        };
        TailFunction::from_parts(rule, layout, vals, tail, exponent)
    }
}

/// Analytic model of a tail function beyond the sampled range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    Zero,
    /// `amp·(1+x)^{-exponent}`.
    Power { amp: f64, exponent: f64 },
    /// `amp·e^{−rate·x}`.
    Exp { amp: f64, rate: f64 },
}

impl TailModel {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            TailModel::Zero => 0.0,
            TailModel::Power { amp, exponent } => amp * (1.0 + x).powf(-exponent),
            TailModel::Exp { amp, rate } => amp * (-rate * x).exp(),
        }
    }

    fn product(&self, other: &TailModel, x_end: f64) -> TailModel {
        use TailModel::*;
        match (*self, *other) {
            (Zero, _) | (_, Zero) => Zero,
            (Power { amp: a, exponent: e }, Power { amp: b, exponent: f }) => Power { amp: a * b, exponent: e + f },
            (Exp { amp: a, rate: r }, Exp { amp: b, rate: s }) => Exp { amp: a * b, rate: r + s },
            (Exp { amp, rate }, Power { amp: b, exponent }) | (Power { amp: b, exponent }, Exp { amp, rate }) => {
                // envelope: freeze the algebraic factor at the sampling edge
                Exp { amp: amp * b * (1.0 + x_end).powf(-exponent), rate }
            }
        }
    }

    /// `∫ₓ^∞` of the model, itself a model.
    fn integral(&self) -> TailModel {
        match *self {
            TailModel::Zero => TailModel::Zero,
            TailModel::Power { amp, exponent } => TailModel::Power { amp: amp / (exponent - 1.0), exponent: exponent - 1.0 },
            TailModel::Exp { amp, rate } => TailModel::Exp { amp: amp / rate, rate },
        }
    }
}

/// A function on `[0, ∞)` sampled on Chebyshev panels with an analytic
/// model past the last panel, carrying its decay exponent `e`
/// (`sup (1+x)^e |V| < ∞`).
#[derive(Debug, Clone)]
pub struct TailFunction {
    rule: Arc<ChebRule>,
    layout: Vec<(f64, f64)>,
    vals: Vec<[f64; NP]>,
    tail: TailModel,
    /// Decay exponent; `f64::INFINITY` for compact support or exponential decay.
    pub exponent: f64,
}

impl TailFunction {
    fn from_parts(
        rule: Arc<ChebRule>,
        layout: Vec<(f64, f64)>,
        vals: Vec<[f64; NP]>,
        tail: TailModel,
        exponent: f64,
    ) -> Result<Self> {
        if vals.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tail function samples"));
        }
        Ok(TailFunction { rule, layout, vals, tail, exponent })
    }

    /// Samples `f` on `layout`, using `tail` beyond it.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, layout: Vec<(f64, f64)>, tail: TailModel, exponent: f64) -> Result<Self> {
        let rule = Arc::new(ChebRule::new());
        let vals = layout
            .iter()
            .map(|&(a, b)| {
                let nodes = rule.nodes(a, b);
                core::array::from_fn(|j| {
                    // one-sided limits at panel ends
                    let x = nodes[j];
                    let eps = 1e-13 * (b - a);
                    let xs = if j == 0 { x + eps } else if j == NP - 1 { x - eps } else { x };
                    f(xs)
                })
            })
            .collect();
        Self::from_parts(rule, layout, vals, tail, exponent)
    }

    /// Identically zero.
    pub fn zero() -> Self {
        TailFunction {
            rule: Arc::new(ChebRule::new()),
            layout: Vec::new(),
            vals: Vec::new(),
            tail: TailModel::Zero,
            exponent: f64::INFINITY,
        }
    }

    pub fn layout(&self) -> &[(f64, f64)] {
        &self.layout
    }

    /// End of the sampled range.
    pub fn x_end(&self) -> f64 {
        self.layout.last().map_or(0.0, |p| p.1)
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// Evaluates at `x ≥ 0`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.layout.is_empty() || x >= self.x_end() {
            return self.tail.eval(x);
        }
        let idx = self.layout.partition_point(|p| p.1 <= x).min(self.layout.len() - 1);
        let (a, b) = self.layout[idx];
        let s = (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        self.rule.interp(&self.vals[idx], s)
    }

    /// `sup_x (1+x)^e |V(x)|` over the sampled nodes and the tail model.
    pub fn sup_constant(&self, e: f64) -> f64 {
        let mut m: f64 = 0.0;
        for (p, v) in self.layout.iter().zip(&self.vals) {
            let nodes = self.rule.nodes(p.0, p.1);
            for j in 0..NP {
                m = m.max((1.0 + nodes[j]).powf(e) * v[j].abs());
            }
        }
        let x = self.x_end();
        m.max((1.0 + x).powf(e) * self.tail.eval(x).abs())
    }

    /// Membership in `𝕍_p`: decay exponent strictly above `p`.
    pub fn in_v(&self, p: f64) -> bool {
        self.exponent > p
    }

    fn aligned(&self, other: &TailFunction) -> Result<Vec<[f64; NP]>> {
        if self.layout == other.layout {
            return Ok(other.vals.clone());
        }
        if other.layout.is_empty() && other.tail == TailModel::Zero {
            return Ok(vec![[0.0; NP]; self.layout.len()]);
        }
        Ok(self
            .layout
            .iter()
            .map(|&(a, b)| {
                let nodes = self.rule.nodes(a, b);
                core::array::from_fn(|j| other.eval(nodes[j]))
            })
            .collect())
    }

    /// Pointwise product (used for `V_u·V₁ ∈ 𝕍₂`).
    pub fn product(&self, other: &TailFunction) -> Result<TailFunction> {
        let (base, rhs) = if self.layout.len() >= other.layout.len() { (self, other) } else { (other, self) };
        let ov = base.aligned(rhs)?;
        let vals = base.vals.iter().zip(&ov).map(|(a, b)| core::array::from_fn(|j| a[j] * b[j])).collect();
        let tail = base.tail.product(&rhs.tail, base.x_end());
        TailFunction::from_parts(base.rule.clone(), base.layout.clone(), vals, tail, self.exponent + other.exponent)
    }

    /// `∫ₓ^∞ V` on the same layout.
    pub fn integral(&self) -> Result<TailFunction> {
        let tail = self.tail.integral();
        let mut acc = tail.eval(self.x_end());
        let mut vals = vec![[0.0; NP]; self.layout.len()];
        for (idx, (&(a, b), v)) in self.layout.iter().zip(&self.vals).enumerate().rev() {
            let half = 0.5 * (b - a);
            let mut out = [0.0; NP];
            for i in 0..NP {
                let mut s = 0.0;
                for j in 0..NP {
                    s += self.rule.right[i][j] * v[j];
                }
                out[i] = acc + half * s;
            }
            acc = out[0];
            vals[idx] = out;
        }
        TailFunction::from_parts(self.rule.clone(), self.layout.clone(), vals, tail, self.exponent - 1.0)
    }

    /// The sampled part alone, zero past [`x_end`](Self::x_end).
    pub fn truncated(&self) -> TailFunction {
        let mut out = self.clone();
        out.tail = TailModel::Zero;
        out
    }

    /// Scalar multiple.
    pub fn scale(&self, s: f64) -> TailFunction {
        let mut out = self.clone();
        out.vals.iter_mut().flatten().for_each(|v| *v *= s);
        out.tail = match out.tail {
            TailModel::Zero => TailModel::Zero,
            TailModel::Power { amp, exponent } => TailModel::Power { amp: amp * s, exponent },
            TailModel::Exp { amp, rate } => TailModel::Exp { amp: amp * s, rate },
        };
        out
    }
}

/// `V₁⋆V₂(x) = ∫ₓ^∞ V₁V₂`. Both inputs must lie in `𝕍₁`; the result has
/// exponent `e₁ + e₂ − 1`.
pub fn star_product(v1: &TailFunction, v2: &TailFunction) -> Result<TailFunction> {
    if !(v1.in_v(1.0) && v2.in_v(1.0)) {
        return Err(Error::MissingDecay);
    }
    v1.product(v2)?.integral()
}
