//! Piecewise power functions on `[0,1]` with exact integral arithmetic.
//!
//! Every function here is a finite union of *pieces* — on a half-open
//! interval `[a, b)` the value is `c * s * t^(-gamma)` with `t = (x-a)/(b-a)`
//! the normalized position, `c` a signed rational coefficient, `s` a positive
//! symbolic factor, and `gamma >= 0` a rational singularity exponent — plus
//! *dyadic singular families*: infinite tails of such pieces packed into the
//! left half of a window, one per dyadic block, with exponents climbing
//! toward a limit. Because the singular variable is normalized, the q-th
//! power integral of a piece has the exact closed form
//! `|c*s|^q * (b-a) / (1 - q*gamma)` whenever `q*gamma < 1`, and diverges at
//! the left endpoint whenever `q*gamma >= 1`; summability queries are
//! therefore fully decidable in this class — verdicts are always `Converges`
//! with a symbolic bound or `Diverges` with a replayable certificate, never
//! numeric evidence.
//!
//! On top of the representation sit the canonical witness summable to
//! exactly the power `p` and to no higher exponent ([`fn_witness`]), the
//! measure-exact affine transport onto subintervals of the right half
//! ([`rescale_to_interval`]), and the coefficient-indexed operator whose
//! component images occupy pairwise disjoint dyadic target intervals
//! ([`build_fn_operator`]), so that membership of a combination reduces to
//! membership of its first nonzero component.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::numerics::{triangle_exponent, Rational, RealExpr};

/// Divergence grid checked when an operator is built: the generator must be
/// certified outside every exponent `p + 1/g` for `g = 1..=GRID`.
const DIVERGENCE_GRID: u32 = 2;

/// Cap on dyadic block searches (locating the block containing a point, or
/// matching a certificate interval). A block index beyond this corresponds
/// to a denominator of more than `2^4096`.
const BLOCK_SCAN_LIMIT: u32 = 4_096;

// ---------------------------------------------------------------------------
// Pieces
// ---------------------------------------------------------------------------

/// One power-law piece: on `[a, b)` the value is
/// `coeff * scale * ((x - a)/(b - a))^(-gamma)`, and `0` elsewhere.
///
/// The coefficient is split into a signed rational `coeff` and a positive
/// symbolic `scale` so that sign bookkeeping stays rational while irrational
/// normalizations (roots of rationals) remain exact. `gamma = 0` gives a
/// constant piece.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Piece {
    interval: (Rational, Rational),
    gamma: Rational,
    coeff: Rational,
    #[serde(rename = "scale_expr")]
    scale: RealExpr,
}

/// Exact q-th power integral of a single piece.
#[derive(Clone, Debug, PartialEq)]
pub enum PowerIntegral {
    /// `q*gamma < 1`: the closed form `|coeff*scale|^q (b-a) / (1 - q*gamma)`.
    Finite(RealExpr),
    /// `q*gamma >= 1`: the integral diverges at the left endpoint.
    Divergent { exponent: Rational },
}

impl PowerIntegral {
    pub fn finite(&self) -> Option<&RealExpr> {
        match self {
            PowerIntegral::Finite(e) => Some(e),
            PowerIntegral::Divergent { .. } => None,
        }
    }
}

impl Piece {
    /// A new piece on `[a, b) ⊂ [0, 1]` with `gamma >= 0`, a nonzero
    /// coefficient, and a nonzero scale. Zero pieces are represented by
    /// absence, so a vanishing coefficient is rejected.
    pub fn new(
        interval: (Rational, Rational),
        gamma: Rational,
        coeff: Rational,
        scale: RealExpr,
    ) -> crate::Result<Self> {
        let (a, b) = &interval;
        if a.is_negative() || *b > Rational::one() || a >= b {
            return Err(Error::InvalidConstruction(format!(
                "piece interval [{a}, {b}) is not a nonempty subinterval of [0, 1]"
            )));
        }
        if gamma.is_negative() {
            return Err(Error::InvalidConstruction(format!(
                "negative singularity exponent {gamma}"
            )));
        }
        if coeff.is_zero() {
            return Err(Error::InvalidConstruction(
                "a piece with zero coefficient is the empty piece; omit it instead".into(),
            ));
        }
        if scale.is_zero() {
            return Err(Error::InvalidConstruction(
                "a piece with zero scale is the empty piece; omit it instead".into(),
            ));
        }
        Ok(Piece {
            interval,
            gamma,
            coeff,
            scale,
        })
    }

    /// Constant piece: value `value` on `[a, b)`.
    pub fn constant(interval: (Rational, Rational), value: Rational) -> crate::Result<Self> {
        Piece::new(interval, Rational::zero(), value, RealExpr::one())
    }

    pub fn interval(&self) -> &(Rational, Rational) {
        &self.interval
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn scale(&self) -> &RealExpr {
        &self.scale
    }

    fn length(&self) -> Rational {
        &self.interval.1 - &self.interval.0
    }

    /// Exact `∫ |piece|^q` over the piece's interval.
    pub fn power_integral(&self, q: &Rational) -> crate::Result<PowerIntegral> {
        if !q.is_positive() {
            return Err(Error::Precondition(format!(
                "power integrals are defined for positive exponents, got {q}"
            )));
        }
        let e = &self.gamma * q;
        if e >= Rational::one() {
            return Ok(PowerIntegral::Divergent { exponent: e });
        }
        let rational_factor = &self.length() / &(&Rational::one() - &e);
        Ok(PowerIntegral::Finite(RealExpr::product([
            RealExpr::pow(RealExpr::from_rational(self.coeff.abs())?, q.clone())?,
            RealExpr::pow(self.scale.clone(), q.clone())?,
            RealExpr::from_rational(rational_factor)?,
        ])))
    }

    /// The magnitude factor `|coeff|^q * scale^q` of the divergent integrand.
    fn singular_constant(&self, q: &Rational) -> crate::Result<RealExpr> {
        Ok(RealExpr::product([
            RealExpr::pow(RealExpr::from_rational(self.coeff.abs())?, q.clone())?,
            RealExpr::pow(self.scale.clone(), q.clone())?,
        ]))
    }

    fn scaled(&self, c: &Rational) -> Self {
        Piece {
            interval: self.interval.clone(),
            gamma: self.gamma.clone(),
            coeff: &self.coeff * c,
            scale: self.scale.clone(),
        }
    }

    /// Image under the affine map `x -> start + x * length`.
    fn transported(&self, start: &Rational, length: &Rational) -> Self {
        Piece {
            interval: (
                start + &(&self.interval.0 * length),
                start + &(&self.interval.1 * length),
            ),
            gamma: self.gamma.clone(),
            coeff: self.coeff.clone(),
            scale: self.scale.clone(),
        }
    }

    /// Signed exact value at `x`, as a `(rational, positive expression)`
    /// pair, or `None` at the singular left endpoint.
    fn value_at(&self, x: &Rational) -> Option<(Rational, RealExpr)> {
        if *x < self.interval.0 || *x >= self.interval.1 {
            return None;
        }
        let t = &(x - &self.interval.0) / &self.length();
        if self.gamma.is_zero() {
            return Some((self.coeff.clone(), self.scale.clone()));
        }
        if t.is_zero() {
            return None;
        }
        let power = RealExpr::pow(
            RealExpr::from_rational(t).expect("normalized position is positive"),
            -&self.gamma,
        )
        .expect("positive base");
        Some((
            self.coeff.clone(),
            RealExpr::product([self.scale.clone(), power]),
        ))
    }
}

// ---------------------------------------------------------------------------
// Dyadic singular families
// ---------------------------------------------------------------------------

/// An infinite tail of singular pieces packed into the left half of a
/// window.
///
/// With window `[w0, w1)` of width `w = w1 - w0` and ambient exponent `p`,
/// block `k >= 1` is the interval `[w0 + w*2^(-k-1), w0 + w*2^(-k))` and
/// carries the piece with exponent `gamma_k = k/(k*p + 1)`, coefficient
/// `amplitude * 2^(-k)`, and scale `(2^(k+1)/(k*p + 1))^(1/p)` — normalized
/// so the block's p-th power integral is exactly `|amplitude|^p * w *
/// 2^(-k*p)`. The exponents `q*gamma_k` climb toward `q/p`, so for `q <= p`
/// every block is integrable while for `q > p` the block `k = ceil(1/(q-p))`
/// already fails; the family is summable to the power `p` and to no higher
/// exponent. The union of the blocks is `(w0, w0 + w/2)`: the family never
/// touches the right half of its window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicSingularFamily {
    amplitude: Rational,
    window: (Rational, Rational),
}

impl DyadicSingularFamily {
    pub fn new(amplitude: Rational, window: (Rational, Rational)) -> crate::Result<Self> {
        let (a, b) = &window;
        if a.is_negative() || *b > Rational::one() || a >= b {
            return Err(Error::InvalidConstruction(format!(
                "family window [{a}, {b}) is not a nonempty subinterval of [0, 1]"
            )));
        }
        if amplitude.is_zero() {
            return Err(Error::InvalidConstruction(
                "a family with zero amplitude is empty; omit it instead".into(),
            ));
        }
        Ok(DyadicSingularFamily { amplitude, window })
    }

    pub fn amplitude(&self) -> &Rational {
        &self.amplitude
    }

    pub fn window(&self) -> &(Rational, Rational) {
        &self.window
    }

    fn width(&self) -> Rational {
        &self.window.1 - &self.window.0
    }

    /// Closure of the union of the blocks: `[w0, w0 + w/2)`.
    pub fn support(&self) -> (Rational, Rational) {
        let half = &self.width() / &Rational::from_int(2);
        (self.window.0.clone(), &self.window.0 + &half)
    }

    /// Materialize block `k >= 1` as an explicit piece.
    pub fn piece(&self, k: u32, p: &Rational) -> crate::Result<Piece> {
        if k == 0 {
            return Err(Error::Precondition("family blocks start at k = 1".into()));
        }
        if !p.is_positive() {
            return Err(Error::Precondition(format!(
                "family pieces need a positive ambient exponent, got {p}"
            )));
        }
        let w = self.width();
        let start = &self.window.0 + &(&w * &Rational::pow2_neg(k + 1));
        let end = &self.window.0 + &(&w * &Rational::pow2_neg(k));
        let kp1 = &(&Rational::from_int(i64::from(k)) * p) + &Rational::one();
        let gamma = &Rational::from_int(i64::from(k)) / &kp1;
        let coeff = &self.amplitude * &Rational::pow2_neg(k);
        let base = &Rational::from_int(2).pow_i(i64::from(k) + 1)? / &kp1;
        let scale = RealExpr::pow(RealExpr::from_rational(base)?, p.recip()?)?;
        Piece::new((start, end), gamma, coeff, scale)
    }

    /// The first block whose q-th power integral diverges: `ceil(1/(q-p))`
    /// when `q > p`, none otherwise.
    fn divergence_block(&self, p: &Rational, q: &Rational) -> crate::Result<Option<u32>> {
        if q <= p {
            return Ok(None);
        }
        let k = (q - p).recip()?.ceil_int();
        match k.to_u32() {
            Some(k) => Ok(Some(k.max(1))),
            None => Err(Error::BudgetExceeded {
                context: format!(
                    "first divergent block of the family at exponent {q} has index beyond u32"
                ),
            }),
        }
    }

    /// Symbolic upper bound on `sum_k ∫ |block_k|^q` for `0 < q <= p`; exact
    /// at `q = p`.
    ///
    /// At `q = p` the blocks telescope to the geometric series
    /// `|amp|^p * w * sum_k 2^(-k*p)`. For `q < p` each block integral is
    /// dominated by `|amp|^q * w * (p/(p-q)) * (1/2)^(1-q/p) *
    /// 2^(-k*(q+1-q/p))`, using that `(k*p+1)/(k*(p-q)+1)` increases to
    /// `p/(p-q)` and `(2^(k+1)/(k*p+1))^(q/p) <= 2^((k+1)*q/p)`.
    fn convergent_mass(&self, p: &Rational, q: &Rational) -> crate::Result<RealExpr> {
        if !q.is_positive() || q > p {
            return Err(Error::Precondition(format!(
                "family mass bound needs 0 < q <= p, got q = {q}, p = {p}"
            )));
        }
        let half = RealExpr::from_rational(Rational::new(1, 2))?;
        let amp_power = RealExpr::pow(
            RealExpr::from_rational(self.amplitude.abs())?,
            q.clone(),
        )?;
        let width = RealExpr::from_rational(self.width())?;
        if q == p {
            let tail = RealExpr::geometric(RealExpr::pow(half, p.clone())?, 1)?;
            return Ok(RealExpr::product([amp_power, width, tail]));
        }
        let q_over_p = q / p;
        let lead = RealExpr::from_rational(p / &(p - q))?;
        let slack = RealExpr::pow(half.clone(), &Rational::one() - &q_over_p)?;
        let ratio_exponent = &(q + &Rational::one()) - &q_over_p;
        let tail = RealExpr::geometric(RealExpr::pow(half, ratio_exponent)?, 1)?;
        Ok(RealExpr::product([amp_power, width, lead, slack, tail]))
    }

    fn scaled(&self, c: &Rational) -> Self {
        DyadicSingularFamily {
            amplitude: &self.amplitude * c,
            window: self.window.clone(),
        }
    }

    fn transported(&self, start: &Rational, length: &Rational) -> Self {
        DyadicSingularFamily {
            amplitude: self.amplitude.clone(),
            window: (
                start + &(&self.window.0 * length),
                start + &(&self.window.1 * length),
            ),
        }
    }

    /// Index of the block containing normalized window position `t`, when
    /// `t` lies in some block: `2^(-k-1) <= t < 2^(-k)`.
    fn block_of(&self, t: &Rational) -> crate::Result<Option<u32>> {
        if !t.is_positive() || *t >= Rational::new(1, 2) {
            return Ok(None);
        }
        let half = Rational::new(1, 2);
        let two = Rational::from_int(2);
        let mut shifted = t * &two;
        let mut k = 1u32;
        while shifted < half {
            shifted = &shifted * &two;
            k += 1;
            if k > BLOCK_SCAN_LIMIT {
                return Err(Error::BudgetExceeded {
                    context: format!(
                        "block search passed index {BLOCK_SCAN_LIMIT} without reaching position {t}"
                    ),
                });
            }
        }
        Ok(Some(k))
    }
}

// ---------------------------------------------------------------------------
// Piecewise power functions
// ---------------------------------------------------------------------------

/// A finite union of pieces and dyadic singular families with pairwise
/// disjoint supports, tagged with its ambient summability exponent `p > 0`.
///
/// Construction enforces that every explicit piece is p-th power integrable
/// (`p * gamma < 1`; family blocks satisfy this automatically), so a value
/// of this type always lies in the space of exponent `p`. The zero function
/// is the empty union.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewisePowerFunction {
    p: Rational,
    pieces: Vec<Piece>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    families: Vec<DyadicSingularFamily>,
}

/// One support element, in ascending position order.
enum SupportItem<'a> {
    Piece(&'a Piece),
    Family(&'a DyadicSingularFamily),
}

impl<'a> SupportItem<'a> {
    fn span(&self) -> (Rational, Rational) {
        match self {
            SupportItem::Piece(piece) => piece.interval.clone(),
            SupportItem::Family(family) => family.support(),
        }
    }
}

impl PiecewisePowerFunction {
    /// Validates intervals, singularity exponents against `p`, and pairwise
    /// disjointness; stores pieces and families sorted by position so that
    /// equal functions compare and serialize identically.
    pub fn new(
        p: Rational,
        mut pieces: Vec<Piece>,
        mut families: Vec<DyadicSingularFamily>,
    ) -> crate::Result<Self> {
        if !p.is_positive() {
            return Err(Error::InvalidConstruction(format!(
                "ambient exponent must be positive, got {p}"
            )));
        }
        for piece in &pieces {
            let e = &piece.gamma * &p;
            if e >= Rational::one() {
                return Err(Error::InvalidConstruction(format!(
                    "piece on [{}, {}) has p*gamma = {e} >= 1 and is not p-th power integrable",
                    piece.interval.0, piece.interval.1
                )));
            }
        }
        pieces.sort_by(|x, y| x.interval.0.cmp(&y.interval.0));
        families.sort_by(|x, y| x.window.0.cmp(&y.window.0));
        let f = PiecewisePowerFunction {
            p,
            pieces,
            families,
        };
        let mut previous: Option<(Rational, Rational)> = None;
        for item in f.support_scan() {
            let (start, end) = item.span();
            if let Some((prev_start, prev_end)) = &previous {
                if start < *prev_end {
                    return Err(Error::InvalidConstruction(format!(
                        "supports [{prev_start}, {prev_end}) and [{start}, {end}) overlap"
                    )));
                }
            }
            previous = Some((start, end));
        }
        Ok(f)
    }

    /// The zero function of exponent `p`.
    pub fn zero(p: Rational) -> crate::Result<Self> {
        PiecewisePowerFunction::new(p, Vec::new(), Vec::new())
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn families(&self) -> &[DyadicSingularFamily] {
        &self.families
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty() && self.families.is_empty()
    }

    /// Support intervals in ascending order (family supports are reported
    /// as their closed-left hulls).
    pub fn support(&self) -> Vec<(Rational, Rational)> {
        self.support_scan().iter().map(SupportItem::span).collect()
    }

    /// True when every support element sits inside `[lo, hi)`.
    pub fn supported_within(&self, lo: &Rational, hi: &Rational) -> bool {
        self.support()
            .iter()
            .all(|(a, b)| a >= lo && b <= hi)
    }

    fn support_scan(&self) -> Vec<SupportItem<'_>> {
        let mut items: Vec<SupportItem> = self
            .pieces
            .iter()
            .map(SupportItem::Piece)
            .chain(self.families.iter().map(SupportItem::Family))
            .collect();
        items.sort_by(|x, y| x.span().0.cmp(&y.span().0));
        items
    }

    /// Pointwise multiple `c * self`; the zero multiple is the zero
    /// function.
    pub fn scaled(&self, c: &Rational) -> crate::Result<Self> {
        if c.is_zero() {
            return PiecewisePowerFunction::zero(self.p.clone());
        }
        PiecewisePowerFunction::new(
            self.p.clone(),
            self.pieces.iter().map(|piece| piece.scaled(c)).collect(),
            self.families
                .iter()
                .map(|family| family.scaled(c))
                .collect(),
        )
    }

    /// The restriction to `[lo, hi)`, defined when no support element
    /// straddles the boundary — restriction is exact only along existing
    /// seams.
    pub fn restricted(&self, lo: &Rational, hi: &Rational) -> crate::Result<Self> {
        if lo >= hi {
            return Err(Error::Precondition(format!(
                "restriction window [{lo}, {hi}) is empty"
            )));
        }
        let mut pieces = Vec::new();
        for piece in &self.pieces {
            let (a, b) = &piece.interval;
            if a >= lo && b <= hi {
                pieces.push(piece.clone());
            } else if b > lo && a < hi {
                return Err(Error::Precondition(format!(
                    "restriction boundary cuts through the piece on [{a}, {b})"
                )));
            }
        }
        let mut families = Vec::new();
        for family in &self.families {
            let (a, b) = family.support();
            if &a >= lo && &b <= hi {
                families.push(family.clone());
            } else if &b > lo && &a < hi {
                return Err(Error::Precondition(format!(
                    "restriction boundary cuts through the family supported on [{a}, {b})"
                )));
            }
        }
        PiecewisePowerFunction::new(self.p.clone(), pieces, families)
    }

    /// Exact signed value at `x` in `[0, 1)`, as a
    /// `(rational coefficient, positive expression)` pair whose product is
    /// the value. `None` marks a singular point (the left endpoint of a
    /// block with `gamma > 0`), where no finite value exists. Points outside
    /// every support evaluate to zero.
    pub fn value_at(&self, x: &Rational) -> crate::Result<Option<(Rational, RealExpr)>> {
        if x.is_negative() || *x >= Rational::one() {
            return Err(Error::Precondition(format!(
                "evaluation point {x} is outside [0, 1)"
            )));
        }
        for piece in &self.pieces {
            if *x >= piece.interval.0 && *x < piece.interval.1 {
                return Ok(piece.value_at(x));
            }
        }
        for family in &self.families {
            let (lo, hi) = family.support();
            if *x < lo || *x >= hi {
                continue;
            }
            let t = &(x - &family.window.0) / &family.width();
            let Some(k) = family.block_of(&t)? else {
                return Ok(Some((Rational::zero(), RealExpr::one())));
            };
            return Ok(family.piece(k, &self.p)?.value_at(x));
        }
        Ok(Some((Rational::zero(), RealExpr::one())))
    }
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

/// Replayable witness that `∫ |f|^q` diverges: on `interval` the function
/// is exactly `±constant^(1/q) * t^(-gamma)` in the normalized position `t`,
/// and `exponent = q * gamma >= 1` makes `∫_0 t^(-exponent) dt` infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnDivergenceCertificate {
    pub interval: (Rational, Rational),
    pub gamma: Rational,
    pub q: Rational,
    /// `q * gamma`, at least one.
    pub exponent: Rational,
    /// `|coeff|^q * scale^q` for the piece on `interval`; strictly positive.
    pub constant: RealExpr,
}

impl FnDivergenceCertificate {
    fn from_piece(piece: &Piece, q: &Rational) -> crate::Result<Self> {
        Ok(FnDivergenceCertificate {
            interval: piece.interval.clone(),
            gamma: piece.gamma.clone(),
            q: q.clone(),
            exponent: &piece.gamma * q,
            constant: piece.singular_constant(q)?,
        })
    }

    /// Replays the certificate against `f`: the interval must be an actual
    /// piece or family block of `f`, and every derived field must match.
    pub fn verify(&self, f: &PiecewisePowerFunction, q: &Rational) -> crate::Result<()> {
        if &self.q != q {
            return Err(Error::Precondition(format!(
                "certificate was issued for exponent {}, not {q}",
                self.q
            )));
        }
        if self.exponent != &self.gamma * q {
            return Err(Error::Precondition(format!(
                "certificate exponent {} is not q * gamma = {}",
                self.exponent,
                &self.gamma * q
            )));
        }
        if self.exponent < Rational::one() {
            return Err(Error::Precondition(format!(
                "singularity exponent {} below one proves no divergence",
                self.exponent
            )));
        }
        let piece = self.locate_piece(f)?;
        if piece.gamma != self.gamma {
            return Err(Error::Precondition(format!(
                "function carries exponent {} on the certificate interval, not {}",
                piece.gamma, self.gamma
            )));
        }
        let expected = piece.singular_constant(q)?;
        if expected != self.constant {
            return Err(Error::Precondition(
                "certificate constant does not match the piece on its interval".into(),
            ));
        }
        Ok(())
    }

    /// The piece of `f` living exactly on the certificate interval.
    fn locate_piece(&self, f: &PiecewisePowerFunction) -> crate::Result<Piece> {
        for piece in &f.pieces {
            if piece.interval == self.interval {
                return Ok(piece.clone());
            }
        }
        for family in &f.families {
            let t = &(&self.interval.0 - &family.window.0) / &family.width();
            if let Some(k) = family.block_of(&t)? {
                let block = family.piece(k, &f.p)?;
                if block.interval == self.interval {
                    return Ok(block);
                }
            }
        }
        Err(Error::Precondition(format!(
            "certificate interval [{}, {}) is not a piece or block of the function",
            self.interval.0, self.interval.1
        )))
    }
}

/// Outcome of a q-th power integrability query. The piecewise power class
/// is fully decidable, so there is no numeric-evidence fallback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FnMembershipVerdict {
    /// `∫ |f|^q` is finite, at most the certified symbolic bound.
    Converges { bound: RealExpr },
    /// `∫ |f|^q` diverges, with a replayable certificate.
    Diverges {
        certificate: FnDivergenceCertificate,
    },
}

/// Decides whether `∫_0^1 |f|^q` is finite.
///
/// The supports are scanned in ascending position order; the first piece
/// with `q * gamma >= 1`, or the first family once `q` exceeds its ambient
/// exponent, yields the divergence certificate. When nothing diverges the
/// verdict carries the sum of the exact piece integrals and the family
/// bounds (exact at `q = p`). The scan order makes the certificate
/// deterministic: it always names the leftmost divergent block.
pub fn lq_fn_membership(
    f: &PiecewisePowerFunction,
    q: &Rational,
) -> crate::Result<FnMembershipVerdict> {
    if !q.is_positive() {
        return Err(Error::Precondition(format!(
            "membership is defined for positive exponents, got {q}"
        )));
    }
    for item in f.support_scan() {
        match item {
            SupportItem::Piece(piece) => {
                if let PowerIntegral::Divergent { .. } = piece.power_integral(q)? {
                    return Ok(FnMembershipVerdict::Diverges {
                        certificate: FnDivergenceCertificate::from_piece(piece, q)?,
                    });
                }
            }
            SupportItem::Family(family) => {
                if let Some(k) = family.divergence_block(&f.p, q)? {
                    let block = family.piece(k, &f.p)?;
                    return Ok(FnMembershipVerdict::Diverges {
                        certificate: FnDivergenceCertificate::from_piece(&block, q)?,
                    });
                }
            }
        }
    }
    let mut terms = Vec::new();
    for piece in &f.pieces {
        match piece.power_integral(q)? {
            PowerIntegral::Finite(e) => terms.push(e),
            PowerIntegral::Divergent { .. } => unreachable!("scanned above"),
        }
    }
    for family in &f.families {
        terms.push(family.convergent_mass(&f.p, q)?);
    }
    Ok(FnMembershipVerdict::Converges {
        bound: RealExpr::sum_of(terms),
    })
}

// ---------------------------------------------------------------------------
// Witness and rescaling
// ---------------------------------------------------------------------------

/// The canonical function summable to the power `p` and to no higher
/// exponent: the unit dyadic singular family on the window `[0, 1)`, whose
/// blocks fill `(0, 1/2)` with p-th power integrals `2^(-k*p)`. Its total
/// p-th power integral is the exact geometric sum `sum_k 2^(-k*p)` — `1/3`
/// at `p = 2`, `1` at `p = 1`.
pub fn fn_witness(p: &Rational) -> crate::Result<PiecewisePowerFunction> {
    if !p.is_positive() {
        return Err(Error::Precondition(format!(
            "the witness needs a positive exponent, got {p}"
        )));
    }
    let family = DyadicSingularFamily::new(
        Rational::one(),
        (Rational::zero(), Rational::one()),
    )?;
    PiecewisePowerFunction::new(p.clone(), Vec::new(), vec![family])
}

/// Affinely transports `f` onto `interval = [c, d) ⊂ [1/2, 1)`: the result
/// takes at `c + t*(d - c)` the value `f` takes at `t`. Normalized piece
/// shapes are affine-invariant, so only positions move; every q-th power
/// integral scales by exactly the measure `d - c`, giving
/// `∫ |f_I|^p = (d - c) * ∫ |f|^p` as a rational identity of closed forms.
pub fn rescale_to_interval(
    f: &PiecewisePowerFunction,
    interval: &(Rational, Rational),
) -> crate::Result<PiecewisePowerFunction> {
    let (c, d) = interval;
    if *c < Rational::new(1, 2) || *d > Rational::one() || c >= d {
        return Err(Error::Precondition(format!(
            "rescaling targets nonempty subintervals of [1/2, 1), got [{c}, {d})"
        )));
    }
    let length = d - c;
    PiecewisePowerFunction::new(
        f.p.clone(),
        f.pieces
            .iter()
            .map(|piece| piece.transported(c, &length))
            .collect(),
        f.families
            .iter()
            .map(|family| family.transported(c, &length))
            .collect(),
    )
}

/// The `n`-th dyadic target interval `[1 - 2^(-n), 1 - 2^(-n-1))`, `n >= 1`.
/// The targets partition `[1/2, 1)` and have measure `2^(-n-1)`.
pub fn fn_target_interval(n: u32) -> crate::Result<(Rational, Rational)> {
    if n == 0 {
        return Err(Error::Precondition(
            "target intervals are indexed from 1".into(),
        ));
    }
    Ok((
        &Rational::one() - &Rational::pow2_neg(n),
        &Rational::one() - &Rational::pow2_neg(n + 1),
    ))
}

// ---------------------------------------------------------------------------
// The coefficient-indexed operator
// ---------------------------------------------------------------------------

/// The linear map sending coefficients `(a_0, a_1, a_2, ...)` to
/// `a_0 * f + sum_{n >= 1} a_n * f_n`, where `f` is a generator supported
/// in `[0, 1/2)` and `f_n` is its transport onto the `n`-th dyadic target
/// interval. All component supports are pairwise disjoint, so images are
/// again piecewise power functions, combination integrals split exactly
/// over components, and each coefficient can be read back off its own
/// window — the map is injective on finite coefficient vectors.
#[derive(Clone, Debug)]
pub struct FnOperator {
    p: Rational,
    p_tilde: Rational,
    generator: PiecewisePowerFunction,
    /// Exact `∫ |generator|^p`, from the build-time membership gate.
    generator_mass: RealExpr,
}

/// Validates and packages a generator for the coefficient-indexed map.
///
/// Requirements, each certified here: the generator is nonzero; it is
/// supported inside `[0, 1/2)`, so that its restriction to the left half is
/// the generator itself and the dyadic targets in `[1/2, 1)` are free; it
/// integrates to the power `p`; and it escapes every grid exponent
/// `p + 1/g`, `g = 1..=2`, with a verified divergence certificate.
pub fn build_fn_operator(f: &PiecewisePowerFunction) -> crate::Result<FnOperator> {
    if f.is_zero() {
        return Err(Error::Precondition(
            "the operator needs a nonzero generator".into(),
        ));
    }
    let half = Rational::new(1, 2);
    if !f.supported_within(&Rational::zero(), &half) {
        return Err(Error::Precondition(
            "the generator must be supported inside [0, 1/2); restrict it to the left half first"
                .into(),
        ));
    }
    let generator_mass = match lq_fn_membership(f, &f.p)? {
        FnMembershipVerdict::Converges { bound } => bound,
        FnMembershipVerdict::Diverges { .. } => {
            return Err(Error::Precondition(format!(
                "the generator is not integrable to its own power p = {}",
                f.p
            )));
        }
    };
    for g in 1..=DIVERGENCE_GRID {
        let q = &f.p + &Rational::new(1, i64::from(g));
        match lq_fn_membership(f, &q)? {
            FnMembershipVerdict::Diverges { certificate } => certificate.verify(f, &q)?,
            FnMembershipVerdict::Converges { .. } => {
                return Err(Error::Precondition(format!(
                    "the generator still integrates at exponent {q}; it must escape every \
                     exponent above p = {}",
                    f.p
                )));
            }
        }
    }
    Ok(FnOperator {
        p: f.p.clone(),
        p_tilde: triangle_exponent(&f.p),
        generator: f.clone(),
        generator_mass,
    })
}

impl FnOperator {
    pub fn p(&self) -> &Rational {
        &self.p
    }

    /// The triangle exponent `min(p, 1)` governing the norm inequality.
    pub fn p_tilde(&self) -> &Rational {
        &self.p_tilde
    }

    pub fn generator(&self) -> &PiecewisePowerFunction {
        &self.generator
    }

    /// Exact `∫ |generator|^p`.
    pub fn generator_mass(&self) -> &RealExpr {
        &self.generator_mass
    }

    /// Component `i` of the map: the generator itself at `i = 0`, its
    /// transport onto the `i`-th dyadic target otherwise.
    pub fn component(&self, i: u32) -> crate::Result<PiecewisePowerFunction> {
        if i == 0 {
            return Ok(self.generator.clone());
        }
        rescale_to_interval(&self.generator, &fn_target_interval(i)?)
    }

    /// Image of a finite coefficient vector: the disjoint union of the
    /// scaled components with nonzero coefficients. The all-zero vector
    /// maps to the zero function.
    pub fn apply(&self, coeffs: &[Rational]) -> crate::Result<PiecewisePowerFunction> {
        let mut pieces = Vec::new();
        let mut families = Vec::new();
        for (i, a) in coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let i = u32::try_from(i).map_err(|_| Error::Precondition(
                "coefficient index beyond u32".into(),
            ))?;
            let part = self.component(i)?.scaled(a)?;
            pieces.extend(part.pieces);
            families.extend(part.families);
        }
        PiecewisePowerFunction::new(self.p.clone(), pieces, families)
    }

    /// Reads coefficients `0..=upto` back off an image by restricting to
    /// each component's window and matching against the component. Errors
    /// when the restriction is not an exact rational multiple of the
    /// component — such a function is outside the operator's range.
    pub fn recover_coefficients(
        &self,
        image: &PiecewisePowerFunction,
        upto: u32,
    ) -> crate::Result<Vec<Rational>> {
        let mut coeffs = Vec::with_capacity(upto as usize + 1);
        for i in 0..=upto {
            let (lo, hi) = if i == 0 {
                (Rational::zero(), Rational::new(1, 2))
            } else {
                fn_target_interval(i)?
            };
            let part = image.restricted(&lo, &hi)?;
            if part.is_zero() {
                coeffs.push(Rational::zero());
                continue;
            }
            let component = self.component(i)?;
            let ratio = match (part.families.first(), component.families.first()) {
                (Some(pf), Some(cf)) => &pf.amplitude / &cf.amplitude,
                _ => match (part.pieces.first(), component.pieces.first()) {
                    (Some(pp), Some(cp)) => &pp.coeff / &cp.coeff,
                    _ => {
                        return Err(Error::Precondition(format!(
                            "window {i} holds a function of a different shape than component {i}"
                        )));
                    }
                },
            };
            if part != component.scaled(&ratio)? {
                return Err(Error::Precondition(format!(
                    "window {i} does not hold a rational multiple of component {i}"
                )));
            }
            coeffs.push(ratio);
        }
        Ok(coeffs)
    }
}

/// Certifies that a nonzero combination escapes exponent `q > p`.
///
/// The image of the coefficients is assembled exactly and its q-th power
/// integral decided; disjoint supports make the answer the verdict of the
/// leftmost divergent block, so a nonzero leading coefficient routes
/// through the generator's own certificate in `[0, 1/2)` and otherwise the
/// first nonzero coefficient `r` routes through the transported certificate
/// inside the `r`-th dyadic target.
pub fn certify_fn_outside(
    op: &FnOperator,
    coeffs: &[Rational],
    q: &Rational,
) -> crate::Result<FnMembershipVerdict> {
    if coeffs.iter().all(Rational::is_zero) {
        return Err(Error::Precondition(
            "the zero combination escapes nothing; coefficients must not all vanish".into(),
        ));
    }
    if q <= &op.p {
        return Err(Error::Precondition(format!(
            "escape is certified only above the ambient exponent p = {}, got {q}",
            op.p
        )));
    }
    let image = op.apply(coeffs)?;
    lq_fn_membership(&image, q)
}

/// Certifies `(∫|T(a)|^p)^(pt/p) <= (∫|f|^p)^(pt/p) * sum_i |a_i|^pt` with
/// `pt = min(p, 1)` — the triangle-exponent norm bound of the map.
///
/// Both sides are assembled symbolically from the exact image integral.
/// Three routes certify, in order: both sides fold to rationals and compare
/// exactly; the two expressions are structurally identical (the equality
/// case, e.g. a single nonzero leading coefficient); or interval enclosures
/// of half-width `eps` order the upper endpoints. `Ok(false)` means "not
/// certified at this precision", never "violated".
pub fn fn_norm_bound_check(
    op: &FnOperator,
    coeffs: &[Rational],
    eps: &Rational,
) -> crate::Result<bool> {
    if !eps.is_positive() {
        return Err(Error::Precondition(
            "enclosure half-width must be positive".into(),
        ));
    }
    if coeffs.iter().all(Rational::is_zero) {
        return Ok(true);
    }
    let image = op.apply(coeffs)?;
    let mass = match lq_fn_membership(&image, &op.p)? {
        FnMembershipVerdict::Converges { bound } => bound,
        FnMembershipVerdict::Diverges { .. } => {
            return Err(Error::InvalidConstruction(
                "operator image failed its own integrability invariant".into(),
            ));
        }
    };
    let ratio = &op.p_tilde / &op.p;
    let lhs = RealExpr::pow(mass, ratio.clone())?;
    let coeff_sum = RealExpr::sum_of(
        coeffs
            .iter()
            .filter(|a| !a.is_zero())
            .map(|a| {
                RealExpr::pow(
                    RealExpr::from_rational(a.abs()).expect("absolute value"),
                    op.p_tilde.clone(),
                )
            })
            .collect::<crate::Result<Vec<_>>>()?,
    );
    let rhs = RealExpr::pow(op.generator_mass.clone(), ratio)?.mul(coeff_sum);
    if let (Some(l), Some(r)) = (lhs.exact_rational(), rhs.exact_rational()) {
        return Ok(l <= r);
    }
    if lhs == rhs {
        return Ok(true);
    }
    Ok(lhs.enclose(eps).hi() <= rhs.enclose(eps).hi())
}

// ---------------------------------------------------------------------------
// Deserialization with revalidation
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawPiece {
    interval: (Rational, Rational),
    gamma: Rational,
    coeff: Rational,
    scale_expr: RealExpr,
}

impl<'de> Deserialize<'de> for Piece {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawPiece::deserialize(deserializer)?;
        Piece::new(raw.interval, raw.gamma, raw.coeff, raw.scale_expr)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct RawFamily {
    amplitude: Rational,
    window: (Rational, Rational),
}

impl<'de> Deserialize<'de> for DyadicSingularFamily {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawFamily::deserialize(deserializer)?;
        DyadicSingularFamily::new(raw.amplitude, raw.window).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct RawFunction {
    p: Rational,
    #[serde(default)]
    pieces: Vec<Piece>,
    #[serde(default)]
    families: Vec<DyadicSingularFamily>,
}

impl<'de> Deserialize<'de> for PiecewisePowerFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawFunction::deserialize(deserializer)?;
        PiecewisePowerFunction::new(raw.p, raw.pieces, raw.families)
            .map_err(serde::de::Error::custom)
    }
}
