//! Weight statistics of the diffusion map, verified two ways.
//!
//! Over the nonzero field elements, Hamming weight follows the binomial
//! law conditioned on being nonzero: exactly `C(m, w)` elements at each
//! weight `w >= 1`. This module computes the implied moments in closed
//! form (exact rationals), re-derives them by exhaustive enumeration of
//! the cyclic orbit, checks tail concentration against the Hoeffding
//! envelope by Monte Carlo or enumeration, and runs the random sparse
//! binary projection baseline the deterministic map is compared with.

use crate::error::{Error, Result};
use crate::gf2::{reduce, BitPolynomial, Generator, Residue};
use crate::ratio::Ratio;
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};

/// Enumeration bound for exhaustive weight histograms.
pub const MAX_EXHAUSTIVE_DEGREE: u32 = 20;

// ---------------------------------------------------------------------------
// Closed-form moments
// ---------------------------------------------------------------------------

/// Exact mean and variance of the Hamming weight over nonzero residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Moments {
    pub mean: Ratio,
    pub variance: Ratio,
}

/// Closed-form weight moments over the `2^m - 1` nonzero residues.
///
/// Mean is `m * 2^(m-1) / (2^m - 1)`. Variance is the full conditioned
/// expression `(m/4)/(1 - 2^-m) - (m^2/4) * 2^-m / (1 - 2^-m)^2`,
/// carried exactly as `m * 2^(m-2) * (2^m - 1 - m) / (2^m - 1)^2`.
pub fn hw_moments_closed_form(m: u32) -> Moments {
    assert!((2..=63).contains(&m), "m must be in [2, 63]");
    let pow = 1u128 << m;
    let nonzero = pow - 1;
    let mean = Ratio::new(m as u128 * (pow >> 1), nonzero);
    let variance = Ratio::new(
        m as u128 * (pow >> 2) * (nonzero - m as u128),
        nonzero * nonzero,
    );
    Moments { mean, variance }
}

// ---------------------------------------------------------------------------
// Exhaustive histogram
// ---------------------------------------------------------------------------

/// Counts of residues at each Hamming weight `0..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl WeightHistogram {
    pub fn empty(m: u32) -> Self {
        WeightHistogram {
            counts: vec![0; m as usize + 1],
            total: 0,
        }
    }

    pub fn record(&mut self, weight: u32) {
        self.counts[weight as usize] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &WeightHistogram) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// Exact mean weight as a fraction of recorded entries.
    pub fn mean(&self) -> Ratio {
        assert!(self.total > 0, "empty histogram");
        let sum: u128 = self
            .counts
            .iter()
            .enumerate()
            .map(|(w, &c)| w as u128 * c as u128)
            .sum();
        Ratio::new(sum, self.total as u128)
    }

    /// Exact variance (second central moment) of the recorded weights.
    pub fn variance(&self) -> Ratio {
        let mean = self.mean();
        let second: u128 = self
            .counts
            .iter()
            .enumerate()
            .map(|(w, &c)| (w as u128) * (w as u128) * c as u128)
            .sum();
        Ratio::new(second, self.total as u128) - mean * mean
    }

    /// Fraction of entries with `|w/m - 1/2| > epsilon`.
    pub fn tail_fraction(&self, epsilon: f64) -> f64 {
        let m = (self.counts.len() - 1) as f64;
        let outside: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(w, _)| (*w as f64 / m - 0.5).abs() > epsilon)
            .map(|(_, &c)| c)
            .sum();
        outside as f64 / self.total as f64
    }

    /// CSV with a `weight,count` header, one row per weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("weight,count\n");
        for (w, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{w},{c}\n"));
        }
        out
    }
}

/// Exhaustive weight histogram over the full cyclic orbit of `x`.
///
/// Walks `x^0, x^1, ..., x^(2^m - 2)`; with a primitive generator this
/// visits every nonzero residue exactly once, so the histogram equals
/// the binomial counts `C(m, w)` for `w >= 1` with `counts[0] = 0`.
pub fn hw_distribution_exact(g: &Generator) -> Result<WeightHistogram> {
    let m = g.degree();
    if m > MAX_EXHAUSTIVE_DEGREE {
        return Err(Error::DegreeTooLarge {
            m,
            max: MAX_EXHAUSTIVE_DEGREE,
        });
    }
    if !g.primitive_verified() {
        return Err(Error::UnverifiedGenerator {
            modulus: g.modulus(),
            degree: m,
        });
    }
    let mut hist = WeightHistogram::empty(m);
    let mut state = Residue::ONE;
    for _ in 0..(1u64 << m) - 1 {
        hist.record(state.hamming_weight());
        state = g.times_x(state);
    }
    Ok(hist)
}

// ---------------------------------------------------------------------------
// Concentration
// ---------------------------------------------------------------------------

/// Tail statistics of the normalized output weight against the
/// Hoeffding envelope `2 exp(-2 eps^2 m)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QodReport {
    /// Degree of the generator (output bits).
    pub m: u32,
    /// Generator in `g:<hex>` form.
    pub generator: String,
    /// Input length for sampled runs; absent for exhaustive runs.
    pub input_len: Option<usize>,
    /// Exact mean output weight (enumerated or over the drawn samples).
    pub mean: Ratio,
    /// Variance of the output weight on the same population.
    pub variance: f64,
    pub epsilon: f64,
    /// Fraction of the population with `|w/m - 1/2| > epsilon`.
    pub empirical_tail: f64,
    /// `2 exp(-2 epsilon^2 m)`.
    pub hoeffding_bound: f64,
    /// Number of Monte Carlo samples; absent for exhaustive runs.
    pub samples: Option<u64>,
    /// Seed of the counter RNG for sampled runs.
    pub rng_seed: Option<u64>,
}

impl QodReport {
    /// Allowed excess of the empirical tail over the Hoeffding bound:
    /// a 3-sigma Monte Carlo margin for sampled runs, the exact
    /// conditioning inflation `1/(1 - 2^-m)` for enumerated ones.
    pub fn tail_slack(&self) -> f64 {
        match self.samples {
            Some(n) => {
                let p = self.hoeffding_bound.min(0.5);
                3.0 * (p * (1.0 - p) / n as f64).sqrt()
            }
            None => self.hoeffding_bound * ((1.0 / (1.0 - 0.5f64.powi(self.m as i32))) - 1.0),
        }
    }

    /// Whether the empirical tail sits inside the envelope plus slack.
    pub fn tail_within_bound(&self) -> bool {
        self.empirical_tail <= self.hoeffding_bound + self.tail_slack()
    }
}

fn hoeffding(epsilon: f64, m: u32) -> f64 {
    2.0 * (-2.0 * epsilon * epsilon * m as f64).exp()
}

/// Exact concentration report from full enumeration of the orbit,
/// together with the enumerated weight histogram.
pub fn concentration_exhaustive(g: &Generator, epsilon: f64) -> Result<(QodReport, WeightHistogram)> {
    let hist = hw_distribution_exact(g)?;
    let report = QodReport {
        m: g.degree(),
        generator: g.to_hex_string(),
        input_len: None,
        mean: hist.mean(),
        variance: hist.variance().to_f64(),
        epsilon,
        empirical_tail: hist.tail_fraction(epsilon),
        hoeffding_bound: hoeffding(epsilon, g.degree()),
        samples: None,
        rng_seed: None,
    };
    Ok((report, hist))
}

/// Monte Carlo concentration report.
///
/// Draws `samples` uniform non-kernel inputs of length `l` by rejection
/// (inputs reducing to zero are redrawn) and measures the fraction of
/// diffused outputs outside the epsilon band. Sample `i` is addressed
/// as stream `i` of the counter RNG, so the result is identical for any
/// `workers` split.
pub fn concentration_check(
    g: &Generator,
    l: usize,
    epsilon: f64,
    samples: u64,
    rng_seed: u64,
    workers: usize,
) -> Result<(QodReport, WeightHistogram)> {
    if l <= g.degree() as usize {
        return Err(Error::ConfigInvalid(format!(
            "input length {l} must exceed m = {}",
            g.degree()
        )));
    }
    if samples == 0 {
        return Err(Error::ConfigInvalid("samples must be >= 1".into()));
    }
    let m = g.degree();
    let workers = workers.max(1).min(samples as usize);

    struct Partial {
        tail: u64,
        sum_w: u64,
        sum_w2: u128,
        hist: WeightHistogram,
    }

    let run_range = |lo: u64, hi: u64| -> Partial {
        let mut part = Partial {
            tail: 0,
            sum_w: 0,
            sum_w2: 0,
            hist: WeightHistogram::empty(m),
        };
        for i in lo..hi {
            let mut rng = CounterRng::new(rng_seed, i);
            let residue = loop {
                let p = BitPolynomial::random(l, &mut rng);
                let r = reduce(&p, g);
                if !r.is_zero() {
                    break r;
                }
            };
            let out = crate::gf2::gf2_mul(residue, g.x_to_m(), g);
            let w = out.hamming_weight();
            part.sum_w += w as u64;
            part.sum_w2 += (w as u128) * (w as u128);
            part.hist.record(w);
            if (w as f64 / m as f64 - 0.5).abs() > epsilon {
                part.tail += 1;
            }
        }
        part
    };

    let chunk = samples.div_ceil(workers as u64);
    let partials: Vec<Partial> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let lo = (w * chunk).min(samples);
                let hi = ((w + 1) * chunk).min(samples);
                scope.spawn(move || run_range(lo, hi))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut tail = 0u64;
    let mut sum_w = 0u64;
    let mut sum_w2 = 0u128;
    let mut hist = WeightHistogram::empty(m);
    for part in partials {
        tail += part.tail;
        sum_w += part.sum_w;
        sum_w2 += part.sum_w2;
        hist.merge(&part.hist);
    }

    let n = samples as f64;
    let mean_f = sum_w as f64 / n;
    let variance = sum_w2 as f64 / n - mean_f * mean_f;
    let report = QodReport {
        m,
        generator: g.to_hex_string(),
        input_len: Some(l),
        mean: Ratio::new(sum_w as u128, samples as u128),
        variance,
        epsilon,
        empirical_tail: tail as f64 / n,
        hoeffding_bound: hoeffding(epsilon, m),
        samples: Some(samples),
        rng_seed: Some(rng_seed),
    };
    Ok((report, hist))
}

// ---------------------------------------------------------------------------
// Avalanche orbit
// ---------------------------------------------------------------------------

/// Images of the single-bit inputs: `[x^m, x^(m+1), ..., x^(m+L-1)]
/// mod G`. All entries are nonzero and pairwise distinct for
/// `L <= 2^m - 1`.
pub fn avalanche_orbit(g: &Generator, l: usize) -> Result<Vec<Residue>> {
    if !g.primitive_verified() {
        return Err(Error::UnverifiedGenerator {
            modulus: g.modulus(),
            degree: g.degree(),
        });
    }
    let max = (1u64 << g.degree()) - 1;
    if l as u64 > max {
        return Err(Error::OrbitTooLong {
            requested: l as u64,
            m: g.degree(),
            max,
        });
    }
    let mut orbit = Vec::with_capacity(l);
    let mut state = g.x_to_m();
    for _ in 0..l {
        orbit.push(state);
        state = g.times_x(state);
    }
    Ok(orbit)
}

// ---------------------------------------------------------------------------
// Random sparse projection baseline
// ---------------------------------------------------------------------------

/// A random binary matrix with exactly `k` ones per row, applied as a
/// GF(2)-linear map: output bit `i` is the parity of the input
/// restricted to `rows[i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseProjection {
    pub rows: Vec<Vec<u32>>,
    pub k: usize,
    pub input_len: usize,
    pub rng_seed: u64,
}

impl SparseProjection {
    /// Draw `m` rows of `k` distinct column indices each. Row `i` is
    /// addressed as stream `i` of the counter RNG.
    pub fn generate(m: u32, input_len: usize, k: usize, rng_seed: u64) -> Self {
        assert!(k >= 1 && k <= input_len, "need 1 <= k <= L");
        assert!(m <= 64, "at most 64 output bits");
        let rows = (0..m as u64)
            .map(|i| {
                let mut rng = CounterRng::new(rng_seed, i);
                rng.sample_distinct(input_len as u64, k)
                    .into_iter()
                    .map(|x| x as u32)
                    .collect()
            })
            .collect();
        SparseProjection {
            rows,
            k,
            input_len,
            rng_seed,
        }
    }

    pub fn output_bits(&self) -> u32 {
        self.rows.len() as u32
    }
}

/// Row-wise parity projection of `x`.
pub fn rsp_project(w: &SparseProjection, x: &BitPolynomial) -> Result<Residue> {
    if x.len() != w.input_len {
        return Err(Error::LengthMismatch {
            expected: w.input_len,
            got: x.len(),
        });
    }
    let mut out = 0u64;
    for (i, row) in w.rows.iter().enumerate() {
        let parity = row
            .iter()
            .fold(0u64, |acc, &j| acc ^ (x.get(j as usize) as u64));
        out |= parity << i;
    }
    Ok(Residue(out))
}

/// Baseline expected output distance at input distance `d`:
/// `m * (1 - (1 - d/L)^k) / 2`.
///
/// This is the folklore constant for sparse random units whose response
/// flips with probability 1/2 once any tap lands on a differing
/// coordinate. For the parity rows this module actually applies, the
/// exact expectation is [`rsp_parity_expected_distance`]; the two agree
/// as `k d / L` grows and both tend to `m / 2`.
pub fn rsp_expected_distance(m: u32, l: usize, k: usize, d: usize) -> f64 {
    assert!(k >= 1 && k <= l, "need 1 <= k <= L");
    assert!(d <= l, "need d <= L");
    m as f64 * (1.0 - (1.0 - d as f64 / l as f64).powi(k as i32)) / 2.0
}

/// Exact expected output distance of the parity projection at input
/// distance `d`: a row flips iff it taps an odd number of the `d`
/// differing coordinates, so the flip probability is the odd tail of a
/// hypergeometric draw of `k` from `L` with `d` marked.
pub fn rsp_parity_expected_distance(m: u32, l: usize, k: usize, d: usize) -> f64 {
    assert!(k >= 1 && k <= l, "need 1 <= k <= L");
    assert!(d <= l, "need d <= L");
    fn ln_binom(n: usize, r: usize) -> f64 {
        if r > n {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0f64;
        for i in 0..r {
            acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
        acc
    }
    let total = ln_binom(l, k);
    let mut p_odd = 0.0;
    let mut j = 1;
    while j <= k.min(d) {
        p_odd += (ln_binom(d, j) + ln_binom(l - d, k - j) - total).exp();
        j += 2;
    }
    m as f64 * p_odd
}

/// Monte Carlo output distance of the parity projection over fresh
/// matrix draws, for one input pair at distance `d`.
///
/// Returns the empirical mean and the standard error of that mean
/// (using the conservative per-row variance bound of 1/4).
pub fn rsp_mc_mean_distance(
    m: u32,
    l: usize,
    k: usize,
    d: usize,
    trials: u64,
    rng_seed: u64,
) -> (f64, f64) {
    assert!(trials > 0);
    let x1 = BitPolynomial::zero(l);
    let mut pair_rng = CounterRng::new(rng_seed, u64::MAX);
    let mut x2 = BitPolynomial::zero(l);
    for j in pair_rng.sample_distinct(l as u64, d) {
        x2.set(j as usize, true);
    }
    let mut sum = 0u64;
    for t in 0..trials {
        let w = SparseProjection::generate(m, l, k, rng_seed.wrapping_add(t));
        let y1 = rsp_project(&w, &x1).expect("lengths match");
        let y2 = rsp_project(&w, &x2).expect("lengths match");
        sum += y1.xor(y2).hamming_weight() as u64;
    }
    let mean = sum as f64 / trials as f64;
    let sigma = ((m as f64 / 4.0) / trials as f64).sqrt();
    (mean, sigma)
}

/// One row of the worst-case comparison: the deterministic weight of a
/// single-bit flip at position `j` against the maximum sparse-projection
/// distance observed for the same flip across matrix draws.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareRow {
    pub j: usize,
    pub psi_weight: u32,
    pub rsp_max_distance: u32,
}

/// Single-bit-flip comparison over all positions `j < l`.
///
/// The deterministic column is the avalanche orbit weight; the sparse
/// column is the count of rows containing `j` (the projection's output
/// distance for the flip `e_j`), maximized over `trials` fresh draws.
pub fn compare_worst_case(
    g: &Generator,
    k: usize,
    l: usize,
    trials: u64,
    rng_seed: u64,
) -> Result<Vec<CompareRow>> {
    let orbit = avalanche_orbit(g, l)?;
    let mut rsp_max = vec![0u32; l];
    for t in 0..trials {
        let w = SparseProjection::generate(g.degree(), l, k, rng_seed.wrapping_add(t));
        let mut hits = vec![0u32; l];
        for row in &w.rows {
            for &j in row {
                hits[j as usize] += 1;
            }
        }
        for (m, h) in rsp_max.iter_mut().zip(&hits) {
            *m = (*m).max(*h);
        }
    }
    Ok(orbit
        .iter()
        .enumerate()
        .map(|(j, r)| CompareRow {
            j,
            psi_weight: r.hamming_weight(),
            rsp_max_distance: rsp_max[j],
        })
        .collect())
}
