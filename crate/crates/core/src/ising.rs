//! Ising instances, spin energies and the exhaustive oracle.
//!
//! The oracle enumerates all `2^n` spin configurations with a Gray-code walk,
//! updating the local fields `h = S v` after each single-spin flip. Running
//! energies are only used to shortlist candidates; the reported minimum and
//! the minimizer set are recomputed with [`energy`] so they are exact in the
//! sense that every listed configuration evaluates to `min_energy` bit for bit.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest instance the exhaustive oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 24;

/// A zero-field Ising instance `E(v) = -1/2 v^T S v`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    coupling: DMatrix<f64>,
}

impl IsingProblem {
    /// Validates and wraps a coupling matrix.
    pub fn new(coupling: DMatrix<f64>) -> Result<Self> {
        let n = coupling.nrows();
        if n == 0 {
            return Err(Error::InvalidProblem("n must be at least 1".into()));
        }
        if coupling.ncols() != n {
            return Err(Error::InvalidProblem(format!(
                "coupling matrix is {}x{}, expected square",
                n,
                coupling.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let s = coupling[(i, j)];
                if !s.is_finite() {
                    return Err(Error::InvalidProblem(format!("S[{i}][{j}] is not finite")));
                }
                if i == j && s != 0.0 {
                    return Err(Error::InvalidProblem(format!("S[{i}][{i}] = {s}, diagonal must be zero")));
                }
                if s != coupling[(j, i)] {
                    return Err(Error::InvalidProblem(format!(
                        "S is not symmetric: S[{i}][{j}] = {s} but S[{j}][{i}] = {}",
                        coupling[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { coupling })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidProblem(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds a dense instance from an undirected edge list; each edge must appear once.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("n must be at least 1".into()));
        }
        let mut m = DMatrix::zeros(n, n);
        let mut seen = std::collections::HashSet::new();
        for &(i, j, s) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidProblem(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::InvalidProblem(format!("self-loop on spin {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidProblem(format!("duplicate edge ({i}, {j})")));
            }
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
        Self::new(m)
    }

    /// The two-spin ferromagnet `[[0,1],[1,0]]`.
    pub fn canonical_two_spin() -> Self {
        Self::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("valid")
    }

    /// The three-spin frustrated example `[[0,1,-2],[1,0,3],[-2,3,0]]`.
    pub fn three_spin_example() -> Self {
        Self::from_rows(&[vec![0.0, 1.0, -2.0], vec![1.0, 0.0, 3.0], vec![-2.0, 3.0, 0.0]]).expect("valid")
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.coupling.nrows()
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.coupling.row(i).iter().copied().collect()).collect()
    }

    /// Upper-triangle nonzero couplings as `(i, j, s)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let s = self.coupling[(i, j)];
                if s != 0.0 {
                    out.push((i, j, s));
                }
            }
        }
        out
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.coupling.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("n >= 1")
    }

    /// Returns `S x` using a fixed row-major summation order.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, xj) in x.iter().enumerate() {
                    acc += self.coupling[(i, j)] * xj;
                }
                acc
            })
            .collect()
    }

    /// `x^T S x` with a fixed summation order.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * self.coupling[(i, j)] * x[j];
            }
        }
        acc
    }

    /// Returns a copy with spins relabelled so that new spin `k` is old spin `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| self.coupling[(perm[i], perm[j])]))
    }
}

/// A spin configuration in `{-1, +1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpins(format!("component {bad} is not +1 or -1")));
        }
        Ok(Self(spins))
    }

    /// Bit `i` of `bits` set means spin `i` is `-1`.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(v: SpinConfig) -> Self {
        v.0
    }
}

impl std::fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Componentwise signum in `{-1, 0, +1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| !(-1..=1).contains(&s)) {
            return Err(Error::InvalidSpins(format!("component {bad} is not in {{-1, 0, 1}}")));
        }
        Ok(Self(signs))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn zero_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == 0).count()
    }

    /// The spin configuration, if no component is zero.
    pub fn to_spins(&self) -> Option<SpinConfig> {
        if self.zero_count() == 0 {
            Some(SpinConfig(self.0.clone()))
        } else {
            None
        }
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(v: SignVector) -> Self {
        v.0
    }
}

pub fn sign_vector(x: &[f64]) -> SignVector {
    SignVector(
        x.iter()
            .map(|&xi| {
                if xi > 0.0 {
                    1
                } else if xi < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect(),
    )
}

/// `E(v) = -1/2 v^T S v`, summed row by row, left to right.
pub fn energy(problem: &IsingProblem, v: &SpinConfig) -> Result<f64> {
    let n = problem.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(energy_unchecked(problem, v.spins()))
}

fn energy_unchecked(problem: &IsingProblem, v: &[i8]) -> f64 {
    let s = problem.coupling();
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let term = s[(i, j)];
            acc += if v[i] == v[j] { term } else { -term };
        }
    }
    -0.5 * acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub min_energy: f64,
    /// All global minimizers, sorted.
    pub minimizers: Vec<SpinConfig>,
    pub evaluated_count: u64,
}

impl OracleResult {
    pub fn is_minimizer(&self, v: &SpinConfig) -> bool {
        self.minimizers.binary_search(v).is_ok()
    }
}

pub fn brute_force(problem: &IsingProblem) -> Result<OracleResult> {
    brute_force_with_cap(problem, DEFAULT_ORACLE_CAP)
}

/// Exhaustive minimization over `{-1,1}^n`.
pub fn brute_force_with_cap(problem: &IsingProblem, cap: usize) -> Result<OracleResult> {
    let n = problem.n();
    if n > cap || n > 62 {
        return Err(Error::CapExceeded { what: "oracle", n, cap: cap.min(62) });
    }
    // The top `split` spins are fixed per chunk and each chunk runs its own walk.
    let split = if n >= 12 { 4 } else { 0 };
    let low = n - split;
    let scale: f64 = 1.0 + problem.coupling().iter().map(|s| s.abs()).sum::<f64>();
    let tol = 1e-9 * scale;

    let chunks: Vec<Vec<(f64, u64)>> = (0..1u64 << split)
        .into_par_iter()
        .map(|prefix| gray_walk(problem, prefix << low, low, tol))
        .collect();

    let mut candidates: Vec<(f64, u64)> = chunks.into_iter().flatten().collect();
    let approx_min = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    candidates.retain(|c| c.0 <= approx_min + tol);

    let mut exact: Vec<(f64, SpinConfig)> = candidates
        .into_iter()
        .map(|(_, bits)| {
            let v = SpinConfig::from_bits(bits, n);
            (energy_unchecked(problem, v.spins()), v)
        })
        .collect();
    let min_energy = exact.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    exact.retain(|e| e.0 == min_energy);
    let mut minimizers: Vec<SpinConfig> = exact.into_iter().map(|e| e.1).collect();
    minimizers.sort();
    minimizers.dedup();

    Ok(OracleResult { min_energy, minimizers, evaluated_count: 1u64 << n })
}

/// Gray-code walk over the lowest `low` bits with the higher bits fixed by `base`.
/// Returns every configuration whose running energy came within `tol` of the running minimum.
fn gray_walk(problem: &IsingProblem, base: u64, low: usize, tol: f64) -> Vec<(f64, u64)> {
    let s = problem.coupling();
    let n = problem.n();
    let v0 = SpinConfig::from_bits(base, n);
    let mut v: Vec<f64> = v0.as_f64();
    let mut h: Vec<f64> = problem.apply(&v);
    let mut e = energy_unchecked(problem, v0.spins());
    let mut bits = base;
    let mut best = e;
    let mut cands = vec![(e, bits)];

    for step in 1u64..(1u64 << low) {
        let k = step.trailing_zeros() as usize;
        let vk = v[k];
        e += 2.0 * vk * h[k];
        for (j, hj) in h.iter_mut().enumerate() {
            *hj -= 2.0 * s[(j, k)] * vk;
        }
        v[k] = -vk;
        bits ^= 1 << k;

        if e < best {
            best = e;
            if cands.last().is_some_and(|c| c.0 > best + tol) {
                cands.retain(|c| c.0 <= best + tol);
            }
        }
        if e <= best + tol {
            cands.push((e, bits));
        }
    }
    cands
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(problem: &IsingProblem) -> (f64, Vec<SpinConfig>) {
        let n = problem.n();
        let all: Vec<(f64, SpinConfig)> = (0..1u64 << n)
            .map(|b| {
                let v = SpinConfig::from_bits(b, n);
                (energy(problem, &v).unwrap(), v)
            })
            .collect();
        let min = all.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let mut mins: Vec<SpinConfig> = all.into_iter().filter(|a| a.0 == min).map(|a| a.1).collect();
        mins.sort();
        (min, mins)
    }

    fn cfg(v: &[i8]) -> SpinConfig {
        SpinConfig::new(v.to_vec()).unwrap()
    }

    #[test]
    fn energy_examples() {
        let p = IsingProblem::canonical_two_spin();
        assert_eq!(energy(&p, &cfg(&[1, 1])).unwrap(), -1.0);
        assert_eq!(energy(&p, &cfg(&[1, -1])).unwrap(), 1.0);
        let s3 = IsingProblem::three_spin_example();
        assert_eq!(energy(&s3, &cfg(&[-1, 1, 1])).unwrap(), -4.0);
    }

    #[test]
    fn energy_rejects_wrong_length() {
        let p = IsingProblem::canonical_two_spin();
        assert!(matches!(energy(&p, &cfg(&[1, 1, 1])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn oracle_examples() {
        let r = brute_force(&IsingProblem::canonical_two_spin()).unwrap();
        assert_eq!(r.min_energy, -1.0);
        assert_eq!(r.minimizers, vec![cfg(&[-1, -1]), cfg(&[1, 1])]);

        let r = brute_force(&IsingProblem::three_spin_example()).unwrap();
        assert_eq!(r.min_energy, -4.0);
        assert_eq!(r.minimizers, vec![cfg(&[-1, 1, 1]), cfg(&[1, -1, -1])]);
        assert_eq!(r.evaluated_count, 8);

        let r = brute_force(&IsingProblem::zeros(3).unwrap()).unwrap();
        assert_eq!(r.min_energy, 0.0);
        assert_eq!(r.minimizers.len(), 8);
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let p = IsingProblem::zeros(5).unwrap();
        let err = brute_force_with_cap(&p, 4).unwrap_err();
        assert!(err.to_string().contains("cap of 4"), "{err}");
    }

    #[test]
    fn sign_vector_examples() {
        assert_eq!(sign_vector(&[3.5, -3.7, -4.0]).signs(), &[1, -1, -1]);
        assert_eq!(sign_vector(&[0.0, 0.0]).signs(), &[0, 0]);
        assert_eq!(sign_vector(&[-1e-300, 2.0]).signs(), &[-1, 1]);
        assert_eq!(sign_vector(&[-0.0]).signs(), &[0]);
    }

    #[test]
    fn loader_rejects_bad_matrices() {
        assert!(IsingProblem::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(IsingProblem::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(IsingProblem::from_rows(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err());
        assert!(IsingProblem::from_rows(&[]).is_err());
        assert!(IsingProblem::from_edges(3, &[(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(IsingProblem::from_edges(3, &[(0, 3, 1.0)]).is_err());
        assert!(IsingProblem::from_edges(3, &[(1, 1, 1.0)]).is_err());
    }

    #[test]
    fn edges_round_trip() {
        let p = IsingProblem::three_spin_example();
        let q = IsingProblem::from_edges(3, &p.edges()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn gray_code_matches_naive_with_chunking() {
        // n = 13 exercises the chunked walk.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [12usize, 13] {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    let s: f64 = rng.random_range(-1.0..1.0);
                    m[(i, j)] = s;
                    m[(j, i)] = s;
                }
            }
            let p = IsingProblem::new(m).unwrap();
            let r = brute_force(&p).unwrap();
            let (min, mins) = naive(&p);
            assert_eq!(r.min_energy, min);
            assert_eq!(r.minimizers, mins);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn problem_strategy(max_n: usize) -> impl Strategy<Value = IsingProblem> {
            (1..=max_n).prop_flat_map(|n| {
                prop::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64, Just(1.0), Just(-1.0)], n * n).prop_map(
                    move |vals| {
                        let m = DMatrix::from_fn(n, n, |i, j| {
                            if i == j {
                                0.0
                            } else {
                                let (a, b) = (i.min(j), i.max(j));
                                vals[a * n + b]
                            }
                        });
                        IsingProblem::new(m).unwrap()
                    },
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn gray_code_equals_naive(p in problem_strategy(10)) {
                let r = brute_force(&p).unwrap();
                let (min, mins) = naive(&p);
                prop_assert_eq!(r.min_energy, min);
                prop_assert_eq!(&r.minimizers, &mins);
                for v in &r.minimizers {
                    prop_assert!(r.is_minimizer(&v.flipped()));
                }
            }

            #[test]
            fn spin_flip_symmetry(p in problem_strategy(8), bits in any::<u64>()) {
                let v = SpinConfig::from_bits(bits, p.n());
                prop_assert_eq!(energy(&p, &v).unwrap(), energy(&p, &v.flipped()).unwrap());
            }

            #[test]
            fn permutation_invariance(p in problem_strategy(8), bits in any::<u64>(), seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let n = p.n();
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let v = SpinConfig::from_bits(bits, n);
                let pv = SpinConfig::new(perm.iter().map(|&k| v.spins()[k]).collect()).unwrap();
                let e1 = energy(&p, &v).unwrap();
                let e2 = energy(&p.permuted(&perm).unwrap(), &pv).unwrap();
                prop_assert!((e1 - e2).abs() <= 1e-12 * (1.0 + e1.abs()));
            }
        }
    }
}
