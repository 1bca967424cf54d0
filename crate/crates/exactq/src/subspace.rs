//! Occupation-number combinatorics and the excitation-conserving subspaces.
//!
//! A configuration of the system plus N oscillators is a bit vector
//! n = (n₀, n₁, …, n_N) with n₀ the system. Read left-to-right as binary with
//! bit 0 least significant, it becomes an integer code: 1100 ↦ 3, 1000 ↦ 1.
//! The total excitation Σ = Σᵢ nᵢ is conserved, so the Hamiltonian is block
//! diagonal over the C(N+1,Σ)-dimensional subspaces H(Σ); each block is
//! assembled from the coupling matrix G by matching single-hop differences
//! Δn = Δ_ij between basis vectors.
//!
//! This module also carries the brute-force evolution route: dense
//! diagonalization of every occupied block plus the partial-trace pairing
//! over common bath configurations. It is slow and memory-hungry by design —
//! its only job is to be unarguably correct so the closed forms elsewhere can
//! be checked against it.

use crate::dynamics::QubitState;
use crate::eigen::dense_hermitian_eig;
use crate::model::CouplingMatrix;
use crate::{C64, Error, Result};
use nalgebra::DMatrix;

/// Largest bath size accepted by the brute-force route (total dimension
/// 2^(cap+1) = 8192).
pub const ORACLE_CAP: usize = 12;

/// Relative eigenvalue-gap floor below which the brute-force route refuses
/// to proceed (time-averaged formulas would silently need the degenerate
/// machinery).
const DEGENERACY_FLOOR_REL: f64 = 1e-9;

/// Pack an occupation bit vector (index 0 = system) into its integer code.
pub fn encode(bits: &[u8]) -> Result<u64> {
    if bits.len() > 63 {
        return Err(Error::InvalidParameter(format!("{} sites exceed 63", bits.len())));
    }
    let mut code = 0u64;
    for (k, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 => code |= 1 << k,
            _ => return Err(Error::InvalidParameter(format!("bit value {b} at site {k}"))),
        }
    }
    Ok(code)
}

/// Unpack an integer code into `sites` occupation bits.
pub fn decode(code: u64, sites: usize) -> Result<Vec<u8>> {
    if sites == 0 || sites > 63 {
        return Err(Error::InvalidParameter(format!("{sites} sites")));
    }
    if code >> sites != 0 {
        return Err(Error::InvalidParameter(format!("code {code} needs more than {sites} bits")));
    }
    Ok((0..sites).map(|k| ((code >> k) & 1) as u8).collect())
}

/// C(n, k) exactly (fits easily for n ≤ 63).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All C(N+1, Σ) occupation codes with excitation Σ, ascending.
/// Uses the next-bit-permutation (Gosper) walk, so no 2^(N+1) scan.
pub fn enumerate_basis(n_bath: usize, sigma: u32) -> Result<Vec<u64>> {
    let sites = n_bath + 1;
    if sites > 63 {
        return Err(Error::InvalidParameter(format!("{sites} sites exceed 63")));
    }
    if sigma as usize > sites {
        return Err(Error::SigmaOutOfRange { sigma, sites });
    }
    if sigma == 0 {
        return Ok(vec![0]);
    }
    let dim = binomial(sites as u64, sigma as u64) as usize;
    let mut out = Vec::with_capacity(dim);
    let limit = 1u64 << sites;
    let mut v = (1u64 << sigma) - 1;
    while v < limit {
        out.push(v);
        // Gosper's hack: next integer with the same popcount
        let t = v | (v - 1);
        v = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
    }
    debug_assert_eq!(out.len(), dim);
    Ok(out)
}

/// 1-based position of `code` in the ascending Σ-basis it belongs to.
pub fn rank_in_basis(code: u64, sites: usize) -> usize {
    let sigma = code.count_ones() as u64;
    let mut below = 0u64;
    let mut ones_left = sigma;
    for b in (0..sites as u64).rev() {
        if (code >> b) & 1 == 1 {
            // codes matching above bit b but with 0 here are all smaller
            below += binomial(b, ones_left);
            ones_left -= 1;
        }
    }
    below as usize + 1
}

/// If `hi` and `lo` differ by moving one excitation from site i (set in `lo`)
/// to site j (set in `hi`), return (i, j).
fn single_hop(lo: u64, hi: u64) -> Option<(usize, usize)> {
    let x = lo ^ hi;
    if x.count_ones() != 2 {
        return None;
    }
    let a = x.trailing_zeros() as usize;
    let b = (63 - x.leading_zeros()) as usize;
    if (lo >> a) & 1 == 1 {
        Some((a, b))
    } else {
        Some((b, a))
    }
}

/// The Hamiltonian block H^Σ over `basis`: diagonal Σᵢ ωᵢnᵢ, off-diagonal
/// g_ij wherever two basis vectors differ by one excitation hop.
pub fn build_reduced_hamiltonian(g: &CouplingMatrix, basis: &[u64]) -> Result<DMatrix<C64>> {
    let sites = g.sites();
    for &code in basis {
        if code >> sites != 0 {
            return Err(Error::DimensionMismatch(format!(
                "basis code {code} outside {sites} sites"
            )));
        }
    }
    let dim = basis.len();
    let mut h = DMatrix::zeros(dim, dim);
    for (k, &code) in basis.iter().enumerate() {
        let mut diag = 0.0;
        for i in 0..sites {
            if (code >> i) & 1 == 1 {
                diag += g.entry(i, i).re;
            }
        }
        h[(k, k)] = C64::new(diag, 0.0);
        for (kp, &code_p) in basis.iter().enumerate().skip(k + 1) {
            if let Some((i, j)) = single_hop(code, code_p) {
                let gij = g.entry(i, j);
                h[(kp, k)] = gij;
                h[(k, kp)] = gij.conj();
            }
        }
    }
    Ok(h)
}

/// One arrow of the action diagram: H^Σ[to][from] = coupling,
/// indices 1-based, from < to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub coupling: C64,
}

/// The strictly-lower-triangular nonzero structure of H^Σ, ascending (from,
/// to). Diagonal matrices yield an empty list.
pub fn list_interaction_edges(g: &CouplingMatrix, basis: &[u64]) -> Result<Vec<Edge>> {
    let h = build_reduced_hamiltonian(g, basis)?;
    let mut edges = Vec::new();
    for k in 0..basis.len() {
        for kp in (k + 1)..basis.len() {
            let c = h[(kp, k)];
            if c != C64::new(0.0, 0.0) {
                edges.push(Edge { from: k + 1, to: kp + 1, coupling: c });
            }
        }
    }
    Ok(edges)
}

/// Partition of 1..dim by the system bit: (I₀, I₁).
pub fn trace_index_sets(basis: &[u64]) -> (Vec<usize>, Vec<usize>) {
    let mut i0 = Vec::new();
    let mut i1 = Vec::new();
    for (k, &code) in basis.iter().enumerate() {
        if code & 1 == 0 {
            i0.push(k + 1);
        } else {
            i1.push(k + 1);
        }
    }
    (i0, i1)
}

/// All index pairs (i₁, i₂) into the bases of (Σ, Σ′) whose codes share a
/// common bath configuration ℰ: code₁ = σ + 2ℰ, code₂ = σ′ + 2ℰ. Empty
/// whenever Σ − σ ≠ Σ′ − σ′ (no common ℰ can exist).
pub fn paired_index_sets(
    sigma: u8,
    sigma_prime: u8,
    cap: u32,
    cap_prime: u32,
    n_bath: usize,
) -> Result<Vec<(usize, usize)>> {
    if sigma > 1 || sigma_prime > 1 {
        return Err(Error::InvalidParameter(format!(
            "system bits must be 0 or 1, got ({sigma}, {sigma_prime})"
        )));
    }
    let sites = n_bath + 1;
    for &c in &[cap, cap_prime] {
        if c as usize > sites {
            return Err(Error::SigmaOutOfRange { sigma: c, sites });
        }
    }
    if cap < sigma as u32 || cap_prime < sigma_prime as u32 {
        return Ok(Vec::new());
    }
    let bath_count = cap - sigma as u32;
    if bath_count != cap_prime - sigma_prime as u32 || bath_count as usize > n_bath {
        return Ok(Vec::new());
    }
    // walk the bath configurations with the required excitation count
    let mut pairs = Vec::new();
    for &e in &enumerate_bath_configs(n_bath, bath_count)? {
        let c1 = sigma as u64 + 2 * e;
        let c2 = sigma_prime as u64 + 2 * e;
        pairs.push((rank_in_basis(c1, sites), rank_in_basis(c2, sites)));
    }
    Ok(pairs)
}

fn enumerate_bath_configs(n_bath: usize, count: u32) -> Result<Vec<u64>> {
    if n_bath == 0 {
        return Ok(if count == 0 { vec![0] } else { vec![] });
    }
    // bath configurations are just a basis over N sites
    enumerate_basis(n_bath - 1, count)
}

/// Brute-force ground truth: densely diagonalize every occupied block,
/// advance each amplitude by its eigenphases, then trace out the bath by the
/// common-configuration pairing.
///
/// `initial` is the full 2^(N+1) amplitude vector indexed by code.
pub fn oracle_evolve_and_trace(g: &CouplingMatrix, initial: &[C64], t: f64) -> Result<QubitState> {
    let n_bath = g.bath_len();
    if n_bath > ORACLE_CAP {
        return Err(Error::OracleTooLarge { n: n_bath, cap: ORACLE_CAP });
    }
    let sites = n_bath + 1;
    let full = 1usize << sites;
    if initial.len() != full {
        return Err(Error::DimensionMismatch(format!(
            "initial vector has {} amplitudes, expected {full}",
            initial.len()
        )));
    }
    let norm2: f64 = initial.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm2));
    }

    let mut evolved = initial.to_vec();
    for sigma in 0..=(sites as u32) {
        let basis = enumerate_basis(n_bath, sigma)?;
        let occupied = basis.iter().any(|&c| initial[c as usize] != C64::new(0.0, 0.0));
        if !occupied {
            continue;
        }
        let h = build_reduced_hamiltonian(g, &basis)?;
        let eig = dense_hermitian_eig(&h)?;
        check_nondegenerate(&eig.eigenvalues)?;
        let dim = basis.len();
        let amps = nalgebra::DVector::from_iterator(dim, basis.iter().map(|&c| initial[c as usize]));
        let mut modal = eig.vectors.adjoint() * amps;
        for (j, m) in modal.iter_mut().enumerate() {
            *m *= C64::from_polar(1.0, -eig.eigenvalues[j] * t);
        }
        let back = &eig.vectors * modal;
        for (k, &c) in basis.iter().enumerate() {
            evolved[c as usize] = back[k];
        }
    }

    // ρ_{σσ'} = Σ_ℰ ψ(σ+2ℰ) ψ*(σ'+2ℰ)
    let mut p = 0.0;
    let mut q = C64::new(0.0, 0.0);
    for e in 0..(1usize << n_bath) {
        let up = evolved[1 + 2 * e];
        let down = evolved[2 * e];
        p += up.norm_sqr();
        q += up * down.conj();
    }
    Ok(QubitState { p, q })
}

fn check_nondegenerate(sorted_eigenvalues: &[f64]) -> Result<()> {
    if sorted_eigenvalues.len() < 2 {
        return Ok(());
    }
    let maxabs = sorted_eigenvalues.iter().fold(0.0f64, |a, &w| a.max(w.abs()));
    let span = sorted_eigenvalues[sorted_eigenvalues.len() - 1] - sorted_eigenvalues[0];
    let floor = DEGENERACY_FLOOR_REL * span.max(maxabs).max(1e-300);
    for pair in sorted_eigenvalues.windows(2) {
        let gap = pair[1] - pair[0];
        if gap < floor {
            return Err(Error::DegenerateSpectrum { gap, floor });
        }
    }
    Ok(())
}
