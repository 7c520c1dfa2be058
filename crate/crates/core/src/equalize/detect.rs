use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::waveform::Constellation;

#[derive(Debug, Clone, PartialEq)]
pub struct HardDecision {
    pub symbols: Vec<Complex64>,
    pub labels: Vec<usize>,
    pub bits: Vec<u8>,
}

/// Symbol-by-symbol nearest point; equal distances keep the smaller label.
pub fn ml_detect(x_hat: &[Complex64], constellation: &Constellation) -> HardDecision {
    let pts = constellation.points();
    let mut labels = Vec::with_capacity(x_hat.len());
    let mut bits = Vec::with_capacity(x_hat.len() * constellation.bits_per_symbol());
    for x in x_hat {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in pts.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        labels.push(best);
        constellation.label_bits(best, &mut bits);
    }
    let symbols = labels.iter().map(|&l| pts[l]).collect();
    HardDecision { symbols, labels, bits }
}

pub fn bit_errors(tx: &[u8], rx: &[u8]) -> Result<usize> {
    check_len(tx.len(), rx.len())?;
    Ok(tx.iter().zip(rx).filter(|(a, b)| (*a & 1) != (*b & 1)).count())
}

/// Hamming distance over length.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    let e = bit_errors(tx, rx)?;
    Ok(if tx.is_empty() { 0.0 } else { e as f64 / tx.len() as f64 })
}
