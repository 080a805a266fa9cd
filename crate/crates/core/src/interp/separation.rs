use std::f64::consts::LN_2;

use super::{InterpError, NodePlan, NodeScheme};
use crate::cantor::{estimate_spread_constants, first_disagreement, SpreadEmbedding, SpreadEstimate, EXHAUSTIVE_DEPTH};

/// Worst-case node separation for a subtree plan, in logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub level: usize,
    pub n: usize,
    /// Upper bound on `(1/n) sum_{j != i} -log2 d(x_i, x_j)` for every `i`.
    pub average_bound: f64,
    /// Largest measured value of that average.
    pub measured_average: f64,
    /// Certified `ln (C^n 2^{-gamma n average_bound})`.
    pub log_product_bound: f64,
    /// `min_i ln prod_{j != i} |rho_i - rho_j|`.
    pub measured_log_product: f64,
    pub c: f64,
    pub gamma: f64,
}

impl SeparationReport {
    pub fn holds(&self) -> bool {
        self.measured_average <= self.average_bound + 1e-12
            && self.measured_log_product >= self.log_product_bound - 1e-9 * self.log_product_bound.abs().max(1.0)
    }
}

/// `sum_{j=1}^{L+1} (m - j) 2^{j-1} / 2^L` with `L = floor(log2 n)`: nodes in
/// distinct level-`m` subtrees share at most one prefix of length `m-1`, two
/// of length `m-2`, and so on.
pub fn separation_sum(m: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let l = (usize::BITS - 1 - n.leading_zeros()) as usize;
    let total: f64 = (1..=l + 1).map(|j| (m as f64 - j as f64) * (1u64 << (j - 1)) as f64).sum();
    total / (1u64 << l) as f64
}

pub fn separation_lower_bound(plan: &NodePlan, e: &SpreadEmbedding) -> Result<SeparationReport, InterpError> {
    let est = estimate_spread_constants(e, e.depth().min(EXHAUSTIVE_DEPTH))?;
    separation_lower_bound_with(plan, &est)
}

/// Separation bound for `plan` given spread constants `(C, gamma)`.
pub fn separation_lower_bound_with(plan: &NodePlan, est: &SpreadEstimate) -> Result<SeparationReport, InterpError> {
    let NodeScheme::NonarchSubtree { level } = plan.scheme else {
        return Err(InterpError::WrongScheme("subtree"));
    };
    let n = plan.degree();
    let average_bound = separation_sum(level, n);
    let log_product_bound = n as f64 * (est.c.ln() - est.gamma * average_bound * LN_2);
    let mut measured_average: f64 = 0.0;
    let mut measured_log_product = f64::INFINITY;
    for i in 0..=n {
        let mut depth_sum = 0usize;
        let mut log_prod = 0.0;
        for j in 0..=n {
            if i == j {
                continue;
            }
            depth_sum += first_disagreement(&plan.branches[i], &plan.branches[j])
                .ok_or(InterpError::DuplicateNodes(i.min(j), i.max(j)))?;
            log_prod += plan.nodes[i].sub_flush(&plan.nodes[j])?.norm().ln();
        }
        if n > 0 {
            measured_average = measured_average.max(depth_sum as f64 / n as f64);
        }
        measured_log_product = measured_log_product.min(log_prod);
    }
    Ok(SeparationReport {
        level,
        n,
        average_bound,
        measured_average,
        log_product_bound,
        measured_log_product,
        c: est.c,
        gamma: est.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_sum() {
        assert_eq!(separation_sum(3, 4), 1.0);
        assert_eq!(separation_sum(5, 1), 4.0);
        assert_eq!(separation_sum(2, 3), (1.0 + 0.0) / 2.0);
    }
}
