//! Budget schedules: the doubling ladder of multi-objective successive
//! halving, Hyperband brackets, and the multi-objective promotion rule.

use thiserror::Error;

use crate::pareto::select_by_nds_hssp;

/// Training budget in whole epochs (or fidelity steps).
pub type Budget = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FidelityError {
    #[error("ladder needs at least one rung")]
    NoRungs,
    #[error("maximum budget {b_max} cannot be halved {halvings} times")]
    BudgetTooSmall { b_max: Budget, halvings: usize },
    #[error("{fe_total} function evaluations cannot feed {rungs} rungs")]
    TooFewEvaluations { fe_total: usize, rungs: usize },
    #[error("invalid bracket parameters: b_min {b_min}, b_max {b_max}, eta {eta}")]
    BadBracket { b_min: Budget, b_max: Budget, eta: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rung {
    pub budget: Budget,
    pub evaluations: usize,
}

/// Rungs of increasing budget and non-increasing evaluation counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub rungs: Vec<Rung>,
}

impl Ladder {
    pub fn total_evaluations(&self) -> usize {
        self.rungs.iter().map(|r| r.evaluations).sum()
    }
}

/// Splits `fe_total` evaluations over `n` rungs whose budgets double from
/// `floor(b_max / 2^(n-1))` while the evaluation count halves. The last rung
/// is pinned to `b_max`, since flooring can leave the doubling short of it.
pub fn emoash_ladder(fe_total: usize, b_max: Budget, n: usize) -> Result<Ladder, FidelityError> {
    if n == 0 {
        return Err(FidelityError::NoRungs);
    }
    let halvings = n - 1;
    let scale = 1u64.checked_shl(halvings as u32).filter(|s| *s <= u64::from(u32::MAX));
    let scale = scale.ok_or(FidelityError::BudgetTooSmall { b_max, halvings })?;
    let b0 = u64::from(b_max) / scale;
    if b0 == 0 {
        return Err(FidelityError::BudgetTooSmall { b_max, halvings });
    }
    if (fe_total as u64) < scale {
        return Err(FidelityError::TooFewEvaluations { fe_total, rungs: n });
    }
    // sum_{i<n} 2^-i = (2^n - 1) / 2^(n-1)
    let fe0 = (fe_total as u128 * scale as u128 / (2 * scale as u128 - 1)) as u64;
    let rungs = (0..n)
        .map(|i| {
            let budget = if i == halvings { b_max } else { (b0 << i) as Budget };
            Rung { budget, evaluations: (fe0 >> i) as usize }
        })
        .collect::<Vec<_>>();
    if rungs.iter().any(|r| r.evaluations == 0) {
        return Err(FidelityError::TooFewEvaluations { fe_total, rungs: n });
    }
    Ok(Ladder { rungs })
}

/// One Hyperband bracket: `n_configs` fresh configurations starting at
/// `initial_budget`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bracket {
    pub s: u32,
    pub n_configs: usize,
    pub initial_budget: Budget,
}

impl Bracket {
    /// Budgets of the successive-halving rungs inside this bracket, ending at
    /// `b_max`.
    pub fn rung_budgets(&self, b_max: Budget, eta: u32) -> Vec<Budget> {
        (0..=self.s)
            .map(|i| {
                let div = u64::from(eta).pow(self.s - i);
                ((u64::from(b_max) / div).max(1)) as Budget
            })
            .collect()
    }
}

/// Hyperband brackets for `s = s_max..0`.
pub fn hb_brackets(b_min: Budget, b_max: Budget, eta: u32) -> Result<Vec<Bracket>, FidelityError> {
    if b_min == 0 || b_min > b_max || eta < 2 {
        return Err(FidelityError::BadBracket { b_min, b_max, eta });
    }
    // s_max = floor(log_eta(b_max / b_min)), computed in integers.
    let mut s_max = 0u32;
    while u64::from(b_min) * u64::from(eta).pow(s_max + 1) <= u64::from(b_max) {
        s_max += 1;
    }
    Ok((0..=s_max)
        .rev()
        .map(|s| {
            let num = u64::from(s_max + 1) * u64::from(eta).pow(s);
            let den = u64::from(s + 1);
            Bracket {
                s,
                n_configs: num.div_ceil(den) as usize,
                initial_budget: ((u64::from(b_max) / u64::from(eta).pow(s)).max(1)) as Budget,
            }
        })
        .collect())
}

/// Number of survivors of a successive-halving rung of `n` candidates.
pub fn promotion_count(n: usize, eta: u32) -> usize {
    (n / eta.max(1) as usize).max(1)
}

/// Multi-objective successive-halving promotion: keeps
/// `max(1, floor(n / eta))` candidates by front order, with greedy hypervolume
/// selection inside the front that straddles the cut. Returns ascending
/// indices.
pub fn sh_promote<P: AsRef<[f64]>>(objectives: &[P], eta: u32, reference: &[f64]) -> Vec<usize> {
    if objectives.is_empty() {
        return Vec::new();
    }
    select_by_nds_hssp(objectives, promotion_count(objectives.len(), eta), reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(l: &Ladder) -> Vec<(Budget, usize)> {
        l.rungs.iter().map(|r| (r.budget, r.evaluations)).collect()
    }

    #[test]
    fn ladder_small_settings() {
        let l = emoash_ladder(150, 25, 3).unwrap();
        assert_eq!(pairs(&l), vec![(6, 85), (12, 42), (25, 21)]);
        assert!(l.total_evaluations() <= 150);
    }

    #[test]
    fn ladder_large_settings() {
        let l = emoash_ladder(15000, 25, 3).unwrap();
        assert_eq!(l.rungs[0], Rung { budget: 6, evaluations: 8571 });
    }

    #[test]
    fn single_rung_ladder() {
        assert_eq!(pairs(&emoash_ladder(40, 25, 1).unwrap()), vec![(25, 40)]);
    }

    #[test]
    fn ladder_errors() {
        assert_eq!(emoash_ladder(3, 25, 3), Err(FidelityError::TooFewEvaluations { fe_total: 3, rungs: 3 }));
        assert!(matches!(emoash_ladder(100, 2, 3), Err(FidelityError::BudgetTooSmall { .. })));
        assert_eq!(emoash_ladder(10, 25, 0), Err(FidelityError::NoRungs));
    }

    #[test]
    fn ladder_conserves_evaluations() {
        for fe in [4usize, 7, 10, 99, 150, 1001] {
            for n in 1..=3 {
                if let Ok(l) = emoash_ladder(fe, 64, n) {
                    assert!(l.total_evaluations() <= fe);
                    assert!(l.rungs.windows(2).all(|w| w[0].budget < w[1].budget));
                    assert!(l.rungs.windows(2).all(|w| w[0].evaluations >= w[1].evaluations));
                }
            }
        }
    }

    #[test]
    fn brackets_small_settings() {
        let b = hb_brackets(5, 25, 3).unwrap();
        assert_eq!(
            b,
            vec![
                Bracket { s: 1, n_configs: 3, initial_budget: 8 },
                Bracket { s: 0, n_configs: 2, initial_budget: 25 }
            ]
        );
        assert_eq!(b[0].rung_budgets(25, 3), vec![8, 25]);
    }

    #[test]
    fn brackets_degenerate_and_classic() {
        assert_eq!(hb_brackets(25, 25, 3).unwrap(), vec![Bracket { s: 0, n_configs: 1, initial_budget: 25 }]);
        let n: Vec<usize> = hb_brackets(1, 27, 3).unwrap().iter().map(|b| b.n_configs).collect();
        assert_eq!(n, vec![27, 12, 6, 4]);
        assert!(hb_brackets(0, 27, 3).is_err());
    }

    #[test]
    fn promotion_rule() {
        let same = vec![vec![1.0, 1.0]; 9];
        assert_eq!(sh_promote(&same, 3, &[2.0, 2.0]), vec![0, 1, 2]);
        assert_eq!(sh_promote(&same[..1], 3, &[2.0, 2.0]), vec![0]);
    }
}
