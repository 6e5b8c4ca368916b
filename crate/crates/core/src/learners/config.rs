use serde::{Deserialize, Serialize};

use crate::error::{LccdeError, Result};

/// Hyperparameters shared by the three boosted-tree variants.
///
/// `max_leaves` and the two GOSS fractions only affect the leaf-wise variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoosterConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_reg: f64,
    pub min_child_hessian: f64,
    pub max_leaves: usize,
    /// Fraction of samples kept by gradient magnitude.
    pub goss_top_fraction: f64,
    /// Fraction of samples drawn at random from the rest.
    pub goss_rand_fraction: f64,
    pub seed: u64,
}

impl Default for BoosterConfig {
    fn default() -> Self {
        BoosterConfig {
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 6,
            l2_reg: 1.0,
            min_child_hessian: 1.0,
            max_leaves: 31,
            goss_top_fraction: 0.2,
            goss_rand_fraction: 0.1,
            seed: 0,
        }
    }
}

impl BoosterConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LccdeError::InvalidConfig(msg));
        if self.rounds == 0 {
            return bad("rounds must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive".into());
        }
        if !(self.l2_reg.is_finite() && self.l2_reg >= 0.0) {
            return bad(format!("l2_reg must be >= 0, got {}", self.l2_reg));
        }
        if !(self.min_child_hessian.is_finite() && self.min_child_hessian >= 0.0) {
            return bad(format!("min_child_hessian must be >= 0, got {}", self.min_child_hessian));
        }
        if self.max_leaves == 0 {
            return bad("max_leaves must be positive".into());
        }
        check_goss_fractions(self.goss_top_fraction, self.goss_rand_fraction)
    }

    /// Sets one hyperparameter from its textual name and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| LccdeError::InvalidConfig(format!("bad value {value:?} for {key}")))
        }
        match key {
            "rounds" => self.rounds = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "max_depth" => self.max_depth = num(key, value)?,
            "l2_reg" | "lambda" => self.l2_reg = num(key, value)?,
            "min_child_hessian" => self.min_child_hessian = num(key, value)?,
            "max_leaves" => self.max_leaves = num(key, value)?,
            "goss_top_fraction" => self.goss_top_fraction = num(key, value)?,
            "goss_rand_fraction" => self.goss_rand_fraction = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(LccdeError::InvalidConfig(format!("unknown hyperparameter {key:?}"))),
        }
        Ok(())
    }
}

pub(crate) fn check_goss_fractions(a: f64, b: f64) -> Result<()> {
    let unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
    if !unit(a) || !unit(b) {
        return Err(LccdeError::InvalidConfig(format!("GOSS fractions must lie in [0, 1], got a={a}, b={b}")));
    }
    if a + b > 1.0 {
        return Err(LccdeError::InvalidConfig(format!("GOSS fractions must satisfy a + b <= 1, got a={a}, b={b}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        BoosterConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range_values() {
        let mut c = BoosterConfig { goss_top_fraction: 0.7, goss_rand_fraction: 0.4, ..Default::default() };
        assert!(c.validate().is_err());
        c.goss_rand_fraction = 0.3;
        c.validate().unwrap();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn set_by_name() {
        let mut c = BoosterConfig::default();
        c.set("max_depth", "3").unwrap();
        c.set("lambda", "0.5").unwrap();
        assert_eq!((c.max_depth, c.l2_reg), (3, 0.5));
        assert!(c.set("depth", "3").is_err());
        assert!(c.set("rounds", "many").is_err());
    }
}
