//! Horizon expressions such as `2*sum_alpha` or `1000 + 3*n`.
//!
//! Grammar: terms joined by `+`, each term a product of factors joined by `*`.
//! A factor is a nonnegative integer or one of `sum_alpha`, `sum_beta`, `n`.

use anyhow::{bail, Context, Result};
use storalloc::Instance;

pub const DEFAULT_HORIZON: &str = "2*sum_alpha";

pub fn eval_horizon(expr: &str, inst: &Instance) -> Result<u64> {
    if expr.trim().is_empty() {
        bail!("empty horizon expression");
    }
    let mut total = 0u64;
    for term in expr.split('+') {
        let mut product = 1u64;
        for factor in term.split('*') {
            let factor = factor.trim();
            let value = match factor {
                "sum_alpha" => inst.total_alpha(),
                "sum_beta" => inst.total_beta(),
                "n" => inst.len() as u64,
                "" => bail!("missing operand in horizon '{expr}'"),
                digits => digits
                    .parse::<u64>()
                    .with_context(|| format!("bad factor '{digits}' in horizon '{expr}'"))?,
            };
            product = product
                .checked_mul(value)
                .with_context(|| format!("horizon '{expr}' overflows"))?;
        }
        total = total
            .checked_add(product)
            .with_context(|| format!("horizon '{expr}' overflows"))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use storalloc::topology::build_complete;

    #[test]
    fn expressions() {
        let inst = Instance::uniform(build_complete(4).unwrap(), 3, 5, 1.0).unwrap();
        assert_eq!(eval_horizon(DEFAULT_HORIZON, &inst).unwrap(), 24);
        assert_eq!(eval_horizon("100", &inst).unwrap(), 100);
        assert_eq!(eval_horizon(" 10 * n + sum_beta ", &inst).unwrap(), 60);
        assert_eq!(eval_horizon("0*sum_alpha", &inst).unwrap(), 0);
        for bad in ["", "2*", "sum_gamma", "-3", "1.5*n", "99999999999*99999999999"] {
            assert!(eval_horizon(bad, &inst).is_err(), "{bad}");
        }
    }
}
