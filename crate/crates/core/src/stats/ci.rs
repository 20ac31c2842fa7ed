use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastCI {
    pub name: String,
    pub estimate: f64,
    /// Half-width of the 95% interval.
    pub half_width: f64,
    /// `morey` for condition means, `paired-t` for contrasts.
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinItemCIs {
    pub conditions: Vec<ContrastCI>,
    pub contrasts: Vec<ContrastCI>,
}

fn t975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1").inverse_cdf(0.975)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// 95% paired t interval on per-item values: `mean +/- t(0.975, n-1) sd / sqrt(n)`.
pub fn paired_t_interval(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewItems { need: 2, got: values.len() });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(format!("value {v}")));
    }
    let (mean, sd) = mean_sd(values);
    Ok((mean, t975(values.len() - 1) * sd / (values.len() as f64).sqrt()))
}

/// Within-item 95% intervals for an items x conditions matrix.
///
/// Condition intervals use item-adjusted scores `y_ij - mean_i + grand mean`
/// with the variance inflated by `C / (C - 1)`. Each contrast is a weight
/// vector over conditions and gets a paired t interval on the per-item
/// contrast values.
pub fn within_item_ci(
    values: &[Vec<f64>],
    condition_names: &[String],
    contrasts: &[(String, Vec<f64>)],
) -> Result<WithinItemCIs, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewItems { need: 2, got: n });
    }
    let c = condition_names.len();
    if c < 2 {
        return Err(StatsError::Dimension(format!("{c} conditions; need at least 2")));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != c {
            return Err(StatsError::Unbalanced(format!("item row {i} has {} of {c} cells", row.len())));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(StatsError::Unbalanced(format!("item row {i} has a missing or non-finite cell ({v})")));
        }
    }
    let item_means: Vec<f64> = values.iter().map(|r| r.iter().sum::<f64>() / c as f64).collect();
    let grand = item_means.iter().sum::<f64>() / n as f64;
    let t = t975(n - 1);
    let morey = (c as f64 / (c as f64 - 1.0)).sqrt();

    let mut conditions = Vec::with_capacity(c);
    for (j, name) in condition_names.iter().enumerate() {
        let adjusted: Vec<f64> = values.iter().zip(&item_means).map(|(r, m)| r[j] - m + grand).collect();
        let (_, sd) = mean_sd(&adjusted);
        let mean = values.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        conditions.push(ContrastCI {
            name: name.clone(),
            estimate: mean,
            half_width: t * morey * sd / (n as f64).sqrt(),
            method: "morey",
        });
    }

    let mut out = Vec::with_capacity(contrasts.len());
    for (name, w) in contrasts {
        if w.len() != c {
            return Err(StatsError::Dimension(format!("contrast {name:?} has {} weights for {c} conditions", w.len())));
        }
        let per_item: Vec<f64> = values.iter().map(|r| r.iter().zip(w).map(|(y, w)| y * w).sum()).collect();
        let (estimate, half_width) = paired_t_interval(&per_item)?;
        out.push(ContrastCI { name: name.clone(), estimate, half_width, method: "paired-t" });
    }
    Ok(WithinItemCIs { conditions, contrasts: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(c: usize) -> Vec<String> {
        (0..c).map(|j| format!("c{j}")).collect()
    }

    #[test]
    fn constant_matrix_has_zero_width() {
        let m = vec![vec![5.0; 4]; 6];
        let out = within_item_ci(&m, &names(4), &[("x".into(), vec![-1.0, 1.0, 1.0, -1.0])]).unwrap();
        assert!(out.conditions.iter().all(|c| c.half_width == 0.0 && c.estimate == 5.0));
        assert_eq!(out.contrasts[0].half_width, 0.0);
    }

    #[test]
    fn t_quantile() {
        // tabulated t(0.975) values
        assert!((t975(1) - 12.7062047).abs() < 1e-6);
        assert!((t975(20) - 2.0859634).abs() < 1e-6);
    }

    #[test]
    fn missing_cells_are_errors() {
        let m = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(matches!(within_item_ci(&m, &names(2), &[]), Err(StatsError::Unbalanced(_))));
        let m = vec![vec![1.0, 2.0], vec![1.0, f64::NAN]];
        assert!(matches!(within_item_ci(&m, &names(2), &[]), Err(StatsError::Unbalanced(_))));
        assert!(within_item_ci(&[vec![1.0, 2.0]], &names(2), &[]).is_err());
    }
}
