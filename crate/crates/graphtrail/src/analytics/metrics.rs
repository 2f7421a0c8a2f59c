//! Metric formulas: top-n Jaccard, rank-biased overlap, average rank
//! change, movement norms, and their macro aggregates.

use std::collections::{HashMap, HashSet};

use crate::analytics::neighbors::{transition_rankings, PointSet};
use crate::analytics::{
    MetricConfig, MetricInput, MetricReport, MetricRow, MovementVariant,
};
use crate::error::{Error, Result};
use crate::graph::NodeRegistry;

/// Jaccard overlap of two neighbor lists taken as sets.
pub fn jaccard_from_lists(a: &[usize], b: &[usize]) -> f64 {
    let sa: HashSet<usize> = a.iter().copied().collect();
    let sb: HashSet<usize> = b.iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Rank-biased overlap of two rankings, truncated at depth `m`:
/// `raw = (1-p) Σ_{d=1..m} p^(d-1) |prefix_d(a) ∩ prefix_d(b)| / d`,
/// `normalized = raw / (1 - p^m)` so identical lists score 1.
pub fn rbo_from_lists(prev: &[usize], curr: &[usize], p: f64, m: usize) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::validation(format!("rbo damping {p} outside (0, 1)")));
    }
    if m == 0 || m > prev.len() || m > curr.len() {
        return Err(Error::validation(format!(
            "rbo depth m={m} exceeds the available list depth {}",
            prev.len().min(curr.len())
        )));
    }
    let mut seen_prev: HashSet<usize> = HashSet::new();
    let mut seen_curr: HashSet<usize> = HashSet::new();
    let mut overlap = 0usize;
    let mut raw = 0.0;
    let mut damp = 1.0;
    for d in 1..=m {
        let a = prev[d - 1];
        let b = curr[d - 1];
        if a == b {
            overlap += 1;
        } else {
            if seen_curr.contains(&a) {
                overlap += 1;
            }
            if seen_prev.contains(&b) {
                overlap += 1;
            }
        }
        seen_prev.insert(a);
        seen_curr.insert(b);
        raw += damp * overlap as f64 / d as f64;
        damp *= p;
    }
    raw *= 1.0 - p;
    let normalized = raw / (1.0 - p.powi(m as i32));
    Ok((raw, normalized))
}

/// Sum of absolute rank differences between two rankings of the same items.
pub fn rank_change_sum(prev: &[usize], curr: &[usize]) -> f64 {
    debug_assert_eq!(prev.len(), curr.len());
    let rank_prev: HashMap<usize, usize> =
        prev.iter().enumerate().map(|(r, &id)| (id, r + 1)).collect();
    curr.iter()
        .enumerate()
        .map(|(r, &id)| {
            let rp = rank_prev[&id] as f64;
            ((r + 1) as f64 - rp).abs()
        })
        .sum()
}

/// Top-n neighbor-set overlap of node `i` across the transition into `t`.
pub fn jaccard_n(input: &MetricInput<'_>, i: usize, t: usize, n: usize) -> Result<f64> {
    let (prev, curr, common) = transition_rankings(input, i, t)?;
    if n > common.saturating_sub(1) {
        return Err(Error::validation(format!(
            "jaccard depth n={n} exceeds {} common neighbors at t={t}",
            common.saturating_sub(1)
        )));
    }
    Ok(jaccard_from_lists(&prev[..n], &curr[..n]))
}

/// (raw, normalized) rank-biased overlap of node `i` across the transition
/// into `t`.
pub fn rbo(input: &MetricInput<'_>, i: usize, t: usize, m: usize, p: f64) -> Result<(f64, f64)> {
    let (prev, curr, common) = transition_rankings(input, i, t)?;
    if m > common.saturating_sub(1) {
        return Err(Error::validation(format!(
            "rbo depth m={m} exceeds {} common neighbors at t={t}",
            common.saturating_sub(1)
        )));
    }
    rbo_from_lists(&prev, &curr, p, m)
}

/// Average absolute rank change of `i`'s neighbors over the common node
/// set; the self term contributes 0 and the divisor is the full common
/// count.
pub fn arc(input: &MetricInput<'_>, i: usize, t: usize) -> Result<f64> {
    let (prev, curr, common) = transition_rankings(input, i, t)?;
    Ok(rank_change_sum(&prev, &curr) / common as f64)
}

/// Normalized average rank change over all transitions:
/// `(1/T') Σ_t (1/(N^t - 1)) Σ_i ARC(i, t)`.
pub fn narc(input: &MetricInput<'_>) -> Result<f64> {
    let t_count = input.num_timestamps();
    if t_count < 2 {
        return Err(Error::validation("narc needs at least 2 timestamps"));
    }
    let mut total = 0.0;
    for t in 1..t_count {
        let prev = PointSet::at(input, t - 1)?;
        let curr = PointSet::at(input, t)?;
        let common: Vec<usize> =
            curr.ids().iter().copied().filter(|&id| prev.contains(id)).collect();
        if common.len() < 2 {
            return Err(Error::validation(format!(
                "transition into t={t} has fewer than 2 common nodes"
            )));
        }
        let mut arc_sum = 0.0;
        for &i in &common {
            let ranked_prev = prev.ranking(i, &common);
            let ranked_curr = curr.ranking(i, &common);
            arc_sum += rank_change_sum(&ranked_prev, &ranked_curr) / common.len() as f64;
        }
        total += arc_sum / (common.len() - 1) as f64;
    }
    Ok(total / (t_count - 1) as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct MovementRow {
    pub node_id: usize,
    pub timestamp_index: usize,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct Movement {
    pub rows: Vec<MovementRow>,
    /// Scalar L1: mean over transitions of the mean per-node L1 step.
    pub l1: f64,
    pub l2: f64,
}

fn variant_vector(raw: &[f64], variant: MovementVariant) -> Vec<f64> {
    match variant {
        MovementVariant::Raw | MovementVariant::Projected => raw.to_vec(),
        MovementVariant::UnitNormalized => {
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                vec![0.0; raw.len()]
            } else {
                raw.iter().map(|x| x / norm).collect()
            }
        }
    }
}

/// Per-node movement between adjacent timestamps plus both scalar norms.
pub fn movement(input: &MetricInput<'_>, variant: MovementVariant) -> Result<Movement> {
    if variant == MovementVariant::Projected
        && !matches!(input, MetricInput::Projected(_))
    {
        return Err(Error::validation(
            "projected movement needs a trajectory set as input",
        ));
    }
    let t_count = input.num_timestamps();
    if t_count < 2 {
        return Err(Error::validation("movement needs at least 2 timestamps"));
    }
    let mut rows = Vec::new();
    let mut scalar_l1 = 0.0;
    let mut scalar_l2 = 0.0;
    let mut transitions = 0usize;
    for t in 1..t_count {
        let prev = PointSet::at(input, t - 1)?;
        let curr = PointSet::at(input, t)?;
        let common: Vec<usize> =
            curr.ids().iter().copied().filter(|&id| prev.contains(id)).collect();
        if common.is_empty() {
            continue;
        }
        let mut sum_l1 = 0.0;
        let mut sum_l2 = 0.0;
        for &id in &common {
            let a = variant_vector(prev.vector(id).expect("common"), variant);
            let b = variant_vector(curr.vector(id).expect("common"), variant);
            let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            let l2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            sum_l1 += l1;
            sum_l2 += l2;
            rows.push(MovementRow { node_id: id, timestamp_index: t, l1, l2 });
        }
        scalar_l1 += sum_l1 / common.len() as f64;
        scalar_l2 += sum_l2 / common.len() as f64;
        transitions += 1;
    }
    let denom = transitions.max(1) as f64;
    Ok(Movement { rows, l1: scalar_l1 / denom, l2: scalar_l2 / denom })
}

/// The L1 or L2 movement scalar with its per-node values.
pub fn movement_lp(
    input: &MetricInput<'_>,
    variant: MovementVariant,
    p: u8,
) -> Result<(f64, Vec<MovementRow>)> {
    let m = movement(input, variant)?;
    match p {
        1 => Ok((m.l1, m.rows)),
        2 => Ok((m.l2, m.rows)),
        other => Err(Error::validation(format!("movement norm p={other} not in {{1, 2}}"))),
    }
}

/// RBO averaged over all common nodes and transitions:
/// `(1/T') Σ_t (1/N^t) Σ_i RBO(i, m, t)`, raw and normalized.
pub fn macro_rbo(input: &MetricInput<'_>, m: usize, p: f64) -> Result<(f64, f64)> {
    let t_count = input.num_timestamps();
    if t_count < 2 {
        return Err(Error::validation("macro rbo needs at least 2 timestamps"));
    }
    let mut total_raw = 0.0;
    let mut total_norm = 0.0;
    for t in 1..t_count {
        let prev = PointSet::at(input, t - 1)?;
        let curr = PointSet::at(input, t)?;
        let common: Vec<usize> =
            curr.ids().iter().copied().filter(|&id| prev.contains(id)).collect();
        if common.is_empty() {
            return Err(Error::validation(format!(
                "transition into t={t} has no common nodes"
            )));
        }
        let mut sum_raw = 0.0;
        let mut sum_norm = 0.0;
        for &i in &common {
            let ranked_prev = prev.ranking(i, &common);
            let ranked_curr = curr.ranking(i, &common);
            let (raw, norm) = rbo_from_lists(&ranked_prev, &ranked_curr, p, m)?;
            sum_raw += raw;
            sum_norm += norm;
        }
        total_raw += sum_raw / common.len() as f64;
        total_norm += sum_norm / common.len() as f64;
    }
    let denom = (t_count - 1) as f64;
    Ok((total_raw / denom, total_norm / denom))
}

/// Computes every per-node metric and the macro scalars in one pass.
pub fn compute_report(
    input: &MetricInput<'_>,
    cfg: &MetricConfig,
    registry: Option<&NodeRegistry>,
) -> Result<MetricReport> {
    cfg.validate()?;
    if cfg.space != input.space() {
        return Err(Error::validation(format!(
            "metric space {:?} does not match the supplied input",
            cfg.space
        )));
    }
    let t_count = input.num_timestamps();
    if t_count < 2 {
        return Err(Error::validation("metric report needs at least 2 timestamps"));
    }
    let mv = movement(input, cfg.movement)?;
    let mut movement_of: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    for row in &mv.rows {
        movement_of.insert((row.node_id, row.timestamp_index), (row.l1, row.l2));
    }

    let mut rows = Vec::new();
    let mut narc_total = 0.0;
    let mut macro_raw = 0.0;
    let mut macro_norm = 0.0;
    for t in 1..t_count {
        let prev = PointSet::at(input, t - 1)?;
        let curr = PointSet::at(input, t)?;
        let common: Vec<usize> =
            curr.ids().iter().copied().filter(|&id| prev.contains(id)).collect();
        if common.len() < 2 {
            return Err(Error::validation(format!(
                "transition into t={t} has fewer than 2 common nodes"
            )));
        }
        let depth_cap = common.len() - 1;
        if cfg.jaccard_depth > depth_cap || cfg.rbo_depth > depth_cap {
            return Err(Error::validation(format!(
                "metric depths (n={}, m={}) exceed {depth_cap} common neighbors at t={t}",
                cfg.jaccard_depth, cfg.rbo_depth
            )));
        }
        let mut arc_sum = 0.0;
        let mut rbo_raw_sum = 0.0;
        let mut rbo_norm_sum = 0.0;
        for &i in &common {
            let ranked_prev = prev.ranking(i, &common);
            let ranked_curr = curr.ranking(i, &common);
            let jac = jaccard_from_lists(
                &ranked_prev[..cfg.jaccard_depth],
                &ranked_curr[..cfg.jaccard_depth],
            );
            let (rbo_raw, rbo_normalized) =
                rbo_from_lists(&ranked_prev, &ranked_curr, cfg.rbo_damping, cfg.rbo_depth)?;
            let arc_i = rank_change_sum(&ranked_prev, &ranked_curr) / common.len() as f64;
            let (l1, l2) = movement_of.get(&(i, t)).copied().unwrap_or((0.0, 0.0));
            arc_sum += arc_i;
            rbo_raw_sum += rbo_raw;
            rbo_norm_sum += rbo_normalized;
            let label = input
                .label_of(i)
                .or_else(|| registry.and_then(|r| r.label(i)).map(str::to_string))
                .unwrap_or_else(|| i.to_string());
            rows.push(MetricRow {
                node_id: i,
                label,
                timestamp_index: t,
                jaccard: jac,
                rbo_raw,
                rbo_normalized,
                arc: arc_i,
                l1,
                l2,
            });
        }
        narc_total += arc_sum / (common.len() - 1) as f64;
        macro_raw += rbo_raw_sum / common.len() as f64;
        macro_norm += rbo_norm_sum / common.len() as f64;
    }
    let transitions = (t_count - 1) as f64;
    Ok(MetricReport {
        rows,
        narc: narc_total / transitions,
        macro_rbo_raw: macro_raw / transitions,
        macro_rbo_normalized: macro_norm / transitions,
        movement_l1: mv.l1,
        movement_l2: mv.l2,
        config_fingerprint: cfg.fingerprint(),
    })
}
