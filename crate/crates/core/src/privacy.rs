//! Privacy dimension: per-attribute average precision over classifier score
//! tables, the classwise mean (cMAP), relative drop tables against a
//! baseline, and class-weight export.
//!
//! Lower cMAP on anonymized data means stronger attribute protection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::AttributeScoreTable;

/// Per-attribute average precision plus their mean.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivacyResult {
    /// AP per attribute, excluding skipped ones.
    pub per_attribute_ap: BTreeMap<String, f64>,
    /// Arithmetic mean of `per_attribute_ap` values.
    pub cmap: f64,
    /// Attributes with no positive labels, excluded from the mean.
    pub skipped_attributes: Vec<String>,
}

/// Average precision of `(image_id, score, label)` examples: the all-point
/// area under the precision–recall curve obtained by ranking on descending
/// score (ties broken by ascending id), which collapses to the mean of the
/// precision sampled at each positive rank.
///
/// Returns `None` when no example is positive — the caller decides whether
/// that attribute is skipped or an error.
pub fn average_precision(examples: &[(&str, f64, bool)]) -> Option<f64> {
    let positives = examples.iter().filter(|e| e.2).count();
    if positives == 0 {
        return None;
    }
    let mut ranked: Vec<&(&str, f64, bool)> = examples.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));

    let mut true_positives = 0usize;
    let mut precision_sum = 0.0;
    for (rank, example) in ranked.iter().enumerate() {
        if example.2 {
            true_positives += 1;
            precision_sum += true_positives as f64 / (rank + 1) as f64;
        }
    }
    Some(precision_sum / positives as f64)
}

/// Classwise mean AP over the table's attributes. Attributes with no
/// positives are listed as skipped and left out of the mean; the table must
/// have rows and at least one scorable attribute.
pub fn cmap(table: &AttributeScoreTable) -> Result<PrivacyResult> {
    if table.is_empty() {
        return Err(Error::EmptyScoreTable);
    }
    let mut per_attribute_ap = BTreeMap::new();
    let mut skipped = Vec::new();
    for (index, name) in table.attributes().iter().enumerate() {
        match average_precision(&table.column(index)) {
            Some(ap) => {
                per_attribute_ap.insert(name.clone(), ap);
            }
            None => skipped.push(name.clone()),
        }
    }
    if per_attribute_ap.is_empty() {
        return Err(Error::AllAttributesSkipped);
    }
    let cmap = per_attribute_ap.values().sum::<f64>() / per_attribute_ap.len() as f64;
    Ok(PrivacyResult {
        per_attribute_ap,
        cmap,
        skipped_attributes: skipped,
    })
}

/// Relative AP drop (in percent) from `original` to `anonymized` for every
/// attribute scored in both: `100·(AP_orig − AP_anon)/AP_orig`. Negative
/// values (the anonymized copy scoring higher) are legitimate. An attribute
/// with zero original AP has an undefined drop, reported as `None`.
///
/// Both results must cover the same attribute set (scored or skipped).
pub fn relative_drop(
    original: &PrivacyResult,
    anonymized: &PrivacyResult,
) -> Result<BTreeMap<String, Option<f64>>> {
    let universe = |r: &PrivacyResult| -> BTreeSet<String> {
        r.per_attribute_ap
            .keys()
            .cloned()
            .chain(r.skipped_attributes.iter().cloned())
            .collect()
    };
    let orig_set = universe(original);
    let anon_set = universe(anonymized);
    if orig_set != anon_set {
        let missing: Vec<String> = orig_set
            .symmetric_difference(&anon_set)
            .map(|s| {
                let mut quoted = String::from("`");
                quoted.push_str(s);
                quoted.push('`');
                quoted
            })
            .collect();
        return Err(Error::AttributeSetMismatch {
            missing: missing.join(", "),
        });
    }

    let mut drops = BTreeMap::new();
    for (attribute, &orig_ap) in &original.per_attribute_ap {
        let Some(&anon_ap) = anonymized.per_attribute_ap.get(attribute) else {
            continue; // skipped on the anonymized side; nothing to compare
        };
        let drop = (orig_ap != 0.0).then(|| 100.0 * (orig_ap - anon_ap) / orig_ap);
        drops.insert(attribute.clone(), drop);
    }
    Ok(drops)
}

/// Inverse-frequency class weights `W_c = N / (N_c · C)` with `N` rows,
/// `C` attributes and `N_c` positives for attribute `c`. Every attribute
/// must have at least one positive.
pub fn class_weights(table: &AttributeScoreTable) -> Result<BTreeMap<String, f64>> {
    if table.is_empty() {
        return Err(Error::EmptyScoreTable);
    }
    let n = table.len() as f64;
    let c = table.attributes().len() as f64;
    let mut weights = BTreeMap::new();
    for (index, name) in table.attributes().iter().enumerate() {
        let positives = table.rows().filter(|(_, row)| row.labels[index]).count();
        if positives == 0 {
            return Err(Error::NoPositives {
                attribute: name.to_string(),
            });
        }
        weights.insert(name.clone(), n / (positives as f64 * c));
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    /// Brute-force reference: explicitly enumerates the ranked PR curve and
    /// integrates Σ (R_n − R_{n−1})·P_n over every rank.
    fn ap_oracle(examples: &[(&str, f64, bool)]) -> Option<f64> {
        let positives = examples.iter().filter(|e| e.2).count();
        if positives == 0 {
            return None;
        }
        let mut ranked: Vec<&(&str, f64, bool)> = examples.iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        let mut curve = Vec::new(); // (recall, precision) at every rank
        let mut tp = 0usize;
        for (rank, example) in ranked.iter().enumerate() {
            if example.2 {
                tp += 1;
            }
            curve.push((tp as f64 / positives as f64, tp as f64 / (rank + 1) as f64));
        }
        let mut area = 0.0;
        let mut prev_recall = 0.0;
        for (recall, precision) in curve {
            area += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        Some(area)
    }

    fn examples_from(scores: &[f64], labels: &[bool]) -> Vec<(String, f64, bool)> {
        scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&s, &l))| (format!("img{i:03}"), s, l))
            .collect()
    }

    fn borrowed(examples: &[(String, f64, bool)]) -> Vec<(&str, f64, bool)> {
        examples
            .iter()
            .map(|(id, s, l)| (id.as_str(), *s, *l))
            .collect()
    }

    #[test]
    fn worked_example_matches_hand_computation() {
        let ex = examples_from(&[0.9, 0.8, 0.7, 0.6], &[true, true, false, true]);
        let ap = average_precision(&borrowed(&ex)).unwrap();
        // precisions at the positives: 1/1, 2/2, 3/4
        assert!((ap - (1.0 + 1.0 + 0.75) / 3.0).abs() < 1e-9);
        assert!((ap - 0.916_667).abs() < 1e-6);
    }

    #[test]
    fn perfect_ranking_gives_one() {
        let ex = examples_from(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]);
        assert_eq!(average_precision(&borrowed(&ex)), Some(1.0));
    }

    #[test]
    fn no_positives_is_undefined() {
        let ex = examples_from(&[0.9, 0.8], &[false, false]);
        assert_eq!(average_precision(&borrowed(&ex)), None);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        // Equal scores: "img000" (negative) ranks before "img001" (positive).
        let ex = examples_from(&[0.5, 0.5], &[false, true]);
        let ap = average_precision(&borrowed(&ex)).unwrap();
        assert!((ap - 0.5).abs() < 1e-12);
        // Flipping which id carries the positive changes the outcome.
        let ex = examples_from(&[0.5, 0.5], &[true, false]);
        assert_eq!(average_precision(&borrowed(&ex)), Some(1.0));
    }

    #[test]
    fn cmap_averages_scored_attributes_and_lists_skipped() {
        // Shared score column ranks rows r0 > r1 > ... > r4.
        let mut table =
            AttributeScoreTable::new(vec!["half".into(), "seven_tenths".into(), "empty".into()])
                .unwrap();
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5];
        let half = [false, true, false, false, false]; // precision 1/2 at rank 2
        let seven = [true, false, false, false, true]; // (1 + 2/5)/2 = 0.7
        for i in 0..5 {
            table
                .insert(
                    &format!("r{i}"),
                    vec![scores[i], scores[i], scores[i]],
                    vec![half[i], seven[i], false],
                )
                .unwrap();
        }
        let result = cmap(&table).unwrap();
        assert!((result.per_attribute_ap["half"] - 0.5).abs() < 1e-12);
        assert!((result.per_attribute_ap["seven_tenths"] - 0.7).abs() < 1e-12);
        assert_eq!(result.skipped_attributes, vec!["empty".to_string()]);
        assert!((result.cmap - 0.6).abs() < 1e-12);
    }

    #[test]
    fn cmap_rejects_empty_and_all_skipped_tables() {
        let table = AttributeScoreTable::new(vec!["a".into()]).unwrap();
        assert!(matches!(cmap(&table), Err(Error::EmptyScoreTable)));
        let mut table = AttributeScoreTable::new(vec!["a".into()]).unwrap();
        table.insert("r0", vec![0.5], vec![false]).unwrap();
        assert!(matches!(cmap(&table), Err(Error::AllAttributesSkipped)));
    }

    #[test]
    fn relative_drop_arithmetic_and_sign() {
        let result = |ap: f64| PrivacyResult {
            per_attribute_ap: BTreeMap::from([("a".to_string(), ap)]),
            cmap: ap,
            skipped_attributes: Vec::new(),
        };
        let drops = relative_drop(&result(0.5), &result(0.4)).unwrap();
        assert!((drops["a"].unwrap() - 20.0).abs() < 1e-12);
        let drops = relative_drop(&result(0.5), &result(0.5)).unwrap();
        assert_eq!(drops["a"], Some(0.0));
        let drops = relative_drop(&result(0.5), &result(0.55)).unwrap();
        assert!((drops["a"].unwrap() + 10.0).abs() < 1e-12);
        // Zero baseline AP: the drop is undefined, not infinite.
        let drops = relative_drop(&result(0.0), &result(0.5)).unwrap();
        assert_eq!(drops["a"], None);
    }

    #[test]
    fn relative_drop_requires_matching_attribute_sets() {
        let left = PrivacyResult {
            per_attribute_ap: BTreeMap::from([("a".to_string(), 0.5)]),
            cmap: 0.5,
            skipped_attributes: Vec::new(),
        };
        let right = PrivacyResult {
            per_attribute_ap: BTreeMap::from([("b".to_string(), 0.5)]),
            cmap: 0.5,
            skipped_attributes: Vec::new(),
        };
        let err = relative_drop(&left, &right).unwrap_err();
        assert!(
            matches!(err, Error::AttributeSetMismatch { ref missing } if missing.contains('a') && missing.contains('b'))
        );
    }

    #[test]
    fn class_weights_formula() {
        // N = 100 rows, C = 2 attributes, 25 positives each → W = 100/(25·2) = 2.
        let mut table = AttributeScoreTable::new(vec!["a".into(), "b".into()]).unwrap();
        for i in 0..100 {
            let positive = i % 4 == 0;
            table
                .insert(
                    &format!("r{i:03}"),
                    vec![0.5, 0.5],
                    vec![positive, positive],
                )
                .unwrap();
        }
        let weights = class_weights(&table).unwrap();
        assert!((weights["a"] - 2.0).abs() < 1e-12);
        assert!((weights["b"] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn class_weights_degenerate_cases() {
        // All positive everywhere → every weight is 1/C.
        let mut table = AttributeScoreTable::new(vec!["a".into(), "b".into()]).unwrap();
        for i in 0..10 {
            table
                .insert(&format!("r{i}"), vec![0.5, 0.5], vec![true, true])
                .unwrap();
        }
        let weights = class_weights(&table).unwrap();
        assert!((weights["a"] - 0.5).abs() < 1e-12);

        // Single always-positive attribute → weight 1.0.
        let mut table = AttributeScoreTable::new(vec!["a".into()]).unwrap();
        for i in 0..10 {
            table
                .insert(&format!("r{i}"), vec![0.5], vec![true])
                .unwrap();
        }
        assert!((class_weights(&table).unwrap()["a"] - 1.0).abs() < 1e-12);

        // A zero-positive attribute is an error naming it.
        let mut table = AttributeScoreTable::new(vec!["a".into()]).unwrap();
        table.insert("r0", vec![0.5], vec![false]).unwrap();
        assert!(matches!(
            class_weights(&table),
            Err(Error::NoPositives { attribute }) if attribute == "a"
        ));
    }

    proptest! {
        #[test]
        fn matches_curve_enumeration_oracle(
            rows in proptest::collection::vec((0u8..=10, proptest::bool::ANY), 1..50)
        ) {
            // Coarse scores in {0.0, 0.1, .., 1.0} force plenty of ties.
            let examples: Vec<(String, f64, bool)> = rows
                .iter()
                .enumerate()
                .map(|(i, &(s, l))| (format!("img{i:03}"), f64::from(s) / 10.0, l))
                .collect();
            let ex = borrowed(&examples);
            match (average_precision(&ex), ap_oracle(&ex)) {
                (Some(fast), Some(slow)) => prop_assert!((fast - slow).abs() < 1e-9),
                (None, None) => {}
                (fast, slow) => prop_assert!(false, "disagree: {fast:?} vs {slow:?}"),
            }
        }

        #[test]
        fn invariant_under_monotone_score_transforms(
            rows in proptest::collection::vec((0u8..=10, proptest::bool::ANY), 1..40)
        ) {
            let examples: Vec<(String, f64, bool)> = rows
                .iter()
                .enumerate()
                .map(|(i, &(s, l))| (format!("img{i:03}"), f64::from(s) / 10.0, l))
                .collect();
            // Strictly monotone map [0,1] → [0,1]; preserves ties and order.
            let transformed: Vec<(String, f64, bool)> = examples
                .iter()
                .map(|(id, s, l)| (id.clone(), s * s * 0.5 + s * 0.25, *l))
                .collect();
            prop_assert_eq!(
                average_precision(&borrowed(&examples)),
                average_precision(&borrowed(&transformed))
            );
        }

        #[test]
        fn invariant_under_row_permutation(
            rows in proptest::collection::vec((0u8..=10, proptest::bool::ANY), 2..40),
            seed in 0u64..1000
        ) {
            let examples: Vec<(String, f64, bool)> = rows
                .iter()
                .enumerate()
                .map(|(i, &(s, l))| (format!("img{i:03}"), f64::from(s) / 10.0, l))
                .collect();
            let mut shuffled = examples.clone();
            // Cheap deterministic Fisher–Yates driven by a splitmix step.
            let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
            for i in (1..shuffled.len()).rev() {
                state ^= state >> 30;
                state = state.wrapping_mul(0xBF58476D1CE4E5B9);
                state ^= state >> 27;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(
                average_precision(&borrowed(&examples)),
                average_precision(&borrowed(&shuffled))
            );
        }

        #[test]
        fn ap_stays_in_unit_interval(
            rows in proptest::collection::vec((0u8..=10, proptest::bool::ANY), 1..40)
        ) {
            let examples: Vec<(String, f64, bool)> = rows
                .iter()
                .enumerate()
                .map(|(i, &(s, l))| (format!("img{i:03}"), f64::from(s) / 10.0, l))
                .collect();
            if let Some(ap) = average_precision(&borrowed(&examples)) {
                prop_assert!((0.0..=1.0).contains(&ap));
            }
        }
    }
}
