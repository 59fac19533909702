//! Cross-method report assembly: one row per anonymization method holding
//! privacy, utility and practicality results (each possibly missing), plus
//! per-dimension rankings and pure what-if re-weighting of practicality.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Detection, DetectionSet, GroundTruthSet};
use crate::practicality::{
    fuse_components, normalize_invert, MmdParams, PracticalityComponents, WeightVector,
};
use crate::privacy::PrivacyResult;
use crate::utility::{match_detections, pr_curve, prf1, prf_from_counts, PrfScores};

/// Thresholds and parameters a run was evaluated under, echoed into every
/// report for provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationSettings {
    pub iou_threshold: f64,
    pub confidence_threshold: f64,
    pub ssim_threshold: f64,
    pub mmd: MmdParams,
    pub person_class: u32,
    pub weights: WeightVector,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            confidence_threshold: 0.25,
            ssim_threshold: 0.99,
            mmd: MmdParams::default(),
            person_class: 0,
            weights: WeightVector::equal(),
        }
    }
}

impl EvaluationSettings {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("iou_threshold", self.iou_threshold),
            ("confidence_threshold", self.confidence_threshold),
            ("ssim_threshold", self.ssim_threshold),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::ReportFieldRange {
                    method: String::from("settings"),
                    field,
                    value,
                });
            }
        }
        self.mmd.validate()?;
        self.weights.validate()
    }
}

/// Detection quality of one class under the evaluation thresholds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassUtility {
    pub class_id: u32,
    pub class_name: String,
    pub scores: PrfScores,
    /// Area under the all-point precision–recall curve; absent for classes
    /// without ground truth.
    pub pr_auc: Option<f64>,
}

/// Utility dimension of one method: macro scores over the classes present
/// plus the per-class breakdown.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UtilityReport {
    pub macro_scores: PrfScores,
    /// Mean AP over classes that have a curve; absent when none do.
    pub macro_pr_auc: Option<f64>,
    pub per_class: Vec<ClassUtility>,
}

/// Evaluates the utility dimension: precision/recall/F1 at the confidence
/// threshold, precision–recall curves over the full ranking. Classes are
/// those with ground truth or with detections that survive the threshold.
pub fn utility_report(
    dets: &DetectionSet,
    gts: &GroundTruthSet,
    iou_threshold: f64,
    confidence_threshold: f64,
) -> Result<UtilityReport> {
    let kept: Vec<Detection> = dets
        .entries()
        .iter()
        .filter(|d| d.score >= confidence_threshold)
        .cloned()
        .collect();
    let kept = DetectionSet::new(kept)?;
    let matches = match_detections(&kept, gts, iou_threshold);
    let prf = prf1(&matches);

    let mut per_class = Vec::new();
    let mut auc_sum = 0.0;
    let mut auc_count = 0usize;
    for (&class_id, counts) in &matches.per_class {
        let pr_auc = pr_curve(dets, gts, class_id, iou_threshold).map(|curve| curve.ap);
        if let Some(ap) = pr_auc {
            auc_sum += ap;
            auc_count += 1;
        }
        let class_name = gts
            .class_names()
            .get(class_id as usize)
            .cloned()
            .unwrap_or_else(|| format!("class_{class_id}"));
        per_class.push(ClassUtility {
            class_id,
            class_name,
            scores: prf_from_counts(counts),
            pr_auc,
        });
    }
    Ok(UtilityReport {
        macro_scores: prf.macro_avg,
        macro_pr_auc: (auc_count > 0).then(|| auc_sum / auc_count as f64),
        per_class,
    })
}

/// Raw per-method results collected by a pipeline run; `None` marks a
/// dimension whose inputs were not supplied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MethodMetrics {
    pub privacy: Option<PrivacyResult>,
    pub utility: Option<UtilityReport>,
    pub throughput_fps: Option<f64>,
    pub robustness_count: Option<u64>,
    pub intelligibility_mmd: Option<f64>,
}

/// One method's row in the trade-off table. Missing dimensions stay `None`;
/// the fused practicality score exists only when all three of its raw
/// metrics do.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodReport {
    pub method_name: String,
    pub privacy: Option<PrivacyResult>,
    pub utility: Option<UtilityReport>,
    pub throughput_fps: Option<f64>,
    pub robustness_count: Option<u64>,
    pub intelligibility_mmd: Option<f64>,
    pub practicality_components: Option<PracticalityComponents>,
    pub practicality: Option<f64>,
}

impl MethodReport {
    /// Range checks for rows arriving from outside (deserialized tables).
    pub fn validate(&self) -> Result<()> {
        let check = |field: &'static str, value: f64| -> Result<()> {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::ReportFieldRange {
                    method: self.method_name.clone(),
                    field,
                    value,
                });
            }
            Ok(())
        };
        if let Some(privacy) = &self.privacy {
            check("privacy_cmap", privacy.cmap)?;
            for ap in privacy.per_attribute_ap.values() {
                check("per_attribute_ap", *ap)?;
            }
        }
        if let Some(utility) = &self.utility {
            let mut rates = alloc::vec![
                ("macro_precision", utility.macro_scores.precision),
                ("macro_recall", utility.macro_scores.recall),
                ("macro_f1", utility.macro_scores.f1),
            ];
            if let Some(auc) = utility.macro_pr_auc {
                rates.push(("macro_pr_auc", auc));
            }
            for class in &utility.per_class {
                rates.push(("precision", class.scores.precision));
                rates.push(("recall", class.scores.recall));
                rates.push(("f1", class.scores.f1));
                if let Some(auc) = class.pr_auc {
                    rates.push(("pr_auc", auc));
                }
            }
            for (field, value) in rates {
                check(field, value)?;
            }
        }
        if let Some(fps) = self.throughput_fps {
            if !fps.is_finite() || fps <= 0.0 {
                return Err(Error::FpsRange {
                    method: self.method_name.clone(),
                });
            }
        }
        if let Some(mmd) = self.intelligibility_mmd {
            if !mmd.is_finite() || mmd < 0.0 {
                return Err(Error::ReportFieldRange {
                    method: self.method_name.clone(),
                    field: "intelligibility_mmd",
                    value: mmd,
                });
            }
        }
        if let Some(c) = &self.practicality_components {
            check("robustness_component", c.robustness)?;
            check("intelligibility_component", c.intelligibility)?;
            check("throughput_component", c.throughput)?;
        }
        if let Some(p) = self.practicality {
            check("practicality", p)?;
        }
        Ok(())
    }
}

/// Ordered method names per dimension; methods missing a dimension are
/// absent from its ranking.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rankings {
    /// Ascending cMAP: lower scores mean stronger attribute protection.
    pub privacy: Vec<String>,
    /// Descending macro F1.
    pub utility: Vec<String>,
    /// Descending fused practicality score.
    pub practicality: Vec<String>,
}

/// The complete output of one evaluation run: settings echo, one row per
/// method (sorted by name) and the per-dimension rankings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeoffTable {
    pub settings: EvaluationSettings,
    pub rows: Vec<MethodReport>,
    pub rankings: Rankings,
}

fn ranked<F>(rows: &[MethodReport], key: F, ascending: bool) -> Vec<String>
where
    F: Fn(&MethodReport) -> Option<f64>,
{
    let mut entries: Vec<(&MethodReport, f64)> = rows
        .iter()
        .filter_map(|row| key(row).map(|v| (row, v)))
        .collect();
    entries.sort_by(|(ra, va), (rb, vb)| {
        let order = if ascending {
            va.total_cmp(vb)
        } else {
            vb.total_cmp(va)
        };
        order.then_with(|| ra.method_name.cmp(&rb.method_name))
    });
    entries
        .into_iter()
        .map(|(row, _)| row.method_name.clone())
        .collect()
}

fn compute_rankings(rows: &[MethodReport]) -> Rankings {
    Rankings {
        privacy: ranked(rows, |r| r.privacy.as_ref().map(|p| p.cmap), true),
        utility: ranked(
            rows,
            |r| r.utility.as_ref().map(|u| u.macro_scores.f1),
            false,
        ),
        practicality: ranked(rows, |r| r.practicality, false),
    }
}

/// Builds the trade-off table: normalizes each practicality metric across
/// the methods that report it, fuses components under the configured
/// weights, sorts rows by method name and ranks every dimension.
pub fn assemble(
    settings: &EvaluationSettings,
    methods: Vec<(String, MethodMetrics)>,
) -> Result<TradeoffTable> {
    settings.validate()?;
    if methods.is_empty() {
        return Err(Error::NoMethods);
    }
    let mut seen = BTreeMap::new();
    for (name, _) in &methods {
        if seen.insert(name.clone(), ()).is_some() {
            return Err(Error::DuplicateMethod { name: name.clone() });
        }
    }

    let mut rows: Vec<MethodReport> = methods
        .into_iter()
        .map(|(method_name, m)| MethodReport {
            method_name,
            privacy: m.privacy,
            utility: m.utility,
            throughput_fps: m.throughput_fps,
            robustness_count: m.robustness_count,
            intelligibility_mmd: m.intelligibility_mmd,
            practicality_components: None,
            practicality: None,
        })
        .collect();
    rows.sort_by(|a, b| a.method_name.cmp(&b.method_name));
    for row in &rows {
        row.validate()?;
    }

    // Each metric is normalized over exactly the methods reporting it.
    let collect = |f: &dyn Fn(&MethodReport) -> Option<f64>| -> BTreeMap<String, f64> {
        rows.iter()
            .filter_map(|r| f(r).map(|v| (r.method_name.clone(), v)))
            .collect()
    };
    let fps_raw = collect(&|r| r.throughput_fps);
    let robustness_raw = collect(&|r| r.robustness_count.map(|c| c as f64));
    let mmd_raw = collect(&|r| r.intelligibility_mmd);
    let normalize = |raw: &BTreeMap<String, f64>, invert: bool| -> Result<BTreeMap<String, f64>> {
        if raw.is_empty() {
            Ok(BTreeMap::new())
        } else {
            normalize_invert(raw, invert)
        }
    };
    let fps_n = normalize(&fps_raw, false)?;
    let robustness_n = normalize(&robustness_raw, true)?;
    let mmd_n = normalize(&mmd_raw, true)?;

    for row in &mut rows {
        let name = row.method_name.as_str();
        if let (Some(&t), Some(&r), Some(&i)) =
            (fps_n.get(name), robustness_n.get(name), mmd_n.get(name))
        {
            let components = PracticalityComponents {
                robustness: r,
                intelligibility: i,
                throughput: t,
            };
            row.practicality = Some(fuse_components(&components, &settings.weights));
            row.practicality_components = Some(components);
        }
    }

    let rankings = compute_rankings(&rows);
    Ok(TradeoffTable {
        settings: *settings,
        rows,
        rankings,
    })
}

/// What-if re-weighting: refuses invalid weights, refuses nothing else.
/// Fuses the stored normalized components under `w`, recomputes only the
/// practicality ranking and echoes the new weights into the settings;
/// privacy and utility stay untouched.
pub fn rerank(table: &TradeoffTable, w: &WeightVector) -> Result<TradeoffTable> {
    w.validate()?;
    let mut out = table.clone();
    out.settings.weights = *w;
    for row in &mut out.rows {
        row.practicality = row
            .practicality_components
            .as_ref()
            .map(|c| fuse_components(c, w));
    }
    out.rankings.practicality = ranked(&out.rows, |r| r.practicality, false);
    Ok(out)
}
