//! Zone 3: revising the inherited policy and drafting a new one.
//!
//! The player composes an ordered list of library elements. After every edit
//! the composition is checked against the scenario's validation rules and the
//! outcome of zones 1 and 2, producing a [`GapReport`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ids::{ElementId, FrameworkId, RiskId, RuleId};
use crate::matching::{matched_frameworks, MatchState};
use crate::maze::MazeState;
use crate::scenario::{
    Category, FrameworkSource, PolicyElement, PolicyZone, RuleKind, Scenario, ValidationRule,
    ZoneKind,
};

/// Rule id used for gaps raised by flawed elements left in the policy.
pub const FLAW_RULE: &str = "flaw_retained";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub selected: Vec<ElementId>,
    pub submitted: bool,
    pub result: Option<PolicyResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PolicyEdit {
    Add { element: ElementId, position: usize },
    Remove { element: ElementId },
    Reorder { element: ElementId, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("element {0} is already in the policy")]
    DuplicateAdd(ElementId),
    #[error("element {0} is not in the policy")]
    NotSelected(ElementId),
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
    #[error("position {position} out of bounds for a policy of {len} elements")]
    PositionOutOfBounds { position: usize, len: usize },
    #[error("zone already submitted")]
    AlreadySubmitted,
    #[error("zones 1 and 2 must be submitted before the policy can be evaluated")]
    ZonesNotComplete,
}

impl PolicyError {
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::DuplicateAdd(_) => "duplicate-add",
            PolicyError::NotSelected(_) => "not-selected",
            PolicyError::UnknownElement(_) => "unknown-element",
            PolicyError::PositionOutOfBounds { .. } => "position-out-of-bounds",
            PolicyError::AlreadySubmitted => "zone-already-submitted",
            PolicyError::ZonesNotComplete => "zones-not-complete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    Completeness,
    RiskCoverage,
    FrameworkAlignment,
    Consistency,
    FlawRetained,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub rule_id: RuleId,
    pub kind: GapKind,
    pub message: String,
    /// Offending category, risk, framework or element ids.
    pub targets: Vec<String>,
    pub blocking: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub complete: bool,
}

impl GapReport {
    fn new(mut gaps: Vec<Gap>) -> Self {
        gaps.sort_by(|a, b| {
            (a.kind, &a.targets, &a.rule_id).cmp(&(b.kind, &b.targets, &b.rule_id))
        });
        let complete = !gaps.iter().any(|g| g.blocking);
        GapReport { gaps, complete }
    }

    pub fn blocking(&self) -> usize {
        self.gaps.iter().filter(|g| g.blocking).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub zone_score: f64,
    pub passed: bool,
    /// Rule instances checked (one per required category, thresholded risk, ...).
    pub total_instances: usize,
    pub report: GapReport,
}

impl PolicyState {
    pub fn new(zone: &PolicyZone) -> Self {
        Self {
            selected: zone.existing_policy.clone(),
            submitted: false,
            result: None,
        }
    }
}

pub fn edit_policy(
    state: &PolicyState,
    edit: &PolicyEdit,
    zone: &PolicyZone,
) -> Result<PolicyState, PolicyError> {
    if state.submitted {
        return Err(PolicyError::AlreadySubmitted);
    }
    let mut next = state.clone();
    let len = next.selected.len();
    let index_of = |id: &ElementId| next.selected.iter().position(|e| e == id);
    match edit {
        PolicyEdit::Add { element, position } => {
            if zone.element(element).is_none() {
                return Err(PolicyError::UnknownElement(element.clone()));
            }
            if index_of(element).is_some() {
                return Err(PolicyError::DuplicateAdd(element.clone()));
            }
            if *position > len {
                return Err(PolicyError::PositionOutOfBounds {
                    position: *position,
                    len,
                });
            }
            next.selected.insert(*position, element.clone());
        }
        PolicyEdit::Remove { element } => {
            let i = index_of(element).ok_or_else(|| PolicyError::NotSelected(element.clone()))?;
            next.selected.remove(i);
        }
        PolicyEdit::Reorder { element, position } => {
            let i = index_of(element).ok_or_else(|| PolicyError::NotSelected(element.clone()))?;
            if *position >= len {
                return Err(PolicyError::PositionOutOfBounds {
                    position: *position,
                    len,
                });
            }
            let id = next.selected.remove(i);
            next.selected.insert(*position, id);
        }
    }
    Ok(next)
}

/// Gaps plus the number of rule instances that were checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assessment {
    pub report: GapReport,
    pub total_instances: usize,
}

/// Zone 1 and 2 outcomes the policy rules depend on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorZones<'a> {
    /// True risks the player flagged in zone 1.
    pub identified: BTreeSet<&'a RiskId>,
    /// Frameworks the player placed correctly in zone 2.
    pub matched: BTreeSet<&'a FrameworkId>,
}

impl<'a> PriorZones<'a> {
    pub fn from_states(
        maze: &'a MazeState,
        matching: &'a MatchState,
        scenario: &'a Scenario,
    ) -> Result<Self, PolicyError> {
        if !maze.submitted || !matching.submitted {
            return Err(PolicyError::ZonesNotComplete);
        }
        Ok(Self {
            identified: maze.identified(&scenario.maze),
            matched: matched_frameworks(matching, &scenario.matching),
        })
    }
}

/// Checks a composition against every rule. Order of `selected` does not matter.
pub fn assess(selected: &[ElementId], prior: &PriorZones<'_>, scenario: &Scenario) -> Assessment {
    let zone = &scenario.policy;
    let chosen: Vec<&PolicyElement> = selected.iter().filter_map(|id| zone.element(id)).collect();
    let mut gaps = Vec::new();
    let mut total = 0usize;

    for rule in &zone.rules {
        total += match rule.kind {
            RuleKind::Completeness => completeness(rule, &chosen, &mut gaps),
            RuleKind::RiskCoverage => risk_coverage(rule, &chosen, prior, scenario, &mut gaps),
            RuleKind::FrameworkAlignment => {
                framework_alignment(rule, &chosen, prior, scenario, &mut gaps)
            }
            RuleKind::Consistency => consistency(rule, &chosen, zone, &mut gaps),
        };
    }

    let flawed_total = zone.elements.iter().filter(|e| e.is_flawed).count();
    total += flawed_total;
    for e in chosen.iter().filter(|e| e.is_flawed) {
        gaps.push(Gap {
            rule_id: RuleId::new(FLAW_RULE),
            kind: GapKind::FlawRetained,
            message: format!(
                "\"{}\" is a weak statement carried over from the old policy",
                e.text
            ),
            targets: vec![e.id.to_string()],
            blocking: true,
        });
    }

    Assessment {
        report: GapReport::new(gaps),
        total_instances: total,
    }
}

fn completeness(rule: &ValidationRule, chosen: &[&PolicyElement], gaps: &mut Vec<Gap>) -> usize {
    let required = rule.required_categories();
    for cat in &required {
        if !chosen.iter().any(|e| e.category == *cat) {
            gaps.push(Gap {
                rule_id: rule.id.clone(),
                kind: GapKind::Completeness,
                message: format!("the policy has no {} statement", category_label(*cat)),
                targets: vec![cat.as_str().to_string()],
                blocking: true,
            });
        }
    }
    required.len()
}

fn category_label(cat: Category) -> &'static str {
    match cat {
        Category::Scope => "scope",
        Category::RolesResponsibilities => "roles and responsibilities",
        Category::Compliance => "compliance requirements",
        Category::Enforcement => "enforcement",
        Category::Other => "other",
    }
}

fn risk_coverage(
    rule: &ValidationRule,
    chosen: &[&PolicyElement],
    prior: &PriorZones<'_>,
    scenario: &Scenario,
    gaps: &mut Vec<Gap>,
) -> usize {
    let threshold = rule
        .params
        .severity_threshold
        .unwrap_or(scenario.risk_threshold);
    let covered: BTreeSet<&RiskId> = chosen.iter().flat_map(|e| &e.covers_risks).collect();
    let mut total = 0;
    for id in &prior.identified {
        let Some(risk) = scenario.maze.risk(id) else {
            continue;
        };
        if risk.severity() < threshold {
            continue;
        }
        total += 1;
        if !covered.contains(id) {
            gaps.push(Gap {
                rule_id: rule.id.clone(),
                kind: GapKind::RiskCoverage,
                message: format!(
                    "no statement addresses the risk \"{}\" (severity {})",
                    risk.title,
                    risk.severity()
                ),
                targets: vec![id.to_string()],
                blocking: true,
            });
        }
    }
    total
}

fn required_frameworks<'a>(
    source: FrameworkSource,
    prior: &PriorZones<'a>,
    scenario: &'a Scenario,
) -> BTreeSet<&'a FrameworkId> {
    match source {
        FrameworkSource::AnswerKeys => scenario
            .matching
            .controls
            .iter()
            .flat_map(|c| &c.answer_key)
            .collect(),
        FrameworkSource::Matched => prior.matched.clone(),
    }
}

fn framework_alignment(
    rule: &ValidationRule,
    chosen: &[&PolicyElement],
    prior: &PriorZones<'_>,
    scenario: &Scenario,
    gaps: &mut Vec<Gap>,
) -> usize {
    let required = required_frameworks(rule.framework_source(), prior, scenario);
    let referenced: BTreeSet<&FrameworkId> = chosen
        .iter()
        .flat_map(|e| &e.references_frameworks)
        .collect();
    for f in &required {
        if !referenced.contains(f) {
            let name = scenario
                .matching
                .framework(f)
                .map_or(f.as_str(), |fw| fw.name.as_str());
            gaps.push(Gap {
                rule_id: rule.id.clone(),
                kind: GapKind::FrameworkAlignment,
                message: format!("no statement references {name}"),
                targets: vec![f.to_string()],
                blocking: true,
            });
        }
    }
    required.len()
}

/// Unordered contradiction pairs in the library, each as `(smaller, larger)`.
pub fn contradiction_pairs(zone: &PolicyZone) -> BTreeSet<(&ElementId, &ElementId)> {
    zone.elements
        .iter()
        .flat_map(|e| {
            e.contradicts
                .iter()
                .map(move |o| if &e.id < o { (&e.id, o) } else { (o, &e.id) })
        })
        .collect()
}

fn consistency(
    rule: &ValidationRule,
    chosen: &[&PolicyElement],
    zone: &PolicyZone,
    gaps: &mut Vec<Gap>,
) -> usize {
    let pairs = contradiction_pairs(zone);
    let ids: BTreeSet<&ElementId> = chosen.iter().map(|e| &e.id).collect();
    for (a, b) in &pairs {
        if ids.contains(a) && ids.contains(b) {
            gaps.push(Gap {
                rule_id: rule.id.clone(),
                kind: GapKind::Consistency,
                message: format!("\"{a}\" and \"{b}\" contradict each other"),
                targets: vec![a.to_string(), b.to_string()],
                blocking: true,
            });
        }
    }
    pairs.len()
}

pub fn evaluate_policy(
    state: &PolicyState,
    maze: &MazeState,
    matching: &MatchState,
    scenario: &Scenario,
) -> Result<GapReport, PolicyError> {
    let prior = PriorZones::from_states(maze, matching, scenario)?;
    Ok(assess(&state.selected, &prior, scenario).report)
}

/// Share of rule instances satisfied; a policy with no instances scores 1.
pub fn instance_score(assessment: &Assessment) -> f64 {
    let total = assessment.total_instances;
    if total == 0 {
        return 1.0;
    }
    let failed = assessment.report.blocking().min(total);
    (total - failed) as f64 / total as f64
}

pub fn submit_policy(
    state: &PolicyState,
    maze: &MazeState,
    matching: &MatchState,
    scenario: &Scenario,
) -> Result<(PolicyState, PolicyResult), PolicyError> {
    if state.submitted {
        return Err(PolicyError::AlreadySubmitted);
    }
    let prior = PriorZones::from_states(maze, matching, scenario)?;
    let assessment = assess(&state.selected, &prior, scenario);
    let zone_score = instance_score(&assessment);
    let result = PolicyResult {
        zone_score,
        passed: assessment.report.complete
            && zone_score >= scenario.pass_threshold(ZoneKind::Policy),
        total_instances: assessment.total_instances,
        report: assessment.report,
    };
    let mut next = state.clone();
    next.submitted = true;
    next.result = Some(result.clone());
    Ok((next, result))
}
