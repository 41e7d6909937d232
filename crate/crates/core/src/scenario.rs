//! Authored content model.
//!
//! A scenario travels as a [`ScenarioDocument`] (zones as an ordered list,
//! exactly as written in the scenario file) and is resolved into a
//! [`Scenario`] by [`Scenario::from_document`], which checks every structural
//! invariant and cross-reference. Graph reachability and reference-solution
//! solvability are left to [`crate::lint`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ids::*;

/// Likelihood times impact on the 5x5 matrix, in `[1, 25]`.
pub fn severity(risk: &RiskCard) -> u8 {
    risk.likelihood * risk.impact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskCard {
    pub id: RiskId,
    pub title: String,
    pub description: String,
    pub likelihood: u8,
    pub impact: u8,
    /// `false` marks a distractor encounter.
    pub is_true_risk: bool,
}

impl RiskCard {
    pub fn severity(&self) -> u8 {
        severity(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeNode {
    pub id: NodeId,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encounter: Option<RiskId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeZone {
    pub risks: Vec<RiskCard>,
    pub nodes: Vec<MazeNode>,
    /// Directed `[from, to]` pairs.
    pub edges: Vec<(NodeId, NodeId)>,
    pub entry: NodeId,
    pub exit: NodeId,
}

impl MazeZone {
    pub fn has_edge(&self, from: &NodeId, to: &NodeId) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    pub fn successors<'a>(&'a self, from: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.edges
            .iter()
            .filter(move |(a, _)| a == from)
            .map(|(_, b)| b)
    }

    pub fn node(&self, id: &NodeId) -> Option<&MazeNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn risk(&self, id: &RiskId) -> Option<&RiskCard> {
        self.risks.iter().find(|r| &r.id == id)
    }

    /// Node hosting the given risk encounter.
    pub fn node_of(&self, risk: &RiskId) -> Option<&MazeNode> {
        self.nodes
            .iter()
            .find(|n| n.encounter.as_ref() == Some(risk))
    }

    pub fn true_risks(&self) -> impl Iterator<Item = &RiskCard> {
        self.risks.iter().filter(|r| r.is_true_risk)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Framework {
    pub id: FrameworkId,
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlItem {
    pub id: ControlId,
    pub text: String,
    /// More than one framework marks an overlap control.
    pub answer_key: BTreeSet<FrameworkId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingZone {
    pub frameworks: Vec<Framework>,
    pub controls: Vec<ControlItem>,
}

impl MatchingZone {
    pub fn control(&self, id: &ControlId) -> Option<&ControlItem> {
        self.controls.iter().find(|c| &c.id == id)
    }

    pub fn framework(&self, id: &FrameworkId) -> Option<&Framework> {
        self.frameworks.iter().find(|f| &f.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Scope,
    RolesResponsibilities,
    Compliance,
    Enforcement,
    Other,
}

impl Category {
    /// The four essential components a complete policy must contain.
    pub const ESSENTIAL: [Category; 4] = [
        Category::Scope,
        Category::RolesResponsibilities,
        Category::Compliance,
        Category::Enforcement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Scope => "scope",
            Category::RolesResponsibilities => "roles_responsibilities",
            Category::Compliance => "compliance",
            Category::Enforcement => "enforcement",
            Category::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyElement {
    pub id: ElementId,
    pub text: String,
    pub category: Category,
    #[serde(default)]
    pub covers_risks: BTreeSet<RiskId>,
    #[serde(default)]
    pub references_frameworks: BTreeSet<FrameworkId>,
    #[serde(default)]
    pub contradicts: BTreeSet<ElementId>,
    /// Planted defect for the revision task.
    #[serde(default)]
    pub is_flawed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Completeness,
    RiskCoverage,
    FrameworkAlignment,
    Consistency,
}

/// Which frameworks a policy has to reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameworkSource {
    /// Every framework that appears in at least one zone-2 answer key.
    #[default]
    AnswerKeys,
    /// Only frameworks the player correctly assigned to some control in zone 2.
    Matched,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_categories: Option<Vec<Category>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity_threshold: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FrameworkSource>,
}

impl RuleParams {
    fn is_empty(&self) -> bool {
        *self == RuleParams::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationRule {
    pub id: RuleId,
    pub kind: RuleKind,
    #[serde(default, skip_serializing_if = "RuleParams::is_empty")]
    pub params: RuleParams,
}

impl ValidationRule {
    /// Categories a completeness rule requires; the four essentials unless overridden.
    pub fn required_categories(&self) -> Vec<Category> {
        match &self.params.required_categories {
            Some(cats) => {
                let mut cats = cats.clone();
                cats.sort();
                cats.dedup();
                cats
            }
            None => Category::ESSENTIAL.to_vec(),
        }
    }

    pub fn framework_source(&self) -> FrameworkSource {
        self.params.source.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyZone {
    pub elements: Vec<PolicyElement>,
    /// Starting document for the revision task.
    pub existing_policy: Vec<ElementId>,
    pub rules: Vec<ValidationRule>,
}

impl PolicyZone {
    pub fn element(&self, id: &ElementId) -> Option<&PolicyElement> {
        self.elements.iter().find(|e| &e.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZoneSpec {
    Maze(MazeZone),
    Matching(MatchingZone),
    Policy(PolicyZone),
}

impl ZoneSpec {
    fn kind(&self) -> ZoneKind {
        match self {
            ZoneSpec::Maze(_) => ZoneKind::Maze,
            ZoneSpec::Matching(_) => ZoneKind::Matching,
            ZoneSpec::Policy(_) => ZoneKind::Policy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    Maze,
    Matching,
    Policy,
}

impl ZoneKind {
    pub const ALL: [ZoneKind; 3] = [ZoneKind::Maze, ZoneKind::Matching, ZoneKind::Policy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ZoneKind::Maze => "maze",
            ZoneKind::Matching => "matching",
            ZoneKind::Policy => "policy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSolution {
    /// Full walk, starting at the entry node.
    pub path: Vec<NodeId>,
    pub flags: BTreeMap<RiskId, bool>,
    pub ranking: Vec<RiskId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingSolution {
    pub assignments: BTreeMap<ControlId, BTreeSet<FrameworkId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySolution {
    pub selected: Vec<ElementId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSolutions {
    pub maze: MazeSolution,
    pub matching: MatchingSolution,
    pub policy: PolicySolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintSet {
    pub puzzle: PuzzleId,
    pub zone: ZoneKind,
    /// Revealed strictly in order.
    pub tiers: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingWeights {
    pub ranking: f64,
    pub precision: f64,
    pub recall: f64,
}

impl Default for RankingWeights {
    fn default() -> Self {
        Self {
            ranking: 0.5,
            precision: 0.25,
            recall: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scoring {
    pub ranking_weights: RankingWeights,
    /// Deducted from a zone's contribution per hint revealed in that zone.
    pub hint_penalty: f64,
    pub zone_weights: [f64; 3],
}

impl Default for Scoring {
    fn default() -> Self {
        Self {
            ranking_weights: RankingWeights::default(),
            hint_penalty: 0.05,
            zone_weights: [1.0, 1.0, 1.0],
        }
    }
}

fn default_risk_threshold() -> u8 {
    15
}

/// Scenario as written on disk: zones are an ordered list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub id: ScenarioId,
    pub title: String,
    pub company_profile: String,
    pub time_limit: u64,
    #[serde(default = "default_risk_threshold")]
    pub risk_threshold: u8,
    pub zone_pass_thresholds: [f64; 3],
    #[serde(default)]
    pub scoring: Scoring,
    pub zones: Vec<ZoneSpec>,
    pub reference_solutions: ReferenceSolutions,
    #[serde(default)]
    pub hints: Vec<HintSet>,
}

/// A fully resolved scenario. Construct through [`Scenario::from_document`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDocument", into = "ScenarioDocument")]
pub struct Scenario {
    pub id: ScenarioId,
    pub title: String,
    pub company_profile: String,
    pub time_limit: u64,
    pub risk_threshold: u8,
    pub zone_pass_thresholds: [f64; 3],
    pub scoring: Scoring,
    pub maze: MazeZone,
    pub matching: MatchingZone,
    pub policy: PolicyZone,
    pub reference_solutions: ReferenceSolutions,
    pub hints: Vec<HintSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("dangling reference at {path}: unknown {kind} \"{id}\"")]
    DanglingReference {
        path: String,
        kind: &'static str,
        id: String,
    },
}

impl ScenarioError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    fn dangling(path: impl Into<String>, kind: &'static str, id: &str) -> Self {
        ScenarioError::DanglingReference {
            path: path.into(),
            kind,
            id: id.to_string(),
        }
    }
}

impl TryFrom<ScenarioDocument> for Scenario {
    type Error = ScenarioError;

    fn try_from(doc: ScenarioDocument) -> Result<Self, Self::Error> {
        Scenario::from_document(doc)
    }
}

impl From<Scenario> for ScenarioDocument {
    fn from(s: Scenario) -> Self {
        s.into_document()
    }
}

impl Scenario {
    pub fn from_document(doc: ScenarioDocument) -> Result<Scenario, ScenarioError> {
        let ScenarioDocument {
            id,
            title,
            company_profile,
            time_limit,
            risk_threshold,
            zone_pass_thresholds,
            scoring,
            zones,
            reference_solutions,
            hints,
        } = doc;

        if zones.len() != 3 {
            return Err(ScenarioError::schema(
                "scenario.zones",
                format!("expected exactly 3 zones, found {}", zones.len()),
            ));
        }
        let mut zones = zones.into_iter();
        let (maze, matching, policy) = match (zones.next(), zones.next(), zones.next()) {
            (Some(ZoneSpec::Maze(m)), Some(ZoneSpec::Matching(c)), Some(ZoneSpec::Policy(p))) => {
                (m, c, p)
            }
            (a, b, c) => {
                let found: Vec<&str> = [a, b, c]
                    .iter()
                    .flatten()
                    .map(|z| z.kind().as_str())
                    .collect();
                return Err(ScenarioError::schema(
                    "scenario.zones",
                    format!(
                        "zones must be ordered maze, matching, policy (found {})",
                        found.join(", ")
                    ),
                ));
            }
        };

        let scenario = Scenario {
            id,
            title,
            company_profile,
            time_limit,
            risk_threshold,
            zone_pass_thresholds,
            scoring,
            maze,
            matching,
            policy,
            reference_solutions,
            hints,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn into_document(self) -> ScenarioDocument {
        ScenarioDocument {
            id: self.id,
            title: self.title,
            company_profile: self.company_profile,
            time_limit: self.time_limit,
            risk_threshold: self.risk_threshold,
            zone_pass_thresholds: self.zone_pass_thresholds,
            scoring: self.scoring,
            zones: alloc::vec![
                ZoneSpec::Maze(self.maze),
                ZoneSpec::Matching(self.matching),
                ZoneSpec::Policy(self.policy),
            ],
            reference_solutions: self.reference_solutions,
            hints: self.hints,
        }
    }

    pub fn to_document(&self) -> ScenarioDocument {
        self.clone().into_document()
    }

    pub fn hint_set(&self, puzzle: &PuzzleId) -> Option<&HintSet> {
        self.hints.iter().find(|h| &h.puzzle == puzzle)
    }

    pub fn pass_threshold(&self, zone: ZoneKind) -> f64 {
        self.zone_pass_thresholds[zone.index()]
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let s = self;
        check_slug("scenario.id", s.id.as_str())?;
        nonempty("scenario.title", &s.title)?;
        if s.time_limit == 0 {
            return Err(ScenarioError::schema(
                "scenario.time_limit",
                "time_limit must be a positive number of seconds",
            ));
        }
        check_severity("scenario.risk_threshold", s.risk_threshold)?;
        for (i, t) in s.zone_pass_thresholds.iter().enumerate() {
            check_fraction(&format!("scenario.zone_pass_thresholds[{i}]"), *t)?;
        }
        validate_scoring(&s.scoring)?;
        validate_maze(&s.maze)?;
        validate_matching(&s.matching)?;
        validate_policy(&s.policy, &s.maze, &s.matching)?;
        validate_solutions(s)?;
        validate_hints(&s.hints)?;
        Ok(())
    }
}

fn nonempty(path: &str, text: &str) -> Result<(), ScenarioError> {
    if text.trim().is_empty() {
        return Err(ScenarioError::schema(path, "must not be empty"));
    }
    Ok(())
}

fn check_slug(path: &str, id: &str) -> Result<(), ScenarioError> {
    if !is_slug(id) {
        return Err(ScenarioError::schema(
            path,
            format!("id \"{id}\" is not a lowercase slug [a-z0-9_-]+"),
        ));
    }
    Ok(())
}

fn check_fraction(path: &str, v: f64) -> Result<(), ScenarioError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ScenarioError::schema(
            path,
            format!("{v} is outside [0, 1]"),
        ));
    }
    Ok(())
}

fn check_severity(path: &str, v: u8) -> Result<(), ScenarioError> {
    if !(1..=25).contains(&v) {
        return Err(ScenarioError::schema(
            path,
            format!("{v} is outside [1, 25]"),
        ));
    }
    Ok(())
}

fn check_unique<'a>(
    path: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<BTreeSet<&'a str>, ScenarioError> {
    let mut seen = BTreeSet::new();
    for (i, id) in ids.enumerate() {
        check_slug(&format!("{path}[{i}].id"), id)?;
        if !seen.insert(id) {
            return Err(ScenarioError::schema(
                format!("{path}[{i}].id"),
                format!("duplicate id \"{id}\""),
            ));
        }
    }
    Ok(seen)
}

fn resolve(
    known: &BTreeSet<&str>,
    path: impl Into<String>,
    kind: &'static str,
    id: &str,
) -> Result<(), ScenarioError> {
    if known.contains(id) {
        Ok(())
    } else {
        Err(ScenarioError::dangling(path, kind, id))
    }
}

fn validate_scoring(scoring: &Scoring) -> Result<(), ScenarioError> {
    let w = scoring.ranking_weights;
    for (name, v) in [
        ("ranking", w.ranking),
        ("precision", w.precision),
        ("recall", w.recall),
    ] {
        check_fraction(&format!("scenario.scoring.ranking_weights.{name}"), v)?;
    }
    let total = w.ranking + w.precision + w.recall;
    if (total - 1.0).abs() > 1e-9 {
        return Err(ScenarioError::schema(
            "scenario.scoring.ranking_weights",
            format!("weights must sum to 1, found {total}"),
        ));
    }
    check_fraction("scenario.scoring.hint_penalty", scoring.hint_penalty)?;
    let mut sum = 0.0;
    for (i, z) in scoring.zone_weights.iter().enumerate() {
        if !z.is_finite() || *z < 0.0 {
            return Err(ScenarioError::schema(
                format!("scenario.scoring.zone_weights[{i}]"),
                "zone weights must be non-negative",
            ));
        }
        sum += z;
    }
    if sum <= 0.0 {
        return Err(ScenarioError::schema(
            "scenario.scoring.zone_weights",
            "at least one zone weight must be positive",
        ));
    }
    Ok(())
}

const MAZE: &str = "scenario.zones[0]";
const MATCHING: &str = "scenario.zones[1]";
const POLICY: &str = "scenario.zones[2]";

fn validate_maze(maze: &MazeZone) -> Result<(), ScenarioError> {
    let risk_ids = check_unique(
        &format!("{MAZE}.risks"),
        maze.risks.iter().map(|r| r.id.as_str()),
    )?;
    for (i, r) in maze.risks.iter().enumerate() {
        let path = format!("{MAZE}.risks[{i}]");
        nonempty(&format!("{path}.title"), &r.title)?;
        for (field, v) in [("likelihood", r.likelihood), ("impact", r.impact)] {
            if !(1..=5).contains(&v) {
                return Err(ScenarioError::schema(
                    format!("{path}.{field}"),
                    format!("{v} is outside 1..=5"),
                ));
            }
        }
    }

    let node_ids = check_unique(
        &format!("{MAZE}.nodes"),
        maze.nodes.iter().map(|n| n.id.as_str()),
    )?;
    let mut placed: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, n) in maze.nodes.iter().enumerate() {
        if let Some(risk) = &n.encounter {
            resolve(
                &risk_ids,
                format!("{MAZE}.nodes[{i}].encounter"),
                "risk",
                risk.as_str(),
            )?;
            *placed.entry(risk.as_str()).or_default() += 1;
        }
    }
    for r in &maze.risks {
        match placed.get(r.id.as_str()).copied().unwrap_or(0) {
            1 => {}
            0 => {
                return Err(ScenarioError::schema(
                    format!("{MAZE}.risks"),
                    format!("risk \"{}\" is not placed on any maze node", r.id),
                ))
            }
            n => {
                return Err(ScenarioError::schema(
                    format!("{MAZE}.nodes"),
                    format!("risk \"{}\" is placed on {n} nodes", r.id),
                ))
            }
        }
    }
    for (i, (from, to)) in maze.edges.iter().enumerate() {
        resolve(
            &node_ids,
            format!("{MAZE}.edges[{i}][0]"),
            "node",
            from.as_str(),
        )?;
        resolve(
            &node_ids,
            format!("{MAZE}.edges[{i}][1]"),
            "node",
            to.as_str(),
        )?;
    }
    resolve(
        &node_ids,
        format!("{MAZE}.entry"),
        "node",
        maze.entry.as_str(),
    )?;
    resolve(
        &node_ids,
        format!("{MAZE}.exit"),
        "node",
        maze.exit.as_str(),
    )?;
    if maze.entry == maze.exit {
        return Err(ScenarioError::schema(
            format!("{MAZE}.exit"),
            "entry and exit must be different nodes",
        ));
    }
    Ok(())
}

fn validate_matching(matching: &MatchingZone) -> Result<(), ScenarioError> {
    let fw_ids = check_unique(
        &format!("{MATCHING}.frameworks"),
        matching.frameworks.iter().map(|f| f.id.as_str()),
    )?;
    check_unique(
        &format!("{MATCHING}.controls"),
        matching.controls.iter().map(|c| c.id.as_str()),
    )?;
    for (i, c) in matching.controls.iter().enumerate() {
        let path = format!("{MATCHING}.controls[{i}].answer_key");
        if c.answer_key.is_empty() {
            return Err(ScenarioError::schema(path, "answer_key must not be empty"));
        }
        for f in &c.answer_key {
            resolve(&fw_ids, path.clone(), "framework", f.as_str())?;
        }
    }
    Ok(())
}

fn validate_policy(
    policy: &PolicyZone,
    maze: &MazeZone,
    matching: &MatchingZone,
) -> Result<(), ScenarioError> {
    let risk_ids: BTreeSet<&str> = maze.risks.iter().map(|r| r.id.as_str()).collect();
    let fw_ids: BTreeSet<&str> = matching.frameworks.iter().map(|f| f.id.as_str()).collect();
    let el_ids = check_unique(
        &format!("{POLICY}.elements"),
        policy.elements.iter().map(|e| e.id.as_str()),
    )?;
    for (i, e) in policy.elements.iter().enumerate() {
        let path = format!("{POLICY}.elements[{i}]");
        nonempty(&format!("{path}.text"), &e.text)?;
        for r in &e.covers_risks {
            resolve(
                &risk_ids,
                format!("{path}.covers_risks"),
                "risk",
                r.as_str(),
            )?;
        }
        for f in &e.references_frameworks {
            resolve(
                &fw_ids,
                format!("{path}.references_frameworks"),
                "framework",
                f.as_str(),
            )?;
        }
        for c in &e.contradicts {
            resolve(
                &el_ids,
                format!("{path}.contradicts"),
                "element",
                c.as_str(),
            )?;
            if c == &e.id {
                return Err(ScenarioError::schema(
                    format!("{path}.contradicts"),
                    "an element cannot contradict itself",
                ));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for (i, id) in policy.existing_policy.iter().enumerate() {
        let path = format!("{POLICY}.existing_policy[{i}]");
        resolve(&el_ids, path.clone(), "element", id.as_str())?;
        if !seen.insert(id) {
            return Err(ScenarioError::schema(
                path,
                format!("duplicate element \"{id}\""),
            ));
        }
    }

    let mut rule_ids = BTreeSet::new();
    for (i, rule) in policy.rules.iter().enumerate() {
        let path = format!("{POLICY}.rules[{i}]");
        check_slug(&format!("{path}.id"), rule.id.as_str())?;
        if !rule_ids.insert(rule.id.as_str()) {
            return Err(ScenarioError::schema(
                format!("{path}.id"),
                format!("duplicate id \"{}\"", rule.id),
            ));
        }
        let p = &rule.params;
        let misplaced = match rule.kind {
            RuleKind::Completeness => p.severity_threshold.is_some() || p.source.is_some(),
            RuleKind::RiskCoverage => p.required_categories.is_some() || p.source.is_some(),
            RuleKind::FrameworkAlignment => {
                p.required_categories.is_some() || p.severity_threshold.is_some()
            }
            RuleKind::Consistency => !p.is_empty(),
        };
        if misplaced {
            return Err(ScenarioError::schema(
                format!("{path}.params"),
                "parameter not valid for this rule kind",
            ));
        }
        if let Some(cats) = &p.required_categories {
            if cats.is_empty() {
                return Err(ScenarioError::schema(
                    format!("{path}.params.required_categories"),
                    "must list at least one category",
                ));
            }
        }
        if let Some(t) = p.severity_threshold {
            check_severity(&format!("{path}.params.severity_threshold"), t)?;
        }
    }
    Ok(())
}

fn validate_solutions(s: &Scenario) -> Result<(), ScenarioError> {
    const ROOT: &str = "scenario.reference_solutions";
    let node_ids: BTreeSet<&str> = s.maze.nodes.iter().map(|n| n.id.as_str()).collect();
    let risk_ids: BTreeSet<&str> = s.maze.risks.iter().map(|r| r.id.as_str()).collect();
    let control_ids: BTreeSet<&str> = s.matching.controls.iter().map(|c| c.id.as_str()).collect();
    let fw_ids: BTreeSet<&str> = s
        .matching
        .frameworks
        .iter()
        .map(|f| f.id.as_str())
        .collect();
    let el_ids: BTreeSet<&str> = s.policy.elements.iter().map(|e| e.id.as_str()).collect();

    let maze = &s.reference_solutions.maze;
    if maze.path.first() != Some(&s.maze.entry) {
        return Err(ScenarioError::schema(
            format!("{ROOT}.maze.path"),
            "path must start at the entry node",
        ));
    }
    for (i, n) in maze.path.iter().enumerate() {
        resolve(
            &node_ids,
            format!("{ROOT}.maze.path[{i}]"),
            "node",
            n.as_str(),
        )?;
    }
    for r in maze.flags.keys() {
        resolve(&risk_ids, format!("{ROOT}.maze.flags"), "risk", r.as_str())?;
    }
    for (i, r) in maze.ranking.iter().enumerate() {
        resolve(
            &risk_ids,
            format!("{ROOT}.maze.ranking[{i}]"),
            "risk",
            r.as_str(),
        )?;
    }
    for (c, fws) in &s.reference_solutions.matching.assignments {
        resolve(
            &control_ids,
            format!("{ROOT}.matching.assignments"),
            "control",
            c.as_str(),
        )?;
        for f in fws {
            resolve(
                &fw_ids,
                format!("{ROOT}.matching.assignments.{c}"),
                "framework",
                f.as_str(),
            )?;
        }
    }
    let mut seen = BTreeSet::new();
    for (i, e) in s.reference_solutions.policy.selected.iter().enumerate() {
        let path = format!("{ROOT}.policy.selected[{i}]");
        resolve(&el_ids, path.clone(), "element", e.as_str())?;
        if !seen.insert(e) {
            return Err(ScenarioError::schema(
                path,
                format!("duplicate element \"{e}\""),
            ));
        }
    }
    Ok(())
}

fn validate_hints(hints: &[HintSet]) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for (i, h) in hints.iter().enumerate() {
        let path = format!("scenario.hints[{i}]");
        check_slug(&format!("{path}.puzzle"), h.puzzle.as_str())?;
        if !seen.insert(h.puzzle.as_str()) {
            return Err(ScenarioError::schema(
                format!("{path}.puzzle"),
                format!("duplicate puzzle \"{}\"", h.puzzle),
            ));
        }
        if h.tiers.is_empty() {
            return Err(ScenarioError::schema(
                format!("{path}.tiers"),
                "a puzzle needs at least one hint tier",
            ));
        }
    }
    Ok(())
}
