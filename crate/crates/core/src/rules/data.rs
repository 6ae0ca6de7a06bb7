use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{RuleError, RuleSpec};

const RULES_JSON: &str = include_str!("../../data/rules.json");
const ALIASES_JSON: &str = include_str!("../../data/aliases.json");
const VERBS_JSON: &str = include_str!("../../data/verbs.json");
const AUTOVARS_JSON: &str = include_str!("../../data/autovars.json");
const BUILTINS_JSON: &str = include_str!("../../data/builtins.json");

/// Tunable name lists from `rules.json`.
#[derive(Debug, Clone, Deserialize)]
pub struct RuleSettings {
    pub noun_allowlist: Vec<String>,
    pub password_patterns: Vec<String>,
    pub username_patterns: Vec<String>,
    pub state_changing_verbs: Vec<String>,
    pub loopback_names: Vec<String>,
    pub wmi_cmdlets: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AutomaticVariables {
    pub read_only: Vec<String>,
    pub writable: Vec<String>,
    pub other: Vec<String>,
    pub preference: Vec<String>,
}

#[derive(Deserialize)]
struct RulesFile {
    version: String,
    rules: Vec<RuleSpec>,
    settings: RuleSettings,
}

#[derive(Deserialize)]
struct AliasesFile {
    aliases: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct VerbsFile {
    verbs: Vec<String>,
}

#[derive(Deserialize)]
struct BuiltinsFile {
    cmdlets: Vec<String>,
    mandatory_parameters: BTreeMap<String, Vec<Vec<String>>>,
}

/// Rule specs plus every lookup table the checkers consult. Immutable once
/// built.
#[derive(Debug, Clone)]
pub struct RuleSet {
    version: String,
    rules: Vec<RuleSpec>,
    pub settings: RuleSettings,
    pub automatic: AutomaticVariables,
    aliases: HashMap<String, String>,
    verbs: HashSet<String>,
    builtins: HashMap<String, String>,
    mandatory: HashMap<String, Vec<Vec<String>>>,
    assignable_autos: HashSet<String>,
    all_autos: HashSet<String>,
}

fn load<T: DeserializeOwned>(file: &str, text: &str) -> Result<T, RuleError> {
    serde_json::from_str(text).map_err(|source| RuleError::Json {
        file: file.to_owned(),
        source,
    })
}

fn lower_set<'a>(items: impl IntoIterator<Item = &'a String>) -> HashSet<String> {
    items.into_iter().map(|s| s.to_lowercase()).collect()
}

impl RuleSet {
    /// The tables compiled into the crate.
    pub fn embedded() -> &'static RuleSet {
        static SET: OnceLock<RuleSet> = OnceLock::new();
        SET.get_or_init(|| {
            Self::from_json(
                RULES_JSON,
                ALIASES_JSON,
                VERBS_JSON,
                AUTOVARS_JSON,
                BUILTINS_JSON,
            )
            .expect("embedded rule tables are valid")
        })
    }

    /// Loads the five tables from `dir`.
    pub fn from_dir(dir: &Path) -> Result<RuleSet, RuleError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| RuleError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        Self::from_json(
            &read("rules.json")?,
            &read("aliases.json")?,
            &read("verbs.json")?,
            &read("autovars.json")?,
            &read("builtins.json")?,
        )
    }

    pub fn from_json(
        rules: &str,
        aliases: &str,
        verbs: &str,
        autovars: &str,
        builtins: &str,
    ) -> Result<RuleSet, RuleError> {
        let rules: RulesFile = load("rules.json", rules)?;
        let aliases: AliasesFile = load("aliases.json", aliases)?;
        let verbs: VerbsFile = load("verbs.json", verbs)?;
        let automatic: AutomaticVariables = load("autovars.json", autovars)?;
        let builtins: BuiltinsFile = load("builtins.json", builtins)?;

        let mut seen = HashSet::new();
        for r in &rules.rules {
            if !seen.insert(r.rule_id.as_str()) {
                return Err(RuleError::Invalid(format!("duplicate rule {}", r.rule_id)));
            }
            if r.severity > 2 {
                return Err(RuleError::Invalid(format!(
                    "rule {} has severity {}; 3 is reserved for parse failures",
                    r.rule_id, r.severity
                )));
            }
            if !super::checks::is_known(&r.rule_id) {
                return Err(RuleError::UnknownRule(r.rule_id.clone()));
            }
        }

        let assignable_autos = lower_set(automatic.read_only.iter().chain(&automatic.writable));
        let all_autos = lower_set(
            automatic
                .read_only
                .iter()
                .chain(&automatic.writable)
                .chain(&automatic.other)
                .chain(&automatic.preference),
        );
        Ok(RuleSet {
            version: rules.version,
            rules: rules.rules,
            settings: rules.settings,
            automatic,
            aliases: aliases
                .aliases
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v))
                .collect(),
            verbs: lower_set(&verbs.verbs),
            builtins: builtins
                .cmdlets
                .into_iter()
                .map(|c| (c.to_lowercase(), c))
                .collect(),
            mandatory: builtins
                .mandatory_parameters
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v))
                .collect(),
            assignable_autos,
            all_autos,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn rules(&self) -> &[RuleSpec] {
        &self.rules
    }

    pub fn rule(&self, rule_id: &str) -> Option<&RuleSpec> {
        self.index_of(rule_id).map(|i| &self.rules[i])
    }

    pub(crate) fn index_of(&self, rule_id: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.rule_id == rule_id)
    }

    /// Cmdlet an alias stands for.
    pub fn alias_target(&self, name: &str) -> Option<&str> {
        self.aliases.get(&name.to_lowercase()).map(String::as_str)
    }

    /// Resolves an alias, returning `name` unchanged otherwise.
    pub fn resolve<'a>(&'a self, name: &'a str) -> &'a str {
        self.alias_target(name).unwrap_or(name)
    }

    pub fn is_approved_verb(&self, verb: &str) -> bool {
        self.verbs.contains(&verb.to_lowercase())
    }

    pub fn builtin(&self, name: &str) -> Option<&str> {
        self.builtins.get(&name.to_lowercase()).map(String::as_str)
    }

    /// Mandatory parameter names per parameter set.
    pub fn mandatory_sets(&self, cmdlet: &str) -> Option<&[Vec<String>]> {
        self.mandatory
            .get(&cmdlet.to_lowercase())
            .map(Vec::as_slice)
    }

    /// Automatic variables that must not be assigned.
    pub fn is_assignable_automatic(&self, name: &str) -> bool {
        self.assignable_autos.contains(&name.to_lowercase())
    }

    /// Any automatic or preference variable.
    pub fn is_automatic(&self, name: &str) -> bool {
        self.all_autos.contains(&name.to_lowercase())
    }
}
