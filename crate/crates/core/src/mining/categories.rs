use thiserror::Error;

/// Reserved id for patterns no rule matches.
pub const OTHER_ID: &str = "ZZ";
pub const OTHER_LABEL: &str = "Other";

pub const DEFAULT_CATEGORY_RULES: &str = include_str!("../../data/error_categories.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategoryRuleError {
    #[error("line {line}: expected ID<TAB>Label<TAB>keywords")]
    BadLine { line: usize },
    #[error("line {line}: category ids are two uppercase letters, got {id:?}")]
    BadId { line: usize, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Rule {
    id: String,
    all_of: Vec<String>,
}

/// Keyword rules mapping a template pattern to an error category id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryRules {
    rules: Vec<Rule>,
    labels: Vec<(String, String)>,
}

impl Default for CategoryRules {
    fn default() -> Self {
        CategoryRules::parse(DEFAULT_CATEGORY_RULES).expect("bundled category rules are valid")
    }
}

impl CategoryRules {
    pub fn parse(text: &str) -> Result<Self, CategoryRuleError> {
        let mut rules = Vec::new();
        let mut labels: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(id), Some(label), Some(keys)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(CategoryRuleError::BadLine { line: line_no });
            };
            let id = id.trim();
            if id.len() != 2 || !id.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(CategoryRuleError::BadId {
                    line: line_no,
                    id: id.to_string(),
                });
            }
            let all_of: Vec<String> = keys
                .split('+')
                .map(|k| k.trim().to_lowercase())
                .filter(|k| !k.is_empty())
                .collect();
            if all_of.is_empty() {
                return Err(CategoryRuleError::BadLine { line: line_no });
            }
            if !labels.iter().any(|(l, _)| l == id) {
                labels.push((id.to_string(), label.trim().to_string()));
            }
            rules.push(Rule {
                id: id.to_string(),
                all_of,
            });
        }
        Ok(CategoryRules { rules, labels })
    }

    /// First matching rule's id, or [`OTHER_ID`].
    pub fn categorize(&self, pattern: &str) -> &str {
        let lower = pattern.to_lowercase();
        self.rules
            .iter()
            .find(|r| r.all_of.iter().all(|k| lower.contains(k.as_str())))
            .map_or(OTHER_ID, |r| r.id.as_str())
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        if id == OTHER_ID {
            return Some(OTHER_LABEL);
        }
        self.labels
            .iter()
            .find(|(i, _)| i == id)
            .map(|(_, l)| l.as_str())
    }

    /// Category ids in first-appearance order, without [`OTHER_ID`].
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|(i, _)| i.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let r = CategoryRules::default();
        assert_eq!(r.categorize("Out of memory: Killed process <pid>"), "BB");
        assert_eq!(r.categorize("cxi_core <m>: timeout waiting for <id>"), "AA");
        assert_eq!(r.categorize("all good here"), OTHER_ID);
        assert_eq!(r.label("BB"), Some("System: OOM"));
        assert_eq!(r.label(OTHER_ID), Some("Other"));
    }

    #[test]
    fn ordering_disambiguates_duplicates() {
        let r = CategoryRules::default();
        assert_eq!(r.categorize("rpc timed out after <n>s"), "AZ");
        assert_eq!(r.categorize("LustreError: <x> failed"), "AI");
        assert_eq!(r.categorize("Lustre: <x> reconnected"), "AR");
        assert_eq!(r.categorize("amdgpu <x>: VM_L2_PROTECTION_FAULT"), "AO");
    }

    #[test]
    fn bundled_ids_cover_the_table() {
        let rules = CategoryRules::default();
        let ids: Vec<&str> = rules.ids().collect();
        let expected = [
            "AA", "AB", "AC", "AD", "AE", "AF", "AH", "AI", "AJ", "AK", "AL", "AM", "AO", "AP",
            "AQ", "AR", "AS", "AT", "AU", "AV", "AW", "AX", "AY", "AZ", "BA", "BB",
        ];
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(sorted, expected);
    }

    #[test]
    fn bad_rules() {
        assert!(matches!(
            CategoryRules::parse("AA\tx"),
            Err(CategoryRuleError::BadLine { line: 1 })
        ));
        assert!(matches!(
            CategoryRules::parse("A1\tx\ty"),
            Err(CategoryRuleError::BadId { .. })
        ));
    }
}
