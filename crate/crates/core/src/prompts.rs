//! Persona prompt rendering and the registry of prompt variants.
//!
//! A prompt is assembled from one fragment per axis. Fragments are
//! templates with bracket placeholders (`[Gender]`, `[Age]`, `[Affect]`,
//! `[Topic]`) and belong either to the system prompt or to the opening user
//! message. Persona fragments are followed by a fixed framing sentence.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::PersonaFeatures;

pub const OPENING: &str = "Talk about whatever you like, just imagine you have met someone at a social event and you're getting to know each other.";

pub const PERSONA_FRAMING: &str = "You should not explicitly say that you have these characteristics, but your conversation should be typical of someone with these characteristics.";

pub const INFORMAL_FRAGMENT: &str = "Please try to use informal language, the way people talk casually.";
pub const NORMAL_PERSON_FRAGMENT: &str = "Please talk like a normal person holding a conversation.";
pub const LENGTH_FRAGMENT: &str = "Please say at most one or two sentences per turn.";
pub const DEMOGRAPHICS_FRAGMENT: &str = "Imagine that you are a [Gender] and [Age] years old.";
pub const AFFECT_FRAGMENT: &str = "You feel [Affect] feelings.";
pub const TOPIC_FRAGMENT: &str = "If it fits the conversation, you should talk about one of the following topics: [Topic].";

const PLACEHOLDERS: [&str; 4] = ["[Gender]", "[Age]", "[Affect]", "[Topic]"];

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("unknown prompt axis `{0}`")]
    UnknownAxis(String),
    #[error("axis `{axis}` has no variant `{id}`")]
    UnknownVariant { axis: String, id: String },
    #[error("no variant chosen for axis `{0}`")]
    MissingChoice(String),
    #[error("placeholder {placeholder} cannot be resolved in the {role} prompt")]
    UnresolvedPlaceholder { placeholder: String, role: FragmentRole },
    #[error("topic fragment is active but the persona has no topic phrase")]
    MissingTopic,
    #[error("axis `{axis}` declares variant `{id}` twice")]
    DuplicateVariant { axis: String, id: String },
    #[error("axis `{0}` has no empty (absent) variant")]
    NoAbsentVariant(String),
    #[error("axis `{0}` declared twice")]
    DuplicateAxis(String),
    #[error("prompt config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, PromptError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FragmentRole {
    #[default]
    System,
    Opening,
}

impl fmt::Display for FragmentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FragmentRole::System => "system",
            FragmentRole::Opening => "opening",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptFragment {
    pub id: String,
    #[serde(default)]
    pub template: String,
    #[serde(default)]
    pub role: FragmentRole,
    /// Describes who the agent is; triggers the framing sentence.
    #[serde(default)]
    pub persona: bool,
}

impl PromptFragment {
    fn new(id: &str, template: &str, role: FragmentRole, persona: bool) -> Self {
        Self {
            id: id.into(),
            template: template.into(),
            role,
            persona,
        }
    }

    pub fn is_absent(&self) -> bool {
        self.template.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptAxis {
    pub name: String,
    pub variants: Vec<PromptFragment>,
}

impl PromptAxis {
    pub fn variant(&self, id: &str) -> Option<&PromptFragment> {
        self.variants.iter().find(|v| v.id == id)
    }

    pub fn absent(&self) -> Option<&PromptFragment> {
        self.variants.iter().find(|v| v.is_absent())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].iter().any(|w| w.id == v.id) {
                return Err(PromptError::DuplicateVariant {
                    axis: self.name.clone(),
                    id: v.id.clone(),
                });
            }
        }
        if self.absent().is_none() {
            return Err(PromptError::NoAbsentVariant(self.name.clone()));
        }
        Ok(())
    }
}

/// Chosen variant id per axis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptVariantSet(pub IndexMap<String, String>);

impl PromptVariantSet {
    pub fn get(&self, axis: &str) -> Option<&str> {
        self.0.get(axis).map(String::as_str)
    }

    pub fn with(&self, axis: &str, id: &str) -> Self {
        let mut next = self.clone();
        next.0.insert(axis.to_string(), id.to_string());
        next
    }

    /// Canonical `axis=id;...` key in insertion order.
    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(|(a, v)| format!("{a}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Display for PromptVariantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub opening_user_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRegistry {
    pub axes: Vec<PromptAxis>,
    pub opening: String,
    pub persona_framing: String,
}

impl Default for PromptRegistry {
    fn default() -> Self {
        registry()
    }
}

/// The shipped axes: demographics, affect, formality (A absent, B informal,
/// C normal person), length and topic.
pub fn registry() -> PromptRegistry {
    use FragmentRole::*;
    let absent = |role| PromptFragment::new("absent", "", role, false);
    PromptRegistry {
        axes: vec![
            PromptAxis {
                name: "demographics".into(),
                variants: vec![absent(System), PromptFragment::new("present", DEMOGRAPHICS_FRAGMENT, System, true)],
            },
            PromptAxis {
                name: "affect".into(),
                variants: vec![absent(System), PromptFragment::new("present", AFFECT_FRAGMENT, System, true)],
            },
            PromptAxis {
                name: "formality".into(),
                variants: vec![
                    PromptFragment::new("A", "", System, false),
                    PromptFragment::new("B", INFORMAL_FRAGMENT, System, false),
                    PromptFragment::new("C", NORMAL_PERSON_FRAGMENT, System, false),
                ],
            },
            PromptAxis {
                name: "length".into(),
                variants: vec![absent(System), PromptFragment::new("present", LENGTH_FRAGMENT, System, false)],
            },
            PromptAxis {
                name: "topic".into(),
                variants: vec![absent(Opening), PromptFragment::new("present", TOPIC_FRAGMENT, Opening, false)],
            },
        ],
        opening: OPENING.into(),
        persona_framing: PERSONA_FRAMING.into(),
    }
}

/// Axis definitions loadable from a config document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    /// Start from the shipped axes; axes below replace same-named ones or are appended.
    pub extend_defaults: bool,
    pub axes: Vec<PromptAxis>,
    pub opening: Option<String>,
    pub persona_framing: Option<String>,
}

impl PromptConfig {
    pub fn build(&self) -> Result<PromptRegistry> {
        let mut reg = if self.extend_defaults {
            registry()
        } else {
            PromptRegistry {
                axes: Vec::new(),
                opening: OPENING.into(),
                persona_framing: PERSONA_FRAMING.into(),
            }
        };
        for axis in &self.axes {
            match reg.axes.iter_mut().find(|a| a.name == axis.name) {
                Some(slot) if self.extend_defaults => *slot = axis.clone(),
                Some(_) => return Err(PromptError::DuplicateAxis(axis.name.clone())),
                None => reg.axes.push(axis.clone()),
            }
        }
        if let Some(o) = &self.opening {
            reg.opening = o.clone();
        }
        if let Some(f) = &self.persona_framing {
            reg.persona_framing = f.clone();
        }
        reg.validate()?;
        Ok(reg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| PromptError::Config(format!("{}: {e}", path.display())))
    }
}

fn substitute(template: &str, persona: &PersonaFeatures, role: FragmentRole) -> Result<String> {
    let mut text = template
        .replace("[Gender]", persona.gender.as_str())
        .replace("[Age]", &persona.age.to_string())
        .replace("[Affect]", &persona.affect_phrase);
    if text.contains("[Topic]") {
        if role == FragmentRole::System {
            return Err(PromptError::UnresolvedPlaceholder {
                placeholder: "[Topic]".into(),
                role,
            });
        }
        if persona.topic_phrase.trim().is_empty() {
            return Err(PromptError::MissingTopic);
        }
        text = text.replace("[Topic]", persona.topic_phrase.trim());
    }
    if let Some(left) = leftover_placeholder(&text) {
        return Err(PromptError::UnresolvedPlaceholder { placeholder: left, role });
    }
    Ok(text)
}

/// Any remaining `[Word]` token that looks like a placeholder.
fn leftover_placeholder(text: &str) -> Option<String> {
    for p in PLACEHOLDERS {
        if text.contains(p) {
            return Some(p.to_string());
        }
    }
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        if let Some(close) = after.find(']') {
            let inner = &after[..close];
            let looks_like = inner.chars().next().is_some_and(|c| c.is_ascii_uppercase())
                && inner.chars().all(|c| c.is_ascii_alphabetic());
            if looks_like {
                return Some(format!("[{inner}]"));
            }
            rest = &after[close + 1..];
        } else {
            break;
        }
    }
    None
}

impl PromptRegistry {
    pub fn axis(&self, name: &str) -> Option<&PromptAxis> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(PromptError::DuplicateAxis(a.name.clone()));
            }
            a.validate()?;
        }
        Ok(())
    }

    /// Every axis at its absent variant.
    pub fn baseline(&self) -> PromptVariantSet {
        PromptVariantSet(
            self.axes
                .iter()
                .filter_map(|a| Some((a.name.clone(), a.absent()?.id.clone())))
                .collect(),
        )
    }

    /// The best-performing combination from the formality and persona
    /// studies: every persona axis on, informal style, short turns, topic on.
    pub fn best(&self) -> PromptVariantSet {
        let mut set = self.baseline();
        for (axis, id) in [
            ("demographics", "present"),
            ("affect", "present"),
            ("formality", "B"),
            ("length", "present"),
            ("topic", "present"),
        ] {
            if self.axis(axis).and_then(|a| a.variant(id)).is_some() {
                set.0.insert(axis.into(), id.into());
            }
        }
        set
    }

    /// Checks that the set names a valid variant for every axis.
    pub fn check(&self, variants: &PromptVariantSet) -> Result<()> {
        for name in variants.0.keys() {
            if self.axis(name).is_none() {
                return Err(PromptError::UnknownAxis(name.clone()));
            }
        }
        for axis in &self.axes {
            self.fragment(axis, variants)?;
        }
        Ok(())
    }

    fn fragment<'a>(&self, axis: &'a PromptAxis, variants: &PromptVariantSet) -> Result<&'a PromptFragment> {
        let id = variants
            .get(&axis.name)
            .ok_or_else(|| PromptError::MissingChoice(axis.name.clone()))?;
        axis.variant(id).ok_or_else(|| PromptError::UnknownVariant {
            axis: axis.name.clone(),
            id: id.to_string(),
        })
    }

    /// Persona fragments, then the framing sentence (if any persona fragment
    /// rendered), then the remaining system fragments, in axis order.
    pub fn render_system(&self, persona: &PersonaFeatures, variants: &PromptVariantSet) -> Result<String> {
        self.check(variants)?;
        let mut persona_parts = Vec::new();
        let mut style_parts = Vec::new();
        for axis in &self.axes {
            let frag = self.fragment(axis, variants)?;
            if frag.role != FragmentRole::System || frag.is_absent() {
                continue;
            }
            let text = substitute(frag.template.trim(), persona, FragmentRole::System)?;
            if frag.persona {
                persona_parts.push(text);
            } else {
                style_parts.push(text);
            }
        }
        if !persona_parts.is_empty() && !self.persona_framing.is_empty() {
            persona_parts.push(self.persona_framing.clone());
        }
        persona_parts.extend(style_parts);
        Ok(persona_parts.join(" "))
    }

    pub fn render_opening(&self, persona: &PersonaFeatures, variants: &PromptVariantSet) -> Result<String> {
        self.check(variants)?;
        let mut parts = vec![substitute(&self.opening, persona, FragmentRole::Opening)?];
        for axis in &self.axes {
            let frag = self.fragment(axis, variants)?;
            if frag.role != FragmentRole::Opening || frag.is_absent() {
                continue;
            }
            parts.push(substitute(frag.template.trim(), persona, FragmentRole::Opening)?);
        }
        Ok(parts.join(" "))
    }

    pub fn render(&self, persona: &PersonaFeatures, variants: &PromptVariantSet) -> Result<RenderedPrompt> {
        Ok(RenderedPrompt {
            system_text: self.render_system(persona, variants)?,
            opening_user_text: self.render_opening(persona, variants)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sex;

    fn persona(age: i64, gender: Sex, affect: &str, topic: &str) -> PersonaFeatures {
        PersonaFeatures {
            speaker_id: "s".into(),
            age,
            gender,
            affect_phrase: affect.into(),
            topic_phrase: topic.into(),
            source_conversation_id: "c".into(),
        }
    }

    #[test]
    fn best_system_prompt_matches_template() {
        let reg = registry();
        let p = persona(25, Sex::Female, "neutral", "college football games");
        let text = reg.render_system(&p, &reg.best()).unwrap();
        assert_eq!(
            text,
            "Imagine that you are a female and 25 years old. You feel neutral feelings. \
             You should not explicitly say that you have these characteristics, but your conversation \
             should be typical of someone with these characteristics. Please try to use informal language, \
             the way people talk casually. Please say at most one or two sentences per turn."
        );
        assert!(text.contains("neutral feelings"));
    }

    #[test]
    fn baseline_renders_no_persona_content() {
        let reg = registry();
        let p = persona(25, Sex::Female, "neutral", "cats");
        let r = reg.render(&p, &reg.baseline()).unwrap();
        assert_eq!(r.system_text, "");
        assert_eq!(r.opening_user_text, OPENING);
    }

    #[test]
    fn opening_with_topic() {
        let reg = registry();
        let p = persona(25, Sex::Female, "neutral", "college football games");
        let text = reg.render_opening(&p, &reg.best()).unwrap();
        assert!(text.starts_with(OPENING));
        assert!(text.ends_with("following topics: college football games."), "{text}");
    }

    #[test]
    fn empty_topic_with_topic_axis_on_errors() {
        let reg = registry();
        let p = persona(25, Sex::Female, "neutral", " ");
        assert_eq!(reg.render_opening(&p, &reg.best()), Err(PromptError::MissingTopic));
    }

    #[test]
    fn topic_placeholder_in_system_role_errors() {
        let mut reg = registry();
        reg.axes[0].variants[1].template = "Talk about [Topic].".into();
        let p = persona(25, Sex::Female, "neutral", "cats");
        assert!(matches!(
            reg.render_system(&p, &reg.best()),
            Err(PromptError::UnresolvedPlaceholder { role: FragmentRole::System, .. })
        ));
    }

    #[test]
    fn unknown_placeholder_errors() {
        let mut reg = registry();
        reg.axes[3].variants[1].template = "You live in [City].".into();
        let p = persona(25, Sex::Female, "neutral", "cats");
        assert_eq!(
            reg.render_system(&p, &reg.best()),
            Err(PromptError::UnresolvedPlaceholder {
                placeholder: "[City]".into(),
                role: FragmentRole::System
            })
        );
    }

    #[test]
    fn formality_axis_has_three_variants() {
        let reg = registry();
        let ids: Vec<&str> = reg.axis("formality").unwrap().variants.iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, vec!["A", "B", "C"]);
    }

    #[test]
    fn formality_variant_only_changes_its_fragment() {
        let reg = registry();
        let p = persona(30, Sex::Male, "very positive", "cars");
        let b = reg.render_system(&p, &reg.best()).unwrap();
        let c = reg.render_system(&p, &reg.best().with("formality", "C")).unwrap();
        assert_eq!(b.replace(INFORMAL_FRAGMENT, NORMAL_PERSON_FRAGMENT), c);
    }

    #[test]
    fn missing_or_unknown_choice() {
        let reg = registry();
        let p = persona(30, Sex::Male, "neutral", "x");
        let mut partial = reg.baseline();
        partial.0.shift_remove("length");
        assert_eq!(reg.render_system(&p, &partial), Err(PromptError::MissingChoice("length".into())));
        assert!(matches!(
            reg.render_system(&p, &reg.baseline().with("length", "zzz")),
            Err(PromptError::UnknownVariant { .. })
        ));
        assert!(matches!(
            reg.render_system(&p, &reg.baseline().with("nope", "x")),
            Err(PromptError::UnknownAxis(_))
        ));
    }

    #[test]
    fn custom_axis_from_config() {
        let cfg: PromptConfig = toml::from_str(
            r#"
            extend_defaults = true
            [[axes]]
            name = "hobby"
            [[axes.variants]]
            id = "absent"
            [[axes.variants]]
            id = "gardening"
            template = "You enjoy gardening."
            "#,
        )
        .unwrap();
        let reg = cfg.build().unwrap();
        assert_eq!(reg.axes.len(), 6);
        let p = persona(30, Sex::Male, "neutral", "x");
        let text = reg.render_system(&p, &reg.baseline().with("hobby", "gardening")).unwrap();
        assert_eq!(text, "You enjoy gardening.");
    }

    #[test]
    fn axis_without_absent_variant_rejected() {
        let cfg = PromptConfig {
            axes: vec![PromptAxis {
                name: "x".into(),
                variants: vec![PromptFragment::new("a", "Be nice.", FragmentRole::System, false)],
            }],
            ..Default::default()
        };
        assert_eq!(cfg.build(), Err(PromptError::NoAbsentVariant("x".into())));
    }
}
