//! Natural-language rendering of experience and a small grammar to read
//! `Requires …` clauses back into conditions.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::laws::{Attribute, Condition, Creature, Effect, ItemKind, Texture};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("no `Requires` clause found")]
    MissingClause,
    #[error("cannot read condition `{0}`")]
    Unreadable(String),
}

const FACING_ORDER: [Texture; 5] = [Texture::Grass, Texture::Sand, Texture::Path, Texture::Water, Texture::Lava];

fn facing_list(allowed: &BTreeSet<Texture>) -> String {
    let mut ordered: Vec<Texture> = FACING_ORDER.iter().copied().filter(|t| allowed.contains(t)).collect();
    ordered.extend(allowed.iter().copied().filter(|t| !FACING_ORDER.contains(t)));
    ordered.iter().map(|t| t.name()).collect::<Vec<_>>().join(" or ")
}

fn item_phrase(item: ItemKind, n: u32) -> String {
    if item.is_tool() {
        if n == 1 {
            item.name().to_string()
        } else {
            format!("{n} {}", item.name())
        }
    } else if n == 1 {
        format!("1 {}", item.name())
    } else {
        format!("{n} {}s", item.name())
    }
}

fn group(c: &Condition) -> u8 {
    match c {
        Condition::HasAtLeast { .. } => 0,
        Condition::HasAnyOf { .. } => 1,
        Condition::AttributeBelow { .. } => 2,
        Condition::FacingTexture { .. } | Condition::FacingCreature { .. } => 3,
        Condition::NearbyTexture { .. } => 4,
    }
}

/// `Requires 1 wood and 1 stone and table nearby`.
pub fn render_requires(conditions: &[Condition]) -> String {
    let mut conds: Vec<&Condition> = conditions.iter().collect();
    conds.sort_by(|a, b| group(a).cmp(&group(b)).then(a.cmp(b)));
    let mut parts = Vec::new();
    let mut nearby = Vec::new();
    for c in conds {
        match c {
            Condition::HasAtLeast { item, n } => parts.push(item_phrase(*item, *n)),
            Condition::HasAnyOf { items } => parts.push(items.iter().map(|i| i.name()).collect::<Vec<_>>().join(" or ")),
            Condition::AttributeBelow { attribute: Attribute::Energy, threshold } if *threshold == Attribute::MAX => {
                parts.push("insufficient energy".into())
            }
            Condition::AttributeBelow { attribute, threshold } => parts.push(format!("{attribute} below {threshold}")),
            Condition::FacingTexture { allowed } => parts.push(format!("facing {}", facing_list(allowed))),
            Condition::FacingCreature { creature, ripe_required } => {
                let ripe = if *ripe_required { "ripe " } else { "" };
                parts.push(format!("facing a {ripe}{creature}"))
            }
            Condition::NearbyTexture { texture, radius: 1 } => nearby.push(texture.name().to_string()),
            Condition::NearbyTexture { texture, radius } => parts.push(format!("{texture} within {radius}")),
        }
    }
    if !nearby.is_empty() {
        parts.push(format!("{} nearby", nearby.join(" and ")));
    }
    if parts.is_empty() {
        "Requires nothing.".to_string()
    } else {
        format!("Requires {}.", parts.join(" and "))
    }
}

fn singular_item(word: &str) -> Option<ItemKind> {
    ItemKind::from_name(word).or_else(|| word.strip_suffix('s').and_then(ItemKind::from_name))
}

fn parse_items(text: &str) -> Option<Condition> {
    let words: Vec<&str> = text.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "unit" | "units" | "of")).collect();
    match words.as_slice() {
        [item] => singular_item(item).map(|item| Condition::HasAtLeast { item, n: 1 }),
        [n, item] => {
            let n: u32 = n.parse().ok()?;
            singular_item(item).map(|item| Condition::HasAtLeast { item, n })
        }
        _ => None,
    }
}

fn parse_creature(text: &str) -> Option<Condition> {
    let words: Vec<&str> = text.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "the")).collect();
    let (ripe, name) = match words.as_slice() {
        ["ripe", name] => (true, *name),
        [name] => (false, *name),
        _ => return None,
    };
    let creature = Creature::from_name(name).filter(|c| *c != Creature::Player)?;
    Some(Condition::FacingCreature { creature, ripe_required: ripe })
}

fn parse_atom(part: &str) -> Option<Condition> {
    if part == "insufficient energy" {
        return Some(Condition::AttributeBelow { attribute: Attribute::Energy, threshold: Attribute::MAX });
    }
    if let Some(rest) = part.strip_prefix("facing ") {
        if let Some(c) = parse_creature(rest) {
            return Some(c);
        }
        let textures: Option<BTreeSet<Texture>> = rest.split(" or ").map(|t| Texture::from_name(t.trim())).collect();
        return textures.filter(|t| !t.is_empty()).map(|allowed| Condition::FacingTexture { allowed });
    }
    if let Some((attr, n)) = part.split_once(" below ") {
        let attribute = Attribute::from_name(attr.trim())?;
        return Some(Condition::AttributeBelow { attribute, threshold: n.trim().parse().ok()? });
    }
    if let Some((t, r)) = part.split_once(" within ") {
        return Some(Condition::NearbyTexture { texture: Texture::from_name(t.trim())?, radius: r.trim().parse().ok()? });
    }
    if part.contains(" or ") {
        let items: Option<BTreeSet<ItemKind>> = part.split(" or ").map(|i| singular_item(i.trim())).collect();
        return items.filter(|i| i.len() >= 2).map(|items| Condition::HasAnyOf { items });
    }
    parse_items(part)
}

/// Reads the first `Requires …` clause in `text` into sorted conditions.
pub fn parse_requires(text: &str) -> Result<Vec<Condition>, TextError> {
    let lower = text.to_lowercase();
    let start = lower.find("requires").ok_or(TextError::MissingClause)?;
    let rest = &lower[start + "requires".len()..];
    let end = rest.find(['.', '\n', ';']).unwrap_or(rest.len());
    let clause = rest[..end]
        .replace(", also need", " and")
        .replace(", and ", " and ")
        .replace(',', " and ")
        .replace("  ", " ");
    let clause = clause.trim();
    if clause == "nothing" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut pending_nearby: Vec<Texture> = Vec::new();
    for raw in clause.split(" and ") {
        let part = raw.trim();
        if part.is_empty() {
            continue;
        }
        if let Some(t) = part.strip_suffix(" nearby") {
            let texture = Texture::from_name(t.trim()).ok_or_else(|| TextError::Unreadable(part.to_string()))?;
            for p in pending_nearby.drain(..).chain([texture]) {
                out.push(Condition::nearby(p));
            }
            continue;
        }
        if let Some(t) = Texture::from_name(part) {
            if ItemKind::from_name(part).is_none() {
                pending_nearby.push(t);
                continue;
            }
        }
        match parse_atom(part) {
            Some(c) => out.push(c),
            None => return Err(TextError::Unreadable(part.to_string())),
        }
    }
    if let Some(t) = pending_nearby.first() {
        return Err(TextError::Unreadable(t.name().to_string()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn effect_phrase(e: &Effect) -> String {
    match e {
        Effect::Consume { item, n } | Effect::Gain { item, n } => format!("{n} {item}"),
        Effect::AttributeDelta { attribute, delta } => format!("{attribute} {delta:+}"),
        Effect::FaceBecomes { texture } => format!("faced cell becomes {texture}"),
        Effect::RemoveFacedCreature => "removes the faced creature".into(),
        Effect::SpawnFacedCreature { creature } => format!("places a {creature} in front"),
        Effect::BeginSleep => "falls asleep".into(),
    }
}

/// `Costs 1 wood and 1 stone. Gains 1 stone_pickaxe.`
pub fn render_effects(costs: &[Effect], benefits: &[Effect]) -> String {
    let join = |es: &[Effect]| es.iter().map(effect_phrase).collect::<Vec<_>>().join(" and ");
    match (costs.is_empty(), benefits.is_empty()) {
        (true, true) => "No observed effects.".into(),
        (false, true) => format!("Costs {}.", join(costs)),
        (true, false) => format!("Gains {}.", join(benefits)),
        (false, false) => format!("Costs {}. Gains {}.", join(costs), join(benefits)),
    }
}

/// Reads effects out of free text. Accepts the rendered form and common
/// phrasings such as "consumes 2 units of wood" or "increases food by 6".
pub fn parse_effects(text: &str) -> (Vec<Effect>, Vec<Effect>) {
    let lower = text.to_lowercase().replace(['\'', '"', ',', '.', ';', ':', '(', ')'], " ");
    let words: Vec<&str> = lower.split_whitespace().collect();
    let mut costs = BTreeSet::new();
    let mut benefits = BTreeSet::new();
    let mut mode_cost = false;
    let mut i = 0;
    while i < words.len() {
        let w = words[i];
        if w.starts_with("cost") || w.starts_with("consum") {
            mode_cost = true;
        } else if w.starts_with("gain") || w.starts_with("yield") || w.starts_with("add") || w.starts_with("craft") {
            mode_cost = false;
        }
        if let Ok(n) = w.parse::<u32>() {
            let mut j = i + 1;
            while j < words.len() && matches!(words[j], "unit" | "units" | "of" | "a" | "an") {
                j += 1;
            }
            if let Some(item) = words.get(j).and_then(|x| singular_item(x)) {
                let e = if mode_cost { Effect::Consume { item, n } } else { Effect::Gain { item, n } };
                if mode_cost {
                    costs.insert(e);
                } else {
                    benefits.insert(e);
                }
                i = j + 1;
                continue;
            }
        }
        if let Some(attribute) = Attribute::from_name(w) {
            if let Some(next) = words.get(i + 1) {
                if let Ok(d) = next.parse::<i32>() {
                    let e = Effect::AttributeDelta { attribute, delta: d };
                    if d < 0 {
                        costs.insert(e);
                    } else {
                        benefits.insert(e);
                    }
                }
            }
            let window = &words[i.saturating_sub(3)..words.len().min(i + 5)];
            if window.iter().any(|x| x.starts_with("increas")) {
                if let Some(d) = window.iter().rev().find_map(|x| x.parse::<i32>().ok()) {
                    benefits.insert(Effect::AttributeDelta { attribute, delta: d });
                }
            }
        }
        if w == "becomes" || w == "converting" || w == "replacing" {
            if let Some(t) = words[i + 1..].iter().take(4).find_map(|x| Texture::from_name(x)) {
                benefits.insert(Effect::FaceBecomes { texture: t });
            }
        }
        if w.starts_with("remov") {
            benefits.insert(Effect::RemoveFacedCreature);
        }
        if w == "asleep" || w == "sleeping" {
            benefits.insert(Effect::BeginSleep);
        }
        if w == "places" {
            if let Some(c) = words[i + 1..].iter().take(3).find_map(|x| Creature::from_name(x)) {
                benefits.insert(Effect::SpawnFacedCreature { creature: c });
            }
        }
        i += 1;
    }
    (costs.into_iter().collect(), benefits.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{builtin_law_table, Objective};

    #[test]
    fn renders_known_lines() {
        let t = builtin_law_table();
        assert_eq!(render_requires(&t.get(Objective::MakeStonePickaxe).preconditions), "Requires 1 wood and 1 stone and table nearby.");
        assert_eq!(render_requires(&t.get(Objective::PlaceTable).preconditions), "Requires 2 woods and facing grass or sand or path.");
        assert_eq!(render_requires(&t.get(Objective::CollectStone).preconditions), "Requires wood_pickaxe and facing stone.");
        assert_eq!(
            render_requires(&t.get(Objective::MakeIronPickaxe).preconditions),
            "Requires 1 wood and 1 coal and 1 iron and table and furnace nearby."
        );
        assert_eq!(render_requires(&t.get(Objective::Sleep).preconditions), "Requires insufficient energy.");
        assert_eq!(render_requires(&t.get(Objective::EatPlant).preconditions), "Requires facing a ripe plant.");
    }

    #[test]
    fn every_law_round_trips() {
        for law in builtin_law_table().iter() {
            let mut want = law.preconditions.clone();
            want.sort();
            assert_eq!(parse_requires(&render_requires(&law.preconditions)).unwrap(), want, "{}", law.objective);
            let (c, b) = parse_effects(&render_effects(&law.costs, &law.benefits));
            let mut wc = law.costs.clone();
            wc.sort();
            let mut wb = law.benefits.clone();
            wb.sort();
            assert_eq!((c, b), (wc, wb), "{}", law.objective);
        }
    }

    #[test]
    fn reads_loose_phrasing() {
        let got = parse_requires("20. Make Iron Pickaxe: requires 1 wood, 1 coal, and 1 iron, and table and furnace nearby.").unwrap();
        assert_eq!(got, {
            let mut v = builtin_law_table().get(Objective::MakeIronPickaxe).preconditions.clone();
            v.sort();
            v
        });
        assert!(matches!(parse_requires("Requires facing zombie and better with weapons"), Err(TextError::Unreadable(_))));
        assert_eq!(parse_requires("no clause"), Err(TextError::MissingClause));
        let (c, _) = parse_effects("consumes 2 units of wood to place a table");
        assert_eq!(c, vec![Effect::Consume { item: ItemKind::Wood, n: 2 }]);
    }
}
