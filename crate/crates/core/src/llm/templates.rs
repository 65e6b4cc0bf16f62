//! Prompt templates. Slots are written `{name}`; other braces are literal.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template `{template}` has unfilled slot `{slot}`")]
    Unfilled { template: &'static str, slot: &'static str },
    #[error("template `{template}` has no slot `{slot}`")]
    UnknownSlot { template: &'static str, slot: String },
}

#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub name: &'static str,
    pub text: &'static str,
    pub slots: &'static [&'static str],
}

impl Template {
    /// Fills every declared slot. All slots must be provided.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        for (k, _) in values {
            if !self.slots.contains(k) {
                return Err(TemplateError::UnknownSlot { template: self.name, slot: k.to_string() });
            }
        }
        let mut out = self.text.to_string();
        for slot in self.slots {
            let value = values
                .iter()
                .find(|(k, _)| k == slot)
                .map(|(_, v)| *v)
                .ok_or(TemplateError::Unfilled { template: self.name, slot })?;
            out = out.replace(&format!("{{{slot}}}"), value);
        }
        Ok(out)
    }
}

pub const MINING_SYSTEM: Template = Template {
    name: "mining_system",
    slots: &[],
    text: r#"You are a player who is in an open-world game. It's up to you to explore as much of the world while trying to survive! The world is made of grids.

ATTRIBUTES are some information related to yourself. These are the attributes that you have to manage in order to survive. They are affected by the your actions and the environment. All max values are 9.
{
  "health",
  "food",
  "drink",
  "energy"
}

TOOLS are some of the tools you currently have. In accomplishing some actions, you can use the tools that are held, and you can also make more tools.

MATERIALS are some materials you currently have, which can be obtained by interacting with the environment. You can combine them into a construction tool, or for other purposes.

FACE records the grid you're currently facing. In some special cases, the object on the current grid is recorded in '()'.

NEARBY records a nine-panel grid centered on you, the player.
"#,
};

pub const MINING_USER_A: Template = Template {
    name: "mining_user_a",
    slots: &["action_name", "aspect"],
    text: r#"Let's consider an action called "{action_name}", what kind of things do you think this action does? Do you guess what the effect would be on some element in "{aspect}"? You only need to considering the changes in "{aspect}".

Completing an action costs something (optional) and gains some benefit (optional). Please pay attention to the difference between "initial_state" and "resulting_state". Describe in natural language what happened in this transition.

You only need to output one description without any other words.
"#,
};

pub const MINING_USER_B: Template = Template {
    name: "mining_user_b",
    slots: &["aspect", "action_name", "records"],
    text: r#"Now, I will show you the comparison of "{aspect}" before and after the player executes action "{action_name}".

{records}

Please pay attention to the difference between "initial_state" and "resulting_state".
"#,
};

/// Seeds a precondition description from the mined costs.
pub const PRECONDITION_SEED: Template = Template {
    name: "precondition_seed",
    slots: &["action_name", "effects"],
    text: r#"The action "{action_name}" has these observed effects: {effects}

What must hold before the action for it to succeed? Answer with a single sentence of the form "Requires <condition> and <condition> ...", using item counts such as "1 wood", tool names such as "wood_pickaxe", "facing <texture> or <texture>", "facing a <creature>", "<texture> nearby" or "insufficient energy".
"#,
};

/// Refines a precondition description against labelled attempts.
pub const PRECONDITION_REFINE: Template = Template {
    name: "precondition_refine",
    slots: &["action_name", "preconditions", "records"],
    text: r#"Current belief about when "{action_name}" succeeds: {preconditions}

Here are attempts of "{action_name}". "valid": true means the attempt succeeded.

{records}

Revise the belief so that it holds in every successful attempt and fails in every failed one. Answer with a single sentence starting with "Requires".
"#,
};

pub const CODEGEN_SYSTEM: Template = Template {
    name: "codegen_system",
    slots: &[],
    text: r#"The following information can help you in the process of designing a Reward Function:

The game environment is consist of a grid of blocks. Each block has a texture and an object on it (optional). The texture can be one of the following:
  - water
  - grass
  - stone
  - path
  - sand
  - tree
  - lava
  - coal
  - iron
  - diamond
  - table
  - furnace

The objects can be:
  - Zombie
  - Skeleton
  - Plant
  - Cow

Agent can perform the following actions:
  - noop
  - move_left
  - move_right
  - move_up
  - move_down
  - eat_plant
  - defeat_zombie
  - defeat_skeleton
  - eat_cow
  - collect_coal
  - collect_diamond
  - collect_drink
  - collect_iron
  - collect_sapling
  - collect_stone
  - collect_wood
  - sleep
  - place_stone
  - place_table
  - place_furnace
  - place_plant
  - make_wood_pickaxe
  - make_stone_pickaxe
  - make_iron_pickaxe
  - make_wood_sword
  - make_stone_sword
  - make_iron_sword

ATTRIBUTES are some information related to the agent. These are the attributes that the agent have to manage in order to survive. They are affected by the agent's actions and the environment. All max values are 9.
{
    "health",
    "food",
    "drink",
    "energy"
}

TOOLS are some of the tools the agent currently have. In accomplishing some actions, the agent can use the tools that are held, and the agent can also make more tools.

MATERIALS are some materials the agent currently have, which can be obtained by interacting with the environment. Agent can combine them into a construction tool, or for other purposes.

FACE records the grid the agent is currently facing.

NEARBY records a nine-panel grid centered on the agent.

When you help AGENT with Reward Function Design, you may also need some code-level knowledge, which can help you better translate your understanding into sensible Python code:

- You can visit the AGENT's inventory by calling the function agent.inventory.
  It will return a dictionary with the resources and tools that the AGENT has.
  agent.inventory including information of ATTRIBUTES, TOOLS and MATERIALS.
e.g.,
agent.inventory
# {'health': 9, 'food': 9, 'drink': 9, 'energy': 9, 'sapling': 0, 'wood': 0,
   'stone': 0, 'coal': 0, 'iron': 0, 'diamond': 0, 'wood_pickaxe': 0,
   'stone_pickaxe': 0, 'iron_pickaxe': 0, 'wood_sword': 0, 'stone_sword': 0,
   'iron_sword': 0}


- You can get information about the gird the agent is facing by accessing
  agent.world[target]. Gird is probably some kind of texture or an object.
e.g.,
texture, obj = agent.world[target]
# texture is a string and obj is a object. Cow, Zombie, Skeleton, Plant, are a
  list of objects and others are all texture. treat objects using isinstance().


- You can look at the NEARBY AGENT by agent.world.nearby(agent.pos, 1).
  Similar to facing, this function call will return a 'tuple', which contains a
  tuple of materials (string), and a set of objects.
e.g.,
agent.world.nearby(agent.pos, 1)
# (('grass', 'sand'), {{<crafter.objects.Plant object at 0x7f4283106290>,
   <crafter.objects.Zombie object at 0x7f4283106440>, <crafter.objects.Player
   object at 0x7f42845c9960>}})
"#,
};

pub const CODEGEN_USER: Template = Template {
    name: "codegen_user",
    slots: &["action_name", "experience", "name"],
    text: r#"Now you need to write a reward function, which is a simple function that only needs to determine if the action can be done in the current state, the action is: {action_name}

Here are some understanding of this action:
{experience}

You only need to output the python function named '{name}_reward(agent, target)' and the function return a bool value.
'True' means the action can be done at current state, 'False' means the action can not be done at current state.

Output code only, without any explanation.
"#,
};

/// Appended to the codegen request when a previous draft exists.
pub const CODEGEN_REVISION: Template = Template {
    name: "codegen_revision",
    slots: &["draft"],
    text: r#"
Here is your previous version of the function:
{draft}

Check it against the understanding above, fix any mistakes, and output the complete function again.
"#,
};

/// Closing instruction appended to the language-model agent's prompt.
pub const AGENT_INSTRUCTION: Template = Template {
    name: "agent_instruction",
    slots: &["actions"],
    text: r#"Choose the single best next action. Valid actions: {actions}.
Answer with the action name only.
"#,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_slots_and_keeps_literal_braces() {
        let out = CODEGEN_USER
            .render(&[("action_name", "collect_wood"), ("experience", "Requires facing tree."), ("name", "collect_wood")])
            .unwrap();
        assert!(out.contains("the action is: collect_wood"));
        assert!(out.contains("'collect_wood_reward(agent, target)'"));
        assert!(CODEGEN_SYSTEM.render(&[]).unwrap().contains("{'health': 9"));
    }

    #[test]
    fn missing_slot_is_named() {
        let err = MINING_USER_B.render(&[("aspect", "materials"), ("action_name", "collect_wood")]).unwrap_err();
        assert_eq!(err, TemplateError::Unfilled { template: "mining_user_b", slot: "records" });
    }
}
