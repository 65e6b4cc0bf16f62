def collect_coal_reward(agent, target):
    texture, obj = agent.world[target]
    if texture == 'coal' and agent.inventory['wood_pickaxe'] > 0:
        return True
    return False

def eat_plant_reward(agent, target):
    texture, obj = agent.world[target]
    return isinstance(obj, Plant)

def defeat_zombie_reward(agent, target):
    texture, obj = agent.world[target]
    if isinstance(obj, Zombie):
        if 'iron_sword' in agent.inventory or 'stone_sword' in agent.inventory or 'wood_sword' in agent.inventory:
            return True
    return False

def defeat_skeleton_reward(agent, target):
    texture, obj = agent.world[target]
    if isinstance(obj, Skeleton):
        if agent.inventory['wood_sword'] > 0 or agent.inventory['stone_sword'] > 0 or agent.inventory['iron_sword'] > 0:
            return True
    return False

def eat_cow_reward(agent, target):
    texture, obj = agent.world[target]
    return isinstance(obj, Cow)

def collect_coal_reward(agent, target):
    texture, obj = agent.world[target]
    if texture == 'coal' and agent.inventory['wood_pickaxe'] > 0:
        return True
    return False

def collect_diamond_reward(agent, target):
    texture, obj = agent.world[target]
    if texture == 'diamond' and agent.inventory['iron_pickaxe'] > 0:
        return True
    return False

def collect_drink_reward(agent, target):
    texture, obj = agent.world[target]
    return texture == 'water'

def collect_iron_reward(agent, target):
    texture, obj = agent.world[target]
    return texture == 'iron' and 'stone_pickaxe' in agent.inventory

def collect_sapling_reward(agent, target):
    texture, obj = agent.world[target]
    return texture == 'grass'

def collect_stone_reward(agent, target):
    texture, obj = agent.world[target]
    return texture == 'stone' and 'wood_pickaxe' in agent.inventory

def collect_wood_reward(agent, target):
    texture, obj = agent.world[target]
    return texture == 'tree'

def sleep_reward(agent, target):
    return agent.inventory['energy'] < 9

def place_stone_reward(agent, target):
    if agent.inventory['stone'] < 1:
        return False
    texture, obj = agent.world[target]
    if texture not in ['grass', 'sand', 'path', 'water', 'lava']:
        return False
    return True

def place_table_reward(agent, target):
    texture, obj = agent.world[target]
    if texture in ['grass', 'sand', 'path'] and 'wood' in agent.inventory and agent.inventory['wood'] >= 2:
        return True
    return False

def place_furnace_reward(agent, target):
    if agent.inventory['stone'] >= 4:
        texture, _ = agent.world[target]
        if texture in ['grass', 'sand', 'path']:
            return True
    return False

def place_plant_reward(agent, target):
    if agent.inventory['sapling'] >= 1 and agent.world[target][0] == 'grass':
        return True
    return False

def make_wood_pickaxe_reward(agent, target):
    if agent.inventory['wood'] >= 1 and any(isinstance(obj, Table) for obj in agent.world.nearby(agent.pos, 1)[1]):
        return True
    return False

def make_stone_pickaxe_reward(agent, target):
    if 'wood' in agent.inventory and 'stone' in agent.inventory and 'table' in agent.world[target][1]:
        return True
    return False

def make_iron_pickaxe_reward(agent, target):
    materials = agent.inventory
    if materials['wood'] < 1 or materials['coal'] < 1 or materials['iron'] < 1:
        return False
    nearby = agent.world.nearby(agent.pos, 1)
    if 'table' not in nearby[0] or 'furnace' not in nearby[0]:
        return False
    return True

def make_wood_sword_reward(agent, target):
    if agent.inventory['wood'] >= 1:
        nearby_textures, nearby_objects = agent.world.nearby(agent.pos, 1)
        if 'table' in nearby_textures:
            return True
    return False

def make_stone_sword_reward(agent, target):
    inventory = agent.inventory
    if inventory['wood'] >= 1 and inventory['stone'] >= 1:
        nearby = agent.world.nearby(agent.pos, 1)
        for texture, obj in nearby:
            if 'table' in texture:
                return True
    return False

def make_iron_sword_reward(agent, target):
    inventory = agent.inventory
    if inventory['wood'] >= 1 and inventory['coal'] >= 1 and inventory['iron'] >= 1:
        nearby = agent.world.nearby(agent.pos, 1)
        textures, objects = nearby
        if 'table' in textures and 'furnace' in textures:
            return True
    return False
