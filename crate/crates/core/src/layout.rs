//! Block layouts of discrete spaces.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Entity {
    Vertex,
    Edge,
    Face,
    Cell,
}

/// A contiguous range of coefficients attached to one geometric entity.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub name: String,
    pub entity: Entity,
    /// Global id of the entity (cell id for volume blocks).
    pub entity_id: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Layout {
    pub space: String,
    pub blocks: Vec<Block>,
}

impl Layout {
    pub fn new(space: &str) -> Layout {
        Layout { space: space.to_string(), blocks: Vec::new() }
    }

    /// Appends a block and returns its offset.
    pub fn push(&mut self, name: impl Into<String>, entity: Entity, entity_id: usize, len: usize) -> usize {
        let offset = self.dim();
        self.blocks.push(Block { name: name.into(), entity, entity_id, offset, len });
        offset
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len)
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Coefficients attached to each entity of a class, keyed by entity id.
    pub fn per_entity(&self, entity: Entity) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for b in self.blocks.iter().filter(|b| b.entity == entity) {
            match out.iter_mut().find(|(id, _)| *id == b.entity_id) {
                Some(slot) => slot.1 += b.len,
                None => out.push((b.entity_id, b.len)),
            }
        }
        out
    }

    /// One-line header: `space dim name:offset+len ...`.
    pub fn header(&self) -> String {
        let mut s = format!("{} {}", self.space, self.dim());
        for b in &self.blocks {
            s.push_str(&format!(" {}:{}+{}", b.name, b.offset, b.len));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_accumulate() {
        let mut l = Layout::new("X");
        assert_eq!(l.push("a", Entity::Cell, 0, 0), 0);
        assert_eq!(l.push("b", Entity::Edge, 3, 2), 0);
        assert_eq!(l.push("c", Entity::Edge, 3, 1), 2);
        assert_eq!(l.dim(), 3);
        assert_eq!(l.per_entity(Entity::Edge), vec![(3, 3)]);
        assert_eq!(l.header(), "X 3 a:0+0 b:0+2 c:2+1");
    }
}
