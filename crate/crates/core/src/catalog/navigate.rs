use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Catalog, GroupId, ObjectId};
use crate::error::{LakeError, Result};

/// Boolean expression over groups.
///
/// JSON form is externally tagged, e.g.
/// `{"and": [{"label": {"grouping": "language", "label": "en"}}, {"group": 7}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupExpr {
    Group(GroupId),
    Label { grouping: String, label: String },
    And(Vec<GroupExpr>),
    Or(Vec<GroupExpr>),
}

impl GroupExpr {
    pub fn label(grouping: impl Into<String>, label: impl Into<String>) -> Self {
        GroupExpr::Label {
            grouping: grouping.into(),
            label: label.into(),
        }
    }

    pub fn and(items: impl IntoIterator<Item = GroupExpr>) -> Self {
        GroupExpr::And(items.into_iter().collect())
    }

    pub fn or(items: impl IntoIterator<Item = GroupExpr>) -> Self {
        GroupExpr::Or(items.into_iter().collect())
    }
}

impl Catalog {
    /// Evaluates a group expression with exact set semantics. The result is
    /// sorted by object id.
    pub fn navigate(&self, expr: &GroupExpr) -> Result<Vec<ObjectId>> {
        Ok(self.eval(expr)?.into_iter().collect())
    }

    fn eval(&self, expr: &GroupExpr) -> Result<BTreeSet<ObjectId>> {
        match expr {
            GroupExpr::Group(id) => self.members(*id).cloned(),
            GroupExpr::Label { grouping, label } => {
                let id = self.resolve_group(grouping, label)?;
                self.members(id).cloned()
            }
            GroupExpr::And(items) => {
                let mut iter = items.iter();
                let first = iter.next().ok_or_else(|| LakeError::invalid("empty intersection"))?;
                let mut acc = self.eval(first)?;
                for item in iter {
                    let next = self.eval(item)?;
                    acc.retain(|o| next.contains(o));
                }
                Ok(acc)
            }
            GroupExpr::Or(items) => {
                if items.is_empty() {
                    return Err(LakeError::invalid("empty union"));
                }
                let mut acc = BTreeSet::new();
                for item in items {
                    acc.extend(self.eval(item)?);
                }
                Ok(acc)
            }
        }
    }
}
