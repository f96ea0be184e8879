//! Identifier newtypes for every entity kind of a policy model.
//!
//! Ids are author-chosen strings such as `r1` or `personal`. Each kind lives
//! in its own namespace, so a role and a purpose may share a spelling.

use std::borrow::Borrow;
use std::fmt;

/// Returns true when `s` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

macro_rules! entity_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

entity_id!(
    /// Identifies a [`Role`](crate::model::Role).
    RoleId
);
entity_id!(
    /// Identifies a [`Purpose`](crate::model::Purpose).
    PurposeId
);
entity_id!(
    /// Identifies an [`Attribute`](crate::model::Attribute).
    AttributeId
);
entity_id!(
    /// Identifies an [`AttributeGroup`](crate::model::AttributeGroup).
    GroupId
);
entity_id!(
    /// Identifies a [`Task`](crate::model::Task).
    TaskId
);
entity_id!(
    /// Identifies a [`GranularityFn`](crate::model::GranularityFn).
    GranularityId
);
