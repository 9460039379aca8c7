//! Embedded index coding instances.
//!
//! An [`EicpInstance`] holds N users and M messages: user `i` knows the
//! messages in `side_info(i)` and demands message `demand(i)`. Indices are
//! 0-based in memory and 1-based in files and human-readable output.
//!
//! Construction only checks structure (lengths, index ranges, duplicates).
//! The semantic constraints of the problem (every message held somewhere, no
//! omniscient user, and so on) are reported by [`validate`], so that invalid
//! instances can still be loaded and diagnosed.

mod generate;
mod io;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{FieldOrder, GfError};

pub use generate::{enumerate_demands, gen_random, gen_vanet, DemandIter, DEFAULT_DEMAND_GUARD};
pub use io::{parse_instance, serialize_instance, InstanceFile};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("user {user} lists message {message} more than once")]
    DuplicateIndex { user: usize, message: usize },
    #[error("instance needs exactly one of \"demands\" or \"wants\"")]
    DemandForm,
    #[error("user {user} demands nothing")]
    EmptyWantSet { user: usize },
    #[error("user {user} both wants and knows message {message}")]
    WantKnowOverlap { user: usize, message: usize },
    #[error("instance has no users")]
    NoUsers,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could not generate a valid instance after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("demand enumeration has {product} vectors, above the guard of {guard}")]
    EnumerationTooLarge { product: u128, guard: u128 },
}

/// A single-demand embedded index coding instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EicpInstance {
    q: FieldOrder,
    num_messages: usize,
    side_info: Vec<Vec<usize>>,
    demands: Vec<usize>,
}

impl EicpInstance {
    /// Builds an instance from 0-based indices. Side-information lists are
    /// sorted; duplicates and out-of-range indices are rejected.
    pub fn new(
        q: FieldOrder,
        num_messages: usize,
        side_info: Vec<Vec<usize>>,
        demands: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if side_info.is_empty() {
            return Err(ModelError::NoUsers);
        }
        if demands.len() != side_info.len() {
            return Err(ModelError::LengthMismatch {
                what: "demands",
                expected: side_info.len(),
                found: demands.len(),
            });
        }
        let mut sorted = Vec::with_capacity(side_info.len());
        for (user, mut known) in side_info.into_iter().enumerate() {
            known.sort_unstable();
            for w in known.windows(2) {
                if w[0] == w[1] {
                    return Err(ModelError::DuplicateIndex {
                        user: user + 1,
                        message: w[0] + 1,
                    });
                }
            }
            if let Some(&m) = known.last() {
                if m >= num_messages {
                    return Err(ModelError::IndexOutOfRange {
                        what: "side-information message",
                        index: m + 1,
                        max: num_messages,
                    });
                }
            }
            sorted.push(known);
        }
        if let Some(&d) = demands.iter().find(|&&d| d >= num_messages) {
            return Err(ModelError::IndexOutOfRange {
                what: "demanded message",
                index: d + 1,
                max: num_messages,
            });
        }
        Ok(EicpInstance {
            q,
            num_messages,
            side_info: sorted,
            demands,
        })
    }

    /// Convenience constructor from 1-based indices, as written in the
    /// literature and in instance files.
    pub fn from_one_based(
        q: u32,
        num_messages: usize,
        side_info: &[&[usize]],
        demands: &[usize],
    ) -> Result<Self, ModelError> {
        let q = FieldOrder::new(q)?;
        let to_zero = |what, i: usize| {
            i.checked_sub(1).ok_or(ModelError::IndexOutOfRange {
                what,
                index: i,
                max: num_messages,
            })
        };
        let k = side_info
            .iter()
            .map(|ks| {
                ks.iter()
                    .map(|&m| to_zero("side-information message", m))
                    .collect()
            })
            .collect::<Result<Vec<Vec<usize>>, _>>()?;
        let d = demands
            .iter()
            .map(|&m| to_zero("demanded message", m))
            .collect::<Result<Vec<usize>, _>>()?;
        Self::new(q, num_messages, k, d)
    }

    pub fn q(&self) -> FieldOrder {
        self.q
    }

    pub fn num_users(&self) -> usize {
        self.side_info.len()
    }

    pub fn num_messages(&self) -> usize {
        self.num_messages
    }

    pub fn side_info(&self, user: usize) -> &[usize] {
        &self.side_info[user]
    }

    pub fn all_side_info(&self) -> &[Vec<usize>] {
        &self.side_info
    }

    pub fn demand(&self, user: usize) -> usize {
        self.demands[user]
    }

    pub fn demands(&self) -> &[usize] {
        &self.demands
    }

    pub fn knows(&self, user: usize, message: usize) -> bool {
        self.side_info[user].binary_search(&message).is_ok()
    }

    /// Users other than `except` whose side information contains all of
    /// `support` (sorted), ascending.
    pub fn holders_of<'a>(
        &'a self,
        support: &'a [usize],
        except: Option<usize>,
    ) -> impl Iterator<Item = usize> + 'a {
        (0..self.num_users())
            .filter(move |&j| Some(j) != except && support.iter().all(|&m| self.knows(j, m)))
    }

    /// Number of distinct demanded messages.
    pub fn uniq_demands(&self) -> usize {
        self.demands.iter().collect::<BTreeSet<_>>().len()
    }

    /// Same side information with a different field.
    pub fn with_field(&self, q: FieldOrder) -> Self {
        EicpInstance { q, ..self.clone() }
    }

    /// Same side information with a different demand vector.
    pub fn with_demands(&self, demands: Vec<usize>) -> Result<Self, ModelError> {
        Self::new(self.q, self.num_messages, self.side_info.clone(), demands)
    }

    /// Same demands with different side information.
    pub fn with_side_info(&self, side_info: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        Self::new(self.q, self.num_messages, side_info, self.demands.clone())
    }
}

impl fmt::Display for EicpInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E(N={}, M={}, q={})",
            self.num_users(),
            self.num_messages,
            self.q.get()
        )?;
        for (i, k) in self.side_info.iter().enumerate() {
            let k: Vec<String> = k.iter().map(|m| (m + 1).to_string()).collect();
            write!(
                f,
                " u{}:{{{}}}->{}",
                i + 1,
                k.join(","),
                self.demands[i] + 1
            )?;
        }
        Ok(())
    }
}

/// A broken semantic constraint. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The user already holds what it demands.
    DemandInSideInfo { user: usize, message: usize },
    /// No user holds the message.
    MessageNotPresent { message: usize },
    /// The user holds every message.
    UserPossessesAllMessages { user: usize },
    /// Every user holds the message.
    MessageAtAllUsers { message: usize },
    /// Nobody else holds the user's demand.
    DemandUnavailable { user: usize, message: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DemandInSideInfo { user, message } => {
                write!(
                    f,
                    "user {user} already possesses its demanded message {message}"
                )
            }
            Violation::MessageNotPresent { message } => {
                write!(f, "message {message} is not present with any user")
            }
            Violation::UserPossessesAllMessages { user } => {
                write!(f, "user {user} possesses all messages")
            }
            Violation::MessageAtAllUsers { message } => {
                write!(f, "message {message} is at all users")
            }
            Violation::DemandUnavailable { user, message } => {
                write!(
                    f,
                    "message {message} demanded by user {user} is held by no other user"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// More messages than users.
    MoreMessagesThanUsers { messages: usize, users: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::MoreMessagesThanUsers { messages, users } => {
                write!(f, "M = {messages} exceeds N = {users}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every semantic constraint of a well-posed instance.
pub fn validate(inst: &EicpInstance) -> ValidationReport {
    let n = inst.num_users();
    let m = inst.num_messages();
    let mut holders = vec![0usize; m];
    for k in inst.all_side_info() {
        for &x in k {
            holders[x] += 1;
        }
    }
    let mut report = ValidationReport::default();
    for i in 0..n {
        let d = inst.demand(i);
        if inst.knows(i, d) {
            report.violations.push(Violation::DemandInSideInfo {
                user: i + 1,
                message: d + 1,
            });
        }
    }
    for (x, &h) in holders.iter().enumerate() {
        if h == 0 {
            report
                .violations
                .push(Violation::MessageNotPresent { message: x + 1 });
        }
    }
    for i in 0..n {
        if inst.side_info(i).len() == m {
            report
                .violations
                .push(Violation::UserPossessesAllMessages { user: i + 1 });
        }
    }
    for (x, &h) in holders.iter().enumerate() {
        if h == n {
            report
                .violations
                .push(Violation::MessageAtAllUsers { message: x + 1 });
        }
    }
    for i in 0..n {
        let d = inst.demand(i);
        if inst.holders_of(&[d], Some(i)).next().is_none() {
            report.violations.push(Violation::DemandUnavailable {
                user: i + 1,
                message: d + 1,
            });
        }
    }
    if m > n {
        report.warnings.push(Warning::MoreMessagesThanUsers {
            messages: m,
            users: n,
        });
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceClass {
    pub single_unicast: bool,
    pub single_uniprior: bool,
}

pub fn classify(inst: &EicpInstance) -> InstanceClass {
    let n = inst.num_users();
    let distinct_demands = inst.uniq_demands() == n;
    let distinct_singletons = inst.all_side_info().iter().all(|k| k.len() == 1)
        && inst.all_side_info().iter().collect::<BTreeSet<_>>().len() == n;
    InstanceClass {
        single_unicast: inst.num_messages() == n && distinct_demands,
        single_uniprior: distinct_singletons,
    }
}

/// A user that may demand several messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawUser {
    pub wants: Vec<usize>,
    pub knows: Vec<usize>,
}

/// An instance before multi-demand users are split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEicp {
    pub q: FieldOrder,
    pub num_messages: usize,
    pub users: Vec<RawUser>,
}

/// Replaces each user demanding k messages by k users with the same side
/// information, one demand each, in ascending message order.
pub fn split_multi_demand(raw: &RawEicp) -> Result<EicpInstance, ModelError> {
    let mut side_info = Vec::new();
    let mut demands = Vec::new();
    for (u, user) in raw.users.iter().enumerate() {
        let wants: BTreeSet<usize> = user.wants.iter().copied().collect();
        if wants.is_empty() {
            return Err(ModelError::EmptyWantSet { user: u + 1 });
        }
        if let Some(&m) = wants.iter().find(|m| user.knows.contains(m)) {
            return Err(ModelError::WantKnowOverlap {
                user: u + 1,
                message: m + 1,
            });
        }
        for w in wants {
            side_info.push(user.knows.clone());
            demands.push(w);
        }
    }
    EicpInstance::new(raw.q, raw.num_messages, side_info, demands)
}
