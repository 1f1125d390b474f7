//! Stopping sets: user/slot configurations on which peeling makes no progress.
//!
//! A structure is stored as an incidence list (one sorted slot list per user,
//! 0-based, slots numbered `0..slots`). The catalog used by the loss
//! approximation contains only *minimal* stopping sets, i.e. ones where no
//! proper subset of the users is itself stuck. The multiplicity `c` counts the
//! labeled realizations of a structure on `slots` labeled slots with labeled
//! users of fixed degrees.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_CANONICAL_SLOTS: usize = 8;

/// Largest bounds accepted by [`enumerate`].
pub const MAX_ENUM_USERS: usize = 6;
pub const MAX_ENUM_SLOTS: usize = 5;

/// Isomorphism-invariant key of a structure: user rows as slot bitmasks, sorted
/// by (degree, mask), minimized over slot relabelings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<(u32, u32)>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingSet {
    label: Option<u32>,
    /// `profile[y]` = number of users with `y` replicas; no trailing zeros.
    profile: Vec<u32>,
    slots: usize,
    users: usize,
    multiplicity: u64,
    incidence: Vec<Vec<u32>>,
}

impl StoppingSet {
    /// Builds a stopping set from its incidence, deriving profile, slot count
    /// and user count. Every slot `0..slots` must be used and the structure
    /// must be stuck.
    pub fn new(label: Option<u32>, incidence: Vec<Vec<u32>>, multiplicity: u64) -> Result<Self> {
        let incidence = normalize(incidence)?;
        if !is_stopping(&incidence)? {
            return Err(Error::MalformedStructure(
                "structure has a singleton slot".into(),
            ));
        }
        let slots = incidence.iter().flatten().max().map_or(0, |&s| s as usize + 1);
        let mut used = vec![false; slots];
        for &s in incidence.iter().flatten() {
            used[s as usize] = true;
        }
        if used.iter().any(|&u| !u) {
            return Err(Error::MalformedStructure(format!(
                "slots must be numbered contiguously from 1 to {slots}"
            )));
        }
        let max_degree = incidence.iter().map(Vec::len).max().unwrap_or(0);
        let mut profile = vec![0u32; max_degree + 1];
        for row in &incidence {
            profile[row.len()] += 1;
        }
        Ok(StoppingSet {
            label,
            profile,
            slots,
            users: incidence.len(),
            multiplicity,
            incidence,
        })
    }

    /// Builds a stopping set and checks it against declared parameters.
    pub fn from_parts(
        label: Option<u32>,
        profile: &[u32],
        slots: usize,
        users: usize,
        multiplicity: u64,
        incidence: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let set = Self::new(label, incidence, multiplicity)?;
        if trim(profile) != set.profile.as_slice() || slots != set.slots || users != set.users {
            return Err(Error::MalformedStructure(format!(
                "declared profile {profile:?}, {slots} slots, {users} users; incidence gives {:?}, {}, {}",
                set.profile, set.slots, set.users
            )));
        }
        Ok(set)
    }

    pub fn label(&self) -> Option<u32> {
        self.label
    }

    pub fn with_label(mut self, label: Option<u32>) -> Self {
        self.label = label;
        self
    }

    pub fn profile(&self) -> &[u32] {
        &self.profile
    }

    /// Profile zero-padded to at least `len` entries.
    pub fn profile_padded(&self, len: usize) -> Vec<u32> {
        let mut p = self.profile.clone();
        if p.len() < len {
            p.resize(len, 0);
        }
        p
    }

    /// `ν_y`, zero past the maximum degree.
    pub fn nu(&self, degree: usize) -> u32 {
        self.profile.get(degree).copied().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.profile.len() - 1
    }

    /// `μ(s)`.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// `ω(s)`.
    pub fn users(&self) -> usize {
        self.users
    }

    /// `c(s)`.
    pub fn multiplicity(&self) -> u64 {
        self.multiplicity
    }

    pub fn incidence(&self) -> &[Vec<u32>] {
        &self.incidence
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        canonical_form(&self.incidence).expect("validated structure")
    }
}

fn trim(profile: &[u32]) -> &[u32] {
    let end = profile.iter().rposition(|&v| v != 0).map_or(0, |i| i + 1);
    &profile[..end]
}

fn normalize(mut incidence: Vec<Vec<u32>>) -> Result<Vec<Vec<u32>>> {
    if incidence.is_empty() {
        return Err(Error::MalformedStructure("no users".into()));
    }
    for (u, row) in incidence.iter_mut().enumerate() {
        row.sort_unstable();
        if row.is_empty() {
            return Err(Error::MalformedStructure(format!("user {u} has no replicas")));
        }
        if row.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedStructure(format!(
                "user {u} uses a slot twice"
            )));
        }
    }
    Ok(incidence)
}

/// True iff every occupied slot holds at least two replicas, i.e. peeling
/// decodes nobody.
pub fn is_stopping(incidence: &[Vec<u32>]) -> Result<bool> {
    let incidence = normalize(incidence.to_vec())?;
    let mut load: BTreeMap<u32, usize> = BTreeMap::new();
    for &s in incidence.iter().flatten() {
        *load.entry(s).or_default() += 1;
    }
    Ok(load.values().all(|&l| l >= 2))
}

fn masks_stopping(rows: &[u32]) -> bool {
    let mut once = 0u32;
    let mut twice = 0u32;
    for &r in rows {
        twice |= once & r;
        once |= r;
    }
    once == twice
}

/// True iff the structure is stuck and no proper nonempty subset of its users
/// is stuck on its own.
pub fn is_minimal(incidence: &[Vec<u32>]) -> Result<bool> {
    let incidence = normalize(incidence.to_vec())?;
    let rows = to_masks(&incidence)?;
    Ok(masks_minimal(&rows))
}

fn masks_minimal(rows: &[u32]) -> bool {
    if !masks_stopping(rows) {
        return false;
    }
    let w = rows.len();
    let full = (1u64 << w) - 1;
    (1..full).all(|subset| {
        let sub: Vec<u32> = (0..w).filter(|&i| subset >> i & 1 == 1).map(|i| rows[i]).collect();
        !masks_stopping(&sub)
    })
}

fn to_masks(incidence: &[Vec<u32>]) -> Result<Vec<u32>> {
    incidence
        .iter()
        .map(|row| {
            row.iter().try_fold(0u32, |m, &s| {
                if (s as usize) < MAX_CANONICAL_SLOTS {
                    Ok(m | 1 << s)
                } else {
                    Err(Error::MalformedStructure(format!(
                        "slot index {s} beyond {MAX_CANONICAL_SLOTS}"
                    )))
                }
            })
        })
        .collect()
}

fn key_of_masks(rows: &[u32], slots: usize) -> CanonicalKey {
    let mut best: Option<Vec<(u32, u32)>> = None;
    for perm in (0..slots).permutations(slots) {
        let mut mapped: Vec<(u32, u32)> = rows
            .iter()
            .map(|&r| {
                let m = (0..slots)
                    .filter(|&s| r >> s & 1 == 1)
                    .fold(0u32, |acc, s| acc | 1 << perm[s]);
                (r.count_ones(), m)
            })
            .collect();
        mapped.sort_unstable();
        if best.as_ref().is_none_or(|b| mapped < *b) {
            best = Some(mapped);
        }
    }
    CanonicalKey(best.unwrap_or_default())
}

/// Canonical key under independent user and slot relabelings, found by
/// minimizing over all slot permutations.
pub fn canonical_form(incidence: &[Vec<u32>]) -> Result<CanonicalKey> {
    let incidence = normalize(incidence.to_vec())?;
    let rows = to_masks(&incidence)?;
    let slots = incidence.iter().flatten().max().map_or(0, |&s| s as usize + 1);
    Ok(key_of_masks(&rows, slots))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBounds {
    pub max_users: usize,
    pub max_slots: usize,
    pub max_degree: usize,
}

impl EnumerationBounds {
    /// Envelope of the reference table: five users, four slots, three replicas.
    pub const TABLE: EnumerationBounds = EnumerationBounds {
        max_users: 5,
        max_slots: 4,
        max_degree: 3,
    };

    pub fn validate(&self) -> Result<()> {
        if self.max_users < 2 || self.max_users > MAX_ENUM_USERS {
            return Err(Error::BoundsOverflow(format!(
                "max users {} not in 2..={MAX_ENUM_USERS}",
                self.max_users
            )));
        }
        if self.max_slots < 1 || self.max_slots > MAX_ENUM_SLOTS {
            return Err(Error::BoundsOverflow(format!(
                "max slots {} not in 1..={MAX_ENUM_SLOTS}",
                self.max_slots
            )));
        }
        if self.max_degree < 1 {
            return Err(Error::BoundsOverflow("max degree must be at least 1".into()));
        }
        Ok(())
    }
}

fn rows_to_incidence(rows: &[u32]) -> Vec<Vec<u32>> {
    rows.iter()
        .map(|&r| (0..32).filter(|&s| r >> s & 1 == 1).collect())
        .collect()
}

/// Exhaustively lists the non-isomorphic minimal stopping sets within bounds,
/// with multiplicities counted over labeled users (of fixed degrees) and
/// labeled slots.
pub fn enumerate(bounds: EnumerationBounds) -> Result<Vec<StoppingSet>> {
    bounds.validate()?;
    let max_degree = bounds.max_degree.min(bounds.max_slots);
    let mut jobs = Vec::new();
    for users in 2..=bounds.max_users {
        for degrees in (1..=max_degree).combinations_with_replacement(users) {
            for slots in 1..=bounds.max_slots {
                let replicas: usize = degrees.iter().sum();
                if degrees.iter().all(|&d| d <= slots) && replicas >= 2 * slots {
                    jobs.push((degrees.clone(), slots));
                }
            }
        }
    }

    let found: Vec<(CanonicalKey, Vec<u32>, u64)> = jobs
        .par_iter()
        .flat_map_iter(|(degrees, slots)| {
            let full = (1u32 << slots) - 1;
            let mut classes: BTreeMap<CanonicalKey, (Vec<u32>, u64)> = BTreeMap::new();
            let choices = degrees.iter().map(|&d| {
                (0..*slots as u32)
                    .combinations(d)
                    .map(|c| c.iter().fold(0u32, |m, &s| m | 1 << s))
                    .collect::<Vec<u32>>()
            });
            for rows in choices.multi_cartesian_product() {
                if rows.iter().fold(0, |m, &r| m | r) != full || !masks_minimal(&rows) {
                    continue;
                }
                let key = key_of_masks(&rows, *slots);
                classes.entry(key).or_insert_with(|| (rows.clone(), 0)).1 += 1;
            }
            classes.into_iter().map(|(k, (rows, c))| (k, rows, c))
        })
        .collect();

    let mut sets: Vec<StoppingSet> = found
        .into_iter()
        .map(|(_, rows, c)| StoppingSet::new(None, rows_to_incidence(&rows), c))
        .collect::<Result<_>>()?;
    sets.sort_by_key(|s| (s.slots, s.users, s.profile.clone(), s.canonical_key()));
    Ok(sets)
}

/// (label, ν, μ, c, ω, 1-based slot list per user)
type TableRow = (u32, [u32; 4], usize, u64, usize, &'static [&'static [u32]]);

/// Stopping sets of the reference table, with slot lists written 1-based.
const TABLE: [TableRow; 22] = [
    (1, [0, 2, 0, 0], 1, 1, 2, &[&[1], &[1]]),
    (2, [0, 0, 2, 0], 2, 1, 2, &[&[1, 2], &[1, 2]]),
    (3, [0, 2, 1, 0], 2, 2, 3, &[&[1], &[2], &[1, 2]]),
    (4, [0, 0, 0, 2], 3, 1, 2, &[&[1, 2, 3], &[1, 2, 3]]),
    (5, [0, 1, 1, 1], 3, 3, 3, &[&[1], &[2, 3], &[1, 2, 3]]),
    (6, [0, 0, 3, 0], 3, 6, 3, &[&[1, 2], &[1, 3], &[2, 3]]),
    (7, [0, 0, 2, 1], 3, 6, 3, &[&[1, 2], &[1, 3], &[1, 2, 3]]),
    (8, [0, 3, 0, 1], 3, 6, 4, &[&[1], &[2], &[3], &[1, 2, 3]]),
    (9, [0, 2, 2, 0], 3, 12, 4, &[&[1], &[2], &[1, 3], &[2, 3]]),
    (10, [0, 0, 1, 2], 4, 12, 3, &[&[1, 2], &[1, 3, 4], &[2, 3, 4]]),
    (11, [0, 0, 0, 3], 4, 24, 3, &[&[1, 2, 3], &[1, 2, 4], &[1, 3, 4]]),
    (12, [0, 2, 0, 2], 4, 24, 4, &[&[1], &[2], &[1, 3, 4], &[2, 3, 4]]),
    (13, [0, 1, 2, 1], 4, 24, 4, &[&[1], &[1, 2], &[3, 4], &[2, 3, 4]]),
    (14, [0, 1, 2, 1], 4, 24, 4, &[&[1], &[2, 3], &[2, 4], &[1, 3, 4]]),
    (15, [0, 1, 1, 2], 4, 48, 4, &[&[1], &[2, 3], &[1, 2, 4], &[2, 3, 4]]),
    (16, [0, 0, 3, 1], 4, 24, 4, &[&[1, 2], &[1, 3], &[1, 4], &[2, 3, 4]]),
    (17, [0, 0, 4, 0], 4, 72, 4, &[&[1, 2], &[1, 3], &[2, 4], &[3, 4]]),
    (18, [0, 0, 3, 1], 4, 144, 4, &[&[1, 2], &[1, 3], &[2, 4], &[1, 3, 4]]),
    (19, [0, 0, 2, 2], 4, 48, 4, &[&[1, 2], &[1, 3], &[1, 2, 4], &[1, 3, 4]]),
    (20, [0, 0, 2, 2], 4, 48, 4, &[&[1, 2], &[3, 4], &[1, 2, 3], &[1, 3, 4]]),
    (21, [0, 3, 1, 1], 4, 72, 5, &[&[1], &[2], &[3], &[1, 4], &[2, 3, 4]]),
    (22, [0, 2, 3, 0], 4, 144, 5, &[&[1], &[2], &[1, 3], &[2, 4], &[3, 4]]),
];

/// The 22-row reference catalog (labels 1 to 22).
pub fn builtin_table() -> Vec<StoppingSet> {
    TABLE
        .iter()
        .map(|(label, profile, slots, c, users, rows)| {
            let incidence = rows
                .iter()
                .map(|r| r.iter().map(|&s| s - 1).collect())
                .collect();
            StoppingSet::from_parts(Some(*label), profile, *slots, *users, *c, incidence)
                .expect("reference table is consistent")
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffStatus {
    Matched,
    /// In the reference, absent from the enumeration.
    Missing,
    /// Enumerated, absent from the reference.
    Extra,
    MultiplicityMismatch { reference: u64, enumerated: u64 },
}

#[derive(Clone, Debug)]
pub struct DiffRow {
    pub label: Option<u32>,
    pub set: StoppingSet,
    pub status: DiffStatus,
}

#[derive(Clone, Debug, Default)]
pub struct CatalogDiff {
    pub rows: Vec<DiffRow>,
}

impl CatalogDiff {
    pub fn count(&self, pred: impl Fn(&DiffStatus) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(&r.status)).count()
    }

    pub fn matched(&self) -> usize {
        self.count(|s| *s == DiffStatus::Matched)
    }

    pub fn is_exact(&self) -> bool {
        self.rows.iter().all(|r| r.status == DiffStatus::Matched)
    }
}

/// Row-by-row comparison keyed on structure isomorphism. Reference rows come
/// first in their own order, followed by extras.
pub fn compare(enumerated: &[StoppingSet], reference: &[StoppingSet]) -> CatalogDiff {
    let mut by_key: BTreeMap<CanonicalKey, &StoppingSet> =
        enumerated.iter().map(|s| (s.canonical_key(), s)).collect();
    let mut rows = Vec::new();
    for r in reference {
        let status = match by_key.remove(&r.canonical_key()) {
            None => DiffStatus::Missing,
            Some(e) if e.multiplicity == r.multiplicity => DiffStatus::Matched,
            Some(e) => DiffStatus::MultiplicityMismatch {
                reference: r.multiplicity,
                enumerated: e.multiplicity,
            },
        };
        rows.push(DiffRow {
            label: r.label,
            set: r.clone(),
            status,
        });
    }
    for e in enumerated {
        if by_key.contains_key(&e.canonical_key()) {
            rows.push(DiffRow {
                label: None,
                set: e.clone(),
                status: DiffStatus::Extra,
            });
        }
    }
    CatalogDiff { rows }
}

/// Copies reference labels onto enumerated sets with the same structure.
pub fn label_like(enumerated: Vec<StoppingSet>, reference: &[StoppingSet]) -> Vec<StoppingSet> {
    let labels: BTreeMap<CanonicalKey, Option<u32>> =
        reference.iter().map(|s| (s.canonical_key(), s.label)).collect();
    enumerated
        .into_iter()
        .map(|s| {
            let label = labels.get(&s.canonical_key()).copied().flatten();
            s.with_label(label)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    stopset: Vec<Record>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<u32>,
    profile: Vec<u32>,
    slots: usize,
    users: usize,
    multiplicity: u64,
    /// 1-based slot numbers, one list per user.
    incidence: Vec<Vec<u32>>,
}

/// Serializes a catalog as TOML, one `[[stopset]]` table per set.
pub fn to_text(catalog: &[StoppingSet]) -> String {
    let width = catalog.iter().map(|s| s.profile.len()).max().unwrap_or(0);
    let file = CatalogFile {
        stopset: catalog
            .iter()
            .map(|s| Record {
                label: s.label,
                profile: s.profile_padded(width),
                slots: s.slots,
                users: s.users,
                multiplicity: s.multiplicity,
                incidence: s
                    .incidence
                    .iter()
                    .map(|r| r.iter().map(|&x| x + 1).collect())
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("catalog serializes")
}

/// Parses [`to_text`] output, re-validating every record.
pub fn from_text(text: &str) -> Result<Vec<StoppingSet>> {
    let file: CatalogFile = toml::from_str(text).map_err(|e| Error::CatalogFormat(e.to_string()))?;
    file.stopset
        .into_iter()
        .map(|r| {
            let incidence = r
                .incidence
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&x| {
                            x.checked_sub(1).ok_or_else(|| {
                                Error::CatalogFormat("slot numbers start at 1".into())
                            })
                        })
                        .collect::<Result<Vec<u32>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            StoppingSet::from_parts(r.label, &r.profile, r.slots, r.users, r.multiplicity, incidence)
        })
        .collect()
}
