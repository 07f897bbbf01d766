//! Seeded synthetic database pairs with households, ground truth, MCAR
//! missingness and typographical corruption.
//!
//! Names come from bundled frequency tables (see `data/NOTICE`). Entities
//! are drawn household by household; shared entities fill whole households
//! first, so a household present in one database is usually present in the
//! other as well.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::GroundTruth;
use crate::model::{Database, Record};

pub const ATTRIBUTES: [&str; 8] = [
    "first_name",
    "middle_name",
    "last_name",
    "birth_date",
    "street_address",
    "city",
    "zip_code",
    "household_id",
];

/// Attributes that perturbations touch; `household_id` is structure, not a
/// quasi-identifier.
pub const QID_ATTRIBUTES: [&str; 7] = [
    "first_name",
    "middle_name",
    "last_name",
    "birth_date",
    "street_address",
    "city",
    "zip_code",
];

const SURNAME_KEPT: f64 = 0.85;

struct Weighted<T> {
    items: Vec<T>,
    dist: WeightedIndex<f64>,
}

impl<T> Weighted<T> {
    fn new(rows: Vec<(T, f64)>) -> Self {
        let (items, weights): (Vec<T>, Vec<f64>) = rows.into_iter().unzip();
        let dist = WeightedIndex::new(weights).expect("bundled weights are positive");
        Weighted { items, dist }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> &T {
        &self.items[self.dist.sample(rng)]
    }
}

struct City {
    name: String,
    zip_base: u32,
    zip_count: u32,
}

struct Tables {
    female: Weighted<String>,
    male: Weighted<String>,
    surnames: Weighted<String>,
    street_names: Vec<String>,
    suffixes: Vec<String>,
    cities: Weighted<City>,
}

fn parse_rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let first = include_str!("../data/first_names.csv");
        let last = include_str!("../data/last_names.csv");
        let suffixes = include_str!("../data/street_suffixes.txt");
        let cities = include_str!("../data/cities.csv");
        let weight = |s: &str| s.parse::<f64>().expect("bundled weight");
        let by_sex = |sex: &str| {
            Weighted::new(
                parse_rows(first)
                    .filter(|r| r[2] == sex)
                    .map(|r| (r[0].to_string(), weight(r[1])))
                    .collect(),
            )
        };
        let surname_rows: Vec<(String, f64)> = parse_rows(last)
            .map(|r| (r[0].to_string(), weight(r[1])))
            .collect();
        Tables {
            female: by_sex("f"),
            male: by_sex("m"),
            street_names: surname_rows.iter().map(|(n, _)| n.clone()).collect(),
            surnames: Weighted::new(surname_rows),
            suffixes: suffixes
                .lines()
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
            cities: Weighted::new(
                parse_rows(cities)
                    .map(|r| {
                        (
                            City {
                                name: r[0].to_string(),
                                zip_base: r[2].parse().expect("bundled zip"),
                                zip_count: r[3].parse().expect("bundled zip count"),
                            },
                            weight(r[1]),
                        )
                    })
                    .collect(),
            ),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub records_a: usize,
    pub records_b: usize,
    /// Fraction of `min(records_a, records_b)` entities present in both.
    pub overlap: f64,
    pub household_size: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub a: Database,
    pub b: Database,
    pub truth: GroundTruth,
}

struct Person {
    entity: usize,
    household: usize,
    values: [String; 7],
}

/// `yyyy-mm-dd` for a count of days since 1970-01-01.
fn civil_date(days: i64) -> String {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}")
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must lie in [0, 1]"
        )))
    }
}

fn household_size<R: Rng>(rng: &mut R, mean: f64) -> usize {
    // uniform on 1..=2·mean−1, whose mean is `mean`
    let hi = ((2.0 * mean - 1.0).round() as usize).max(1);
    rng.gen_range(1..=hi)
}

fn generate_people<R: Rng>(rng: &mut R, total: usize, mean_household: f64) -> Vec<Vec<Person>> {
    let t = tables();
    let mut households = Vec::new();
    let mut people = 0;
    while people < total {
        let id = households.len();
        let size = household_size(rng, mean_household).min(total - people);
        let surname = t.surnames.draw(rng).clone();
        let street = format!(
            "{} {} {}",
            rng.gen_range(1..=9999),
            t.street_names.choose(rng).expect("street names"),
            t.suffixes.choose(rng).expect("suffixes")
        );
        let city = t.cities.draw(rng);
        let zip = format!(
            "{:05}",
            city.zip_base * 100 + rng.gen_range(0..city.zip_count)
        );
        let members = (0..size)
            .map(|k| {
                let names = if rng.gen_bool(0.5) {
                    &t.female
                } else {
                    &t.male
                };
                let last = if k == 0 || rng.gen_bool(SURNAME_KEPT) {
                    surname.clone()
                } else {
                    t.surnames.draw(rng).clone()
                };
                // 1930-01-01 .. 2005-12-31
                let birth = civil_date(rng.gen_range(-14_610..13_149));
                Person {
                    entity: people + k,
                    household: id,
                    values: [
                        names.draw(rng).clone(),
                        names.draw(rng).clone(),
                        last,
                        birth,
                        street.clone(),
                        city.name.clone(),
                        zip.clone(),
                    ],
                }
            })
            .collect::<Vec<_>>();
        people += members.len();
        households.push(members);
    }
    households
}

fn to_record(id: String, p: &Person) -> Record {
    let household = format!("h{}", p.household);
    let values = p
        .values
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(household.as_str()))
        .map(Some);
    Record::new(id, values).with_entity(format!("e{}", p.entity))
}

/// Two databases with `round(overlap · min(records_a, records_b))` shared
/// entities and the matching ground truth.
pub fn generate_pair(params: &SynthParams) -> Result<SyntheticPair> {
    check_fraction("overlap", params.overlap)?;
    if !(params.household_size >= 1.0 && params.household_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "household size {} must be at least 1",
            params.household_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let shared = (params.overlap * params.records_a.min(params.records_b) as f64).round() as usize;
    let total = params.records_a + params.records_b - shared;
    let mut households = generate_people(&mut rng, total, params.household_size);
    households.shuffle(&mut rng);
    let people: Vec<&Person> = households.iter().flatten().collect();

    let only_a = params.records_a - shared;
    let mut in_a: Vec<&Person> = people[..shared + only_a].to_vec();
    let mut in_b: Vec<&Person> = people[..shared]
        .iter()
        .chain(&people[shared + only_a..])
        .copied()
        .collect();
    in_a.shuffle(&mut rng);
    in_b.shuffle(&mut rng);

    let schema: Vec<String> = ATTRIBUTES.iter().map(|s| s.to_string()).collect();
    let build = |prefix: &str, members: &[&Person]| -> Result<(Database, Vec<(usize, String)>)> {
        let width = members.len().max(1).to_string().len();
        let mut ids = Vec::with_capacity(members.len());
        let records = members
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let id = format!("{prefix}{i:0width$}");
                ids.push((p.entity, id.clone()));
                to_record(id, p)
            })
            .collect();
        Ok((
            Database::new(prefix.to_uppercase(), schema.clone(), records)?,
            ids,
        ))
    };
    let (a, ids_a) = build("a", &in_a)?;
    let (b, ids_b) = build("b", &in_b)?;
    let by_entity: std::collections::HashMap<usize, &String> =
        ids_b.iter().map(|(e, id)| (*e, id)).collect();
    let links: BTreeSet<(String, String)> = ids_a
        .iter()
        .filter_map(|(e, id)| by_entity.get(e).map(|b| (id.clone(), (*b).clone())))
        .collect();
    Ok(SyntheticPair {
        a,
        b,
        truth: GroundTruth { links },
    })
}

fn resolve(db: &Database, attrs: &[String]) -> Result<Vec<usize>> {
    attrs.iter().map(|a| db.attribute_index(a)).collect()
}

/// Blanks 1..=`max_per_record` present values among `attrs` in exactly
/// `round(record_rate · |D|)` uniformly chosen records.
pub fn inject_mcar(
    db: &Database,
    record_rate: f64,
    max_per_record: usize,
    attrs: &[String],
    seed: u64,
) -> Result<Database> {
    check_fraction("record rate", record_rate)?;
    if max_per_record == 0 {
        return Err(Error::InvalidParameter(
            "max_per_record must be positive".to_string(),
        ));
    }
    let columns = resolve(db, attrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = db.clone().into_records();
    let chosen = (record_rate * records.len() as f64).round() as usize;
    let mut selected = index::sample(&mut rng, records.len(), chosen).into_vec();
    selected.sort_unstable();
    for i in selected {
        let r = &mut records[i];
        let present: Vec<usize> = columns
            .iter()
            .copied()
            .filter(|&c| r.value(c).is_some())
            .collect();
        if present.is_empty() {
            continue;
        }
        let m = rng.gen_range(1..=max_per_record.min(present.len()));
        for k in index::sample(&mut rng, present.len(), m) {
            r.set_value(present[k], None);
        }
    }
    db.with_records(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    Substitution,
    Transposition,
    Deletion,
    Insertion,
    TokenSwap,
}

pub const EDITS: [Edit; 5] = [
    Edit::Substitution,
    Edit::Transposition,
    Edit::Deletion,
    Edit::Insertion,
    Edit::TokenSwap,
];

fn random_like<R: Rng>(rng: &mut R, like: char) -> char {
    if like.is_ascii_digit() {
        char::from(b'0' + rng.gen_range(0..10))
    } else {
        char::from(b'a' + rng.gen_range(0..26))
    }
}

fn substitute<R: Rng>(rng: &mut R, chars: &mut [char]) {
    let positions: Vec<usize> = (0..chars.len())
        .filter(|&i| !chars[i].is_whitespace())
        .collect();
    let Some(&i) = positions.choose(rng) else {
        return;
    };
    let old = chars[i];
    let mut new = random_like(rng, old);
    while new == old {
        new = random_like(rng, old);
    }
    chars[i] = new;
}

/// Applies one edit to a normalized value. The result is normalized, non-empty
/// and differs from the input; edits that cannot apply fall back to a
/// transposition, and that to a substitution.
pub fn apply_edit<R: Rng>(rng: &mut R, value: &str, edit: Edit) -> String {
    let mut chars: Vec<char> = value.chars().collect();
    match edit {
        Edit::Substitution => substitute(rng, &mut chars),
        Edit::Transposition => {
            let spots: Vec<usize> = (0..chars.len().saturating_sub(1))
                .filter(|&i| chars[i] != chars[i + 1])
                .collect();
            match spots.choose(rng) {
                Some(&i) => chars.swap(i, i + 1),
                None => substitute(rng, &mut chars),
            }
        }
        Edit::Deletion => {
            let letters = chars.iter().filter(|c| !c.is_whitespace()).count();
            if letters <= 1 {
                substitute(rng, &mut chars);
            } else {
                let i = rng.gen_range(0..chars.len());
                chars.remove(i);
            }
        }
        Edit::Insertion => {
            let i = rng.gen_range(0..=chars.len());
            let like = chars
                .get(i)
                .or_else(|| chars.last())
                .copied()
                .unwrap_or('a');
            chars.insert(i, random_like(rng, like));
        }
        Edit::TokenSwap => {
            let mut tokens: Vec<&str> = value.split_whitespace().collect();
            let spots: Vec<usize> = (0..tokens.len().saturating_sub(1))
                .filter(|&i| tokens[i] != tokens[i + 1])
                .collect();
            return match spots.choose(rng) {
                Some(&i) => {
                    tokens.swap(i, i + 1);
                    tokens.join(" ")
                }
                None => apply_edit(rng, value, Edit::Transposition),
            };
        }
    }
    let out: String = chars.into_iter().collect();
    match crate::model::normalize_value(&out) {
        Some(v) if v != value => v,
        _ => apply_edit(rng, value, Edit::Substitution),
    }
}

/// Applies 1..=`max_edits` edits, each to a different present value among
/// `attrs`, in exactly `round(record_rate · |D|)` uniformly chosen records.
/// Edit types are drawn uniformly.
pub fn corrupt(
    db: &Database,
    record_rate: f64,
    max_edits: usize,
    attrs: &[String],
    seed: u64,
) -> Result<Database> {
    check_fraction("record rate", record_rate)?;
    if !(1..=3).contains(&max_edits) {
        return Err(Error::InvalidParameter(format!(
            "edits per record must be between 1 and 3, got {max_edits}"
        )));
    }
    let columns = resolve(db, attrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = db.clone().into_records();
    let chosen = (record_rate * records.len() as f64).round() as usize;
    let mut selected = index::sample(&mut rng, records.len(), chosen).into_vec();
    selected.sort_unstable();
    for i in selected {
        let r = &mut records[i];
        let present: Vec<usize> = columns
            .iter()
            .copied()
            .filter(|&c| r.value(c).is_some())
            .collect();
        if present.is_empty() {
            continue;
        }
        let edits = rng.gen_range(1..=max_edits).min(present.len());
        for k in index::sample(&mut rng, present.len(), edits) {
            let column = present[k];
            let edit = *EDITS.choose(&mut rng).expect("edit kinds");
            let old = r.value(column).expect("present").to_string();
            let new = apply_edit(&mut rng, &old, edit);
            r.set_value(column, Some(new));
        }
    }
    db.with_records(records)
}
